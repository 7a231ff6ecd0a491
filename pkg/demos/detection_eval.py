"""
Evaluating detections
=====================

A few hand-made images show how the report reacts to duplicates, misses and
loose boxes. A random scene is then scored twice: once by the fast evaluator
and once by the slow enumeration it is tested against.
"""

from dualedge.metrics import DetectionRecord as R, iou, summarize
from dualedge.oracles import brute_force_summarize, random_scene
from dualedge.rng import SplitMix64

print("iou of (0,0,2,2) and (1,1,2,2):", iou((0, 0, 2, 2), (1, 1, 2, 2)))

gts = [R("img1", 1, (10, 10, 40, 40)), R("img1", 2, (100, 20, 120, 90)), R("img2", 1, (5, 5, 20, 20))]
perfect = [R(g.image_id, g.category_id, g.bbox, 0.9) for g in gts]
print("perfect:", summarize(perfect, gts).AP)

# a duplicate below the original only adds a false positive after full recall
dup = perfect + [R("img1", 1, (10, 10, 40, 40), 0.3)]
print("with duplicate:", summarize(dup, gts).AP)

# a box shifted by a quarter of its width drops out at strict thresholds
loose = [R("img1", 1, (20, 10, 40, 40), 0.9)] + perfect[1:]
rep = summarize(loose, gts)
print(f"loose box: AP50={rep.AP50:.3f} AP75={rep.AP75:.3f} AP={rep.AP:.3f}")

preds, truth = random_scene(SplitMix64(2), images=3)
fast = summarize(preds, truth).to_dict()
print("random scene matches enumeration:", fast == brute_force_summarize(preds, truth))
print(summarize(preds, truth).to_json())
