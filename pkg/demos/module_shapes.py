"""
Shape algebra of the multi-scale and wide-area modules
=======================================================

Both modules preserve (n, C, h, w). Inside the multi-scale module each pooled
branch yields 3C/4 channels; the wide-area module only touches a quarter of
the channels and its strip kernels grow linearly in K.
"""

import numpy as np

from dualedge.mddc import MddcConfig, init_mddc_weights, mddc_forward, mddc_weight_shapes
from dualedge.rng import SplitMix64
from dualedge.wpm import (WpmConfig, dense_param_count, depthwise_param_count, strip_dense_ratio,
                          wpm_forward)

gen = SplitMix64(11)
x = gen.uniform(-1, 1, (1, 16, 32, 32)).astype(np.float32)

cfg = MddcConfig()
print("fuse weight:", mddc_weight_shapes(16, cfg)["mddc.fuse.weight"])
y = mddc_forward(x, cfg, init_mddc_weights(16, cfg, seed=1))
print("mddc:", x.shape, "->", y.shape)

y = wpm_forward(x, WpmConfig(K=15))
print("wpm:", x.shape, "->", y.shape)

# strip paths versus four dense KxK depthwise kernels
print(" K   strip   dense  ratio")
for K in (3, 7, 15, 31, 63):
    print(f"{K:2d} {depthwise_param_count(64, K):7d} {dense_param_count(64, K):7d}  {strip_dense_ratio(K):.3f}")
