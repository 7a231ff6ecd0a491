"""Forward-pass toolkit: dual-domain edge enhancement, multi-scale and
wide-area context modules, deformable sampling, a feature-graph executor and
a COCO-style detection evaluator, all on numpy."""

from .deie import DeieParams, deie_forward
from .graph import GraphConfig, default_sffnet_neck, execute, validate
from .ldconv import LdconvConfig, ldconv_forward
from .mddc import MddcConfig, mddc_forward
from .metrics import DetectionRecord, MetricsReport, summarize
from .spectral import Spectrum, dft2_naive, fft2, idft2
from .wpm import WpmConfig, wpm_forward

__version__ = "0.1.0"

__all__ = [
    "DeieParams", "deie_forward", "GraphConfig", "default_sffnet_neck", "execute", "validate",
    "LdconvConfig", "ldconv_forward", "MddcConfig", "mddc_forward", "DetectionRecord",
    "MetricsReport", "summarize", "Spectrum", "dft2_naive", "fft2", "idft2", "WpmConfig",
    "wpm_forward",
]
