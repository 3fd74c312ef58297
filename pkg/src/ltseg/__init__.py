"""Long-tail instance segmentation toolkit.

Distribution balancing (repeat factor sampling, balanced copy-paste and
mosaic), the seesaw loss kernel, EMA weight averaging with early-stop epoch
selection, mask/boundary/fixed AP evaluation with detection caps and mask
rescoring, and multi-scale test-time-augmentation fusion.
"""

from .data import (
    AnnotationRecord,
    CategoryRecord,
    Dataset,
    ImageRecord,
    category_stats,
    parse_dataset,
    serialize_dataset,
)
from .ema import ApCurve, EmaState, ema_update, select_epoch
from .evaluation import (
    Detection,
    EvalConfig,
    EvalReport,
    apply_caps,
    calibration_oracle,
    evaluate,
    rescore,
)
from .masks import (
    RleMask,
    boundary_iou,
    mask_boundary,
    mask_iou,
    polygons_to_mask,
    rle_decode,
    rle_encode,
)
from .rfs import EpochSchedule, RepeatFactors, build_epoch_schedule, compute_repeat_factors
from .seesaw import SeesawConfig, SeesawEval, seesaw_loss, update_counts
from .tta import FuseConfig, TtaView, default_views, fuse, unmap

__version__ = "0.1.0"
