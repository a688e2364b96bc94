"""Zero-shot building segmentation plumbing for labeled point clouds.

Projects clouds to equirectangular panoramas, persists the point-pixel
mapping, lifts externally produced 2D building masks back to 3D point
predictions, and evaluates them against ground truth labels.
"""

from .backprojection import (
    DepthMode,
    PredictionSet,
    apply_labels,
    backproject,
    load_predictions,
    merge_predictions,
    save_predictions,
)
from .cloud_io import (
    CloudValidationReport,
    LabeledCloud,
    load_categories,
    load_point_cloud,
    save_categories,
    save_labeled_cloud,
    validate_cloud,
)
from .errors import (
    BoxFormatError,
    CloudFormatError,
    DegenerateOriginError,
    DimensionMismatchError,
    ImageFormatError,
    MappingFormatError,
    PredictionError,
    SphereSegError,
)
from .evaluation import (
    Confusion,
    FPBreakdown,
    MetricsReport,
    aggregate,
    compute_metrics,
    confusion_counts,
    fp_breakdown,
)
from .masks import (
    BoxSet,
    Mask,
    ScoredBox,
    filter_boxes,
    merge_masks,
    read_boxes,
    read_mask_pgm,
    write_boxes,
    write_mask_pgm,
)
from .oracle import oracle_mask, perturb_mask
from .projection import (
    EquirectImage,
    PixelCoord,
    PixelMapping,
    ProjectionStats,
    ReferencePoint,
    SphericalCoord,
    normalize_point,
    project_scene,
    read_image_rgb,
    read_mapping,
    to_pixel,
    to_spherical,
    write_image,
    write_mapping,
)

__version__ = "0.1.0"
