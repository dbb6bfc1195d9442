"""Ground-truth annotation engine for foreground regions of document images.

The pipeline: binarize a scanned page, group foreground pixels into blobs
with a morphology recipe, trace and simplify each blob into a polygonal
labeling unit, drive a labeling workflow (one by one or by region), and
export an indexed label PNG plus XML metadata.
"""

from .binarize import ThresholdParams, binarize, otsu_threshold
from .errors import InkLabelError
from .geometry import (
    BOUNDARY,
    INSIDE,
    OUTSIDE,
    bounding_box,
    point_in_polygon,
    polygon_in_rect,
    simplify_polygon,
    trace_contours,
)
from .morphology import StructuringElement, apply_recipe
from .session import AnnotationSession, LabelDef, LabelingUnit
from .export import corpus_stats, export_groundtruth, import_groundtruth, validate

__version__ = "0.1.0"

__all__ = [
    "AnnotationSession",
    "BOUNDARY",
    "INSIDE",
    "InkLabelError",
    "LabelDef",
    "LabelingUnit",
    "OUTSIDE",
    "StructuringElement",
    "ThresholdParams",
    "apply_recipe",
    "binarize",
    "bounding_box",
    "corpus_stats",
    "export_groundtruth",
    "import_groundtruth",
    "otsu_threshold",
    "point_in_polygon",
    "polygon_in_rect",
    "simplify_polygon",
    "trace_contours",
    "validate",
    "__version__",
]
