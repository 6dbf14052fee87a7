"""Topological segmentation toolkit: cubical persistence on 2D images,
persistence-based losses, topological preprocessing and metrics."""

from toposeg.image import binarize, invert, load_image, save_image
from toposeg.persistence import (
    Filtration,
    PersistenceDiagram,
    PersistencePoint,
    betti_curve,
    betti_numbers,
    compute_persistence,
    euler_characteristic,
)
from toposeg.loss import bce_loss, match_diagrams, topo_loss, topo_loss_grad, total_loss
from toposeg.metrics import betti_error, confusion, ratio_metrics
from toposeg.preprocess import (
    PreprocessConfig,
    interpolate_background,
    mark_components,
    modify_border,
    preprocess_pipeline,
    select_threshold,
    smooth,
)

__version__ = "0.1.0"
