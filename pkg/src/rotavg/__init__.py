"""Robust single rotation averaging on SO(3).

Core pieces:
    so3         exponential/log maps, metrics, projection
    averaging   chordal L2 mean, median initializer, robust L1 means
    synthetic   seeded test instances and a plain-text dump format
    bench       sweep harness with CSV output
    service     FastAPI wrapper
    cli         `rotavg` entry point
"""

from .averaging import (
    AveragingConfig,
    AveragingResult,
    DegenerateProjectionWarning,
    chordal_l1_mean_approx,
    chordal_l2_mean,
    elementwise_median_matrix,
    geodesic_l1_mean,
    initialize_elementwise_median,
    quartile_q1,
    rejection_threshold,
)
from .so3 import (
    chordal_distance,
    exp_map,
    exp_map_batch,
    geodesic_distance,
    hat,
    log_map,
    log_map_batch,
    project_to_so3,
    vec,
    vec_inv,
    vee,
)
from .synthetic import (
    ProblemInstance,
    TrialSpec,
    dump_instance,
    gen_inlier,
    gen_outlier,
    load_instance,
    make_instance,
    random_rotation_uniform,
)

__version__ = "0.1.0"

__all__ = [
    "AveragingConfig",
    "AveragingResult",
    "DegenerateProjectionWarning",
    "ProblemInstance",
    "TrialSpec",
    "chordal_distance",
    "chordal_l1_mean_approx",
    "chordal_l2_mean",
    "dump_instance",
    "elementwise_median_matrix",
    "exp_map",
    "exp_map_batch",
    "gen_inlier",
    "gen_outlier",
    "geodesic_distance",
    "geodesic_l1_mean",
    "hat",
    "initialize_elementwise_median",
    "load_instance",
    "log_map",
    "log_map_batch",
    "make_instance",
    "project_to_so3",
    "quartile_q1",
    "random_rotation_uniform",
    "rejection_threshold",
    "vec",
    "vec_inv",
    "vee",
]
