"""Rotation averaging estimators.

Four estimators over a set of input rotations:

* ``chordal_l2_mean`` -- closed-form least-squares average (projection of the
  entrywise sum onto SO(3)).
* ``initialize_elementwise_median`` -- robust starting point: projection of
  the entrywise median matrix onto SO(3).
* ``geodesic_l1_mean`` -- Weiszfeld iteration for the geodesic median on
  SO(3), with optional per-iteration outlier rejection.
* ``chordal_l1_mean_approx`` -- approximate chordal median: the inputs are
  embedded in R^9, their Euclidean geometric median is found with the
  standard Weiszfeld iteration (same rejection scheme, thresholds converted
  to chordal units), and the result is projected back onto SO(3).

The rejection scheme zeroes the Weiszfeld weight of every residual larger
than max(Q1, d_max), where Q1 is the first quartile of the current residuals
and d_max a fixed cap that protects inliers from being discarded.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import so3

# Residual caps for the rejection threshold. Small input sets get a looser
# cap; the chordal caps are the geodesic ones converted to chord length.
SMALL_SET_SIZE = 50
GEODESIC_D_MAX_SMALL = 1.0
GEODESIC_D_MAX_LARGE = 0.5
CHORDAL_D_MAX_SMALL = 2.0 * math.sqrt(2.0) * math.sin(0.5)
CHORDAL_D_MAX_LARGE = 2.0 * math.sqrt(2.0) * math.sin(0.25)

# An estimate closer than this to an input counts as coinciding with it and
# gets perturbed away (the Weiszfeld weight 1/d is undefined at d = 0).
COINCIDENCE_TOL = 1e-9


class DegenerateProjectionWarning(UserWarning):
    """The SO(3) projection step had a non-unique minimizer."""


@dataclass(frozen=True)
class AveragingConfig:
    """Knobs shared by both Weiszfeld estimators."""

    max_iterations: int = 10
    convergence_tol: float = 0.001
    rejection_enabled: bool = True
    perturbation_magnitude: float = 0.001
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_tol <= 0.0:
            raise ValueError("convergence_tol must be > 0")
        if self.perturbation_magnitude <= 0.0:
            raise ValueError("perturbation_magnitude must be > 0")


@dataclass
class AveragingResult:
    """Estimate plus diagnostics from the final completed iteration."""

    estimate: np.ndarray
    iterations_used: int
    residuals: np.ndarray
    weights: np.ndarray
    converged: bool
    cost_trace: list[float] = field(default_factory=list)


def _validated_stack(rotations) -> np.ndarray:
    rs = np.asarray(rotations, dtype=float)
    if rs.ndim != 3 or rs.shape[1:] != (3, 3) or rs.shape[0] == 0:
        raise ValueError(
            f"expected a nonempty stack of 3x3 rotation matrices, got shape {rs.shape}"
        )
    if not np.all(np.isfinite(rs)):
        raise ValueError("rotation stack has non-finite entries")
    gram_err = np.einsum("nji,njk->nik", rs, rs) - np.eye(3)
    if np.sqrt((gram_err**2).sum(axis=(1, 2))).max() > so3.ORTHONORMALITY_TOL:
        raise ValueError("input contains a matrix that is not orthonormal")
    if np.abs(np.linalg.det(rs) - 1.0).max() > so3.ORTHONORMALITY_TOL:
        raise ValueError("input contains a matrix with determinant != +1")
    return rs


def chordal_l2_mean(rotations) -> np.ndarray:
    """Least-squares average: projection of the entrywise sum onto SO(3)."""
    rs = _validated_stack(rotations)
    r, degenerate = so3.project_to_so3_info(rs.sum(axis=0))
    if degenerate:
        warnings.warn(
            "sum of rotations has a non-unique SO(3) projection",
            DegenerateProjectionWarning,
            stacklevel=2,
        )
    return r


def elementwise_median_matrix(rotations) -> np.ndarray:
    """Entrywise scalar median of the input matrices (generally not a rotation).

    Even input counts take the mean of the two middle order statistics.
    """
    rs = _validated_stack(rotations)
    return np.median(rs, axis=0)


def initialize_elementwise_median(rotations) -> np.ndarray:
    """Robust initial rotation: SO(3) projection of the entrywise median."""
    rs = _validated_stack(rotations)
    r, degenerate = so3.project_to_so3_info(np.median(rs, axis=0))
    if degenerate:
        warnings.warn(
            "median matrix has a non-unique SO(3) projection",
            DegenerateProjectionWarning,
            stacklevel=2,
        )
    return r


def quartile_q1(values) -> float:
    """Nearest-rank lower quartile: the value at sorted rank ceil(n/4), 1-indexed."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("quartile of an empty sequence")
    k = (v.size + 3) // 4 - 1
    return float(np.partition(v, k)[k])


def d_max(n: int, metric: str) -> float:
    """Residual cap used by the rejection rule, by input count and metric."""
    if metric == "geodesic":
        return GEODESIC_D_MAX_SMALL if n <= SMALL_SET_SIZE else GEODESIC_D_MAX_LARGE
    if metric == "chordal":
        return CHORDAL_D_MAX_SMALL if n <= SMALL_SET_SIZE else CHORDAL_D_MAX_LARGE
    raise ValueError(f"unknown metric {metric!r}")


def rejection_threshold(residuals, n: int, metric: str) -> float:
    """Residuals above max(Q1, d_max) get zero weight for the iteration."""
    return max(quartile_q1(residuals), d_max(n, metric))


def _random_unit(rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm


def _weights(dists: np.ndarray, n: int, metric: str, rejection: bool) -> np.ndarray:
    if not rejection:
        return np.ones(n)
    thr = rejection_threshold(dists, n, metric)
    return (dists <= thr).astype(float)


def geodesic_l1_mean(rotations, config: AveragingConfig | None = None) -> AveragingResult:
    """Geodesic median on SO(3) via the Weiszfeld algorithm.

    Starts from the elementwise-median initialization. Each iteration lifts
    the inputs into the tangent space at the current estimate, optionally
    zeroes the weights of rejected residuals, and applies the weighted
    Weiszfeld step ``estimate <- Exp(dv) @ estimate``. Whenever the estimate
    coincides with an input it is first nudged by a small random rotation so
    the 1/d weights stay finite.
    """
    rs = _validated_stack(rotations)
    cfg = config if config is not None else AveragingConfig()
    rng = np.random.default_rng(cfg.rng_seed)
    n = len(rs)

    estimate = so3.project_to_so3(np.median(rs, axis=0))
    cost_trace: list[float] = []
    converged = False
    iterations = 0
    dists = np.zeros(n)
    weights = np.ones(n)
    for iterations in range(1, cfg.max_iterations + 1):
        while True:
            tangents = so3.log_map_batch(rs @ estimate.T)
            dists = np.linalg.norm(tangents, axis=1)
            if dists.min() >= COINCIDENCE_TOL:
                break
            nudge = so3.exp_map(cfg.perturbation_magnitude * _random_unit(rng))
            estimate = nudge @ estimate
        cost_trace.append(float(dists.sum()))
        weights = _weights(dists, n, "geodesic", cfg.rejection_enabled)
        assert weights.sum() > 0.0
        inv = weights / dists
        step = (tangents * inv[:, None]).sum(axis=0) / inv.sum()
        estimate = so3.exp_map(step) @ estimate
        if float(np.linalg.norm(step)) < cfg.convergence_tol:
            converged = True
            break
    return AveragingResult(estimate, iterations, dists, weights, converged, cost_trace)


def chordal_l1_mean_approx(rotations, config: AveragingConfig | None = None) -> AveragingResult:
    """Approximate chordal median via the Euclidean Weiszfeld algorithm in R^9.

    The inputs are vectorized, the iteration runs on the 9-vectors starting
    from the vectorized elementwise median (no SO(3) projection until the
    end), and the final point is projected back onto SO(3). Residuals and
    the rejection cap are in chordal units.
    """
    rs = _validated_stack(rotations)
    cfg = config if config is not None else AveragingConfig()
    rng = np.random.default_rng(cfg.rng_seed)
    n = len(rs)

    points = rs.transpose(0, 2, 1).reshape(n, 9)  # column-major vec of each input
    s = so3.vec(np.median(rs, axis=0))
    cost_trace: list[float] = []
    converged = False
    iterations = 0
    dists = np.zeros(n)
    weights = np.ones(n)
    for iterations in range(1, cfg.max_iterations + 1):
        while True:
            diffs = points - s
            dists = np.linalg.norm(diffs, axis=1)
            if dists.min() >= COINCIDENCE_TOL:
                break
            s = s + rng.uniform(0.0, cfg.perturbation_magnitude, size=9)
        cost_trace.append(float(dists.sum()))
        weights = _weights(dists, n, "chordal", cfg.rejection_enabled)
        assert weights.sum() > 0.0
        inv = weights / dists
        step = (diffs * inv[:, None]).sum(axis=0) / inv.sum()
        s = s + step
        if float(np.linalg.norm(step)) < cfg.convergence_tol:
            converged = True
            break
    estimate = so3.project_to_so3(so3.vec_inv(s))
    return AveragingResult(estimate, iterations, dists, weights, converged, cost_trace)
