"""Seeded generation of synthetic rotation-averaging problems.

An instance is a Haar-uniform ground-truth rotation observed through two
populations: inliers, perturbed by a rotation whose angle is half-normal
(|N(0, sigma)|) about a uniformly random axis, and outliers, which are
absolute rotations with angle uniform on [0, pi] about a uniformly random
axis. All randomness derives from the instance seed (numpy PCG64), so equal
specs reproduce bit-identical instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import so3

_HEADER_PREFIX = "# trial-spec"


@dataclass(frozen=True)
class TrialSpec:
    """Parameters of one synthetic problem instance."""

    n_rotations: int
    inlier_sigma: float  # degrees
    outlier_ratio: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "n_rotations", int(self.n_rotations))
        object.__setattr__(self, "inlier_sigma", float(self.inlier_sigma))
        object.__setattr__(self, "outlier_ratio", float(self.outlier_ratio))
        object.__setattr__(self, "seed", int(self.seed))
        if self.n_rotations < 1:
            raise ValueError("n_rotations must be >= 1")
        if self.inlier_sigma < 0.0:
            raise ValueError("inlier_sigma must be >= 0")
        if not 0.0 <= self.outlier_ratio <= 1.0:
            raise ValueError("outlier_ratio must be in [0, 1]")

    @property
    def outlier_count(self) -> int:
        # round(ratio * N), ties away from zero
        return int(math.floor(self.outlier_ratio * self.n_rotations + 0.5))


@dataclass
class ProblemInstance:
    """Generated rotations with ground truth and the (evaluation-only) inlier mask."""

    ground_truth: np.ndarray
    rotations: np.ndarray
    inlier_mask: np.ndarray


def _random_axes(rng: np.random.Generator, count: int) -> np.ndarray:
    axes = rng.normal(size=(count, 3))
    norms = np.linalg.norm(axes, axis=1, keepdims=True)
    # Zero-norm draws are practically impossible; guard against NaN anyway.
    norms[norms < 1e-12] = 1.0
    return axes / norms


def random_rotation_uniform(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-uniform random rotation(s), via normalized Gaussian quaternions.

    Returns a (3, 3) matrix, or a (size, 3, 3) stack when size is given.
    """
    n = 1 if size is None else int(size)
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    rs = np.empty((n, 3, 3))
    rs[:, 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    rs[:, 0, 1] = 2.0 * (x * y - z * w)
    rs[:, 0, 2] = 2.0 * (x * z + y * w)
    rs[:, 1, 0] = 2.0 * (x * y + z * w)
    rs[:, 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    rs[:, 1, 2] = 2.0 * (y * z - x * w)
    rs[:, 2, 0] = 2.0 * (x * z - y * w)
    rs[:, 2, 1] = 2.0 * (y * z + x * w)
    rs[:, 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return rs[0] if size is None else rs


def gen_inlier(
    ground_truth, sigma_deg: float, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Ground truth left-perturbed by angle |N(0, sigma)| about a random axis."""
    gt = so3.check_rotation(ground_truth, "ground_truth")
    if sigma_deg < 0.0:
        raise ValueError("sigma_deg must be >= 0")
    n = 1 if size is None else int(size)
    axes = _random_axes(rng, n)
    angles = np.abs(rng.normal(0.0, math.radians(sigma_deg), size=n))
    rs = so3.exp_map_batch(angles[:, None] * axes) @ gt
    return rs[0] if size is None else rs


def gen_outlier(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Absolute rotation with angle uniform on [0, pi] about a random axis.

    Note this is not Haar-uniform on SO(3): the angle density is flat rather
    than (1 - cos)/pi.
    """
    n = 1 if size is None else int(size)
    axes = _random_axes(rng, n)
    angles = rng.uniform(0.0, math.pi, size=n)
    rs = so3.exp_map_batch(angles[:, None] * axes)
    return rs[0] if size is None else rs


def make_instance(spec: TrialSpec) -> ProblemInstance:
    """Generate the instance for a spec: ground truth, shuffled rotations, mask.

    Draw order (fixed for reproducibility): ground truth, inliers, outliers,
    shuffle permutation.
    """
    rng = np.random.default_rng(spec.seed)
    gt = random_rotation_uniform(rng)
    n_out = spec.outlier_count
    n_in = spec.n_rotations - n_out
    parts = []
    if n_in:
        parts.append(gen_inlier(gt, spec.inlier_sigma, rng, size=n_in))
    if n_out:
        parts.append(gen_outlier(rng, size=n_out))
    rotations = np.concatenate(parts, axis=0)
    mask = np.zeros(spec.n_rotations, dtype=bool)
    mask[:n_in] = True
    perm = rng.permutation(spec.n_rotations)
    return ProblemInstance(gt, rotations[perm], mask[perm])


def dump_instance(path, spec: TrialSpec, rotations) -> None:
    """Write rotations as plain text: a spec header line, then one rotation
    per line as 9 row-major decimals (full precision)."""
    rs = np.asarray(rotations, dtype=float).reshape(-1, 3, 3)
    lines = [
        f"{_HEADER_PREFIX} n_rotations={spec.n_rotations} "
        f"inlier_sigma={spec.inlier_sigma!r} outlier_ratio={spec.outlier_ratio!r} "
        f"seed={spec.seed}"
    ]
    for r in rs:
        lines.append(" ".join(repr(float(x)) for x in r.ravel()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_instance(path) -> tuple[TrialSpec, np.ndarray]:
    """Read back a file written by dump_instance."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith(_HEADER_PREFIX):
        raise ValueError(f"{path}: missing trial-spec header line")
    fields = dict(
        item.split("=", 1) for item in lines[0][len(_HEADER_PREFIX):].split()
    )
    spec = TrialSpec(
        n_rotations=int(fields["n_rotations"]),
        inlier_sigma=float(fields["inlier_sigma"]),
        outlier_ratio=float(fields["outlier_ratio"]),
        seed=int(fields["seed"]),
    )
    rows = []
    for ln in lines[1:]:
        values = np.array(ln.split(), dtype=float)
        if values.shape != (9,):
            raise ValueError(f"{path}: expected 9 values per rotation row")
        rows.append(values.reshape(3, 3))
    if not rows:
        raise ValueError(f"{path}: no rotation rows")
    return spec, np.stack(rows)
