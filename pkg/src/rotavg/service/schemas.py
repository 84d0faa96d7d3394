"""Request/response models for the HTTP API.

Rotations travel as nested 3x3 row-major lists of floats. Validation here
covers shape and finiteness only; orthonormality is enforced by the library
and surfaces as a 422.
"""

from __future__ import annotations

import math

from pydantic import BaseModel, Field, field_validator

Matrix3 = list[list[float]]


def _check_matrix3(value) -> Matrix3:
    if len(value) != 3 or any(len(row) != 3 for row in value):
        raise ValueError("rotation must be a 3x3 matrix")
    if any(not math.isfinite(x) for row in value for x in row):
        raise ValueError("rotation entries must be finite")
    return value


class AverageRequest(BaseModel):
    rotations: list[Matrix3] = Field(min_length=1)
    method: str = "geodesic-l1"
    rejection: bool = True
    max_iterations: int = 10
    convergence_tol: float = 0.001
    rng_seed: int = 0

    @field_validator("rotations")
    @classmethod
    def _rotations_shape(cls, v):
        for mat in v:
            _check_matrix3(mat)
        return v


class AverageResponse(BaseModel):
    estimate: Matrix3
    method: str
    rejection: bool
    iterations_used: int
    converged: bool
    residuals: list[float]
    weights: list[float]
    cost_trace: list[float]


class InstanceRequest(BaseModel):
    n_rotations: int = Field(ge=1)
    inlier_sigma: float = Field(ge=0.0)
    outlier_ratio: float = Field(ge=0.0, le=1.0)
    seed: int = 0


class InstanceResponse(BaseModel):
    ground_truth: Matrix3
    rotations: list[Matrix3]
    inlier_mask: list[bool]


class SweepRequest(BaseModel):
    methods: list[str] = Field(default_factory=lambda: ["geodesic-l1"])
    rejection: str = "both"
    sigmas: list[float] = Field(default_factory=lambda: [5.0, 15.0])
    outlier_ratios: list[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5])
    n_rotations: int = 100
    trials: int = 10
    seed: int = 0
    threads: int = 1


class TrialRow(BaseModel):
    method: str
    rejection: bool
    sigma_deg: float
    outlier_ratio: float
    trial: int
    error_deg: float | None
    time_us_per_rot: float | None
    iterations: int


class SweepResponse(BaseModel):
    records: list[TrialRow]
    summary: str
