"""FastAPI application exposing averaging, instance generation, and sweeps."""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import averaging, bench, synthetic
from . import schemas

_SINGLE_SHOT = {"chordal-l2", "init-median"}


def _average(req: schemas.AverageRequest) -> schemas.AverageResponse:
    rotations = np.asarray(req.rotations, dtype=float)
    if req.method in _SINGLE_SHOT:
        if req.method == "chordal-l2":
            estimate = averaging.chordal_l2_mean(rotations)
        else:
            estimate = averaging.initialize_elementwise_median(rotations)
        return schemas.AverageResponse(
            estimate=estimate.tolist(),
            method=req.method,
            rejection=req.rejection,
            iterations_used=0,
            converged=True,
            residuals=[],
            weights=[],
            cost_trace=[],
        )
    cfg = averaging.AveragingConfig(
        max_iterations=req.max_iterations,
        convergence_tol=req.convergence_tol,
        rejection_enabled=req.rejection,
        rng_seed=req.rng_seed,
    )
    if req.method == "geodesic-l1":
        result = averaging.geodesic_l1_mean(rotations, cfg)
    elif req.method == "chordal-l1":
        result = averaging.chordal_l1_mean_approx(rotations, cfg)
    else:
        raise ValueError(f"unknown method {req.method!r}")
    return schemas.AverageResponse(
        estimate=result.estimate.tolist(),
        method=req.method,
        rejection=req.rejection,
        iterations_used=result.iterations_used,
        converged=result.converged,
        residuals=result.residuals.tolist(),
        weights=result.weights.tolist(),
        cost_trace=list(result.cost_trace),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="rotavg", version="0.1.0")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/average", response_model=schemas.AverageResponse)
    def average(req: schemas.AverageRequest):
        try:
            return _average(req)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.post("/v1/synthetic/instance", response_model=schemas.InstanceResponse)
    def instance(req: schemas.InstanceRequest):
        try:
            spec = synthetic.TrialSpec(
                n_rotations=req.n_rotations,
                inlier_sigma=req.inlier_sigma,
                outlier_ratio=req.outlier_ratio,
                seed=req.seed,
            )
            inst = synthetic.make_instance(spec)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return schemas.InstanceResponse(
            ground_truth=inst.ground_truth.tolist(),
            rotations=inst.rotations.tolist(),
            inlier_mask=inst.inlier_mask.tolist(),
        )

    @app.post("/v1/bench/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest):
        try:
            cfg = bench.SweepConfig(
                methods=tuple(req.methods),
                rejection=req.rejection,
                sigmas=tuple(req.sigmas),
                outlier_ratios=tuple(req.outlier_ratios),
                n_rotations=req.n_rotations,
                trials=req.trials,
                base_seed=req.seed,
                threads=req.threads,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        records = bench.run_sweep(cfg)
        rows = [
            schemas.TrialRow(
                method=r.method,
                rejection=r.rejection,
                sigma_deg=r.sigma_deg,
                outlier_ratio=r.outlier_ratio,
                trial=r.trial_index,
                error_deg=None if math.isnan(r.error_deg) else r.error_deg,
                time_us_per_rot=(
                    None if math.isnan(r.time_us_per_rotation) else r.time_us_per_rotation
                ),
                iterations=r.iterations_used,
            )
            for r in records
        ]
        return schemas.SweepResponse(records=rows, summary=bench.emit_summary(records))

    return app
