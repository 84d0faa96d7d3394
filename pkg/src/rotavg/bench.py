"""Benchmark harness: method sweeps over synthetic instances.

A sweep runs every requested (method, rejection) combination over a grid of
noise levels and outlier ratios, with each trial's instance derived from a
deterministic sub-seed so that all methods see the identical instance
(paired comparison) and so that adding methods never reshuffles instances.
Accuracy is the geodesic distance to the ground truth in degrees; timing is
wall clock around the estimator call only, reported as microseconds per
input rotation.

Failed estimator calls are recorded with NaN error/time markers and the
sweep continues; aggregates skip them.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import averaging, so3, synthetic

METHODS = ("chordal-l2", "init-median", "geodesic-l1", "chordal-l1")
REJECTION_MODES = ("on", "off", "both")

DEFAULT_SIGMAS = (5.0, 15.0)
DEFAULT_RATIOS = (0.0, 0.25, 0.5, 0.75, 0.95)

CSV_HEADER = "method,rejection,sigma_deg,outlier_ratio,trial,error_deg,time_us_per_rot,iterations"


@dataclass(frozen=True)
class SweepConfig:
    methods: tuple[str, ...] = METHODS
    rejection: str = "both"
    sigmas: tuple[float, ...] = DEFAULT_SIGMAS
    outlier_ratios: tuple[float, ...] = DEFAULT_RATIOS
    n_rotations: int = 100
    trials: int = 1000
    base_seed: int = 0
    threads: int = 1
    output_path: str | None = None
    dump_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(
            self, "outlier_ratios", tuple(float(r) for r in self.outlier_ratios)
        )
        if not self.methods:
            raise ValueError("methods must be nonempty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if self.rejection not in REJECTION_MODES:
            raise ValueError(f"rejection must be one of {REJECTION_MODES}")
        if not self.sigmas or not self.outlier_ratios:
            raise ValueError("sigmas and outlier_ratios must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n_rotations < 1:
            raise ValueError("n_rotations must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def rejection_flags(self) -> tuple[bool, ...]:
        if self.rejection == "on":
            return (True,)
        if self.rejection == "off":
            return (False,)
        return (True, False)


@dataclass
class TrialRecord:
    method: str
    rejection: bool
    sigma_deg: float
    outlier_ratio: float
    trial_index: int
    error_deg: float
    time_us_per_rotation: float
    iterations_used: int

    @property
    def failed(self) -> bool:
        return not np.isfinite(self.error_deg)


@dataclass
class CellAggregate:
    method: str
    rejection: bool
    sigma_deg: float
    outlier_ratio: float
    trials: int
    failures: int
    mean_error_deg: float
    median_error_deg: float
    median_time_us: float


def trial_seeds(base_seed: int, sigma_idx: int, ratio_idx: int, trial_idx: int) -> tuple[int, int]:
    """Deterministic (instance, estimator) sub-seeds for one trial.

    Mixing is numpy's SeedSequence keyed on (base_seed; sigma, ratio, trial
    indices), which is documented and stable; the method list never enters,
    so adding methods cannot reshuffle instances.
    """
    ss = np.random.SeedSequence(
        entropy=int(base_seed), spawn_key=(int(sigma_idx), int(ratio_idx), int(trial_idx))
    )
    inst, est = ss.generate_state(2, dtype=np.uint64)
    return int(inst), int(est)


def _run_estimator(method: str, rejection: bool, rotations, seed: int):
    """Returns (estimate, iterations_used)."""
    if method == "chordal-l2":
        return averaging.chordal_l2_mean(rotations), 0
    if method == "init-median":
        return averaging.initialize_elementwise_median(rotations), 0
    cfg = averaging.AveragingConfig(rejection_enabled=rejection, rng_seed=seed)
    if method == "geodesic-l1":
        result = averaging.geodesic_l1_mean(rotations, cfg)
    elif method == "chordal-l1":
        result = averaging.chordal_l1_mean_approx(rotations, cfg)
    else:
        raise ValueError(f"unknown method {method!r}")
    return result.estimate, result.iterations_used


def _run_cell(config: SweepConfig, sigma_idx: int, ratio_idx: int) -> list[TrialRecord]:
    sigma = config.sigmas[sigma_idx]
    ratio = config.outlier_ratios[ratio_idx]
    combos = [(m, rej) for m in config.methods for rej in config.rejection_flags]

    # One discarded warm-up call per combo to avoid cold-start timing skew.
    warm_seed, warm_est_seed = trial_seeds(config.base_seed, sigma_idx, ratio_idx, 0)
    warm = synthetic.make_instance(
        synthetic.TrialSpec(config.n_rotations, sigma, ratio, warm_seed)
    )
    for method, rej in combos:
        try:
            _run_estimator(method, rej, warm.rotations, warm_est_seed)
        except Exception:
            pass

    records = []
    for trial in range(config.trials):
        inst_seed, est_seed = trial_seeds(config.base_seed, sigma_idx, ratio_idx, trial)
        spec = synthetic.TrialSpec(config.n_rotations, sigma, ratio, inst_seed)
        instance = synthetic.make_instance(spec)
        if config.dump_dir is not None:
            name = f"instance_s{sigma:g}_r{ratio:g}_t{trial:05d}.txt"
            synthetic.dump_instance(f"{config.dump_dir}/{name}", spec, instance.rotations)
        for method, rej in combos:
            start = time.perf_counter()
            try:
                estimate, iterations = _run_estimator(method, rej, instance.rotations, est_seed)
                elapsed = time.perf_counter() - start
                error = np.degrees(so3.geodesic_distance(estimate, instance.ground_truth))
                record = TrialRecord(
                    method, rej, sigma, ratio, trial,
                    float(error), elapsed * 1e6 / config.n_rotations, iterations,
                )
            except Exception:
                record = TrialRecord(
                    method, rej, sigma, ratio, trial, float("nan"), float("nan"), 0
                )
            records.append(record)
    return records


def run_sweep(config: SweepConfig) -> list[TrialRecord]:
    """Run the full sweep; records come back in deterministic sweep order
    (sigma, ratio, trial, method x rejection) regardless of thread count."""
    cells = [
        (si, ri)
        for si in range(len(config.sigmas))
        for ri in range(len(config.outlier_ratios))
    ]
    if config.threads == 1 or len(cells) == 1:
        chunks = [_run_cell(config, si, ri) for si, ri in cells]
    else:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            futures = [pool.submit(_run_cell, config, si, ri) for si, ri in cells]
            chunks = [f.result() for f in futures]
    return [rec for chunk in chunks for rec in chunk]


def aggregate(records: list[TrialRecord]) -> list[CellAggregate]:
    """Per-cell aggregates in first-seen record order; failed trials excluded."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for rec in records:
        key = (rec.sigma_deg, rec.outlier_ratio, rec.method, rec.rejection)
        groups.setdefault(key, []).append(rec)
    out = []
    for (sigma, ratio, method, rej), recs in groups.items():
        ok = [r for r in recs if not r.failed]
        errors = np.array([r.error_deg for r in ok])
        times = np.array([r.time_us_per_rotation for r in ok])
        out.append(
            CellAggregate(
                method=method,
                rejection=rej,
                sigma_deg=sigma,
                outlier_ratio=ratio,
                trials=len(recs),
                failures=len(recs) - len(ok),
                mean_error_deg=float(errors.mean()) if len(ok) else float("nan"),
                median_error_deg=float(np.median(errors)) if len(ok) else float("nan"),
                median_time_us=float(np.median(times)) if len(ok) else float("nan"),
            )
        )
    return out


def emit_csv(records: list[TrialRecord], path) -> None:
    """Write records as CSV (full-precision decimals, deterministic row order)."""
    if not records:
        raise ValueError("no records to write")
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.method},{'on' if r.rejection else 'off'},{r.sigma_deg!r},"
            f"{r.outlier_ratio!r},{r.trial_index},{r.error_deg!r},"
            f"{r.time_us_per_rotation!r},{r.iterations_used}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_csv(path) -> list[TrialRecord]:
    """Read back a CSV written by emit_csv."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: bad or missing CSV header")
    records = []
    for ln in lines[1:]:
        m, rej, sigma, ratio, trial, err, t, iters = ln.split(",")
        records.append(
            TrialRecord(
                m, rej == "on", float(sigma), float(ratio), int(trial),
                float(err), float(t), int(iters),
            )
        )
    return records


def _cell_label(sigma: float, ratio: float) -> str:
    return f"({sigma:g}\N{DEGREE SIGN}, {100.0 * ratio:g}%)"


def emit_summary(records: list[TrialRecord]) -> str:
    """Human-readable table: one row per (sigma, ratio), one column per
    (method, rejection) showing mean error and median time. When both L1
    methods ran, the chordal column carries the geodesic/chordal timing
    ratio in parentheses."""
    aggs = aggregate(records)
    by_key = {(a.sigma_deg, a.outlier_ratio, a.method, a.rejection): a for a in aggs}
    row_keys, col_keys = [], []
    for a in aggs:
        rk = (a.sigma_deg, a.outlier_ratio)
        ck = (a.method, a.rejection)
        if rk not in row_keys:
            row_keys.append(rk)
        if ck not in col_keys:
            col_keys.append(ck)

    def cell_text(sigma, ratio, method, rej):
        a = by_key.get((sigma, ratio, method, rej))
        if a is None:
            return "-"
        if a.failures == a.trials:
            return "failed"
        text = f"{a.mean_error_deg:.2f}\N{DEGREE SIGN} {a.median_time_us:.2f}us"
        if method == "chordal-l1":
            geo = by_key.get((sigma, ratio, "geodesic-l1", rej))
            if geo is not None and geo.failures < geo.trials and a.median_time_us > 0:
                text += f" ({geo.median_time_us / a.median_time_us:.1f}x)"
        return text

    headers = ["cell"] + [f"{m}[{'on' if rej else 'off'}]" for m, rej in col_keys]
    rows = []
    for sigma, ratio in row_keys:
        rows.append(
            [_cell_label(sigma, ratio)]
            + [cell_text(sigma, ratio, m, rej) for m, rej in col_keys]
        )
    widths = [max(len(r[i]) for r in [headers] + rows) for i in range(len(headers))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*headers), fmt.format(*["-" * w for w in widths])]
    lines += [fmt.format(*row) for row in rows]
    return "\n".join(lines)


def default_sweep_config(**overrides) -> SweepConfig:
    """The benchmark's default grid: all methods, both rejection modes,
    sigma in {5, 15} degrees, ratios {0, .25, .5, .75, .95}, N=100, 1000 trials."""
    cfg = SweepConfig()
    return replace(cfg, **overrides) if overrides else cfg
