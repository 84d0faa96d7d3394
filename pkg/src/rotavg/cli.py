"""Command-line interface.

Subcommands:
    serve    run the HTTP service (uvicorn)
    bench    run a benchmark sweep, write CSV, optionally print a summary
    average  average the rotations in an instance dump file

`bench` and `average` accept --server URL to delegate the computation to a
running service; without it they call the library in-process through the
same code paths the service uses.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench, synthetic
from .service import schemas
from .service.app import _average


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rotavg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    p_bench = sub.add_parser("bench", help="run a benchmark sweep")
    p_bench.add_argument(
        "--methods", nargs="+", default=list(bench.METHODS), choices=bench.METHODS,
        metavar="METHOD",
    )
    p_bench.add_argument("--rejection", choices=bench.REJECTION_MODES, default="both")
    p_bench.add_argument(
        "--sigmas", nargs="+", type=float, default=list(bench.DEFAULT_SIGMAS),
        help="inlier noise levels in degrees",
    )
    p_bench.add_argument(
        "--ratios", nargs="+", type=float, default=list(bench.DEFAULT_RATIOS),
        help="outlier ratios in [0, 1]",
    )
    p_bench.add_argument("--n", type=int, default=100, help="rotations per instance")
    p_bench.add_argument("--trials", type=int, default=1000)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", required=True, metavar="CSV", help="output CSV path")
    p_bench.add_argument("--summary", action="store_true", help="print a summary table")
    p_bench.add_argument("--threads", type=int, default=1)
    p_bench.add_argument(
        "--dump-instances", metavar="DIR", default=None,
        help="also write every generated instance to DIR (in-process only)",
    )
    p_bench.add_argument("--server", default=None, metavar="URL")

    p_avg = sub.add_parser("average", help="average rotations from a dump file")
    p_avg.add_argument("input", help="instance dump file")
    p_avg.add_argument(
        "--method", choices=bench.METHODS, default="geodesic-l1"
    )
    p_avg.add_argument("--rejection", choices=("on", "off"), default="on")
    p_avg.add_argument("--seed", type=int, default=0)
    p_avg.add_argument("--server", default=None, metavar="URL")
    return parser


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def _post_json(server: str, route: str, payload: dict) -> dict:
    import httpx

    try:
        resp = httpx.post(server.rstrip("/") + route, json=payload, timeout=None)
        resp.raise_for_status()
    except httpx.HTTPError as exc:
        raise ValueError(f"server request failed: {exc}") from exc
    return resp.json()


def _records_from_rows(rows) -> list[bench.TrialRecord]:
    return [
        bench.TrialRecord(
            method=r["method"],
            rejection=r["rejection"],
            sigma_deg=r["sigma_deg"],
            outlier_ratio=r["outlier_ratio"],
            trial_index=r["trial"],
            error_deg=float("nan") if r["error_deg"] is None else r["error_deg"],
            time_us_per_rotation=(
                float("nan") if r["time_us_per_rot"] is None else r["time_us_per_rot"]
            ),
            iterations_used=r["iterations"],
        )
        for r in rows
    ]


def _cmd_bench(args) -> int:
    if args.server is not None:
        if args.dump_instances is not None:
            print("--dump-instances requires in-process execution", file=sys.stderr)
            return 1
        payload = {
            "methods": args.methods,
            "rejection": args.rejection,
            "sigmas": args.sigmas,
            "outlier_ratios": args.ratios,
            "n_rotations": args.n,
            "trials": args.trials,
            "seed": args.seed,
            "threads": args.threads,
        }
        body = _post_json(args.server, "/v1/bench/sweep", payload)
        records = _records_from_rows(body["records"])
        summary = body["summary"]
    else:
        config = bench.SweepConfig(
            methods=tuple(args.methods),
            rejection=args.rejection,
            sigmas=tuple(args.sigmas),
            outlier_ratios=tuple(args.ratios),
            n_rotations=args.n,
            trials=args.trials,
            base_seed=args.seed,
            threads=args.threads,
            output_path=args.out,
            dump_dir=args.dump_instances,
        )
        if config.dump_dir is not None:
            import os

            os.makedirs(config.dump_dir, exist_ok=True)
        records = bench.run_sweep(config)
        summary = bench.emit_summary(records)
    bench.emit_csv(records, args.out)
    if args.summary:
        print(summary)
    return 0


def _cmd_average(args) -> int:
    _, rotations = synthetic.load_instance(args.input)
    if args.server is not None:
        payload = {
            "rotations": rotations.tolist(),
            "method": args.method,
            "rejection": args.rejection == "on",
            "rng_seed": args.seed,
        }
        body = _post_json(args.server, "/v1/average", payload)
        estimate = np.asarray(body["estimate"])
        iterations = body["iterations_used"]
    else:
        req = schemas.AverageRequest(
            rotations=rotations.tolist(),
            method=args.method,
            rejection=args.rejection == "on",
            rng_seed=args.seed,
        )
        body = _average(req)
        estimate = np.asarray(body.estimate)
        iterations = body.iterations_used
    for row in estimate:
        print(" ".join(repr(float(x)) for x in row))
    print(f"# method={args.method} rejection={args.rejection} iterations={iterations}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"serve": _cmd_serve, "bench": _cmd_bench, "average": _cmd_average}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
