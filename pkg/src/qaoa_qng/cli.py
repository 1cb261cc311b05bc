"""
Command-line entry point ``qaoa-qng``.

    qaoa-qng run <manifest.toml> [--out DIR] [--threads K] [--seed S] [--format csv|json|both]
    qaoa-qng validate <manifest.toml>
    qaoa-qng replay <results.json> [--threads K]

The output directory defaults to ``$QAOA_QNG_OUTPUT_DIR``, or ``./results``.
"""

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from qaoa_qng import __version__
from qaoa_qng.experiments import emit, load_manifest, replay, run_experiment

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "QAOA_QNG_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"


def output_dir(value: Optional[str]) -> Path:
    if value:
        return Path(value)
    return Path(os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qaoa-qng",
        description="QAOA with quantum natural gradient on the transverse-field Ising chain.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity, defaults to WARNING.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run the experiment described by a manifest.")
    run.add_argument("manifest", type=Path)
    run.add_argument("--out", default=None, help=f"Output directory (default ${OUTPUT_DIR_ENV} or ./results).")
    run.add_argument("--threads", type=int, default=1, help="Worker processes for trials.")
    run.add_argument("--seed", type=int, default=None, help="Override the manifest master seed.")
    run.add_argument("--format", choices=["csv", "json", "both"], default="both")
    run.add_argument(
        "--timing", action="store_true", help="Record wall time per trial (output is then not reproducible)."
    )

    validate = sub.add_parser("validate", help="Check a manifest without running it.")
    validate.add_argument("manifest", type=Path)

    rep = sub.add_parser("replay", help="Re-run the trials of a JSON result file and compare.")
    rep.add_argument("results", type=Path)
    rep.add_argument("--threads", type=int, default=1)
    return parser


def _run(args) -> int:
    spec = load_manifest(args.manifest)
    if args.seed is not None:
        spec = dataclasses.replace(spec, master_seed=args.seed)
    result = run_experiment(spec, threads=args.threads, timing=args.timing)
    out = output_dir(args.out)
    formats = ["csv", "json"] if args.format == "both" else [args.format]
    for fmt in formats:
        path = emit(result, fmt, out / f"{spec.name}.{fmt}")
        print(f"wrote {path}")
    failures = sum(1 for r in result.records if r.error)
    if failures:
        logger.warning("%d of %d trials failed", failures, len(result.records))
    print(result.summary().to_string())
    return 0


def _validate(args) -> int:
    spec = load_manifest(args.manifest)
    cells = sum(len(spec.depths_for(n)) for n in spec.n_range)
    print(
        f"{spec.name}: {spec.protocol} on {spec.backend}, {cells} (N, P) cells x "
        f"{len(spec.methods)} methods x {spec.trials} trials"
    )
    return 0


def _replay(args) -> int:
    report = replay(args.results, threads=args.threads)
    if report.ok:
        print(f"replayed {report.n_records} records: all match")
        return 0
    print(f"replayed {report.n_records} records: {len(report.mismatches)} differ")
    return 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    handlers = {"run": _run, "validate": _validate, "replay": _replay}
    try:
        return handlers[args.command](args)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
