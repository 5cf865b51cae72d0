"""Command-line entry point.

Subcommands cover the bench metrics (run-ira, run-esr, run-uec, ablation,
bench), the gateway server (serve) and classifier calibration (calibrate).
Every bench subcommand takes --config (JSON pipeline config file),
--prompt-style, --format and --out.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    bundled_ablation_ids,
    bundled_dataset,
    emit_report,
    full_bench,
    load_dataset,
    run_esr,
    run_ira,
    run_tool_ablation,
    run_uec,
)
from .config import PipelineConfig


def _add_bench_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="pipeline config JSON file")
    parser.add_argument(
        "--prompt-style", choices=("RP", "CP", "EIP"), help="override the prompt style"
    )
    parser.add_argument("--dataset", help="dataset file (default: bundled 160 tasks)")
    parser.add_argument("--format", default="json", help="report format: json or csv")
    parser.add_argument("--out", help="write the report here instead of stdout")


def _load(args) -> tuple[PipelineConfig, "Dataset"]:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    config = config.with_style(args.prompt_style)
    if args.dataset:
        with open(args.dataset, encoding="utf-8") as fh:
            ds = load_dataset(fh.read())
    else:
        ds = bundled_dataset()
    return config, ds


def _emit(args, report: dict) -> None:
    document = emit_report(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(document)
    else:
        sys.stdout.write(document)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dronelang", description="natural-language UAV orchestration"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("run-ira", "intent recognition accuracy over the dataset"),
        ("run-esr", "task execution success rate over the dataset"),
        ("run-uec", "flight time and energy per successful task"),
        ("bench", "IRA + ESR + UEC in one deterministic report"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_bench_flags(p)

    p = sub.add_parser("ablation", help="ESR with tools enabled vs prohibited (ST subset)")
    _add_bench_flags(p)
    p.add_argument("--subset", help="file of record ids (default: bundled ST fixture)")

    p = sub.add_parser("calibrate", help="grid-search classifier coefficients")
    p.add_argument("--examples", help="calibration file (default: bundled)")

    # flags win over DRONELANG_* environment overrides, which win over defaults
    import os

    p = sub.add_parser("serve", help="run the session gateway")
    p.add_argument("--host", default=os.environ.get("DRONELANG_HOST", "127.0.0.1"))
    p.add_argument(
        "--port", type=int, default=int(os.environ.get("DRONELANG_PORT", "8000"))
    )
    p.add_argument(
        "--config",
        default=os.environ.get("DRONELANG_CONFIG"),
        help="pipeline config JSON file",
    )
    p.add_argument(
        "--transcript-dir",
        default=os.environ.get("DRONELANG_TRANSCRIPTS", "transcripts"),
    )
    p.add_argument("--realtime-factor", type=float, default=0.0,
                   help="wall seconds slept per simulated second (0 = as fast as possible)")

    args = parser.parse_args(argv)

    if args.command == "run-ira":
        config, ds = _load(args)
        _emit(args, run_ira(ds, config))
    elif args.command == "run-esr":
        config, ds = _load(args)
        _emit(args, run_esr(ds, config))
    elif args.command == "run-uec":
        config, ds = _load(args)
        _emit(args, run_uec(ds, config))
    elif args.command == "bench":
        config, ds = _load(args)
        _emit(args, full_bench(config, ds))
    elif args.command == "ablation":
        config, ds = _load(args)
        if args.subset:
            with open(args.subset, encoding="utf-8") as fh:
                ids = [
                    ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")
                ]
        else:
            ids = bundled_ablation_ids()
        _emit(args, run_tool_ablation(ds.subset(ids), config))
    elif args.command == "calibrate":
        from .classify import bundled_calibration, calibrate, parse_calibration

        if args.examples:
            with open(args.examples, encoding="utf-8") as fh:
                examples = parse_calibration(fh.read())
        else:
            examples = bundled_calibration()
        cfg = calibrate(examples)
        print(
            f"point_scale={cfg.point_scale} danger_scale={cfg.danger_scale} "
            f"action_scale={cfg.action_scale} threshold={cfg.threshold}"
        )
    elif args.command == "serve":
        import uvicorn

        from .gateway import GatewayConfig, create_app

        pipeline = (
            PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
        )
        app = create_app(
            GatewayConfig(
                transcript_dir=args.transcript_dir,
                pipeline=pipeline,
                realtime_factor=args.realtime_factor,
            )
        )
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
