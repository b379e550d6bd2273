"""Command-line front end.

Subcommands: ``optimize`` (sequence design from a config file), ``metrics``
(metric table for a stored or published sequence), ``ber`` (standalone
wake-up link sweep), ``mux-ber`` (multiplexed OFDM data-link sweep).
Exit codes: 0 success, 1 optimizer stopped without converging, 2 bad
input or config.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import (
    load_experiment_config,
    run_ber,
    run_metrics,
    run_optimize,
)
from .waveform import (
    ConfigurationError,
    InvalidSequenceError,
    SequenceFormatError,
    UndersamplingError,
)

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wakeform",
        description="Design and simulate OFDM-orthogonal on-off-keyed wake-up signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="run the sequence optimizer from a config file")
    p.add_argument("--config", required=True, help="flat key = value config")

    p = sub.add_parser("metrics", help="emit the metric table for a sequence")
    p.add_argument("--seq", required=True, help="sequence file path or table:N")
    p.add_argument("--out", help="CSV output path (stdout when omitted)")

    p = sub.add_parser("ber", help="standalone wake-up link BER sweep")
    p.add_argument("--config", required=True, help="flat key = value config")
    p.add_argument("--out", required=True, help="CSV output path")

    p = sub.add_parser("mux-ber", help="multiplexed OFDM data-link BER sweep")
    p.add_argument("--config", required=True, help="flat key = value config")
    p.add_argument("--out", required=True, help="CSV output path")

    return parser


def _cmd_optimize(args: argparse.Namespace) -> int:
    res = run_optimize(args.config)
    iters = len(res.trace.iterations) - 1
    print(
        f"{'converged' if res.converged else 'stopped at the iteration cap'} "
        f"after {iters} iterations; wrote {res.out_seq} and {res.out_trace}"
    )
    return 0 if res.converged else 1


def _cmd_metrics(args: argparse.Namespace) -> int:
    report = run_metrics(args.seq)
    if args.out:
        report.write_csv(args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(report.to_csv())
    return 0


def _cmd_sweep(args: argparse.Namespace, mux: bool) -> int:
    defaults = {"scenario": "mux"} if mux else None
    cfg = load_experiment_config(args.config, defaults=defaults)
    if mux and cfg.scenario != "mux":
        raise ConfigurationError("mux-ber requires scenario = mux")
    if not mux and cfg.scenario == "mux":
        raise ConfigurationError("use the mux-ber subcommand for scenario = mux")
    report = run_ber(cfg)
    report.write_csv(args.out)
    print(
        f"wrote {args.out}: {len(report.rows)} SNR points, "
        f"{cfg.trials} trials/point, {report.bits_per_trial} bit(s)/trial"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "optimize":
            return _cmd_optimize(args)
        if args.command == "metrics":
            return _cmd_metrics(args)
        if args.command == "ber":
            return _cmd_sweep(args, mux=False)
        return _cmd_sweep(args, mux=True)
    except (
        ConfigurationError,
        InvalidSequenceError,
        SequenceFormatError,
        UndersamplingError,
        KeyError,
        OSError,
    ) as exc:
        print(f"wakeform: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
