"""Command line entry point: ``tabsim {regress,hetero,bits,mc}``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .device import OffsetScheme
from .experiments import (
    TASKS,
    ExperimentConfig,
    bitdepth_sweep,
    heterogeneity_study,
    load_config,
    mismatch_mc,
    run_regression,
)

DEFAULT_BITS = (1, 4, 6, 8, 10, 11, 12, 13, 16, 24)


def _int_list(s: str) -> list[int]:
    return [int(t) for t in s.split(",") if t.strip()]


def _span(s: str) -> tuple[float, float]:
    parts = s.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected lo,hi")
    return float(parts[0]), float(parts[1])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--task", choices=sorted(TASKS))
    common.add_argument("--neurons", type=int, help="hidden neuron count L")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--sigma-vos", type=float, help="offset-voltage mismatch sigma (V)")
    common.add_argument("--offset-span", type=_span, help="reference voltage span lo,hi (V)")
    common.add_argument("--ridge", type=float, help="Tikhonov term for the weight solve")
    common.add_argument("--timing", action="store_true", help="include wall-clock seconds in the JSON report")

    p = argparse.ArgumentParser(prog="tabsim", description="Trainable analogue block simulator")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("regress", parents=[common], help="train one chip on a regression task")
    r.add_argument("--bits", type=int, help="quantize output weights to this many bits")
    sub.add_parser("hetero", parents=[common], help="heterogeneity study")
    b = sub.add_parser("bits", parents=[common], help="output-weight bit-depth sweep")
    b.add_argument("--bits", type=_int_list, default=list(DEFAULT_BITS), help="comma-separated widths")
    m = sub.add_parser("mc", parents=[common], help="mismatch Monte Carlo over chips")
    m.add_argument("--bits", type=int, help="quantize output weights to this many bits")
    m.add_argument("--chips", type=int, default=20, help="number of simulated chips")
    return p


def config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.task is not None:
        cfg = replace(cfg, task=replace(cfg.task, name=args.task))
    if args.neurons is not None:
        cfg = replace(cfg, L=args.neurons)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    if args.sigma_vos is not None:
        cfg = replace(cfg, mismatch=replace(cfg.mismatch, sigma_Vos=args.sigma_vos))
    if args.offset_span is not None:
        cfg = replace(cfg, offsets=OffsetScheme.uniform_span(*args.offset_span))
    if args.ridge is not None:
        cfg = replace(cfg, ridge=args.ridge)
    if args.command in ("regress", "mc") and args.bits is not None:
        cfg = replace(cfg, quant_bits=args.bits)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "regress":
            rep = run_regression(cfg, args.timing)
        elif args.command == "hetero":
            rep = heterogeneity_study(cfg, args.timing)
        elif args.command == "bits":
            rep = bitdepth_sweep(cfg, args.bits, args.timing)
        else:
            rep = mismatch_mc(cfg, args.chips, args.timing)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"tabsim: error: {exc}", file=sys.stderr)
        return 1
    print(
        f"{rep.experiment} {cfg.task.name}: L={cfg.L} train_nrmse={rep.train_nrmse:.4g} "
        f"test_nrmse={rep.test_nrmse:.4g} rank={rep.rank} capacity={rep.capacity} "
        f"({rep.wall_seconds:.2f}s) -> {rep.path('report')}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
