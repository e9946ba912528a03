"""Command line front end for single runs and the sweep harness."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments
from .bcd import bcd_solve, evaluate_latency
from .channel import channels_for
from .config import ScenarioConfig, default_config, validate_config, with_seed


def _load_config(path: str | None) -> ScenarioConfig:
    if path is None:
        return default_config()
    return validate_config(ScenarioConfig.from_json(Path(path).read_text()))


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        experiments.write_csv(text, out)


def _all_converged(csv_text: str) -> bool:
    lines = [ln for ln in csv_text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        return True
    header = lines[0].split(",")
    col = header.index("converged")
    return all(ln.split(",")[col] == "1" for ln in lines[1:])


def _cmd_solve(args) -> int:
    cfg = with_seed(_load_config(args.config), args.seed)
    chans = channels_for(cfg)
    state, trace = bcd_solve(cfg, chans, fixed_power=args.fixed_power)
    snap = evaluate_latency(state, cfg, chans)
    if args.out is not None:
        trace.to_csv(args.out)
    print(f"mcl_s={snap.mcl!r} iterations={len(trace)} converged={trace.converged}")
    return 0 if trace.converged else 1


def _cmd_converge(args) -> int:
    cfg = _load_config(args.config)
    text = experiments.run_convergence(cfg, m_list=args.m, seeds=range(args.seeds),
                                       amplification_w=args.amp_mw * 1e-3,
                                       fixed_power=args.fixed_power)
    _emit(text, args.out)
    return 0 if _all_converged(text) else 1


def _cmd_sweep_m(args) -> int:
    cfg = _load_config(args.config)
    text = experiments.sweep_m(cfg, m_list=args.m,
                               p_tot_list_w=[p * 1e-3 for p in args.p_tot_mw],
                               seeds=range(args.seeds), variants=args.variant,
                               fixed_power=args.fixed_power)
    _emit(text, args.out)
    return 0 if _all_converged(text) else 1


def _cmd_sweep_loc(args) -> int:
    cfg = _load_config(args.config)
    text = experiments.sweep_location(cfg, x_ris_list=args.x, seeds=range(args.seeds),
                                      variants=args.variant,
                                      fixed_power=args.fixed_power)
    _emit(text, args.out)
    return 0 if _all_converged(text) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arismec",
        description="Latency minimization for an amplifying-surface-aided "
                    "edge computing system.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds_default=20):
        p.add_argument("--config", help="scenario JSON (defaults to the reference scenario)")
        p.add_argument("--seeds", type=int, default=seeds_default,
                       help="number of Monte-Carlo seeds (0..N-1)")
        p.add_argument("--out", help="output CSV path (stdout if omitted)")
        p.add_argument("--fixed-power", action="store_true",
                       help="pin transmit powers at the per-user cap")

    p = sub.add_parser("solve", help="single scenario run, trace CSV out")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--fixed-power", action="store_true")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("converge", help="per-iteration traces over element counts")
    common(p)
    p.add_argument("--m", type=int, nargs="+", default=[8, 16, 32])
    p.add_argument("--amp-mw", type=float, default=10.0,
                   help="pinned amplification budget in mW")
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("sweep-m", help="final latency versus element count")
    common(p)
    p.add_argument("--m", type=int, nargs="+", default=[4, 8, 12, 16, 20])
    p.add_argument("--p-tot-mw", type=float, nargs="+", default=[10.0, 20.0])
    p.add_argument("--variant", nargs="+", choices=experiments.VARIANTS,
                   default=list(experiments.VARIANTS))
    p.set_defaults(func=_cmd_sweep_m)

    p = sub.add_parser("sweep-loc", help="final latency versus surface x-coordinate")
    common(p)
    p.add_argument("--x", type=float, nargs="+",
                   default=[150.0, 190.0, 230.0, 270.0])
    p.add_argument("--variant", nargs="+", choices=experiments.VARIANTS,
                   default=["active"])
    p.set_defaults(func=_cmd_sweep_loc)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
