"""Command line entry point: ``qomekit {evolve,sweep,scaling,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .bath import BathSpec, SpectralDensity
from .harness import (
    ConfigError,
    RunConfig,
    ScalingConfig,
    ScalingFitError,
    SweepConfig,
    load_config,
    run_config_to_dict,
    run_scaling,
    run_single,
    run_sweep,
    with_overrides,
)


def _grid(text: str) -> tuple[int, int]:
    try:
        a, t = text.lower().split("x")
        return int(a), int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like NxM, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config document")
    p.add_argument("--bath", choices=("ohmic", "jc"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--lamb-shift", choices=("on", "off"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qomekit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="single Redfield / QOME / ULE comparison run")
    _add_common(p)

    p = sub.add_parser("sweep", help="(alpha, T) sweep with per-cell threshold histograms")
    _add_common(p)
    p.add_argument("--grid", type=_grid, help="alpha x T grid size, e.g. 10x10")
    p.add_argument("--threshold", type=float)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("scaling", help="full vs secular-masked eigenvalue deviation against g")
    _add_common(p)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--skip-scaling", action="store_true")
    return parser


def _lamb(args) -> bool | None:
    return None if args.lamb_shift is None else args.lamb_shift == "on"


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config)["run"] if args.config else RunConfig()
    bath = cfg.bath
    if args.bath and args.bath != bath.spectral.kind:
        bath = replace(bath, spectral=replace(bath.spectral, kind=args.bath))
    if _lamb(args) is not None:
        bath = replace(bath, lamb_shift_enabled=_lamb(args))
    return replace(cfg, bath=bath)


def cmd_evolve(args) -> int:
    cfg = _run_config(args)
    out = args.out or Path("runs/evolve")
    res = run_single(cfg, out)
    (out / "config.json").write_text(json.dumps(run_config_to_dict(cfg), indent=2, sort_keys=True) + "\n")
    print(f"D_QO-RE(t_f) = {res.d_qo_re:.6g}")
    print(f"D_UL-RE(t_f) = {res.d_ul_re:.6g}")
    print(f"wrote {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)["sweep"] if args.config else SweepConfig()
    n_a, n_t = args.grid if args.grid else (None, None)
    cfg = with_overrides(
        cfg,
        n_alpha=n_a,
        n_T=n_t,
        seed=args.seed,
        threshold=args.threshold,
        lamb_shift=_lamb(args),
        baths=(args.bath,) if args.bath else None,
        workers=args.workers,
    )
    out = args.out or Path("runs/sweep")
    res = run_sweep(cfg, out)
    for kind, s in res.summary["baths"].items():
        print(
            f"{kind}: count(D_QO<{cfg.threshold:g})={s['count_qo_below']} "
            f"count(D_UL<{cfg.threshold:g})={s['count_ul_below']} "
            f"median D_QO={s['median_d_qo_re']:.4g} median D_UL={s['median_d_ul_re']:.4g}"
        )
    print(f"wrote {out}")
    return 0


def cmd_scaling(args) -> int:
    cfg = ScalingConfig()
    if args.config:
        run = load_config(args.config)["run"]
        cfg = replace(cfg, model=run.model, bath=run.bath)
    bath = cfg.bath
    if args.bath:
        bath = BathSpec(SpectralDensity(args.bath, bath.spectral.alpha, bath.spectral.cutoff, bath.spectral.gamma_width),
                        bath.temperature, bath.coupling, bath.lamb_shift_enabled)
    if _lamb(args) is not None:
        bath = replace(bath, lamb_shift_enabled=_lamb(args))
    cfg = replace(cfg, bath=bath)
    out = args.out or Path("runs/scaling")
    rep = run_scaling(cfg, out)
    print(f"fitted slope {rep.slope:.4f} (required >= {rep.min_slope})")
    print(f"wrote {out}")
    return 0 if rep.passed else 1


def cmd_verify(args) -> int:
    from .checks import run_all

    results = run_all(include_scaling=not args.skip_scaling)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"evolve": cmd_evolve, "sweep": cmd_sweep, "scaling": cmd_scaling, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ScalingFitError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
