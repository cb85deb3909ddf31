"""``dualctl``: rotate circuit specs, run experiments, fit collapses.

Exit codes: 0 success, 2 configuration/input error, 3 abort rate above
the configured ceiling.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis
from .circuits import (
    SpecError,
    classify_gate,
    rotate_circuit_1d,
    rotate_circuit_2d,
    spec_from_text,
    spec_to_text,
)
from .experiments import (
    DEFAULTS,
    ConfigError,
    curves_from_records,
    read_csv,
    resolve_config,
    run_experiment,
    write_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT_RATE = 3

_RANGE_STEP = 0.05


def _parse_values(text: str) -> tuple:
    """Comma list '0.1,0.2' or inclusive range 'a..b' in steps of 0.05."""
    text = text.strip()
    if ".." in text:
        lo_s, _, hi_s = text.partition("..")
        lo, hi = float(lo_s), float(hi_s)
        if hi < lo:
            raise ConfigError(f"empty range {text!r}")
        n = int(round((hi - lo) / _RANGE_STEP))
        return tuple(round(lo + k * _RANGE_STEP, 10) for k in range(n + 1))
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_sizes(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _parse_periods(text: str):
    try:
        return int(text)
    except ValueError:
        return text


# ---------------------------------------------------------------------------
# rotate


def _coupling_label(c) -> str:
    if c.projector_sign:
        return f"proj({c.projector_sign:+d})"
    v = complex(c.value)
    if v.imag == 0:
        return f"{v.real:.6g}"
    return f"{v.real:.6g}{v.imag:+.6g}i"


def cmd_rotate(args) -> int:
    try:
        with open(args.spec, encoding="utf-8") as fh:
            spec = spec_from_text(fh.read())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpecError as exc:
        print(f"error: {args.spec}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if spec.is_2d:
            dual = rotate_circuit_2d(spec)
        else:
            dual = rotate_circuit_1d(spec, dual_sites=args.dual_sites)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{'layer':>6} {'kind':<14} {'coupling':<16} {'class':<12}")
    for i, lay in enumerate(dual.layers):
        for c, kind_label in _layer_couplings(lay):
            print(f"{i:>6} {lay.kind.value:<14} {c:<16} {kind_label:<12}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(spec_to_text(dual))
        print(f"wrote {args.out}")
    return EXIT_OK


def _layer_couplings(lay):
    from .circuits import Coupling

    seen = set()
    out = []
    proj = lay.proj if lay.proj is not None else np.zeros(len(lay.couplings), np.int8)
    for v, s in zip(lay.couplings, proj):
        key = (complex(v), int(s))
        if key in seen:
            continue
        seen.add(key)
        c = Coupling(0.0, int(s)) if s else Coupling(complex(v))
        cls, target, _ = classify_gate(c, lay.kind)
        label = cls.value if target is None else f"{cls.value}({target})"
        out.append((_coupling_label(c), label))
    return out


# ---------------------------------------------------------------------------
# run


def _run_overrides(args) -> dict:
    over: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            over.update(json.load(fh))
    if args.sizes is not None:
        over["sizes"] = _parse_sizes(args.sizes)
    if args.values is not None:
        over["values"] = _parse_values(args.values)
    if args.param_values is not None:
        over["values"] = _parse_values(args.param_values)
    if args.realizations is not None:
        over["realizations"] = args.realizations
        over["size_realizations"] = {}
    if args.seed is not None:
        over["base_seed"] = args.seed
    if args.periods is not None:
        over["periods"] = _parse_periods(args.periods)
    model: dict = dict(over.pop("model", {}))
    if args.zero_weight is not None:
        model["zero_weight"] = args.zero_weight
    if args.h_width_is_variance:
        model["width_is_variance"] = True
    if model:
        over["model"] = model
    return over


def cmd_run(args) -> int:
    try:
        cfg = resolve_config(args.experiment, **_run_overrides(args))
        run = run_experiment(cfg, workers=args.workers)
    except (ConfigError, SpecError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or f"{cfg.experiment}.csv"
    write_csv(out, run)
    print(f"wrote {out}: {len(run.records)} records, stats {run.stats}")
    if run.abort_rate > args.abort_ceiling:
        print(
            f"error: abort rate {run.abort_rate:.3f} exceeds ceiling "
            f"{args.abort_ceiling:.3f}",
            file=sys.stderr,
        )
        return EXIT_ABORT_RATE
    return EXIT_OK


# ---------------------------------------------------------------------------
# collapse


_PREFERRED_OBSERVABLES = ("entropy_ratio", "entropy_per_l", "entropy_density")


def cmd_collapse(args) -> int:
    try:
        records, _ = read_csv(args.csv)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    observable = args.observable
    if observable is None:
        present = {r["observable"] for r in records}
        observable = next((o for o in _PREFERRED_OBSERVABLES if o in present), None)
        if observable is None:
            print(f"error: no collapsible observable among {sorted(present)}",
                  file=sys.stderr)
            return EXIT_CONFIG
    try:
        curves = curves_from_records(records, observable)
        fit = analysis.collapse_fit(
            curves, mode=args.mode, n_boot=args.n_boot, seed=args.seed
        )
    except (ConfigError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"observable: {observable}")
    print(f"x_c  = {fit.x_c:.6g} +- {fit.x_c_err:.2g}")
    print(f"nu   = {fit.nu:.6g} +- {fit.nu_err:.2g}")
    print(f"residual = {fit.residual:.6g}  (bootstrap n={fit.n_boot}"
          f"{', low confidence' if fit.low_confidence else ''})")
    if args.out:
        lines = ["L,u,value"]
        for size, (x, y) in sorted(curves.items()):
            u = (np.asarray(x) - fit.x_c) * float(size) ** (1.0 / fit.nu)
            for ui, yi in zip(u, y):
                lines.append(f"{size},{ui:.12g},{yi:.12g}")
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualctl",
        description="Space-time rotated circuit toolkit: spec rotation, "
        "seeded experiment ensembles, scaling collapses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_rot = sub.add_parser("rotate", help="print and save the dual of a circuit spec")
    p_rot.add_argument("spec", help="circuit spec file")
    p_rot.add_argument("--out", help="write the dual spec here")
    p_rot.add_argument("--dual-sites", type=int, default=None,
                       help="dual chain length for 1D rotations")
    p_rot.set_defaults(func=cmd_rotate)

    p_run = sub.add_parser("run", help="run a registered experiment to CSV")
    p_run.add_argument("experiment", choices=sorted(DEFAULTS))
    p_run.add_argument("--config", help="JSON file overriding defaults")
    p_run.add_argument("--sizes", "--L", dest="sizes",
                       help="comma-separated system sizes")
    p_run.add_argument("--values", help="scan values: comma list or 'a..b'")
    p_run.add_argument("--lambda", "--p", "--j-x", "--alpha-h",
                       dest="param_values", metavar="VALUES",
                       help="alias for --values")
    p_run.add_argument("--realizations", type=int)
    p_run.add_argument("--seed", type=int, help="base seed")
    p_run.add_argument("--periods", help="period count or 'cL'/'cL2' rule")
    p_run.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: DUALCTL_WORKERS or 1)")
    p_run.add_argument("--zero-weight", choices=("abort", "keep"))
    p_run.add_argument("--h-width-is-variance", action="store_true",
                       help="treat the disorder width parameter as a variance")
    p_run.add_argument("--abort-ceiling", type=float, default=0.01)
    p_run.add_argument("--out", help="output CSV path")
    p_run.set_defaults(func=cmd_run)

    p_col = sub.add_parser("collapse", help="fit (x_c, nu) from a results CSV")
    p_col.add_argument("csv")
    p_col.add_argument("--mode", choices=("difference", "ratio"),
                       default="difference")
    p_col.add_argument("--observable")
    p_col.add_argument("--n-boot", type=int, default=100)
    p_col.add_argument("--seed", type=int, default=0)
    p_col.add_argument("--out", help="write rescaled curves here")
    p_col.set_defaults(func=cmd_collapse)

    p_spec = sub.add_parser("spectrum",
                            help="shortcut for 'run spectrum' over an alpha range")
    p_spec.add_argument("--alpha-h", dest="param_values", default="0..3",
                        metavar="RANGE")
    p_spec.add_argument("--alpha-j", type=float, default=None)
    p_spec.add_argument("--out", help="output CSV path")
    p_spec.set_defaults(func=_cmd_spectrum)
    return parser


def _cmd_spectrum(args) -> int:
    try:
        over: dict = {"values": _parse_values(args.param_values)}
        if args.alpha_j is not None:
            over["model"] = {"alpha_j": args.alpha_j}
        cfg = resolve_config("spectrum", **over)
        run = run_experiment(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or "spectrum.csv"
    write_csv(out, run)
    print(f"wrote {out}: {len(run.records)} records")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
