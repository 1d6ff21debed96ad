"""Command-line front end: ``run``, ``sweep`` and ``demo``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .experiments import (
    DEFAULT_THRESHOLDS,
    DELTA_RANGES,
    HARNESS_MODE,
    gen_test_set,
    run_experiment,
    samples_to_csv,
    summarize_run,
    sweep,
)
from .fpe import C_MODE, K_MODE, ConfigError, EEConfig, confidence_interval, contains_zero, fpe_equal, fpe_literal
from .geometry import EXACT_MODE, Point2, line_through
from .softfp import to_report

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

# flag -> EEConfig field; values stay as text until the config parses them
_CONFIG_FLAGS = {
    "t_bits": "t_bits",
    "te_bits": "te_bits",
    "rthd": "rthd",
    "eez": "eez",
    "qeps": "qeps",
    "kmin": "k_min",
    "kmax": "k_max",
    "cmin": "c_min",
    "cmax": "c_max",
}


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _config_parent(with_rthd: bool = True) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("error-estimation constants")
    g.add_argument("--config", metavar="FILE", help="key = value file; flags override it")
    g.add_argument("--t-bits", metavar="N", help="significand bits of values (default 31)")
    g.add_argument("--te-bits", metavar="N", help="significand bits of error estimates (default 21)")
    if with_rthd:
        g.add_argument("--rthd", metavar="X", help="relative-error threshold (default 1e-3)")
    g.add_argument("--eez", metavar="X", help="zero-neighbourhood scale (default 1e-6)")
    g.add_argument("--qeps", metavar="X", help="perturbation of the c ratio (default 3e-10)")
    g.add_argument("--kmin", metavar="X", help="lower k bound of the confidence interval (default 0)")
    g.add_argument("--kmax", metavar="X", help="upper k bound (default 2)")
    g.add_argument("--cmin", metavar="X", help="lower c bound (default 0)")
    g.add_argument("--cmax", metavar="X", help="upper c bound (default 2)")
    return p


def _experiment_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("experiment")
    g.add_argument("--per-depth", type=int, default=100, metavar="N", help="problems per depth and location")
    g.add_argument("--depths", type=_int_list, default=[1, 2, 3], metavar="LIST", help="comma-separated, from 1,2,3")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--mode", choices=(EXACT_MODE, K_MODE, C_MODE), default=HARNESS_MODE,
                   help="parallel-line test during the iteration (default: exact zero determinant)")
    g.add_argument("-o", "--out", required=True, metavar="DIR", help="output directory")
    return p


def build_parser() -> argparse.ArgumentParser:
    config = _config_parent()
    experiment = _experiment_parent()
    parser = argparse.ArgumentParser(prog="errfloat", description="Floating point with tracked error estimates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log discarded problems")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[config, experiment], help="one experiment: samples, summary, manifest")
    run.add_argument("--thresholds", type=_float_list, default=list(DEFAULT_THRESHOLDS), metavar="LIST",
                     help="RTHD values for the constrained/ill-conditioned buckets")

    sw = sub.add_parser("sweep", parents=[_config_parent(with_rthd=False), experiment], help="summaries over a (T_e, RTHD) grid")
    sw.add_argument("--te", type=_int_list, default=[31, 21, 16], metavar="LIST")
    sw.add_argument("--rthd", dest="rthd_list", type=_float_list, default=list(DEFAULT_THRESHOLDS), metavar="LIST")

    demo = sub.add_parser("demo", parents=[config], help="equality and parallelism decisions on fixed inputs")
    demo.add_argument("--mode", choices=(K_MODE, C_MODE), default=K_MODE, help="interval used for decisions")
    return parser


def config_from_args(args: argparse.Namespace) -> EEConfig:
    base = EEConfig.from_file(args.config) if args.config else EEConfig()
    values = {field: getattr(args, flag) for flag, field in _CONFIG_FLAGS.items()
              if getattr(args, flag, None) is not None}
    return EEConfig.from_mapping(values, base)


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _manifest(args: argparse.Namespace, cfg: EEConfig, argv: Sequence[str], outputs: list[str], **extra) -> str:
    manifest = {
        "tool": "errfloat",
        "version": __version__,
        "command": ["errfloat", *argv],
        "config": cfg.to_dict(),
        "seed": args.seed,
        "per_depth": args.per_depth,
        "depths": args.depths,
        "mode": args.mode,
        "outputs": outputs,
        **extra,
    }
    return json.dumps(manifest, indent=2) + "\n"


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg = config_from_args(args)
    specs = gen_test_set(args.seed, args.per_depth, args.depths)
    run = run_experiment(specs, cfg, args.mode)
    if not run.samples:
        log.error("every problem was discarded; nothing to summarize")
        return EXIT_FAILURE
    summary = summarize_run(run, args.thresholds)
    out = _out_dir(args)
    _write(out / "samples.csv", samples_to_csv(run.samples))
    _write(out / "summary.json", summary.to_json())
    _write(out / "manifest.json", _manifest(args, cfg, argv, ["samples.csv", "summary.json"],
                                             thresholds=sorted(set(args.thresholds) | {cfg.rthd})))
    cell = summary.bucket(cfg.rthd).constrained
    print(f"{summary.n_problems} problems, {summary.n_failed} discarded, {summary.n_samples} samples")
    print(f"T={cfg.t_bits} T_e={cfg.te_bits} RTHD={cfg.rthd:g}: {cell.n_problems} constrained problems, "
          f"alpha={_fmt(summary.alpha)} beta={_fmt(summary.beta)}")
    print(f"wrote {out}")
    return EXIT_OK


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4g}"


def cell_name(te: int, rthd: float) -> str:
    return f"summary_te{te}_rthd{rthd:g}.json"


GRID_HEADER = ("te_bits", "rthd", "n_problems", "n_failed", "n_constrained_samples",
               "alpha", "alpha_lo", "alpha_hi", "beta", "beta_lo", "beta_hi")


def grid_csv(grid: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GRID_HEADER)
    for (te, rthd), s in grid.items():
        cell = s.bucket(rthd).constrained
        writer.writerow([te, repr(rthd), s.n_problems, s.n_failed, cell.n_samples,
                         repr(s.alpha), repr(cell.k.frac_outside_lo), repr(cell.k.frac_outside_hi),
                         repr(s.beta), repr(cell.c.frac_outside_lo), repr(cell.c.frac_outside_hi)])
    return buf.getvalue()


def cmd_sweep(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg = config_from_args(args)
    for te in args.te:
        cfg.replace(te_bits=te)  # validates every T_e before any work starts
    for rthd in args.rthd_list:
        cfg.replace(rthd=rthd)
    specs = gen_test_set(args.seed, args.per_depth, args.depths)
    grid = sweep(args.te, args.rthd_list, args.seed, cfg=cfg, mode=args.mode, specs=specs)
    out = _out_dir(args)
    names = []
    for (te, rthd), summary in grid.items():
        name = cell_name(te, rthd)
        _write(out / name, summary.to_json())
        names.append(name)
    _write(out / "grid.csv", grid_csv(grid))
    _write(out / "manifest.json", _manifest(args, cfg, argv, ["grid.csv", *names],
                                             te=args.te, rthd=args.rthd_list))
    for (te, rthd), s in grid.items():
        print(f"T_e={te:<3d} RTHD={rthd:<8g} alpha={_fmt(s.alpha)} beta={_fmt(s.beta)}")
    print(f"wrote {out}")
    return EXIT_OK


def _show(label: str, value, cfg: EEConfig, mode: str) -> None:
    iv = confidence_interval(value, cfg, mode)
    print(f"  {label} = {to_report(value.x)}  ee = {float(value.ee):.3e}  re_m = {value.re_m:.3e}")
    print(f"  {' ' * len(label)}   interval [{float(iv.lo):.17g}, {float(iv.hi):.17g}]")


def _equality_demo(title: str, a, b, cfg: EEConfig, mode: str) -> None:
    print(title)
    _show("a", a, cfg, mode)
    _show("b", b, cfg, mode)
    verdict = "equal" if fpe_equal(a, b, cfg, mode) else "not equal"
    print(f"  values identical: {a.x == b.x}; decision: {verdict}")


def _parallel_demo(title: str, p1, q1, p2, q2, cfg: EEConfig, mode: str) -> None:
    print(title)
    l1, l2 = line_through(p1, q1), line_through(p2, q2)
    det = l1.a * l2.b - l2.a * l1.b
    _show("D", det, cfg, mode)
    if contains_zero(det, cfg, mode):
        print("  decision: parallel (0 in interval of D)")
    else:
        print("  decision: intersecting")


def cmd_demo(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg = config_from_args(args)
    mode = args.mode

    def lit(text):
        return fpe_literal(text, cfg)

    print(f"T={cfg.t_bits} T_e={cfg.te_bits} RTHD={cfg.rthd:g} EEZ={cfg.eez:g} mode={mode}\n")
    # semi-major axis from the semi-minor axis and focal distance, against the
    # value it should equal; rounding leaves the two computed values apart
    a = (lit("1.4") * lit("1.4") + lit("1.47") * lit("1.47")).sqrt()
    _equality_demo("ellipse semiaxis: sqrt(1.4^2 + 1.47^2) vs 2.03", a, lit("2.03"), cfg, mode)
    print()
    _equality_demo("clearly distinct: 0.5 vs 0.5001", lit("0.5"), lit("0.5001"), cfg, mode)
    print()
    _parallel_demo(
        "exactly parallel: y = 0.5x and y = 0.5x + 1",
        Point2(lit("0"), lit("0")), Point2(lit("2"), lit("1")),
        Point2(lit("0"), lit("1")), Point2(lit("2"), lit("2")), cfg, mode,
    )
    print()
    # slope 0.3 reached two ways, so the coefficients carry rounding error
    three, tenth = lit("3"), lit("0.1")
    _parallel_demo(
        "parallel in exact arithmetic, inexact coefficients: slopes 3*0.1 and 0.3",
        Point2(lit("0"), lit("0")), Point2(lit("1"), three * tenth),
        Point2(lit("0"), lit("1")), Point2(lit("1"), lit("1.3")), cfg, mode,
    )
    print()
    _parallel_demo(
        "clearly intersecting: slopes 0.3 and 0.4",
        Point2(lit("0"), lit("0")), Point2(lit("1"), lit("0.3")),
        Point2(lit("0"), lit("1")), Point2(lit("1"), lit("1.4")), cfg, mode,
    )
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "demo": cmd_demo}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "per_depth", 1) < 1:
            raise UsageError("--per-depth must be >= 1")
        bad = sorted(set(getattr(args, "depths", ())) - set(DELTA_RANGES))
        if bad:
            raise UsageError(f"--depths must be drawn from {sorted(DELTA_RANGES)}, got {bad}")
        return _COMMANDS[args.command](args, argv)
    except (ConfigError, UsageError) as exc:
        parser.print_usage(sys.stderr)
        print(f"errfloat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ArithmeticError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
