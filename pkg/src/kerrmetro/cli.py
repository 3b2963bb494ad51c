"""Command-line interface.

Subcommands: ``params``, ``moments``, ``precision``, ``oracle-check`` and
``figdata``.  Exit codes: 0 success, 2 configuration or usage error, 3 a
requested fit is impossible, 4 the oracle failed or its cutoff was too small.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import REFERENCE_CONFIG, load_config, model_params, physical_params
from .errors import ConfigError, DomainError, FitError, OracleError
from .estimation import Regime, fit_scaling_exponent, precision
from .interferometer import (
    Quadrature,
    stats_at,
    stats_no_damping,
    stats_short_time,
    stats_strong_damping,
)
from .model import ModelParams, classify_regime, derive_model_params
from .oracle import OracleConfig, arm_moments
from .kerr import KerrPoint, mode_moments

log = logging.getLogger("kerrmetro")

EXIT_OK, EXIT_USAGE, EXIT_FIT, EXIT_ORACLE = 0, 2, 3, 4

SWEEP_VARS = ("n", "gamma", "Gamma", "t")
QUAD_ORDER = [Quadrature.X_PLUS, Quadrature.X_MINUS, Quadrature.Y_PLUS, Quadrature.Y_MINUS]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepSpec:
    var: str
    lo: float
    hi: float
    count: int
    scale: str = "lin"

    def __post_init__(self):
        if self.var not in SWEEP_VARS:
            raise UsageError(f"sweep variable must be one of {', '.join(SWEEP_VARS)}")
        if self.count < 2:
            raise UsageError("sweep count must be >= 2")
        if not self.lo < self.hi:
            raise UsageError("sweep needs MIN < MAX")
        if self.scale not in ("lin", "log"):
            raise UsageError("sweep scale must be lin or log")
        if self.scale == "log" and self.lo <= 0:
            raise UsageError("log sweeps need MIN > 0")

    @classmethod
    def parse(cls, text: str) -> "SweepSpec":
        parts = text.split(":")
        if len(parts) != 5:
            raise UsageError(f"--sweep expects VAR:MIN:MAX:COUNT:{{lin|log}}, got {text!r}")
        var, lo, hi, count, scale = parts
        try:
            return cls(var, float(lo), float(hi), int(count), scale)
        except ValueError:
            raise UsageError(f"bad number in --sweep {text!r}") from None

    def values(self) -> list[float]:
        if self.scale == "log":
            return list(np.logspace(math.log10(self.lo), math.log10(self.hi), self.count))
        return list(np.linspace(self.lo, self.hi, self.count))


def with_value(mp: ModelParams, var: str, value: float) -> ModelParams:
    if var == "Gamma":
        return dataclasses.replace(mp, Gamma_a=value, Gamma_b=value)
    return dataclasses.replace(mp, **{var: value})


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


# --- regime selection ----------------------------------------------------------


def moments_regime(mp: ModelParams, omega: float, requested: str) -> Regime:
    if requested != "auto":
        return Regime.parse(requested)
    report = classify_regime(mp, omega)
    if report.strong_damping_valid and mp.Gamma_a > 0 and mp.Gamma_b > 0:
        return Regime.STRONG_DAMPING
    if mp.Gamma_a == 0 and mp.Gamma_b == 0:
        return Regime.NO_DAMPING
    return Regime.GENERAL


def precision_regime(mp: ModelParams, omega: float, requested: str) -> Regime:
    if requested != "auto":
        return Regime.parse(requested)
    report = classify_regime(mp, omega)
    if report.strong_damping_valid and mp.Gamma_a > 0:
        return Regime.STRONG_DAMPING
    if mp.Gamma_a == 0 and mp.Gamma_b == 0 and report.short_time_valid:
        return Regime.NO_DAMPING
    return Regime.GENERAL


def regime_stats(mp: ModelParams, regime: Regime):
    if regime is Regime.GENERAL:
        return stats_at(mp.n, mp.gamma, mp.beta, mp.Gamma_a, mp.Gamma_b, mp.t)
    if regime is Regime.NO_DAMPING:
        return stats_no_damping(mp.n, mp.gamma, mp.beta, mp.t)
    if regime is Regime.SHORT_TIME:
        return stats_short_time(mp.n, mp.gamma, mp.beta, mp.t)
    return stats_strong_damping(mp.n, mp.gamma, mp.beta, mp.Gamma_a, mp.Gamma_b, mp.t)


# --- output ----------------------------------------------------------------------


def header_comment(command: str, values: dict, extra: dict) -> str:
    params = " ".join(f"{k}={fmt(values[k])}" for k in sorted(values))
    flags = " ".join(f"{k}={v}" for k, v in sorted(extra.items()) if v is not None)
    return f"# kerrmetro {__version__} {command} {params} {flags}".rstrip() + "\n"


def render_csv(comment: str, header: list[str], rows: list[list], trailer: str = "") -> str:
    buf = io.StringIO()
    buf.write(comment)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    buf.write(trailer)
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _map(func, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def _quads(text: str) -> list[Quadrature]:
    if text == "all":
        return list(QUAD_ORDER)
    return [Quadrature.parse(text)]


def _context(args):
    values = dict(REFERENCE_CONFIG) if args.config is None else load_config(args.config)
    base = model_params(values)
    omega = values.get("omega", math.inf)
    return values, base, omega


def _flags(args, *names):
    return {name: getattr(args, name, None) for name in names}


# --- subcommands -------------------------------------------------------------


def cmd_params(args) -> int:
    values = dict(REFERENCE_CONFIG) if args.config is None else load_config(args.config)
    device = physical_params(values)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        derived = derive_model_params(device, values.get("n", 0.0), values.get("t", 0.0))
        chi_a = device.chi_a
        effective = model_params(values)
    for w in {str(w.message): w for w in caught}.values():
        print(f"warning: {w.message}", file=sys.stderr)
    report = classify_regime(effective, device.omega)

    rows = [
        ["dx", "m", derived.dx, effective.dx],
        ["chi", "m^-2", chi_a, chi_a],
        ["gamma", "s^-1", derived.gamma, effective.gamma],
        ["beta", "s^-1", derived.beta, effective.beta],
        ["Gamma_a", "s^-1", derived.Gamma_a, effective.Gamma_a],
        ["Gamma_b", "s^-1", derived.Gamma_b, effective.Gamma_b],
        ["kappa", "s^-1", derived.kappa, effective.kappa],
        ["pulse_duration", "s", derived.pulse_duration, effective.pulse_duration],
        ["n", "", derived.n, effective.n],
        ["t", "s", derived.t, effective.t],
    ]
    lines = [f"{'quantity':<16}{'unit':<7}{'derived':>24}{'effective':>24}"]
    for name, unit, d, e in rows:
        lines.append(f"{name:<16}{unit:<7}{d:>24.6g}{e:>24.6g}")
    lines.append("")
    lines.append(f"{'condition':<34}{'margin':>14}  valid")
    for name, margin, ok in report.rows():
        lines.append(f"{name:<34}{margin:>14.4g}  {'yes' if ok else 'no'}")
    print("\n".join(lines))

    if args.out:
        csv_rows = [[name, unit, d, e] for name, unit, d, e in rows]
        csv_rows += [[name, "", margin, "yes" if ok else "no"] for name, margin, ok in report.rows()]
        text = render_csv(
            header_comment("params", values, {}), ["quantity", "unit", "derived", "effective"], csv_rows
        )
        emit(text, args.out)
    return EXIT_OK


def _points(base, sweep):
    if sweep is None:
        return [base]
    return [with_value(base, sweep.var, v) for v in sweep.values()]


def cmd_moments(args) -> int:
    values, base, omega = _context(args)
    sweep = SweepSpec.parse(args.sweep) if args.sweep else None
    quads = _quads(args.quad)

    def evaluate(mp):
        regime = moments_regime(mp, omega, args.regime)
        stats = regime_stats(mp, regime)
        return [
            [mp.n, mp.gamma, mp.beta, mp.Gamma_a, mp.Gamma_b, mp.t, q.value, stats.mean(q), stats.variance(q), regime.value]
            for q in quads
        ]

    rows = [row for block in _map(evaluate, _points(base, sweep), args.threads) for row in block]
    rows.sort(key=_row_key)
    header = ["n", "gamma", "beta", "Gamma_a", "Gamma_b", "t", "quad", "mean", "variance", "regime"]
    flags = _flags(args, "sweep", "quad", "regime")
    emit(render_csv(header_comment("moments", {**values, **base.as_dict()}, flags), header, rows), args.out)
    return EXIT_OK


def _row_key(row):
    # quadrature, damping, then the swept coordinates
    return (QUAD_ORDER.index(Quadrature(row[6])), row[3], row[4], row[0], row[1], row[2], row[5])


PRECISION_HEADER = [
    "quad", "n", "gamma", "beta", "Gamma_a", "Gamma_b", "t", "gamma_t", "delta", "derivative", "sigma", "regime",
]
FIT_HEADER = ["quad", "Gamma_a", "slope", "intercept", "stderr", "points_used"]


def precision_rows(points, quads, regime_name, omega, threads):
    def evaluate(mp):
        regime = precision_regime(mp, omega, regime_name)
        out = []
        for q in quads:
            p = precision(q, mp, regime)
            out.append([
                q.value, mp.n, mp.gamma, mp.beta, mp.Gamma_a, mp.Gamma_b, mp.t,
                p.gamma_t, p.delta_or_inf, p.derivative, p.sigma, p.regime.value,
            ])
        return out

    rows = [row for block in _map(evaluate, points, threads) for row in block]
    rows.sort(key=lambda r: (QUAD_ORDER.index(Quadrature(r[0])), r[5], r[1], r[2], r[6]))
    return rows


def fit_rows(rows):
    """One scaling fit per (quadrature, damping) group of precision rows."""
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r[0], r[4]), []).append((r[1], r[8]))
    fits = []
    for (quad, Gamma_a), pts in sorted(groups.items(), key=lambda kv: (QUAD_ORDER.index(Quadrature(kv[0][0])), kv[0][1])):
        fit = fit_scaling_exponent(pts)
        fits.append([quad, Gamma_a, fit.slope, fit.intercept, fit.stderr, fit.points_used])
    return fits


def _fit_trailer(fits):
    buf = io.StringIO()
    buf.write("# fit: least squares of ln(delta) against ln(n)\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIT_HEADER)
    for row in fits:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def cmd_precision(args) -> int:
    values, base, omega = _context(args)
    sweep = SweepSpec.parse(args.sweep) if args.sweep else None
    if args.fit and sweep is not None and sweep.var != "n":
        raise UsageError("--fit needs an n sweep")
    rows = precision_rows(_points(base, sweep), _quads(args.quad), args.regime, omega, args.threads)
    flags = _flags(args, "sweep", "quad", "regime", "fit")
    comment = header_comment("precision", {**values, **base.as_dict()}, flags)
    trailer = ""
    status = EXIT_OK
    if args.fit:
        try:
            trailer = _fit_trailer(fit_rows(rows))
        except FitError as exc:
            print(f"error: fit impossible: {exc}", file=sys.stderr)
            status = EXIT_FIT
    emit(render_csv(comment, PRECISION_HEADER, rows, trailer), args.out)
    return status


ORACLE_GRID = {
    "n": (1.0, 4.0, 9.0, 16.0),
    "gt": (0.01, 0.1, 0.5),
    "Gt": (0.0, 0.5, 2.0),
}
ORACLE_REL_TOL = 1e-6
ORACLE_ABS_FLOOR = 1e-9
PATH_TOL = 1e-9


def moment_errors(analytic, reference):
    """Largest relative error over first, s_x, s_y with an absolute floor."""
    worst = 0.0
    for a, b in (
        (analytic.first, reference.first),
        (analytic.s_x, reference.s_x),
        (analytic.s_y, reference.s_y),
    ):
        err = abs(a - b)
        worst = max(worst, err / max(abs(b), ORACLE_ABS_FLOOR / ORACLE_REL_TOL))
    return worst


def moment_difference(a, b):
    return max(abs(a.first - b.first), abs(a.s_x - b.s_x), abs(a.s_y - b.s_y))


def oracle_grid_point(n, gt, Gt, cfg, paths=("exact", "rk4")):
    """Compare analytic and oracle moments at one grid point (t = 1)."""
    analytic = mode_moments(KerrPoint(n, gt, Gt, 1.0))
    results = {p: arm_moments(n, gt, Gt, 1.0, cfg, method=p) for p in paths}
    rel = max(moment_errors(analytic, m) for m in results.values())
    path_gap = moment_difference(results["exact"], results["rk4"]) if len(results) == 2 else 0.0
    revival = None
    if Gt == 0:
        amp2 = n / 2.0
        expected = math.sqrt(amp2) * math.exp(-amp2 * (1.0 - math.cos(2.0 * gt)))
        got = abs(next(iter(results.values())).first) / math.sqrt(2.0)
        revival = abs(got - expected)
    return rel, path_gap, revival


def cmd_oracle_check(args) -> int:
    cfg = OracleConfig(cutoff=args.cutoff)
    paths = ("exact", "rk4") if args.paths == "both" else (args.paths,)
    grid = [(n, gt, Gt) for n in ORACLE_GRID["n"] for gt in ORACLE_GRID["gt"] for Gt in ORACLE_GRID["Gt"]]
    failures = 0
    worst = 0.0
    try:
        results = _map(lambda p: oracle_grid_point(*p, cfg, paths), grid, args.threads)
    except OracleError as exc:
        print(f"error: oracle failed: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    lines = []
    for (n, gt, Gt), (rel, gap, revival) in zip(grid, results):
        ok = rel <= ORACLE_REL_TOL and gap <= PATH_TOL and (revival is None or revival <= 1e-8)
        failures += not ok
        worst = max(worst, rel)
        extra = f" revival_err={revival:.2e}" if revival is not None else ""
        lines.append(
            f"{'PASS' if ok else 'FAIL'} n={n:g} gt={gt:g} Gt={Gt:g} "
            f"max_rel_err={rel:.2e} path_gap={gap:.2e}{extra}"
        )
    lines.append(f"{'PASS' if not failures else 'FAIL'} overall: {len(grid) - failures}/{len(grid)} points, max_rel_err={worst:.2e}")
    text = "\n".join(lines) + "\n"
    emit(text, args.out)
    return EXIT_OK if not failures else EXIT_ORACLE


def _figure_model(values) -> ModelParams:
    """Caption parameters (n = 1e7, beta = 0, t = 1e-3 s) unless the config
    sets them."""
    return ModelParams(
        gamma=values.get("gamma", 1e-4),
        beta=values.get("beta", 0.0),
        Gamma_a=0.0,
        Gamma_b=0.0,
        n=values.get("n", 1e7),
        t=values.get("t", 1e-3),
    )


FIG_DAMPING = {
    2: [470.0 * k for k in range(21)],
    3: [470.0 * k for k in range(21)],
    4: [0.0, 4700.0],
    5: [0.0, 470.0, 4700.0],
}


def cmd_figdata(args) -> int:
    values = dict(REFERENCE_CONFIG) if args.config is None else load_config(args.config)
    base = _figure_model(values)
    fig = args.figure
    regime = "general" if args.regime == "auto" else args.regime
    quads = [Quadrature.X_PLUS, Quadrature.Y_PLUS] if args.quad == "all" else _quads(args.quad)
    flags = {"figure": fig, "regime": regime}
    comment = header_comment("figdata", {**values, **base.as_dict()}, flags)
    scale = base.n * base.t
    if fig in (2, 3):
        phases = np.linspace(0.0, 10.0, 201)
        points = [
            dataclasses.replace(base, gamma=p / scale, Gamma_a=G, Gamma_b=G)
            for G in FIG_DAMPING[fig] for p in phases
        ]

        def evaluate(mp):
            stats = regime_stats(mp, Regime.parse(regime))
            return [
                [mp.n, mp.gamma, mp.beta, mp.Gamma_a, mp.t, mp.n * mp.gamma * mp.t, q.value,
                 stats.mean(q), abs(stats.mean(q)), stats.variance(q), regime]
                for q in quads
            ]

        rows = [r for block in _map(evaluate, points, args.threads) for r in block]
        rows.sort(key=lambda r: (QUAD_ORDER.index(Quadrature(r[6])), r[3], r[5]))
        header = ["n", "gamma", "beta", "Gamma", "t", "phase", "quad", "mean", "abs_mean", "variance", "regime"]
        emit(render_csv(comment, header, rows), args.out)
        return EXIT_OK
    if fig == 4:
        phases = np.linspace(0.0, 2.0 * math.pi, 401)
        points = [
            dataclasses.replace(base, gamma=p / scale, Gamma_a=G, Gamma_b=G)
            for G in FIG_DAMPING[4] for p in phases
        ]
        rows = precision_rows(points, quads, regime, math.inf, args.threads)
        emit(render_csv(comment, PRECISION_HEADER, rows), args.out)
        return EXIT_OK
    # figure 5: n sweep at fixed gamma, nonlinear phase n gamma t <= 1
    ns = np.logspace(5.0, 7.0, 21)
    points = [
        dataclasses.replace(base, n=float(n), Gamma_a=G, Gamma_b=G)
        for G in FIG_DAMPING[5] for n in ns
    ]
    rows = precision_rows(points, quads, regime, math.inf, args.threads)
    try:
        trailer = _fit_trailer(fit_rows(rows))
    except FitError as exc:
        print(f"error: fit impossible: {exc}", file=sys.stderr)
        emit(render_csv(comment, PRECISION_HEADER, rows), args.out)
        return EXIT_FIT
    emit(render_csv(comment, PRECISION_HEADER, rows, trailer), args.out)
    return EXIT_OK


# --- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kerrmetro", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value parameter file (default: reference device)")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--threads", type=int, default=1, metavar="N")
    common.add_argument("--seed", type=int, help="accepted for interface stability; nothing is random")
    common.add_argument("-v", "--verbose", action="store_true")

    evaluation = argparse.ArgumentParser(add_help=False)
    evaluation.add_argument("--sweep", metavar="VAR:MIN:MAX:COUNT:{lin|log}")
    evaluation.add_argument("--quad", default="all", type=str.lower, choices=["x+", "x-", "y+", "y-", "all"])
    evaluation.add_argument(
        "--regime", default="auto", choices=["auto", "general", "no-damping", "strong-damping", "short-time"]
    )

    p = sub.add_parser("params", parents=[common], help="derived model parameters and regime flags")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("moments", parents=[common, evaluation], help="output quadrature means and variances")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("precision", parents=[common, evaluation], help="estimation precision delta(gamma t)")
    p.add_argument("--fit", action="store_true", help="append log-log scaling fits (needs an n sweep)")
    p.set_defaults(func=cmd_precision)

    p = sub.add_parser("oracle-check", parents=[common], help="analytic moments vs Fock-space integration")
    p.add_argument("--cutoff", type=int, help="force the number-basis dimension")
    p.add_argument("--paths", default="both", choices=["both", "exact", "rk4"])
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("figdata", parents=[common], help="data behind the reference figures")
    p.add_argument("figure", type=int, choices=[2, 3, 4, 5])
    p.add_argument("--quad", default="all", type=str.lower, choices=["x+", "x-", "y+", "y-", "all"])
    p.add_argument(
        "--regime", default="auto", choices=["auto", "general", "no-damping", "strong-damping", "short-time"]
    )
    p.set_defaults(func=cmd_figdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleError as exc:
        print(f"error: oracle failed: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except FitError as exc:
        print(f"error: fit impossible: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
