"""Precision of estimating the Kerr phase ``gamma * t`` from one quadrature.

For a measured quadrature Z the single-shot uncertainty is

    delta(gamma t) = Delta Z / |d<Z>/d(gamma t)|

with ``t`` held fixed.  :func:`precision_general` evaluates this through the
full damped moment formulas; the two closed forms assume coherent-state
variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import linregress

from .errors import DomainError, FitError
from .interferometer import (
    Quadrature,
    QuadratureStats,
    stats_at,
    stats_no_damping,
    stats_short_time,
    stats_strong_damping,
)
from .model import ModelParams

#: |d<Z>/d(gamma t)| below this marks a fringe boundary.
DERIVATIVE_FLOOR = 1e-30


class Regime(str, Enum):
    GENERAL = "general"
    NO_DAMPING = "no_damping"
    STRONG_DAMPING = "strong_damping"
    SHORT_TIME = "short_time"

    @classmethod
    def parse(cls, text: str) -> "Regime":
        key = str(text).strip().lower().replace("-", "_")
        for r in cls:
            if r.value == key:
                return r
        raise DomainError(f"unknown regime {text!r}")


@dataclass(frozen=True)
class PrecisionPoint:
    """One precision evaluation.

    ``delta_gamma_t`` is ``None`` exactly when ``infinite`` is set, i.e. at a
    fringe boundary where the mean is stationary.
    """

    quadrature: Quadrature
    n: float
    gamma_t: float
    delta_gamma_t: Optional[float]
    derivative: float
    sigma: float
    regime: Regime
    infinite: bool = False

    @property
    def delta_or_inf(self) -> float:
        return math.inf if self.infinite else self.delta_gamma_t


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    stderr: float
    points_used: int


def default_step(n: float) -> float:
    """Finite-difference step in gamma*t: a thousandth of a fringe radian."""
    return 1e-3 / max(n, 1.0)


def _point(quad, n, gamma_t, derivative, sigma, regime, shots, zero=None):
    if zero is None:
        zero = abs(derivative) < DERIVATIVE_FLOOR
    if zero:
        return PrecisionPoint(quad, n, gamma_t, None, derivative, sigma, regime, True)
    delta = sigma / abs(derivative) / math.sqrt(shots)
    return PrecisionPoint(quad, n, gamma_t, delta, derivative, sigma, regime, False)


def stats_function(mp: ModelParams, regime: Regime) -> Callable[[float], QuadratureStats]:
    """Statistics as a function of the Kerr rate ``gamma`` of arm a."""
    regime = Regime(regime)
    if regime is Regime.GENERAL:
        return lambda g: stats_at(mp.n, g, mp.beta, mp.Gamma_a, mp.Gamma_b, mp.t)
    if regime is Regime.NO_DAMPING:
        return lambda g: stats_no_damping(mp.n, g, mp.beta, mp.t)
    if regime is Regime.SHORT_TIME:
        return lambda g: stats_short_time(mp.n, g, mp.beta, mp.t)
    return lambda g: stats_strong_damping(mp.n, g, mp.beta, mp.Gamma_a, mp.Gamma_b, mp.t)


def mean_derivative(quad, mp: ModelParams, step=None, regime=Regime.GENERAL) -> float:
    """Central difference of <Z> with respect to gamma*t at fixed t."""
    if mp.t <= 0:
        raise DomainError("derivative in gamma*t needs t > 0")
    quad = Quadrature(quad)
    step = default_step(mp.n) if step is None else step
    if not step > 0:
        raise DomainError(f"step must be > 0, got {step!r}")
    stats = stats_function(mp, regime)
    gt = mp.gamma * mp.t
    up = stats((gt + step) / mp.t).mean(quad)
    down = stats((gt - step) / mp.t).mean(quad)
    return (up - down) / (2.0 * step)


def precision_general(quad, mp: ModelParams, step: float | None = None, shots: int = 1) -> PrecisionPoint:
    """delta(gamma t) from the full damped moments.

    The derivative is a central difference over ``gamma t +- step``; the
    default step is ``1e-3 / n``, a small fraction of the fringe period.
    """
    quad = Quadrature(quad)
    sigma = math.sqrt(max(stats_at(mp.n, mp.gamma, mp.beta, mp.Gamma_a, mp.Gamma_b, mp.t).variance(quad), 0.0))
    derivative = mean_derivative(quad, mp, step)
    return _point(quad, mp.n, mp.gamma * mp.t, derivative, sigma, Regime.GENERAL, shots)


def _trig_zero(value, argument):
    return abs(value) <= 4.0 * np.finfo(float).eps * max(1.0, abs(argument))


def precision_no_damping(quad, n: float, gamma_t: float, shots: int = 1) -> PrecisionPoint:
    """1/(n^{3/2}|sin n gamma t|) for X, 1/(n^{3/2}|cos n gamma t|) for Y."""
    if not n > 0:
        raise DomainError(f"n must be > 0, got {n!r}")
    quad = Quadrature(quad)
    phase = n * gamma_t
    trig = math.sin(phase) if quad.is_x else math.cos(phase)
    # d/d(gamma t) of sqrt(n) cos(phase) and of -sqrt(n) sin(phase)
    derivative = -n**1.5 * trig
    return _point(quad, n, gamma_t, derivative, 1.0, Regime.NO_DAMPING, shots, _trig_zero(trig, phase))


def precision_strong_damping(quad, n: float, gamma: float, Gamma_a: float, t: float, shots: int = 1) -> PrecisionPoint:
    """Strong-damping precision.

    delta = Gamma t e^{Gamma t/2} / (n^{3/2} (1 - e^{-Gamma t}) |trig(phi)|)
    with phi = n gamma (1 - e^{-Gamma t}) / Gamma, sin for X and cos for Y.
    """
    if not (Gamma_a > 0 and t > 0):
        raise DomainError("strong-damping precision needs Gamma_a > 0 and t > 0")
    if not n > 0:
        raise DomainError(f"n must be > 0, got {n!r}")
    quad = Quadrature(quad)
    u = Gamma_a * t
    loss = -math.expm1(-u)
    phase = n * gamma * loss / Gamma_a
    trig = math.sin(phase) if quad.is_x else math.cos(phase)
    derivative = -n**1.5 * math.exp(-0.5 * u) * loss / u * trig
    return _point(quad, n, gamma * t, derivative, 1.0, Regime.STRONG_DAMPING, shots, _trig_zero(trig, phase))


def precision(quad, mp: ModelParams, regime=Regime.GENERAL, step=None, shots: int = 1) -> PrecisionPoint:
    """Dispatch to the general path or one of the closed forms."""
    regime = Regime(regime)
    if regime is Regime.GENERAL:
        return precision_general(quad, mp, step, shots)
    if regime in (Regime.NO_DAMPING, Regime.SHORT_TIME):
        point = precision_no_damping(quad, mp.n, mp.gamma * mp.t, shots)
        return PrecisionPoint(**{**point.__dict__, "regime": regime})
    return precision_strong_damping(quad, mp.n, mp.gamma, mp.Gamma_a, mp.t, shots)


def locate_fringe_boundaries(
    quad,
    n: float,
    t: float,
    Gamma: float,
    search_range: tuple[float, float],
    beta: float = 0.0,
    regime=Regime.GENERAL,
    samples_per_fringe: int = 64,
    xtol: float = 1e-13,
) -> list[float]:
    """Kerr rates gamma at which d<Z>/d(gamma t) vanishes.

    ``search_range`` is given as the nonlinear phase ``n gamma t`` (both ends
    included).  The derivative is sampled on a uniform grid, sign changes are
    bracketed and refined by Brent's method, and samples that are already
    zero are reported directly.  Both arms are damped at ``Gamma``.
    """
    lo, hi = search_range
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise DomainError(f"bad search range {search_range!r}")
    if not (n > 0 and t > 0):
        raise DomainError("need n > 0 and t > 0")
    quad = Quadrature(quad)
    scale = n * t  # phase per unit gamma

    def deriv(phase):
        mp_g = phase / scale
        mp = _SweepParams(n=n, gamma=mp_g, beta=beta, Gamma_a=Gamma, Gamma_b=Gamma, t=t)
        return mean_derivative(quad, mp, regime=regime)

    count = max(8, int(math.ceil((hi - lo) / (math.pi / 2) * samples_per_fringe)) + 1)
    phases = np.linspace(lo, hi, count)
    values = [deriv(p) for p in phases]
    peak = max(abs(v) for v in values) or 1.0
    floor = max(DERIVATIVE_FLOOR, 1e-13 * peak)

    roots = []
    for i, (p, v) in enumerate(zip(phases, values)):
        if abs(v) <= floor:
            roots.append(p)
            continue
        if i + 1 < count:
            w = values[i + 1]
            if abs(w) > floor and (v < 0) != (w < 0):
                roots.append(brentq(deriv, p, phases[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
    roots.sort()
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > 1e-9:
            merged.append(r)
    return [r / scale for r in merged]


@dataclass(frozen=True)
class _SweepParams:
    # ModelParams without the sign constraint on gamma (finite differences
    # around gamma = 0 need negative Kerr rates).
    n: float
    gamma: float
    beta: float
    Gamma_a: float
    Gamma_b: float
    t: float


def fit_scaling_exponent(points: Iterable) -> ScalingFit:
    """Least-squares line through (ln n, ln delta).

    ``points`` holds ``(n, delta)`` pairs or :class:`PrecisionPoint` objects.
    Infinite, missing and non-positive deltas are dropped.
    """
    xs, ys = [], []
    for item in points:
        if isinstance(item, PrecisionPoint):
            if item.infinite:
                continue
            n, delta = item.n, item.delta_gamma_t
        else:
            n, delta = item
        if delta is None or not (math.isfinite(delta) and delta > 0 and n > 0):
            continue
        xs.append(math.log(n))
        ys.append(math.log(delta))
    if len(xs) < 3:
        raise FitError(f"need at least 3 finite points, have {len(xs)}")
    if len(set(xs)) < 2:
        raise FitError("all points share the same n")
    res = linregress(xs, ys)
    return ScalingFit(float(res.slope), float(res.intercept), float(res.stderr), len(xs))


def log_grid(lo: float, hi: float, count: int) -> Sequence[float]:
    return list(np.logspace(math.log10(lo), math.log10(hi), count))
