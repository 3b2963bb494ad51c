"""Output-quadrature statistics of the two-arm interferometer.

After the second beamsplitter pulse the measured quadratures are

    X+- = (a + a^dag +- (b + b^dag)) / sqrt(2)
    Y+- = -i (a - a^dag +- (b - b^dag)) / sqrt(2)

and, since the arms evolve independently between pulses, all their first and
second moments follow from the single-arm :class:`~kerrmetro.kerr.ModeMoments`.

The closed forms below share the phase convention of :mod:`kerrmetro.kerr`:
``<Y+->`` carries an overall minus sign relative to writing the arm phases as
``+(g t + ...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError
from .kerr import KerrPoint, ModeMoments, mode_moments
from .model import ModelParams


class Quadrature(str, Enum):
    X_PLUS = "X+"
    X_MINUS = "X-"
    Y_PLUS = "Y+"
    Y_MINUS = "Y-"

    @classmethod
    def parse(cls, text: str) -> "Quadrature":
        for q in cls:
            if q.value.lower() == str(text).strip().lower():
                return q
        raise DomainError(f"unknown quadrature {text!r}")

    @property
    def is_x(self) -> bool:
        return self in (Quadrature.X_PLUS, Quadrature.X_MINUS)


@dataclass(frozen=True)
class QuadratureStats:
    mean_x_plus: float
    mean_x_minus: float
    mean_y_plus: float
    mean_y_minus: float
    var_x_plus: float
    var_x_minus: float
    var_y_plus: float
    var_y_minus: float

    def mean(self, quad: Quadrature) -> float:
        return getattr(self, "mean_" + _SUFFIX[Quadrature(quad)])

    def variance(self, quad: Quadrature) -> float:
        return getattr(self, "var_" + _SUFFIX[Quadrature(quad)])

    def means(self) -> tuple[float, float, float, float]:
        return self.mean_x_plus, self.mean_x_minus, self.mean_y_plus, self.mean_y_minus

    def variances(self) -> tuple[float, float, float, float]:
        return self.var_x_plus, self.var_x_minus, self.var_y_plus, self.var_y_minus


_SUFFIX = {
    Quadrature.X_PLUS: "x_plus",
    Quadrature.X_MINUS: "x_minus",
    Quadrature.Y_PLUS: "y_plus",
    Quadrature.Y_MINUS: "y_minus",
}


def output_stats(a: ModeMoments, b: ModeMoments) -> QuadratureStats:
    """Combine the two arms into means and variances of X+-, Y+-.

    <X+-^2> = -1 + s_x(a) + s_x(b) +- 2 Re(first_a) Re(first_b), and the same
    with Im/s_y for Y.
    """
    if a.t is not None and b.t is not None and not math.isclose(a.t, b.t, rel_tol=1e-12, abs_tol=0.0):
        raise DomainError(f"arm moments refer to different times ({a.t} vs {b.t})")
    xa, xb = a.first.real, b.first.real
    ya, yb = a.first.imag, b.first.imag

    def var(second, mean):
        return second - mean * mean

    x_common = -1.0 + a.s_x + b.s_x
    y_common = -1.0 + a.s_y + b.s_y
    return QuadratureStats(
        mean_x_plus=xa + xb,
        mean_x_minus=xa - xb,
        mean_y_plus=ya + yb,
        mean_y_minus=ya - yb,
        # the cross terms cancel against the mean squares
        var_x_plus=var(x_common + 2 * xa * xb, xa + xb),
        var_x_minus=var(x_common - 2 * xa * xb, xa - xb),
        var_y_plus=var(y_common + 2 * ya * yb, ya + yb),
        var_y_minus=var(y_common - 2 * ya * yb, ya - yb),
    )


def stats_at(n, gamma, beta, Gamma_a, Gamma_b, t) -> QuadratureStats:
    """General damped statistics from raw parameters.

    Kerr rates may be negative here; finite differences step through zero.
    """
    a = mode_moments(KerrPoint(n, gamma, Gamma_a, t))
    b = mode_moments(KerrPoint(n, beta, Gamma_b, t))
    return output_stats(a, b)


def model_stats(mp: ModelParams) -> QuadratureStats:
    return stats_at(mp.n, mp.gamma, mp.beta, mp.Gamma_a, mp.Gamma_b, mp.t)


# --- closed forms ------------------------------------------------------------


def _undamped_arm(n, g, t):
    """(magnitude, phase) of one undamped arm's first moment."""
    mag = math.sqrt(n) * math.exp(-n * math.sin(g * t) ** 2)
    phase = g * t + 0.5 * n * math.sin(2.0 * g * t)
    return mag, phase


def _combine(mag_a, ph_a, mag_b, ph_b):
    xa, xb = mag_a * math.cos(ph_a), mag_b * math.cos(ph_b)
    ya, yb = -mag_a * math.sin(ph_a), -mag_b * math.sin(ph_b)
    return xa + xb, xa - xb, ya + yb, ya - yb


def means_no_damping(n, gamma, beta, t):
    """(<X+>, <X->, <Y+>, <Y->) without damping.

    <X+-> = sqrt(n) e^{-n(1 - cos 2 gamma t)/2} cos(gamma t + (n/2) sin 2 gamma t) +- (same, beta)
    <Y+-> = -[sqrt(n) e^{...} sin(...) +- (same, beta)]
    """
    _check_nonneg(n=n, t=t)
    return _combine(*_undamped_arm(n, gamma, t), *_undamped_arm(n, beta, t))


def second_moments_no_damping(n, gamma, beta, t):
    """(<X+^2>, <X-^2>, <Y+^2>, <Y-^2>) without damping, term by term."""
    _check_nonneg(n=n, t=t)
    gt, bt = gamma * t, beta * t

    def quartic(x):
        return 0.5 * n * math.exp(-n * math.sin(2.0 * x) ** 2) * math.cos(4.0 * x + 0.5 * n * math.sin(4.0 * x))

    envelope = n * math.exp(-n * (math.sin(gt) ** 2 + math.sin(bt) ** 2))
    diff = envelope * math.cos(gt - bt + 0.5 * n * (math.sin(2 * gt) - math.sin(2 * bt)))
    summ = envelope * math.cos(gt + bt + 0.5 * n * (math.sin(2 * gt) + math.sin(2 * bt)))
    self_terms = quartic(gt) + quartic(bt)
    x_plus = 1.0 + n + self_terms + diff + summ
    x_minus = 1.0 + n + self_terms - diff - summ
    y_plus = 1.0 + n - self_terms + diff - summ
    y_minus = 1.0 + n - self_terms - diff + summ
    return x_plus, x_minus, y_plus, y_minus


def stats_no_damping(n, gamma, beta, t) -> QuadratureStats:
    means = means_no_damping(n, gamma, beta, t)
    seconds = second_moments_no_damping(n, gamma, beta, t)
    return QuadratureStats(*means, *(s - m * m for s, m in zip(seconds, means)))


def means_short_time(n, gamma, beta, t):
    """Classical-interferometer limit: sqrt(n) cos(n gamma t) +- sqrt(n) cos(n beta t), etc."""
    _check_nonneg(n=n, t=t)
    root = math.sqrt(n)
    return _combine(root, n * gamma * t, root, n * beta * t)


def means_strong_damping(n, gamma, beta, Gamma_a, Gamma_b, t):
    """Means when Gamma >> g sqrt(n): each arm is
    sqrt(n) e^{-Gamma t/2} exp(-i (n g / Gamma)(1 - e^{-Gamma t}))."""
    _check_nonneg(n=n, t=t)
    if not (Gamma_a > 0 and Gamma_b > 0):
        raise DomainError("strong-damping forms need Gamma_a, Gamma_b > 0")

    def arm(g, Gamma):
        mag = math.sqrt(n) * math.exp(-0.5 * Gamma * t)
        return mag, n * g * -math.expm1(-Gamma * t) / Gamma

    return _combine(*arm(gamma, Gamma_a), *arm(beta, Gamma_b))


def stats_short_time(n, gamma, beta, t) -> QuadratureStats:
    """Short-time means with coherent-state (unit) variances."""
    return QuadratureStats(*means_short_time(n, gamma, beta, t), 1.0, 1.0, 1.0, 1.0)


def stats_strong_damping(n, gamma, beta, Gamma_a, Gamma_b, t) -> QuadratureStats:
    """Strong-damping means with variances fixed at the coherent-state value."""
    means = means_strong_damping(n, gamma, beta, Gamma_a, Gamma_b, t)
    return QuadratureStats(*means, 1.0, 1.0, 1.0, 1.0)


def _check_nonneg(**values):
    for name, value in values.items():
        if not value >= 0:
            raise DomainError(f"{name} must be >= 0, got {value!r}")
