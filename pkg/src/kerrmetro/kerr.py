"""Closed-form statistics of a damped Kerr oscillator.

A single mode starts in the coherent state of amplitude ``alpha0/sqrt(2)``
(one arm after a balanced beamsplitter) and evolves under
``H = hbar*g*(a^dag a)^2`` with zero-temperature amplitude damping at rate
``Gamma``.  Everything here is expressed in dimensionless quadrature units.

Phase convention: the first moment rotates as ``exp(-i(g t + n D_2 / 2))``,
which is what the Lindblad evolution of ``<a>`` and the Q-function series
below both produce.  Conjugating (``g -> -g``) flips the sign of every
``Im``/``Y`` mean and leaves all second moments and precisions unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import poisson

from .errors import DomainError, SeriesTruncationError

# Below this |z| the relative-exponential is evaluated from its Taylor series.
_SERIES_RADIUS = 1e-4


@dataclass(frozen=True)
class KerrPoint:
    """One arm's evolution parameters.

    ``g`` is the Kerr rate of this arm (``gamma`` or ``beta``); it may be
    negative, which models a softening nonlinearity.
    """

    n: float
    g: float
    Gamma: float
    t: float

    def __post_init__(self):
        for name in ("n", "Gamma", "t"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
        if not math.isfinite(self.g):
            raise DomainError(f"g must be finite, got {self.g!r}")


@dataclass(frozen=True)
class ModeMoments:
    """Q-function moments of one arm.

    first
        sqrt(2) * integral(alpha * Q); equals sqrt(2) * <a>.
    s_x, s_y
        2 * integral(Re(alpha)^2 Q) and 2 * integral(Im(alpha)^2 Q).  These
        are antinormally ordered, so a coherent state has
        ``s_x = 1 + Re(first)**2``.
    n_total
        The shared input phonon number, kept for bookkeeping.
    t
        Evolution time the moments refer to, if known.
    """

    first: complex
    s_x: float
    s_y: float
    n_total: float
    t: Optional[float] = None


def _one_minus_exp(u, w):
    """Return (Re, Im) of 1 - exp(-(u + i w)) without cancellation."""
    decay = math.exp(-u)
    re = -math.expm1(-u) + 2.0 * decay * math.sin(0.5 * w) ** 2
    im = decay * math.sin(w)
    return re, im


def cr_dr(r: int, g: float, Gamma: float, t: float) -> tuple[float, float]:
    """Damped Kerr phase integrals ``C_r`` and ``D_r``.

    ``C_r + i D_r = i r g * integral_0^t exp(-(Gamma + i r g) s) ds``, which
    is the same pair as the explicit trigonometric expressions

        C_r = [1 - e^{-Gt} cos(rgt) - (G/rg) e^{-Gt} sin(rgt)] / (1 + (G/rg)^2)
        D_r = [G/rg + e^{-Gt} sin(rgt) - (G/rg) e^{-Gt} cos(rgt)] / (1 + (G/rg)^2)

    but stays finite for ``g = 0`` and ``Gamma = 0``.  ``C_r`` is even and
    ``D_r`` is odd in ``g``, exactly, in floating point.
    """
    if r not in (2, 4):
        raise DomainError(f"r must be 2 or 4, got {r!r}")
    if not (Gamma >= 0 and t >= 0):
        raise DomainError(f"Gamma and t must be >= 0, got Gamma={Gamma!r}, t={t!r}")
    u = Gamma * t
    w = r * g * t
    if w == 0:
        return 0.0, 0.0
    norm = u * u + w * w
    if math.sqrt(norm) < _SERIES_RADIUS:
        z = complex(u, w)
        rel = 1.0 - z / 2.0 + z * z / 6.0 - z**3 / 24.0 + z**4 / 120.0
        val = 1j * w * rel
        return val.real, val.imag
    a, b = _one_minus_exp(u, w)
    c = w * (a * w - b * u) / norm
    d = w * (a * u + b * w) / norm
    return c, d


def first_moment(kp: KerrPoint) -> complex:
    """sqrt(2) * <a> for one arm: ``sqrt(n) e^{-(Gt + nC_2)/2} e^{-i(gt + nD_2/2)}``."""
    if kp.n == 0:
        return 0j
    c2, d2 = cr_dr(2, kp.g, kp.Gamma, kp.t)
    log_mag = 0.5 * math.log(kp.n) - 0.5 * (kp.Gamma * kp.t + kp.n * c2)
    phase = -(kp.g * kp.t + 0.5 * kp.n * d2)
    return math.exp(log_mag) * complex(math.cos(phase), math.sin(phase))


def quadrature_second_moments(kp: KerrPoint) -> tuple[float, float]:
    """Antinormally ordered second moments ``(s_x, s_y)`` of one arm.

    s = 1 + (n/2) e^{-Gt} +/- (n/2) e^{-Gt - nC_4/2} cos(4gt + nD_4/2),
    upper sign for the real part.  The oscillating term is ``Re <a^2>``.
    """
    if kp.n == 0:
        return 1.0, 1.0
    c4, d4 = cr_dr(4, kp.g, kp.Gamma, kp.t)
    u = kp.Gamma * kp.t
    base = 0.5 * kp.n * math.exp(-u)
    log_osc = math.log(kp.n) - math.log(2.0) - u - 0.5 * kp.n * c4
    osc = math.exp(log_osc) * math.cos(4.0 * kp.g * kp.t + 0.5 * kp.n * d4)
    return 1.0 + base + osc, 1.0 + base - osc


def mode_moments(kp: KerrPoint) -> ModeMoments:
    s_x, s_y = quadrature_second_moments(kp)
    return ModeMoments(first_moment(kp), s_x, s_y, kp.n, kp.t)


# --- Q function -------------------------------------------------------------


def _rel_exp(z: np.ndarray) -> np.ndarray:
    """(1 - exp(-z)) / z, elementwise, with the z -> 0 limit."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < _SERIES_RADIUS
    zs = z[small]
    out[small] = 1.0 - zs / 2.0 + zs * zs / 6.0 - zs**3 / 24.0
    zl = z[~small]
    out[~small] = -np.expm1(-zl) / zl
    return out


def series_order(alpha_abs: float, alpha0: float, tail_tol: float) -> int:
    """Largest p (and q) kept in the double series at ``|alpha|``.

    Starts from mean + 10 standard deviations + 20 of the Poisson weights
    ``x**p / p!`` with ``x = |alpha| alpha0 / sqrt(2)`` and grows until the
    neglected weight is below ``tail_tol``.
    """
    x = alpha_abs * abs(alpha0) / math.sqrt(2.0)
    p_max = math.ceil(x + 10.0 * math.sqrt(x) + 20.0)
    while 2.0 * poisson.sf(p_max, x) >= tail_tol:
        p_max += max(1, int(math.sqrt(x)))
    return p_max


def q_function(
    alpha,
    alpha0: float,
    g: float,
    Gamma: float,
    t: float,
    tail_tol: float = 1e-14,
    max_terms: int = 2000,
) -> np.ndarray:
    """Husimi Q function of one arm at the points ``alpha`` (array-like).

    Evaluates the double series in ``p, q`` over
    ``(alpha^* alpha0/sqrt2)^p (alpha alpha0/sqrt2)^q f^{(p+q)/2} / (p! q!)``
    with ``f = exp(-Gamma t - 2 i g t (p - q))``.  The per-term factor
    ``exp[-n (f + i delta) / (2 (1 + i delta))]`` is rewritten as
    ``exp[-(n/2)(1 - Gamma t (1 - e^{-z}) / z)]`` with
    ``z = (Gamma + 2 i g (p - q)) t``, which is the same quantity for
    ``Gamma > 0`` and has the right limit (``1``) at ``Gamma = 0``.
    """
    if not alpha0 >= 0:
        raise DomainError(f"alpha0 must be >= 0, got {alpha0!r}")
    if not tail_tol > 0:
        raise DomainError(f"tail_tol must be > 0, got {tail_tol!r}")
    if not (Gamma >= 0 and t >= 0):
        raise DomainError("Gamma and t must be >= 0")
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    shape = alpha.shape
    alpha = alpha.ravel()

    p_max = series_order(float(np.max(np.abs(alpha), initial=0.0)), alpha0, tail_tol)
    if p_max > max_terms:
        raise SeriesTruncationError(
            f"Q series needs {p_max} terms per index (max_terms={max_terms})"
        )

    n = alpha0**2
    u = Gamma * t
    half_decay = math.exp(-0.5 * u)
    x = np.conj(alpha) * alpha0 / math.sqrt(2.0)
    y = alpha * alpha0 / math.sqrt(2.0)

    # U[p] = x^p e^{-p u/2} e^{-i g t p^2} / p!, scaled by e^{-|alpha|^2/2}
    # (and likewise V with +i g t q^2) so the product carries e^{-|alpha|^2}.
    orders = np.arange(p_max + 1)
    U = np.empty((p_max + 1, alpha.size), dtype=complex)
    V = np.empty_like(U)
    U[0] = V[0] = np.exp(-0.5 * np.abs(alpha) ** 2)
    for p in range(1, p_max + 1):
        U[p] = U[p - 1] * x * half_decay / p
        V[p] = V[p - 1] * y * half_decay / p
    kerr_phase = g * t * orders.astype(float) ** 2
    U *= np.exp(-1j * kerr_phase)[:, None]
    V *= np.exp(1j * kerr_phase)[:, None]

    ks = np.arange(-p_max, p_max + 1)
    z = (Gamma + 2j * g * ks) * t
    decay_factor = np.exp(-0.5 * n * (1.0 - u * _rel_exp(z)))

    total = np.zeros(alpha.size, dtype=complex)
    for k, factor in zip(ks, decay_factor):
        if k >= 0:
            diag = np.sum(U[k:] * V[: p_max + 1 - k], axis=0)
        else:
            diag = np.sum(U[: p_max + 1 + k] * V[-k:], axis=0)
        total += factor * diag
    return (total.real / math.pi).reshape(shape)


def q_value(
    alpha: complex,
    alpha0: float,
    g: float,
    Gamma: float,
    t: float,
    tail_tol: float = 1e-14,
    max_terms: int = 2000,
) -> float:
    """Scalar form of :func:`q_function`."""
    return float(q_function(alpha, alpha0, g, Gamma, t, tail_tol, max_terms)[0])
