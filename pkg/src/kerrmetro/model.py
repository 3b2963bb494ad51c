"""Device parameters, reduced model coefficients and regime classification.

Two coupled flexural resonators with Duffing stiffening are described at the
device level by :class:`PhysicalParams`.  :func:`derive_model_params` maps them
onto the rotating-frame model used everywhere else: Kerr rates ``gamma`` and
``beta`` multiplying ``(a^dag a)^2`` and ``(b^dag b)^2``, amplitude damping
rates, and the beamsplitter strength ``kappa``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .errors import DomainError

#: Reduced Planck constant (J s), CODATA 2018.
HBAR = 1.054571817e-34

#: Relative mismatch between a supplied chi and the one implied by
#: (critical amplitude, Q) above which a warning is emitted.
CHI_CONSISTENCY_TOL = 0.10


def _require_positive(**values):
    for name, value in values.items():
        if value is None:
            continue
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f"{name} must be finite and > 0, got {value!r}")


def chi_from_critical_amplitude(a_c: float, q_factor: float) -> float:
    """Duffing coefficient from the bistability onset amplitude.

    chi = 2*sqrt(3) / (9 * a_c**2 * Q), in m^-2.
    """
    _require_positive(a_c=a_c, q_factor=q_factor)
    return 2.0 * math.sqrt(3.0) / (9.0 * a_c**2 * q_factor)


@dataclass(frozen=True)
class PhysicalParams:
    """Device-level description of the resonator pair (SI units).

    Both resonators share mass, frequency and quality factor.  Each one needs
    its Duffing coefficient either directly (``chi``) or through the critical
    amplitude; the ``_b`` fields default to the values of resonator a.

    ``geometry_factor`` multiplies the self terms of the capacitance expansion.
    It never enters the reduced model and is kept only for completeness.
    """

    length: float
    width: float
    mass: float
    omega: float
    gap: float
    capacitance: float
    bias_voltage: float
    q_factor: float
    geometry_factor: float = 1.0
    critical_amplitude: Optional[float] = None
    chi: Optional[float] = None
    critical_amplitude_b: Optional[float] = None
    chi_b: Optional[float] = None

    def __post_init__(self):
        _require_positive(
            length=self.length,
            width=self.width,
            mass=self.mass,
            omega=self.omega,
            gap=self.gap,
            capacitance=self.capacitance,
            bias_voltage=self.bias_voltage,
            geometry_factor=self.geometry_factor,
            critical_amplitude=self.critical_amplitude,
            critical_amplitude_b=self.critical_amplitude_b,
        )
        if not self.q_factor >= 1:
            raise DomainError(f"q_factor must be >= 1, got {self.q_factor!r}")
        for name in ("chi", "chi_b"):
            value = getattr(self, name)
            if value is not None and not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
        if self.chi is None and self.critical_amplitude is None:
            raise DomainError("either chi or critical_amplitude is required")

    def _resolve(self, chi, a_c, label):
        if a_c is None:
            return chi
        implied = chi_from_critical_amplitude(a_c, self.q_factor)
        if chi is None:
            return implied
        if abs(implied - chi) > CHI_CONSISTENCY_TOL * chi:
            warnings.warn(
                f"resonator {label}: chi={chi:.4g} m^-2 disagrees with "
                f"critical-amplitude value {implied:.4g} m^-2; using chi",
                stacklevel=3,
            )
        return chi

    @property
    def chi_a(self) -> float:
        """Duffing coefficient of resonator a, direct value preferred."""
        return self._resolve(self.chi, self.critical_amplitude, "a")

    @property
    def chi_b_resolved(self) -> float:
        chi = self.chi_b
        a_c = self.critical_amplitude_b
        if chi is None and a_c is None:
            return self.chi_a
        return self._resolve(chi, a_c, "b")


@dataclass(frozen=True)
class ModelParams:
    """Reduced model of the interferometer.

    Rates are in s^-1, ``dx`` in meters, ``t`` in seconds; ``n`` is the mean
    phonon number of the initial coherent state (``n = alpha0**2``).  A zero
    ``kappa`` or ``dx`` means "not specified" and only affects reporting.
    """

    gamma: float
    beta: float
    Gamma_a: float
    Gamma_b: float
    n: float
    t: float
    kappa: float = 0.0
    dx: float = 0.0

    def __post_init__(self):
        for name in ("gamma", "beta", "Gamma_a", "Gamma_b", "n", "t", "kappa", "dx"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")

    @property
    def pulse_duration(self) -> float:
        """Balanced beamsplitter pulse length pi/(4 kappa); inf without coupling."""
        if self.kappa == 0:
            return math.inf
        return math.pi / (4.0 * self.kappa)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "gamma": self.gamma,
            "beta": self.beta,
            "Gamma_a": self.Gamma_a,
            "Gamma_b": self.Gamma_b,
            "t": self.t,
            "kappa": self.kappa,
            "dx": self.dx,
        }


def ground_state_halfwidth(mass: float, omega: float) -> float:
    _require_positive(mass=mass, omega=omega)
    return math.sqrt(HBAR / (2.0 * mass * omega))


def derive_model_params(p: PhysicalParams, n: float, t: float) -> ModelParams:
    """Reduce device parameters to the rotating-frame model at (n, t)."""
    dx = ground_state_halfwidth(p.mass, p.omega)
    kerr = 0.75 * p.omega * dx**2
    kappa = p.capacitance * p.bias_voltage**2 / (2.0 * p.mass * p.omega * p.gap**2)
    damping = p.omega / p.q_factor
    return ModelParams(
        gamma=kerr * p.chi_a,
        beta=kerr * p.chi_b_resolved,
        Gamma_a=damping,
        Gamma_b=damping,
        n=n,
        t=t,
        kappa=kappa,
        dx=dx,
    )


@dataclass(frozen=True)
class RegimeThresholds:
    """Numerical reading of "much less than" / "much greater than"."""

    much_less: float = 0.1
    much_greater: float = 10.0


@dataclass(frozen=True)
class RegimeReport:
    """Which closed-form regimes apply at a parameter point.

    Every flag is recomputed from its margins and ``thresholds``, so the two
    can never disagree.
    """

    short_time_margin: float
    damping_ratio: float
    kerr_phase_rate: float
    decay_per_quantum: float
    kappa_over_omega: float
    kappa_t: float
    thresholds: RegimeThresholds = field(default_factory=RegimeThresholds)

    @property
    def short_time_valid(self) -> bool:
        return self.short_time_margin < self.thresholds.much_less

    @property
    def strong_damping_valid(self) -> bool:
        th = self.thresholds
        return (
            self.damping_ratio > th.much_greater
            and self.kerr_phase_rate < th.much_less
            and self.decay_per_quantum < th.much_less
        )

    @property
    def pulse_assumptions_valid(self) -> bool:
        th = self.thresholds
        return self.kappa_over_omega < th.much_less and self.kappa_t > th.much_greater

    def rows(self):
        """(name, margin, valid) triples for printing."""
        return [
            ("short_time n(gt)^2", self.short_time_margin, self.short_time_valid),
            ("strong_damping Gamma/(g sqrt n)", self.damping_ratio, self.strong_damping_valid),
            ("strong_damping g t", self.kerr_phase_rate, self.strong_damping_valid),
            ("strong_damping Gamma t/n", self.decay_per_quantum, self.strong_damping_valid),
            ("pulse kappa/omega", self.kappa_over_omega, self.pulse_assumptions_valid),
            ("pulse kappa t", self.kappa_t, self.pulse_assumptions_valid),
        ]


def _damping_ratio(Gamma, g, n):
    # Gamma/(g sqrt n); an undamped arm always fails, an arm without
    # nonlinearity places no constraint.
    if Gamma <= 0:
        return 0.0
    if g == 0 or n == 0:
        return math.inf
    return Gamma / (g * math.sqrt(n))


def classify_regime(
    mp: ModelParams, omega: float, thresholds: RegimeThresholds | None = None
) -> RegimeReport:
    """Evaluate the validity conditions of the approximate closed forms.

    Conditions for both arms are merged by taking the worst margin.  An arm
    with zero damping fails the strong-damping test even when its Kerr rate
    is zero, since nothing is being damped.
    """
    thresholds = thresholds or RegimeThresholds()
    n, t = mp.n, mp.t
    short = n * max(mp.gamma * t, mp.beta * t) ** 2

    ratio_a = _damping_ratio(mp.Gamma_a, mp.gamma, n)
    ratio_b = _damping_ratio(mp.Gamma_b, mp.beta, n)
    if n > 0:
        per_quantum = max(mp.Gamma_a, mp.Gamma_b) * t / n
    else:
        per_quantum = 0.0 if t == 0 else math.inf
    return RegimeReport(
        short_time_margin=short,
        damping_ratio=min(ratio_a, ratio_b),
        kerr_phase_rate=max(mp.gamma, mp.beta) * t,
        decay_per_quantum=per_quantum,
        kappa_over_omega=mp.kappa / omega,
        kappa_t=mp.kappa * t,
        thresholds=thresholds,
    )
