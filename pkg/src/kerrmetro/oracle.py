"""Brute-force reference: the single-mode master equation in a number basis.

    d rho/dt = -i g [(a^dag a)^2, rho] + (Gamma/2)(2 a rho a^dag - a^dag a rho - rho a^dag a)

Two independent integrators are provided.  ``"rk4"`` steps the full density
matrix with the classical fourth-order Runge-Kutta method.  ``"exact"`` uses
the fact that the generator never mixes the diagonals ``rho[m, m+k]``: each
diagonal is a bidiagonal linear system that is propagated with one matrix
exponential.  Neither path knows about the closed forms in :mod:`kerr`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import CutoffError, DomainError, OracleError
from .kerr import ModeMoments

TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-12


@dataclass
class DensityMatrix:
    """Density matrix in the truncated number basis ``|0>, ..., |dim-1>``."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 2 or self.data.shape[0] != self.data.shape[1]:
            raise DomainError(f"density matrix must be square, got {self.data.shape}")
        if self.data.shape[0] < 2:
            raise DomainError("cutoff must be >= 2")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def populations(self) -> np.ndarray:
        return self.data.diagonal().real.copy()

    def expect_a(self) -> complex:
        k = np.arange(1, self.dim)
        return complex(np.sum(np.sqrt(k) * np.diagonal(self.data, -1)))

    def expect_a2(self) -> complex:
        k = np.arange(2, self.dim)
        return complex(np.sum(np.sqrt(k * (k - 1.0)) * np.diagonal(self.data, -2)))

    def expect_number(self) -> float:
        return float(np.sum(np.arange(self.dim) * self.populations()))


@dataclass(frozen=True)
class OracleConfig:
    """Integrator settings.

    ``cutoff=None`` picks one with :func:`choose_cutoff`.  The RK4 step starts
    at ``step_scale / max(Gamma, |g| cutoff^2)`` and is halved until two
    successive results differ by less than ``step_tol``.
    """

    cutoff: Optional[int] = None
    tail_tol: float = 1e-12
    step_scale: float = 1e-2
    step_tol: float = 1e-9
    max_halvings: int = 6

    def __post_init__(self):
        if self.cutoff is not None and self.cutoff < 2:
            raise DomainError(f"cutoff must be >= 2, got {self.cutoff}")
        if not (self.tail_tol > 0 and self.step_scale > 0 and self.step_tol > 0):
            raise DomainError("tolerances must be > 0")


def choose_cutoff(amp: complex, tail_tol: float = 1e-12) -> int:
    """Smallest dimension whose Poisson tail is below ``tail_tol``, plus 20%."""
    if not tail_tol > 0:
        raise DomainError(f"tail_tol must be > 0, got {tail_tol!r}")
    mean = abs(amp) ** 2
    dim = max(1, math.floor(mean))
    while poisson.sf(dim - 1, mean) >= tail_tol:
        dim += 1
    if mean > 0:
        # walk back down in case the starting guess was already past the edge
        while dim > 1 and poisson.sf(dim - 2, mean) < tail_tol:
            dim -= 1
    return max(2, math.ceil(1.2 * dim))


def coherent_density(amp: complex, cutoff: int, tail_tol: float = 1e-12) -> DensityMatrix:
    """|amp><amp| truncated to ``cutoff`` levels and renormalized."""
    if cutoff < 2:
        raise DomainError(f"cutoff must be >= 2, got {cutoff}")
    mean = abs(amp) ** 2
    tail = poisson.sf(cutoff - 1, mean) if mean > 0 else 0.0
    if tail >= tail_tol:
        suggested = choose_cutoff(amp, tail_tol)
        raise CutoffError(
            f"cutoff {cutoff} leaves Poisson tail {tail:.3g} >= {tail_tol:.3g}; "
            f"use at least {suggested}",
            suggested=suggested,
        )
    k = np.arange(cutoff)
    if amp == 0:
        psi = np.zeros(cutoff, dtype=complex)
        psi[0] = 1.0
    else:
        log_mag = -0.5 * mean + k * math.log(abs(amp)) - 0.5 * gammaln(k + 1)
        psi = np.exp(log_mag) * np.exp(1j * k * np.angle(amp))
        psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def _generator_coefficients(dim, g, Gamma):
    k = np.arange(dim, dtype=float)
    diag = -1j * g * (k[:, None] ** 2 - k[None, :] ** 2) - 0.5 * Gamma * (k[:, None] + k[None, :])
    feed = np.zeros((dim, dim), dtype=complex)
    feed[:-1, :-1] = Gamma * np.sqrt(np.outer(k[1:], k[1:]))
    return np.ascontiguousarray(diag), feed


@numba.njit(cache=True)
def _apply_generator(rho, diag, feed, out):
    dim = rho.shape[0]
    for i in range(dim - 1):
        for j in range(dim - 1):
            out[i, j] = diag[i, j] * rho[i, j] + feed[i, j] * rho[i + 1, j + 1]
        out[i, dim - 1] = diag[i, dim - 1] * rho[i, dim - 1]
    for j in range(dim):
        out[dim - 1, j] = diag[dim - 1, j] * rho[dim - 1, j]


@numba.njit(cache=True)
def _rk4_run(rho0, diag, feed, h, steps):
    dim = rho0.shape[0]
    rho = rho0.copy()
    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    tmp = np.empty_like(rho)
    for _ in range(steps):
        _apply_generator(rho, diag, feed, k1)
        for i in range(dim):
            for j in range(dim):
                tmp[i, j] = rho[i, j] + 0.5 * h * k1[i, j]
        _apply_generator(tmp, diag, feed, k2)
        for i in range(dim):
            for j in range(dim):
                tmp[i, j] = rho[i, j] + 0.5 * h * k2[i, j]
        _apply_generator(tmp, diag, feed, k3)
        for i in range(dim):
            for j in range(dim):
                tmp[i, j] = rho[i, j] + h * k3[i, j]
        _apply_generator(tmp, diag, feed, k4)
        for i in range(dim):
            for j in range(dim):
                rho[i, j] += (h / 6.0) * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
    return rho


def _evolve_rk4(rho0, g, Gamma, t, cfg):
    dim = rho0.shape[0]
    diag, feed = _generator_coefficients(dim, g, Gamma)
    rate = max(Gamma, abs(g) * dim**2)
    steps = max(1, math.ceil(t * rate / cfg.step_scale)) if rate > 0 else 1
    previous = _rk4_run(rho0, diag, feed, t / steps, steps)
    for _ in range(cfg.max_halvings):
        steps *= 2
        current = _rk4_run(rho0, diag, feed, t / steps, steps)
        change = np.max(np.abs(current - previous))
        if change < cfg.step_tol:
            return current
        previous = current
    raise OracleError(
        f"RK4 did not converge to {cfg.step_tol:g} after {cfg.max_halvings} halvings "
        f"(last change {change:.3g})"
    )


def _evolve_exact(rho0, g, Gamma, t):
    dim = rho0.shape[0]
    out = np.zeros_like(rho0)
    m_all = np.arange(dim, dtype=float)
    for k in range(dim):
        m = m_all[: dim - k]
        rates = -1j * g * (m**2 - (m + k) ** 2) - 0.5 * Gamma * (2.0 * m + k)
        gen = np.diag(rates)
        if dim - k > 1:
            gen += np.diag(Gamma * np.sqrt((m[:-1] + 1.0) * (m[:-1] + k + 1.0)), 1)
        upper = np.diagonal(rho0, k)
        evolved = expm(gen * t) @ upper
        idx = np.arange(dim - k)
        out[idx, idx + k] = evolved
        if k:
            out[idx + k, idx] = evolved.conj()
    return out


def evolve_lindblad(
    rho: DensityMatrix,
    g: float,
    Gamma: float,
    t: float,
    cfg: OracleConfig | None = None,
    method: str = "rk4",
) -> DensityMatrix:
    """Propagate ``rho`` for time ``t`` under Kerr rate ``g`` and damping ``Gamma``.

    Raises :class:`CutoffError` when the top basis level carries more than
    ``cfg.tail_tol`` population (the truncation is then visible in the
    result) and :class:`OracleError` when the trace drifts by more than 1e-9.
    The state is never renormalized.
    """
    cfg = cfg or OracleConfig()
    if not (Gamma >= 0 and t >= 0 and math.isfinite(g)):
        raise DomainError("need finite g, Gamma >= 0 and t >= 0")
    _check_top_level(rho.data, cfg.tail_tol)
    if t == 0 or (g == 0 and Gamma == 0):
        data = rho.data.copy()
    elif method == "rk4":
        data = _evolve_rk4(rho.data, g, Gamma, t, cfg)
    elif method == "exact":
        data = _evolve_exact(rho.data, g, Gamma, t)
    else:
        raise DomainError(f"unknown method {method!r}")
    _check_top_level(data, cfg.tail_tol)
    drift = abs(np.trace(data) - np.trace(rho.data))
    if drift > TRACE_TOL:
        raise OracleError(f"trace drifted by {drift:.3g}")
    return DensityMatrix(data)


def _check_top_level(data, tail_tol):
    top = data[-1, -1].real
    if top > tail_tol:
        raise CutoffError(f"top-level population {top:.3g} exceeds {tail_tol:.3g}")


def mode_moments_from_density(
    rho: DensityMatrix, n: Optional[float] = None, t: Optional[float] = None
) -> ModeMoments:
    """Q-function moments from a density matrix.

    Antinormal ordering gives ``2<Re(alpha)^2>_Q = <a^dag a> + Re<a^2> + 1``
    (minus sign for the imaginary part) and ``sqrt(2) <alpha>_Q = sqrt(2) <a>``.
    ``n`` defaults to twice the mean phonon number, which is the input ``n``
    of an undamped arm.
    """
    number = rho.expect_number()
    a2 = rho.expect_a2().real
    first = math.sqrt(2.0) * rho.expect_a()
    if n is None:
        n = 2.0 * number
    return ModeMoments(first, number + a2 + 1.0, number - a2 + 1.0, n, t)


def arm_moments(
    n: float,
    g: float,
    Gamma: float,
    t: float,
    cfg: OracleConfig | None = None,
    method: str = "rk4",
) -> ModeMoments:
    """Oracle counterpart of :func:`kerr.mode_moments`: one arm from scratch."""
    cfg = cfg or OracleConfig()
    amp = math.sqrt(n / 2.0)
    cutoff = cfg.cutoff or choose_cutoff(amp, cfg.tail_tol)
    rho0 = coherent_density(amp, cutoff, cfg.tail_tol)
    rho = evolve_lindblad(rho0, g, Gamma, t, cfg, method)
    return mode_moments_from_density(rho, n=n, t=t)


def dump_csv(path, rho: DensityMatrix, moments: ModeMoments | None = None) -> None:
    """Write populations (and optionally moments) for debugging."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "population"])
        for k, p in enumerate(rho.populations()):
            writer.writerow([k, f"{p:.17g}"])
        if moments is not None:
            fh.write(
                f"# first={moments.first.real:.17g}{moments.first.imag:+.17g}j "
                f"s_x={moments.s_x:.17g} s_y={moments.s_y:.17g}\n"
            )
