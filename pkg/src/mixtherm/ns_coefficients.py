"""Exponential distribution family n_s(z) = A_s exp(-z/tau) and its coefficient algebra.

Covers the per-kind thermal factors a_a, the closed-form coefficients
A_s = prod s_a! a_a^{s_a}, the reduction relation linking n_{s-1_a} to a
momentum average of n_s, and the demonstration that Fermi/Bose single-particle
distributions cannot satisfy that relation for two kinds differing only in spin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

from . import kernels
from .core_types import MultiIndex, SpeciesSpec, Statistics
from .errors import NonPositiveTau, QuadratureFailure, ValidationError


def thermal_factor(species: SpeciesSpec, tau: float, hbar: float = 1.0, dim: int = 3) -> float:
    """a_a = (rho_a / kappa_a) (2 pi hbar^2 / (m_a tau))^(d/2)."""
    if not tau > 0:
        raise NonPositiveTau(f"tau must be positive, got {tau}")
    return species.density / species.kappa * (2.0 * math.pi * hbar**2 / (species.mass * tau)) ** (dim / 2.0)


@dataclass(frozen=True)
class ThermalFactor:
    factors: tuple

    @classmethod
    def from_species(cls, species: Sequence[SpeciesSpec], tau: float, hbar: float = 1.0,
                     dim: int = 3) -> "ThermalFactor":
        return cls(tuple(thermal_factor(sp, tau, hbar, dim) for sp in species))

    def __getitem__(self, a):
        return self.factors[a]

    def __len__(self):
        return len(self.factors)


def coefficient(s: MultiIndex, factors: ThermalFactor) -> float:
    """Closed form A_s = s_1! ... s_n! a_1^{s_1} ... a_n^{s_n} (uniform medium)."""
    if s.n != len(factors):
        raise ValidationError("multi-index and thermal factors differ in length")
    value = 1.0
    for c, a in zip(s.counts, factors.factors):
        value *= math.factorial(c) * a**c
    return value


def coefficient_by_recursion(s: MultiIndex, factors: ThermalFactor,
                             descent: Optional[Sequence[int]] = None) -> float:
    """A_s from repeated use of A_s = s_a a_a A_{s-1_a}, removing kinds in ``descent`` order.

    ``descent`` lists kind indices (0-based), one entry per particle removed;
    by default kinds are exhausted from the first to the last. A_0 = 1.
    """
    if descent is None:
        descent = [a for a, c in enumerate(s.counts) for _ in range(c)]
    if sorted(descent) != sorted(a for a, c in enumerate(s.counts) for _ in range(c)):
        raise ValidationError("descent must remove every particle exactly once")
    value = 1.0
    current = s
    for a in descent:
        value *= current[a] * factors[a]
        current = current.lowered(a)
    return value


@dataclass(frozen=True)
class NsFamily:
    """n_s(z) = A_s exp(-z/tau) with one tau shared by every multi-index."""

    tau: float
    factors: ThermalFactor

    def __post_init__(self):
        if not self.tau > 0:
            raise NonPositiveTau("tau must be positive")

    @classmethod
    def uniform(cls, species: Sequence[SpeciesSpec], tau: float, hbar: float = 1.0,
                dim: int = 3) -> "NsFamily":
        return cls(tau, ThermalFactor.from_species(species, tau, hbar, dim))

    def coefficient(self, s: MultiIndex) -> float:
        return coefficient(s, self.factors)

    def __call__(self, s: MultiIndex, z):
        z = np.asarray(z)
        if not np.iscomplexobj(z):
            z = z.astype(float)
        return self.coefficient(s) * np.exp(-z / self.tau)


def default_z_grid(tau: float, points: int = 64, extent: float = 10.0) -> np.ndarray:
    return np.linspace(0.0, extent * tau, points)


def _momentum_average(n_func: Callable, z: float, mass: float, scale: float, dim: int) -> float:
    """int n(z + p^2/2m) d^d p, with p = sqrt(2 m scale) x."""
    width = math.sqrt(2.0 * mass * scale)
    if dim == 3:
        jac, power = 4.0 * math.pi * width**3, 2
    elif dim == 1:
        jac, power = 2.0 * width, 0
    else:
        raise ValidationError("dimension must be 1 or 3")

    def f(x):
        return x**power * float(n_func(z + scale * x * x))

    val, err = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)
    if not math.isfinite(val) or (val != 0 and err > 1e-9 * abs(val)):
        raise QuadratureFailure(f"momentum average at z={z} did not converge")
    return jac * val


@dataclass
class ReductionReport:
    s: MultiIndex
    kind: int
    tau: float
    z_grid: np.ndarray
    reduced: np.ndarray  # quadrature of the momentum-averaged n_s
    target: np.ndarray  # n_{s-1_a}(z)
    residuals: np.ndarray
    max_residual: float
    closed_form_max_residual: Optional[float] = None
    quadrature_vs_closed: Optional[float] = None


def check_reduction(
    s: MultiIndex,
    a: int,
    species: Sequence[SpeciesSpec],
    tau: float,
    z_grid=None,
    hbar: float = 1.0,
    dim: int = 3,
    n_s: Optional[Callable] = None,
    n_lower: Optional[Callable] = None,
) -> ReductionReport:
    """Compare n_{s-1_a}(z) with kappa_a/(s_a (2 pi hbar)^d rho_a) int n_s(z + p^2/2m_a) d^d p.

    Without ``n_s``/``n_lower`` the exponential family built from ``species``
    and ``tau`` is used on both sides, and the Gaussian closed form of the
    momentum integral is reported alongside the quadrature.
    """
    if s[a] < 1:
        raise ValidationError(f"kind {a} has no particle to integrate out in {s}")
    sp = species[a]
    family = NsFamily.uniform(species, tau, hbar, dim)
    lower = s.lowered(a)
    exponential = n_s is None and n_lower is None
    if n_s is None:
        n_s = lambda z: family(s, z)  # noqa: E731
    if n_lower is None:
        n_lower = lambda z: family(lower, z)  # noqa: E731
    z_grid = default_z_grid(tau) if z_grid is None else np.asarray(z_grid, dtype=float)

    prefactor = sp.kappa / (s[a] * (2.0 * math.pi * hbar) ** dim * sp.density)
    reduced = np.array([prefactor * _momentum_average(n_s, z, sp.mass, tau, dim) for z in z_grid])
    target = np.array([float(n_lower(z)) for z in z_grid])
    residuals = np.abs(reduced - target) / np.abs(target)
    report = ReductionReport(s, a, tau, z_grid, reduced, target, residuals, float(residuals.max()))
    if exponential:
        gauss = (2.0 * math.pi * sp.mass * tau) ** (dim / 2.0)
        closed = prefactor * gauss * family(s, z_grid)
        report.closed_form_max_residual = float(np.max(np.abs(closed - target) / np.abs(target)))
        report.quadrature_vs_closed = float(np.max(np.abs(reduced - closed) / np.abs(closed)))
    return report


# -- incompatibility of Fermi/Bose single-particle distributions --------------

DISTRIBUTIONS = ("exponential", "fermi", "bose")


def _candidate(name: str, kappa: int, density: float, mass: float, temperature: float,
               hbar: float):
    """Single-particle n_1(z) of the named form, normalised to the kind's density.

    The normalisation is rho = kappa/(2 pi hbar)^3 int n_1(p^2/2m) d^3p.
    """
    scale = kappa * (2.0 * mass * temperature) ** 1.5 / (2.0 * math.pi**2 * hbar**3)
    y = density / scale
    if name == "exponential":
        amp = y * 4.0 / math.sqrt(math.pi)
        return (lambda z: amp * np.exp(-np.asarray(z, dtype=float) / temperature)), math.log(amp)
    stats = Statistics.parse(name)
    alpha = kernels.invert_density(y, stats)
    if stats is Statistics.FERMI:
        return (lambda z: special.expit(alpha - np.asarray(z, dtype=float) / temperature)), alpha

    def bose(z):
        with np.errstate(over="ignore"):
            return 1.0 / np.expm1(np.asarray(z, dtype=float) / temperature - alpha)

    return bose, alpha


def relative_variation(values) -> float:
    values = np.asarray(values, dtype=float)
    return float((values.max() - values.min()) / abs(values.mean()))


@dataclass
class IncompatibilityReport:
    distributions: tuple
    kappas: tuple
    densities: tuple
    degeneracy_params: tuple
    z_grid: np.ndarray
    ratio: np.ndarray  # candidate n_1^{(0,1)} / n_1^{(1,0)}
    variation: float
    implied_ratio: float  # kappa_1 rho_2 / (kappa_2 rho_1), forced by the two reductions
    map_ratio_variation: float  # ratio of the two reductions of one shared n_2
    notes: list = field(default_factory=list)

    @property
    def proportional(self) -> bool:
        return self.variation < 1e-10


def incompatibility_demo(
    dist_1: str,
    dist_2: str,
    mass: float = 1.0,
    kappas: tuple = (1, 2),
    densities: tuple = (0.1, 0.1),
    temperature: float = 1.0,
    z_grid=None,
    hbar: float = 1.0,
) -> IncompatibilityReport:
    """Test whether candidate single-particle distributions obey the forced proportionality.

    With m_1 = m_2 the two reductions of a common n_2^{(1,1)} differ only by the
    prefactors kappa_a/rho_a, so n_1^{(0,1)}(z) / n_1^{(1,0)}(z) must be the
    constant kappa_1 rho_2 / (kappa_2 rho_1). Kind 1 gets the form ``dist_1``
    and kind 2 the form ``dist_2``, each with its parameter fixed by its own
    density; the relative variation of their ratio over ``z_grid`` is reported.
    """
    for name in (dist_1, dist_2):
        if name not in DISTRIBUTIONS:
            raise ValidationError(f"unknown distribution {name!r}")
    z_grid = default_z_grid(temperature) if z_grid is None else np.asarray(z_grid, dtype=float)
    n_10, par_1 = _candidate(dist_1, kappas[0], densities[0], mass, temperature, hbar)
    n_01, par_2 = _candidate(dist_2, kappas[1], densities[1], mass, temperature, hbar)
    ratio = n_01(z_grid) / n_10(z_grid)

    # both reductions of one shared n_2 (here: shaped like kind 1's candidate)
    def shared(z):
        return n_10(z)

    avg = np.array([_momentum_average(shared, z, mass, temperature, 3) for z in z_grid])
    via_1 = kappas[0] / ((2.0 * math.pi * hbar) ** 3 * densities[0]) * avg
    via_2 = kappas[1] / ((2.0 * math.pi * hbar) ** 3 * densities[1]) * avg
    implied = kappas[0] * densities[1] / (kappas[1] * densities[0])
    return IncompatibilityReport(
        distributions=(dist_1, dist_2),
        kappas=tuple(kappas),
        densities=tuple(densities),
        degeneracy_params=(par_1, par_2),
        z_grid=z_grid,
        ratio=ratio,
        variation=relative_variation(ratio),
        implied_ratio=implied,
        map_ratio_variation=relative_variation(via_1 / via_2),
    )
