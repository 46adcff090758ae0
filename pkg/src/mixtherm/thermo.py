"""Equation of state of uniform mixtures: ideal tau, energy, pressure and the tau(theta, rho) PDE.

Conventions (V = 1 unless given): rho_a = rho * x_a with fixed fractions x_a,
ordered-pair double sums over kinds with g_ab = g_ba, natural units.

The ideal-gas limit uses the standard quantum-gas normalisation

    rho_a = kappa_a (2 m_a theta)^{3/2} / (2 pi^2 hbar^3) * G_0(alpha_a)
    E/V   = sum_a kappa_a (2 m_a theta)^{3/2} theta / (2 pi^2 hbar^3) * G_1(alpha_a)
    tau   = (2/3) E / N

with G_k the x-form integrals of :mod:`mixtherm.kernels`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from . import kernels
from .core_types import (
    CorrelationModel,
    MixtureState,
    PairPotential,
    SpeciesSpec,
    Statistics,
    build_mixture,
    pair_key,
)
from .errors import (
    AnchorNotClassical,
    BoseSaturation,
    DomainError,
    MissingCorrelation,
    QuadratureFailure,
    StiffIntegration,
    ValidationError,
)

RADIAL_RTOL = 1e-12


def density_scale(species: SpeciesSpec, theta: float, hbar: float = 1.0) -> float:
    """kappa (2 m theta)^{3/2} / (2 pi^2 hbar^3): density per unit G_0."""
    return species.kappa * (2.0 * species.mass * theta) ** 1.5 / (2.0 * math.pi**2 * hbar**3)


# -- ideal gas ---------------------------------------------------------------

@dataclass(frozen=True)
class IdealSolution:
    alphas: tuple
    tau: float
    theta: float
    rho: float
    densities: tuple
    labels: tuple = ()

    def tau_from_alphas(self, species: Sequence[SpeciesSpec], hbar: float = 1.0) -> float:
        """Re-evaluate tau = (2/3) E/N directly from the stored alphas."""
        energy = 0.0
        for sp, a in zip(species, self.alphas):
            energy += density_scale(sp, self.theta, hbar) * self.theta * kernels.g1(a, sp.statistics)
        return 2.0 * energy / (3.0 * self.rho)

    @property
    def classical_correction(self) -> float:
        """Bound on the O(e^alpha) departure of tau/theta from 1."""
        return max(math.exp(a) for a in self.alphas)


def solve_ideal(mixture: MixtureState, species: Sequence[SpeciesSpec],
                hbar: float = 1.0, rtol: float = 1e-10) -> IdealSolution:
    """Degeneracy parameters alpha_a and the ideal-gas tau at the mixture's (theta, rho)."""
    if len(species) != len(mixture.fractions):
        raise ValidationError("species list and mixture composition differ in length")
    theta, rho = mixture.temperature, mixture.total_density
    alphas = []
    weighted = 0.0
    for sp, frac, rho_a in zip(species, mixture.fractions, mixture.densities):
        y = rho_a / density_scale(sp, theta, hbar)
        try:
            a = kernels.invert_density(y, sp.statistics, rtol)
        except BoseSaturation as exc:
            raise BoseSaturation(f"species {sp.label!r}: {exc}", species=sp.label,
                                 supremum=exc.supremum) from None
        alphas.append(a)
        weighted += frac * kernels.kinetic_ratio(a, sp.statistics, rtol)
    return IdealSolution(tuple(alphas), theta * weighted, theta, rho, mixture.densities,
                         tuple(sp.label for sp in species))


def solve_ideal_batch(fractions: Sequence[float], species: Sequence[SpeciesSpec], theta, rho,
                      hbar: float = 1.0, rtol: float = 1e-10):
    """Vectorised :func:`solve_ideal` over broadcast arrays ``theta`` and ``rho``.

    Returns ``(tau, alphas)`` where ``alphas`` has a leading species axis.
    """
    theta, rho = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(rho, dtype=float))
    shape = theta.shape
    th, rh = theta.ravel(), rho.ravel()
    if np.any(th <= 0) or np.any(rh <= 0):
        raise ValidationError("theta and rho must be positive")
    weighted = np.zeros_like(th)
    alphas = []
    for sp, frac in zip(species, fractions):
        scale = sp.kappa * (2.0 * sp.mass * th) ** 1.5 / (2.0 * math.pi**2 * hbar**3)
        y = frac * rh / scale
        try:
            a = kernels.invert_density_batch(y, sp.statistics, rtol)
        except BoseSaturation as exc:
            raise BoseSaturation(f"species {sp.label!r}: {exc}", species=sp.label,
                                 supremum=exc.supremum) from None
        g0v, g1v = kernels.g_moments_batch(a, sp.statistics)
        weighted += frac * 2.0 * g1v / (3.0 * g0v)
        alphas.append(a.reshape(shape))
    return (th * weighted).reshape(shape), np.array(alphas)


# -- pair bookkeeping ---------------------------------------------------------

def _index(items, what):
    table = {}
    for item in items or ():
        key = pair_key(*item.pair)
        if key in table:
            raise ValidationError(f"duplicate {what} for pair {key}")
        table[key] = item
    return table


def _is_zero(potential: PairPotential) -> bool:
    return potential.description.startswith("zero")


def interacting_pairs(species: Sequence[SpeciesSpec], potentials, correlations,
                      default_correlation: Optional[str] = None):
    """Yield ordered (a, b, K_ab, g_ab) for every pair with a non-zero potential."""
    pots = _index(potentials, "potential")
    cors = _index(correlations, "correlation")
    labels = [sp.label for sp in species]
    for key in list(pots) + list(cors):
        for lab in key:
            if lab not in labels:
                raise ValidationError(f"pair {key} references unknown species {lab!r}")
    for a, la in enumerate(labels):
        for b, lb in enumerate(labels):
            key = pair_key(la, lb)
            pot = pots.get(key)
            if pot is None or _is_zero(pot):
                continue
            cor = cors.get(key)
            if cor is None:
                if default_correlation == "unity":
                    cor = CorrelationModel.unity(key)
                elif default_correlation == "classical-boltzmann":
                    cor = CorrelationModel.classical_boltzmann(pot)
                else:
                    raise MissingCorrelation(f"no correlation model for pair {key}")
            yield a, b, pot, cor


def _finite(values, g):
    return np.where(g == 0.0, 0.0, values)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _composite(func, lo, hi, panels, mapped):
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    if mapped:  # r = split + u / (1 - u) on u in [0, 1)
        r = mapped + u / (1.0 - u)
        w = w / (1.0 - u) ** 2
    else:
        r = u
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        vals = np.asarray(func(r), dtype=float)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    return float(np.dot(w, vals)), r, w


def _adaptive(func, lo, hi, rtol, epsabs, mapped=None, max_panels=4096):
    panels = 4
    prev, _, _ = _composite(func, lo, hi, panels, mapped)
    while panels < max_panels:
        panels *= 2
        cur, _, _ = _composite(func, lo, hi, panels, mapped)
        if abs(cur - prev) <= max(rtol * abs(cur), epsabs):
            return cur, abs(cur - prev)
        prev = cur
    raise QuadratureFailure(f"radial quadrature on [{lo}, {hi}] did not converge")


def radial_integral(func, potential: PairPotential, split_radius: Optional[float] = None,
                    rtol: float = RADIAL_RTOL, magnitude=None) -> float:
    """int_0^inf func(r) dr, split at the potential's range end and at its jumps.

    ``func`` must accept arrays. Each piece uses composite 16-point
    Gauss-Legendre with panel doubling; the tail beyond the split radius is
    mapped onto [0, 1). ``magnitude`` (default ``|func|``) sets the absolute
    error floor; pass the sum of absolute values of cancelling terms when
    ``func`` is such a sum.
    """
    split = potential.split_radius if split_radius is None else float(split_radius)
    breaks = sorted({float(r) for r, _ in potential.jumps if 0.0 < r < split})
    mag = magnitude if magnitude is not None else (lambda r: np.abs(func(r)))
    scale = 0.0
    edges = [0.0] + breaks + [split]
    for lo, hi in zip(edges[:-1], edges[1:]):
        scale += abs(_composite(mag, lo, hi, 16, None)[0])
    scale += abs(_composite(mag, 0.0, 1.0, 16, split)[0])
    epsabs = 1e-15 * scale if scale > 0 else 1e-300
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += _adaptive(func, lo, hi, rtol, epsabs)[0]
    total += _adaptive(func, 0.0, 1.0, rtol, epsabs, mapped=split)[0]
    if not math.isfinite(total):
        raise QuadratureFailure("radial integral is not finite")
    return total


def energy_integral(potential, correlation, theta, rho, split_radius=None,
                    rtol: float = RADIAL_RTOL) -> float:
    """int_0^inf r^2 K(r) g(r) dr."""
    def f(r):
        g = correlation(theta, rho, r)
        with np.errstate(invalid="ignore", over="ignore"):
            return _finite(r * r * potential(r) * g, g)
    return radial_integral(f, potential, split_radius, rtol)


def virial_integral(potential, correlation, theta, rho, split_radius=None,
                    rtol: float = RADIAL_RTOL) -> float:
    """int_0^inf r^3 K'(r) g(r) dr, including delta contributions of potential jumps."""
    def f(r):
        g = correlation(theta, rho, r)
        with np.errstate(invalid="ignore", over="ignore"):
            return _finite(r**3 * potential.derivative(r) * g, g)
    total = radial_integral(f, potential, split_radius, rtol)
    for radius, step in potential.jumps:
        eps = 1e-9 * max(radius, 1.0)
        g_in = float(correlation(theta, rho, np.array([radius - eps]))[0])
        g_out = float(correlation(theta, rho, np.array([radius + eps]))[0])
        if abs(g_out - g_in) <= 1e-6 * max(abs(g_in), abs(g_out), 1e-300):
            total += radius**3 * step * 0.5 * (g_in + g_out)
        elif correlation.name == "classical-boltzmann":
            # K' g = -theta d(e^{-K/theta})/dr across the jump
            total += -theta * radius**3 * (g_out - g_in)
        else:
            raise DomainError(
                f"potential jump at r={radius} meets a discontinuous correlation {correlation.name}")
    return total


@dataclass(frozen=True)
class ThermoPoint:
    E_total: float
    p: float
    tau: float
    kinetic_energy: float
    ideal_pressure: float
    energy_terms: Mapping = field(default_factory=dict)
    pressure_terms: Mapping = field(default_factory=dict)
    volume: float = 1.0


def _energy_terms(mixture, species, potentials, correlations, volume, split_radius,
                  default_correlation, rtol=RADIAL_RTOL):
    terms = {}
    rho_a = mixture.densities
    for a, b, pot, cor in interacting_pairs(species, potentials, correlations,
                                            default_correlation):
        integral = energy_integral(pot, cor, mixture.temperature, mixture.total_density,
                                   split_radius, rtol)
        terms[(species[a].label, species[b].label)] = (
            2.0 * math.pi * volume * rho_a[a] * rho_a[b] * integral)
    return terms


def _pressure_terms(mixture, species, potentials, correlations, split_radius,
                    default_correlation, rtol=RADIAL_RTOL):
    terms = {}
    rho_a = mixture.densities
    for a, b, pot, cor in interacting_pairs(species, potentials, correlations,
                                            default_correlation):
        integral = virial_integral(pot, cor, mixture.temperature, mixture.total_density,
                                   split_radius, rtol)
        terms[(species[a].label, species[b].label)] = (
            -2.0 * math.pi / 3.0 * rho_a[a] * rho_a[b] * integral)
    return terms


def internal_energy(mixture: MixtureState, tau: float, species: Sequence[SpeciesSpec],
                    potentials=(), correlations=(), volume: float = 1.0,
                    split_radius: Optional[float] = None,
                    default_correlation: Optional[str] = None,
                    rtol: float = RADIAL_RTOL) -> float:
    """E = (3/2) tau N + 2 pi V sum_{a,b} rho_a rho_b int r^2 K_ab g_ab dr."""
    terms = _energy_terms(mixture, species, potentials, correlations, volume, split_radius,
                          default_correlation, rtol)
    return 1.5 * tau * mixture.total_density * volume + math.fsum(terms.values())


def pressure(mixture: MixtureState, tau: float, species: Sequence[SpeciesSpec],
             potentials=(), correlations=(), split_radius: Optional[float] = None,
             default_correlation: Optional[str] = None, rtol: float = RADIAL_RTOL) -> float:
    """p = rho tau - (2 pi / 3) sum_{a,b} rho_a rho_b int r^3 K_ab' g_ab dr."""
    terms = _pressure_terms(mixture, species, potentials, correlations, split_radius,
                            default_correlation, rtol)
    return mixture.total_density * tau + math.fsum(terms.values())


def thermo_point(mixture, tau, species, potentials=(), correlations=(), volume=1.0,
                 split_radius=None, default_correlation=None,
                 rtol: float = RADIAL_RTOL) -> ThermoPoint:
    e_terms = _energy_terms(mixture, species, potentials, correlations, volume, split_radius,
                            default_correlation, rtol)
    p_terms = _pressure_terms(mixture, species, potentials, correlations, split_radius,
                              default_correlation, rtol)
    kinetic = 1.5 * tau * mixture.total_density * volume
    ideal_p = mixture.total_density * tau
    return ThermoPoint(kinetic + math.fsum(e_terms.values()), ideal_p + math.fsum(p_terms.values()),
                       tau, kinetic, ideal_p, e_terms, p_terms, volume)


# -- the tau(theta, rho) equation ---------------------------------------------

def pde_rhs(theta: float, rho: float, fractions: Sequence[float], species: Sequence[SpeciesSpec],
            potentials=(), correlations=(), split_radius: Optional[float] = None,
            default_correlation: Optional[str] = None, rtol: float = RADIAL_RTOL) -> float:
    """Right-hand side F(theta, rho) of 2 theta tau_theta + 3 rho tau_rho - 2 tau = F.

    F = 4 pi/(3 rho) sum_{a,b} rho_a rho_b int r^2 (r theta K' g_theta - 3 rho K g_rho + r K g_r) dr
    """
    total = 0.0
    for a, b, pot, cor in interacting_pairs(species, potentials, correlations,
                                            default_correlation):
        if pot.jumps and cor.name != "unity":
            raise DomainError(f"discontinuous potential {pot.pair} is not supported in the "
                              "tau equation unless g = 1")

        def terms(r, pot=pot, cor=cor):
            with np.errstate(invalid="ignore", over="ignore"):
                k = pot(r)
                parts = np.array([r**3 * theta * pot.derivative(r) * cor.d_theta(theta, rho, r),
                                  -3.0 * rho * r * r * k * cor.d_rho(theta, rho, r),
                                  r**3 * k * cor.d_r(theta, rho, r)])
            return np.where(np.isfinite(parts), parts, 0.0)

        integral = radial_integral(lambda r, t=terms: t(r).sum(axis=0), pot, split_radius, rtol,
                                   magnitude=lambda r, t=terms: np.abs(t(r)).sum(axis=0))
        total += fractions[a] * fractions[b] * rho * rho * integral
    return 4.0 * math.pi / (3.0 * rho) * total


def _has_interactions(species, potentials, correlations, default_correlation):
    return any(True for _ in interacting_pairs(species, potentials, correlations,
                                               default_correlation))


@dataclass(frozen=True)
class TauDomain:
    theta_min: float
    theta_max: float
    n_theta: int
    rho_min: float
    rho_max: float
    n_rho: int

    def __post_init__(self):
        if not (0 < self.theta_min < self.theta_max and 0 < self.rho_min < self.rho_max):
            raise ValidationError("domain needs 0 < min < max for theta and rho")
        if self.n_theta < 2 or self.n_rho < 2:
            raise ValidationError("domain needs at least two points per axis")

    @property
    def thetas(self) -> np.ndarray:
        return np.linspace(self.theta_min, self.theta_max, self.n_theta)

    @property
    def rhos(self) -> np.ndarray:
        return np.linspace(self.rho_min, self.rho_max, self.n_rho)


@dataclass
class CharacteristicTrace:
    label: float  # conserved c = rho theta^{-3/2}
    anchor_theta: float
    anchor_rho: float
    anchor_tau: float
    anchor_alphas: tuple
    steps: int
    s: np.ndarray
    theta: np.ndarray
    rho: np.ndarray
    tau: np.ndarray


@dataclass
class TauField:
    thetas: np.ndarray
    rhos: np.ndarray
    tau: np.ndarray  # shape (n_theta, n_rho)
    characteristics: list
    anchor_max_alpha: float
    anchor_correction_bound: float
    interpolated: bool

    def ideal_deviation(self, fractions, species, hbar=1.0) -> float:
        ideal, _ = solve_ideal_batch(fractions, species, self.thetas[:, None], self.rhos[None, :],
                                     hbar)
        return float(np.max(np.abs(self.tau / ideal - 1.0)))


def _integrate_characteristic(label, theta_anchor, theta_targets, fractions, species, rhs,
                              rtol, hbar, anchor_alpha_max, require_classical, anchor_offset=0.0):
    rho_anchor = label * theta_anchor**1.5
    mixture = MixtureState(theta_anchor, rho_anchor, tuple(fractions))
    ideal = solve_ideal(mixture, species, hbar)
    tau0 = ideal.tau * (1.0 + anchor_offset)
    if require_classical and max(ideal.alphas) >= anchor_alpha_max:
        raise AnchorNotClassical(
            f"anchor ({theta_anchor:.6g}, {rho_anchor:.6g}) has alpha={max(ideal.alphas):.3f} "
            f">= {anchor_alpha_max}")
    s_targets = 0.5 * np.log(np.asarray(theta_targets, dtype=float) / theta_anchor)
    s_end = float(s_targets.min())

    def ode(s, tau):
        th = theta_anchor * math.exp(2.0 * s)
        rh = rho_anchor * math.exp(3.0 * s)
        return [2.0 * tau[0] + rhs(th, rh)]

    if s_end == 0.0:
        s_eval = np.zeros(1)
        taus = np.array([tau0])
        steps = 0
    else:
        sol = solve_ivp(ode, (0.0, s_end), [tau0], method="RK45", rtol=rtol,
                        atol=1e-14 * abs(tau0), dense_output=True)
        if sol.status != 0:
            raise StiffIntegration(f"characteristic c={label:.6g}: {sol.message}")
        s_eval = s_targets
        taus = sol.sol(s_targets)[0]
        steps = len(sol.t) - 1
    return CharacteristicTrace(
        label, theta_anchor, rho_anchor, tau0, ideal.alphas, steps, s_eval,
        theta_anchor * np.exp(2.0 * s_eval), rho_anchor * np.exp(3.0 * s_eval), taus)


def solve_tau_field(domain: TauDomain, species: Sequence[SpeciesSpec], potentials=(),
                    correlations=(), fractions: Optional[Sequence[float]] = None,
                    n_characteristics: Optional[int] = None, rtol: float = 1e-9,
                    anchor_alpha_max: float = -10.0, require_classical_anchor: bool = True,
                    split_radius: Optional[float] = None, default_correlation=None,
                    hbar: float = 1.0, threads: int = 1, rhs=None,
                    anchor_offset: float = 0.0, radial_rtol: float = RADIAL_RTOL) -> TauField:
    """Integrate the tau equation along characteristics rho theta^{-3/2} = const.

    Each characteristic is anchored to the ideal-gas tau where it crosses the
    high-theta edge of the domain and integrated towards lower theta with an
    embedded RK4(5) scheme. With ``n_characteristics=None`` one characteristic
    passes through every grid node; otherwise ``n_characteristics`` curves
    log-spaced in c are integrated and tau/theta is interpolated across them
    (PCHIP in log c) at each grid temperature.

    ``rhs`` replaces the pair-integral right-hand side by a callable
    F(theta, rho); ``anchor_offset`` scales every anchor value by
    (1 + anchor_offset). Both exist for checking the integrator.
    """
    if fractions is None:
        fractions = build_mixture(species, domain.theta_max).fractions
    thetas, rhos = domain.thetas, domain.rhos
    if rhs is not None:
        pass
    elif _has_interactions(species, potentials, correlations, default_correlation):
        def rhs(th, rh):
            return pde_rhs(th, rh, fractions, species, potentials, correlations, split_radius,
                           default_correlation, radial_rtol)
    else:
        def rhs(th, rh):
            return 0.0

    theta_anchor = domain.theta_max
    labels_grid = rhos[None, :] * thetas[:, None] ** -1.5

    def run(label, targets):
        return _integrate_characteristic(label, theta_anchor, targets, fractions, species, rhs,
                                         rtol, hbar, anchor_alpha_max, require_classical_anchor,
                                         anchor_offset)

    tau = np.empty((thetas.size, rhos.size))
    if n_characteristics is None:
        jobs = [(labels_grid[i, j], np.array([thetas[i]]))
                for i in range(thetas.size) for j in range(rhos.size)]
        traces = _map(run, jobs, threads)
        for k, tr in enumerate(traces):
            tau.flat[k] = tr.tau[-1]
        interpolated = False
    else:
        if n_characteristics < 2:
            raise ValidationError("need at least two characteristics to interpolate")
        labels = np.geomspace(labels_grid.min(), labels_grid.max(), n_characteristics)
        traces = _map(run, [(c, thetas) for c in labels], threads)
        ratio = np.array([tr.tau / tr.theta for tr in traces])  # (n_char, n_theta)
        log_labels = np.log(labels)
        for i in range(thetas.size):
            interp = PchipInterpolator(log_labels, ratio[:, i])
            tau[i, :] = thetas[i] * interp(np.log(labels_grid[i, :]))
        interpolated = True
    max_alpha = max(max(tr.anchor_alphas) for tr in traces)
    return TauField(thetas, rhos, tau, traces, max_alpha, math.exp(max_alpha), interpolated)


def _map(fn, jobs, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda job: fn(*job), jobs))
    return [fn(*job) for job in jobs]


def pde_residual(thetas, rhos, tau, rhs_values=None) -> float:
    """Max relative residual of 2 theta tau_theta + 3 rho tau_rho - 2 tau - F on interior nodes.

    Central differences with the grid spacing; the residual is scaled by 2|tau|.
    Uniform spacing along each axis is assumed.
    """
    thetas = np.asarray(thetas, dtype=float)
    rhos = np.asarray(rhos, dtype=float)
    tau = np.asarray(tau, dtype=float)
    h_t = thetas[1] - thetas[0]
    h_r = rhos[1] - rhos[0]
    d_theta = (tau[2:, 1:-1] - tau[:-2, 1:-1]) / (2.0 * h_t)
    d_rho = (tau[1:-1, 2:] - tau[1:-1, :-2]) / (2.0 * h_r)
    th = thetas[1:-1, None]
    rh = rhos[None, 1:-1]
    inner = tau[1:-1, 1:-1]
    lhs = 2.0 * th * d_theta + 3.0 * rh * d_rho - 2.0 * inner
    if rhs_values is not None:
        lhs = lhs - np.asarray(rhs_values)[1:-1, 1:-1]
    return float(np.max(np.abs(lhs) / (2.0 * np.abs(inner))))


# -- high-temperature condition and condensate scan ---------------------------

@dataclass
class DecayReport:
    thetas: np.ndarray
    rhs: np.ndarray

    @property
    def decays(self) -> bool:
        a = np.abs(self.rhs)
        return bool(a[-1] <= a[0] or a[-1] < 1e-12)


def high_temperature_condition(species: Sequence[SpeciesSpec], potentials, correlations,
                               theta_sequence, rho: Optional[float] = None,
                               split_radius=None, default_correlation=None) -> DecayReport:
    """F(theta, rho) at tau = theta for increasing theta (the LHS vanishes there)."""
    thetas = np.asarray(theta_sequence, dtype=float)
    if np.any(np.diff(thetas) <= 0):
        raise ValidationError("theta sequence must be increasing")
    mixture = build_mixture(species, float(thetas[0]))
    rho = mixture.total_density if rho is None else rho
    values = np.array([pde_rhs(t, rho, mixture.fractions, species, potentials, correlations,
                               split_radius, default_correlation) for t in thetas])
    return DecayReport(thetas, values)


@dataclass
class CondensateScan:
    thetas: np.ndarray
    taus: np.ndarray  # nan where the ideal solve saturated
    onset_grid: Optional[float]  # first grid theta at which saturation fired
    onset: Optional[float]  # bisection-refined onset temperature
    saturated_species: Optional[str]
    experimental: bool = True
    notes: list = field(default_factory=list)


def condensate_scan(species: Sequence[SpeciesSpec], thetas, rho: Optional[float] = None,
                    fractions: Optional[Sequence[float]] = None, hbar: float = 1.0,
                    refine_rtol: float = 1e-12) -> CondensateScan:
    """EXPERIMENTAL: scan descending theta for the Bose-kernel saturation (condensate onset).

    The onset is where an ideal solve first raises BoseSaturation; it is
    refined by bisection between the last successful and first failing theta.
    Uses the stand-in Bose kernel, so the temperature is qualitative only.
    """
    thetas = np.asarray(thetas, dtype=float)
    if np.any(np.diff(thetas) >= 0):
        raise ValidationError("condensate scan expects a strictly descending theta grid")
    if fractions is None:
        fractions = build_mixture(species, float(thetas[0])).fractions
    if rho is None:
        rho = build_mixture(species, float(thetas[0])).total_density
    notes = ["EXPERIMENTAL: Bose stand-in kernel; onset temperatures are qualitative"]
    if not any(sp.statistics is Statistics.BOSE for sp in species):
        notes.append("no Bose component: no onset expected")

    def attempt(theta):
        try:
            return solve_ideal(MixtureState(theta, rho, tuple(fractions)), species, hbar), None
        except BoseSaturation as exc:
            return None, exc

    taus = np.full(thetas.shape, np.nan)
    onset_grid = onset = None
    culprit = None
    last_ok = None
    for i, theta in enumerate(thetas):
        sol, exc = attempt(float(theta))
        if sol is None:
            onset_grid, culprit = float(theta), exc.species
            break
        taus[i] = sol.tau
        last_ok = float(theta)
    if onset_grid is not None:
        if last_ok is None:
            notes.append("saturated at the first grid point; onset lies above the scan")
            onset = onset_grid
        else:
            lo, hi = onset_grid, last_ok  # saturated at lo, fine at hi
            while hi - lo > refine_rtol * hi:
                mid = 0.5 * (lo + hi)
                if attempt(mid)[0] is None:
                    lo = mid
                else:
                    hi = mid
            onset = 0.5 * (lo + hi)
    return CondensateScan(thetas, taus, onset_grid, onset, culprit, True, notes)


def bose_onset_temperature(species: SpeciesSpec, density: float, hbar: float = 1.0) -> float:
    """Closed-form saturation temperature: density = kappa (2 m theta)^{3/2}/(2 pi^2 hbar^3) G_0(0-)."""
    sup = kernels.bose_supremum(0)
    return (2.0 * math.pi**2 * hbar**3 * density / (species.kappa * sup)) ** (2.0 / 3.0) / (
        2.0 * species.mass)
