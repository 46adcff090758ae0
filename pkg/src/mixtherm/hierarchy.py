"""Numerical checks of the reduced-density-matrix hierarchy on small periodic grids.

Covers the plane-wave-conjugated resolvent v_s, its dense spectral oracle,
residue versus contour evaluation of densities, the exchange-summed ideal
densities rho_s for s <= 2, the normalisation of rho_1 and the classical
(exponential-ansatz) form of the first hierarchy equations.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, sparse
from scipy.sparse import linalg as sparse_linalg

from .core_types import MultiIndex, PairPotential, SpeciesSpec, multi_index
from .errors import (
    GridMismatch,
    PoleHit,
    QuadratureFailure,
    SingularSystem,
    TooLarge,
    UnsupportedOrder,
    ValidationError,
)
from .exchange import enumerate_permutations, kappa_weight
from .ns_coefficients import NsFamily

POLE_GUARD = 1e-14
ORACLE_MAX_POINTS = 512
DENSE_SWEEP_MAX = 256


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic lattice x_j = j h, j = 0..n-1, on a cell of length ``length``."""

    n: int
    length: float

    def __post_init__(self):
        if self.n < 16:
            raise ValidationError("a grid needs at least 16 points")
        if not self.length > 0:
            raise ValidationError("grid length must be positive")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return self.h * np.arange(self.n)

    def lattice_momentum(self, k: int, hbar: float = 1.0) -> float:
        return 2.0 * math.pi * hbar * k / self.length

    def separation(self, x, y):
        """Minimum-image x - y."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return d - self.length * np.round(d / self.length)


def free_resolvent(p, z: complex, m: float, hbar: float = 1.0) -> complex:
    """(z - p^2/2m)^{-1}: the resolvent of the force-free equation."""
    p = np.asarray(p, dtype=float)
    denom = z - np.sum(p * p) / (2.0 * m)
    if abs(denom) < POLE_GUARD:
        raise PoleHit(f"z={z} sits on the kinetic energy {np.sum(p * p) / (2.0 * m)}")
    return 1.0 / denom


def _as_tuple(values, s, what):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size == 1 and s > 1:
        values = np.repeat(values, s)
    if values.size != s:
        raise ValidationError(f"need one {what} per particle ({s}), got {values.size}")
    return values


@functools.lru_cache(maxsize=32)
def _difference_matrices(n, h):
    """Periodic central first and second differences as sparse matrices."""
    ones = np.ones(n)
    d1 = sparse.diags([ones[:-1], -ones[:-1]], [1, -1], shape=(n, n), format="lil")
    d1[0, n - 1] = -1.0
    d1[n - 1, 0] = 1.0
    d2 = sparse.diags([ones[:-1], -2.0 * ones, ones[:-1]], [1, 0, -1], shape=(n, n), format="lil")
    d2[0, n - 1] = 1.0
    d2[n - 1, 0] = 1.0
    return d1.tocsr() / (2.0 * h), d2.tocsr() / (h * h)


def conjugated_hamiltonian(grid: Grid1D, potential, momenta, masses, hbar: float = 1.0):
    """Sparse L with (z - L) v = 1 the discretised resolvent equation.

    L = sum_j [-(hbar^2/2m_j) D2_j - (i hbar p_j/m_j) D1_j + p_j^2/2m_j] + U
    acting on s particles on the tensor grid (particle 1 slowest).
    """
    u = np.asarray(potential, dtype=float)
    s = u.ndim
    momenta, masses = _as_tuple(momenta, s, "momentum"), _as_tuple(masses, s, "mass")
    if u.shape != (grid.n,) * s:
        raise GridMismatch(f"potential shape {u.shape} does not match {s} particles on {grid.n} points")
    d1, d2 = _difference_matrices(grid.n, grid.h)
    eye = sparse.identity(grid.n, format="csr")
    total = sparse.diags(u.ravel().astype(complex) + np.sum(momenta**2 / (2.0 * masses)))
    for j in range(s):
        one = -(hbar**2 / (2.0 * masses[j])) * d2 - 1j * hbar * momenta[j] / masses[j] * d1
        term = None
        for k in range(s):
            factor = one if k == j else eye
            term = factor if term is None else sparse.kron(term, factor, format="csr")
        total = total + term
    return total.tocsc()


@dataclass
class ResolventField:
    grid: Grid1D
    values: np.ndarray  # shape (n,)*s
    momenta: np.ndarray
    z: complex
    masses: np.ndarray
    potential: np.ndarray
    residual: float


def _solve(grid, u, op, p, z, m, residual_tol):
    size = op.shape[0]
    rhs = np.ones(size, dtype=complex)
    if isinstance(op, np.ndarray):
        # small systems: dense LU of the same discretisation, far less overhead
        system = z * np.eye(size, dtype=complex) - op
        try:
            v = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
    else:
        system = (z * sparse.identity(size, format="csc", dtype=complex) - op).tocsc()
        with np.errstate(all="ignore"):
            try:
                v = sparse_linalg.spsolve(system, rhs)
            except RuntimeError as exc:
                raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(v)):
        raise SingularSystem(f"resolvent system singular at z={z}")
    residual = float(np.max(np.abs(system @ v - rhs)))
    if residual > residual_tol * max(1.0, float(np.max(np.abs(v)))):
        raise SingularSystem(f"resolvent residual {residual:.2e} above tolerance at z={z}")
    s = u.ndim
    return ResolventField(grid, v.reshape((grid.n,) * s), _as_tuple(p, s, "momentum"), z,
                          _as_tuple(m, s, "mass"), u, residual)


def resolvent_solve(grid: Grid1D, potential, p, z: complex, m, hbar: float = 1.0,
                    residual_tol: float = 1e-10) -> ResolventField:
    """Solve the discretised resolvent equation by a sparse direct solve.

    ``potential`` holds U_s on the tensor grid, shape (n,)*s; ``p`` and ``m``
    give one (1-D) momentum and mass per particle.
    """
    u = np.asarray(potential, dtype=float)
    op = conjugated_hamiltonian(grid, u, p, m, hbar)
    return _solve(grid, u, op, p, z, m, residual_tol)


def resolvent_sweep(grid: Grid1D, potential, p, zs, m, hbar: float = 1.0,
                    residual_tol: float = 1e-10) -> list:
    """:func:`resolvent_solve` at many z, assembling the operator once."""
    u = np.asarray(potential, dtype=float)
    op = conjugated_hamiltonian(grid, u, p, m, hbar)
    if op.shape[0] <= DENSE_SWEEP_MAX:
        op = op.toarray()
    return [_solve(grid, u, op, p, z, m, residual_tol) for z in zs]


# -- dense spectral oracle ---------------------------------------------------

def _dense_conjugated_hamiltonian(grid: Grid1D, u: np.ndarray, momenta, masses, hbar):
    """Dense L assembled by applying shifted stencils to unit vectors (independent route)."""
    s = u.ndim
    size = u.size
    shape = u.shape
    h = grid.h
    basis = np.eye(size, dtype=complex).reshape(shape + (size,))
    out = u.reshape(-1)[:, None] * np.eye(size, dtype=complex)
    out = out + np.sum(momenta**2 / (2.0 * masses)) * np.eye(size)
    for j in range(s):
        fwd = np.roll(basis, -1, axis=j)
        bwd = np.roll(basis, 1, axis=j)
        lap = (fwd - 2.0 * basis + bwd) / (h * h)
        grad = (fwd - bwd) / (2.0 * h)
        out = out + (-(hbar**2 / (2.0 * masses[j])) * lap
                     - 1j * hbar * momenta[j] / masses[j] * grad).reshape(size, size)
    return out


@dataclass
class SpectralOracle:
    """Eigen-decomposition of the dense conjugated grid Hamiltonian."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    shape: tuple

    @classmethod
    def build(cls, grid: Grid1D, potential, p, m, hbar: float = 1.0,
              max_points: int = ORACLE_MAX_POINTS) -> "SpectralOracle":
        u = np.asarray(potential, dtype=float)
        if u.size > max_points:
            raise TooLarge(f"dense oracle capped at {max_points} points, got {u.size}")
        if u.shape != (grid.n,) * u.ndim:
            raise GridMismatch("potential does not live on the grid")
        dense = _dense_conjugated_hamiltonian(grid, u, _as_tuple(p, u.ndim, "momentum"),
                                              _as_tuple(m, u.ndim, "mass"), hbar)
        if np.max(np.abs(dense - dense.conj().T)) > 1e-9 * np.max(np.abs(dense)):
            raise ValidationError("conjugated grid Hamiltonian is not Hermitian")
        lam, vec = np.linalg.eigh(0.5 * (dense + dense.conj().T))
        return cls(lam, vec, u.shape)

    def apply(self, func: Callable, vector=None) -> np.ndarray:
        """f(L) applied to ``vector`` (default: the constant 1)."""
        if vector is None:
            vector = np.ones(self.eigenvectors.shape[0], dtype=complex)
        coeff = self.eigenvectors.conj().T @ np.asarray(vector, dtype=complex).ravel()
        return (self.eigenvectors @ (func(self.eigenvalues) * coeff)).reshape(self.shape)

    def resolvent(self, z: complex) -> np.ndarray:
        gap = np.min(np.abs(z - self.eigenvalues))
        if gap < POLE_GUARD:
            raise PoleHit(f"z={z} hits the grid spectrum")
        return self.apply(lambda lam: 1.0 / (z - lam))


def spectral_oracle(grid: Grid1D, potential, p, z: complex, m, hbar: float = 1.0) -> np.ndarray:
    """v = sum_k phi_k <phi_k, 1> / (z - lambda_k) from a dense eigendecomposition."""
    return SpectralOracle.build(grid, potential, p, m, hbar).resolvent(z)


# -- contour integrals ------------------------------------------------------

def _gauss_legendre_segment(a: complex, b: complex, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def rectangle_contour(lo: float, hi: float, height: float, nodes_per_side: int = 96):
    """Nodes and weights dz for a counter-clockwise rectangle around [lo, hi]."""
    corners = [complex(lo, -height), complex(hi, -height), complex(hi, height),
               complex(lo, height), complex(lo, -height)]
    zs, ws = [], []
    for a, b in zip(corners[:-1], corners[1:]):
        z, w = _gauss_legendre_segment(a, b, nodes_per_side)
        zs.append(z)
        ws.append(w)
    return np.concatenate(zs), np.concatenate(ws)


@dataclass
class ContourComparison:
    residue: np.ndarray
    contour: np.ndarray
    max_abs_difference: float
    max_relative_difference: float
    nodes: int


def contour_vs_residue(grid: Grid1D, potential, p: float, m: float, n_func: Callable,
                       hbar: float = 1.0, margin: float = 1.0, height: float = 1.0,
                       nodes_per_side: int = 96) -> ContourComparison:
    """(1/2 pi i) closed-contour integral of n(z) v(z) against sum_k n(lambda_k) phi_k <phi_k, 1>.

    The contour is a rectangle enclosing the grid spectrum by ``margin``;
    ``v(z)`` at each node comes from :func:`resolvent_solve`, the residue side
    from the dense oracle.
    """
    u = np.asarray(potential, dtype=float)
    if u.ndim != 1:
        raise UnsupportedOrder("the contour cross-check runs for one particle")
    oracle = SpectralOracle.build(grid, u, p, m, hbar)
    residue = oracle.apply(lambda lam: n_func(lam))
    lo = float(oracle.eigenvalues.min()) - margin
    hi = float(oracle.eigenvalues.max()) + margin
    zs, ws = rectangle_contour(lo, hi, height, nodes_per_side)
    acc = np.zeros(grid.n, dtype=complex)
    for z, w, field in zip(zs, ws, resolvent_sweep(grid, u, p, zs, m, hbar)):
        acc += w * n_func(z) * field.values
    contour = acc / (2j * math.pi)
    diff = np.abs(contour - residue)
    return ContourComparison(residue, contour, float(diff.max()),
                             float(diff.max() / np.max(np.abs(residue))), zs.size)


def pair_swap_asymmetry(grid: Grid1D, potential, p1: float, p2: float, z: complex, m: float,
                        hbar: float = 1.0) -> float:
    """max |v(x1, x2; p1, p2) - v(x2, x1; p2, p1)| for two same-species particles."""
    u = np.asarray(potential, dtype=float)
    if u.ndim != 2 or np.max(np.abs(u - u.T)) > 0:
        raise ValidationError("pair potential samples must be a symmetric (n, n) array")
    v12 = spectral_oracle(grid, u, (p1, p2), z, m, hbar)
    v21 = spectral_oracle(grid, u, (p2, p1), z, m, hbar)
    return float(np.max(np.abs(v12 - v21.T)))


# -- ideal densities from the contour representation -------------------------

def _gaussian_cos(mass: float, tau: float, shift: float, hbar: float) -> float:
    """int dp exp(-p^2 / (2 m tau)) cos(p shift / hbar), by quadrature."""
    width = math.sqrt(2.0 * mass * tau)
    omega = width * shift / hbar
    # e^{-x^2} < 1e-300 beyond x = 27; QAWO handles the cosine weight
    if omega == 0.0:
        val, err = integrate.quad(lambda x: math.exp(-x * x), 0.0, 27.0, epsabs=0.0,
                                  epsrel=1e-13, limit=400)
    else:
        with warnings.catch_warnings():
            # tiny results at large shifts trip QUADPACK's roundoff flag; err is checked below
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(lambda x: math.exp(-x * x), 0.0, 27.0, weight="cos",
                                      wvar=omega, epsabs=1e-16, epsrel=1e-13, limit=400)
    if err > max(1e-11 * abs(val), 1e-14):
        raise QuadratureFailure("momentum integral did not converge")
    return 2.0 * width * val


def density_from_contour(s: MultiIndex, species: Sequence[SpeciesSpec], tau: float,
                         positions=None, hbar: float = 1.0, dim: int = 3) -> float:
    """rho_s at one configuration of a uniform ideal medium, for order s <= 2.

    With U_s = 0 the resolvent is (z - E)^{-1}, E = sum p^2/2m, so the contour
    integral of n_s(z) v_s collapses to the residue n_s(E) = A_s exp(-E/tau).
    The remaining momentum integrals against omega_s and the plane-wave factor
    are done per particle and per Cartesian component by quadrature.

    ``positions`` holds one array of shape (s_a, dim) per kind; omitted kinds
    or groups default to the origin.
    """
    if s.order > 2:
        raise UnsupportedOrder(f"contour densities implemented for order <= 2, got {s.order}")
    if s.n != len(species):
        raise ValidationError("multi-index and species list differ in length")
    if s.order == 0:
        return 1.0
    if positions is None:
        positions = [np.zeros((c, dim)) for c in s.counts]
    groups = []
    for c, pos in zip(s.counts, positions):
        pos = np.zeros((0, dim)) if c == 0 else np.asarray(pos, dtype=float).reshape(c, dim)
        groups.append(pos)
    family = NsFamily.uniform(species, tau, hbar, dim)
    amplitude = family.coefficient(s)
    cache = {}

    def gauss(mass, shift):
        key = (mass, round(shift, 15))
        if key not in cache:
            cache[key] = _gaussian_cos(mass, tau, shift, hbar)
        return cache[key]

    total = 0.0
    for perm in enumerate_permutations(s, [sp.statistics for sp in species]):
        term = float(kappa_weight(perm, species))
        for pa, pos, sp in zip(perm.perms, groups, species):
            inverse = np.argsort(pa)
            for j in range(len(pa)):
                # p_j multiplies r_j (plane wave) minus r_{P^-1(j)} (omega)
                shift = pos[j] - pos[inverse[j]]
                for comp in range(dim):
                    term *= gauss(sp.mass, float(shift[comp]))
        total += term
    norm = math.prod(math.factorial(c) for c in s.counts) * (2.0 * math.pi * hbar) ** (dim * s.order)
    return amplitude * total / norm


def pair_density_profile(s: MultiIndex, species: Sequence[SpeciesSpec], tau: float, radii,
                         hbar: float = 1.0, dim: int = 3) -> np.ndarray:
    """rho_2 with the two particles a distance r apart along the first axis."""
    if s.order != 2:
        raise UnsupportedOrder("pair profiles need order 2")
    out = []
    for r in np.asarray(radii, dtype=float):
        placed = [np.zeros((0, dim)) if c == 0 else None for c in s.counts]
        coords = [np.zeros(dim), np.zeros(dim)]
        coords[1][0] = r
        k = 0
        for a, c in enumerate(s.counts):
            if c:
                placed[a] = np.array(coords[k:k + c])
                k += c
        out.append(density_from_contour(s, species, tau, placed, hbar, dim))
    return np.array(out)


# -- normalisation -----------------------------------------------------------

@dataclass
class NormalizationReport:
    profile: np.ndarray  # rho_1 on the grid
    integral: float  # int rho_1 dx over the cell
    expected: float  # rho_a L
    relative_error: float


def normalization_check(species: SpeciesSpec, tau: float, grid: Grid1D, hbar: float = 1.0,
                        momentum_nodes: int = 12, contour_nodes: int = 32) -> NormalizationReport:
    """int rho_1 dx = rho_a L for a 1-D ideal component, via numeric contours.

    For each Gauss-Hermite momentum node the contour integral of n_1(z) v_1(z)
    is taken on a circle around the kinetic energy with the trapezoid rule,
    v_1 coming from :func:`resolvent_solve` with U = 0.
    """
    family = NsFamily.uniform([species], tau, hbar, dim=1)
    s = multi_index("1_1", 1)
    u = np.zeros(grid.n)
    width = math.sqrt(2.0 * species.mass * tau)
    xs, ws = np.polynomial.hermite.hermgauss(momentum_nodes)
    angles = 2.0 * math.pi * np.arange(contour_nodes) / contour_nodes
    radius = tau
    profile = np.zeros(grid.n)
    for x, w in zip(xs, ws):
        p = width * x
        energy = p * p / (2.0 * species.mass)
        acc = np.zeros(grid.n, dtype=complex)
        dzs = radius * np.exp(1j * angles)
        fields = resolvent_sweep(grid, u, p, energy + dzs, species.mass, hbar)
        for dz, field in zip(dzs, fields):
            acc += family(s, energy + dz) * field.values * dz
        # dz = i R e^{i phi} dphi, so (1/2 pi i) int f dz = mean of f R e^{i phi}
        contour = acc / contour_nodes
        # Gauss-Hermite weight exp(-x^2) is divided out of n_1 = A exp(-p^2/2 m tau)
        profile += w * width * np.real(contour) * math.exp(x * x)
    profile *= species.kappa / (2.0 * math.pi * hbar)
    integral = float(np.sum(profile) * grid.h)  # trapezoid on the periodic cell
    expected = species.density * grid.length
    return NormalizationReport(profile, integral, expected, abs(integral / expected - 1.0))


# -- classical hierarchy -----------------------------------------------------

@dataclass
class ClassicalAnsatz:
    """rho_s = A_s exp(-U_s / theta) sampled on the s-fold tensor grid."""

    grid: Grid1D
    potential: np.ndarray  # U_s, shape (n,)*s
    theta: float
    normalizer: float

    def __post_init__(self):
        self.potential = np.asarray(self.potential, dtype=float)
        if self.potential.shape != (self.grid.n,) * self.potential.ndim:
            raise GridMismatch("U_s must be sampled on the tensor grid")
        if not (self.theta > 0 and self.normalizer > 0):
            raise ValidationError("theta and A_s must be positive")

    @classmethod
    def from_density(cls, grid: Grid1D, density, theta: float, normalizer: float = 1.0):
        density = np.asarray(density, dtype=float)
        if np.any(density <= 0):
            raise ValidationError("classical densities must be positive")
        return cls(grid, -theta * np.log(density / normalizer), theta, normalizer)

    @property
    def order(self) -> int:
        return self.potential.ndim

    @property
    def density(self) -> np.ndarray:
        return self.normalizer * np.exp(-self.potential / self.theta)


def spectral_derivative(values, length: float, axis: int = 0) -> np.ndarray:
    """d/dx of periodic samples along ``axis`` by FFT."""
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    k = 2.0 * math.pi * np.fft.fftfreq(n, d=length / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = n
    return np.real(np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(values, axis=axis), axis=axis))


def _pair_gradient(grid: Grid1D, potential: PairPotential):
    """dK(x - x')/dx on the grid with minimum-image separations, shape (n, n)."""
    d = grid.separation(grid.x[:, None], grid.x[None, :])
    r = np.abs(d)
    with np.errstate(invalid="ignore"):
        g = np.sign(d) * potential.derivative(r)
    return np.where(r == 0.0, 0.0, g)


def _pair_values(grid: Grid1D, potential: PairPotential):
    d = grid.separation(grid.x[:, None], grid.x[None, :])
    return potential(np.abs(d))


@dataclass
class BbgkyResidual:
    lhs: np.ndarray
    rhs: np.ndarray
    absolute: float
    relative: float


def classical_bbgky_residual(s: MultiIndex, ansatz_s: ClassicalAnsatz, ansatz_next: ClassicalAnsatz,
                             potential: PairPotential) -> BbgkyResidual:
    """Residual of the first-particle equation of the hierarchy for a 1-D classical ansatz.

    LHS: rho_s dU_s/dx_1. RHS: rho_s d/dx_1 sum_{j>1} K(x_1 - x_j) +
    int rho_{s+1}(x_s, x') dK(x_1 - x')/dx_1 dx'. One pair potential serves all
    pairs; no external field. The derivative of U_s is spectral, the x'
    integral is the periodic trapezoid rule.
    """
    if s.order > 2 or s.order < 1:
        raise UnsupportedOrder("classical hierarchy check covers orders 1 and 2")
    if ansatz_s.order != s.order or ansatz_next.order != s.order + 1:
        raise GridMismatch("ansatz orders must be s and s + 1")
    if ansatz_s.grid != ansatz_next.grid:
        raise GridMismatch("both ansatz levels must share one grid")
    grid = ansatz_s.grid
    rho_s = ansatz_s.density
    lhs = rho_s * spectral_derivative(ansatz_s.potential, grid.length, axis=0)
    dk = _pair_gradient(grid, potential)  # (x1, x')
    direct = np.zeros_like(rho_s)
    if s.order == 2:
        direct = rho_s * dk
    rho_next = ansatz_next.density
    # contract the last coordinate of rho_{s+1} with dK(x1 - x')
    shape = (grid.n,) + (1,) * (s.order - 1) + (grid.n,)
    integral = np.sum(rho_next * dk.reshape(shape), axis=-1) * grid.h
    rhs = direct + integral
    diff = np.abs(lhs - rhs)
    scale = float(np.max(np.abs(rhs)))
    absolute = float(diff.max())
    return BbgkyResidual(lhs, rhs, absolute, absolute / scale if scale > 0 else absolute)


def smeared_source_ansatz(grid: Grid1D, potential: PairPotential, theta: float, source,
                          order: int = 1, normalizer: float = 1.0, sign: float = 1.0):
    """Low-density closure ansatz pair (rho_s, rho_{s+1}) built around a smeared source.

    rho_{s+1}(x_1..x_s, x') = A prod_{j>1} e^{-K(x_1 - x_j)/theta} e^{-sign K(x_1 - x')/theta} source(x')
    and rho_s is its x' marginal. ``sign = -1`` plants a deliberately wrong
    sign on K inside rho_{s+1}.
    """
    if order not in (1, 2):
        raise UnsupportedOrder("smeared-source ansatz covers orders 1 and 2")
    source = np.asarray(source, dtype=float)
    boltz = np.exp(-sign * _pair_values(grid, potential) / theta)  # (x1, x')
    marginal = boltz @ source * grid.h  # (x1,)
    if order == 1:
        rho_next = normalizer * boltz * source[None, :]
        rho_s = normalizer * marginal
    else:
        pair = np.exp(-_pair_values(grid, potential) / theta)  # (x1, x2)
        rho_next = normalizer * pair[:, :, None] * (boltz * source[None, :])[:, None, :]
        rho_s = normalizer * pair * marginal[:, None]
    return (ClassicalAnsatz.from_density(grid, rho_s, theta, normalizer),
            ClassicalAnsatz.from_density(grid, rho_next, theta, normalizer))


# -- suite -------------------------------------------------------------------

@dataclass(frozen=True)
class SuiteRow:
    name: str
    value: float
    threshold: float
    comparison: str  # "<" or ">"

    @property
    def passed(self) -> bool:
        if self.comparison == "<":
            return bool(self.value < self.threshold)
        return bool(self.value > self.threshold)


def random_potential(grid: Grid1D, rng: np.random.Generator, modes: int = 4, amplitude: float = 1.0):
    """Smooth periodic random potential from a few Fourier modes."""
    x = grid.x
    u = np.zeros(grid.n)
    for k in range(1, modes + 1):
        a, b = rng.normal(size=2) * amplitude / k
        u += a * np.cos(2 * math.pi * k * x / grid.length) + b * np.sin(2 * math.pi * k * x / grid.length)
    return u


def run_validation_suite(seed: int = 0, hbar: float = 1.0) -> list:
    """Evaluate every hierarchy check once and return pass/fail rows."""
    from .core_types import Statistics
    from .exchange import ideal_pair_correlation

    rng = np.random.default_rng(seed)
    rows = []
    grid = Grid1D(128, 10.0)

    worst = 0.0
    for _ in range(10):
        u = random_potential(grid, rng)
        p = rng.normal()
        z = complex(rng.normal(), rng.uniform(0.5, 2.0))
        direct = resolvent_solve(grid, u, p, z, 1.0, hbar).values
        oracle = spectral_oracle(grid, u, p, z, 1.0, hbar)
        worst = max(worst, float(np.max(np.abs(direct - oracle))))
    rows.append(SuiteRow("resolvent_vs_spectral_oracle", worst, 1e-8, "<"))

    free_err = 0.0
    for k in (-3, 0, 2, 5):
        p = grid.lattice_momentum(k, hbar)
        z = complex(0.3, 0.7)
        v = resolvent_solve(grid, np.zeros(grid.n), p, z, 1.3, hbar).values
        free_err = max(free_err, float(np.max(np.abs(v - free_resolvent(p, z, 1.3, hbar)))))
    rows.append(SuiteRow("free_resolvent", free_err, 1e-9, "<"))

    small = Grid1D(16, 6.0)
    pair_u = 0.7 * np.cos(2 * math.pi * small.separation(small.x[:, None], small.x[None, :]) / small.length)
    rows.append(SuiteRow("pair_swap_symmetry",
                         pair_swap_asymmetry(small, pair_u, 0.4, -1.1, complex(0.2, 0.9), 1.0, hbar),
                         1e-12, "<"))

    cgrid = Grid1D(32, 8.0)
    cu = random_potential(cgrid, rng, amplitude=0.5)
    cmp_ = contour_vs_residue(cgrid, cu, 0.3, 1.0, lambda z: 0.8 * np.exp(-z / 1.5), hbar)
    rows.append(SuiteRow("contour_vs_residue", cmp_.max_abs_difference, 1e-8, "<"))

    radii = np.linspace(0.0, 3.0, 50)
    for stats, kappa in ((Statistics.FERMI, 2), (Statistics.BOSE, 1)):
        sp = SpeciesSpec("a", 1.0, kappa, stats, 0.2)
        tau = 0.9
        rho2 = pair_density_profile(multi_index("2_1", 1), [sp], tau, radii, hbar)
        g = ideal_pair_correlation(radii, sp, tau, hbar)
        rows.append(SuiteRow(f"pair_correlation_{stats.value}",
                             float(np.max(np.abs(rho2 / sp.density**2 - g))), 1e-8, "<"))
    spa = SpeciesSpec("a", 1.0, 2, Statistics.FERMI, 0.2)
    spb = SpeciesSpec("b", 2.5, 1, Statistics.BOSE, 0.3)
    mixed = pair_density_profile(multi_index("1_1 1_2", 2), [spa, spb], 0.9, radii, hbar)
    rows.append(SuiteRow("mixed_pair_density",
                         float(np.max(np.abs(mixed / (spa.density * spb.density) - 1.0))), 1e-10, "<"))

    ngrid = Grid1D(32, 5.0)
    worst = 0.0
    for stats in (Statistics.FERMI, Statistics.BOSE):
        for m, kappa, tau in ((1.0, 1, 0.5), (2.0, 2, 1.5), (0.5, 3, 3.0)):
            sp = SpeciesSpec("a", m, kappa, stats, 0.4)
            worst = max(worst, normalization_check(sp, tau, ngrid, hbar).relative_error)
    rows.append(SuiteRow("normalization", worst, 1e-10, "<"))

    bgrid = Grid1D(128, 20.0)
    pot = PairPotential.closed_form(("a", "b"), "gaussian", amplitude=1.0, width=1.0)
    source = np.exp(-0.5 * ((bgrid.x - 10.0) / 1.5) ** 2) + 0.05
    lo, hi = smeared_source_ansatz(bgrid, pot, 1.2, source)
    rows.append(SuiteRow("bbgky_low_density_closure",
                         classical_bbgky_residual(multi_index("1_1", 1), lo, hi, pot).relative,
                         1e-6, "<"))
    lo, hi = smeared_source_ansatz(bgrid, pot, 1.2, np.ones(bgrid.n))
    rows.append(SuiteRow("bbgky_isotropic_uniform",
                         classical_bbgky_residual(multi_index("1_1", 1), lo, hi, pot).absolute,
                         1e-12, "<"))
    lo, hi = smeared_source_ansatz(bgrid, pot, 1.2, source, sign=-1.0)
    good_lo, _ = smeared_source_ansatz(bgrid, pot, 1.2, source)
    rows.append(SuiteRow("bbgky_wrong_sign_detected",
                         classical_bbgky_residual(multi_index("1_1", 1), good_lo, hi, pot).relative,
                         1e-2, ">"))
    return rows
