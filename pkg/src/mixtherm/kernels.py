"""Ideal quantum-gas integrals G_k(alpha) and their inversion.

    G_k(alpha) = int_0^inf x^(2k+2) / (exp(x^2 - alpha) + eta) dx

with eta = +1 for Fermi and eta = -1 for Bose statistics. The Bose branch is
restricted to alpha <= 0 (alpha = -beta^2) and is a stand-in for the
low-temperature boson kernel, which is not reconstructed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from .core_types import Statistics
from .errors import BoseSaturation, ConvergenceFailure, DomainError, QuadratureFailure

SQRT_PI = math.sqrt(math.pi)
KNEE_MARGIN = 5.0


@dataclass(frozen=True)
class KernelParams:
    order: int
    alpha: float
    statistics: Statistics

    def __post_init__(self):
        object.__setattr__(self, "statistics", Statistics.parse(self.statistics))
        if self.order not in (0, 1):
            raise DomainError(f"kernel order must be 0 or 1, got {self.order}")
        if not math.isfinite(self.alpha):
            raise DomainError("alpha must be finite")
        if self.statistics is Statistics.BOSE and self.alpha > 0:
            raise DomainError(f"Bose kernel requires alpha <= 0, got {self.alpha}")

    @property
    def beta(self) -> float:
        """Bose parametrisation alpha = -beta^2 (beta >= 0)."""
        return math.sqrt(-self.alpha) if self.alpha <= 0 else float("nan")


def _integrand(k: int, alpha: float, fermi: bool):
    power = 2 * k + 2
    if fermi:
        def f(x):
            # 1/(e^t + 1) = expit(-t), stable for both signs of t
            return x**power * special.expit(alpha - x * x)
    else:
        def f(x):
            t = x * x - alpha
            if t == 0.0:
                return 0.0 if power > 2 else 1.0  # x^2/(e^{x^2}-1) -> 1 at alpha = 0, x -> 0
            if t > 700.0:
                return 0.0
            return x**power / math.expm1(t)
    return f


def _quad(f, a, b, rtol, points=None):
    val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=rtol, limit=400, points=points)
    return val, err


def g_integral(params: KernelParams, rtol: float = 1e-10) -> float:
    """Evaluate G_k(alpha) by split adaptive quadrature.

    The range is split at x = sqrt(max(alpha, 0)) + 5; the Fermi knee sits at
    x^2 = alpha, inside the first piece. The second piece decays like
    exp(alpha - x^2) and is integrated to infinity.
    """
    k, alpha = params.order, float(params.alpha)
    fermi = params.statistics is Statistics.FERMI
    f = _integrand(k, alpha, fermi)
    knee = math.sqrt(max(alpha, 0.0))
    split = knee + KNEE_MARGIN
    inner_rtol = max(min(rtol * 1e-2, 1e-12), 1e-13)
    marks = [knee - 1.0, knee, knee + 1.0]
    if not fermi and alpha < 0.0:
        # Bose integrand ~ x^2 / (x^2 + beta^2) near the origin
        beta = math.sqrt(-alpha)
        marks += [beta, 10.0 * beta, 100.0 * beta]
    # near-coincident breakpoints give degenerate panels and bad error estimates
    points = []
    for p in sorted(marks):
        if 0.0 < p < split * (1.0 - 1e-6) and (not points or p > points[-1] * (1.0 + 1e-6)):
            points.append(p)
    points = points or None
    head, err_h = _quad(f, 0.0, split, inner_rtol, points)
    tail, err_t = _quad(f, split, np.inf, inner_rtol)
    total = head + tail
    if not total > 0 or not math.isfinite(total):
        raise QuadratureFailure(f"G_{k}({alpha}) quadrature produced {total}")
    if (err_h + err_t) > rtol * total:
        raise QuadratureFailure(
            f"G_{k}({alpha}) error estimate {(err_h + err_t) / total:.2e} exceeds {rtol:.0e}")
    return total


def _bose_near_zero(nu: float, mu: float, terms: int = 40) -> float:
    """Gamma(nu)/2 Li_nu(e^mu) from Li_nu(e^mu) = Gamma(1-nu)(-mu)^(nu-1) + sum zeta(nu-n) mu^n/n!."""
    n = np.arange(terms)
    series = special.zeta(nu - n) * mu**n / special.factorial(n)
    li = special.gamma(1.0 - nu) * (-mu) ** (nu - 1.0) + math.fsum(series)
    return float(special.gamma(nu) * li / 2.0)


def g_series(params: KernelParams, terms: int | None = None) -> float:
    """Convergent series sum_j (-eta)^(j+1) e^(j alpha) j^(-(2k+3)/2) Gamma((2k+3)/2) / 2.

    Valid for alpha <= 0. At alpha = 0 the sums are the Riemann zeta (Bose) and
    Dirichlet eta (Fermi) values. Used as an independent oracle for
    :func:`g_integral`.
    """
    k, alpha = params.order, float(params.alpha)
    if alpha > 0:
        raise DomainError("series representation needs alpha <= 0")
    nu = (2 * k + 3) / 2.0
    fermi = params.statistics is Statistics.FERMI
    if alpha == 0.0:
        zeta = special.zeta(nu, 1)
        total = (1.0 - 2.0 ** (1.0 - nu)) * zeta if fermi else zeta
        return float(total * special.gamma(nu) / 2.0)
    if not fermi and terms is None and alpha > -1.0:
        return _bose_near_zero(nu, alpha)
    if terms is None:
        # e^{j alpha} < 1e-18 beyond this many terms
        terms = int(min(1e6, math.ceil(42.0 / -alpha) + 1))
    sign = -1.0 if fermi else 1.0
    j = np.arange(1, terms + 1, dtype=float)
    coeffs = (sign ** (j + 1)) * np.exp(j * alpha) * j ** (-nu)
    # sum smallest-first for accuracy
    return float(math.fsum(coeffs[::-1])) * special.gamma(nu) / 2.0


def bose_supremum(order: int = 0) -> float:
    """sup G_k over the Bose stand-in domain, attained at alpha -> 0-: Gamma(nu) zeta(nu) / 2."""
    nu = (2 * order + 3) / 2.0
    return float(special.gamma(nu) * special.zeta(nu, 1) / 2.0)


@lru_cache(maxsize=8192)
def _g_cached(order, alpha, stats, rtol):
    return g_integral(KernelParams(order, alpha, stats), rtol)


def g0(alpha: float, statistics, rtol: float = 1e-10) -> float:
    return _g_cached(0, float(alpha), Statistics.parse(statistics), rtol)


def g1(alpha: float, statistics, rtol: float = 1e-10) -> float:
    return _g_cached(1, float(alpha), Statistics.parse(statistics), rtol)


def invert_density(y: float, statistics, rtol: float = 1e-10) -> float:
    """Solve G_0(alpha) = y for alpha (unique: G_0 is strictly increasing)."""
    stats = Statistics.parse(statistics)
    if not y > 0 or not math.isfinite(y):
        raise DomainError(f"target density parameter must be positive, got {y}")
    c = 4.0 * y / SQRT_PI
    if stats is Statistics.FERMI:
        # 1/(e^t+1) < e^-t gives G_0(alpha) < (sqrt(pi)/4) e^alpha, so alpha > ln c
        lo = math.log(c)
        hi = max(lo, (3.0 * y) ** (2.0 / 3.0)) + 1.0
        while g0(hi, stats, rtol) < y:
            hi = 2.0 * hi + 1.0
            if hi > 1e12:
                raise ConvergenceFailure(f"cannot bracket Fermi inversion for y={y}")
    else:
        sup = bose_supremum(0)
        if y >= sup:
            raise BoseSaturation(
                f"y={y:.6g} reaches the Bose kernel supremum G_0(0-)={sup:.6g}", supremum=sup)
        # e^-t <= 1/(e^t-1) <= e^-t/(1-e^alpha) for t >= -alpha
        lo = math.log(c / (1.0 + c))
        hi = min(0.0, math.log(c))
    if lo == hi:
        return lo

    # bosons are solved in beta = sqrt(-alpha): G_0 has a sqrt(-alpha) cusp at 0
    bose = stats is Statistics.BOSE

    def to_alpha(v):
        return -v * v if bose else v

    def resid(v):
        return math.log(g0(to_alpha(v), stats, rtol)) - math.log(y)

    if bose:
        lo, hi = math.sqrt(-hi), math.sqrt(-lo)
    if hi - lo <= 4.0 * np.finfo(float).eps * max(abs(lo), abs(hi)):
        # the bounds already pin the root to machine precision (very dilute gas)
        alpha = to_alpha(0.5 * (lo + hi))
        if abs(g0(alpha, stats, rtol) - y) > rtol * y:
            raise ConvergenceFailure(f"inversion residual above {rtol} for y={y}")
        return alpha
    f_lo, f_hi = resid(lo), resid(hi)
    if bose:
        f_lo, f_hi = -f_lo, -f_hi  # G_0 decreases with beta
    if f_lo == 0.0:
        return to_alpha(lo)
    if f_hi == 0.0:
        return to_alpha(hi)
    if f_lo > 0 or f_hi < 0:
        raise ConvergenceFailure(f"inversion bracket [{lo}, {hi}] does not enclose the root")
    try:
        root = optimize.brentq(resid, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                               maxiter=200)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    alpha = to_alpha(root)
    if abs(g0(alpha, stats, rtol) - y) > rtol * y:
        raise ConvergenceFailure(f"inversion residual above {rtol} for y={y}")
    return alpha


def kinetic_ratio(alpha: float, statistics, rtol: float = 1e-10) -> float:
    """(2/3) G_1(alpha) / G_0(alpha): the ideal tau/theta for one component."""
    return 2.0 * g1(alpha, statistics, rtol) / (3.0 * g0(alpha, statistics, rtol))


def classical_ratio_check(alphas, statistics=(Statistics.FERMI, Statistics.BOSE)) -> dict:
    """Max |(2/3) G_1/G_0 - 1| over ``alphas`` for each statistics."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if np.any(alphas > -10.0):
        raise DomainError("classical ratio check expects alpha <= -10")
    report = {}
    for stats in statistics:
        stats = Statistics.parse(stats)
        devs = [abs(kinetic_ratio(a, stats) - 1.0) for a in alphas]
        i = int(np.argmax(devs))
        report[stats.value] = {"max_deviation": devs[i], "at_alpha": float(alphas[i])}
    return report


# -- vectorised route ---------------------------------------------------------
# Fixed composite Gauss-Legendre nodes, used for grids of (theta, rho) points.
# Cross-checked against the adaptive scalar route in the test-suite.

BATCH_ALPHA_MAX = 2000.0
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_FLAT_X, _FLAT_W = np.polynomial.legendre.leggauss(24)
_PANELS = 24
_GRADED_EDGES = np.concatenate([[0.0], 2.0 ** np.arange(-40.0, 1.0)])


def _panel_nodes(a, b, panels):
    """Nodes/weights of composite GL on [a_i, b_i] for each row i; shapes (n, panels*16)."""
    edges = a[:, None] + (b - a)[:, None] * np.linspace(0.0, 1.0, panels + 1)[None, :]
    lo, hi = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (hi - lo)
    x = (lo + half)[:, :, None] + half[:, :, None] * _GL_X[None, None, :]
    w = half[:, :, None] * _GL_W[None, None, :]
    return x.reshape(len(a), -1), w.reshape(len(a), -1)


def _occupation(u, fermi):
    """F(u) = 1/(e^u + eta) and dF/du for arrays."""
    if fermi:
        f = special.expit(-u)
        return f, -f * (1.0 - f)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        f = 1.0 / np.expm1(u)
    f = np.where(u > 700.0, 0.0, f)
    return f, -f * (1.0 + f)


def _moments_on(x, w, alphas, fermi):
    u = x * x - alphas[:, None]
    occ, docc = _occupation(u, fermi)
    if not fermi:
        # x^2/(e^{x^2}-1) -> 1 at x -> 0 when alpha = 0
        occ = np.where(u == 0.0, 0.0, occ)
        docc = np.where(u == 0.0, 0.0, docc)
    x2w = w * x * x
    return np.sum(x2w * occ, axis=1), np.sum(x2w * x * x * occ, axis=1), -np.sum(x2w * docc, axis=1)


def _batch_moments(alphas, fermi):
    """G_0, G_1 and dG_0/dalpha for an array of alphas (alpha <= BATCH_ALPHA_MAX)."""
    alphas = np.asarray(alphas, dtype=float)
    x2 = np.sqrt(np.maximum(alphas, 0.0) + 44.0)
    if fermi:
        # flat region [0, x1]: occupation within e^-36 of 1
        x1 = np.sqrt(np.maximum(alphas - 36.0, 0.0))
        xk, wk = _panel_nodes(x1, x2, _PANELS)
        if np.any(x1 > 0):
            xf = 0.5 * x1[:, None] * (_FLAT_X[None, :] + 1.0)
            wf = 0.5 * x1[:, None] * _FLAT_W[None, :]
            xk, wk = np.concatenate([xf, xk], axis=1), np.concatenate([wf, wk], axis=1)
        return _moments_on(xk, wk, alphas, fermi)
    out = tuple(np.empty_like(alphas) for _ in range(3))
    # geometric panels toward the origin resolve the x^2/(x^2 + beta^2) cusp for small beta
    near = alphas > -1.0
    for mask, graded in ((near, True), (~near, False)):
        if not np.any(mask):
            continue
        a = alphas[mask]
        lo = np.ones_like(a) if graded else np.zeros_like(a)
        x, w = _panel_nodes(lo, x2[mask], _PANELS)
        if graded:
            xg, wg = _panel_nodes(_GRADED_EDGES[:-1], _GRADED_EDGES[1:], 1)
            x = np.concatenate([np.broadcast_to(xg.ravel(), (a.size, xg.size)), x], axis=1)
            w = np.concatenate([np.broadcast_to(wg.ravel(), (a.size, wg.size)), w], axis=1)
        for dst, val in zip(out, _moments_on(x, w, a, fermi)):
            dst[mask] = val
    return out


def g_moments_batch(alphas, statistics):
    """(G_0, G_1) for an array of alphas in one pass."""
    stats = Statistics.parse(statistics)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    if stats is Statistics.BOSE and np.any(alphas > 0):
        raise DomainError("Bose kernel requires alpha <= 0")
    g0v, g1v = np.empty_like(alphas), np.empty_like(alphas)
    small = alphas <= BATCH_ALPHA_MAX
    if np.any(small):
        g0v[small], g1v[small], _ = _batch_moments(alphas[small], stats is Statistics.FERMI)
    for i in np.flatnonzero(~small):
        g0v[i] = g_integral(KernelParams(0, float(alphas[i]), stats))
        g1v[i] = g_integral(KernelParams(1, float(alphas[i]), stats))
    return g0v, g1v


def g_batch(order: int, alphas, statistics) -> np.ndarray:
    """Vectorised G_k(alpha); falls back to adaptive quadrature beyond BATCH_ALPHA_MAX."""
    if order not in (0, 1):
        raise DomainError(f"kernel order must be 0 or 1, got {order}")
    return g_moments_batch(alphas, statistics)[order]


def invert_density_batch(y, statistics, rtol: float = 1e-10, max_iter: int = 200) -> np.ndarray:
    """Vectorised inverse of G_0 by bracketed Newton iteration on ln G_0."""
    stats = Statistics.parse(statistics)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(~(y > 0)) or not np.all(np.isfinite(y)):
        raise DomainError("target density parameters must be positive and finite")
    fermi = stats is Statistics.FERMI
    c = 4.0 * y / SQRT_PI
    if fermi:
        lo = np.log(c)
        hi = np.maximum(lo, (3.0 * y) ** (2.0 / 3.0)) + 1.0
        if np.any(hi > BATCH_ALPHA_MAX):
            return np.array([invert_density(v, stats, rtol) for v in y])
    else:
        sup = bose_supremum(0)
        if np.any(y >= sup):
            raise BoseSaturation(
                f"y={y.max():.6g} reaches the Bose kernel supremum G_0(0-)={sup:.6g}",
                supremum=sup)
        lo = np.log(c / (1.0 + c))
        hi = np.minimum(0.0, np.log(c))
    log_y = np.log(y)
    alpha = np.where(c < 1.0, np.clip(np.log(c), lo, hi), 0.5 * (lo + hi))
    active = np.arange(y.size)
    for _ in range(max_iter):
        a = alpha[active]
        g0v, _, dg0 = _batch_moments(a, fermi)
        resid = np.log(g0v) - log_y[active]
        lo[active] = np.where(resid < 0, a, lo[active])
        hi[active] = np.where(resid > 0, a, hi[active])
        trial = a - resid * g0v / dg0
        bad = (trial <= lo[active]) | (trial >= hi[active]) | ~np.isfinite(trial)
        new = np.where(bad, 0.5 * (lo[active] + hi[active]), trial)
        alpha[active] = new
        done = (np.abs(new - a) <= 1e-14 * np.maximum(1.0, np.abs(a))) & (np.abs(resid) <= rtol)
        active = active[~done]
        if active.size == 0:
            return alpha
    raise ConvergenceFailure("vectorised density inversion did not converge")
