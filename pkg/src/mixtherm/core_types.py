"""Domain vocabulary: species, mixtures, multi-indices, potentials, correlations.

Natural units are used throughout (hbar = k_B = 1 unless a :class:`UnitSystem`
says otherwise); temperatures are energies.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    EmptyMixture,
    IndexOutOfRange,
    NonPositiveDensity,
    NonPositiveTemperature,
    OutOfTableRange,
    ValidationError,
)

FD_REL_STEP = 1e-5


class Statistics(enum.Enum):
    FERMI = "fermi"
    BOSE = "bose"

    @property
    def sign(self) -> int:
        """Exchange sign: +1 for bosons, -1 for fermions."""
        return 1 if self is Statistics.BOSE else -1

    @classmethod
    def parse(cls, value) -> "Statistics":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(f"unknown statistics {value!r}") from None


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 1.0
    note: str = "natural units, hbar = k_B = 1; temperatures in energy units"

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValidationError("hbar must be positive")


NATURAL = UnitSystem()


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs with their documented defaults (all overridable from config)."""

    kernel_rtol: float = 1e-10
    fd_rel_step: float = FD_REL_STEP
    ode_rtol: float = 1e-9
    anchor_alpha_max: float = -10.0
    z_points: int = 64
    z_extent: float = 10.0  # in units of tau
    oracle_max_points: int = 512
    max_permutations: int = 1_000_000
    radial_rtol: float = 1e-12

    @classmethod
    def from_mapping(cls, data) -> "Tolerances":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown tolerance keys {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class SpeciesSpec:
    label: str
    mass: float
    spin_degeneracy: int
    statistics: Statistics
    density: float

    def __post_init__(self):
        object.__setattr__(self, "statistics", Statistics.parse(self.statistics))
        if not self.mass > 0:
            raise ValidationError(f"species {self.label!r}: mass must be positive")
        if int(self.spin_degeneracy) != self.spin_degeneracy or self.spin_degeneracy < 1:
            raise ValidationError(f"species {self.label!r}: spin degeneracy must be an integer >= 1")
        object.__setattr__(self, "spin_degeneracy", int(self.spin_degeneracy))
        if not self.density > 0:
            raise NonPositiveDensity(f"species {self.label!r}: density must be positive")

    @property
    def kappa(self) -> int:
        return self.spin_degeneracy

    @property
    def sign(self) -> int:
        return self.statistics.sign

    def with_density(self, density: float) -> "SpeciesSpec":
        return replace(self, density=density)


@dataclass(frozen=True)
class MixtureState:
    temperature: float
    total_density: float
    fractions: tuple

    def __post_init__(self):
        if not self.temperature > 0:
            raise NonPositiveTemperature("temperature must be positive")
        if not self.total_density > 0:
            raise NonPositiveDensity("total density must be positive")
        fr = tuple(float(f) for f in self.fractions)
        if not fr:
            raise EmptyMixture("mixture has no components")
        if any(f <= 0 for f in fr):
            raise NonPositiveDensity("composition fractions must be positive")
        if abs(math.fsum(fr) - 1.0) > 1e-12:
            raise ValidationError("composition fractions must sum to 1")
        object.__setattr__(self, "fractions", fr)

    @property
    def densities(self) -> tuple:
        return tuple(self.total_density * f for f in self.fractions)

    def at(self, temperature: float, total_density: float) -> "MixtureState":
        """Same composition at another (theta, rho) point."""
        return MixtureState(temperature, total_density, self.fractions)


def build_mixture(species: Sequence[SpeciesSpec], theta: float) -> MixtureState:
    if not species:
        raise EmptyMixture("at least one species is required")
    for sp in species:
        if not sp.density > 0:
            raise NonPositiveDensity(f"species {sp.label!r} has non-positive density")
    if not theta > 0:
        raise NonPositiveTemperature("theta must be positive")
    rho = math.fsum(sp.density for sp in species)
    fractions = [sp.density / rho for sp in species]
    # absorb rounding so the fractions sum to one exactly
    fractions[-1] = 1.0 - math.fsum(fractions[:-1])
    return MixtureState(theta, rho, tuple(fractions))


@dataclass(frozen=True)
class MultiIndex:
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValidationError("multi-index counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def order(self) -> int:
        return sum(self.counts)

    @property
    def n(self) -> int:
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    def __getitem__(self, a):
        return self.counts[a]

    def lowered(self, a: int) -> "MultiIndex":
        """The index with one particle of kind ``a`` (0-based) removed."""
        if self.counts[a] < 1:
            raise IndexOutOfRange(f"component {a} is already zero")
        c = list(self.counts)
        c[a] -= 1
        return MultiIndex(tuple(c))

    def raised(self, a: int) -> "MultiIndex":
        c = list(self.counts)
        c[a] += 1
        return MultiIndex(tuple(c))

    def __str__(self):
        return "(" + ",".join(str(c) for c in self.counts) + ")"


_SHORTHAND = re.compile(r"^\(?\s*(\d+)_(\d+)(?:\s+(\d+)_(\d+))?\s*\)?$")


def multi_index(shorthand: str, n: int) -> MultiIndex:
    """Build ``(1_a)``, ``(2_a)`` or ``(1_a 1_b)`` with 1-based kinds, e.g. ``"1_1 1_2"``."""
    m = _SHORTHAND.match(shorthand.strip())
    if not m:
        raise ValidationError(f"unrecognised multi-index shorthand {shorthand!r}")
    c1, a, c2, b = m.groups()
    counts = [0] * n
    a = int(a)
    if not 1 <= a <= n:
        raise IndexOutOfRange(f"kind {a} outside 1..{n}")
    if c2 is None:
        if int(c1) not in (1, 2):
            raise ValidationError("only (1_a) and (2_a) single-kind forms are supported")
        counts[a - 1] = int(c1)
    else:
        b = int(b)
        if not 1 <= b <= n:
            raise IndexOutOfRange(f"kind {b} outside 1..{n}")
        if a == b or int(c1) != 1 or int(c2) != 1:
            raise ValidationError("(1_a 1_b) requires distinct kinds a != b")
        counts[a - 1] = 1
        counts[b - 1] = 1
    return MultiIndex(tuple(counts))


def pair_key(a: str, b: str) -> tuple:
    return (a, b) if a <= b else (b, a)


def _central_diff(f, x, rel_step=FD_REL_STEP):
    x = np.asarray(x, dtype=float)
    h = rel_step * np.maximum(np.abs(x), 1.0)
    return (f(x + h) - f(x - h)) / (2.0 * h)


# -- pair potentials ---------------------------------------------------------

def _lj(eps, sigma):
    def k(r):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            sr6 = (sigma / np.asarray(r, dtype=float)) ** 6
            return 4.0 * eps * (sr6 * sr6 - sr6)

    def dk(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            sr6 = (sigma / r) ** 6
            return -24.0 * eps * (2.0 * sr6 * sr6 - sr6) / r

    return k, dk


def _closed_forms(form, p):
    """Return (K, dK/dr, jumps, range_hint) for a named closed form."""
    if form == "zero":
        return (lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                lambda r: np.zeros_like(np.asarray(r, dtype=float)), (), 1.0)
    if form == "square_well":
        k0, big_r = float(p["depth"]), float(p["radius"])

        def k(r):
            r = np.asarray(r, dtype=float)
            return np.where(r < big_r, k0, 0.0)

        return k, (lambda r: np.zeros_like(np.asarray(r, dtype=float))), ((big_r, -k0),), big_r
    if form == "exponential":
        amp, lam = float(p["amplitude"]), float(p["length"])
        return (lambda r: amp * np.exp(-np.asarray(r, dtype=float) / lam),
                lambda r: -amp / lam * np.exp(-np.asarray(r, dtype=float) / lam), (), 40.0 * lam)
    if form == "gaussian":
        amp, w = float(p["amplitude"]), float(p["width"])

        def k(r):
            r = np.asarray(r, dtype=float)
            return amp * np.exp(-0.5 * (r / w) ** 2)

        def dk(r):
            r = np.asarray(r, dtype=float)
            return -amp * r / w**2 * np.exp(-0.5 * (r / w) ** 2)

        return k, dk, (), 10.0 * w
    if form == "yukawa":
        amp, lam = float(p["amplitude"]), float(p["length"])

        def k(r):
            r = np.asarray(r, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return amp * np.exp(-r / lam) / r

        def dk(r):
            r = np.asarray(r, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return -amp * np.exp(-r / lam) * (1.0 / (r * lam) + 1.0 / r**2)

        return k, dk, (), 40.0 * lam
    if form == "lennard_jones":
        eps, sigma = float(p["epsilon"]), float(p["sigma"])
        k, dk = _lj(eps, sigma)
        return k, dk, (), 10.0 * sigma
    raise ValidationError(f"unknown potential form {form!r}")


CLOSED_FORMS = ("zero", "square_well", "exponential", "gaussian", "yukawa", "lennard_jones")


@dataclass(frozen=True)
class PairPotential:
    """Isotropic pair potential K_ab(r) between kinds ``pair = (a, b)``.

    ``jumps`` lists ``(radius, K(radius+) - K(radius-))`` discontinuities so that
    radial integrals of dK/dr can pick up the delta-function contributions.
    Tabulated potentials cover ``[table_start, table_end]`` and either carry an
    explicit ``tail`` (callable pair K, dK) beyond the table or are treated as
    out of range there.
    """

    pair: tuple
    func: Callable = field(repr=False)
    deriv: Optional[Callable] = field(default=None, repr=False)
    jumps: tuple = ()
    range_hint: float = 10.0
    table_start: Optional[float] = None
    table_end: Optional[float] = None
    tail: Optional[tuple] = field(default=None, repr=False)
    description: str = ""
    fd_rel_step: float = FD_REL_STEP

    @classmethod
    def closed_form(cls, pair, form: str, **params) -> "PairPotential":
        k, dk, jumps, rng = _closed_forms(form, params)
        desc = form + "(" + ", ".join(f"{k}={v}" for k, v in sorted(params.items())) + ")"
        return cls(tuple(pair), k, dk, tuple(jumps), float(rng), description=desc)

    @classmethod
    def tabulated(cls, pair, r, k, tail=None) -> "PairPotential":
        """Monotone-cubic (PCHIP) interpolation of samples ``(r_i, K_i)``.

        ``tail`` is ``None`` (evaluation beyond the table raises), ``"zero"`` or a
        ``(K, dK)`` pair of callables valid for r beyond the last sample.
        """
        r = np.asarray(r, dtype=float)
        k = np.asarray(k, dtype=float)
        if r.ndim != 1 or r.shape != k.shape or r.size < 2:
            raise ValidationError("tabulated potential needs matching 1-D arrays with >= 2 samples")
        if np.any(np.diff(r) <= 0):
            raise ValidationError("tabulated radii must be strictly increasing")
        interp = PchipInterpolator(r, k, extrapolate=False)
        dinterp = interp.derivative()
        if tail == "zero":
            tail = (lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                    lambda x: np.zeros_like(np.asarray(x, dtype=float)))
        lo, hi = float(r[0]), float(r[-1])
        jumps = ()
        if tail is not None:
            step = float(tail[0](np.array([hi]))[0]) - float(k[-1])
            if step != 0.0:
                jumps = ((hi, step),)

        def piecewise(inner, outer_idx):
            def f(x):
                x = np.asarray(x, dtype=float)
                if np.any(x < lo) or (tail is None and np.any(x > hi)):
                    raise OutOfTableRange(
                        f"potential {pair} evaluated outside table [{lo}, {hi}]")
                out = inner(np.clip(x, lo, hi))
                if tail is not None:
                    beyond = x > hi
                    if np.any(beyond):
                        out = np.where(beyond, tail[outer_idx](np.where(beyond, x, hi)), out)
                return out
            return f

        return cls(tuple(pair), piecewise(interp, 0), piecewise(dinterp, 1), jumps,
                   range_hint=hi, table_start=lo, table_end=hi, tail=tail,
                   description=f"tabulated[{r.size} pts]")

    def __call__(self, r):
        return self.func(r)

    def derivative(self, r):
        if self.deriv is not None:
            return self.deriv(r)
        return _central_diff(self.func, r, self.fd_rel_step)

    @property
    def is_tabulated(self) -> bool:
        return self.table_end is not None

    @property
    def split_radius(self) -> float:
        """Radius separating the finite-range part from the tail of radial integrals."""
        return float(self.table_end if self.is_tabulated else self.range_hint)

    def swapped(self) -> "PairPotential":
        return replace(self, pair=(self.pair[1], self.pair[0]))


# -- correlation models ------------------------------------------------------

@dataclass(frozen=True)
class CorrelationModel:
    """Pair correlation g_ab(theta, rho, r) with partial derivatives.

    Missing partials fall back to central differences with relative step
    ``fd_rel_step``. Composition fractions are held fixed when differentiating
    with respect to the total density rho.
    """

    pair: tuple
    evaluator: Callable = field(repr=False)
    d_theta_fn: Optional[Callable] = field(default=None, repr=False)
    d_rho_fn: Optional[Callable] = field(default=None, repr=False)
    d_r_fn: Optional[Callable] = field(default=None, repr=False)
    name: str = "custom"
    fd_rel_step: float = FD_REL_STEP

    def __call__(self, theta, rho, r):
        return self.evaluator(theta, rho, np.asarray(r, dtype=float))

    def d_theta(self, theta, rho, r):
        if self.d_theta_fn is not None:
            return self.d_theta_fn(theta, rho, np.asarray(r, dtype=float))
        h = self.fd_rel_step * abs(theta)
        return (self(theta + h, rho, r) - self(theta - h, rho, r)) / (2.0 * h)

    def d_rho(self, theta, rho, r):
        if self.d_rho_fn is not None:
            return self.d_rho_fn(theta, rho, np.asarray(r, dtype=float))
        h = self.fd_rel_step * abs(rho)
        return (self(theta, rho + h, r) - self(theta, rho - h, r)) / (2.0 * h)

    def d_r(self, theta, rho, r):
        if self.d_r_fn is not None:
            return self.d_r_fn(theta, rho, np.asarray(r, dtype=float))
        return _central_diff(lambda x: self(theta, rho, x), r, self.fd_rel_step)

    def swapped(self) -> "CorrelationModel":
        return replace(self, pair=(self.pair[1], self.pair[0]))

    @classmethod
    def unity(cls, pair) -> "CorrelationModel":
        def one(theta, rho, r):
            return np.ones_like(r)

        def zero(theta, rho, r):
            return np.zeros_like(r)

        return cls(tuple(pair), one, zero, zero, zero, name="unity")

    @classmethod
    def classical_boltzmann(cls, potential: PairPotential) -> "CorrelationModel":
        """Low-density classical closure g = exp(-K/theta)."""

        def boltz(theta, r):
            with np.errstate(over="ignore", invalid="ignore"):
                k = potential(r)
                g = np.exp(-k / theta)
            return k, g

        def g(theta, rho, r):
            return boltz(theta, r)[1]

        def g_theta(theta, rho, r):
            k, gv = boltz(theta, r)
            return _zero_where_vanishing(gv, k * gv / theta**2)

        def g_rho(theta, rho, r):
            return np.zeros_like(r)

        def g_r(theta, rho, r):
            k, gv = boltz(theta, r)
            with np.errstate(invalid="ignore", over="ignore"):
                return _zero_where_vanishing(gv, -potential.derivative(r) * gv / theta)

        return cls(tuple(potential.pair), g, g_theta, g_rho, g_r, name="classical-boltzmann")

    @classmethod
    def tabulated(cls, pair, r, g) -> "CorrelationModel":
        """State-independent g(r) from samples; equals 1 beyond the last sample."""
        r = np.asarray(r, dtype=float)
        interp = PchipInterpolator(r, np.asarray(g, dtype=float), extrapolate=False)
        dinterp = interp.derivative()
        lo, hi = float(r[0]), float(r[-1])

        def ev(fn, beyond_value):
            def f(theta, rho, x):
                if np.any(x < lo):
                    raise OutOfTableRange(f"correlation {pair} evaluated below r={lo}")
                return np.where(x > hi, beyond_value, fn(np.clip(x, lo, hi)))
            return f

        def zero(theta, rho, x):
            return np.zeros_like(x)

        return cls(tuple(pair), ev(interp, 1.0), zero, zero, ev(dinterp, 0.0), name="tabulated")


def _zero_where_vanishing(g, value):
    # exp(-K/theta) underflows to 0 inside hard cores where K itself overflows
    return np.where(g == 0.0, 0.0, value)
