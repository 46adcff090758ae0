"""Within-kind permutations, cycle-count spin weights and the exchange factor omega_s."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .core_types import MultiIndex, SpeciesSpec, Statistics
from .errors import TooLarge, ValidationError

MAX_PERMUTATIONS = 1_000_000


def cycle_count(perm: Sequence[int]) -> int:
    """Number of cycles (fixed points included) of a permutation in one-line form."""
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycles += 1
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
    return cycles


def parity(perm: Sequence[int]) -> int:
    """+1 for even, -1 for odd permutations."""
    return -1 if (len(perm) - cycle_count(perm)) % 2 else 1


@dataclass(frozen=True)
class GroupPermutation:
    """A tuple of per-kind permutations (0-based one-line notation)."""

    perms: tuple
    fermion_parity: int
    cycle_counts: tuple

    @classmethod
    def from_perms(cls, perms, statistics: Optional[Sequence[Statistics]] = None):
        perms = tuple(tuple(int(i) for i in p) for p in perms)
        for p in perms:
            if sorted(p) != list(range(len(p))):
                raise ValidationError(f"{p} is not a permutation")
        sign = 1
        if statistics is not None:
            if len(statistics) != len(perms):
                raise ValidationError("one statistics entry per group is required")
            for p, st in zip(perms, statistics):
                if Statistics.parse(st) is Statistics.FERMI:
                    sign *= parity(p)
        return cls(perms, sign, tuple(cycle_count(p) for p in perms))

    @property
    def sizes(self) -> tuple:
        return tuple(len(p) for p in self.perms)

    def is_identity(self) -> bool:
        return all(p == tuple(range(len(p))) for p in self.perms)


def permutation_count(s: MultiIndex) -> int:
    return math.prod(math.factorial(c) for c in s.counts)


def enumerate_permutations(
    s: MultiIndex,
    statistics: Optional[Sequence[Statistics]] = None,
    max_count: int = MAX_PERMUTATIONS,
) -> Iterator[GroupPermutation]:
    """Yield all prod_a s_a! within-kind permutations in lexicographic order.

    ``statistics`` (one per kind) fixes the fermion parity of each element;
    without it every element carries parity +1.
    """
    total = permutation_count(s)
    if total > max_count:
        raise TooLarge(f"{total} permutations exceed the guard of {max_count}")
    if statistics is not None and len(statistics) != s.n:
        raise ValidationError("statistics must list one entry per kind")
    groups = [list(itertools.permutations(range(c))) for c in s.counts]
    for combo in itertools.product(*groups):
        yield GroupPermutation.from_perms(combo, statistics)


def kappa_weight(p: GroupPermutation, species: Sequence[SpeciesSpec]) -> int:
    """Signed spin weight (-1)^{p_s} prod_a kappa_a^{nu_a}; the sign counts fermion groups only."""
    if len(species) != len(p.perms):
        raise ValidationError("permutation groups and species list differ in length")
    sign = 1
    for perm, sp in zip(p.perms, species):
        if sp.statistics is Statistics.FERMI:
            sign *= parity(perm)
    weight = 1
    for nu, sp in zip(p.cycle_counts, species):
        weight *= sp.kappa**nu
    return sign * weight


def brute_force_spin_count(perms: Sequence[Sequence[int]], kappas: Sequence[int]) -> int:
    """Count spin assignments Sigma with P Sigma == Sigma by direct enumeration."""
    sizes = [len(p) for p in perms]
    ranges = []
    for size, kappa in zip(sizes, kappas):
        ranges.extend([range(kappa)] * size)
    if not ranges:
        return 1
    table = np.array(list(itertools.product(*ranges)), dtype=np.int8)
    offsets = np.cumsum([0] + sizes[:-1])
    columns = np.concatenate(
        [np.asarray(p, dtype=int) + off for p, off in zip(perms, offsets) if len(p)])
    return int(np.all(table[:, columns] == table, axis=1).sum())


@dataclass(frozen=True)
class PhaseSpacePoint:
    """Positions and momenta grouped per kind, each an array of shape (s_a, d)."""

    coordinates: tuple
    momenta: tuple

    def __post_init__(self):
        coords = tuple(np.atleast_2d(np.asarray(c, dtype=float)) if np.size(c) else
                       np.zeros((0, 0)) for c in self.coordinates)
        moms = tuple(np.atleast_2d(np.asarray(m, dtype=float)) if np.size(m) else
                     np.zeros((0, 0)) for m in self.momenta)
        if len(coords) != len(moms):
            raise ValidationError("coordinate and momentum groups differ in number")
        dims = {c.shape[1] for c in coords + moms if c.size}
        if len(dims) > 1 or not dims <= {1, 3}:
            raise ValidationError("all vectors must share one dimension d in {1, 3}")
        for c, m in zip(coords, moms):
            if c.shape[0] != m.shape[0]:
                raise ValidationError("each group needs as many momenta as coordinates")
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "momenta", moms)

    @property
    def counts(self) -> tuple:
        return tuple(c.shape[0] if c.size else 0 for c in self.coordinates)

    @property
    def dimension(self) -> int:
        for c in self.coordinates:
            if c.size:
                return c.shape[1]
        return 3


def omega(point: PhaseSpacePoint, species: Sequence[SpeciesSpec], s: MultiIndex,
          hbar: float = 1.0, max_count: int = MAX_PERMUTATIONS) -> complex:
    """Spin-summed exchange factor.

    (1/prod s_a!) sum_P (-1)^{p_s} kappa_s(P) exp(-(i/hbar) sum_a sum_k r_k . p_{P(k)})
    with permutations acting inside each kind only.
    """
    if point.counts != s.counts:
        raise ValidationError(f"point groups {point.counts} do not match multi-index {s}")
    total = 0j
    for perm in enumerate_permutations(s, [sp.statistics for sp in species], max_count):
        phase = 0.0
        for pa, r, p in zip(perm.perms, point.coordinates, point.momenta):
            if len(pa):
                phase += float(np.sum(r * p[list(pa)]))
        total += kappa_weight(perm, species) * np.exp(-1j * phase / hbar)
    return total / permutation_count(s)


def ideal_pair_correlation(r, species: SpeciesSpec, tau: float, hbar: float = 1.0):
    """g_aa(r) = 1 + eta_a / kappa_a * exp(-m_a tau r^2 / hbar^2) for an ideal uniform gas."""
    if tau <= 0:
        raise ValidationError("tau must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValidationError("separation must be non-negative")
    return 1.0 + species.sign / species.kappa * np.exp(-species.mass * tau * r**2 / hbar**2)
