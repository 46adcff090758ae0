import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixtherm.core_types import MultiIndex, SpeciesSpec, Statistics
from mixtherm.errors import NonPositiveTau, ValidationError
from mixtherm.ns_coefficients import (
    NsFamily,
    ThermalFactor,
    check_reduction,
    coefficient,
    coefficient_by_recursion,
    incompatibility_demo,
    relative_variation,
    thermal_factor,
)

F = Statistics.FERMI


def two_kinds(rho=(0.3, 0.7), kappa=(2, 1), mass=(1.0, 2.5)):
    return [SpeciesSpec(f"k{i}", m, k, F, r) for i, (m, k, r) in enumerate(zip(mass, kappa, rho))]


def test_thermal_factor_formula():
    sp = SpeciesSpec("a", 2.0, 2, F, 0.5)
    assert thermal_factor(sp, 0.7) == pytest.approx(0.25 * (2 * math.pi / (2.0 * 0.7)) ** 1.5)
    assert thermal_factor(sp, 0.7, dim=1) == pytest.approx(0.25 * (2 * math.pi / 1.4) ** 0.5)
    with pytest.raises(NonPositiveTau):
        thermal_factor(sp, 0.0)


def test_coefficient_trivial_cases():
    f = ThermalFactor((0.2, 3.0))
    assert coefficient(MultiIndex((0, 0)), f) == 1.0
    assert coefficient(MultiIndex((1, 0)), f) == 0.2
    assert coefficient(MultiIndex((2, 1)), f) == pytest.approx(2 * 0.04 * 3.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=3),
       st.lists(st.floats(0.01, 5.0), min_size=3, max_size=3),
       st.randoms(use_true_random=False))
def test_recursion_path_independent(counts, factors, rnd):
    s = MultiIndex(tuple(counts))
    f = ThermalFactor(tuple(factors[: len(counts)]))
    descent = [a for a, c in enumerate(counts) for _ in range(c)]
    rnd.shuffle(descent)
    assert coefficient_by_recursion(s, f, descent) == pytest.approx(coefficient(s, f), rel=1e-12)


def test_recursion_rejects_bad_descent():
    with pytest.raises(ValidationError):
        coefficient_by_recursion(MultiIndex((2,)), ThermalFactor((1.0,)), [0])


def test_family_shared_tau_and_complex_argument():
    fam = NsFamily.uniform(two_kinds(), 1.3)
    s = MultiIndex((1, 1))
    z = np.array([0.0, 1.3])
    np.testing.assert_allclose(fam(s, z), fam.coefficient(s) * np.array([1.0, math.exp(-1.0)]))
    zc = 0.5 + 0.2j
    assert fam(s, zc) == pytest.approx(fam.coefficient(s) * np.exp(-zc / 1.3))


@pytest.mark.parametrize("counts,a", [((1, 0), 0), ((2, 1), 0), ((2, 1), 1), ((0, 3), 1)])
@pytest.mark.parametrize("dim", [1, 3])
def test_exponential_family_reduces_exactly(counts, a, dim):
    r = check_reduction(MultiIndex(counts), a, two_kinds(), 0.8, dim=dim)
    assert r.max_residual < 1e-10
    assert r.closed_form_max_residual < 1e-13
    assert r.quadrature_vs_closed < 1e-10


def test_reduction_needs_particle():
    with pytest.raises(ValidationError):
        check_reduction(MultiIndex((0, 1)), 0, two_kinds(), 1.0)


def test_perturbed_family_fails_reduction():
    sp = two_kinds()
    s = MultiIndex((2, 0))
    fam = NsFamily.uniform(sp, 1.0)
    r = check_reduction(s, 0, sp, 1.0, n_s=lambda z: fam(s, z) * (1 + 0.1 * np.exp(-z)),
                        n_lower=lambda z: fam(s.lowered(0), z))
    assert r.max_residual > 1e-2
    r = check_reduction(s, 0, sp, 1.0, n_s=lambda z: fam(s, z),
                        n_lower=lambda z: fam(s.lowered(0), z) * 1.05)
    assert r.max_residual > 1e-2


def test_wrong_tau_in_upper_member_fails():
    sp = two_kinds()
    s = MultiIndex((1, 1))
    hot = NsFamily.uniform(sp, 1.2)
    cold = NsFamily.uniform(sp, 1.0)
    r = check_reduction(s, 1, sp, 1.0, n_s=lambda z: hot(s, z), n_lower=lambda z: cold(s.lowered(1), z))
    assert r.max_residual > 1e-2


def test_incompatibility_exponential_proportional():
    rep = incompatibility_demo("exponential", "exponential", kappas=(1, 2), densities=(0.4, 0.9))
    assert rep.variation < 1e-12
    assert rep.map_ratio_variation < 1e-12
    assert rep.implied_ratio == pytest.approx(0.9 / (2 * 0.4))


@pytest.mark.parametrize("dist", ["fermi", "bose"])
def test_incompatibility_quantum_not_proportional(dist):
    rep = incompatibility_demo(dist, dist, kappas=(1, 2), densities=(0.1, 0.1))
    assert rep.variation > 1e-2
    assert not rep.proportional


def test_incompatibility_equal_kappa_is_trivially_proportional():
    rep = incompatibility_demo("fermi", "fermi", kappas=(2, 2), densities=(0.5, 0.5))
    assert rep.variation < 1e-12


def test_incompatibility_unknown_distribution():
    with pytest.raises(ValidationError):
        incompatibility_demo("boltzmann", "fermi")


def test_relative_variation():
    assert relative_variation([2.0, 2.0]) == 0.0
    assert relative_variation([1.0, 3.0]) == pytest.approx(1.0)
