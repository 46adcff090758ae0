import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixtherm import hierarchy as H
from mixtherm.core_types import PairPotential, SpeciesSpec, Statistics, multi_index
from mixtherm.errors import GridMismatch, PoleHit, TooLarge, UnsupportedOrder, ValidationError
from mixtherm.exchange import ideal_pair_correlation

F, B = Statistics.FERMI, Statistics.BOSE


def test_grid_basics():
    g = H.Grid1D(32, 8.0)
    assert g.h == 0.25 and g.x[-1] == pytest.approx(7.75)
    assert g.separation(7.5, 0.5) == pytest.approx(-1.0)
    with pytest.raises(ValidationError):
        H.Grid1D(8, 1.0)


def test_free_resolvent_pole_guard():
    assert H.free_resolvent(1.0, 1.5 + 0j, 1.0) == pytest.approx(1.0)
    with pytest.raises(PoleHit):
        H.free_resolvent(1.0, 0.5, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 3.0), st.floats(-2, 2), st.floats(0.1, 2.0),
       st.floats(-1, 1))
def test_constant_potential_gives_shifted_free_resolvent(p, m, re, im, u0):
    grid = H.Grid1D(32, 5.0)
    z = complex(re, im)
    v = H.resolvent_solve(grid, np.full(grid.n, u0), p, z, m).values
    np.testing.assert_allclose(v, 1.0 / (z - p * p / (2 * m) - u0), rtol=1e-12)


def test_sparse_operator_matches_dense_construction(rng):
    grid = H.Grid1D(16, 4.0)
    u = rng.normal(size=(16, 16))
    u = u + u.T
    sparse_op = H.conjugated_hamiltonian(grid, u, (0.3, -0.8), (1.0, 2.0)).toarray()
    dense = H._dense_conjugated_hamiltonian(grid, u, np.array([0.3, -0.8]), np.array([1.0, 2.0]), 1.0)
    np.testing.assert_allclose(sparse_op, dense, atol=1e-12)
    np.testing.assert_allclose(dense, dense.conj().T, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_resolvent_matches_oracle_one_particle(seed):
    rng = np.random.default_rng(seed)
    grid = H.Grid1D(64, 7.0)
    u = H.random_potential(grid, rng)
    z = complex(0.4, 0.8)
    direct = H.resolvent_solve(grid, u, 0.7, z, 1.5)
    oracle = H.spectral_oracle(grid, u, 0.7, z, 1.5)
    assert np.max(np.abs(direct.values - oracle)) < 1e-10
    assert direct.residual < 1e-12


def test_resolvent_matches_oracle_two_particles(rng):
    grid = H.Grid1D(16, 5.0)
    u = rng.normal(size=(16, 16)) * 0.3
    z = complex(-0.2, 0.6)
    direct = H.resolvent_solve(grid, u, (0.5, -0.4), z, (1.0, 2.0)).values
    oracle = H.spectral_oracle(grid, u, (0.5, -0.4), z, (1.0, 2.0))
    assert np.max(np.abs(direct - oracle)) < 1e-10


def test_sweep_matches_individual_solves(rng):
    grid = H.Grid1D(32, 6.0)
    u = H.random_potential(grid, rng)
    zs = [complex(0.1, 1.0), complex(-1.0, 0.5)]
    sweep = H.resolvent_sweep(grid, u, 0.2, zs, 1.0)
    for z, f in zip(zs, sweep):
        np.testing.assert_allclose(f.values, H.resolvent_solve(grid, u, 0.2, z, 1.0).values,
                                   atol=1e-14)


def test_oracle_guards():
    grid = H.Grid1D(32, 4.0)
    with pytest.raises(TooLarge):
        H.SpectralOracle.build(grid, np.zeros((32, 32)), (0, 0), 1.0)
    with pytest.raises(GridMismatch):
        H.resolvent_solve(grid, np.zeros(31), 0.0, 1j, 1.0)
    oracle = H.SpectralOracle.build(H.Grid1D(16, 4.0), np.zeros(16), 0.0, 1.0)
    with pytest.raises(PoleHit):
        oracle.resolvent(complex(oracle.eigenvalues[0]))


def test_pair_swap_symmetry():
    g = H.Grid1D(16, 6.0)
    u = np.cos(2 * math.pi * g.separation(g.x[:, None], g.x[None, :]) / g.length)
    assert H.pair_swap_asymmetry(g, u, 0.4, -1.1, 0.2 + 0.9j, 1.0) < 1e-12
    with pytest.raises(ValidationError):
        H.pair_swap_asymmetry(g, u + np.triu(np.ones((16, 16)), 1), 0.4, -1.1, 1j, 1.0)


def test_rectangle_contour_encloses_pole():
    zs, ws = H.rectangle_contour(-1.0, 1.0, 0.5, 48)
    # (1/2 pi i) closed integral of 1/(z - a) is 1 inside, 0 outside
    assert np.sum(ws / (zs - 0.3)) / (2j * math.pi) == pytest.approx(1.0, abs=1e-10)
    assert abs(np.sum(ws / (zs - 3.0)) / (2j * math.pi)) < 1e-12


def test_contour_vs_residue(rng):
    grid = H.Grid1D(32, 8.0)
    u = H.random_potential(grid, rng, amplitude=0.5)
    cmp_ = H.contour_vs_residue(grid, u, 0.3, 1.0, lambda z: 0.8 * np.exp(-z / 1.5))
    assert cmp_.max_abs_difference < 1e-8


def test_gaussian_cos_closed_form():
    # int exp(-p^2/(2 m tau)) cos(p a) dp = sqrt(2 pi m tau) exp(-m tau a^2 / 2)
    for a in (0.0, 0.3, 2.0, 7.0):
        expect = math.sqrt(2 * math.pi * 1.3 * 0.8) * math.exp(-1.3 * 0.8 * a * a / 2)
        assert H._gaussian_cos(1.3, 0.8, a, 1.0) == pytest.approx(expect, rel=1e-11, abs=1e-14)


@pytest.mark.parametrize("dim", [1, 3])
def test_single_density_is_uniform(dim):
    sp = SpeciesSpec("a", 1.4, 3, B, 0.37)
    pos = [np.array([[0.3, -1.0, 2.0][:dim]])]
    assert H.density_from_contour(multi_index("1_1", 1), [sp], 0.9, pos, dim=dim) == pytest.approx(
        0.37, rel=1e-12)


@pytest.mark.parametrize("stats,kappa", [(F, 1), (F, 2), (B, 1), (B, 3)])
def test_pair_correlation_profile(stats, kappa):
    sp = SpeciesSpec("a", 0.8, kappa, stats, 0.25)
    radii = np.linspace(0, 3, 25)
    rho2 = H.pair_density_profile(multi_index("2_1", 1), [sp], 1.1, radii)
    np.testing.assert_allclose(rho2 / sp.density**2, ideal_pair_correlation(radii, sp, 1.1),
                               atol=1e-9)


def test_single_fermion_spin_state_excludes_contact():
    sp = SpeciesSpec("a", 1.0, 1, F, 0.3)
    assert H.pair_density_profile(multi_index("2_1", 1), [sp], 1.0, [0.0])[0] == pytest.approx(
        0.0, abs=1e-14)


def test_unlike_pair_is_uncorrelated():
    spa = SpeciesSpec("a", 1.0, 2, F, 0.2)
    spb = SpeciesSpec("b", 3.0, 1, B, 0.5)
    vals = H.pair_density_profile(multi_index("1_1 1_2", 2), [spa, spb], 0.7, [0.0, 0.5, 2.0])
    np.testing.assert_allclose(vals, 0.1, rtol=1e-12)


def test_density_order_guard():
    sp = SpeciesSpec("a", 1.0, 2, F, 0.2)
    with pytest.raises(UnsupportedOrder):
        H.density_from_contour(multi_index("(2_1)", 1).raised(0), [sp], 1.0)


@pytest.mark.parametrize("stats", [F, B])
def test_normalization(stats):
    sp = SpeciesSpec("a", 1.5, 2, stats, 0.6)
    rep = H.normalization_check(sp, 0.8, H.Grid1D(16, 3.0))
    assert rep.relative_error < 1e-10
    np.testing.assert_allclose(rep.profile, 0.6, rtol=1e-10)


def test_spectral_derivative():
    x = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    np.testing.assert_allclose(H.spectral_derivative(np.sin(3 * x), 2 * math.pi), 3 * np.cos(3 * x),
                               atol=1e-12)


BGRID = H.Grid1D(128, 20.0)
GAUSS = PairPotential.closed_form(("a", "a"), "gaussian", amplitude=1.0, width=1.0)
SOURCE = np.exp(-0.5 * ((BGRID.x - 10.0) / 1.5) ** 2) + 0.05


def test_bbgky_closure_order_one():
    lo, hi = H.smeared_source_ansatz(BGRID, GAUSS, 1.2, SOURCE)
    assert H.classical_bbgky_residual(multi_index("1_1", 1), lo, hi, GAUSS).relative < 1e-10


def test_bbgky_closure_order_two():
    grid = H.Grid1D(48, 16.0)
    src = np.exp(-0.5 * ((grid.x - 8.0) / 1.5) ** 2) + 0.05
    lo, hi = H.smeared_source_ansatz(grid, GAUSS, 1.0, src, order=2)
    assert H.classical_bbgky_residual(multi_index("2_1", 1), lo, hi, GAUSS).relative < 1e-8


def test_bbgky_uniform_is_exact():
    lo, hi = H.smeared_source_ansatz(BGRID, GAUSS, 1.2, np.ones(BGRID.n))
    assert H.classical_bbgky_residual(multi_index("1_1", 1), lo, hi, GAUSS).absolute < 1e-12


def test_bbgky_detects_wrong_sign():
    good, _ = H.smeared_source_ansatz(BGRID, GAUSS, 1.2, SOURCE)
    _, bad = H.smeared_source_ansatz(BGRID, GAUSS, 1.2, SOURCE, sign=-1.0)
    assert H.classical_bbgky_residual(multi_index("1_1", 1), good, bad, GAUSS).relative > 1e-2


def test_bbgky_shape_guards():
    lo, hi = H.smeared_source_ansatz(BGRID, GAUSS, 1.2, SOURCE)
    with pytest.raises(GridMismatch):
        H.classical_bbgky_residual(multi_index("1_1", 1), lo, lo, GAUSS)
    with pytest.raises(ValidationError):
        H.ClassicalAnsatz.from_density(BGRID, -np.ones(BGRID.n), 1.0)


def test_validation_suite_all_pass():
    rows = H.run_validation_suite(seed=3)
    failed = [r for r in rows if not r.passed]
    assert not failed, failed
