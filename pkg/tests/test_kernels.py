import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixtherm import kernels
from mixtherm.core_types import Statistics
from mixtherm.errors import BoseSaturation, DomainError
from mixtherm.kernels import KernelParams

F, B = Statistics.FERMI, Statistics.BOSE


def polylog_oracle(order, alpha, stats):
    """G_k via mpmath: Gamma(nu)/2 * Li_nu(e^alpha) (Bose) or -Li_nu(-e^alpha) (Fermi)."""
    nu = mpmath.mpf(2 * order + 3) / 2
    mpmath.mp.dps = 30
    if stats is F:
        li = -mpmath.polylog(nu, -mpmath.exp(alpha))
    else:
        li = mpmath.polylog(nu, mpmath.exp(alpha))
    assert abs(mpmath.im(li)) <= 1e-20 * abs(li)
    return float(mpmath.gamma(nu) * mpmath.re(li) / 2)


ALPHAS_F = [-30.0, -5.0, -1.0, -1e-3, 0.0, 0.5, 3.0, 20.0, 150.0]
ALPHAS_B = [-30.0, -5.0, -1.0, -0.1, -1e-4, -1e-10, 0.0]


@pytest.mark.parametrize("order", [0, 1])
@pytest.mark.parametrize("alpha", ALPHAS_F)
def test_fermi_integral_matches_polylog(order, alpha):
    val = kernels.g_integral(KernelParams(order, alpha, F))
    assert val == pytest.approx(polylog_oracle(order, alpha, F), rel=1e-10)


@pytest.mark.parametrize("order", [0, 1])
@pytest.mark.parametrize("alpha", ALPHAS_B)
def test_bose_integral_matches_polylog(order, alpha):
    val = kernels.g_integral(KernelParams(order, alpha, B))
    assert val == pytest.approx(polylog_oracle(order, alpha, B), rel=1e-9)


@pytest.mark.parametrize("stats", [F, B])
@pytest.mark.parametrize("order", [0, 1])
@pytest.mark.parametrize("alpha", [-40.0, -3.0, -0.5, -1e-6, 0.0])
def test_series_and_quadrature_agree(stats, order, alpha):
    p = KernelParams(order, alpha, stats)
    assert kernels.g_series(p) == pytest.approx(kernels.g_integral(p), rel=1e-9)


def test_alpha_zero_closed_forms():
    # Bose G_0(0) = Gamma(3/2) zeta(3/2)/2 ; Fermi adds the (1 - 2^{1-nu}) factor
    zb = 0.5 * math.sqrt(math.pi) / 2 * 2.612375348685488
    assert kernels.g0(0.0, B) == pytest.approx(zb, rel=1e-10)
    assert kernels.g0(0.0, F) == pytest.approx(zb * (1 - 2**-0.5), rel=1e-10)
    assert kernels.bose_supremum(0) == pytest.approx(zb, rel=1e-14)


def test_classical_limit_of_kernels():
    for alpha in (-20.0, -30.0):
        assert kernels.g0(alpha, F) == pytest.approx(math.sqrt(math.pi) / 4 * math.exp(alpha), rel=1e-8)
    report = kernels.classical_ratio_check([-15.0, -25.0])
    assert report["fermi"]["max_deviation"] < 1e-6
    assert report["bose"]["max_deviation"] < 1e-6


def test_degenerate_fermi_leading_order():
    alpha = 1e4
    assert kernels.g0(alpha, F) == pytest.approx(alpha**1.5 / 3, rel=1e-7)
    assert kernels.g1(alpha, F) == pytest.approx(alpha**2.5 / 5, rel=1e-7)


def test_domain_errors():
    with pytest.raises(DomainError):
        KernelParams(0, 0.1, B)
    with pytest.raises(DomainError):
        KernelParams(2, -1.0, F)
    with pytest.raises(DomainError):
        KernelParams(0, math.nan, F)
    with pytest.raises(DomainError):
        kernels.invert_density(0.0, F)


def test_bose_saturation():
    with pytest.raises(BoseSaturation) as info:
        kernels.invert_density(kernels.bose_supremum(0) * 1.01, B)
    assert info.value.supremum == pytest.approx(kernels.bose_supremum(0))


@settings(max_examples=60, deadline=None)
@given(st.floats(-40.0, 300.0))
def test_fermi_inversion_round_trip(alpha):
    y = kernels.g0(alpha, F)
    back = kernels.invert_density(y, F)
    assert kernels.g0(back, F) == pytest.approx(y, rel=1e-9)
    assert back == pytest.approx(alpha, rel=1e-7, abs=1e-7)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-4, 6.0))
def test_bose_inversion_round_trip(beta):
    alpha = -beta * beta
    y = kernels.g0(alpha, B)
    back = kernels.invert_density(y, B)
    assert kernels.g0(back, B) == pytest.approx(y, rel=1e-9)
    assert math.sqrt(-back) == pytest.approx(beta, rel=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.floats(-30.0, 0.0), st.floats(1e-3, 2.0))
def test_g0_strictly_increasing(alpha, step):
    for stats in (F, B):
        a2 = min(alpha + step, 0.0)
        if a2 - alpha > 1e-3:
            assert kernels.g0(a2, stats) > kernels.g0(alpha, stats)


@pytest.mark.parametrize("stats", [F, B])
def test_batch_matches_scalar(stats, rng):
    hi = 50.0 if stats is F else 0.0
    alphas = np.concatenate([rng.uniform(-30, hi, 60), [0.0, -1e-8]])
    for order in (0, 1):
        ref = np.array([kernels.g_integral(KernelParams(order, a, stats)) for a in alphas])
        np.testing.assert_allclose(kernels.g_batch(order, alphas, stats), ref, rtol=1e-11)


@pytest.mark.parametrize("stats", [F, B])
def test_batch_inversion_matches_scalar(stats, rng):
    hi = 50.0 if stats is F else -1e-3
    y = np.array([kernels.g0(a, stats) for a in rng.uniform(-25, hi, 40)])
    batch = kernels.invert_density_batch(y, stats)
    scalar = np.array([kernels.invert_density(v, stats) for v in y])
    np.testing.assert_allclose(batch, scalar, rtol=1e-8, atol=1e-9)


def test_batch_falls_back_for_huge_alpha():
    assert kernels.g_batch(0, [1e4], F)[0] == pytest.approx(kernels.g0(1e4, F), rel=1e-12)


@pytest.mark.parametrize("stats", [F, B])
@pytest.mark.parametrize("alpha", [-35.0, -45.0, -60.0])
def test_inversion_of_very_dilute_gas(stats, alpha):
    y = kernels.g0(alpha, stats)
    assert kernels.invert_density(y, stats) == pytest.approx(alpha, rel=1e-12)
    assert kernels.invert_density_batch([y], stats)[0] == pytest.approx(alpha, rel=1e-12)
