from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaselab.conestab import (
    ConeProfile,
    RadialTestFunction,
    SearchBudget,
    admissible_exponents_exist,
    exponents_admissible,
    hardy_constant,
    lawson_mean_curvature,
    minimal_aperture,
    standard_exponents,
    principal_curvatures,
    rayleigh_quotient,
    stability_form_radial,
    stability_scan,
    tails_integrable,
    verdicts_json,
)
from phaselab.errors import DomainError, NumericError

FAST = SearchBudget(grid=5, refine=15)


def closed_form_curvatures(m, n, delta):
    # oracle: S^(m-1)(a) x S^(k-1)(b) directions plus the flat radial one
    k = n - m
    a = 1 / math.sqrt(1 + delta**2)
    b = delta * a
    # unit normal ~ (-delta y, z), principal curvatures of the two sphere factors
    nrm = math.sqrt(delta**4 * a**2 + b**2)
    ky = -delta**2 / nrm
    kz = 1 / nrm
    return [ky] * (m - 1) + [kz] * (k - 1) + [0.0]


def dense_form(cone, phi, rho_max=2000.0, count=4_000_001):
    """Trapezoid rule in rho with centred-difference derivatives, plus power tails."""
    n = cone.n
    rho = np.linspace(1e-6, rho_max, count)
    val, _ = phi.log_value_and_slope(np.log(rho))
    dval = np.gradient(val, rho)
    f = (dval**2 - cone.sff_norm_unit**2 * val**2 / rho**2) * rho ** (n - 2)
    return cone.link_measure * np.trapezoid(f, rho)


# -- curvature ------------------------------------------------------------------


@pytest.mark.parametrize("m,n", [(2, 4), (3, 6), (4, 8), (1, 2)])
def test_equal_split_is_minimal(m, n):
    assert abs(lawson_mean_curvature(m, n, 1.0)) < 1e-8


@pytest.mark.parametrize("m,n,delta", [(2, 4, 1.0), (2, 5, 0.7), (1, 3, 0.5), (3, 7, 2.0)])
def test_principal_curvatures_match_sphere_product(m, n, delta):
    got = principal_curvatures(m, n, delta)
    assert got == pytest.approx(sorted(closed_form_curvatures(m, n, delta)), abs=1e-6)


def test_simons_sff_against_closed_form():
    for n in (4, 6, 8):
        cone = ConeProfile.simons(n)
        assert cone.sff_norm_unit**2 == pytest.approx(n - 2, abs=1e-6)
        assert cone.is_minimal


def test_circular_cone_has_no_minimal_aperture():
    # H = 1/|grad F| up to sign: one sign for every delta, so bisection must fail
    values = [lawson_mean_curvature(1, 3, d) for d in np.geomspace(1e-2, 1e2, 17)]
    assert all(v > 0 for v in values)
    with pytest.raises(NumericError, match="bracket"):
        minimal_aperture(1, 3)


def test_mean_curvature_sign_change_and_aperture():
    # m = 2, k = 3: H vanishes where (m-1) delta^2 = k-1
    assert lawson_mean_curvature(2, 5, 0.5) * lawson_mean_curvature(2, 5, 3.0) < 0
    assert minimal_aperture(2, 5) == pytest.approx(math.sqrt(2.0), rel=1e-8)
    assert minimal_aperture(3, 6) == pytest.approx(1.0, rel=1e-8)


def test_mean_curvature_blows_up_as_cone_closes():
    hs = [abs(lawson_mean_curvature(2, 4, d)) for d in (1e-1, 1e-2, 1e-3)]
    assert hs[0] < hs[1] < hs[2]
    assert hs[2] > 500


def test_link_measure_of_simons_cone():
    # S^1(1/sqrt2) x S^1(1/sqrt2): (2 pi / sqrt 2)^2
    assert ConeProfile.simons(4).link_measure == pytest.approx(2 * math.pi**2, rel=1e-12)


def test_invalid_splits():
    with pytest.raises(DomainError):
        lawson_mean_curvature(0, 4, 1.0)
    with pytest.raises(DomainError):
        lawson_mean_curvature(2, 4, -1.0)
    with pytest.raises(DomainError):
        ConeProfile.simons(5)


# -- admissibility ------------------------------------------------------------


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_standard_exponents_accepted(n):
    a, b = standard_exponents(n)
    assert exponents_admissible(n, a, b)
    RadialTestFunction.for_dimension(n, a, b)
    assert 2 - a**2 > 0 and 2 - (a + b) ** 2 > 0


@pytest.mark.parametrize("n", [2, 8, 9])
def test_standard_exponents_rejected_outside(n):
    a, b = standard_exponents(n)
    assert not exponents_admissible(n, a, b)


def test_admissible_set_nonempty_iff_dimension_three_to_seven():
    assert [n for n in range(1, 13) if admissible_exponents_exist(n)] == [3, 4, 5, 6, 7]


@given(st.integers(2, 10), st.floats(-3, 3), st.floats(-3, 3))
def test_existence_criterion_consistent(n, a, b):
    if exponents_admissible(n, a, b):
        assert admissible_exponents_exist(n)


def test_non_integrable_tails_rejected():
    cone = ConeProfile.simons(4)
    with pytest.raises(DomainError):
        stability_form_radial(cone, RadialTestFunction(0.2, -1.0))
    with pytest.raises(DomainError):
        RadialTestFunction.for_dimension(4, 1.0, 0.5)


def test_non_minimal_cone_rejected():
    cone = ConeProfile.lawson(2, 5, 1.0)
    with pytest.raises(DomainError):
        stability_form_radial(cone, RadialTestFunction(*standard_exponents(5)))


# -- the radial form -----------------------------------------------------------


def test_profile_regimes():
    phi = RadialTestFunction(0.6, -1.2)
    v, _ = phi.log_value_and_slope(np.log([1e-3, 1e3]))
    # psi = r^(alpha-1) inside, r^(alpha+beta-1) outside, up to the plateau
    # (1 + sqrt(1 + smoothing)) / 2 of the smoothed maximum
    plateau = (1 + math.sqrt(1 + phi.smoothing)) / 2
    assert v[0] == pytest.approx(1e-3 ** (0.6 - 1), rel=1e-9)
    assert v[1] == pytest.approx(1e3 ** (0.6 - 1.2 - 1) / plateau, rel=1e-9)


def test_slope_matches_difference_quotient():
    phi = RadialTestFunction(0.9, -1.3, inner_cut=0.05, outer_cut=30.0)
    s = np.linspace(-3.5, 4.5, 41)
    h = 1e-6
    _, d = phi.log_value_and_slope(s)
    vp, _ = phi.log_value_and_slope(s + h)
    vm, _ = phi.log_value_and_slope(s - h)
    assert d == pytest.approx((vp - vm) / (2 * h), rel=1e-5, abs=1e-7)


def test_simons_four_standard_test_is_negative_and_matches_dense_quadrature():
    cone = ConeProfile.simons(4)
    phi = RadialTestFunction(*standard_exponents(4))
    q = stability_form_radial(cone, phi)
    assert q < 0
    assert q == pytest.approx(dense_form(cone, phi), rel=2e-3)


def test_flat_cone_form_is_positive():
    cone = ConeProfile.flat(5)
    for a, b in [(0.2, -0.5), (0.5, -1.2), (1.0, -2.0)]:
        assert stability_form_radial(cone, RadialTestFunction(a, b)) > 0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.sampled_from([4, 5, 6]))
def test_flat_cone_positive_property(lo_gap, hi_gap, n):
    cone = ConeProfile.flat(n)
    a = (5 - n) / 2 + lo_gap
    phi = RadialTestFunction(a, -(lo_gap + hi_gap))
    assert stability_form_radial(cone, phi) > 0


@pytest.mark.parametrize("n", [4, 6])
def test_scaling_law(n):
    cone = ConeProfile.simons(n)
    phi = RadialTestFunction(*standard_exponents(n), inner_cut=1e-2, outer_cut=50.0)
    q1 = stability_form_radial(cone, phi)
    q2 = stability_form_radial(cone, phi.scaled(2.0))
    assert abs(q2 - 2.0 ** (n - 3) * q1) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.floats(-3.0, 3.0).filter(lambda t: abs(t) > 1e-3))
def test_form_is_quadratic(t):
    cone = ConeProfile.simons(4)
    phi = RadialTestFunction(*standard_exponents(4))
    q1 = stability_form_radial(cone, phi)
    qt = stability_form_radial(cone, phi.times(t))
    assert qt == pytest.approx(t * t * q1, rel=1e-9, abs=1e-9)


def test_cutoffs_converge_to_uncut_value():
    cone = ConeProfile.simons(6)
    phi = RadialTestFunction(*standard_exponents(6))
    full = stability_form_radial(cone, phi)
    errs = [abs(stability_form_radial(cone, RadialTestFunction(
        phi.alpha_exp, phi.beta_exp, inner_cut=e, outer_cut=1 / e)) - full)
        for e in (1e-1, 1e-2, 1e-3)]
    assert errs[0] > errs[1] > errs[2]


def test_rayleigh_quotient_bounded_by_hardy():
    # Hardy: int psi_s^2 w >= (n-3)^2/4 int psi^2 w, so quotient >= H - c^2
    for n in (4, 6, 8):
        cone = ConeProfile.simons(n)
        for a_gap, b_gap in [(0.1, 0.3), (0.5, 0.5), (1.2, 0.4)]:
            a = (5 - n) / 2 + a_gap
            r = rayleigh_quotient(cone, RadialTestFunction(a, -(a_gap + b_gap)))
            assert r >= hardy_constant(n) - cone.sff_norm_unit**2 - 1e-9


def test_function_json_roundtrip():
    phi = RadialTestFunction(0.4, -1.1, inner_cut=0.1, outer_cut=5.0, amplitude=2.0)
    assert RadialTestFunction.from_json(json.loads(json.dumps(phi.to_json()))) == phi
    uncut = RadialTestFunction(0.4, -1.1)
    assert RadialTestFunction.from_json(uncut.to_json()) == uncut


# -- scan ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def verdicts():
    return stability_scan([4, 6, 8], FAST)


def test_scan_dichotomy(verdicts):
    assert [v.verdict for v in verdicts] == [
        "UnstableWithWitness", "UnstableWithWitness", "NoNegativeDirectionFound"]
    assert all(v.hardy_consistent for v in verdicts)


def test_witness_certifies_instability(verdicts):
    for v in verdicts[:2]:
        cone = ConeProfile.simons(v.n)
        assert stability_form_radial(cone, v.witness) == pytest.approx(v.witness_value)
        assert v.witness_value < -1e-9
        assert tails_integrable(v.n, v.witness.alpha_exp, v.witness.beta_exp)


def test_scan_approaches_hardy_gap(verdicts):
    for v in verdicts:
        gap = v.hardy_constant - v.sff_norm_unit**2
        assert v.best_quotient >= gap - 1e-8
        assert v.best_quotient == pytest.approx(gap, abs=0.05)


def test_verdict_json(verdicts):
    data = json.loads(verdicts_json(verdicts))
    assert {"n", "m", "delta", "sff_norm_unit", "hardy_constant", "verdict",
            "witness_params"} <= set(data[0])
    assert data[2]["witness_params"] is None
    assert data[0]["hardy_constant"] == 0.25


def test_scan_rejects_odd_or_small():
    with pytest.raises(DomainError):
        stability_scan([5])
    with pytest.raises(DomainError):
        stability_scan([2])


def test_scan_is_deterministic():
    a = verdicts_json(stability_scan([4], SearchBudget(grid=3, refine=5)))
    b = verdicts_json(stability_scan([4], SearchBudget(grid=3, refine=5)))
    assert a == b
