from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaselab.errors import DomainError
from phaselab.geometry import (
    Budget,
    SetRegion,
    classical_perimeter,
    frac_perimeter,
    gap_interaction,
    interaction_1d,
    interaction_alpha,
    interaction_lower_bound_probe,
    lawson_cone_profile,
    nonlocal_mean_curvature,
    normalize,
)
from phaselab.localfield import Grid
from phaselab.nonlocalfield import KernelAlpha

# Per(B_1, R^2) at alpha = 0.5 from the polar formula
#   2 pi int_0^1 r dr (1/alpha) int_0^{2 pi} d(r, phi)^{-alpha} dphi,
# d the distance to the circle along phi; evaluated with scipy quad.
BALL_PERIMETER_HALF = 62.13063877890777


def _mp_pair(a, b, c, d, alpha):
    f = lambda x, y: abs(x - y) ** (-1 - alpha)
    return float(mp.quad(f, [a, b], [c, d]))


# ---------------------------------------------------------------------------
# interactions


def test_interaction_1d_matches_iterated_integral():
    k = KernelAlpha(1, 0.5)
    est = interaction_alpha(SetRegion.interval(0, 1), SetRegion.interval(2, 3), k)
    assert est.value == pytest.approx(_mp_pair(0, 1, 2, 3, 0.5), abs=1e-6)
    assert est.error == 0.0


def test_interaction_symmetric():
    k = KernelAlpha(1, 0.7)
    E, F = SetRegion.interval(-2, -0.5), SetRegion.intervals([(0.1, 0.4), (1, 3)])
    assert interaction_alpha(E, F, k).value == pytest.approx(interaction_alpha(F, E, k).value,
                                                             rel=1e-14)


def test_interaction_dilation_1d():
    k = KernelAlpha(1, 0.5)
    E, F = SetRegion.interval(0, 1), SetRegion.interval(2, 3)
    base = interaction_alpha(E, F, k).value
    assert interaction_alpha(E.scaled(2), F.scaled(2), k).value == pytest.approx(
        2 ** 0.5 * base, rel=1e-12)


def test_interaction_dilation_2d_by_recomputation():
    k = KernelAlpha(2, 0.5)
    E, F = SetRegion.ball((0, 0), 0.5), SetRegion.box((1, -0.5), (2, 0.5))
    b = Budget(samples=6000, seed=11)
    base = interaction_alpha(E, F, k, b)
    big = interaction_alpha(E.scaled(2), F.scaled(2), k, Budget(samples=6000, seed=12))
    assert abs(big.value - 2 ** 1.5 * base.value) < 3 * (big.error + 2 ** 1.5 * base.error)


def test_interaction_overlap_rejected():
    k = KernelAlpha(1, 0.5)
    with pytest.raises(DomainError):
        interaction_alpha(SetRegion.interval(0, 2), SetRegion.interval(1, 3), k)


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_touching_diverges_for_large_alpha(alpha):
    k = KernelAlpha(1, alpha)
    est = interaction_alpha(SetRegion.interval(0, 1), SetRegion.interval(1, 2), k)
    assert math.isinf(est.value)


def test_monte_carlo_needs_seed_and_is_reproducible():
    k = KernelAlpha(2, 0.5)
    E, F = SetRegion.ball((0, 0), 1), SetRegion.ball((3, 0), 1)
    with pytest.raises(DomainError):
        interaction_alpha(E, F, k, Budget(samples=100))
    a = interaction_alpha(E, F, k, Budget(samples=800, seed=5))
    b = interaction_alpha(E, F, k, Budget(samples=800, seed=5))
    assert a == b


def test_ball_complement_interaction_vs_polar_oracle():
    k = KernelAlpha(2, 0.5)
    B = SetRegion.ball((0, 0), 1.0)
    mc = interaction_alpha(B, ~B, k, Budget(samples=16000, seed=3))
    assert abs(mc.value - BALL_PERIMETER_HALF) < 3 * mc.error
    quadr = interaction_alpha(B, ~B, k, Budget(samples=16000, method="quadrature"))
    assert abs(quadr.value - BALL_PERIMETER_HALF) < 2 * quadr.error + 1e-3


def test_three_dimensional_monte_carlo_runs():
    k = KernelAlpha(3, 0.5)
    E, F = SetRegion.ball((0, 0, 0), 0.5), SetRegion.ball((2, 0, 0), 0.5)
    est = interaction_alpha(E, F, k, Budget(samples=3200, seed=7))
    # independent oracle: uniform point pairs in the two balls
    rng = np.random.default_rng(0)

    def in_ball(n):
        v = rng.normal(size=(n, 3))
        v /= np.linalg.norm(v, axis=1)[:, None]
        return 0.5 * v * rng.random(n)[:, None] ** (1 / 3)

    x, y = in_ball(400000), in_ball(400000) + np.array([2.0, 0, 0])
    vol = 4 / 3 * math.pi * 0.125
    oracle = vol * vol * np.mean(np.linalg.norm(x - y, axis=1) ** -3.5)
    assert abs(est.value - oracle) < 3 * est.error + 0.01 * oracle


def test_grid_interaction_matches_exact_intervals():
    k = KernelAlpha(1, 0.5)
    g = Grid((0.05,), (1.95,), (20,))
    x = g.axes()[0]
    E = SetRegion.grid_indicator(g, x < 0.6)
    F = SetRegion.grid_indicator(g, x > 1.2)
    est = interaction_alpha(E, F, k)
    assert est.value == pytest.approx(_mp_pair(0, 0.6, 1.2, 2.0, 0.5), rel=1e-10)


interval_strategy = st.tuples(st.floats(-3, 3), st.floats(0.05, 2))


@settings(max_examples=40, deadline=None)
@given(e=interval_strategy, gaps=st.tuples(st.floats(0.05, 1), st.floats(0.05, 1)),
       widths=st.tuples(st.floats(0.05, 2), st.floats(0.05, 2)),
       alpha=st.floats(0.1, 1.9))
def test_interaction_additive(e, gaps, widths, alpha):
    k = KernelAlpha(1, alpha)
    a, w = e
    E = SetRegion.interval(a, a + w)
    c1 = a + w + gaps[0]
    F1 = SetRegion.interval(c1, c1 + widths[0])
    c2 = c1 + widths[0] + gaps[1]
    F2 = SetRegion.interval(c2, c2 + widths[1])
    both = SetRegion.intervals([(c1, c1 + widths[0]), (c2, c2 + widths[1])])
    lhs = interaction_alpha(E, both, k).value
    rhs = interaction_alpha(E, F1, k).value + interaction_alpha(E, F2, k).value
    assert lhs == pytest.approx(rhs, rel=1e-12)


# ---------------------------------------------------------------------------
# perimeters


def test_unit_interval_perimeter_is_eight():
    est = frac_perimeter(SetRegion.interval(0, 1), SetRegion.whole(1), KernelAlpha(1, 0.5))
    assert est.value == pytest.approx(8.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_interval_perimeter_closed_form(alpha):
    est = frac_perimeter(SetRegion.interval(0, 1), SetRegion.whole(1), KernelAlpha(1, alpha))
    assert est.value == pytest.approx(2 / (alpha * (1 - alpha)), rel=5e-3)


@pytest.mark.parametrize("alpha", [1.0, 1.3])
def test_perimeter_rejects_alpha_at_least_one(alpha):
    with pytest.raises(DomainError):
        frac_perimeter(SetRegion.interval(0, 1), SetRegion.whole(1), KernelAlpha(1, alpha))


def test_perimeter_complement_symmetry_1d():
    k = KernelAlpha(1, 0.4)
    E = SetRegion.intervals([(-1, 0.2), (0.7, 5)])
    Om = SetRegion.interval(-2, 2)
    assert frac_perimeter(E, Om, k).value == pytest.approx(frac_perimeter(~E, Om, k).value,
                                                          rel=1e-13)


def test_perimeter_complement_symmetry_2d():
    k = KernelAlpha(2, 0.5)
    E = SetRegion.ball((0.2, 0), 0.6)
    Om = SetRegion.box((-1, -1), (1, 1))
    b = Budget(samples=4000, method="quadrature")
    a, c = frac_perimeter(E, Om, k, b), frac_perimeter(~E, Om, k, b)
    assert a.value == pytest.approx(c.value, rel=1e-12)


def test_perimeter_dilation_2d_within_monte_carlo_error():
    k = KernelAlpha(2, 0.5)
    E = SetRegion.ball((0, 0), 0.5)
    Om = SetRegion.box((-1, -1), (1, 1))
    a = frac_perimeter(E, Om, k, Budget(samples=8000, seed=1))
    b = frac_perimeter(E.scaled(2), Om.scaled(2), k, Budget(samples=8000, seed=2))
    assert abs(b.value - 2 ** 1.5 * a.value) < 3 * (b.error + 2 ** 1.5 * a.error)


def test_ball_perimeter_in_plane_window():
    k = KernelAlpha(2, 0.5)
    est = frac_perimeter(SetRegion.ball((0, 0), 1.0), SetRegion.box((-1.5, -1.5), (1.5, 1.5)),
                         k, Budget(samples=20000, seed=4))
    assert abs(est.value - BALL_PERIMETER_HALF) < 3 * est.error


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-2, 2), w=st.floats(0.1, 3), lo=st.floats(-4, 1), span=st.floats(0.5, 6),
       grow=st.tuples(st.floats(0, 2), st.floats(0, 2)), alpha=st.floats(0.1, 0.9))
def test_perimeter_terms_and_monotone_window(a, w, lo, span, grow, alpha):
    k = KernelAlpha(1, alpha)
    E = SetRegion.interval(a, a + w)
    small = SetRegion.interval(lo, lo + span)
    large = SetRegion.interval(lo - grow[0] - 1e-3, lo + span + grow[1] + 1e-3)
    p_small, p_large = frac_perimeter(E, small, k), frac_perimeter(E, large, k)
    assert all(t >= 0 for t in p_small.terms)
    assert all(p_small.value >= t for t in p_small.terms)
    assert p_small.value <= p_large.value * (1 + 1e-12)


def test_classical_perimeter_examples():
    assert classical_perimeter(SetRegion.ball((0, 0), 1)) == pytest.approx(2 * math.pi)
    square = SetRegion.box((0, 0), (1, 1))
    assert classical_perimeter(SetRegion.halfspace((0, 1), 0.5), square) == pytest.approx(1.0)
    assert classical_perimeter(SetRegion.box((0.5, 0.5), (2, 2)), square) == pytest.approx(1.0)
    assert classical_perimeter(SetRegion.ball((0, 0), 0.5), square) == pytest.approx(math.pi / 4)
    assert classical_perimeter(~SetRegion.ball((0, 0), 1)) == pytest.approx(2 * math.pi)
    assert classical_perimeter(SetRegion.intervals([(0, 1), (2, 3)]),
                               SetRegion.interval(0.5, 10)) == 3.0


def test_grid_disc_perimeter_marching_squares():
    h = 1 / 128
    g = Grid((-1 + h / 2,) * 2, (1 - h / 2,) * 2, (256, 256))
    X, Y = g.mesh()
    D = SetRegion.grid_indicator(g, X**2 + Y**2 < 0.25)
    assert classical_perimeter(D) == pytest.approx(math.pi, rel=0.02)


# ---------------------------------------------------------------------------
# nonlocal mean curvature


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_halfspace_curvature_vanishes(alpha):
    k = KernelAlpha(2, alpha)
    H = SetRegion.halfspace((0.6, 0.8), 0.3)
    x = np.array([0.6, 0.8]) * 0.3 + 1.7 * np.array([-0.8, 0.6])
    assert abs(nonlocal_mean_curvature(H, x, k)) < 1e-6


def _ball_curvature_oracle(alpha, delta=1e-7):
    # Truncated integral over |y - x| > delta at x = (1, 0) written along
    # rays from x; the ray in direction phi stays inside for s < -2 cos phi.
    def ray(phi):
        d = -2 * mp.cos(phi)
        out = delta ** (-alpha) / alpha
        if d > delta:
            out -= 2 * (delta ** (-alpha) - d ** (-alpha)) / alpha
        return out

    return float(mp.quad(ray, [0, mp.pi / 2 - mp.acos(delta / 2) + mp.pi / 2, mp.pi,
                               3 * mp.pi / 2 - (mp.pi / 2 - mp.acos(delta / 2)), 2 * mp.pi]))


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_ball_curvature_positive_and_antisymmetric(alpha):
    k = KernelAlpha(2, alpha)
    B = SetRegion.ball((0, 0), 1.0)
    h = nonlocal_mean_curvature(B, (1, 0), k)
    assert h > 0
    assert nonlocal_mean_curvature(~B, (1, 0), k) == pytest.approx(-h, rel=1e-9)
    x = (math.cos(2.0), math.sin(2.0))
    assert nonlocal_mean_curvature(B, x, k) == pytest.approx(h, rel=1e-8)


def test_ball_curvature_vs_truncated_oracle():
    k = KernelAlpha(2, 0.5)
    h = nonlocal_mean_curvature(SetRegion.ball((0, 0), 1.0), (1, 0), k)
    assert h == pytest.approx(_ball_curvature_oracle(0.5), rel=2e-3)


def test_interval_curvature_closed_form_and_cutoff():
    k = KernelAlpha(1, 0.5)
    E = SetRegion.interval(0, 1)
    assert nonlocal_mean_curvature(E, (0.0,), k) == pytest.approx(4.0)
    assert nonlocal_mean_curvature(E, (0.0,), k, cutoff=4.0) == pytest.approx(
        2 * (1 - 4 ** -0.5) / 0.5)


def test_curvature_rejects_alpha_out_of_range():
    with pytest.raises(DomainError):
        nonlocal_mean_curvature(SetRegion.interval(0, 1), (0.0,), KernelAlpha(1, 1.2))


# ---------------------------------------------------------------------------
# Lawson cones and line chords


def test_lawson_membership():
    C = lawson_cone_profile(2, 4, 0.7)
    assert C.contains(np.array([[1.0, -2.0, 0.0, 0.0]]))[0]
    S = lawson_cone_profile(2, 4, 1.0)
    p = np.array([[0.3, 0.2, 0.5, -0.1], [1.0, 0.0, 0.1, 1.2]])
    swapped = p[:, [2, 3, 0, 1]]
    assert np.array_equal(S.contains(p), ~S.contains(swapped) | np.isclose(
        np.linalg.norm(p[:, :2], axis=1), np.linalg.norm(p[:, 2:], axis=1)))


@settings(max_examples=60, deadline=None)
@given(p=st.lists(st.floats(-3, 3), min_size=4, max_size=4), t=st.floats(0.01, 100),
       delta=st.floats(0.2, 3.0))
def test_lawson_scaling_invariance(p, t, delta):
    C = lawson_cone_profile(1, 4, delta)
    x = np.asarray(p)
    assert C.contains(x) == C.contains(t * x)


SHAPES = [
    SetRegion.ball((0.2, -0.1), 0.8),
    SetRegion.box((-0.5, -1.0), (0.7, 0.4)),
    SetRegion.halfspace((1, 2), 0.3),
    SetRegion.lawson(1, 2, 0.6),
    ~SetRegion.ball((0, 0), 0.5) & SetRegion.box((-1, -1), (1, 1)),
]


@settings(max_examples=60, deadline=None)
@given(idx=st.integers(0, len(SHAPES) - 1), p=st.tuples(st.floats(-2, 2), st.floats(-2, 2)),
       ang=st.floats(0, math.pi), ts=st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_line_chords_agree_with_membership(idx, p, ang, ts):
    S = SHAPES[idx]
    th = np.array([math.cos(ang), math.sin(ang)])
    ivs = S.line_intervals(np.asarray(p), th)
    for t in ts:
        inside_chord = any(a < t < b for a, b in ivs)
        near_edge = any(min(abs(t - a), abs(t - b)) < 1e-9 for a, b in ivs)
        if not near_edge:
            assert inside_chord == bool(S.contains(np.asarray(p) + t * th))


def test_json_roundtrip():
    shapes = [SetRegion.interval(0, 1), SetRegion.ball((0, 1), 2.0), SetRegion.cube(1.0),
              SetRegion.halfspace((0, 1), 0.5), ~SetRegion.ball((0, 0), 1.0),
              SetRegion.lawson(2, 4, 1.0),
              SetRegion.ball((0, 0), 1.0) & SetRegion.box((0, 0), (1, 1))]
    for s in shapes:
        assert SetRegion.from_json(s.to_json()) == s


def test_invalid_primitives():
    with pytest.raises(DomainError):
        SetRegion.ball((0, 0), 0.0)
    with pytest.raises(DomainError):
        SetRegion.cube(-1.0)
    with pytest.raises(DomainError):
        SetRegion.lawson(4, 4, 1.0)
    with pytest.raises(DomainError):
        SetRegion.interval(1.0, 0.5)


def test_normalize_merges():
    assert normalize([(2, 3), (0, 1), (0.5, 2.5)]) == [(0.0, 3.0)]


# ---------------------------------------------------------------------------
# interaction lower bound

GAPS = [2.0**-k for k in range(2, 9)]


def test_lower_bound_log_fit_at_alpha_one():
    rep = interaction_lower_bound_probe(GAPS, 1.0)
    assert rep.slope > 0 and rep.positive and rep.r2 > 0.98


def test_lower_bound_power_fit_at_alpha_one_and_half():
    rep = interaction_lower_bound_probe(GAPS, 1.5)
    assert rep.slope > 0 and rep.r2 > 0.98
    assert rep.regressor == "g^-0.5"


def test_lower_bound_two_dimensional_reduction():
    rep = interaction_lower_bound_probe(GAPS, 1.0, dim=2)
    assert rep.slope > 0 and rep.r2 > 0.98


def test_gap_interaction_oracle():
    g = 0.1
    a = 0.45
    assert gap_interaction(g, 1.5) == pytest.approx(_mp_pair(0, a, a + g, 1, 1.5), rel=1e-9)
    k = KernelAlpha(2, 1.5)
    from phaselab.geometry import separated_thirds
    A, D = separated_thirds(0.25, dim=2)
    lines = interaction_alpha(A, D, k, Budget(samples=20000, seed=9))
    assert abs(gap_interaction(0.25, 1.5, dim=2) - lines.value) < 3 * lines.error


def test_lower_bound_rejects_bad_input():
    with pytest.raises(DomainError):
        interaction_lower_bound_probe(GAPS, 0.5)
    with pytest.raises(DomainError):
        interaction_lower_bound_probe([0.1, 0.2, 0.05], 1.0)
    with pytest.raises(DomainError):
        interaction_lower_bound_probe([0.1, 0.05], 1.0)


def test_interaction_1d_half_lines():
    assert interaction_1d([(-math.inf, 0)], [(1, math.inf)], 1.5) == pytest.approx(
        1 / (1.5 * 0.5))
