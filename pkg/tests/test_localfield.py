from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phaselab.errors import DomainError
from phaselab.localfield import (
    Field,
    Grid,
    MinimizeOptions,
    energy_local,
    gamma_probe_local,
    layer_field,
    layer_profile_1d,
    minimize_local,
    residual_allen_cahn,
    stability_form,
)
from phaselab.potential import quartic_well, surface_tension_constant

W = quartic_well()
C = 2.0 * math.sqrt(2.0) / 3.0
SQ2 = math.sqrt(2.0)


def line(lo, hi, n):
    return Grid((lo,), (hi,), (n,))


def tanh_field(eps, half=8.0, n=4001):
    g = line(-half * eps, half * eps, n)
    x = g.axes()[0]
    return Field(g, np.tanh(x / (eps * SQ2)), eps)


@pytest.fixture(scope="module")
def profile():
    return layer_profile_1d(W, 8.0, 1e-6)


# grid and field plumbing

def test_grid_validation():
    with pytest.raises(DomainError):
        Grid((0.0,), (1.0,), (3,))
    with pytest.raises(DomainError):
        Grid((0.0, 0.0), (1.0, 2.0), (11, 11))
    g = Grid((0.0, 0.0), (1.0, 2.0), (11, 21))
    assert g.h == pytest.approx(0.1) and g.dim == 2
    assert g.trapezoid_weights().sum() == pytest.approx(2.0)


def test_field_validation():
    g = line(0, 1, 11)
    with pytest.raises(DomainError):
        Field(g, np.zeros(10), 0.1)
    with pytest.raises(DomainError):
        Field(g, np.full(11, np.nan), 0.1)
    with pytest.raises(DomainError):
        Field(g, np.zeros(11), 0.0)
    with pytest.raises(DomainError):
        Field(g, np.zeros(11), 0.1, Q=lambda p: -1.0 + 0 * p[..., 0])


def test_binary_roundtrip_and_layout():
    g = Grid((-1.0, 0.5), (1.0, 2.5), (5, 5))
    f = Field(g, np.arange(25.0).reshape(5, 5) / 25, 0.125)
    data = f.to_bytes()
    assert data[:4] == (2).to_bytes(4, "little")
    back = Field.from_bytes(data)
    np.testing.assert_array_equal(back.values, f.values)
    assert back.grid == g and back.eps == f.eps


def test_csv_rows():
    f = Field(line(0, 1, 5), np.linspace(-1, 1, 5), 0.1)
    header, rows = f.csv_rows()
    assert header == ["x", "u"] and len(rows) == 5 and rows[0] == ["0.0", "-1.0"]


# energy

def test_energy_constant_one():
    assert energy_local(Field(line(0, 1, 11), np.ones(11), 0.3), W) == 0.0


def test_energy_constant_zero_unit_interval():
    assert energy_local(Field(line(0, 1, 11), np.zeros(11), 1.0), W) == pytest.approx(0.25)


@pytest.mark.parametrize("eps", [1.0, 0.1, 1 / 64])
def test_energy_of_tanh_layer(eps):
    assert energy_local(tanh_field(eps), W) == pytest.approx(C, rel=1e-2)


def test_energy_2d_planar_layer_is_length_times_c():
    eps = 0.05
    g = Grid((-0.5, -0.5), (0.5, 0.5), (401, 401))
    x = g.mesh()[0]
    f = Field(g, np.tanh(x / (eps * SQ2)), eps)
    assert energy_local(f, W) == pytest.approx(C * 1.0, rel=1e-2)


def test_heterogeneity_scales_potential():
    g = line(0, 1, 11)
    f = Field(g, np.zeros(11), 1.0, Q=lambda p: 2.0 + 0 * p[..., 0])
    assert energy_local(f, W) == pytest.approx(0.5)


@given(st.integers(0, 2**31 - 1))
def test_energy_even_under_sign_flip(seed):
    rng = np.random.default_rng(seed)
    g = Grid((-1.0, -1.0), (1.0, 1.0), (9, 9))
    u = rng.uniform(-1.5, 1.5, g.shape)
    a = energy_local(Field(g, u, 0.2), W)
    b = energy_local(Field(g, -u, 0.2), W)
    assert a == pytest.approx(b, rel=1e-13)


@given(st.integers(0, 2**31 - 1))
def test_gradient_matches_energy_differences(seed):
    from phaselab.localfield import _LocalOperator

    rng = np.random.default_rng(seed)
    g = Grid((0.0, 0.0), (1.0, 1.0), (7, 7))
    f = Field(g, rng.uniform(-1, 1, g.shape), 0.3)
    op = _LocalOperator.build(f)
    grad = op.l2_gradient(f.values, W) * g.cell_volume
    i, j = 3, 2
    d = 1e-6
    up, dn = f.values.copy(), f.values.copy()
    up[i, j] += d
    dn[i, j] -= d
    fd = (op.energy(up, W) - op.energy(dn, W)) / (2 * d)
    assert grad[i, j] == pytest.approx(fd, rel=1e-6, abs=1e-10)


# minimization

def zero_crossing(x, u):
    k = int(np.flatnonzero(np.diff(np.sign(u)) != 0)[0])
    return x[k] - u[k] * (x[k + 1] - x[k]) / (u[k + 1] - u[k])


def test_minimize_1d_layer_matches_tanh():
    eps = 1 / 16
    g = line(-1.0, 1.0, 257)
    x = g.axes()[0]
    u0 = np.clip((x - 0.1) / 0.3, -1, 1)
    out, info = minimize_local(Field(g, u0, eps), W, MinimizeOptions(tol=1e-9), full_output=True)
    assert info.converged
    x0 = zero_crossing(x, out.values)
    assert np.max(np.abs(out.values - np.tanh((x - x0) / (eps * SQ2)))) < 1e-2
    assert np.all(np.diff(info.energies) <= 0)
    assert energy_local(out, W) <= energy_local(Field(g, u0, eps), W)


@pytest.mark.parametrize("rule", ["sobolev", "bb", "armijo"])
def test_every_step_rule_decreases_energy(rule):
    eps = 0.25
    g = line(-1.0, 1.0, 41)
    x = g.axes()[0]
    f = Field(g, np.clip(x / 0.5, -1, 1), eps)
    out, info = minimize_local(f, W, MinimizeOptions(tol=1e-7, step_rule=rule, max_iters=50_000), full_output=True)
    assert info.converged, info.status
    assert np.all(np.diff(info.energies) <= 0)


@given(st.floats(min_value=1 / 32, max_value=0.5))
def test_compatible_data_converges_to_one(eps):
    g = line(-1.0, 1.0, 129)
    u0 = np.full(129, 0.2)
    u0[[0, -1]] = 1.0
    out = minimize_local(Field(g, u0, eps), W, MinimizeOptions(tol=1e-10))
    assert np.max(np.abs(out.values - 1.0)) < 1e-6
    assert energy_local(out, W) < 1e-8


def test_minimize_2d_sign_data_level_set_on_axis():
    eps = 1 / 16
    g = Grid((-1.0, -1.0), (1.0, 1.0), (65, 65))
    X, _ = g.mesh()
    out = minimize_local(Field(g, np.sign(X), eps), W, MinimizeOptions(tol=1e-8))
    x = g.axes()[0]
    for row in out.values.T[1:-1]:
        assert abs(zero_crossing(x, row)) <= g.h


def test_residual_of_converged_minimizer():
    eps, tol = 1 / 16, 1e-7
    g = line(-1.0, 1.0, 513)
    x = g.axes()[0]
    out = minimize_local(Field(g, np.clip(x / 0.2, -1, 1), eps), W, MinimizeOptions(tol=tol))
    assert residual_allen_cahn(out, W) < 10 * tol + 10 * g.h**2


# residual

def test_residual_examples(rng):
    g = line(-1, 1, 101)
    assert residual_allen_cahn(Field(g, np.ones(101), 0.1), W) == 0.0
    assert residual_allen_cahn(tanh_field(0.1, n=8001), W) < 1e-3
    assert residual_allen_cahn(Field(g, rng.uniform(-1, 1, 101), 0.1), W) > 0


# layer profile

def test_layer_profile_matches_tanh(profile):
    x = np.linspace(-8, 8, 4001)
    assert np.max(np.abs(profile(x) - np.tanh(x / SQ2))) < 1e-4
    assert profile.ode_residual < 1e-6
    assert profile(np.array([0.0]))[0] == 0.0
    assert profile.derivative(0.0) == pytest.approx(1 / SQ2, abs=1e-6)


def test_layer_profile_first_integral(profile):
    assert profile.first_integral_error < 1e-6


def test_layer_profile_odd_and_monotone(profile):
    x = np.linspace(0, 8, 801)
    np.testing.assert_allclose(profile(-x), -profile(x), atol=1e-15)
    assert np.all(np.diff(profile(x)) > 0)


def test_layer_profile_asymmetric_well():
    from phaselab.potential import polynomial_well

    # W = (1-u^2)^2 (1 + u/2) / 4 stays positive on (-1, 1).
    base = np.polynomial.Polynomial([0.25, 0, -0.5, 0, 0.25]) * np.polynomial.Polynomial([1, 0.5])
    w = polynomial_well(base.coef, "tilted")
    prof = layer_profile_1d(w, 6.0, 1e-6)
    x = np.linspace(-5.5, 5.5, 111)
    u = prof(x)
    assert np.all(np.diff(u) > 0)
    fd = (prof(x + 1e-5) - prof(x - 1e-5)) / 2e-5
    np.testing.assert_allclose(fd, np.sqrt(2 * w.W(u)), atol=1e-6)


def test_layer_profile_preconditions():
    with pytest.raises(DomainError):
        layer_profile_1d(W, 4.0, 1e-6)


def test_layer_field_builds_planar_layer(profile):
    g = Grid((-0.5, -0.5), (0.5, 0.5), (21, 21))
    f = layer_field(g, 0.1, profile)
    X, _ = g.mesh()
    np.testing.assert_allclose(f.values, np.tanh(X / (0.1 * SQ2)), atol=1e-4)


# stability form

def test_stability_form_at_pure_phase():
    g = line(0.0, 1.0, 2001)
    x = g.axes()[0]
    phi = np.sin(np.pi * x)
    phi[[0, -1]] = 0.0
    q = stability_form(Field(g, np.ones_like(x), 1.0), W, phi)
    # Oracle: integral of pi^2 cos^2 + 2 sin^2 over [0, 1] = pi^2/2 + 1.
    assert q == pytest.approx(np.pi**2 / 2 + 1, rel=1e-5)


def test_translation_mode_is_near_zero():
    eps = 0.1
    f = tanh_field(eps, n=8001)
    x = f.grid.axes()[0]
    s = x / (eps * SQ2)
    phi = eps * (1 - np.tanh(s) ** 2)
    phi[[0, -1]] = 0.0
    q = stability_form(f, W, phi)
    scale = stability_form(f.with_values(np.ones_like(x)), W, phi)
    assert abs(q) < 1e-3 * scale


def test_stability_form_requires_vanishing_boundary():
    f = Field(line(0, 1, 11), np.ones(11), 1.0)
    with pytest.raises(DomainError):
        stability_form(f, W, np.ones(11))


@pytest.fixture(scope="module")
def monotone_minimizer():
    g = line(-1.0, 1.0, 257)
    x = g.axes()[0]
    return minimize_local(Field(g, np.clip(x / 0.3, -1, 1), 1 / 16), W, MinimizeOptions(tol=1e-9))


def test_minimizer_is_stable_in_random_directions(monotone_minimizer):
    f = monotone_minimizer
    assert np.all(np.diff(f.values) > 0)
    rng = np.random.default_rng(7)
    for _ in range(50):
        phi = rng.normal(size=f.values.shape)
        phi[[0, -1]] = 0.0
        assert stability_form(f, W, phi) >= -1e-6


@given(st.integers(0, 2**31 - 1))
def test_minimizer_stable_for_compact_bumps(monotone_minimizer, seed):
    f = monotone_minimizer
    rng = np.random.default_rng(seed)
    x = f.grid.axes()[0]
    c, r = rng.uniform(-0.8, 0.8), rng.uniform(0.05, 0.5)
    phi = np.where(np.abs(x - c) < r, np.cos(np.pi * (x - c) / (2 * r)) ** 2, 0.0)
    phi[[0, -1]] = 0.0
    assert stability_form(f, W, phi) >= -1e-6


# gamma probe

def test_gamma_probe():
    probe = gamma_probe_local([1 / 8, 1 / 16, 1 / 32, 1 / 64], W)
    assert probe.target == pytest.approx(surface_tension_constant(W))
    last = probe.rows[-1]
    assert abs(last.energy - C) < 0.02 * C
    assert probe.strictly_decreasing()
    assert probe.rows[0].deviation > probe.rows[-1].deviation


def test_gamma_probe_preconditions():
    with pytest.raises(DomainError):
        gamma_probe_local([1 / 16, 1 / 8], W)
