import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dslab.model import (
    ModelParams,
    density_power,
    derived,
    effective_mass,
    effective_mass_derivative,
    sample,
    soliton_derivative,
    soliton_eval,
    soliton_l2_norm_sq,
)

powers = st.floats(0.2, 5.0)
ratios = st.floats(0.05, 0.98)


def test_derived_values():
    assert derived(ModelParams(p=1, omega=0.6)) == pytest.approx((0.8, 0.25), rel=1e-15)
    assert derived(ModelParams(p=1, omega=1.2, m=2.0)) == pytest.approx((1.6, 0.25), rel=1e-15)
    kappa, nu = derived(ModelParams(p=1, omega=1 - 1e-12))
    assert 0 < kappa < 2e-6 and 0 < nu < 1e-12


@pytest.mark.parametrize("kw", [dict(omega=1.0), dict(omega=0.0), dict(omega=1.2), dict(omega=0.5, p=0.0),
                                dict(omega=0.5, m=-1.0), dict(omega=0.5, mu=-0.1)])
def test_invalid_params_rejected(kw):
    kw.setdefault("p", 1.0)
    with pytest.raises(ValueError):
        ModelParams(**kw)


def test_values_at_origin():
    v, u = soliton_eval(ModelParams(p=1, omega=0.6), 0.0)
    assert v == pytest.approx(np.sqrt(0.8), rel=1e-15) and u == 0.0
    for p in (0.5, 2.0, 3.0):
        params = ModelParams(p=p, omega=0.7)
        v, u = soliton_eval(params, 0.0)
        assert v == pytest.approx(((p + 1) * 0.3) ** (1 / (2 * p)), rel=1e-14)
        assert density_power(params, 0.0) == pytest.approx((p + 1) * 0.3, rel=1e-15)


def test_density_against_high_precision():
    params = ModelParams(p=1, omega=0.6)
    v, u = soliton_eval(params, 1.0)
    with mpmath.workdps(40):
        t = mpmath.tanh(mpmath.mpf("0.8"))
        ref = mpmath.mpf("0.8") * (1 - t**2) / (1 - t**2 / 4)
    assert v * v - u * u == pytest.approx(float(ref), rel=1e-14)


@given(p=powers, w=ratios, x=st.floats(-30, 30))
def test_density_closed_form_high_precision(p, w, x):
    params = ModelParams(p=p, omega=w)
    with mpmath.workdps(40):
        pm, wm, xm = mpmath.mpf(p), mpmath.mpf(w), mpmath.mpf(x)
        nu = (1 - wm) / (1 + wm)
        y = pm * mpmath.sqrt(1 - wm**2) * xm
        t = mpmath.tanh(y)
        # sech^2 rather than 1 - tanh^2, which cancels in the tails even at 40 digits
        ref = (pm + 1) * (1 - wm) * mpmath.sech(y) ** 2 / (1 - nu * t**2)
    assert density_power(params, x) == pytest.approx(float(ref), rel=1e-12, abs=1e-300)


def test_density_matches_components():
    params = ModelParams(p=2, omega=0.5)
    x = np.linspace(-5, 5, 2001) / (params.p * params.kappa)
    v, u = soliton_eval(params, x)
    np.testing.assert_allclose(density_power(params, x), (v * v - u * u) ** 2, rtol=1e-12)


def test_density_decay_rate():
    params = ModelParams(p=2, omega=0.8)
    x = np.array([10.0, 11.0]) / (params.p * params.kappa)
    d = density_power(params, x)
    assert d[0] / d[1] == pytest.approx(np.exp(2.0), rel=1e-6)


def test_effective_mass():
    params = ModelParams(p=1, omega=0.9)
    assert effective_mass(params, 0.0) == pytest.approx(0.8, rel=1e-14)
    assert effective_mass(params, 1e3) == 1.0
    h = 1e-5
    x = np.linspace(-8, 8, 33)
    fd = (effective_mass(params, x + h) - effective_mass(params, x - h)) / (2 * h)
    np.testing.assert_allclose(effective_mass_derivative(params, x), fd, atol=1e-9)


@given(p=powers, w=ratios)
def test_parity_exact(p, w):
    params = ModelParams(p=p, omega=w)
    x = np.linspace(0, 30 / (p * params.kappa), 301)
    v1, u1 = soliton_eval(params, x)
    v2, u2 = soliton_eval(params, -x)
    assert np.array_equal(v1, v2) and np.array_equal(u1, -u2)


@given(p=powers, w=ratios)
def test_positive_density_and_sup_bound(p, w):
    params = ModelParams(p=p, omega=w)
    x = np.linspace(-15, 15, 301) / (p * params.kappa)
    d = density_power(params, x)
    v, u = soliton_eval(params, x)
    assert np.all(d > 0) and np.all(v * v - u * u > 0)
    assert d.max() == pytest.approx(params.amplitude, rel=1e-14)
    assert np.all(d[x != 0] < params.amplitude)


@given(p=powers, w=ratios)
def test_ode_residual(p, w):
    params = ModelParams(p=p, omega=w)
    x = np.linspace(-20, 20, 801) / (p * params.kappa)
    v, u = soliton_eval(params, x)
    dv, du = soliton_derivative(params, x)
    M = effective_mass(params, x)
    scale = np.abs(v).max()
    assert np.abs(dv + (M + w) * u).max() <= 1e-10 * scale
    assert np.abs(du + (M - w) * v).max() <= 1e-10 * scale


@given(p=powers, w=ratios)
def test_hamiltonian_constraint(p, w):
    params = ModelParams(p=p, omega=w)
    x = np.linspace(-20, 20, 401) / (p * params.kappa)
    v, u = soliton_eval(params, x)
    s = density_power(params, x) ** (1.0 / p)
    h = 0.5 * (w * (v * v + u * u) - s + s ** (p + 1) / (p + 1))
    assert np.abs(h).max() <= 1e-13 * max(1.0, np.abs(v).max() ** 2)


def test_omega_continuity():
    x = np.linspace(-10, 10, 41)
    ws = np.linspace(0.5, 0.6, 1001)
    vs = np.array([soliton_eval(ModelParams(p=1.5, omega=w), x)[0] for w in ws])
    jumps = np.abs(np.diff(vs, axis=0)).max()
    assert jumps < 1e-3


def test_sample_fields():
    params = ModelParams(p=1, omega=0.6)
    s = sample(params, [0.0, 1.0])
    assert s.M[0] == pytest.approx(1 - 0.8)
    assert s.density_p[1] == pytest.approx(s.v[1] ** 2 - s.u[1] ** 2, rel=1e-14)


def test_l2_norm_trapezoid():
    params = ModelParams(p=1, omega=0.5)
    X = 30.0 / (params.p * params.kappa)
    x = np.linspace(-X, X, 2**16 + 1)
    v, u = soliton_eval(params, x)
    ref = np.trapezoid(v * v + u * u, x)
    res = soliton_l2_norm_sq(params)
    assert res.value == pytest.approx(ref, rel=1e-8)
    assert 0 <= res.error < 1e-10 * res.value


@given(p=powers, w=ratios)
def test_l2_norm_positive(p, w):
    res = soliton_l2_norm_sq(ModelParams(p=p, omega=w))
    assert np.isfinite(res.value) and res.value > 0


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0])
def test_l2_norm_decreases_toward_mass(p):
    vals = [soliton_l2_norm_sq(ModelParams(p=p, omega=w)).value for w in (0.9, 0.95, 0.99)]
    assert vals[0] > vals[1] > vals[2]
