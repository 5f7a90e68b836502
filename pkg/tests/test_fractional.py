import math

import numpy as np
import pytest

from helpers import heat_frac_at_origin, ou_frac_at_origin
from kfplimits import (
    FractionalConfig,
    balakrishnan_condition,
    balakrishnan_weight_check,
    catalog,
    constant,
    fractional_power,
    gaussian_bump,
    lp_limit_error,
    pointwise_limit_sweep,
    resolvent_apply,
)
from kfplimits.fractional import (
    affine_extrapolate,
    fractional_field,
    write_sweep_csv,
)


def test_weight_calibration_is_tight():
    for s in (0.01, 0.1, 0.5, 0.9, 0.99):
        assert balakrishnan_weight_check(s) == pytest.approx(1.0, abs=1e-8)


def test_heat_fractional_power_closed_form(heat1, gauss1):
    for s in (0.1, 0.3, 0.5, 0.8):
        got = fractional_power(heat1, gauss1, np.zeros(1), FractionalConfig(s=s))
        assert got == pytest.approx(heat_frac_at_origin(s), rel=2e-6)


def test_ou_fractional_power_quadrature_oracle(ou1, gauss1):
    for s in (0.1, 0.5):
        got = fractional_power(ou1, gauss1, np.zeros(1), FractionalConfig(s=s))
        assert got == pytest.approx(ou_frac_at_origin(s), rel=1e-6)


def test_fractional_power_off_origin(heat1, gauss1):
    # P_t f(x) = (1+2t)^{-1/2} exp(-x^2/(2+4t)); oracle by direct quadrature
    from scipy import integrate

    s, x = 0.4, 0.8
    got = fractional_power(heat1, gauss1, np.array([x]), FractionalConfig(s=s))

    def g(t):
        pt = (1.0 + 2.0 * t) ** -0.5 * math.exp(-x * x / (2.0 + 4.0 * t))
        return t ** (-1.0 - s) * (pt - math.exp(-x * x / 2.0))

    val, err = integrate.quad(g, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
    want = -s / math.gamma(1.0 - s) * val
    assert err < 1e-8
    assert got == pytest.approx(want, rel=1e-6)


def test_field_recomposition_identity(heat1, gauss1):
    cfg = FractionalConfig(s=0.35)
    X = np.array([[0.0], [0.5], [-1.2]])
    field = fractional_field(heat1, gauss1, X, cfg)
    pref = cfg.s / math.gamma(1.0 - cfg.s)
    fX = np.asarray(gauss1(X))
    rebuilt = field.near_term + pref * (
        (fX - field.mu_inf) * field.t_split ** (-cfg.s) / cfg.s - field.far_raw
    )
    np.testing.assert_allclose(field.values, rebuilt, rtol=1e-12)
    # no equilibrium subtraction without stable drift
    assert np.all(np.asarray(field.mu_inf) == 0.0)


def test_field_linearity_exact(heat1):
    from kfplimits.functions import add, scale

    f = gaussian_bump(1, width=1.0)
    g = gaussian_bump(1, center=(0.7,), width=0.8)
    h = add(scale(f, 2.0), scale(g, -0.5))
    cfg = FractionalConfig(s=0.5)
    X = np.array([[0.0], [0.4]])
    vf = fractional_field(heat1, f, X, cfg).values
    vg = fractional_field(heat1, g, X, cfg).values
    vh = fractional_field(heat1, h, X, cfg).values
    # adaptive truncation differs per support box, so linearity holds to the
    # certified residual level rather than to machine precision
    np.testing.assert_allclose(vh, 2.0 * vf - 0.5 * vg, rtol=1e-5, atol=1e-8)


def test_pointwise_sweep_heat_limit(heat1, gauss1):
    sweep = pointwise_limit_sweep(heat1, gauss1, np.zeros(1), (0.10, 0.05, 0.02, 0.01))
    assert sweep.predicted_limit == pytest.approx(1.0)
    assert sweep.extrapolated == pytest.approx(1.0, rel=0.02)
    assert sweep.regime == "MaxReNonnegative"


def test_pointwise_sweep_stable_limit(ou1, gauss1):
    sweep = pointwise_limit_sweep(ou1, gauss1, np.zeros(1), (0.10, 0.05, 0.02, 0.01))
    assert sweep.predicted_limit == pytest.approx(1.0 - 2.0**-0.5, rel=1e-9)
    assert sweep.extrapolated == pytest.approx(1.0 - 2.0**-0.5, rel=0.02)
    assert sweep.regime == "MaxReNegative"


def test_pointwise_sweep_validates_orders(heat1, gauss1):
    with pytest.raises(ValueError):
        pointwise_limit_sweep(heat1, gauss1, np.zeros(1), (0.05, 0.10))
    with pytest.raises(ValueError):
        pointwise_limit_sweep(heat1, gauss1, np.zeros(1), (1.2, 0.5))


def test_affine_extrapolate_exact_on_affine_data():
    xs = np.array([0.10, 0.05, 0.02, 0.01])
    ys = 3.0 + 2.5 * xs
    assert affine_extrapolate(xs, ys) == pytest.approx(3.0, abs=1e-12)


def test_resolvent_of_constant_is_inverse_rate(heat1):
    one = constant(1)
    for lam in (1.0, 0.25):
        val = resolvent_apply(heat1, one, np.zeros(1), lam)
        assert float(np.asarray(val)) == pytest.approx(1.0 / lam, rel=1e-8)


def test_resolvent_rejects_nonpositive_rate(heat1, gauss1):
    with pytest.raises(ValueError):
        resolvent_apply(heat1, gauss1, np.zeros(1), 0.0)
    with pytest.raises(ValueError):
        resolvent_apply(heat1, gauss1, np.zeros(1), -1.0)


def test_resolvent_mass_identity_zero_trace(heat1, gauss1):
    # nonnegative input, driftless mass conservation: ||lam R f||_1 = ||f||_1
    series = balakrishnan_condition(heat1, gauss1, 1.0, (1.0, 0.2), n_mc=30_000, seed=2)
    fn1 = gauss1.lp_norm(1.0)
    for val, err in zip(series.values, series.errors, strict=True):
        assert err > 0.0
        assert abs(val - fn1) <= 4.0 * err


def test_resolvent_l2_decreasing(heat1, gauss1):
    series = balakrishnan_condition(heat1, gauss1, 2.0, (1.0, 0.3, 0.1), n_mc=20_000, seed=2)
    vals = list(series.values)
    assert vals[0] > vals[1] > vals[2]
    assert series.p == 2.0


def test_lp_limit_error_decreases(friction):
    f = gaussian_bump(2)
    errs = [lp_limit_error(friction, f, s, 2.0).value for s in (0.10, 0.05)]
    assert errs[0] > errs[1] > 0.0
    # small orders leave f nearly fixed in L2 under positive drift trace
    assert errs[1] <= 0.12 * f.lp_norm(2.0)


def test_write_sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    write_sweep_csv(path, "heat", "gauss", "TraceZero", [(0.1, 2.0, 0.01), (0.05, 2.1, 0.01)])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "spec,f_label,s,value,error,regime"
    assert len(lines) == 3
    assert lines[1].startswith("heat,gauss,0.1,")


def test_fractional_config_validation():
    with pytest.raises(ValueError):
        FractionalConfig(s=1.5)
    with pytest.raises(ValueError):
        FractionalConfig(s=0.5, t_split=0.0)
    with pytest.raises(ValueError):
        FractionalConfig(s=0.5, T_max=0.5)
    cfg = FractionalConfig(s=0.3)
    assert cfg.with_s(0.7).s == pytest.approx(0.7)
