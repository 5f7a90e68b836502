import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import ndtr_interval, oracle_bump_apply, oracle_tK
from kfplimits import (
    SemigroupQuadrature,
    adjoint_mass,
    apply_semigroup,
    apply_semigroup_centered_p,
    catalog,
    constant,
    gaussian_bump,
    invariant_mean,
    kernel_density,
    sde_sample,
)
from kfplimits.semigroup import gaussian_box_probability, power_abs, rng_for

ALL_SPECS = ["heat", "ornstein_uhlenbeck", "kolmogorov", "kolmogorov_friction"]


@pytest.mark.parametrize("name", ALL_SPECS)
@pytest.mark.parametrize("t", [0.01, 0.5, 2.0])
def test_semigroup_preserves_constants(name, t):
    spec = catalog(name, 1)
    one = constant(spec.dim)
    X = np.zeros((3, spec.dim))
    X[1] = 0.7
    X[2] = -1.3
    vals = apply_semigroup(spec, one, X, t)
    np.testing.assert_allclose(vals, 1.0, atol=1e-10)


@pytest.mark.parametrize("name", ALL_SPECS)
@pytest.mark.parametrize("t", [0.05, 0.8, 3.0])
def test_apply_matches_convolution_oracle(name, t):
    spec = catalog(name, 1)
    center = 0.3 * np.ones(spec.dim)
    f = gaussian_bump(spec.dim, center=center, width=0.9)
    X = np.vstack([np.zeros(spec.dim), 0.5 * np.ones(spec.dim), -np.ones(spec.dim)])
    got = apply_semigroup(spec, f, X, t)
    want = [oracle_bump_apply(spec.Q, spec.B, center, 0.9, x, t) for x in X]
    np.testing.assert_allclose(got, want, rtol=5e-8, atol=1e-12)


def test_apply_wide_kernel_long_time(heat1):
    # very wide kernels switch to the mass-integral route internally;
    # the closed form stays valid at every t
    f = gaussian_bump(1, width=0.5)
    X = np.array([[0.0], [1.0]])
    for t in (50.0, 400.0):
        got = apply_semigroup(heat1, f, X, t)
        want = [oracle_bump_apply(heat1.Q, heat1.B, [0.0], 0.5, x, t) for x in X]
        np.testing.assert_allclose(got, want, rtol=1e-6)


def test_centered_moment_p2_matches_closed_form(kolmo):
    # |f - f(X)|^2 expands into bump convolutions only: P_t f^2, P_t f, f(X)
    f = gaussian_bump(2, width=1.1)
    t = 0.6
    X = np.array([[0.2, -0.4], [0.0, 0.0]])
    got = apply_semigroup_centered_p(kolmo, f, X, t, 2.0)
    f2_width = 1.1 / math.sqrt(2.0)
    want = []
    for x in X:
        ptf2 = oracle_bump_apply(kolmo.Q, kolmo.B, np.zeros(2), f2_width, x, t)
        ptf = oracle_bump_apply(kolmo.Q, kolmo.B, np.zeros(2), 1.1, x, t)
        fx = float(f(x))
        want.append(ptf2 - 2.0 * fx * ptf + fx * fx)
    np.testing.assert_allclose(got, want, rtol=1e-7, atol=1e-11)


def test_centered_moment_p1_nonnegative(friction):
    f = gaussian_bump(2)
    X = np.array([[0.0, 0.0], [2.0, 1.0]])
    vals = apply_semigroup_centered_p(friction, f, X, 0.7, 1.0)
    assert np.all(np.asarray(vals) >= 0.0)


def test_kernel_density_normalization_and_moments(kolmo):
    t = 0.4
    X = np.array([0.5, -0.2])
    # integrate the kernel over Y on a wide tensor grid
    from kfplimits.quadrature import gl_segment, tensor_grid

    state_tK = 2.0 * oracle_tK(kolmo.Q, kolmo.B, t)
    import scipy.linalg as sla

    mean = sla.expm(t * kolmo.B) @ X
    sds = np.sqrt(np.diag(state_tK))
    axes = [gl_segment(mean[i] - 9 * sds[i], mean[i] + 9 * sds[i], 80) for i in range(2)]
    pts, w = tensor_grid(axes)
    dens = kernel_density(kolmo, X, pts, t)
    assert float(w @ dens) == pytest.approx(1.0, abs=1e-8)
    got_mean = np.array([float(w @ (dens * pts[:, i])) for i in range(2)])
    np.testing.assert_allclose(got_mean, mean, atol=1e-8)
    centered = pts - got_mean
    got_cov = np.array(
        [[float(w @ (dens * centered[:, i] * centered[:, j])) for j in range(2)] for i in range(2)]
    )
    np.testing.assert_allclose(got_cov, state_tK, rtol=1e-7, atol=1e-9)


@pytest.mark.parametrize("name", ["kolmogorov", "kolmogorov_friction", "ornstein_uhlenbeck"])
def test_adjoint_mass_tracks_drift_trace(name):
    spec = catalog(name, 1)
    trace_B = float(np.trace(spec.B))
    Y = 0.4 * np.ones(spec.dim)
    for t in (0.5, 1.5):
        est = adjoint_mass(spec, Y, t, n_mc=40_000, seed=5)
        want = math.exp(-t * trace_B)
        assert est.std_error > 0.0
        assert abs(est.value - want) <= 4.0 * est.std_error


def test_adjoint_mass_deterministic_seed(ou1):
    a = adjoint_mass(ou1, np.zeros(1), 1.0, n_mc=10_000, seed=42)
    b = adjoint_mass(ou1, np.zeros(1), 1.0, n_mc=10_000, seed=42)
    assert a.value == b.value and a.std_error == b.std_error


def test_sde_endpoint_moments(kolmo):
    import scipy.linalg as sla

    X0 = np.array([1.0, 0.5])
    t = 1.0
    paths = sde_sample(kolmo, X0, t, n_steps=400, seed=11, n_paths=20_000)
    assert paths.shape == (20_000, 2)
    want_mean = sla.expm(t * kolmo.B) @ X0
    want_cov = 2.0 * oracle_tK(kolmo.Q, kolmo.B, t)
    mean = paths.mean(axis=0)
    se = paths.std(axis=0, ddof=1) / math.sqrt(len(paths))
    # 4 sigma statistical window plus Euler step bias
    np.testing.assert_array_less(np.abs(mean - want_mean), 4.0 * se + 5e-3)
    cov = np.cov(paths.T)
    np.testing.assert_allclose(cov, want_cov, atol=0.05 * max(1.0, float(np.max(np.abs(want_cov)))))


def test_invariant_mean_stable_drift(ou1):
    # equilibrium covariance 2 K_inf = 1: the average of the unit bump is 2^{-1/2}
    f = gaussian_bump(1)
    assert invariant_mean(ou1, f) == pytest.approx(2.0**-0.5, rel=1e-9)


def test_invariant_mean_requires_stability(heat1):
    with pytest.raises(ValueError):
        invariant_mean(heat1, gaussian_bump(1))


def test_gaussian_box_probability_1d():
    mean = np.array([0.3])
    L = np.array([[1.7]])
    lo, hi = np.array([-1.0]), np.array([2.0])
    got = gaussian_box_probability(mean, L, lo, hi)
    assert got.item() == pytest.approx(ndtr_interval(-1.0, 2.0, 0.3, 1.7), rel=1e-10)


def test_gaussian_box_probability_diagonal_2d():
    mean = np.array([0.0, 1.0])
    L = np.diag([1.0, 0.5])
    lo = np.array([-1.0, 0.0])
    hi = np.array([1.0, 2.0])
    want = ndtr_interval(-1, 1, 0, 1) * ndtr_interval(0, 2, 1, 0.5)
    got = gaussian_box_probability(mean, L, lo, hi)
    assert got.item() == pytest.approx(want, rel=1e-9)


def test_gaussian_box_probability_correlated_vs_mc():
    rng = np.random.default_rng(1)
    L = np.array([[1.0, 0.0], [0.8, 0.6]])
    mean = np.zeros(2)
    lo = np.array([-0.5, -1.0])
    hi = np.array([1.0, 0.5])
    Z = rng.standard_normal((400_000, 2))
    Xs = mean + Z @ L.T
    inside = np.all((Xs >= lo) & (Xs <= hi), axis=1)
    want = inside.mean()
    se = inside.std(ddof=1) / math.sqrt(len(inside))
    got = gaussian_box_probability(mean, L, lo, hi).item()
    assert abs(got - want) <= 4.0 * se


def test_power_abs_matches_numpy():
    d = np.array([-2.0, -0.5, 0.0, 0.3, 4.0])
    for p in (1.0, 2.0, 2.7):
        np.testing.assert_allclose(power_abs(d, p), np.abs(d) ** p, rtol=1e-13)


def test_rng_for_reproducible_shards():
    a = rng_for(3, 1).standard_normal(4)
    b = rng_for(3, 1).standard_normal(4)
    c = rng_for(3, 2).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_mc_mode_agrees_with_deterministic(kolmo):
    f = gaussian_bump(2)
    X = np.array([[0.0, 0.0], [0.6, -0.3]])
    det = apply_semigroup(kolmo, f, X, 0.8)
    quad = SemigroupQuadrature(mode="montecarlo", mc_samples=200_000, seed=9)
    mc = apply_semigroup(kolmo, f, X, 0.8, quad)
    np.testing.assert_allclose(mc, det, atol=6e-3)


@given(st.floats(0.05, 4.0), st.floats(-1.0, 1.0))
@settings(max_examples=20)
def test_heat_apply_pointwise_formula(t, x):
    # for the 1d heat semigroup the convolution has an explicit elementary form
    spec = catalog("heat", 1)
    f = gaussian_bump(1)
    got = float(apply_semigroup(spec, f, np.array([x]), t))
    want = (1.0 + 2.0 * t) ** -0.5 * math.exp(-(x * x) / (2.0 * (1.0 + 2.0 * t)))
    assert got == pytest.approx(want, rel=1e-7)
