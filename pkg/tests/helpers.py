"""Independent oracles used across the test suite.

Everything here is computed from first principles with scipy/numpy only, so
the library under test never certifies itself: matrix exponentials come from
scipy.linalg.expm, time integrals from scipy.integrate, and the Gaussian
closed forms are derived by hand (unit-width bump f(x) = exp(-|x|^2/2)).
"""

import math

import numpy as np
from scipy import integrate, linalg, special

from kfplimits import build_operator


def sphere_measure(dim: int) -> float:
    """Surface measure of the unit sphere in R^dim (2 for dim=1, 2*pi for 2)."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def oracle_tK(Q: np.ndarray, B: np.ndarray, t: float) -> np.ndarray:
    """t*K(t) = int_0^t e^{uB} Q e^{uB^T} du by adaptive vector quadrature."""

    def integrand(u):
        E = linalg.expm(u * B)
        return E @ Q @ E.T

    val, _ = integrate.quad_vec(integrand, 0.0, t, epsabs=1e-14, epsrel=1e-12)
    return val


def oracle_bump_apply(Q, B, center, width, X, t) -> float:
    """Exact P_t f(X) for f(Y) = exp(-|Y-center|^2 / (2 width^2)).

    The kernel is Gaussian with mean e^{tB}X and covariance 2tK(t), and a
    Gaussian integrates against a Gaussian in closed form.
    """
    Q = np.asarray(Q, dtype=float)
    B = np.asarray(B, dtype=float)
    X = np.asarray(X, dtype=float)
    center = np.asarray(center, dtype=float)
    dim = len(X)
    S = 2.0 * oracle_tK(Q, B, t) + width**2 * np.eye(dim)
    d = linalg.expm(t * B) @ X - center
    quad_form = float(d @ np.linalg.solve(S, d))
    return width**dim / math.sqrt(np.linalg.det(S)) * math.exp(-0.5 * quad_form)


def heat_bump_lp_power(dim: int, width: float, p: float) -> float:
    """||f||_p^p for the Gaussian bump of the given width."""
    return (2.0 * math.pi * width**2 / p) ** (dim / 2.0)


def heat_besov_p2_unit_gauss(dim: int, s: float) -> float:
    """Exact squared heat seminorm of the unit bump.

    The inner double integral at time t equals 2 pi^{dim/2} (1 - (1+t)^{-dim/2});
    integrating t^{-s-1} against it gives a beta-type closed form.
    """
    return (
        2.0
        * math.pi ** (dim / 2.0)
        * math.gamma(1.0 - s)
        * math.gamma(s + dim / 2.0)
        / (s * math.gamma(dim / 2.0))
    )


def gagliardo_p2_unit_gauss(dim: int, s: float) -> float:
    """Exact squared Gagliardo seminorm of the unit bump.

    int |f(x+z)-f(x)|^2 dx = 2 pi^{dim/2} (1 - e^{-|z|^2/4}); the radial
    integral against |z|^{-dim-2s} is elementary.
    """
    return (
        math.pi ** (dim / 2.0)
        * sphere_measure(dim)
        * math.gamma(1.0 - s)
        * 4.0 ** (-s)
        / s
    )


def equivalence_constant_oracle(dim: int, s: float, p: float) -> float:
    """Ratio of the heat seminorm^p to the Gagliardo seminorm^p."""
    return 2.0 ** (s * p) * math.gamma((dim + s * p) / 2.0) * math.pi ** (-dim / 2.0)


def heat_frac_at_origin(s: float) -> float:
    """Exact fractional power of the 1d unit bump at the origin.

    P_t f(0) = (1+2t)^{-1/2} reduces the subordination integral to a beta
    function: the value is 2^s Gamma(s + 1/2) / Gamma(1/2).
    """
    return 2.0**s * math.gamma(s + 0.5) / math.gamma(0.5)


def ou_frac_at_origin(s: float) -> float:
    """Fractional power at the origin for the 1d stable-drift benchmark.

    With Q=1, B=-1, 2tK(t) = 1 - e^{-2t}, so P_t f(0) = (2 - e^{-2t})^{-1/2}
    and the subordination integral is done numerically to high accuracy.
    """

    def g(t):
        return t ** (-1.0 - s) * ((2.0 - math.exp(-2.0 * t)) ** -0.5 - 1.0)

    val, err = integrate.quad(g, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    assert err < 1e-9
    return -s / math.gamma(1.0 - s) * val


def far_tail_oracle(trace_B: float, s: float, p: float, fnorm_p: float) -> float:
    """Mass contribution of times t >= 1 by direct adaptive quadrature."""
    a = s * p / 2.0

    def g(t):
        return t ** (-a - 1.0) * (1.0 + math.exp(-t * trace_B))

    val, err = integrate.quad(g, 1.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    assert err < 1e-8 * max(1.0, abs(val))
    return fnorm_p * val


def random_admissible_spec(rng: np.random.Generator, dim: int):
    """Random operator with positive definite diffusion (always admissible)."""
    A = rng.uniform(-1.0, 1.0, size=(dim, dim))
    Q = A @ A.T + 0.1 * np.eye(dim)
    B = rng.uniform(-1.0, 1.0, size=(dim, dim))
    return build_operator(Q, B)


def min_eig(S: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (S + S.T)).min())


def ndtr_interval(lo: float, hi: float, mean: float, sd: float) -> float:
    """P(lo <= Z <= hi) for Z ~ Normal(mean, sd^2)."""
    return float(special.ndtr((hi - mean) / sd) - special.ndtr((lo - mean) / sd))
