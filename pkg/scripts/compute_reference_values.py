#!/usr/bin/env python3
"""Derive the reference constants frozen into the test suite.

Everything here is computed from closed forms or scipy quadrature only, with
no imports from the package, so the numbers can be checked independently of
the code under test.  Run it to regenerate the table printed below.
"""
import math

import numpy as np
from scipy import integrate
from scipy.linalg import expm
from scipy.special import gamma


def heat_besov_p2_unit_gauss(dim: int, s: float) -> float:
    # semigroup seminorm of e^{-|x|^2/2} for Q = I, B = 0, p = 2:
    # 2 pi^{N/2} Gamma(1-s) Gamma(s + N/2) / (s Gamma(N/2))
    return (2.0 * math.pi ** (dim / 2.0) * gamma(1.0 - s) * gamma(s + dim / 2.0)
            / (s * gamma(dim / 2.0)))


def gagliardo_p2_unit_gauss(dim: int, s: float) -> float:
    sigma = 2.0 * math.pi ** (dim / 2.0) / gamma(dim / 2.0)
    return math.pi ** (dim / 2.0) * sigma * gamma(1.0 - s) * 4.0 ** (-s) / s


def equivalence_constant(dim: int, s: float, p: float) -> float:
    return 2.0 ** (s * p) * gamma((dim + s * p) / 2.0) * math.pi ** (-dim / 2.0)


def heat_frac_at_origin(s: float) -> float:
    # one-dimensional unit Gaussian at the origin: P_t f(0) = (1+2t)^{-1/2},
    # so the order-s power is s/Gamma(1-s) int t^{-1-s} (1 - (1+2t)^{-1/2}) dt
    # = 2^s Gamma(s + 1/2) / Gamma(1/2)
    return 2.0 ** s * gamma(s + 0.5) / gamma(0.5)


def ou_frac_at_origin(s: float) -> float:
    # mean-reverting drift B = -1, Q = 1: P_t f(0) = (2 - e^{-2t})^{-1/2}
    def g(t):
        return t ** (-1.0 - s) * ((2.0 - math.exp(-2.0 * t)) ** -0.5 - 1.0)

    val, err = integrate.quad(g, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    return -s / gamma(1.0 - s) * val


def far_tail(trace_B: float, s: float, p: float) -> float:
    # s ||f||_p^p [2/(sp) + int_1^inf t^{-sp/2-1} e^{-t trB} dt], ||f||_p^p = 1.
    # The power tail carries mass out to t ~ e^{1/a}, far beyond what direct
    # quadrature resolves at small a, so integrate by parts first:
    # int_1^inf t^{-a-1} e^{-tau t} dt = (e^{-tau} - tau J)/a with
    # J = int_1^inf t^{-a} e^{-tau t} dt, which decays like e^{-tau t}.
    a = 0.5 * s * p
    if trace_B == 0.0:
        tail = 1.0 / a
    else:
        J, _ = integrate.quad(lambda t: t ** -a * math.exp(-trace_B * t),
                              1.0, np.inf, epsabs=1e-14, limit=200)
        tail = (math.exp(-trace_B) - trace_B * J) / a
    return s * (1.0 / a + tail)


def kinetic_covariance(t: float) -> np.ndarray:
    # (1/t) int_0^t e^{uB} Q e^{uB^T} du for Q = diag(1, 0), B = [[0,0],[1,0]]
    Q = np.array([[1.0, 0.0], [0.0, 0.0]])
    B = np.array([[0.0, 0.0], [1.0, 0.0]])

    def f(u):
        E = expm(u * B)
        return E @ Q @ E.T

    val, _ = integrate.quad_vec(f, 0.0, t, epsabs=1e-14)
    return val / t


def main():
    print("== semigroup seminorm of the unit Gaussian, Q=I B=0, p=2 ==")
    for dim in (1, 2):
        for s in (0.1, 0.3, 0.5):
            print(f"  N={dim} s={s}: {heat_besov_p2_unit_gauss(dim, s):.8f}")

    print("== double-integral seminorm of the unit Gaussian, p=2 ==")
    for dim in (1, 2):
        for s in (0.3, 0.5):
            print(f"  N={dim} s={s}: {gagliardo_p2_unit_gauss(dim, s):.8f}")

    print("== ratio constant 2^{sp} Gamma((N+sp)/2) pi^{-N/2} ==")
    for dim in (1, 2):
        for s in (0.3, 0.5):
            for p in (1.0, 2.0):
                print(f"  N={dim} s={s} p={p:g}: {equivalence_constant(dim, s, p):.8f}")

    print("== fractional power of the unit Gaussian at the origin ==")
    for s in (0.1, 0.3, 0.5, 0.8):
        print(f"  diffusion-only, s={s}: {heat_frac_at_origin(s):.8f}")
    for s in (0.1, 0.5):
        print(f"  mean-reverting,  s={s}: {ou_frac_at_origin(s):.8f}")
    print(f"  equilibrium mean of the unit Gaussian: {2.0 ** -0.5:.8f}")
    print(f"  pointwise limit with equilibrium drift: 1 - 2^(-1/2) = {1 - 2 ** -0.5:.8f}")

    print("== scaled far mass, ||f||_p^p = 1 ==")
    for p in (1.0, 2.0):
        print(f"  trace 0, s=1e-6, p={p:g}: {far_tail(0.0, 1e-6, p):.8f}"
              f"  (limit {4.0 / p:g})")
        print(f"  trace 1, s=1e-6, p={p:g}: {far_tail(1.0, 1e-6, p):.8f}"
              f"  (limit {2.0 / p:g})")

    print("== kinetic-transport covariance (1/t) int e^{uB} Q e^{uB'} du ==")
    for t in (0.1, 1.0, 10.0):
        K = kinetic_covariance(t)
        want = np.array([[1.0, t / 2.0], [t / 2.0, t * t / 3.0]])
        print(f"  t={t}: max |K - [[1,t/2],[t/2,t^2/3]]| = "
              f"{np.max(np.abs(K - want)):.2e}")

    print("== one-dimensional L1 small-order limit, unit Gaussian ==")
    # s [f]_{s,1} -> 2 sigma_0 ||f||_1 with sigma_0 = 2 and ||f||_1 = sqrt(2 pi)
    print(f"  2 * sigma_0 * ||f||_1 = {4.0 * math.sqrt(2.0 * math.pi):.8f}")


if __name__ == "__main__":
    main()
