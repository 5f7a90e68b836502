"""Running covariance of the Gaussian semigroup kernel and derived quantities.

For an operator with diffusion Q and drift B, the kernel at time t is the
Gaussian with mean e^{tB} X and covariance 2 t K(t), where

    t K(t) = int_0^t e^{sB} Q e^{sB^T} ds.

The integral is evaluated exactly through a block matrix exponential: with
M = [[-B, Q], [0, B^T]] one has expm(t M) = [[*, F], [0, G]] with
G = e^{t B^T} and e^{tB} F = t K(t).  A composite quadrature of the defining
integral (or, beyond its overflow range, the exact semigroup doubling
identity) cross-checks every freshly computed state.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .operators import OperatorSpec, StabilityRegime, classify_spectrum
from .quadrature import gl_segment

__all__ = [
    "CovarianceState",
    "matrix_exp",
    "running_covariance_blockexp",
    "covariance",
    "volume",
    "max_safe_time",
    "max_reliable_time",
    "unit_ball_volume",
    "k_infinity",
    "gaussian_shift_and_factor",
    "volume_rows",
    "write_volume_csv",
]

CROSS_CHECK_TOL = 1e-8


def matrix_exp(M: np.ndarray) -> np.ndarray:
    """Matrix exponential with finiteness guards on input and output."""
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix exponential of non-finite matrix")
    E = sla.expm(M)
    if not np.all(np.isfinite(E)):
        raise OverflowError("matrix exponential overflowed float range")
    return E


def running_covariance_blockexp(Q: np.ndarray, B: np.ndarray, t: float):
    """(t K(t), e^{tB}) via the block-exponential identity."""
    N = Q.shape[0]
    M = np.zeros((2 * N, 2 * N))
    M[:N, :N] = -B
    M[:N, N:] = Q
    M[N:, N:] = B.T
    E = matrix_exp(t * M)
    exp_tB = E[N:, N:].T
    tK = exp_tB @ E[:N, N:]
    tK = 0.5 * (tK + tK.T)
    return tK, exp_tB


def _is_nilpotent(B: np.ndarray) -> bool:
    N = B.shape[0]
    P = np.linalg.matrix_power(B, N)
    scale = max(1.0, float(np.linalg.norm(B, 2)) ** N)
    return float(np.max(np.abs(P))) <= 1e-13 * scale


def _running_covariance_quadrature(Q: np.ndarray, B: np.ndarray, t: float, nilpotent: bool):
    """Composite Gauss-Legendre evaluation of int_0^t e^{sB} Q e^{sB^T} ds."""
    if nilpotent:
        # integrand is a matrix polynomial of degree <= 2(N-1); one panel is exact
        panels, order = 1, 2 * Q.shape[0] + 2
    else:
        extent = t * float(np.linalg.norm(B, 2))
        panels = max(1, min(64, int(math.ceil(extent / 12.0))))
        order = 24
    acc = np.zeros_like(Q)
    edges = np.linspace(0.0, t, panels + 1)
    for i in range(panels):
        x, w = gl_segment(edges[i], edges[i + 1], order)
        for s, ws in zip(x, w):
            Es = matrix_exp(s * B)
            acc += ws * (Es @ Q @ Es.T)
    return 0.5 * (acc + acc.T)


@dataclass(frozen=True)
class CovarianceState:
    """All kernel ingredients at one time t."""

    t: float
    K_t: np.ndarray        # K(t) = (1/t) int_0^t e^{sB} Q e^{sB^T} ds
    tK_t: np.ndarray       # t K(t)
    factor_L: np.ndarray   # lower-triangular-ish factor, L L^T = 2 t K(t)
    log_det_tK: float
    V_t: float             # omega_N * det(t K(t))^{1/2}
    exp_tB: np.ndarray

    def __post_init__(self):
        for name in ("K_t", "tK_t", "factor_L", "exp_tB"):
            arr = getattr(self, name)
            arr.setflags(write=False)


def unit_ball_volume(N: int) -> float:
    return math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0)


def _factor_psd(S: np.ndarray) -> np.ndarray:
    """Factor L with L L^T = S; Cholesky with an eigendecomposition fallback."""
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        evals, vecs = np.linalg.eigh(S)
        floor = 1e-300
        evals = np.clip(evals, floor, None)
        return vecs * np.sqrt(evals)


_cache: dict[tuple, CovarianceState] = {}
_cache_lock = threading.Lock()


def _cross_check(spec: OperatorSpec, t: float, tK: np.ndarray, nilpotent: bool):
    scale = max(float(np.max(np.abs(tK))), 1e-300)
    extent = t * float(np.linalg.norm(spec.B, 2))
    if nilpotent or extent <= 512.0:
        ref = _running_covariance_quadrature(spec.Q, spec.B, t, nilpotent)
    else:
        # beyond the quadrature's overflow-safe range, use the exact identity
        # (2t) K(2t) = t K(t) + e^{tB} [t K(t)] e^{tB^T} from half time
        half = covariance(spec, 0.5 * t)
        ref = half.tK_t + half.exp_tB @ half.tK_t @ half.exp_tB.T
    err = float(np.max(np.abs(tK - ref))) / scale
    if err > CROSS_CHECK_TOL:
        raise FloatingPointError(
            f"covariance cross-check failed at t={t}: relative error {err:.3e}"
        )


def covariance(spec: OperatorSpec, t: float, cache: bool = True) -> CovarianceState:
    """Cached kernel state at time t (t > 0), cross-checked on first build.

    cache=False skips the memo table (for sampled-time Monte Carlo chains
    whose t values never repeat).
    """
    t = float(t)
    if not t > 0.0:
        raise ValueError(f"t must be positive, got {t}")
    key = (spec, t)
    if cache:
        with _cache_lock:
            state = _cache.get(key)
        if state is not None:
            return state
    tK, exp_tB = running_covariance_blockexp(spec.Q, spec.B, t)
    _cross_check(spec, t, tK, _is_nilpotent(spec.B))
    K = tK / t
    L = _factor_psd(2.0 * tK)
    sign, log_det = np.linalg.slogdet(tK)
    if sign <= 0:
        raise FloatingPointError(f"t K(t) not positive definite at t={t}")
    N = spec.dim
    V = unit_ball_volume(N) * math.exp(0.5 * log_det)
    state = CovarianceState(
        t=t, K_t=K, tK_t=tK, factor_L=L,
        log_det_tK=float(log_det), V_t=V, exp_tB=exp_tB,
    )
    if cache:
        with _cache_lock:
            _cache.setdefault(key, state)
    return state


def volume(spec: OperatorSpec, t: float) -> float:
    """Kernel volume scale V(t) = omega_N det(t K(t))^{1/2}."""
    return covariance(spec, t).V_t


def max_reliable_time(spec: OperatorSpec, t_max: float) -> float:
    """Largest probed t <= t_max where t K(t) is numerically well conditioned.

    Entries of t K(t) can grow like e^{2 a t} while det(t K(t)) grows only
    polynomially times e^{(tr B) 2t}; past the point where the condition
    number reaches ~1e12 the factorization and determinant are cancellation
    noise, so kernel evaluations must stop there.
    """
    t_max = min(t_max, max_safe_time(spec) / 4.0)
    good = min(1.0, t_max)
    t = good
    while t < t_max:
        t2 = min(1.6 * t, t_max)
        try:
            st = covariance(spec, t2)
        except (FloatingPointError, OverflowError):
            break
        lam = np.linalg.eigvalsh(st.tK_t)
        if lam[0] <= 1e-12 * lam[-1]:
            break
        good = t2
        t = t2
    return good


def max_safe_time(spec: OperatorSpec) -> float:
    """Largest t for which e^{tB} and t K(t) stay inside float range.

    Exponential growth is governed by the spectral abscissa of B; purely
    polynomial growth (nilpotent-like spectrum) is safe out to huge times.
    """
    evals = np.linalg.eigvals(spec.B)
    a = float(np.max(np.abs(evals.real))) if spec.dim else 0.0
    if a <= 1e-12:
        return 10.0 ** (250.0 / max(1, 2 * spec.dim - 1))
    return 600.0 / a


def k_infinity(spec: OperatorSpec) -> np.ndarray:
    """Equilibrium covariance lim t K(t), defined when max Re(spec(B)) < 0.

    Solves B K + K B^T + Q = 0 and cross-checks against the running
    covariance at a time deep in the exponential-convergence regime.
    """
    cls = classify_spectrum(spec)
    if cls.stability_regime is not StabilityRegime.MAX_RE_NEGATIVE:
        raise ValueError(
            "equilibrium covariance requires all drift eigenvalues in the "
            f"open left half plane; max real part is {cls.max_re_lambda:.3e}"
        )
    Kinf = sla.solve_continuous_lyapunov(spec.B, -np.asarray(spec.Q))
    Kinf = 0.5 * (Kinf + Kinf.T)
    # exact identity at every t: t K(t) = K_inf - e^{tB} K_inf e^{tB^T},
    # so the cross-check needs no deep-time evaluation (stiff drifts overflow
    # there) and t = 1 suffices
    tK_ref, _ = running_covariance_blockexp(spec.Q, spec.B, 1.0)
    E = matrix_exp(np.asarray(spec.B, dtype=float))
    want = Kinf - E @ Kinf @ E.T
    err = float(np.max(np.abs(tK_ref - want))) / max(float(np.max(np.abs(Kinf))), 1e-300)
    if err > 1e-8:
        raise FloatingPointError(
            f"equilibrium covariance cross-check failed: relative error {err:.3e}"
        )
    Kinf.setflags(write=False)
    return Kinf


def gaussian_shift_and_factor(spec: OperatorSpec, X: np.ndarray, t: float):
    """Mean e^{tB} X and factor L with L L^T = 2 t K(t).

    X may be a single point (N,) or a batch (M, N); the mean matches its shape.
    """
    state = covariance(spec, t)
    X = np.asarray(X, dtype=float)
    mean = X @ state.exp_tB.T
    return mean, state.factor_L


def volume_rows(spec: OperatorSpec, t_values) -> list[dict]:
    rows = []
    for t in t_values:
        st = covariance(spec, float(t))
        rows.append(
            {
                "t": st.t,
                "V": st.V_t,
                "V_over_sqrt_t": st.V_t / math.sqrt(st.t),
                "V_over_t": st.V_t / st.t,
                "log_det_tK": st.log_det_tK,
            }
        )
    return rows


def write_volume_csv(spec: OperatorSpec, t_values, path) -> None:
    rows = volume_rows(spec, t_values)
    with open(path, "w") as fh:
        fh.write("t,V,V_over_sqrt_t,V_over_t,log_det_tK\n")
        for r in rows:
            fh.write(
                f"{r['t']!r},{r['V']!r},{r['V_over_sqrt_t']!r},"
                f"{r['V_over_t']!r},{r['log_det_tK']!r}\n"
            )
