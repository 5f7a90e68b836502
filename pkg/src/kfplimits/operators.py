"""Constant-coefficient degenerate drift-diffusion operators.

An operator is determined by a symmetric positive semidefinite diffusion
matrix Q and a drift matrix B, acting as tr(Q D^2 f) + <B x, D f>.  The
associated Gaussian semigroup is well defined exactly when the running
covariance (1/t) int_0^t e^{sB} Q e^{sB^T} ds is positive definite for all
t > 0, which is equivalent to the algebraic rank condition on
[Q^{1/2}, B Q^{1/2}, ..., B^{N-1} Q^{1/2}].
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "OperatorSpec",
    "DriftRegime",
    "StabilityRegime",
    "SpectralClassification",
    "HypoellipticityReport",
    "build_operator",
    "check_hypoellipticity",
    "classify_spectrum",
    "catalog",
    "CATALOG_NAMES",
]

_DEFAULT_T_SAMPLES = (0.01, 0.1, 1.0, 10.0, 100.0)

# below this min/max eigenvalue ratio K(t) is numerically indistinguishable
# from singular
_EIG_RATIO_FLOOR = 1e-13


class DriftRegime(str, Enum):
    TRACE_ZERO = "TraceZero"
    TRACE_POSITIVE = "TracePositive"
    TRACE_NEGATIVE = "TraceNegative"


class StabilityRegime(str, Enum):
    MAX_RE_NONNEGATIVE = "MaxReNonnegative"
    MAX_RE_NEGATIVE = "MaxReNegative"


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Immutable (Q, B) pair with content-based hashing."""

    dim: int
    Q: np.ndarray
    B: np.ndarray
    name: str | None = None

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float)
        B = np.array(self.B, dtype=float)
        if Q.shape != (self.dim, self.dim) or B.shape != (self.dim, self.dim):
            raise ValueError(
                f"Q and B must be {self.dim}x{self.dim}, got {Q.shape} and {B.shape}"
            )
        Q.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "B", B)
        fp = hash((self.dim, Q.tobytes(), B.tobytes()))
        object.__setattr__(self, "_fp", fp)

    def __hash__(self):
        return self._fp

    def __eq__(self, other):
        if not isinstance(other, OperatorSpec):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.Q, other.Q)
            and np.array_equal(self.B, other.B)
        )

    def to_document(self) -> str:
        """Serialize to a JSON document with row-major matrix entries."""
        return json.dumps(
            {
                "dim": self.dim,
                "Q": self.Q.ravel().tolist(),
                "B": self.B.ravel().tolist(),
                "name": self.name,
            },
            indent=2,
        )

    @classmethod
    def from_document(cls, text: str) -> "OperatorSpec":
        doc = json.loads(text)
        dim = int(doc["dim"])
        Q = np.array(doc["Q"], dtype=float).reshape(dim, dim)
        B = np.array(doc["B"], dtype=float).reshape(dim, dim)
        return cls(dim=dim, Q=Q, B=B, name=doc.get("name"))


@dataclass(frozen=True)
class SpectralClassification:
    trace_B: float
    max_re_lambda: float
    eigenvalues: tuple
    drift_regime: DriftRegime
    stability_regime: StabilityRegime


@dataclass(frozen=True)
class HypoellipticityReport:
    passed: bool
    min_eigenvalues: dict  # t -> min/max eigenvalue ratio of K(t), scale-free
    algebraic_rank: int
    dim: int

    @property
    def failing_t(self):
        bad = [t for t, e in self.min_eigenvalues.items() if e <= _EIG_RATIO_FLOOR]
        return min(bad) if bad else None


def _diffusion_root(Q: np.ndarray) -> np.ndarray:
    # symmetric PSD root with tiny negative eigenvalues clipped
    evals, vecs = np.linalg.eigh(Q)
    evals = np.clip(evals, 0.0, None)
    return (vecs * np.sqrt(evals)) @ vecs.T


def check_hypoellipticity(spec: OperatorSpec, t_samples=_DEFAULT_T_SAMPLES) -> HypoellipticityReport:
    """Numeric positivity of K(t) at sample times plus the algebraic rank test.

    Positivity is judged by the min/max eigenvalue ratio, and only at times
    where K(t) stays within float cancellation reach (entries grow like
    e^{2t max Re lambda(B)}, so large t is noise for unstable drifts; there
    the exact rank condition is the arbiter).  Returns a report instead of
    raising so callers can inspect failures.
    """
    from .covariance import running_covariance_blockexp

    N = spec.dim
    abscissa = float(np.max(np.abs(np.linalg.eigvals(spec.B).real))) if N else 0.0
    t_reliable = 12.0 / abscissa if abscissa > 1e-12 else float("inf")
    mins = {}
    ok = True
    for t in t_samples:
        if t > t_reliable and t > min(t_samples):
            continue
        tK, _ = running_covariance_blockexp(spec.Q, spec.B, float(t))
        eig = np.linalg.eigvalsh(tK / t)
        ratio = float(eig[0] / max(eig[-1], np.finfo(float).tiny))
        mins[float(t)] = ratio
        if ratio <= _EIG_RATIO_FLOOR:
            ok = False
    root = _diffusion_root(spec.Q)
    blocks = [root]
    for _ in range(N - 1):
        blocks.append(spec.B @ blocks[-1])
    rank = int(np.linalg.matrix_rank(np.hstack(blocks)))
    return HypoellipticityReport(
        passed=ok and rank == N,
        min_eigenvalues=mins,
        algebraic_rank=rank,
        dim=N,
    )


def classify_spectrum(spec: OperatorSpec, tol: float = 1e-10) -> SpectralClassification:
    """Drift-trace and spectral-abscissa regimes of B, with zero snapped at tol."""
    trace = float(np.trace(spec.B))
    evals = np.linalg.eigvals(spec.B)
    max_re = float(np.max(evals.real)) if spec.dim > 0 else 0.0
    if abs(trace) <= tol:
        drift = DriftRegime.TRACE_ZERO
    elif trace > tol:
        drift = DriftRegime.TRACE_POSITIVE
    else:
        drift = DriftRegime.TRACE_NEGATIVE
    if max_re < -tol:
        stability = StabilityRegime.MAX_RE_NEGATIVE
    else:
        stability = StabilityRegime.MAX_RE_NONNEGATIVE
    # internal consistency: trace = sum of real parts, and a positive trace
    # forces the largest real part above both floors below
    norm_B = float(np.linalg.norm(spec.B, 2)) if spec.dim else 0.0
    assert abs(trace - float(np.sum(evals.real))) <= 1e-8 * max(1.0, abs(trace))
    if drift is DriftRegime.TRACE_POSITIVE:
        assert max_re > -spec.dim * norm_B - 1e-8
        assert trace <= spec.dim * max_re + 1e-8
    return SpectralClassification(
        trace_B=trace,
        max_re_lambda=max_re,
        eigenvalues=tuple(complex(z) for z in evals),
        drift_regime=drift,
        stability_regime=stability,
    )


def build_operator(Q, B, name: str | None = None, *, check: bool = True) -> OperatorSpec:
    """Validated constructor: symmetrizes Q, requires PSD Q and hypoellipticity.

    check=False skips validation (deliberately degenerate test inputs only).
    """
    Q = np.array(Q, dtype=float)
    B = np.array(B, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"Q must be square, got shape {Q.shape}")
    if B.shape != Q.shape:
        raise ValueError(f"B shape {B.shape} does not match Q shape {Q.shape}")
    N = Q.shape[0]
    asym = float(np.max(np.abs(Q - Q.T))) if N else 0.0
    if asym > 1e-12 * max(1.0, float(np.max(np.abs(Q)))):
        raise ValueError(f"Q is not symmetric: max |Q - Q^T| = {asym:.3e}")
    Q = 0.5 * (Q + Q.T)
    spec = OperatorSpec(dim=N, Q=Q, B=B, name=name)
    if check:
        eig_min = float(np.linalg.eigvalsh(Q)[0])
        if eig_min < -1e-8:
            raise ValueError(f"Q has negative eigenvalue {eig_min:.3e}")
        report = check_hypoellipticity(spec)
        if not report.passed:
            t_bad = report.failing_t
            if t_bad is not None:
                raise ValueError(
                    "running covariance degenerates: min/max eigenvalue ratio "
                    f"{report.min_eigenvalues[t_bad]:.3e} at t={t_bad}"
                )
            raise ValueError(
                f"rank condition fails: algebraic rank {report.algebraic_rank} < {N}"
            )
    return spec


def _identity_block(n):
    return np.eye(n)


def catalog(name: str, size_param: int = 1) -> OperatorSpec:
    """Named model operators.

    heat:                 Q = I_N, B = 0            (N = size_param)
    ornstein_uhlenbeck:   Q = I_N, B = -I_N         (N = size_param)
    kolmogorov:           N = 2n, Q = diag(I_n, 0), B = [[0,0],[I_n,0]]
    kolmogorov_friction:  N = 2n, Q = diag(I_n, 0), B = [[I_n,0],[I_n,0]]
    """
    n = int(size_param)
    if n < 1:
        raise ValueError("size_param must be >= 1")
    if name == "heat":
        return build_operator(np.eye(n), np.zeros((n, n)), name="heat")
    if name == "ornstein_uhlenbeck":
        return build_operator(np.eye(n), -np.eye(n), name="ornstein_uhlenbeck")
    if name in ("kolmogorov", "kolmogorov_friction"):
        N = 2 * n
        Q = np.zeros((N, N))
        Q[:n, :n] = np.eye(n)
        B = np.zeros((N, N))
        B[n:, :n] = np.eye(n)
        if name == "kolmogorov_friction":
            B[:n, :n] = np.eye(n)
        return build_operator(Q, B, name=name)
    raise ValueError(f"unknown catalog name {name!r}")


CATALOG_NAMES = ("heat", "ornstein_uhlenbeck", "kolmogorov", "kolmogorov_friction")
