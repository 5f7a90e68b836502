"""Test functions with known norms, support boxes, and vectorized evaluation.

A TestFunction evaluates on arrays of shape (..., N) and returns shape (...).
support_box is a (2, N) array [lower; upper] outside which |f| <= support_epsilon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quadrature import gl_segment, tensor_grid

__all__ = ["TestFunction", "gaussian_bump", "indicator_interval", "indicator_box",
           "coordinate", "constant", "scale", "add"]


@dataclass
class TestFunction:
    evaluate: Callable[[np.ndarray], np.ndarray]
    dim: int
    label: str
    support_box: np.ndarray | None = None   # (2, N): [lower; upper]
    support_epsilon: float = 0.0
    nonneg: bool = False
    kind: str = "smooth"                    # smooth | indicator | unbounded
    exact_lp: Callable[[float], float] | None = None
    # draws n points with density f/||f||_1 (only meaningful for nonneg f)
    sample: Callable[[np.random.Generator, int], np.ndarray] | None = None
    _lp_cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim:
            raise ValueError(f"points have dim {X.shape[-1]}, expected {self.dim}")
        return self.evaluate(X)

    def lp_norm(self, p: float) -> float:
        """||f||_p, exact when available, else cached adaptive quadrature."""
        p = float(p)
        if p <= 0:
            raise ValueError("p must be positive")
        if self.exact_lp is not None:
            return self.exact_lp(p)
        got = self._lp_cache.get(p)
        if got is None:
            got = self._quad_lp(p)
            self._lp_cache[p] = got
        return got

    def lp_norm_p(self, p: float) -> float:
        """||f||_p^p."""
        return self.lp_norm(p) ** p

    def _quad_lp(self, p: float) -> float:
        if self.support_box is None:
            raise ValueError(f"{self.label}: no support box, cannot quadrature the norm")
        lo, hi = self.support_box
        prev = None
        for n in (64, 128, 256):
            n_axis = n if self.dim == 1 else max(32, n // 2) if self.dim == 2 else 24
            axes = [gl_segment(lo[i], hi[i], n_axis) for i in range(self.dim)]
            pts, w = tensor_grid(axes)
            vals = np.abs(self(pts)) ** p
            cur = float(w @ vals)
            if prev is not None and abs(cur - prev) <= 1e-10 * max(prev, 1e-300):
                break
            prev = cur
        return cur ** (1.0 / p)


def gaussian_bump(dim: int, center=None, width: float = 1.0, label: str | None = None) -> TestFunction:
    """f(X) = exp(-|X - c|^2 / (2 w^2)); ||f||_p^p = (2 pi w^2 / p)^{N/2}."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    w = float(width)
    if w <= 0:
        raise ValueError("width must be positive")
    # |f| <= eps outside radius w*sqrt(2 ln(1/eps)); 8.6 w gives eps ~ 8.6e-17
    reach = 8.6 * w
    box = np.stack([c - reach, c + reach])

    def ev(X):
        d = X - c
        return np.exp(-0.5 * np.einsum("...i,...i->...", d, d) / (w * w))

    def exact(p):
        return (2.0 * math.pi * w * w / p) ** (dim / (2.0 * p))

    def draw(rng, n):
        return c + w * rng.standard_normal((n, dim))

    return TestFunction(
        evaluate=ev, dim=dim, label=label or f"gaussian(w={w:g})",
        support_box=box, support_epsilon=math.exp(-0.5 * (reach / w) ** 2),
        nonneg=True, kind="smooth", exact_lp=exact, sample=draw,
    )


def indicator_interval(a: float, b: float, label: str | None = None) -> TestFunction:
    return indicator_box([a], [b], label=label or f"indicator[{a:g},{b:g}]")


def indicator_box(lower, upper, label: str | None = None) -> TestFunction:
    """Indicator of the axis box [lower, upper]; ||f||_p^p = volume."""
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise ValueError("lower and upper must be 1-D of equal length")
    if not np.all(hi > lo):
        raise ValueError("upper must exceed lower componentwise")
    dim = lo.size
    vol = float(np.prod(hi - lo))

    def ev(X):
        inside = np.all((X >= lo) & (X <= hi), axis=-1)
        return inside.astype(float)

    def draw(rng, n):
        return rng.uniform(lo, hi, size=(n, dim))

    return TestFunction(
        evaluate=ev, dim=dim,
        label=label or "indicator_box",
        support_box=np.stack([lo, hi]), support_epsilon=0.0,
        nonneg=True, kind="indicator",
        exact_lp=lambda p: vol ** (1.0 / p), sample=draw,
    )


def coordinate(dim: int, index: int) -> TestFunction:
    """f(X) = X_index; unbounded, no L^p norm."""
    if not 0 <= index < dim:
        raise ValueError("index out of range")
    return TestFunction(
        evaluate=lambda X: np.asarray(X, dtype=float)[..., index],
        dim=dim, label=f"x[{index}]", kind="unbounded",
    )


def constant(dim: int, value: float = 1.0) -> TestFunction:
    return TestFunction(
        evaluate=lambda X: np.full(np.asarray(X).shape[:-1], float(value)),
        dim=dim, label=f"const({value:g})", kind="unbounded",
        nonneg=value >= 0,
    )


def scale(f: TestFunction, c: float) -> TestFunction:
    """c * f, with support and exact norms carried along."""
    c = float(c)
    exact = None
    if f.exact_lp is not None:
        exact = lambda p: abs(c) * f.exact_lp(p)
    return TestFunction(
        evaluate=lambda X: c * f.evaluate(X),
        dim=f.dim, label=f"{c:g}*{f.label}",
        support_box=f.support_box, support_epsilon=abs(c) * f.support_epsilon,
        nonneg=f.nonneg and c >= 0,
        kind="scaled_indicator" if f.kind == "indicator" and c != 1.0 else f.kind,
        exact_lp=exact, sample=f.sample if c > 0 else None,
    )


def add(f: TestFunction, g: TestFunction) -> TestFunction:
    """f + g with the union support box; norms fall back to quadrature."""
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    box = None
    if f.support_box is not None and g.support_box is not None:
        box = np.stack([
            np.minimum(f.support_box[0], g.support_box[0]),
            np.maximum(f.support_box[1], g.support_box[1]),
        ])
    return TestFunction(
        evaluate=lambda X: f.evaluate(X) + g.evaluate(X),
        dim=f.dim, label=f"({f.label}+{g.label})",
        support_box=box,
        support_epsilon=f.support_epsilon + g.support_epsilon,
        nonneg=f.nonneg and g.nonneg,
        kind="smooth" if "indicator" not in (f.kind, g.kind) else "mixed",
    )
