"""Shared quadrature helpers: cached Gauss rules, tensor grids, panel schemes.

The panel integrators below work in the variable u = log t.  Integrands of the
form t^a * (slowly varying) become exponentials in u, which composite
Gauss-Legendre panels of capped width integrate to near machine precision.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss

__all__ = [
    "gauss_legendre",
    "gauss_hermite",
    "gl_segment",
    "composite_axis",
    "tensor_grid",
    "PanelIntegral",
    "integrate_log_left",
    "integrate_log_right",
    "power_exp_tail",
]


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1], cached and read-only."""
    x, w = leggauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Physicists' Gauss-Hermite rule for weight exp(-x^2), cached."""
    x, w = hermgauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_segment(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule mapped to [a, b]."""
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def composite_axis(breaks: Sequence[float], counts: Sequence[int]):
    """Concatenated per-segment Gauss-Legendre rules along one axis.

    breaks has len(counts)+1 strictly increasing entries; segment i gets
    counts[i] nodes.  Returns (nodes, weights).
    """
    if len(breaks) != len(counts) + 1:
        raise ValueError("breaks must have one more entry than counts")
    xs, ws = [], []
    for i, n in enumerate(counts):
        a, b = breaks[i], breaks[i + 1]
        if not b > a:
            raise ValueError(f"breaks not increasing at segment {i}")
        x, w = gl_segment(a, b, n)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def tensor_grid(axes: Sequence[tuple[np.ndarray, np.ndarray]]):
    """Tensor product of 1-D rules -> (points (M, N), weights (M,))."""
    nodes = [ax[0] for ax in axes]
    weights = [ax[1] for ax in axes]
    mesh = np.meshgrid(*nodes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    w = weights[0]
    for wi in weights[1:]:
        w = np.multiply.outer(w, wi)
    return pts, w.ravel()


@dataclass
class PanelIntegral:
    value: float
    n_panels: int
    n_nodes: int
    last_panel: float
    converged: bool


def _run_panels(
    g: Callable[[np.ndarray], np.ndarray],
    u_start: float,
    direction: float,
    rel_tol: float,
    nodes_per_panel: int,
    first_width: float,
    growth: float,
    width_cap: float,
    max_panels: int,
    quiet_needed: int,
    abs_floor: float,
    stop_bound: Callable[[float], float] | None,
) -> PanelIntegral:
    acc = 0.0
    edge = u_start
    width = first_width
    quiet = 0
    panel_val = 0.0
    n_nodes = 0
    for k in range(max_panels):
        w_k = min(width, width_cap)
        lo = edge - w_k if direction < 0 else edge
        hi = edge if direction < 0 else edge + w_k
        x, wt = gl_segment(lo, hi, nodes_per_panel)
        panel_val = float(wt @ np.asarray(g(x), dtype=float))
        acc += panel_val
        n_nodes += nodes_per_panel
        edge = lo if direction < 0 else hi
        scale = max(abs(acc), abs_floor)
        small = abs(panel_val) <= rel_tol * scale
        if stop_bound is not None and small:
            # certified stop: remaining-mass bound below tolerance too
            small = stop_bound(edge) <= rel_tol * scale
        quiet = quiet + 1 if small else 0
        if quiet >= quiet_needed:
            return PanelIntegral(acc, k + 1, n_nodes, panel_val, True)
        width *= growth
    return PanelIntegral(acc, max_panels, n_nodes, panel_val, False)


def integrate_log_left(
    g: Callable[[np.ndarray], np.ndarray],
    u_top: float,
    *,
    rate_hint: float,
    rel_tol: float = 1e-11,
    nodes_per_panel: int = 12,
    first_width: float = 0.75,
    growth: float = 1.4,
    max_panels: int = 240,
    quiet_needed: int = 2,
    abs_floor: float = 0.0,
) -> PanelIntegral:
    """Integral of g over (-inf, u_top] for g decaying like exp(rate_hint*u)."""
    cap = max(1.0, 7.0 / max(rate_hint, 1e-3))
    return _run_panels(
        g, u_top, -1.0, rel_tol, nodes_per_panel, first_width, growth, cap,
        max_panels, quiet_needed, abs_floor, None,
    )


def integrate_log_right(
    g: Callable[[np.ndarray], np.ndarray],
    u_bottom: float,
    *,
    rate_hint: float,
    rel_tol: float = 1e-11,
    nodes_per_panel: int = 12,
    first_width: float = 0.75,
    growth: float = 1.4,
    max_panels: int = 240,
    quiet_needed: int = 2,
    abs_floor: float = 0.0,
    stop_bound: Callable[[float], float] | None = None,
) -> PanelIntegral:
    """Integral of g over [u_bottom, +inf) for g eventually decaying like
    exp(-rate_hint*u); stop_bound(u), if given, must bound the remaining mass."""
    cap = max(1.0, 7.0 / max(rate_hint, 1e-3))
    return _run_panels(
        g, u_bottom, +1.0, rel_tol, nodes_per_panel, first_width, growth, cap,
        max_panels, quiet_needed, abs_floor, stop_bound,
    )


def power_exp_tail(a: float, tau: float, T: float) -> float:
    """int_T^inf t^(-1-a) exp(-tau t) dt for a > 0, tau >= 0, T > 0."""
    if a <= 0 or T <= 0 or tau < 0:
        raise ValueError("need a > 0, T > 0, tau >= 0")
    if tau < 1e-12:
        return T ** (-a) / a
    # substitute t = T e^v; integrand decays at least like exp(-tau T e^v)
    def g(vs):
        return np.exp(-a * vs - tau * T * np.exp(vs))
    res = integrate_log_right(g, 0.0, rate_hint=a + tau * T, rel_tol=1e-13)
    return T ** (-a) * res.value
