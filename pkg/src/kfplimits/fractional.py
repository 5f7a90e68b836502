"""Fractional powers of the generator by time subordination of the semigroup.

The power of order s in (0, 1) acts on a function f at a point X as

    -s / Gamma(1-s) * int_0^inf t^{-1-s} (P_t f(X) - f(X)) dt.

The time integral is split at t_split.  Both halves run in u = log t on
adaptive Gauss-Legendre panels: the near half descends until the integrand
goes quiet (the difference f - P_t f is O(t) for smooth f), the far half
climbs until the semigroup has forgotten f, with a regime-dependent bound on
the truncated tail folded into the reported residual.

Batched evaluation over a grid of points shares the time panels, which is
what the L^p norm estimators and the resolvent series build on.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .covariance import (
    covariance as kernel_state,
    max_reliable_time,
    running_covariance_blockexp,
)
from .functions import TestFunction
from .operators import DriftRegime, OperatorSpec, StabilityRegime, classify_spectrum
from .quadrature import gl_segment, power_exp_tail, tensor_grid, composite_axis
from .semigroup import (
    SemigroupQuadrature,
    apply_semigroup,
    invariant_mean,
    rng_for,
)

__all__ = [
    "FractionalConfig",
    "FractionalField",
    "PointwiseSweep",
    "NormEstimate",
    "ResolventSeries",
    "fractional_power",
    "fractional_field",
    "balakrishnan_weight_check",
    "pointwise_limit_sweep",
    "fractional_l1_norm",
    "fractional_l1_pair",
    "lp_limit_error",
    "resolvent_apply",
    "balakrishnan_condition",
    "affine_extrapolate",
    "write_sweep_csv",
]

# below t ~ e^-37 the subtraction f - P_t f is float noise; the true
# integrand there is bounded by e^{(1-s) u}, negligible for the s in use
_NEAR_FLOOR = -40.0


@dataclass(frozen=True)
class FractionalConfig:
    """Settings for the subordination integral."""

    s: float = 0.5
    t_split: float = 1.0
    near_nodes: int = 12
    far_nodes: int = 12
    T_max: float | None = None       # None: adaptive with certified tail bound
    rel_tol: float = 1e-11
    x_core_nodes: int = 0            # 0 = auto; grid resolution on the support box
    x_pad_nodes: int = 0
    margin: float = 0.0              # 0 = auto padding around the support box
    semigroup_quad: SemigroupQuadrature | None = None

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"order s must lie in (0, 1), got {self.s}")
        if not self.t_split > 0.0:
            raise ValueError("t_split must be positive")
        if self.T_max is not None and not self.T_max > self.t_split:
            raise ValueError("T_max must exceed t_split")
        if self.near_nodes < 4 or self.far_nodes < 4:
            raise ValueError("need at least 4 nodes per panel")

    def with_s(self, s: float) -> "FractionalConfig":
        return replace(self, s=float(s))


@dataclass(frozen=True)
class _Walk:
    value: np.ndarray
    n_panels: int
    edge: float
    converged: bool
    last_mag: float


def _panel_walk(h, u_start: float, direction: float, *, rate_hint: float,
                rel_tol: float, nodes: int, abs_floor: float,
                max_panels: int = 200, u_limit: float | None = None,
                stop_bound=None) -> _Walk:
    """Adaptive log-panel sweep of a vector integrand h(us) -> (len(us), M)."""
    cap = max(1.0, 7.0 / max(rate_hint, 1e-3))
    width = 0.75
    edge = u_start
    acc = None
    quiet = 0
    growing = 0
    prev_mag = math.inf
    mag = 0.0
    for k in range(max_panels):
        w = min(width, cap)
        if u_limit is not None:
            room = (u_limit - edge) if direction > 0 else (edge - u_limit)
            if room <= 1e-12:
                return _Walk(acc if acc is not None else np.zeros(1),
                             k, edge, False, mag)
            w = min(w, room)
        lo, hi = (edge - w, edge) if direction < 0 else (edge, edge + w)
        x, wt = gl_segment(lo, hi, nodes)
        vals = np.asarray(h(x), dtype=float)
        panel = wt @ vals
        acc = panel.copy() if acc is None else acc + panel
        edge = lo if direction < 0 else hi
        mag = float(np.max(np.abs(panel)))
        scale = max(float(np.max(np.abs(acc))), abs_floor)
        small = mag <= rel_tol * scale
        if stop_bound is not None and small:
            small = stop_bound(edge) <= rel_tol * scale
        quiet = quiet + 1 if small else 0
        if quiet >= 2:
            return _Walk(acc, k + 1, edge, True, mag)
        growing = growing + 1 if (mag > 2.0 * prev_mag and mag > scale) else 0
        if growing >= 4:
            raise ValueError(
                "time integrand keeps growing panel after panel; the function "
                "is outside the admissible domain for this drift"
            )
        prev_mag = mag
        width *= 1.4
    return _Walk(acc, max_panels, edge, False, mag)


@dataclass(frozen=True)
class FractionalField:
    """Fractional power evaluated on a batch of points with shared time panels."""

    X: np.ndarray
    values: np.ndarray          # the fractional power at each point
    near_term: np.ndarray       # prefactor * near-time integral (vanishes as s->0)
    far_raw: np.ndarray         # int_{t_split}^T t^{-1-s} (P_t f - mu) dt
    mu_inf: np.ndarray          # long-time limit of P_t f used by the far half
    s: float
    t_split: float
    residual: float             # truncation allowance, same units as values
    diagnostics: dict = field(repr=False, default_factory=dict)


def _resolve_mu(spec, f, Xb, cls, t_probe, quad):
    """Long-time limit of P_t f per point: equilibrium mean, zero, or a probe."""
    if cls.stability_regime is StabilityRegime.MAX_RE_NEGATIVE:
        return np.full(Xb.shape[0], invariant_mean(spec, f, quad)), "equilibrium"
    if f.support_box is not None:
        return np.zeros(Xb.shape[0]), "decay"
    probe = np.asarray(apply_semigroup(spec, f, Xb, t_probe, quad), dtype=float)
    return np.atleast_1d(probe), "probe"


def fractional_field(spec: OperatorSpec, f: TestFunction, X,
                     cfg: FractionalConfig) -> FractionalField:
    """Fractional power of order cfg.s applied to f on a batch of points."""
    Xb = np.atleast_2d(np.asarray(X, dtype=float))
    if Xb.shape[-1] != spec.dim:
        raise ValueError(f"points have dim {Xb.shape[-1]}, expected {spec.dim}")
    s, ts = cfg.s, cfg.t_split
    quad = cfg.semigroup_quad
    cls = classify_spectrum(spec)
    fX = np.atleast_1d(np.asarray(f(Xb), dtype=float))

    t_req = cfg.T_max if cfg.T_max is not None else 1e9
    t_hard = min(max_reliable_time(spec, t_req), t_req)
    if t_hard <= ts:
        raise ValueError(
            f"t_split={ts:g} exceeds the reliable time horizon {t_hard:.3g} "
            f"for this operator; lower t_split"
        )
    mu, mu_source = _resolve_mu(spec, f, Xb, cls, min(2.0 * ts, t_hard), quad)
    floor = 1e-3 * (float(np.max(np.abs(fX))) + float(np.max(np.abs(mu))) + 1e-9)

    def h_near(us):
        out = np.zeros((us.size, Xb.shape[0]))
        for i, u in enumerate(us):
            try:
                P = apply_semigroup(spec, f, Xb, math.exp(u), quad)
            except FloatingPointError:
                continue    # kernel collapsed to a point mass; difference ~ 0
            out[i] = math.exp(-s * u) * (fX - np.atleast_1d(P))
        return out

    # Direct evaluation of f - P_t f loses all digits to cancellation once the
    # true difference falls under ~1e-16 |f|, so the walk must not descend past
    # a clean seam.  For t-analytic functions the quotient (P_t f - f)/t is
    # fitted by a cubic at clean nodes and the [0, t0] spike integrated in
    # closed form; indicators keep the deep walk (their small-t layer is not a
    # power series in t).
    analytic_tail = "indicator" not in f.kind
    if analytic_tail:
        t0 = min(1e-3, ts / 8.0)
        u_floor = math.log(t0)
    else:
        t0 = 0.0
        u_floor = min(_NEAR_FLOOR, math.log(ts) - 5.0)

    near = _panel_walk(
        h_near, math.log(ts), -1.0, rate_hint=max(1.0 - s, 0.05),
        rel_tol=cfg.rel_tol, nodes=cfg.near_nodes, abs_floor=floor,
        u_limit=u_floor,
    )

    near_value = near.value
    res_series = 0.0
    if analytic_tail:
        taus = np.array([1.0, 0.5, 0.25, 0.125])
        dmat = np.zeros((4, Xb.shape[0]))
        for j, tau in enumerate(taus):
            tj = t0 * tau
            try:
                Pj = np.atleast_1d(apply_semigroup(spec, f, Xb, tj, quad))
                dmat[j] = (Pj - fX) / tj
            except FloatingPointError:
                pass    # kernel collapsed to a point mass; difference ~ 0
        V = np.vander(taus, 4, increasing=True)
        coef = np.linalg.solve(V, dmat)
        moments = t0 ** (1.0 - s) / (np.arange(4) + 1.0 - s)
        # int_0^{t0} t^{-1-s} (fX - P_t f) dt with P_t f - fX = t * sum b_k (t/t0)^k.
        # If the walk went quiet above the seam, both this tail and the skipped
        # gap are already under rel_tol * scale, so adding it stays in budget.
        near_value = near.value - moments @ coef
        res_series = float(np.max(np.abs(coef[3]))) * t0 ** (1.0 - s) / (5.0 - s)

    def h_far(us):
        out = np.zeros((us.size, Xb.shape[0]))
        for i, u in enumerate(us):
            P = apply_semigroup(spec, f, Xb, math.exp(u), quad)
            out[i] = math.exp(-s * u) * (np.atleast_1d(P) - mu)
        return out

    stop_bound = None
    fn1 = None
    if cls.stability_regime is StabilityRegime.MAX_RE_NONNEGATIVE and f.support_box is not None:
        fn1 = f.lp_norm(1.0)

        def stop_bound(u):
            # |P_t f| <= ||f||_1 sup p(.,.,t); det(tK) is nondecreasing, so the
            # sup at the edge bounds the whole remaining tail
            try:
                state = kernel_state(spec, math.exp(u))
            except (FloatingPointError, OverflowError):
                return math.inf
            supker = (4.0 * math.pi) ** (-spec.dim / 2.0) * math.exp(-0.5 * state.log_det_tK)
            return fn1 * supker * math.exp(-s * u) / s

    far = _panel_walk(
        h_far, math.log(ts), +1.0, rate_hint=s + 0.5,
        rel_tol=cfg.rel_tol, nodes=cfg.far_nodes, abs_floor=floor,
        u_limit=math.log(t_hard), stop_bound=stop_bound,
    )

    if analytic_tail:
        res_near = res_series
    else:
        res_near = 0.0 if near.converged else near.last_mag / max(1.0 - s, 0.05)
    res_far = 0.0
    if not far.converged:
        T = math.exp(far.edge)
        if cls.stability_regime is StabilityRegime.MAX_RE_NEGATIVE:
            alpha = 0.5 * abs(cls.max_re_lambda)
            maxdiff = far.last_mag * math.exp(s * far.edge)
            res_far = maxdiff * T ** (-1.0 - s) / alpha
        elif fn1 is not None:
            res_far = stop_bound(far.edge)
        else:
            res_far = far.last_mag * math.exp(s * far.edge) * T ** (-s) / s

    pref = s / math.gamma(1.0 - s)
    near_term = pref * near_value
    values = near_term + pref * ((fX - mu) * ts ** (-s) / s - far.value)
    return FractionalField(
        X=Xb, values=values, near_term=near_term, far_raw=far.value,
        mu_inf=mu, s=s, t_split=ts,
        residual=pref * (res_near + res_far),
        diagnostics={
            "near_panels": near.n_panels, "far_panels": far.n_panels,
            "near_converged": near.converged, "far_converged": far.converged,
            "t_cap": math.exp(far.edge), "mu_source": mu_source,
            "residual_near": pref * res_near, "residual_far": pref * res_far,
        },
    )


def fractional_power(spec: OperatorSpec, f: TestFunction, X,
                     cfg: FractionalConfig | None = None) -> float:
    """Fractional power of order cfg.s applied to f, evaluated at one point."""
    cfg = cfg or FractionalConfig()
    out = fractional_field(spec, f, np.atleast_2d(np.asarray(X, dtype=float)), cfg)
    return float(out.values[0])


def balakrishnan_weight_check(s: float, rel_tol: float = 1e-13) -> float:
    """Self-calibration of the time panels on the witness pair (1, e^{-t}).

    Runs the production panel scheme on s/Gamma(1-s) int t^{-1-s}(1 - e^{-t}) dt,
    whose exact value is 1 for every s in (0, 1).  Below the float resolution
    of 1 - e^{-t} the remaining mass is added from its power series.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"order s must lie in (0, 1), got {s}")

    def h_near(us):
        t = np.exp(us)
        return (np.exp(-s * us) * (-np.expm1(-t)))[:, None]

    near = _panel_walk(
        h_near, 0.0, -1.0, rate_hint=max(1.0 - s, 1e-3), rel_tol=rel_tol,
        nodes=14, abs_floor=1e-3, max_panels=400, u_limit=_NEAR_FLOOR,
    )
    # series tail of int_0^eps t^{-1-s} (1 - e^{-t}) dt below the walk's edge
    eps = math.exp(near.edge)
    tail = 0.0
    term_sign = 1.0
    fact = 1.0
    for k in range(1, 7):
        fact *= k
        tail += term_sign * eps ** (k - s) / (fact * (k - s))
        term_sign = -term_sign

    def h_far(us):
        t = np.exp(us)
        return (np.exp(-s * us - t))[:, None]

    far = _panel_walk(
        h_far, 0.0, +1.0, rate_hint=s + 1.0, rel_tol=rel_tol,
        nodes=14, abs_floor=1e-3, max_panels=400,
    )
    total = float(near.value[0]) + tail + 1.0 / s - float(far.value[0])
    return s / math.gamma(1.0 - s) * total


def affine_extrapolate(xs, ys) -> float:
    """Least-squares affine fit value at x = 0."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size == 0:
        raise ValueError("need matching nonempty series")
    if xs.size == 1:
        return float(ys[0])
    A = np.stack([np.ones_like(xs), xs], axis=1)
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    return float(coef[0])


@dataclass(frozen=True)
class PointwiseSweep:
    s_values: tuple
    values: tuple
    residuals: tuple
    extrapolated: float
    predicted_limit: float
    regime: str


def pointwise_limit_sweep(spec: OperatorSpec, f: TestFunction, X,
                          s_values, cfg: FractionalConfig | None = None) -> PointwiseSweep:
    """Sweep of the fractional power at X over decreasing orders s.

    The extrapolated value tends to f(X) when no spectral decay is available,
    and to f(X) minus the equilibrium mean of f under stable drift.
    """
    s_values = [float(s) for s in s_values]
    if any(not 0.0 < s < 1.0 for s in s_values):
        raise ValueError("orders must lie in (0, 1)")
    if any(b >= a for a, b in zip(s_values, s_values[1:], strict=False)):
        raise ValueError("orders must be strictly decreasing")
    cfg = cfg or FractionalConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    vals, resids = [], []
    for s in s_values:
        out = fractional_field(spec, f, X, cfg.with_s(s))
        vals.append(float(out.values[0]))
        resids.append(out.residual)
    cls = classify_spectrum(spec)
    fX = float(np.atleast_1d(f(X))[0])
    if cls.stability_regime is StabilityRegime.MAX_RE_NEGATIVE:
        predicted = fX - invariant_mean(spec, f, cfg.semigroup_quad)
    else:
        predicted = fX
    return PointwiseSweep(
        s_values=tuple(s_values), values=tuple(vals), residuals=tuple(resids),
        extrapolated=affine_extrapolate(s_values, vals),
        predicted_limit=predicted, regime=cls.stability_regime.value,
    )


# ------------------------------------------------------------ norm estimates


@dataclass(frozen=True)
class NormEstimate:
    value: float
    box_part: float
    exterior_part: float
    error: float
    diagnostics: dict = field(repr=False, default_factory=dict)


def _field_grid(spec: OperatorSpec, f: TestFunction, cfg: FractionalConfig):
    """Composite Gauss grid over the padded support box, refined on the core."""
    if f.support_box is None:
        raise ValueError(f"{f.label}: norm estimates need a support box")
    lo, hi = f.support_box
    state = kernel_state(spec, cfg.t_split)
    sig = np.sqrt(np.diag(2.0 * state.tK_t))
    radius = float(np.max(np.abs(np.stack([lo, hi])))) + 1.0
    shift = float(np.linalg.norm(state.exp_tB - np.eye(spec.dim), 2)) * radius
    if cfg.margin > 0.0:
        m = np.full(spec.dim, cfg.margin)
    else:
        m = 8.0 * sig + shift + 1.0
    core = cfg.x_core_nodes or (40 if spec.dim == 1 else 24 if spec.dim == 2 else 10)
    pad = cfg.x_pad_nodes or (16 if spec.dim <= 2 else 6)
    axes = [
        composite_axis([lo[i] - m[i], lo[i], hi[i], hi[i] + m[i]], [pad, core, pad])
        for i in range(spec.dim)
    ]
    pts, wts = tensor_grid(axes)
    in_core = np.all((pts >= lo) & (pts <= hi), axis=-1)
    return pts, wts, in_core


def _check_nonneg(f: TestFunction) -> None:
    if f.support_box is None:
        raise ValueError(f"{f.label}: need a support box")
    lo, hi = f.support_box
    rng = rng_for(20_260_819)
    probe = rng.uniform(lo, hi, size=(256, f.dim))
    if not bool(np.all(np.asarray(f(probe)) >= -1e-12)):
        raise ValueError(f"{f.label}: sampled values are negative; need f >= 0")


def fractional_l1_pair(spec: OperatorSpec, f: TestFunction, s: float,
                       cfg: FractionalConfig | None = None
                       ) -> tuple[NormEstimate, NormEstimate]:
    """L1 norms of the fractional power and of its difference from f.

    One shared field evaluation on the padded grid covers both.  Outside the
    grid f vanishes and the fractional power is a pure negative tail, so its
    exterior mass follows in closed form from the mass identity
    int P_t f dX = e^{-t tr B} ||f||_1 combined with the grid integral of the
    already-computed far-time tail; nothing escapes the 8-sigma pad at near
    times beyond a normal-tail allowance.
    """
    cfg = (cfg or FractionalConfig()).with_s(s)
    _check_nonneg(f)
    cls = classify_spectrum(spec)
    if cls.stability_regime is StabilityRegime.MAX_RE_NEGATIVE:
        raise ValueError(
            "exterior mass accounting needs P_t f -> 0; stable drift pushes f "
            "to a nonzero equilibrium, where the L1 limit statements fail"
        )
    trB = max(cls.trace_B, 0.0) if cls.drift_regime is not DriftRegime.TRACE_ZERO else 0.0
    pts, wts, _ = _field_grid(spec, f, cfg)
    out = fractional_field(spec, f, pts, cfg)
    fvals = np.asarray(f(pts), dtype=float)

    fn1 = f.lp_norm(1.0)
    ts = cfg.t_split
    pref = s / math.gamma(1.0 - s)
    E_split = power_exp_tail(s, trB, ts)
    exterior = pref * (fn1 * E_split - float(wts @ out.far_raw))
    exterior = max(exterior, 0.0)

    tail_f = max(fn1 - float(wts @ fvals), 0.0)
    vol = float(np.sum(wts))
    err = (
        out.residual * vol
        + out.diagnostics["residual_far"] * vol
        # mass crossing the 8-sigma pad before t_split: one-sided normal tail
        + pref * 2.0 * spec.dim * 6.3e-16 * fn1 * ts ** (-s) / s
        + pref * tail_f * (E_split + ts ** (-s) / s)
    )
    diag = {"field": out.diagnostics, "tail_f": tail_f, "mass_tail": E_split}

    def build(inside: float) -> NormEstimate:
        return NormEstimate(
            value=inside + exterior, box_part=inside, exterior_part=exterior,
            error=err + 3e-4 * inside, diagnostics=diag,
        )

    plain = build(float(wts @ np.abs(out.values)))
    centered = build(float(wts @ np.abs(out.values - fvals)))
    return plain, centered


def fractional_l1_norm(spec: OperatorSpec, f: TestFunction, s: float,
                       cfg: FractionalConfig | None = None,
                       centered: bool = False) -> NormEstimate:
    """L1 norm of the fractional power (of the centered difference if asked)."""
    plain, cen = fractional_l1_pair(spec, f, s, cfg)
    return cen if centered else plain


def lp_limit_error(spec: OperatorSpec, f: TestFunction, s: float, p: float,
                   cfg: FractionalConfig | None = None) -> NormEstimate:
    """L^p distance between the fractional power of f and f itself."""
    p = float(p)
    if p < 1.0:
        raise ValueError("p must be at least 1")
    cls = classify_spectrum(spec)
    if p == 1.0:
        if cls.drift_regime is DriftRegime.TRACE_ZERO:
            raise ValueError(
                "with trace-free drift the centered fractional power does not "
                "converge in L1: the exterior mass tends to ||f||_1 instead of "
                "0 as s -> 0+. Use p > 1, or a drift with positive trace."
            )
        return fractional_l1_norm(spec, f, s, cfg, centered=True)
    cfg = (cfg or FractionalConfig()).with_s(s)
    pts, wts, in_core = _field_grid(spec, f, cfg)
    out = fractional_field(spec, f, pts, cfg)
    fvals = np.asarray(f(pts), dtype=float)
    diff = np.abs(out.values - fvals)
    val_p = float(wts @ diff ** p)
    value = val_p ** (1.0 / p)
    # exterior allowance: beyond the pad the field is bounded by its pad values
    # and carries at most the closed-form exterior mass
    pad_sup = float(np.max(diff[~in_core])) if np.any(~in_core) else 0.0
    fn1 = f.lp_norm(1.0)
    trB = max(cls.trace_B, 0.0)
    ext_mass = s * fn1 * power_exp_tail(s, trB, cfg.t_split) / math.gamma(1.0 - s)
    ext_p = pad_sup ** (p - 1.0) * ext_mass
    vol = float(np.sum(wts))
    err_p = p * out.residual * float(np.max(diff) + out.residual) ** (p - 1.0) * vol + ext_p
    err = err_p / max(p * value ** (p - 1.0), 1e-300)
    return NormEstimate(
        value=value, box_part=value, exterior_part=0.0, error=err,
        diagnostics={"exterior_allowance": ext_p, "field": out.diagnostics},
    )


# ----------------------------------------------------------------- resolvent


def resolvent_apply(spec: OperatorSpec, f: TestFunction, X, lam: float,
                    cfg: FractionalConfig | None = None):
    """Resolvent applied to f: int_0^inf e^{-lam t} P_t f(X) dt.

    X may be one point or a batch; returns a scalar or a vector accordingly.
    """
    lam = float(lam)
    if lam <= 0.0:
        raise ValueError(f"resolvent parameter must be positive, got {lam}")
    cfg = cfg or FractionalConfig()
    Xb = np.atleast_2d(np.asarray(X, dtype=float))
    single = np.asarray(X).ndim == 1
    quad = cfg.semigroup_quad
    ts = cfg.t_split

    # no time singularity here: plain composite Gauss panels on (0, t_split]
    t_nodes, t_wts = composite_axis(
        [0.0, ts / 8.0, ts / 2.0, ts], [cfg.near_nodes, cfg.near_nodes, cfg.near_nodes]
    )
    acc = np.zeros(Xb.shape[0])
    for t, w in zip(t_nodes, t_wts, strict=True):
        acc += w * math.exp(-lam * t) * np.atleast_1d(apply_semigroup(spec, f, Xb, t, quad))

    t_req = cfg.T_max if cfg.T_max is not None else max(1e9, 200.0 / lam)
    t_hard = min(max_reliable_time(spec, t_req), t_req)
    if t_hard <= ts:
        raise ValueError(
            f"t_split={ts:g} exceeds the reliable time horizon {t_hard:.3g} "
            f"for this operator; lower t_split"
        )
    edge_sup = [0.0]

    def h_far(us):
        out = np.zeros((us.size, Xb.shape[0]))
        for i, u in enumerate(us):
            t = math.exp(u)
            P = np.atleast_1d(apply_semigroup(spec, f, Xb, t, quad))
            out[i] = t * math.exp(-lam * t) * P
            edge_sup[0] = float(np.max(np.abs(P)))
        return out

    far = _panel_walk(
        h_far, math.log(ts), +1.0, rate_hint=1.0 + lam * ts,
        rel_tol=cfg.rel_tol, nodes=cfg.far_nodes,
        abs_floor=1e-3 * (float(np.max(np.abs(acc))) + 1e-9),
        u_limit=math.log(t_hard),
    )
    acc += far.value
    if not far.converged:
        T = math.exp(far.edge)
        acc_err = edge_sup[0] * math.exp(-lam * T) / lam
        if acc_err > 1e-6 * float(np.max(np.abs(acc)) + 1e-300):
            raise FloatingPointError(
                f"resolvent tail beyond t={T:.3g} not negligible at lam={lam:g}"
            )
    return float(acc[0]) if single else acc


@dataclass(frozen=True)
class ResolventSeries:
    lambdas: tuple
    values: tuple
    errors: tuple
    p: float
    mode: str


def _fast_kernel(spec: OperatorSpec, t: float):
    """Shift matrix, covariance factor, log-normalizer without the memo table."""
    tK, exp_tB = running_covariance_blockexp(spec.Q, spec.B, t)
    L = np.linalg.cholesky(2.0 * tK)
    sign, log_det = np.linalg.slogdet(2.0 * tK)
    if sign <= 0:
        raise FloatingPointError(f"kernel covariance not positive definite at t={t}")
    log_norm = 0.5 * (spec.dim * math.log(2.0 * math.pi) + log_det)
    return exp_tB, L, log_norm


def balakrishnan_condition(spec: OperatorSpec, f: TestFunction, p: float,
                           lambda_list, cfg: FractionalConfig | None = None,
                           n_mc: int = 40_000, seed: int = 0) -> ResolventSeries:
    """Series of ||lam R(lam) f||_p over a grid of resolvent parameters.

    p = 1 with f >= 0 runs a sampled chain (t from the exponential tilt, the
    source point from f, the endpoint from an overdispersed proposal around
    the backward image) whose importance weights integrate the kernel over
    its first argument; the series then measures the adjoint mass under the
    exponential time mixture.  p > 1 runs the deterministic grid path.
    """
    lambdas = [float(l) for l in lambda_list]
    if any(l <= 0.0 for l in lambdas):
        raise ValueError("resolvent parameters must be positive")
    p = float(p)
    cfg = cfg or FractionalConfig()
    if p == 1.0:
        if not f.nonneg or f.sample is None:
            raise ValueError("the p = 1 chain needs a nonnegative f with a sampler")
        fn1 = f.lp_norm(1.0)
        over = 1.6
        values, errors = [], []
        for j, lam in enumerate(lambdas):
            rng = rng_for(seed, j)
            t_draws = rng.exponential(1.0 / lam, size=n_mc)
            Y = np.atleast_2d(f.sample(rng, n_mc))
            Z = rng.standard_normal((n_mc, spec.dim))
            # spot-audit the fast kernel path against the checked one
            for tq in np.quantile(t_draws, np.linspace(0.02, 0.98, 9)):
                st = kernel_state(spec, float(tq))
                exp_tB, L, _ = _fast_kernel(spec, float(tq))
                if not (np.allclose(st.exp_tB, exp_tB, rtol=1e-12, atol=1e-300)
                        and np.allclose(st.factor_L @ st.factor_L.T, L @ L.T,
                                        rtol=1e-9, atol=1e-300)):
                    raise FloatingPointError("fast kernel path disagrees with audit")
            w = np.empty(n_mc)
            for k in range(n_mc):
                exp_tB, L, log_norm = _fast_kernel(spec, float(t_draws[k]))
                back = np.linalg.solve(exp_tB, Y[k])
                A_L = np.linalg.solve(exp_tB, L)
                Xk = back + over * A_L @ Z[k]
                # forward density of Y given X_k
                r = np.linalg.solve(L, Y[k] - exp_tB @ Xk)
                log_p = -0.5 * float(r @ r) - log_norm
                # proposal density of X_k
                s_det = float(np.linalg.slogdet(exp_tB)[1])
                log_q = (-0.5 * float(Z[k] @ Z[k]) - log_norm
                         - spec.dim * math.log(over) + s_det)
                w[k] = math.exp(log_p - log_q)
            vals = fn1 * w
            values.append(float(np.mean(vals)))
            errors.append(float(np.std(vals, ddof=1) / math.sqrt(n_mc)))
        return ResolventSeries(tuple(lambdas), tuple(values), tuple(errors), 1.0,
                               "montecarlo")
    pts, wts, _ = _field_grid(spec, f, cfg)
    values, errors = [], []
    for lam in lambdas:
        R = resolvent_apply(spec, f, pts, lam, cfg)
        values.append(float(wts @ np.abs(lam * R) ** p) ** (1.0 / p))
        errors.append(0.0)
    return ResolventSeries(tuple(lambdas), tuple(values), tuple(errors), p,
                           "deterministic")


def write_sweep_csv(path, spec_name: str, f_label: str, regime: str, rows,
                    x_name: str = "s") -> None:
    """Rows of (x, value, error) as CSV with the run's identifying columns."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["spec", "f_label", x_name, "value", "error", "regime"])
        for x, value, error in rows:
            wr.writerow([spec_name, f_label, f"{x:.12g}", f"{value:.12g}",
                         f"{error:.12g}", regime])
