import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_admissible_spec
from kfplimits import (
    CATALOG_NAMES,
    DriftRegime,
    OperatorSpec,
    StabilityRegime,
    build_operator,
    catalog,
    check_hypoellipticity,
    classify_spectrum,
)


def test_catalog_names_and_dims():
    assert set(CATALOG_NAMES) == {
        "heat",
        "ornstein_uhlenbeck",
        "kolmogorov",
        "kolmogorov_friction",
    }
    assert catalog("heat", 3).dim == 3
    assert catalog("ornstein_uhlenbeck", 2).dim == 2
    # position-velocity models double the parameter
    assert catalog("kolmogorov", 1).dim == 2
    assert catalog("kolmogorov", 2).dim == 4
    assert catalog("kolmogorov_friction", 1).dim == 2


def test_catalog_unknown_name():
    with pytest.raises((KeyError, ValueError)):
        catalog("not_a_model", 1)


def test_heat_matrices(heat2):
    np.testing.assert_array_equal(heat2.Q, np.eye(2))
    np.testing.assert_array_equal(heat2.B, np.zeros((2, 2)))


def test_kolmogorov_matrices(kolmo):
    np.testing.assert_array_equal(kolmo.Q, [[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_array_equal(kolmo.B, [[0.0, 0.0], [1.0, 0.0]])
    # drift is nilpotent so the flow is polynomial in t
    np.testing.assert_array_equal(kolmo.B @ kolmo.B, np.zeros((2, 2)))


def test_friction_drift_is_idempotent(friction):
    np.testing.assert_allclose(friction.B @ friction.B, friction.B, atol=1e-14)
    assert np.trace(friction.B) == pytest.approx(1.0)


def test_classification_catalog(heat1, ou1, kolmo, friction):
    cases = [
        (heat1, DriftRegime.TRACE_ZERO, StabilityRegime.MAX_RE_NONNEGATIVE),
        (ou1, DriftRegime.TRACE_NEGATIVE, StabilityRegime.MAX_RE_NEGATIVE),
        (kolmo, DriftRegime.TRACE_ZERO, StabilityRegime.MAX_RE_NONNEGATIVE),
        (friction, DriftRegime.TRACE_POSITIVE, StabilityRegime.MAX_RE_NONNEGATIVE),
    ]
    for spec, drift, stab in cases:
        c = classify_spectrum(spec)
        assert c.drift_regime is drift
        assert c.stability_regime is stab
        assert c.trace_B == pytest.approx(float(np.trace(spec.B)), abs=1e-14)
        assert len(c.eigenvalues) == spec.dim


def test_classification_snaps_tiny_trace():
    spec = build_operator(np.eye(1), [[1e-14]])
    assert classify_spectrum(spec).drift_regime is DriftRegime.TRACE_ZERO


def test_hypoellipticity_catalog():
    for name in CATALOG_NAMES:
        report = check_hypoellipticity(catalog(name, 1))
        assert report.passed
        assert report.algebraic_rank == report.dim
        assert all(e > 0.0 for e in report.min_eigenvalues.values())


def test_hypoellipticity_fails_without_coupling():
    # degenerate diffusion and no drift mixing: the missing direction never fills
    spec = OperatorSpec(dim=2, Q=np.diag([1.0, 0.0]), B=np.zeros((2, 2)))
    report = check_hypoellipticity(spec)
    assert not report.passed
    assert report.algebraic_rank == 1


def test_build_operator_rejects_bad_input():
    with pytest.raises(ValueError, match="square"):
        build_operator(np.ones((2, 3)), np.zeros((2, 3)))
    with pytest.raises(ValueError, match="shape"):
        build_operator(np.eye(2), np.zeros((3, 3)))
    with pytest.raises(ValueError, match="symmetric"):
        build_operator([[1.0, 0.5], [0.0, 1.0]], np.zeros((2, 2)))
    with pytest.raises(ValueError, match="negative eigenvalue"):
        build_operator([[-1.0]], [[0.0]])
    with pytest.raises(ValueError, match="rank|degenerates"):
        build_operator(np.diag([1.0, 0.0]), np.zeros((2, 2)))


def test_build_operator_check_false_skips_validation():
    spec = build_operator(np.diag([1.0, 0.0]), np.zeros((2, 2)), check=False)
    assert spec.dim == 2


def test_spec_is_immutable_and_hashable(heat1):
    with pytest.raises((ValueError, RuntimeError)):
        heat1.Q[0, 0] = 2.0
    other = catalog("heat", 1)
    assert heat1 == other
    assert hash(heat1) == hash(other)
    assert heat1 != catalog("ornstein_uhlenbeck", 1)


def test_spec_document_round_trip(kolmo):
    text = kolmo.to_document()
    back = OperatorSpec.from_document(text)
    assert back == kolmo
    assert back.name == kolmo.name


@given(st.integers(1, 3), st.integers(0, 10_000))
@settings(max_examples=40)
def test_classification_consistency_random(dim, seed):
    spec = random_admissible_spec(np.random.default_rng(seed), dim)
    c = classify_spectrum(spec)
    assert c.trace_B == pytest.approx(sum(z.real for z in c.eigenvalues), abs=1e-8)
    if c.drift_regime is DriftRegime.TRACE_POSITIVE:
        assert c.trace_B > 0
        # a positive trace forces some eigenvalue into the right half plane
        assert c.max_re_lambda > 0
        assert c.stability_regime is StabilityRegime.MAX_RE_NONNEGATIVE
    if c.stability_regime is StabilityRegime.MAX_RE_NEGATIVE:
        assert c.trace_B < 0
        assert c.drift_regime is DriftRegime.TRACE_NEGATIVE


@given(st.integers(1, 3), st.integers(0, 10_000))
@settings(max_examples=25)
def test_classification_similarity_invariant(dim, seed):
    rng = np.random.default_rng(seed)
    spec = random_admissible_spec(rng, dim)
    # change of variables x -> S x conjugates the drift and congruences the
    # diffusion; the regimes only see the drift spectrum, which is preserved
    S = rng.uniform(-1.0, 1.0, size=(dim, dim)) + 2.0 * np.eye(dim)
    S_inv = np.linalg.inv(S)
    conj = build_operator(S @ spec.Q @ S.T, S @ spec.B @ S_inv, check=False)
    a, b = classify_spectrum(spec), classify_spectrum(conj)
    assert a.drift_regime is b.drift_regime
    assert a.stability_regime is b.stability_regime
    assert a.trace_B == pytest.approx(b.trace_B, rel=1e-8, abs=1e-9)
