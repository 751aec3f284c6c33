"""Potential models: values, gradients, curvature envelopes, validation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlgibbs import (
    Convexity,
    ConvexityProfile,
    InvalidParameterError,
    PotentialModel,
    check_gradient,
    make_power,
    make_quadratic,
    penalize,
)
from mlgibbs.potentials import hessian_fd


def test_quadratic_value_and_gradient_at_known_points():
    m = make_quadratic(2, center=0.5, scale=2.0)
    c = np.full(2, 0.5)
    assert m.value(c) == 0.0
    assert np.all(m.gradient(c) == 0.0)
    assert m.value(np.array([1.5, 0.5])) == 1.0
    np.testing.assert_allclose(m.gradient(np.array([1.5, 0.5])), [2.0, 0.0])


def test_quadratic_profile_is_strongly_convex_with_scale():
    m = make_quadratic(3, scale=2.0)
    assert m.profile.kind is Convexity.STRONGLY_CONVEX
    assert m.profile.L == 2.0
    assert m.profile.alpha == 2.0
    np.testing.assert_array_equal(m.minimizer, np.zeros(3))


def test_power_value_and_gradient_at_known_points():
    m = make_power(1, 0.75)
    assert m.value(np.zeros(1)) == 1.0
    np.testing.assert_allclose(m.value(np.ones(1)), 2.0**0.75, rtol=1e-15)
    # gradient is 2 p (1 + |x|^2)^(p-1) x
    np.testing.assert_allclose(
        m.gradient(np.ones(1)), [1.5 * 2.0 ** (-0.25)], rtol=1e-15
    )


def test_power_profile_constants():
    m = make_power(2, 0.75)
    pr = m.profile
    assert pr.kind is Convexity.PARAMETRIC_TWO_SIDED
    np.testing.assert_allclose(pr.r, 1.0 / 3.0, rtol=1e-15)
    assert pr.c_lower == 0.75
    assert pr.c_upper == 1.5
    assert pr.L == 1.5


def test_power_at_unit_exponent_has_zero_curvature_decay():
    pr = make_power(1, 1.0).profile
    assert pr.r == 0.0
    assert pr.c_lower == 2.0
    assert pr.c_upper == 2.0
    assert pr.L == 2.0


@pytest.mark.parametrize("p", [0.5, 0.2, 1.2, 0.0, -1.0])
def test_power_exponent_outside_half_one_rejected(p):
    with pytest.raises(InvalidParameterError):
        make_power(1, p)


def test_finite_difference_gradient_agrees_everywhere():
    for model in (make_quadratic(3, center=0.2), make_power(3, 0.6), make_power(1, 1.0)):
        worst = check_gradient(model, points=30, seed=2)
        assert worst < 1e-5


def test_check_gradient_flags_an_inconsistent_model():
    lying = PotentialModel(
        1,
        lambda x: float(np.sum(x * x)),
        lambda x: 3.0 * np.asarray(x),
        ConvexityProfile(Convexity.WEAKLY_CONVEX, L=3.0),
        np.zeros(1),
    )
    with pytest.raises(InvalidParameterError):
        check_gradient(lying)


def test_hessian_eigenvalues_stay_inside_the_parametric_envelope(rng):
    """Sampled Hessians of the power family respect c * U^(-r) bounds.

    The profile promises every eigenvalue lies between c_lower * U^(-r)
    and c_upper * U^(-r); check that numerically over a spread of radii.
    """

    model = make_power(3, 0.75)
    pr = model.profile
    pts = rng.normal(size=(200, 3)) * rng.uniform(0.1, 6.0, size=(200, 1))
    for x in pts:
        u = model.value(x)
        eigs = np.linalg.eigvalsh(hessian_fd(model, x))
        lo = pr.c_lower * u ** (-pr.r)
        hi = pr.c_upper * u ** (-pr.r)
        assert np.all(eigs >= 0.99 * lo)
        assert np.all(eigs <= 1.01 * hi)


def test_penalize_adds_the_ridge_exactly(rng):
    base = make_power(2, 0.75)
    alpha = 0.3
    ridged = penalize(base, alpha)
    for x in rng.normal(size=(20, 2)):
        np.testing.assert_allclose(
            ridged.value(x), base.value(x) + 0.5 * alpha * np.dot(x, x), rtol=1e-14
        )
        np.testing.assert_allclose(
            ridged.gradient(x), base.gradient(x) + alpha * x, rtol=1e-13, atol=1e-15
        )


def test_penalize_profile_and_minimizer():
    base = make_power(2, 0.75)
    ridged = penalize(base, 0.5)
    assert ridged.profile.kind is Convexity.STRONGLY_CONVEX
    assert ridged.profile.alpha == 0.5
    assert ridged.profile.L == base.profile.L + 0.5
    # centered base keeps its minimizer at the origin
    assert np.linalg.norm(ridged.minimizer) < 1e-8


def test_penalized_gradient_is_strongly_monotone(rng):
    base = make_power(2, 0.75)
    alpha = 0.4
    ridged = penalize(base, alpha)
    for _ in range(50):
        x, y = rng.normal(size=(2, 2)) * 3.0
        gap = np.dot(ridged.gradient(x) - ridged.gradient(y), x - y)
        assert gap >= alpha * np.dot(x - y, x - y) - 1e-9


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind=Convexity.WEAKLY_CONVEX, L=0.0),
        dict(kind=Convexity.WEAKLY_CONVEX, L=-1.0),
        dict(kind=Convexity.WEAKLY_CONVEX, L=float("inf")),
        dict(kind=Convexity.PARAMETRIC_LOWER, L=1.0),
        dict(kind=Convexity.PARAMETRIC_LOWER, L=1.0, c_lower=-0.1, r=0.5),
        dict(kind=Convexity.PARAMETRIC_LOWER, L=0.5, c_lower=1.0, r=0.5),
        dict(kind=Convexity.PARAMETRIC_LOWER, L=1.0, c_lower=1.0, r=1.0),
        dict(kind=Convexity.PARAMETRIC_TWO_SIDED, L=1.0, c_lower=1.0, c_upper=0.5, r=0.5),
        dict(kind=Convexity.STRONGLY_CONVEX, L=1.0),
        dict(kind=Convexity.WEAKLY_CONVEX, L=1.0, alpha=0.3),
    ],
)
def test_profile_validation_rejects_inconsistent_constants(kwargs):
    with pytest.raises(InvalidParameterError):
        ConvexityProfile(**kwargs)


def test_profile_accepts_the_boundary_cases():
    ConvexityProfile(Convexity.PARAMETRIC_LOWER, L=1.0, c_lower=1.0, r=0.0)
    ConvexityProfile(
        Convexity.PARAMETRIC_TWO_SIDED, L=2.0, c_lower=1.0, c_upper=1.0, r=0.5
    )
    ConvexityProfile(Convexity.STRONGLY_CONVEX, L=2.0, alpha=2.0)


def test_model_rejects_minimizer_of_wrong_shape():
    with pytest.raises(InvalidParameterError):
        PotentialModel(
            2,
            lambda x: float(np.sum(x * x)),
            lambda x: 2.0 * np.asarray(x),
            ConvexityProfile(Convexity.WEAKLY_CONVEX, L=2.0),
            np.zeros(3),
        )


@given(
    p=st.floats(min_value=0.51, max_value=1.0),
    x=st.floats(min_value=-5.0, max_value=5.0),
)
@settings(max_examples=60, deadline=None)
def test_power_family_is_convex_along_rays(p, x):
    """One dimensional convexity: gradient is nondecreasing in x."""
    m = make_power(1, p)
    g_lo = m.gradient(np.array([x]))[0]
    g_hi = m.gradient(np.array([x + 0.125]))[0]
    assert g_hi >= g_lo - 1e-12
