"""Potential models for Langevin sampling of Gibbs laws.

A potential U is represented by its value and gradient maps together with a
convexity profile describing what curvature guarantees the rest of the package
may rely on.  Throughout the package the invariant law of the diffusion

    dX_t = -grad U(X_t) dt + sigma dB_t

is the Gibbs measure with density proportional to exp(-2 U(x) / sigma^2).

Value and gradient maps are vectorized: they accept arrays of shape (..., d)
and return shapes (...) and (..., d) respectively, so batches of points can be
evaluated in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, InvalidParameterError

__all__ = [
    "Convexity",
    "ConvexityProfile",
    "PotentialModel",
    "make_quadratic",
    "make_power",
    "penalize",
    "check_gradient",
    "hessian_fd",
]


class Convexity(Enum):
    """How much curvature a potential guarantees.

    WEAKLY_CONVEX: convex with Lipschitz gradient, nothing more.
    PARAMETRIC_LOWER: smallest Hessian eigenvalue at x is at least
        c_lower * U(x)**(-r), so curvature degrades polynomially in U.
    PARAMETRIC_TWO_SIDED: additionally the largest Hessian eigenvalue is at
        most c_upper * U(x)**(-r).
    STRONGLY_CONVEX: uniform curvature lower bound alpha > 0.
    """

    WEAKLY_CONVEX = "weakly_convex"
    PARAMETRIC_LOWER = "parametric_lower"
    PARAMETRIC_TWO_SIDED = "parametric_two_sided"
    STRONGLY_CONVEX = "strongly_convex"


_PARAMETRIC = (Convexity.PARAMETRIC_LOWER, Convexity.PARAMETRIC_TWO_SIDED)


@dataclass(frozen=True)
class ConvexityProfile:
    """Curvature contract attached to a potential.

    L is the gradient Lipschitz constant.  c_lower, c_upper and r quantify the
    parametric envelopes (present only for the parametric kinds, with
    r in [0, 1)); alpha is the strong convexity modulus (positive exactly when
    kind is STRONGLY_CONVEX).
    """

    kind: Convexity
    L: float
    c_lower: Optional[float] = None
    c_upper: Optional[float] = None
    r: Optional[float] = None
    alpha: float = 0.0

    def __post_init__(self):
        if not (self.L > 0.0 and math.isfinite(self.L)):
            raise InvalidParameterError(f"L must be positive and finite, got {self.L}")
        if self.kind in _PARAMETRIC:
            if self.L < 1.0:
                raise InvalidParameterError(
                    f"parametric profiles require L >= 1, got L={self.L}"
                )
            if self.c_lower is None or not self.c_lower > 0.0:
                raise InvalidParameterError("c_lower must be positive for parametric profiles")
            if self.r is None or not 0.0 <= self.r < 1.0:
                raise InvalidParameterError(f"r must lie in [0, 1), got {self.r}")
        if self.kind is Convexity.PARAMETRIC_TWO_SIDED:
            if self.c_upper is None or self.c_upper < self.c_lower:
                raise InvalidParameterError("c_upper must be present and >= c_lower")
        if self.kind is Convexity.STRONGLY_CONVEX:
            if not self.alpha > 0.0:
                raise InvalidParameterError("strongly convex profiles require alpha > 0")
        elif self.alpha != 0.0:
            raise InvalidParameterError("alpha must be 0 unless the profile is strongly convex")


# Closed-form drift families recognized by the fast simulation kernels.
FAMILY_QUADRATIC = 0  # U(x) = 0.5 * a * |x - center|^2 + 0.5 * ridge * |x|^2
FAMILY_POWER = 1      # U(x) = (1 + |x|^2)^a            + 0.5 * ridge * |x|^2


@dataclass(frozen=True, eq=False)
class ClosedFormDrift:
    """Parameters of a drift family the compiled kernels can evaluate inline."""

    family: int
    a: float
    ridge: float
    center: np.ndarray

    def with_ridge(self, extra: float) -> "ClosedFormDrift":
        return ClosedFormDrift(self.family, self.a, self.ridge + extra, self.center)


@dataclass(frozen=True, eq=False)
class PotentialModel:
    """A potential together with its dimension, curvature profile and minimizer.

    value_fn maps (..., d) arrays to (...) nonnegative values, gradient_fn maps
    (..., d) to (..., d).  closed_form, when present, lets the compiled
    simulation kernels evaluate the drift without calling back into Python.
    """

    dim: int
    value_fn: Callable[[np.ndarray], np.ndarray]
    gradient_fn: Callable[[np.ndarray], np.ndarray]
    profile: ConvexityProfile
    minimizer: np.ndarray
    closed_form: Optional[ClosedFormDrift] = field(default=None)

    def __post_init__(self):
        if not (isinstance(self.dim, int) and self.dim >= 1):
            raise InvalidParameterError(f"dim must be a positive integer, got {self.dim}")
        m = np.asarray(self.minimizer, dtype=float)
        if m.shape != (self.dim,):
            raise InvalidParameterError(
                f"minimizer must have shape ({self.dim},), got {m.shape}"
            )
        object.__setattr__(self, "minimizer", m)

    def value(self, x) -> np.ndarray:
        return np.asarray(self.value_fn(np.asarray(x, dtype=float)), dtype=float)

    def gradient(self, x) -> np.ndarray:
        return np.asarray(self.gradient_fn(np.asarray(x, dtype=float)), dtype=float)


def _as_center(center, dim: int) -> np.ndarray:
    c = np.asarray(center, dtype=float)
    if c.ndim == 0:
        c = np.full(dim, float(c))
    if c.shape != (dim,):
        raise InvalidParameterError(f"center must be scalar or length-{dim}, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise InvalidParameterError("center must be finite")
    return c


def make_quadratic(dim: int, center=0.0, scale: float = 1.0) -> PotentialModel:
    """Quadratic bowl U(x) = (scale / 2) |x - center|^2.

    Strongly convex with modulus scale; its Gibbs law at noise level sigma is
    Gaussian with mean center and variance sigma^2 / (2 scale) per coordinate.
    """

    if not (scale > 0.0 and math.isfinite(scale)):
        raise InvalidParameterError(f"scale must be positive and finite, got {scale}")
    c = _as_center(center, dim)

    def value(x):
        diff = x - c
        return 0.5 * scale * np.sum(diff * diff, axis=-1)

    def gradient(x):
        return scale * (x - c)

    profile = ConvexityProfile(kind=Convexity.STRONGLY_CONVEX, L=scale, alpha=scale)
    return PotentialModel(
        dim=dim,
        value_fn=value,
        gradient_fn=gradient,
        profile=profile,
        minimizer=c.copy(),
        closed_form=ClosedFormDrift(FAMILY_QUADRATIC, scale, 0.0, c.copy()),
    )


def make_power(dim: int, p: float) -> PotentialModel:
    """Flattening radial potential U(x) = (1 + |x|^2)^p with p in (1/2, 1].

    Convex but not strongly convex for p < 1: the curvature decays like
    U^{-r} with r = (1 - p) / p.  The profile carries the two-sided envelope
    constants c_lower = 2p(2p - 1) and c_upper = 2p, and L = max(2p, 1).
    U attains its minimum value 1 at the origin.
    """

    if not (0.5 < p <= 1.0):
        raise InvalidParameterError(f"p must lie in (1/2, 1], got {p}")

    def value(x):
        return (1.0 + np.sum(x * x, axis=-1)) ** p

    def gradient(x):
        s = np.sum(x * x, axis=-1)
        w = 2.0 * p * (1.0 + s) ** (p - 1.0)
        return w[..., np.newaxis] * x

    profile = ConvexityProfile(
        kind=Convexity.PARAMETRIC_TWO_SIDED,
        L=max(2.0 * p, 1.0),
        c_lower=2.0 * p * (2.0 * p - 1.0),
        c_upper=2.0 * p,
        r=(1.0 - p) / p,
    )
    zero = np.zeros(dim)
    return PotentialModel(
        dim=dim,
        value_fn=value,
        gradient_fn=gradient,
        profile=profile,
        minimizer=zero,
        closed_form=ClosedFormDrift(FAMILY_POWER, p, 0.0, np.zeros(dim)),
    )


def _descend(value_fn, gradient_fn, x0, lipschitz, grad_tol=1e-10, max_iter=10**6):
    # Damped gradient descent: base step 1/L, halved whenever the value rises.
    x = np.asarray(x0, dtype=float).copy()
    base = 1.0 / lipschitz
    step = base
    g = np.asarray(gradient_fn(x), dtype=float)
    for _ in range(max_iter):
        if np.linalg.norm(g) <= grad_tol:
            return x
        fx = float(value_fn(x))
        y = x - step * g
        halvings = 0
        while float(value_fn(y)) > fx and halvings < 200:
            step *= 0.5
            y = x - step * g
            halvings += 1
        x = y
        g = np.asarray(gradient_fn(x), dtype=float)
        step = min(step * 2.0, base)
    raise ConvergenceError(
        f"minimizer search did not reach gradient norm {grad_tol} in {max_iter} iterations"
    )


def penalize(base: PotentialModel, alpha: float) -> PotentialModel:
    """Add the ridge (alpha / 2) |x|^2 to a convex base potential.

    The sum is strongly convex with modulus at least alpha and gradient
    Lipschitz constant base.L + alpha.  Its minimizer is located by damped
    gradient descent started from the base minimizer.
    """

    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise InvalidParameterError(f"alpha must be positive and finite, got {alpha}")

    base_value = base.value_fn
    base_gradient = base.gradient_fn

    def value(x):
        return base_value(x) + 0.5 * alpha * np.sum(x * x, axis=-1)

    def gradient(x):
        return base_gradient(x) + alpha * x

    L = base.profile.L + alpha
    minimizer = _descend(value, gradient, base.minimizer, L)
    closed = base.closed_form.with_ridge(alpha) if base.closed_form is not None else None
    return PotentialModel(
        dim=base.dim,
        value_fn=value,
        gradient_fn=gradient,
        profile=ConvexityProfile(kind=Convexity.STRONGLY_CONVEX, L=L, alpha=alpha),
        minimizer=minimizer,
        closed_form=closed,
    )


def check_gradient(model: PotentialModel, points: int = 20, h: float = 1e-5, seed: int = 0):
    """Compare gradient_fn against central differences of value_fn.

    Returns the worst absolute deviation observed; raises if any component
    deviates by more than 1e-5 * (1 + |component|).
    """

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(points):
        x = 2.0 * rng.standard_normal(model.dim)
        g = model.gradient(x)
        for j in range(model.dim):
            e = np.zeros(model.dim)
            e[j] = h
            fd = (float(model.value(x + e)) - float(model.value(x - e))) / (2.0 * h)
            dev = abs(fd - g[j])
            worst = max(worst, dev)
            if dev > 1e-5 * (1.0 + abs(g[j])):
                raise InvalidParameterError(
                    f"gradient mismatch at {x}: component {j} differs by {dev:.3e}"
                )
    return worst


def hessian_fd(model: PotentialModel, x, h: float = 1e-5) -> np.ndarray:
    """Symmetrized finite-difference Hessian from the exact gradient."""

    x = np.asarray(x, dtype=float)
    d = model.dim
    H = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        H[:, j] = (model.gradient(x + e) - model.gradient(x - e)) / (2.0 * h)
    return 0.5 * (H + H.T)
