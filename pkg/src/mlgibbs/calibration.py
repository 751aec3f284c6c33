"""Parameter calibration for single-level and multilevel Langevin estimators.

Two routes are covered.  The penalized route adds a ridge alpha |x|^2 / 2 to a
convex potential, choosing alpha from the target accuracy and the fourth
moment of the target law, and pairs it with a geometric level schedule.  The
direct route applies under parametric weak convexity (curvature envelopes
c * U^{-r}) and calibrates levels from the envelope constants.

All schedules round horizons up to their level's coarse grid, so step counts
and gradient-evaluation costs are exact integers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import InfeasibleCalibrationError, InvalidParameterError
from .potentials import Convexity, ConvexityProfile
from .sde import grid_count_up

__all__ = [
    "RegimeConstants",
    "LevelSchedule",
    "PenalizedPlan",
    "BiasBounds",
    "regime_constants",
    "build_schedule",
    "single_level_schedule",
    "calibrate_penalized",
    "complexity_bound_penalized",
    "calibrate_weak_i",
    "calibrate_weak_ii",
    "complexity_bound_weak",
    "penalization_bias_bounds",
    "decreasing_penalization_gap",
]

_PARAMETRIC = (Convexity.PARAMETRIC_LOWER, Convexity.PARAMETRIC_TWO_SIDED)


@dataclass(frozen=True)
class RegimeConstants:
    """Admissible step bound and moment scale for a parametric profile.

    gamma_star bounds the usable Euler step; psi_bar bounds the stationary
    moments of U along the chain and scales like the dimension.
    """

    gamma_star: float
    psi_bar: float
    c_r: float = 1.0


def regime_constants(
    profile: ConvexityProfile, d: int, sigma: float, c_r: float = 1.0
) -> RegimeConstants:
    """Step bound and moment scale implied by a parametric convexity profile."""

    if d < 1:
        raise InvalidParameterError(f"d must be a positive integer, got {d}")
    if sigma < 0.0:
        raise InvalidParameterError(f"sigma must be nonnegative, got {sigma}")
    if c_r <= 0.0:
        raise InvalidParameterError(f"c_r must be positive, got {c_r}")
    if profile.kind not in _PARAMETRIC:
        raise InvalidParameterError(
            "regime constants require a parametric convexity profile "
            "(c_lower with exponent r); profile lacks c_lower"
        )
    L, c_lo, r = profile.L, profile.c_lower, profile.r
    if profile.kind is Convexity.PARAMETRIC_TWO_SIDED:
        top = max(profile.c_upper, L)
        gamma_star = (1.0 - r) / (4.0 * top)
        psi_bar = c_r * (d * (1.0 + sigma * sigma) * top) / c_lo
    else:
        gamma_star = 1.0 / (4.0 * L)
        psi_bar = (1.0 + sigma * sigma) * (
            d * L + (1.0 + d * L / c_lo) ** (1.0 / (1.0 - r))
        )
    if gamma_star > 1.0 / (4.0 * L) + 1e-15:
        raise InvalidParameterError("computed step bound exceeds 1/(4L)")
    if psi_bar < d:
        raise InvalidParameterError("computed moment scale fell below the dimension")
    return RegimeConstants(gamma_star=gamma_star, psi_bar=psi_bar, c_r=c_r)


@dataclass(frozen=True)
class LevelSchedule:
    """Discretization levels of a multilevel run.

    J correcting levels on top of the base level; gamma[j] = gamma[0] * 2^-j;
    T[j] is the horizon of level j, an exact grid multiple of its coarse step
    (gamma[j-1] for j >= 1, gamma[0] for j = 0); tau is the warm-up time cut
    from every level's average; rho in [0, 1] is the horizon decay exponent,
    T_j proportional to 2^{-(1-rho) j} before rounding.
    """

    J: int
    gamma: Tuple[float, ...]
    T: Tuple[float, ...]
    tau: float
    rho: float

    def __post_init__(self):
        if self.J < 0 or len(self.gamma) != self.J + 1 or len(self.T) != self.J + 1:
            raise InvalidParameterError(
                f"schedule needs J + 1 = {self.J + 1} steps and horizons"
            )
        g0 = self.gamma[0]
        if not g0 > 0.0:
            raise InvalidParameterError(f"gamma[0] must be positive, got {g0}")
        for j, g in enumerate(self.gamma):
            if g != g0 * 2.0 ** (-j):
                raise InvalidParameterError(f"gamma[{j}] must equal gamma[0] * 2^-{j}")
        for j, t in enumerate(self.T):
            if not t > 0.0:
                raise InvalidParameterError(f"T[{j}] must be positive, got {t}")
            grid = self.gamma[max(j - 1, 0)]
            n = round(t / grid)
            if n < 1 or abs(t - n * grid) > 1e-9 * max(1.0, t):
                raise InvalidParameterError(
                    f"T[{j}]={t} is not a grid multiple of {grid}"
                )
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidParameterError(f"rho must lie in [0, 1], got {self.rho}")
        if self.tau < 0.0 or self.tau >= min(self.T):
            raise InvalidParameterError(
                f"tau={self.tau} must lie in [0, min_j T[j])"
            )

    @property
    def step_counts(self) -> Tuple[int, ...]:
        """Steps per level on its coarse grid: T0/gamma0, then T_j/gamma_{j-1}."""
        counts = [round(self.T[0] / self.gamma[0])]
        for j in range(1, self.J + 1):
            counts.append(round(self.T[j] / self.gamma[j - 1]))
        return tuple(counts)

    def burn_counts(self) -> Tuple[int, ...]:
        """Warm-up steps per level: tau rounded up to each level's coarse grid."""
        burns = [grid_count_up(self.tau, self.gamma[0])]
        for j in range(1, self.J + 1):
            burns.append(grid_count_up(self.tau, self.gamma[j - 1]))
        return tuple(burns)

    def scaled(self, multiplier: float) -> "LevelSchedule":
        """Uniformly stretch every horizon, re-rounding to the level grids."""
        if not multiplier > 0.0:
            raise InvalidParameterError(f"multiplier must be positive, got {multiplier}")
        return build_schedule(
            self.gamma[0],
            [multiplier * t for t in self.T],
            tau=self.tau,
            rho=self.rho,
        )

    def to_dict(self) -> dict:
        return {
            "J": self.J,
            "gamma": list(self.gamma),
            "T": list(self.T),
            "tau": self.tau,
            "rho": self.rho,
        }


def build_schedule(gamma0: float, horizons, tau: float = 0.0, rho: float = 0.5) -> LevelSchedule:
    """Assemble a LevelSchedule, rounding each horizon up to its level grid."""

    if not gamma0 > 0.0:
        raise InvalidParameterError(f"gamma0 must be positive, got {gamma0}")
    J = len(horizons) - 1
    gamma = tuple(gamma0 * 2.0 ** (-j) for j in range(J + 1))
    T = []
    for j, t in enumerate(horizons):
        if not t > 0.0:
            raise InvalidParameterError(f"horizon T[{j}] must be positive, got {t}")
        grid = gamma[max(j - 1, 0)]
        T.append(grid_count_up(t, grid) * grid)
    return LevelSchedule(J=J, gamma=gamma, T=tuple(T), tau=tau, rho=rho)


def single_level_schedule(gamma0: float, horizon: float, tau: float = 0.0) -> LevelSchedule:
    """Degenerate schedule with no correcting levels (J = 0)."""
    return build_schedule(gamma0, [horizon], tau=tau, rho=0.0)


@dataclass(frozen=True)
class PenalizedPlan:
    """Ridge strength and level schedule of a penalized multilevel run."""

    epsilon: float
    alpha: float
    m4: float
    m4_source: str
    schedule: LevelSchedule
    predicted_cost: float
    statement_mode: bool = False

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "m4": self.m4,
            "m4_source": self.m4_source,
            "predicted_cost": self.predicted_cost,
            "statement_mode": self.statement_mode,
            **self.schedule.to_dict(),
        }


def calibrate_penalized(
    epsilon: float,
    sigma: float,
    d: int,
    m4: float,
    L: float,
    statement_mode: bool = False,
    m4_source: str = "given",
) -> PenalizedPlan:
    """Choose the ridge strength and level schedule for a target accuracy.

    The ridge is alpha = 2 epsilon / sqrt(m4) where m4 is the fourth moment
    of the target law.  The default calibration uses the ridge-adjusted
    Lipschitz constant for the base step and horizons decaying by halves,

        gamma_0 = alpha / (2 (L + alpha)^2),
        J = ceil(2 log2(sigma^2 d / (alpha epsilon))),
        T_j = sigma^2 d log(1/gamma_0) alpha^-2 epsilon^-2 2^-j.

    With statement_mode the schedule instead uses gamma_0 = epsilon
    m4^{-1/2} L^{-2}, J = ceil(2 log2(sigma^2 d sqrt(m4) epsilon^-2)) and the
    level-independent horizon T = sigma^2 d log(1/gamma_0) m4 epsilon^-5
    J^2 2^-J.
    """

    if not (epsilon > 0.0 and math.isfinite(epsilon)):
        raise InvalidParameterError(f"epsilon must be positive and finite, got {epsilon}")
    if sigma <= 0.0 or m4 <= 0.0 or L <= 0.0:
        raise InvalidParameterError("sigma, m4 and L must be positive")
    if d < 1:
        raise InvalidParameterError(f"d must be a positive integer, got {d}")

    alpha = 2.0 * epsilon / math.sqrt(m4)
    if statement_mode:
        gamma0 = epsilon / (math.sqrt(m4) * L * L)
        J_raw = math.ceil(2.0 * math.log2(sigma * sigma * d * math.sqrt(m4) / epsilon**2))
        rho = 1.0
    else:
        L_alpha = L + alpha
        gamma0 = alpha / (2.0 * L_alpha * L_alpha)
        J_raw = math.ceil(2.0 * math.log2(sigma * sigma * d / (alpha * epsilon)))
        rho = 0.0
    if gamma0 > 1.0:
        raise InfeasibleCalibrationError(
            f"base step gamma0={gamma0} exceeds 1; the accuracy target is infeasible"
        )
    J = max(J_raw, 1)
    if J_raw < 1:
        warnings.warn(
            f"accuracy epsilon={epsilon} is too loose for a multilevel schedule; "
            "clamping to J=1",
            RuntimeWarning,
            stacklevel=2,
        )

    log_inv_gamma0 = math.log(1.0 / gamma0)
    base = sigma * sigma * d * log_inv_gamma0
    if statement_mode:
        T_flat = base * m4 * epsilon**-5 * J * J * 2.0 ** (-J)
        horizons = [T_flat] * (J + 1)
    else:
        T0 = base / (alpha * alpha * epsilon * epsilon)
        horizons = [T0 * 2.0 ** (-j) for j in range(J + 1)]

    schedule = build_schedule(gamma0, horizons, tau=0.0, rho=rho)
    if schedule.T[J] < schedule.gamma[0]:
        raise InfeasibleCalibrationError(
            f"deepest horizon T_J={schedule.T[J]} fell below the base step "
            f"{schedule.gamma[0]} after rounding"
        )
    predicted = complexity_bound_penalized(epsilon, sigma, d, m4, L, gamma0)
    return PenalizedPlan(
        epsilon=epsilon,
        alpha=alpha,
        m4=m4,
        m4_source=m4_source,
        schedule=schedule,
        predicted_cost=predicted,
        statement_mode=statement_mode,
    )


def complexity_bound_penalized(
    epsilon: float, sigma: float, d: int, m4: float, L: float, gamma0: float
) -> float:
    """Predicted gradient-evaluation budget of the penalized route."""

    if not 0.0 < gamma0 < 1.0:
        raise InvalidParameterError(f"gamma0 must lie in (0, 1), got {gamma0}")
    if epsilon <= 0.0 or sigma <= 0.0 or m4 <= 0.0 or L <= 0.0 or d < 1:
        raise InvalidParameterError("epsilon, sigma, m4, L must be positive and d >= 1")
    levels = math.ceil(math.log2(0.5 * sigma * sigma * d * math.sqrt(m4) * epsilon**-3))
    if levels < 1:
        raise InvalidParameterError(
            f"accuracy epsilon={epsilon} is too loose for the complexity bound"
        )
    return (
        (1.0 / 3.0)
        * math.log(1.0 / gamma0)
        * m4**1.5
        * L * L
        * sigma * sigma
        * d
        * epsilon**-5
        * levels**3
    )


def _require_parametric(profile: ConvexityProfile):
    if profile.kind not in _PARAMETRIC:
        raise InvalidParameterError(
            "weak-convexity calibration requires a parametric profile; "
            "profile lacks c_lower"
        )


def _check_weak_args(epsilon, delta, gamma0, constants):
    if not (epsilon > 0.0 and math.isfinite(epsilon)):
        raise InvalidParameterError(f"epsilon must be positive and finite, got {epsilon}")
    if not 0.0 < delta <= 0.25:
        raise InvalidParameterError(f"delta must lie in (0, 1/4], got {delta}")
    if not gamma0 > 0.0:
        raise InvalidParameterError(f"gamma0 must be positive, got {gamma0}")
    if gamma0 > constants.gamma_star * (1.0 + 1e-12):
        raise InvalidParameterError(
            f"gamma0={gamma0} exceeds the admissible step {constants.gamma_star}"
        )


def calibrate_weak_i(
    epsilon: float,
    profile: ConvexityProfile,
    constants: RegimeConstants,
    delta: float,
    gamma0: float,
) -> LevelSchedule:
    """Level schedule of the direct route, variant tuned for few assumptions.

    Uses horizon decay exponent rho = 1/2:

        J = ceil(log2( L / min(c^{2/(1-delta)}, c) * Psi^{1+(3+delta) r}
                       * gamma0 * epsilon^-2 )),  at least 1,
        T_0 = max(c^{-3/4}, c^{-5/2-delta}) * Psi^{3/2+(9/2+delta) r}
              * epsilon^-2,
        T_j = T_0 * 2^{-j/2},

    with c the curvature envelope constant and Psi the moment scale.
    """

    _require_parametric(profile)
    _check_weak_args(epsilon, delta, gamma0, constants)
    L, c_lo, r = profile.L, profile.c_lower, profile.r
    psi = constants.psi_bar

    inner = (
        L
        / min(c_lo ** (2.0 / (1.0 - delta)), c_lo)
        * psi ** (1.0 + (3.0 + delta) * r)
        * gamma0
        / (epsilon * epsilon)
    )
    J = max(1, math.ceil(math.log2(inner)))
    T0 = (
        max(c_lo ** -0.75, c_lo ** (-2.5 - delta))
        * psi ** (1.5 + (4.5 + delta) * r)
        / (epsilon * epsilon)
    )
    horizons = [T0 * 2.0 ** (-0.5 * j) for j in range(J + 1)]
    return build_schedule(gamma0, horizons, tau=0.0, rho=0.5)


def calibrate_weak_ii(
    epsilon: float,
    profile: ConvexityProfile,
    constants: RegimeConstants,
    delta: float,
    gamma0: float,
    rho: float = 0.5,
) -> LevelSchedule:
    """Level schedule of the direct route, variant using both envelopes.

    rho in (0, 1) trades horizon decay against level count:

        J = ceil(log2( c^{-2/(1-delta)} L^3 Psi^{1+2r/(1-delta)}
                       * gamma0 * epsilon^-1 )),  at least 1,
        T_0 = L^{rho/2} max(c^{-min(5/4-rho, 3 rho)+delta}, c^{-5/2-delta})
              * Psi^{1+(4-2 rho+delta) r} * epsilon^-2,
        T_j = T_0 * 2^{-(1-rho) j}.
    """

    _require_parametric(profile)
    _check_weak_args(epsilon, delta, gamma0, constants)
    if not 0.0 < rho < 1.0:
        raise InvalidParameterError(f"rho must lie in (0, 1), got {rho}")
    L, c_lo, r = profile.L, profile.c_lower, profile.r
    psi = constants.psi_bar

    inner = (
        c_lo ** (-2.0 / (1.0 - delta))
        * L**3
        * psi ** (1.0 + 2.0 * r / (1.0 - delta))
        * gamma0
        / epsilon
    )
    J = max(1, math.ceil(math.log2(inner)))
    T0 = (
        L ** (0.5 * rho)
        * max(c_lo ** (-min(1.25 - rho, 3.0 * rho) + delta), c_lo ** (-2.5 - delta))
        * psi ** (1.0 + (4.0 - 2.0 * rho + delta) * r)
        / (epsilon * epsilon)
    )
    horizons = [T0 * 2.0 ** (-(1.0 - rho) * j) for j in range(J + 1)]
    return build_schedule(gamma0, horizons, tau=0.0, rho=rho)


def complexity_bound_weak(
    variant: str,
    epsilon: float,
    profile: ConvexityProfile,
    constants: RegimeConstants,
    delta: float,
    rho: float = 0.5,
    gamma0: Optional[float] = None,
) -> float:
    """Predicted gradient-evaluation budget of the direct route."""

    _require_parametric(profile)
    if not (epsilon > 0.0 and math.isfinite(epsilon)):
        raise InvalidParameterError(f"epsilon must be positive and finite, got {epsilon}")
    if not 0.0 < delta <= 0.25:
        raise InvalidParameterError(f"delta must lie in (0, 1/4], got {delta}")
    L, c_lo, r = profile.L, profile.c_lower, profile.r
    psi = constants.psi_bar
    if variant == "i":
        return (
            math.sqrt(L)
            * min(c_lo**-1.25, c_lo ** (-3.5 - delta))
            * psi ** (1.5 + (4.5 + delta) * r)
            * epsilon**-3
        )
    if variant == "ii":
        if not 0.0 < rho < 1.0:
            raise InvalidParameterError(f"rho must lie in (0, 1), got {rho}")
        if gamma0 is None or not gamma0 > 0.0:
            raise InvalidParameterError("variant ii requires a positive gamma0")
        return (
            gamma0**-rho
            * L ** (2.0 * rho)
            * max(c_lo ** (min(1.25, 2.0 * rho) + delta), c_lo ** (-2.5 - delta))
            * psi ** (1.0 + 0.5 * rho + (4.0 - rho + delta) * r)
            * epsilon ** (-2.0 - rho)
        )
    raise InvalidParameterError(f"variant must be 'i' or 'ii', got {variant!r}")


@dataclass(frozen=True)
class BiasBounds:
    """Bias bounds on the penalized target: KL divergence and 1-Wasserstein."""

    kl: float
    w1: float


def penalization_bias_bounds(alpha: float, m4: float) -> BiasBounds:
    """Bias of replacing the target by its ridge-penalized version.

    KL(pi_alpha | pi) <= alpha^2 m4 / 8 and
    W1(pi, pi_alpha) <= alpha sqrt(m4) / (2 sqrt(2)); alpha = 0 means no
    penalization and no bias.
    """

    if alpha < 0.0 or m4 <= 0.0:
        raise InvalidParameterError("alpha must be nonnegative and m4 positive")
    return BiasBounds(
        kl=alpha * alpha * m4 / 8.0,
        w1=alpha * math.sqrt(m4) / (2.0 * math.sqrt(2.0)),
    )


def decreasing_penalization_gap(
    alpha: float, alpha_tilde: float, d: int, sigma: float, t: float, xy_dist2: float
) -> float:
    """Mean-square gap bound between chains run at ridges alpha > alpha_tilde.

    exp(-2 alpha t) * xy_dist2 + (alpha - alpha_tilde) d sigma^2 / alpha_tilde.
    """

    if not alpha > alpha_tilde > 0.0:
        raise InvalidParameterError(
            f"need alpha > alpha_tilde > 0, got alpha={alpha}, alpha_tilde={alpha_tilde}"
        )
    if t < 0.0 or xy_dist2 < 0.0 or d < 1 or sigma < 0.0:
        raise InvalidParameterError("t, xy_dist2 must be nonnegative; d >= 1; sigma >= 0")
    return (
        math.exp(-2.0 * alpha * t) * xy_dist2
        + (alpha - alpha_tilde) * d * sigma * sigma / alpha_tilde
    )
