"""Calculators for the theoretical bounds, next to the quantities they dominate.

Bounds containing exponentials are computed in log space and reported as
(log_bound, clamped bound): the Lipschitz-case constants overflow double
precision in exactly the degenerate regimes they are meant to flag.

Two printed constants deliberately disagree: the gradient-rate bound in the
Lipschitz case carries exp(2*sqrt(2d/pi)*G^2*lam^2) while the matching
Poincare bound carries exp(4*sqrt(2d/pi)*G^2*lam^2).  Both are implemented
exactly as stated and surfaced side by side; they are not reconciled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import GibbsProxParams, ObjectiveSpec
from .errors import InvalidEpsilon, InvalidInput, InvalidRadius, LambdaTooLarge
from .oracles import covariance_quadrature_1d

__all__ = [
    "BoundReport",
    "ConvexityCertificate",
    "KappaOscCase",
    "LipschitzCase",
    "SmoothCase",
    "convex_suboptimality_bound",
    "convexification_threshold",
    "convexity_certificate_1d",
    "escape_probability_bound",
    "escape_probability_log",
    "poincare_bound",
    "rate_bound",
    "stability_bound",
    "stability_bound_log",
]

# one-sided dominance slack: quadrature and finite-difference noise
DOMINANCE_SLACK_ABS = 1e-6
DOMINANCE_SLACK_REL = 1e-8


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound with the empirical quantity it dominates.

    ``satisfied`` is set only when ``empirical`` is: it means
    empirical <= bound + slack.  ``log_bound`` is carried whenever the bound
    involves exponentials that may overflow.
    """

    name: str
    inputs: dict
    bound: float
    log_bound: Optional[float] = None
    empirical: Optional[float] = None
    satisfied: Optional[bool] = None

    def with_empirical(self, empirical: float) -> "BoundReport":
        ok = empirical <= self.bound + DOMINANCE_SLACK_ABS + DOMINANCE_SLACK_REL * abs(self.bound)
        return BoundReport(
            name=self.name,
            inputs=self.inputs,
            bound=self.bound,
            log_bound=self.log_bound,
            empirical=float(empirical),
            satisfied=bool(ok),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": dict(self.inputs),
            "bound": self.bound,
            "log_bound": self.log_bound,
            "empirical": self.empirical,
            "satisfied": self.satisfied,
        }


# case tags -----------------------------------------------------------------

@dataclass(frozen=True)
class SmoothCase:
    L: float


@dataclass(frozen=True)
class LipschitzCase:
    L: float
    G: float


@dataclass(frozen=True)
class KappaOscCase:
    kappa: float
    osc: float
    L: Optional[float] = None


# ---------------------------------------------------------------------------
# Gradient-transfer rate bounds
# ---------------------------------------------------------------------------

def rate_bound(case, d: int, params: GibbsProxParams, env_grad_norm: float) -> BoundReport:
    """Upper bound on ||grad f(x_k)|| from the envelope gradient norm.

    Smooth case requires lam < 1/L; the Lipschitz and kappa-oscillation
    cases hold for every lam > 0.
    """
    lam, delta = params.lam, params.delta
    g = float(env_grad_norm)
    if isinstance(case, SmoothCase):
        L = case.L
        if lam >= 1.0 / L:
            raise LambdaTooLarge(f"smooth-case bound needs lambda < 1/L = {1.0 / L}, got {lam}")
        bound = (1 + lam * L) * g + L * math.sqrt(d * lam * delta / (1 - lam * L))
        return BoundReport(
            name="rate_smooth",
            inputs={"L": L, "d": d, "lambda": lam, "delta": delta, "env_grad_norm": g},
            bound=bound,
        )
    if isinstance(case, LipschitzCase):
        L, G = case.L, case.G
        log_a = 0.5 * math.log(2 * d * lam * delta) + 2 * math.sqrt(2 * d / math.pi) * G**2 * lam**2
        log_b = math.log(math.sqrt(2 * d) * G * lam + 2 * math.sqrt(d * lam * delta)) + G**2 * lam / (4 * delta)
        log_min = min(log_a, log_b)
        bound = (1 + lam * L) * g + L * _exp_clamped(log_min)
        return BoundReport(
            name="rate_lipschitz",
            inputs={
                "L": L, "G": G, "d": d, "lambda": lam, "delta": delta,
                "env_grad_norm": g,
                "log_branch_gaussian_tail": log_a,
                "log_branch_exponential_tail": log_b,
            },
            bound=bound,
            log_bound=_log_sum_two(_safe_log((1 + lam * L) * g), math.log(L) + log_min),
        )
    if isinstance(case, KappaOscCase):
        L, kappa, osc = case.L, case.kappa, case.osc
        if L is None:
            raise InvalidInput("kappa-oscillation rate bound needs the smoothness constant L")
        log_term = 0.5 * (osc / delta + math.log(d * lam * delta / (1 + kappa * lam)))
        bound = (1 + lam * L) * g + L * _exp_clamped(log_term)
        return BoundReport(
            name="rate_kappa_osc",
            inputs={
                "L": L, "kappa": kappa, "osc": osc, "d": d,
                "lambda": lam, "delta": delta, "env_grad_norm": g,
            },
            bound=bound,
            log_bound=_log_sum_two(_safe_log((1 + lam * L) * g), math.log(L) + log_term),
        )
    raise InvalidInput(f"unknown rate-bound case {type(case)!r}")


def poincare_bound(case, params: GibbsProxParams, d: int = 1) -> BoundReport:
    """Upper bound on the Poincare constant of the Gibbs posterior."""
    lam, delta = params.lam, params.delta
    if isinstance(case, SmoothCase):
        L = case.L
        if lam >= 1.0 / L:
            raise LambdaTooLarge(f"smooth-case bound needs lambda < 1/L = {1.0 / L}, got {lam}")
        bound = lam * delta / (1 - lam * L)
        return BoundReport(
            name="poincare_smooth",
            inputs={"L": L, "lambda": lam, "delta": delta},
            bound=bound,
        )
    if isinstance(case, LipschitzCase):
        G = case.G
        log_a = math.log(2 * lam * delta) + 4 * math.sqrt(2 * d / math.pi) * G**2 * lam**2
        log_b = 2 * math.log(2 * G * lam + math.sqrt(8 * lam * delta)) - math.log(2.0) + G**2 * lam / (2 * delta)
        log_min = min(log_a, log_b)
        return BoundReport(
            name="poincare_lipschitz",
            inputs={
                "G": G, "d": d, "lambda": lam, "delta": delta,
                "log_branch_gaussian_tail": log_a,
                "log_branch_exponential_tail": log_b,
            },
            bound=_exp_clamped(log_min),
            log_bound=log_min,
        )
    if isinstance(case, KappaOscCase):
        kappa, osc = case.kappa, case.osc
        log_bound = osc / delta + math.log(lam * delta / (1 + kappa * lam))
        return BoundReport(
            name="poincare_kappa_osc",
            inputs={"kappa": kappa, "osc": osc, "lambda": lam, "delta": delta},
            bound=_exp_clamped(log_bound),
            log_bound=log_bound,
        )
    raise InvalidInput(f"unknown Poincare case {type(case)!r}")


def _exp_clamped(log_value: float) -> float:
    if log_value > 700.0:
        return math.inf
    return math.exp(log_value)


def _safe_log(v: float) -> float:
    return math.log(v) if v > 0.0 else -math.inf


def _log_sum_two(a: float, b: float) -> float:
    # log(e^a + e^b), tolerating -inf
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    m = max(a, b)
    return m + math.log1p(math.exp(min(a, b) - m))


# ---------------------------------------------------------------------------
# Convexification thresholds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DissipativeCase:
    m: float
    b: float
    R: float
    d: int


@dataclass(frozen=True)
class KappaOscThreshold:
    kappa: float
    osc: float


def convexification_threshold(case, delta: float) -> float:
    """Smallest stepsize guaranteeing a convex envelope.

    Dissipative case: convex on the ball of radius R; kappa-oscillation
    case: globally convex.
    """
    if delta <= 0:
        raise InvalidInput(f"delta must be positive, got {delta}")
    if isinstance(case, DissipativeCase):
        m, b, R, d = case.m, case.b, case.R, case.d
        if m <= 0:
            raise InvalidInput(f"dissipativity constant m must be positive, got {m}")
        return (delta * d + b + math.sqrt((delta * d + b) ** 2 + 2 * delta * m * R**2)) / (
            2 * delta * m
        )
    if isinstance(case, KappaOscThreshold):
        if case.kappa <= 0:
            raise InvalidInput(f"kappa must be positive, got {case.kappa}")
        return math.expm1(case.osc / delta) / case.kappa
    raise InvalidInput(f"unknown convexification case {type(case)!r}")


# ---------------------------------------------------------------------------
# Escape probability and normalization stability
# ---------------------------------------------------------------------------

def escape_probability_log(n: int, d: int, params: GibbsProxParams, R: float) -> float:
    """log of the pre-clamp bound N*exp(-(alpha-1)^2 d / (4 alpha))."""
    if n < 1:
        raise InvalidInput(f"sample count must be positive, got {n}")
    alpha = R / (params.sigma2 * d)
    if alpha <= 1.0:
        raise InvalidRadius(f"need R > d*lambda*delta (alpha > 1), got alpha = {alpha}")
    return math.log(n) - (alpha - 1.0) ** 2 * d / (4.0 * alpha)


def escape_probability_bound(n: int, d: int, params: GibbsProxParams, R: float) -> float:
    """Bound on P(max_i ||y_i - x||^2 >= R), clamped to 1."""
    return min(1.0, _exp_clamped(escape_probability_log(n, d, params, R)))


def stability_bound_log(n: int, z_lower: float, eps: float, c: float) -> float:
    """log of the tail bound exp(-2 N (z_lower - eps)^2 / c^2)."""
    if z_lower <= 0:
        raise InvalidInput(f"z_lower must be positive, got {z_lower}")
    if not (0 < eps < z_lower):
        raise InvalidEpsilon(f"need 0 < eps < z_lower = {z_lower}, got {eps}")
    if c <= 0:
        raise InvalidInput(f"weight ceiling c must be positive, got {c}")
    if n < 0:
        raise InvalidInput(f"sample count must be nonnegative, got {n}")
    return -2.0 * n * (z_lower - eps) ** 2 / (c * c)


def stability_bound(n: int, z_lower: float, eps: float, c: float) -> float:
    """Probability that the empirical mean weight falls below eps.

    Underflows to 0.0 for large n; use :func:`stability_bound_log` for the
    exponent itself.
    """
    return min(1.0, math.exp(stability_bound_log(n, z_lower, eps, c)))


# ---------------------------------------------------------------------------
# Convex suboptimality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonSmoothConvex:
    pass


@dataclass(frozen=True)
class SmoothConvex:
    L: float


def convex_suboptimality_bound(
    case, d: int, params: GibbsProxParams, env_grad_norm: float, dist_to_xstar: float
) -> BoundReport:
    """Bound on f(x_k) - min f for convex objectives.

    Non-smooth: g*dist + d*delta (the temperature floor never vanishes).
    Smooth: ((1+lam*L)*g + L*sqrt(d*lam*delta)) * dist, whose gradient
    factor is also reported.
    """
    if dist_to_xstar < 0:
        raise InvalidInput(f"distance must be nonnegative, got {dist_to_xstar}")
    lam, delta = params.lam, params.delta
    g = float(env_grad_norm)
    if isinstance(case, NonSmoothConvex):
        bound = g * dist_to_xstar + d * delta
        return BoundReport(
            name="convex_nonsmooth",
            inputs={"d": d, "lambda": lam, "delta": delta,
                    "env_grad_norm": g, "dist": dist_to_xstar},
            bound=bound,
        )
    if isinstance(case, SmoothConvex):
        L = case.L
        grad_bound = (1 + lam * L) * g + L * math.sqrt(d * lam * delta)
        bound = grad_bound * dist_to_xstar
        return BoundReport(
            name="convex_smooth",
            inputs={"L": L, "d": d, "lambda": lam, "delta": delta,
                    "env_grad_norm": g, "dist": dist_to_xstar,
                    "gradient_bound": grad_bound},
            bound=bound,
        )
    raise InvalidInput(f"unknown convex-suboptimality case {type(case)!r}")


# ---------------------------------------------------------------------------
# Convexity certificate by Hessian sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexityCertificate:
    xs: np.ndarray
    hessians: np.ndarray
    min_hessian: float
    all_nonneg: bool
    argmin_x: float = field(default=float("nan"))


def convexity_certificate_1d(
    f: ObjectiveSpec,
    params: GibbsProxParams,
    grid: tuple,
) -> ConvexityCertificate:
    """Envelope Hessian on a grid; certifies convexity on the swept interval.

    ``grid`` is (lo, hi, count).  all_nonneg is true iff the smallest
    Hessian exceeds -1e-8.
    """
    lo, hi, count = grid
    if count < 2 or hi <= lo:
        raise InvalidInput(f"bad certificate grid {grid}")
    xs = np.linspace(float(lo), float(hi), int(count))
    hessians = np.array(
        [covariance_quadrature_1d(f, float(x), params).hessian_env for x in xs]
    )
    i = int(np.argmin(hessians))
    return ConvexityCertificate(
        xs=xs,
        hessians=hessians,
        min_hessian=float(hessians[i]),
        all_nonneg=bool(hessians[i] >= -1e-8),
        argmin_x=float(xs[i]),
    )
