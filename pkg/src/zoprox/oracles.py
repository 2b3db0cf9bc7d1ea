"""Exact and high-accuracy reference evaluations.

Covers the Gibbs-weighted proximal point, the soft Moreau envelope with its
gradient and Hessian, the auxiliary potential it is the classical prox of,
and the asymptotic bias/variance constants of the quadratic case.

Closed forms exist for quadratics (any dimension) and for f = |x| (via the
scaled complementary error function); everything else is one-dimensional
quadrature.  The quadrature runs Gauss-Hermite on the proposal Gaussian
with adaptive node doubling, and falls back to windowed adaptive
Gauss-Kronrod when the Gibbs posterior is too far from the proposal or too
narrow/oscillatory for the node budget — the small-delta and large-lambda
regimes both do this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import roots_hermite

from .core import (
    AbsValue,
    GibbsProxParams,
    ObjectiveSpec,
    Quadratic,
    log_erfcx,
)
from .errors import BracketFailure, InvalidInput, NoOracle, QuadratureNotConverged

__all__ = [
    "CovarianceValue",
    "EnvelopeValue",
    "c1_c2_quadratic",
    "covariance_quadrature_1d",
    "envelope",
    "envelope_abs",
    "envelope_quadratic",
    "envelope_quadrature_1d",
    "h_eval_1d",
    "quadratic_mean_weight",
    "zprox_abs",
    "zprox_inverse_1d",
    "zprox_quadratic",
]

_LOG_SQRT_PI = 0.5 * math.log(math.pi)


@dataclass(frozen=True)
class EnvelopeValue:
    """Envelope value, gradient, and proximal point at one location.

    The gradient identity zprox = x - lam * gradient holds by construction
    for every method.
    """

    value: float
    gradient: np.ndarray
    zprox: np.ndarray
    method: str  # "closed_quadratic" | "closed_abs" | "quadrature"


@dataclass(frozen=True)
class CovarianceValue:
    """Posterior variance of the Gibbs measure and the envelope Hessian.

    hessian_env = 1/lam - sigma2/(lam^2 * delta), which never exceeds 1/lam.
    """

    sigma2: float
    hessian_env: float
    method: str


# ---------------------------------------------------------------------------
# Closed forms: quadratic
# ---------------------------------------------------------------------------

def zprox_quadratic(C: float, mu, x, params: GibbsProxParams) -> np.ndarray:
    """(lam*mu + C*x) / (C + lam): the classical prox, independent of delta."""
    if C <= 0:
        raise InvalidInput(f"C must be positive, got {C}")
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return (params.lam * mu + C * x) / (C + params.lam)


def envelope_quadratic(C: float, mu, x, params: GibbsProxParams) -> EnvelopeValue:
    """Closed-form envelope of f(y) = ||y-mu||^2/(2C)."""
    if C <= 0:
        raise InvalidInput(f"C must be positive, got {C}")
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    lam = params.lam
    r2 = float(np.sum((x - mu) ** 2))
    value = 0.5 * params.delta * d * math.log((C + lam) / C) + r2 / (2.0 * (C + lam))
    gradient = (x - mu) / (C + lam)
    return EnvelopeValue(
        value=value,
        gradient=gradient,
        zprox=x - lam * gradient,
        method="closed_quadratic",
    )


def quadratic_mean_weight(C: float, mu, x, params: GibbsProxParams) -> float:
    """E[exp(-f(y)/delta)] under y ~ N(x, lam*delta*I) for the quadratic f."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    lam = params.lam
    r2 = float(np.sum((x - mu) ** 2))
    return (C / (C + lam)) ** (d / 2.0) * math.exp(-r2 / (2.0 * params.delta * (C + lam)))


def c1_c2_quadratic(C: float, mu, x, params: GibbsProxParams, d: int) -> dict:
    """Leading bias/variance constants of the sampled estimator, quadratic f.

    Returns {"c1": vector, "c2": float, "phi": float} with

        phi = ((lam+C)/sqrt(C(2lam+C)))^d * exp(lam*r2/(delta*(2lam+C)(lam+C)))
        c1  = lam*(x-mu) / ((2lam+C)(lam+C)) * phi
        c2  = (lam^2 C^2 r2/((2lam+C)^2 (lam+C)^2) + d*lam*delta*C/(2lam+C)) * phi
    """
    if C <= 0:
        raise InvalidInput(f"C must be positive, got {C}")
    mu = np.broadcast_to(np.atleast_1d(np.asarray(mu, dtype=float)), (d,))
    x = np.broadcast_to(np.atleast_1d(np.asarray(x, dtype=float)), (d,))
    lam, delta = params.lam, params.delta
    diff = x - mu
    r2 = float(np.sum(diff**2))
    phi = ((lam + C) / math.sqrt(C * (2 * lam + C))) ** d * math.exp(
        lam * r2 / (delta * (2 * lam + C) * (lam + C))
    )
    c1 = lam * diff / ((2 * lam + C) * (lam + C)) * phi
    c2 = (
        lam**2 * C**2 * r2 / ((2 * lam + C) ** 2 * (lam + C) ** 2)
        + d * lam * delta * C / (2 * lam + C)
    ) * phi
    return {"c1": c1, "c2": float(c2), "phi": float(phi)}


# ---------------------------------------------------------------------------
# Closed forms: absolute value
# ---------------------------------------------------------------------------

def _abs_z1z2(x: float, params: GibbsProxParams):
    s = math.sqrt(2.0 * params.lam * params.delta)
    return (x + params.lam) / s, (params.lam - x) / s


def zprox_abs(x: float, params: GibbsProxParams) -> float:
    """Gibbs proximal point of f = |.| in one dimension.

    Evaluates x + lam*(erfcx(z1)-erfcx(z2))/(erfcx(z1)+erfcx(z2)) through
    log-erfcx differences and tanh, so nothing overflows even for delta
    down to 1e-8.  Odd in x.
    """
    x = float(x)
    z1, z2 = _abs_z1z2(x, params)
    # (e^a - e^b)/(e^a + e^b) = tanh((a - b)/2) with a, b the log-erfcx values
    t = log_erfcx(z1) - log_erfcx(z2)
    return x + params.lam * math.tanh(0.5 * t)


def envelope_abs(x: float, params: GibbsProxParams) -> EnvelopeValue:
    """Closed-form envelope of f = |.|:

        x^2/(2 lam) - delta * log((erfcx(z1) + erfcx(z2))/2).
    """
    x = float(x)
    lam, delta = params.lam, params.delta
    z1, z2 = _abs_z1z2(x, params)
    a, b = log_erfcx(z1), log_erfcx(z2)
    m = max(a, b)
    log_sum = m + math.log(math.exp(a - m) + math.exp(b - m))
    value = x * x / (2.0 * lam) - delta * (log_sum - math.log(2.0))
    zp = zprox_abs(x, params)
    grad = (x - zp) / lam
    return EnvelopeValue(
        value=value,
        gradient=np.array([grad]),
        zprox=np.array([zp]),
        method="closed_abs",
    )


# ---------------------------------------------------------------------------
# 1-D quadrature
# ---------------------------------------------------------------------------

_GH_CACHE: dict = {}


def _gh_nodes(n: int):
    if n not in _GH_CACHE:
        _GH_CACHE[n] = roots_hermite(n)
    return _GH_CACHE[n]


@dataclass(frozen=True)
class _ScanWindow:
    lo: float            # window start
    hi: float            # window end
    peak: float          # location of the smallest scanned phi
    phi_star: float      # smallest scanned phi
    breakpoints: tuple   # interior local minima of phi, for the fallback


def _scan_phi(f: ObjectiveSpec, x: float, params: GibbsProxParams, npts: int = 2001) -> _ScanWindow:
    """Locate where exp(-phi/delta) lives, phi(y) = f(y) + (y-x)^2/(2 lam).

    Expands a symmetric grid around x until both edges sit at least
    60*delta above the interior minimum, and (when a lower bound on f is
    declared) until the Gaussian term alone rules out mass beyond the
    edges.  The returned window is the hull of {phi <= min phi + 60*delta}.
    """
    lam, delta = params.lam, params.delta
    margin = 60.0 * delta
    R = max(40.0 * params.sigma, 1.0)
    for _ in range(80):
        ys = np.linspace(x - R, x + R, npts)
        phi = f.values(ys[:, None]) + (ys - x) ** 2 / (2.0 * lam)
        pstar = float(np.min(phi))
        edges_ok = phi[0] >= pstar + margin and phi[-1] >= pstar + margin
        tail_ok = True
        if f.lower_bound is not None:
            tail_ok = R * R / (2.0 * lam) + f.lower_bound >= pstar + margin
        if edges_ok and tail_ok:
            break
        R *= 2.0
        if R > 1e9:
            raise QuadratureNotConverged(
                "support scan failed to localize the Gibbs posterior", nodes=npts
            )
    inside = np.flatnonzero(phi <= pstar + margin)
    lo = ys[max(inside[0] - 1, 0)]
    hi = ys[min(inside[-1] + 1, npts - 1)]
    interior = (phi[1:-1] < phi[:-2]) & (phi[1:-1] <= phi[2:])
    minima = ys[1:-1][interior]
    minima = minima[(minima > lo) & (minima < hi)]
    if minima.size > 8:
        order = np.argsort(phi[1:-1][interior])
        minima = np.sort(ys[1:-1][interior][order[:8]])
    # A breakpoint that is merely NEAR a kink makes the adaptive integrator
    # trust a panel edge it should not (observed 1e-7-level errors), so each
    # candidate is polished to machine precision first; golden section lands
    # exactly on kinks and is harmless at smooth minima.
    h = ys[1] - ys[0]

    def phi_scalar(y: float) -> float:
        return f.value(np.array([y])) + (y - x) ** 2 / (2.0 * lam)

    polished = [_golden_min(phi_scalar, float(m - h), float(m + h)) for m in minima]
    peak = float(ys[int(np.argmin(phi))])
    peak = _golden_min(phi_scalar, peak - h, peak + h)
    return _ScanWindow(
        lo=float(lo),
        hi=float(hi),
        peak=peak,
        phi_star=min(pstar, phi_scalar(peak)),
        breakpoints=tuple(sorted(set(polished))),
    )


def _golden_min(fn, lo: float, hi: float) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(120):
        if b - a <= 1e-14 * (1.0 + abs(a) + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class _GibbsMoments:
    log_zbar: float  # log E_{y ~ N(x, lam*delta)} [exp(-f(y)/delta)]
    mean: float      # posterior mean (the proximal point)
    var: float       # posterior variance
    nodes: int
    method: str      # "gauss_hermite" | "gauss_kronrod"


def _gh_pass(f: ObjectiveSpec, x: float, params: GibbsProxParams, n: int):
    t, w = _gh_nodes(n)
    s = math.sqrt(2.0 * params.lam * params.delta)
    y = x + s * t
    vals = f.values(y[:, None])
    with np.errstate(divide="ignore"):
        lg = np.log(w) - vals / params.delta
    m = float(np.max(lg))
    if np.isneginf(m):
        raise QuadratureNotConverged("integrand vanished at every node", nodes=n)
    ww = np.exp(lg - m)
    s0 = float(np.sum(ww))
    t1 = float(np.sum(t * ww)) / s0
    t2 = float(np.sum(t * t * ww)) / s0
    log_zbar = m + math.log(s0) - _LOG_SQRT_PI
    mean = x + s * t1
    var = s * s * (t2 - t1 * t1)
    # mass creeping into the outermost nodes means the posterior leaks
    # past the node span and the estimate cannot be trusted
    k = min(8, n // 4)
    edge_ok = max(np.max(lg[:k]), np.max(lg[-k:])) < m - 46.0
    span = (float(y[0]), float(y[-1]))
    return log_zbar, mean, var, edge_ok, span


def _moments_gauss_hermite(
    f: ObjectiveSpec,
    x: float,
    params: GibbsProxParams,
    window: _ScanWindow,
    tol: float,
    node_cap: int,
):
    prev = None
    n = 64
    while n <= node_cap:
        log_zbar, mean, var, edge_ok, span = _gh_pass(f, x, params, n)
        if prev is not None:
            stable = (
                abs(log_zbar - prev[0]) <= tol * (1.0 + abs(log_zbar))
                and abs(mean - prev[1]) <= tol * (1.0 + abs(mean))
                and abs(var - prev[2]) <= tol * (params.sigma2 + abs(var))
            )
            covered = span[0] <= window.lo and span[1] >= window.hi
            if stable and edge_ok and covered:
                return _GibbsMoments(log_zbar, mean, var, n, "gauss_hermite"), prev
        prev = (log_zbar, mean, var)
        n *= 2
    return None, prev


def _moments_gauss_kronrod(
    f: ObjectiveSpec, x: float, params: GibbsProxParams, window: _ScanWindow
) -> _GibbsMoments:
    lam, delta = params.lam, params.delta
    pstar = window.phi_star
    c = window.peak

    def h0(y: float) -> float:
        return math.exp(-(f.value(np.array([y])) + (y - x) ** 2 / (2.0 * lam) - pstar) / delta)

    pts = [p for p in window.breakpoints if window.lo < p < window.hi] or None
    width = window.hi - window.lo
    i0, e0 = quad(h0, window.lo, window.hi, points=pts, limit=500, epsabs=0.0, epsrel=1e-12)
    if not (i0 > 0.0) or e0 > 1e-8 * i0:
        raise QuadratureNotConverged(
            "fallback quadrature did not stabilize", last=i0, previous=e0, nodes=500
        )
    absfloor = 1e-13 * i0 * max(width, 1.0)
    i1, _ = quad(
        lambda y: (y - c) * h0(y),
        window.lo, window.hi, points=pts, limit=500, epsabs=absfloor, epsrel=1e-12,
    )
    i2, _ = quad(
        lambda y: (y - c) ** 2 * h0(y),
        window.lo, window.hi, points=pts, limit=500, epsabs=absfloor * max(width, 1.0), epsrel=1e-12,
    )
    mean = c + i1 / i0
    var = i2 / i0 - (i1 / i0) ** 2
    log_zbar = -pstar / delta + math.log(i0) - 0.5 * math.log(2.0 * math.pi * params.sigma2)
    return _GibbsMoments(log_zbar, mean, float(max(var, 0.0)), 0, "gauss_kronrod")


def _gibbs_moments_1d(
    f: ObjectiveSpec,
    x: float,
    params: GibbsProxParams,
    tol: float = 1e-11,
    node_cap: int = 2048,
) -> _GibbsMoments:
    if f.dim != 1:
        raise NoOracle("quadrature oracle is one-dimensional only")
    window = _scan_phi(f, x, params)
    result, last_pair = _moments_gauss_hermite(f, x, params, window, tol, node_cap)
    if result is not None:
        return result
    try:
        return _moments_gauss_kronrod(f, x, params, window)
    except QuadratureNotConverged as exc:
        raise QuadratureNotConverged(
            f"neither node doubling (cap {node_cap}) nor the adaptive fallback converged",
            last=last_pair,
            previous=exc.last,
            nodes=node_cap,
        ) from exc


def envelope_quadrature_1d(
    f: ObjectiveSpec,
    x: float,
    params: GibbsProxParams,
    tol: float = 1e-11,
    node_cap: int = 2048,
) -> EnvelopeValue:
    """Envelope value, gradient and proximal point by 1-D quadrature."""
    x = float(np.asarray(x).reshape(()))
    mom = _gibbs_moments_1d(f, x, params, tol=tol, node_cap=node_cap)
    value = -params.delta * mom.log_zbar
    grad = (x - mom.mean) / params.lam
    return EnvelopeValue(
        value=value,
        gradient=np.array([grad]),
        zprox=np.array([mom.mean]),
        method="quadrature",
    )


def covariance_quadrature_1d(
    f: ObjectiveSpec,
    x: float,
    params: GibbsProxParams,
    tol: float = 1e-11,
    node_cap: int = 2048,
) -> CovarianceValue:
    """Posterior variance and envelope Hessian at x.

    hessian_env = 1/lam - sigma2/(lam^2 delta) <= 1/lam always.
    """
    x = float(np.asarray(x).reshape(()))
    mom = _gibbs_moments_1d(f, x, params, tol=tol, node_cap=node_cap)
    hess = 1.0 / params.lam - mom.var / (params.lam**2 * params.delta)
    return CovarianceValue(sigma2=mom.var, hessian_env=hess, method=mom.method)


# ---------------------------------------------------------------------------
# Oracle dispatch
# ---------------------------------------------------------------------------

def envelope(f: ObjectiveSpec, x, params: GibbsProxParams) -> EnvelopeValue:
    """Best available exact envelope oracle for f at x.

    Quadratic structure uses the closed form in any dimension; |.| uses the
    erfcx closed form; any other one-dimensional objective goes through
    quadrature.  Raises NoOracle otherwise.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(f.structure, Quadratic):
        return envelope_quadratic(f.structure.C, f.structure.mu, x, params)
    if isinstance(f.structure, AbsValue):
        return envelope_abs(float(x[0]), params)
    if f.dim == 1:
        return envelope_quadrature_1d(f, float(x[0]), params)
    raise NoOracle(
        "no exact oracle: need quadratic structure or a one-dimensional objective"
    )


def zprox_1d(f: ObjectiveSpec, x: float, params: GibbsProxParams) -> float:
    """Scalar proximal point for a one-dimensional objective."""
    if isinstance(f.structure, Quadratic):
        return float(zprox_quadratic(f.structure.C, f.structure.mu, np.array([x]), params)[0])
    if isinstance(f.structure, AbsValue):
        return zprox_abs(x, params)
    return float(envelope_quadrature_1d(f, x, params).zprox[0])


def zprox_inverse_1d(
    f: ObjectiveSpec,
    z: float,
    params: GibbsProxParams,
    bracket: Optional[tuple] = None,
    tol: float = 1e-10,
) -> float:
    """Preimage of z under the proximal map (a monotone 1-D bijection).

    The bracket is expanded geometrically until the map straddles z, then
    solved by bisection refined with inverse interpolation.
    """
    if f.dim != 1:
        raise NoOracle("inverse oracle is one-dimensional only")
    z = float(z)

    def g(x: float) -> float:
        return zprox_1d(f, x, params) - z

    if bracket is None:
        lo, hi = z - 1.0, z + 1.0
    else:
        lo, hi = float(bracket[0]), float(bracket[1])
    glo, ghi = g(lo), g(hi)
    # zprox is increasing, so grow the side that fails the sign condition
    while glo > 0.0 or ghi < 0.0:
        width = hi - lo
        if width > 1e6:
            raise BracketFailure(
                f"no preimage bracket for z={z} within width 1e6 (last [{lo}, {hi}])"
            )
        if glo > 0.0:
            lo -= width
            glo = g(lo)
        if ghi < 0.0:
            hi += width
            ghi = g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    root = brentq(g, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)
    if abs(g(root)) > tol:
        raise BracketFailure(f"inverse residual {g(root):.3e} above {tol}")
    return float(root)


def h_eval_1d(f: ObjectiveSpec, x: float, params: GibbsProxParams) -> float:
    """The auxiliary potential whose classical prox reproduces the operator:

        H(x) = -||T^{-1}(x) - x||^2 / (2 lam delta) + envelope(T^{-1}(x)) / delta.
    """
    x = float(x)
    xinv = zprox_inverse_1d(f, x, params)
    env = envelope(f, np.array([xinv]), params)
    return -((xinv - x) ** 2) / (2.0 * params.sigma2) + env.value / params.delta
