"""Proximal-point iteration loops, parameter schedules, and run traces.

``zoppa_run`` iterates the exact operator through the oracles module;
``szoppa_run`` iterates the sampled estimator on per-iteration derived
streams.  A single run is sequential; callers may execute many runs
concurrently on independent streams and reduce by run index.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import GibbsProxParams, ObjectiveSpec, SeedSpec, derive_stream
from .errors import InvalidInput, InvalidSchedule
from .estimator import szopo
from .oracles import envelope

__all__ = [
    "FixedLambda",
    "FixedSamples",
    "GeometricContinuation",
    "IterationRecord",
    "LambdaSchedule",
    "PolynomialSamples",
    "RunTrace",
    "SampleSchedule",
    "lambda_at",
    "samples_at",
    "szoppa_run",
    "zoppa_run",
]

log = logging.getLogger("zoprox")


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedLambda:
    value: float

    def __post_init__(self):
        if self.value <= 0:
            raise InvalidInput(f"lambda must be positive, got {self.value}")


@dataclass(frozen=True)
class GeometricContinuation:
    """Stepsize decreasing geometrically from start to end over n_values
    stages, switching stage every ``switch_every`` iterations."""

    start: float
    end: float
    n_values: int
    switch_every: int

    def __post_init__(self):
        if not (self.start >= self.end > 0):
            raise InvalidInput("need start >= end > 0 for a decreasing continuation")
        if self.n_values < 1:
            raise InvalidInput("n_values must be at least 1")
        if self.switch_every < 1:
            raise InvalidInput("switch_every must be at least 1")


LambdaSchedule = Union[FixedLambda, GeometricContinuation]


def lambda_at(schedule: LambdaSchedule, k: int) -> float:
    """Stepsize in force at iteration k."""
    if k < 0:
        raise InvalidInput(f"iteration index must be nonnegative, got {k}")
    if isinstance(schedule, FixedLambda):
        return schedule.value
    stage = min(k // schedule.switch_every, schedule.n_values - 1)
    if schedule.n_values == 1:
        return schedule.start
    ratio = schedule.end / schedule.start
    return schedule.start * ratio ** (stage / (schedule.n_values - 1))


@dataclass(frozen=True)
class FixedSamples:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSchedule(f"sample count must be positive, got {self.n}")


@dataclass(frozen=True)
class PolynomialSamples:
    """N_k = ceil(n0 * (k+1)^p).  Requires p > 2 so sum N_k^(-1/2) converges."""

    n0: int
    p: float

    def __post_init__(self):
        if self.n0 < 1:
            raise InvalidSchedule(f"n0 must be positive, got {self.n0}")
        if self.p <= 2:
            raise InvalidSchedule(
                f"polynomial schedule needs p > 2 (got p={self.p}); "
                "sum N_k^(-1/2) must converge"
            )


SampleSchedule = Union[FixedSamples, PolynomialSamples]


def samples_at(schedule: SampleSchedule, k: int) -> int:
    """Sample count at iteration k."""
    if k < 0:
        raise InvalidInput(f"iteration index must be nonnegative, got {k}")
    if isinstance(schedule, FixedSamples):
        return schedule.n
    return int(math.ceil(schedule.n0 * (k + 1) ** schedule.p))


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IterationRecord:
    """Telemetry for the step taken from x at iteration k.

    ``step_norm`` is the realized ||x_{k+1} - x_k||; ``lam``/``delta`` echo
    the parameters in force at step k.  For sampled runs ``env_grad_norm``
    is the surrogate step_norm/lam, flagged via config_echo.
    """

    k: int
    x: np.ndarray
    f_value: float
    env_value: Optional[float]
    env_grad_norm: Optional[float]
    step_norm: float
    ess: Optional[float]
    n_samples: Optional[int]
    lam: float
    delta: float
    mean_weight_log: Optional[float]


@dataclass(frozen=True)
class RunTrace:
    records: tuple
    final_x: np.ndarray
    terminated_by: str  # "max_iter" | "step_tol" | "grad_tol"
    seed: Optional[SeedSpec]
    config_echo: dict
    warnings: tuple = field(default=())

    @property
    def total_path_length(self) -> float:
        return float(sum(r.step_norm for r in self.records))

    @property
    def iterates(self) -> np.ndarray:
        """All visited points, shape (len(records)+1, d)."""
        return np.vstack([np.stack([r.x for r in self.records]), self.final_x[None, :]])


# ---------------------------------------------------------------------------
# Exact loop
# ---------------------------------------------------------------------------

def zoppa_run(
    f: ObjectiveSpec,
    x0,
    params: GibbsProxParams,
    lambda_schedule: Optional[LambdaSchedule] = None,
    max_iter: int = 1000,
    step_tol: float = 1e-10,
    grad_tol: Optional[float] = None,
    config_extra: Optional[dict] = None,
) -> RunTrace:
    """Iterate the exact operator until the step collapses or the budget ends.

    Requires an exact oracle (closed form, or dim=1 for quadrature); the
    envelope value and gradient are recorded every step.  ``params.delta``
    is always in force; ``lambda_schedule`` overrides ``params.lam`` when
    given.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    records = []
    terminated = "max_iter"
    for k in range(max_iter):
        lam_k = lambda_at(lambda_schedule, k) if lambda_schedule is not None else params.lam
        p_k = GibbsProxParams(lam_k, params.delta)
        env = envelope(f, x, p_k)
        x_next = np.asarray(env.zprox, dtype=float)
        step = float(np.linalg.norm(x_next - x))
        grad_norm = float(np.linalg.norm(env.gradient))
        records.append(
            IterationRecord(
                k=k,
                x=x,
                f_value=f.value(x),
                env_value=env.value,
                env_grad_norm=grad_norm,
                step_norm=step,
                ess=None,
                n_samples=None,
                lam=lam_k,
                delta=params.delta,
                mean_weight_log=None,
            )
        )
        x = x_next
        if step < step_tol:
            terminated = "step_tol"
            break
        if grad_tol is not None and grad_norm < grad_tol:
            terminated = "grad_tol"
            break
    echo = {
        "kind": "exact",
        "delta": params.delta,
        "lambda": None if lambda_schedule is not None else params.lam,
        "lambda_schedule": _schedule_echo(lambda_schedule),
        "max_iter": max_iter,
        "step_tol": step_tol,
        "grad_tol": grad_tol,
        "x0": [float(v) for v in np.atleast_1d(np.asarray(x0, dtype=float))],
    }
    if config_extra:
        echo.update(config_extra)
    return RunTrace(
        records=tuple(records),
        final_x=x,
        terminated_by=terminated,
        seed=None,
        config_echo=echo,
    )


# ---------------------------------------------------------------------------
# Sampled loop
# ---------------------------------------------------------------------------

def szoppa_run(
    f: ObjectiveSpec,
    x0,
    params: GibbsProxParams,
    sample_schedule: SampleSchedule,
    max_iter: int,
    seed: SeedSpec,
    lambda_schedule: Optional[LambdaSchedule] = None,
    min_mean_weight: Optional[float] = None,
    step_tol: Optional[float] = None,
    config_extra: Optional[dict] = None,
) -> RunTrace:
    """Iterate the sampled estimator with N_k samples per step.

    Step k consumes the derived stream (seed, k).  Whenever the empirical
    mean weight drops below the floor — by default 1e-12 relative to
    exp(-(best f seen)/delta) — a warning event is recorded (the iteration
    proceeds: the event flags that the convergence theorem's lower-bound
    assumption is no longer checkable, not a failure).
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if not np.all(np.isfinite(x)):
        raise InvalidInput(f"x0 must be finite, got {x0!r}")
    records = []
    warnings: list = []
    terminated = "max_iter"
    best_f = f.value(x)
    for k in range(max_iter):
        lam_k = lambda_at(lambda_schedule, k) if lambda_schedule is not None else params.lam
        p_k = GibbsProxParams(lam_k, params.delta)
        n_k = samples_at(sample_schedule, k)
        est = szopo(f, x, p_k, n_k, derive_stream(seed, k))
        best_f = min(best_f, est.argmin_value)
        if min_mean_weight is not None:
            threshold_log = math.log(min_mean_weight)
        else:
            threshold_log = math.log(1e-12) - best_f / params.delta
        if est.log_mean_weight < threshold_log:
            event = {
                "k": k,
                "log_mean_weight": est.log_mean_weight,
                "threshold_log": threshold_log,
            }
            warnings.append(event)
            log.warning(
                "mean weight underflow at k=%d: log mean weight %.3f < %.3f",
                k, est.log_mean_weight, threshold_log,
            )
        x_next = est.point
        step = float(np.linalg.norm(x_next - x))
        records.append(
            IterationRecord(
                k=k,
                x=x,
                f_value=f.value(x),
                env_value=None,
                env_grad_norm=step / lam_k,
                step_norm=step,
                ess=est.ess,
                n_samples=n_k,
                lam=lam_k,
                delta=params.delta,
                mean_weight_log=est.log_mean_weight,
            )
        )
        x = x_next
        if step_tol is not None and step < step_tol:
            terminated = "step_tol"
            break
    echo = {
        "kind": "sampled",
        "delta": params.delta,
        "lambda": None if lambda_schedule is not None else params.lam,
        "lambda_schedule": _schedule_echo(lambda_schedule),
        "sample_schedule": _schedule_echo(sample_schedule),
        "max_iter": max_iter,
        "step_tol": step_tol,
        "min_mean_weight": min_mean_weight,
        "seed": {"master_seed": seed.master_seed, "stream_path": list(seed.stream_path)},
        "x0": [float(v) for v in np.atleast_1d(np.asarray(x0, dtype=float))],
        "env_grad_norm_is_surrogate": True,
    }
    if config_extra:
        echo.update(config_extra)
    return RunTrace(
        records=tuple(records),
        final_x=x,
        terminated_by=terminated,
        seed=seed,
        config_echo=echo,
        warnings=tuple(warnings),
    )


def _schedule_echo(schedule) -> Optional[dict]:
    if schedule is None:
        return None
    if isinstance(schedule, FixedLambda):
        return {"kind": "fixed", "value": schedule.value}
    if isinstance(schedule, GeometricContinuation):
        return {
            "kind": "geometric",
            "start": schedule.start,
            "end": schedule.end,
            "n_values": schedule.n_values,
            "switch_every": schedule.switch_every,
        }
    if isinstance(schedule, FixedSamples):
        return {"kind": "fixed", "n": schedule.n}
    if isinstance(schedule, PolynomialSamples):
        return {"kind": "polynomial", "n0": schedule.n0, "p": schedule.p}
    raise InvalidInput(f"unknown schedule type {type(schedule)!r}")
