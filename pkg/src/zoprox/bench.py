"""Objective corpus: analytic test functions and dim-10 nonconvex standards.

Every entry carries a vectorized evaluator, its conventional domain box,
the known minimum when one exists, and whatever analytic constants the
bound calculators can use.  Evaluators are partials of module-level
functions so entries pickle cleanly across process pools.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Optional

import numpy as np

from .core import (
    AbsValue,
    Generic,
    KappaPlusBounded,
    ObjectiveSpec,
    Quadratic,
    SeedSpec,
    generator,
)
from .errors import InvalidInput

__all__ = [
    "PRESET_SEED",
    "BenchmarkEntry",
    "corpus",
    "get_entry",
    "make_quadratic",
    "random_x0",
]

# Passing this sentinel seed to random_x0 selects an entry's named preset
# start instead of drawing (the 1-D study always starts at x0 = 3).
PRESET_SEED = SeedSpec(master_seed=0, stream_path=())

# sup |f''| of the wiggly objective on [-5, 5], dense-sampled and frozen;
# validated against fresh sampling in the test suite
_WIGGLY_L = 215.8194
# dense scan + Brent polish of the global minimum
_WIGGLY_MIN_X = -0.464181923279425
_WIGGLY_MIN_F = -1.3897880908518505


@dataclass(frozen=True)
class BenchmarkEntry:
    name: str
    objective: ObjectiveSpec
    known_min: Optional[tuple]  # (point, value)
    default_domain: tuple       # (lo, hi) arrays of shape (dim,)
    declared_constants: dict
    preset_x0: Optional[np.ndarray] = None


# --- evaluators (module level so ObjectiveSpec pickles) ---------------------

def _abs_point(p):
    return abs(float(p[0]))


def _abs_batch(P):
    return np.abs(P[:, 0])


def _quad_point(p, mu, C):
    return float(np.sum((p - mu) ** 2)) / (2.0 * C)


def _quad_batch(P, mu, C):
    return np.sum((P - mu[None, :]) ** 2, axis=1) / (2.0 * C)


def _wiggly_scalar(x: float) -> float:
    return 0.3 * x * x + math.sin(4.0 * x) + 0.5 * math.cos(20.0 * x)


def _wiggly_point(p):
    return _wiggly_scalar(float(p[0]))


def _wiggly_batch(P):
    x = P[:, 0]
    return 0.3 * x**2 + np.sin(4.0 * x) + 0.5 * np.cos(20.0 * x)


def _rastrigin_batch(P):
    return 10.0 * P.shape[1] + np.sum(P**2 - 10.0 * np.cos(2.0 * np.pi * P), axis=1)


def _ackley_batch(P):
    d = P.shape[1]
    s1 = np.sqrt(np.sum(P**2, axis=1) / d)
    s2 = np.sum(np.cos(2.0 * np.pi * P), axis=1) / d
    return -20.0 * np.exp(-0.2 * s1) - np.exp(s2) + 20.0 + math.e


def _levy_batch(P):
    w = 1.0 + (P - 1.0) / 4.0
    head = np.sin(np.pi * w[:, 0]) ** 2
    mid = np.sum((w[:, :-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:, :-1] + 1.0) ** 2), axis=1)
    tail = (w[:, -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[:, -1]) ** 2)
    return head + mid + tail


def _point_from_batch(p, batch):
    return float(batch(p[None, :])[0])


# --- entries ----------------------------------------------------------------

def _abs_entry() -> BenchmarkEntry:
    obj = ObjectiveSpec(
        dim=1,
        eval=_abs_point,
        eval_batch=_abs_batch,
        lower_bound=0.0,
        structure=AbsValue(),
    )
    return BenchmarkEntry(
        name="abs",
        objective=obj,
        known_min=(np.zeros(1), 0.0),
        default_domain=(np.array([-5.0]), np.array([5.0])),
        declared_constants={"G": 1.0},
    )


def make_quadratic(C: float = 1.0, mu=0.0, dim: int = 1) -> BenchmarkEntry:
    """f(y) = ||y - mu||^2 / (2C) in any dimension."""
    if C <= 0:
        raise InvalidInput(f"C must be positive, got {C}")
    mu_vec = np.broadcast_to(np.atleast_1d(np.asarray(mu, dtype=float)), (dim,)).copy()
    obj = ObjectiveSpec(
        dim=dim,
        eval=partial(_quad_point, mu=mu_vec, C=C),
        eval_batch=partial(_quad_batch, mu=mu_vec, C=C),
        lower_bound=0.0,
        structure=Quadratic(C, mu_vec),
    )
    return BenchmarkEntry(
        name="quadratic",
        objective=obj,
        known_min=(mu_vec, 0.0),
        default_domain=(mu_vec - 5.0, mu_vec + 5.0),
        declared_constants={"L": 1.0 / C, "C": C},
    )


def _wiggly_entry() -> BenchmarkEntry:
    obj = ObjectiveSpec(
        dim=1,
        eval=_wiggly_point,
        eval_batch=_wiggly_batch,
        lower_bound=_WIGGLY_MIN_F,
        structure=KappaPlusBounded(kappa=0.6, osc_V=3.0),
    )
    return BenchmarkEntry(
        name="wiggly1d",
        objective=obj,
        known_min=(np.array([_WIGGLY_MIN_X]), _WIGGLY_MIN_F),
        default_domain=(np.array([-5.0]), np.array([5.0])),
        declared_constants={"kappa": 0.6, "osc": 3.0, "L": _WIGGLY_L},
        preset_x0=np.array([3.0]),
    )


def _standard_entry(name: str, batch, dim: int, box: float, min_point: float) -> BenchmarkEntry:
    obj = ObjectiveSpec(
        dim=dim,
        eval=partial(_point_from_batch, batch=batch),
        eval_batch=batch,
        lower_bound=0.0,
        structure=Generic(),
    )
    x_star = np.full(dim, min_point)
    return BenchmarkEntry(
        name=name,
        objective=obj,
        known_min=(x_star, 0.0),
        default_domain=(np.full(dim, -box), np.full(dim, box)),
        declared_constants={},
    )


def corpus() -> tuple:
    """The benchmark corpus, addressable by name."""
    return (
        _abs_entry(),
        make_quadratic(C=1.0, mu=0.0, dim=1),
        _wiggly_entry(),
        _standard_entry("rastrigin10", _rastrigin_batch, 10, 5.12, 0.0),
        _standard_entry("ackley10", _ackley_batch, 10, 32.768, 0.0),
        _standard_entry("levy10", _levy_batch, 10, 10.0, 1.0),
    )


def get_entry(name: str, C: Optional[float] = None, mu=None, dim: Optional[int] = None) -> BenchmarkEntry:
    """Corpus entry by name; the quadratic accepts C/mu/dim overrides."""
    if name == "quadratic":
        return make_quadratic(
            C=1.0 if C is None else C,
            mu=0.0 if mu is None else mu,
            dim=1 if dim is None else dim,
        )
    for entry in corpus():
        if entry.name == name:
            return entry
    known = ", ".join(e.name for e in corpus())
    raise InvalidInput(f"unknown objective {name!r}; corpus: {known}")


def random_x0(entry: BenchmarkEntry, seed: SeedSpec) -> np.ndarray:
    """Uniform draw from the entry's domain box, deterministic per seed.

    Passing :data:`PRESET_SEED` returns the entry's named preset start
    exactly when one is defined.
    """
    if seed == PRESET_SEED and entry.preset_x0 is not None:
        return entry.preset_x0.copy()
    lo, hi = entry.default_domain
    u = generator(seed).random(entry.objective.dim)
    return lo + u * (hi - lo)
