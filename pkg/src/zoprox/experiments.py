"""Reusable experiment drivers behind the CLI figure commands.

Each driver is a pure function of its configuration and master seed,
returning plain column dictionaries ready for the table writers.  Anything
parallelized runs over per-item derived streams and reduces in item order,
so results are independent of the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
import numpy as np

from .algorithms import (
    FixedLambda,
    FixedSamples,
    GeometricContinuation,
    szoppa_run,
)
from .bench import get_entry, random_x0
from .core import GibbsProxParams, SeedSpec, derive_stream, generator
from .estimator import bias_variance_study, ess_delta_sweep
from .oracles import c1_c2_quadratic, quadratic_mean_weight, zprox_abs, zprox_quadratic

__all__ = [
    "bias_asymptotics_quadratic",
    "bias_variance_vs_delta",
    "continuation_comparison",
    "delta_sweep_abs",
    "escape_frequency",
    "parallel_map",
    "szoppa_quadratic_study",
    "variance_vs_distance",
]


def parallel_map(fn, items, n_jobs: int = 1) -> list:
    """Order-preserving map, optionally across processes.

    The reduction order is the item order, so outputs are identical for any
    n_jobs.
    """
    items = list(items)
    if n_jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * n_jobs))))


# ---------------------------------------------------------------------------
# Temperature sweeps on f = |x|  (figures 1c and 3)
# ---------------------------------------------------------------------------

def classical_prox_abs(x: float, lam: float) -> float:
    return math.copysign(max(abs(x) - lam, 0.0), x)


def delta_sweep_abs(
    deltas,
    x: float = 2.0,
    lam: float = 1.0,
    n: int = 5000,
    trials: int = 100,
    seed: SeedSpec = SeedSpec(0),
) -> dict:
    """Exact operator, sampled estimator, classical prox, and mean ESS
    across a logarithmic temperature sweep."""
    entry = get_entry("abs")
    sweep = ess_delta_sweep(entry.objective, np.array([x]), lam, deltas, n, trials, seed)
    zexact = [zprox_abs(x, GibbsProxParams(lam, float(d))) for d in sweep.deltas]
    return {
        "delta": [float(d) for d in sweep.deltas],
        "prox": [classical_prox_abs(x, lam)] * sweep.deltas.size,
        "zprox_exact": zexact,
        "szopo_mean": [float(v) for v in sweep.mean_points[:, 0]],
        "ess_mean": [float(v) for v in sweep.mean_ess],
    }


def bias_variance_vs_delta(
    deltas,
    ns=(50, 500, 5000),
    x: float = 2.0,
    lam: float = 1.0,
    trials: int = 100,
    seed: SeedSpec = SeedSpec(0),
) -> dict:
    """Empirical bias and variance of the estimator per sample budget."""
    entry = get_entry("abs")
    cols: dict = {"n": [], "delta": [], "bias": [], "variance": [], "mse": [], "ess_mean": []}
    for i, n in enumerate(ns):
        sweep = ess_delta_sweep(
            entry.objective, np.array([x]), lam, deltas, int(n), trials, derive_stream(seed, i)
        )
        for j, d in enumerate(sweep.deltas):
            exact = zprox_abs(x, GibbsProxParams(lam, float(d)))
            pts = sweep.points[:, j, 0]
            cols["n"].append(int(n))
            cols["delta"].append(float(d))
            cols["bias"].append(float(pts.mean() - exact))
            cols["variance"].append(float(pts.var(ddof=1)))
            cols["mse"].append(float(np.mean((pts - exact) ** 2)))
            cols["ess_mean"].append(float(sweep.ess[:, j].mean()))
    return cols


# ---------------------------------------------------------------------------
# Quadratic asymptotics  (figure 6 and the bias study)
# ---------------------------------------------------------------------------

def variance_vs_distance(
    dists,
    d: int = 2,
    delta: float = 1.0,
    lam: float = 0.5,
    C: float = 1.0,
    n: int = 1000,
    trials: int = 500,
    seed: SeedSpec = SeedSpec(0),
    n_jobs: int = 1,
) -> dict:
    """Theoretical leading variance vs empirical MSE as x moves away from
    the minimizer."""
    items = [
        (float(dist), d, delta, lam, C, n, trials,
         derive_stream(seed, i).master_seed, derive_stream(seed, i).stream_path)
        for i, dist in enumerate(dists)
    ]
    rows = parallel_map(_variance_at_distance, items, n_jobs)
    cols: dict = {k: [] for k in ("dist", "c2", "var_theory", "mse", "mse_times_n", "ess_mean")}
    for row in rows:
        for k in cols:
            cols[k].append(row[k])
    return cols


def _variance_at_distance(item) -> dict:
    dist, d, delta, lam, C, n, trials, master, path = item
    seed = SeedSpec(master, path)
    params = GibbsProxParams(lam, delta)
    entry = get_entry("quadratic", C=C, mu=0.0, dim=d)
    x = np.zeros(d)
    x[0] = dist
    reference = zprox_quadratic(C, np.zeros(d), x, params)
    study = bias_variance_study(entry.objective, x, params, n, trials, reference, seed)
    c2 = c1_c2_quadratic(C, np.zeros(d), x, params, d)["c2"]
    return {
        "dist": dist,
        "c2": c2,
        "var_theory": c2 / n,
        "mse": study.mse,
        "mse_times_n": study.mse * n,
        "ess_mean": study.mean_ess,
    }


def bias_asymptotics_quadratic(
    ns,
    dist: float = 1.0,
    d: int = 1,
    delta: float = 1.0,
    lam: float = 0.5,
    C: float = 1.0,
    trials: int = 500,
    seed: SeedSpec = SeedSpec(0),
) -> dict:
    """Estimator bias times N against its asymptotic constant.

    Uses the control-variate column of the study: the plain trial mean
    cannot resolve an O(1/N) bias at these budgets.
    """
    params = GibbsProxParams(lam, delta)
    entry = get_entry("quadratic", C=C, mu=0.0, dim=d)
    x = np.zeros(d)
    x[0] = dist
    reference = zprox_quadratic(C, np.zeros(d), x, params)
    v_exact = quadratic_mean_weight(C, np.zeros(d), x, params)
    c1 = c1_c2_quadratic(C, np.zeros(d), x, params, d)["c1"]
    cols: dict = {
        "n": [], "c1": [], "bias_plain": [], "bias_controlled": [],
        "bias_controlled_se": [], "bias_times_n": [], "ess_mean": [],
    }
    for i, n in enumerate(ns):
        study = bias_variance_study(
            entry.objective, x, params, int(n), trials, reference,
            derive_stream(seed, i), exact_mean_weight=v_exact,
        )
        cols["n"].append(int(n))
        cols["c1"].append(float(c1[0]))
        cols["bias_plain"].append(float(study.mean_bias[0]))
        cols["bias_controlled"].append(float(study.mean_bias_controlled[0]))
        cols["bias_controlled_se"].append(float(study.se_bias_controlled[0]))
        cols["bias_times_n"].append(float(study.mean_bias_controlled[0] * int(n)))
        cols["ess_mean"].append(study.mean_ess)
    return cols


# ---------------------------------------------------------------------------
# Continuation vs fixed stepsize  (figure 2)
# ---------------------------------------------------------------------------

def continuation_comparison(
    objective: str,
    n_samples: int,
    iters: int,
    seeds,
    fixed_lambdas=(0.01, 0.1, 1.0, 10.0),
    lam_start: float = 10.0,
    lam_end: float = 0.01,
    n_values: int = 10,
    delta: float = 1.0,
    seed: SeedSpec = SeedSpec(0),
    use_preset_x0: bool = False,
    n_jobs: int = 1,
) -> dict:
    """Sampled runs under each fixed stepsize and the geometric continuation.

    Per seed, every configuration consumes the same derived stream (paired
    randomness), which is what makes the per-seed comparison meaningful.
    Returns long-format columns (objective, config, seed, iter, f); the row
    at iter == iters carries f at the final point.
    """
    configs = [("fixed:" + repr(float(lv)), FixedLambda(float(lv))) for lv in fixed_lambdas]
    switch_every = max(1, iters // n_values)
    configs.append(
        (
            f"continuation:{lam_start}->{lam_end}",
            GeometricContinuation(lam_start, lam_end, n_values, switch_every),
        )
    )
    items = []
    for config_name, schedule in configs:
        for s in seeds:
            items.append(
                (objective, n_samples, iters, delta, config_name,
                 _schedule_to_tuple(schedule), int(s), seed.master_seed,
                 seed.stream_path, use_preset_x0)
            )
    results = parallel_map(_continuation_worker, items, n_jobs)
    cols: dict = {"objective": [], "config": [], "seed": [], "iter": [], "f": []}
    for item, fvals in zip(items, results):
        config_name, s = item[4], item[6]
        for k, fv in enumerate(fvals):
            cols["objective"].append(objective)
            cols["config"].append(config_name)
            cols["seed"].append(s)
            cols["iter"].append(k)
            cols["f"].append(fv)
    return cols


def _schedule_to_tuple(schedule):
    if isinstance(schedule, FixedLambda):
        return ("fixed", schedule.value)
    return ("geometric", schedule.start, schedule.end, schedule.n_values, schedule.switch_every)


def _schedule_from_tuple(t):
    if t[0] == "fixed":
        return FixedLambda(t[1])
    return GeometricContinuation(t[1], t[2], t[3], t[4])


def _continuation_worker(item):
    (objective, n_samples, iters, delta, _config_name, schedule_t,
     s, master, path, use_preset) = item
    entry = get_entry(objective)
    schedule = _schedule_from_tuple(schedule_t)
    if use_preset and entry.preset_x0 is not None:
        x0 = entry.preset_x0
    else:
        x0 = random_x0(entry, SeedSpec(master, tuple(path) + (9999, s)))
    run_seed = SeedSpec(master, tuple(path) + (int(s),))
    trace = szoppa_run(
        entry.objective,
        x0,
        GibbsProxParams(1.0, delta),
        FixedSamples(n_samples),
        iters,
        run_seed,
        lambda_schedule=schedule,
    )
    fvals = [r.f_value for r in trace.records]
    fvals.append(entry.objective.value(trace.final_x))
    return fvals


def final_f_table(cols: dict) -> dict:
    """Final objective value per (objective, config, seed) from long format."""
    finals: dict = {}
    for obj, cfg, s, k, fv in zip(cols["objective"], cols["config"], cols["seed"], cols["iter"], cols["f"]):
        key = (obj, cfg, s)
        if key not in finals or k > finals[key][0]:
            finals[key] = (k, fv)
    return {key: fv for key, (k, fv) in finals.items()}


# ---------------------------------------------------------------------------
# Escape frequency  (ball-exit bound check)
# ---------------------------------------------------------------------------

def escape_frequency(
    batches: int = 10000,
    n: int = 1,
    d: int = 4,
    alpha: float = 4.0,
    lam: float = 1.0,
    delta: float = 1.0,
    seed: SeedSpec = SeedSpec(0),
) -> dict:
    """Empirical frequency of a batch's max squared displacement exceeding
    R = alpha * d * lam * delta."""
    params = GibbsProxParams(lam, delta)
    R = alpha * d * params.sigma2
    rng = generator(seed)
    eps = rng.standard_normal((batches, n, d))
    sq = params.sigma2 * np.sum(eps**2, axis=2)
    exceed = np.max(sq, axis=1) >= R
    freq = float(np.mean(exceed))
    return {
        "batches": batches,
        "n": n,
        "d": d,
        "alpha": alpha,
        "R": R,
        "frequency": freq,
        "se": math.sqrt(max(freq * (1 - freq), 1.0 / batches) / batches),
    }


# ---------------------------------------------------------------------------
# Sampled-iteration convergence study
# ---------------------------------------------------------------------------

def szoppa_quadratic_study(
    runs: int = 100,
    d: int = 2,
    C: float = 1.0,
    lam: float = 1.0,
    delta: float = 1.0,
    n0: int = 100,
    p: float = 3.0,
    iters: int = 50,
    x0=None,
    seed: SeedSpec = SeedSpec(0),
    n_jobs: int = 1,
) -> dict:
    """Distance to the minimizer after a polynomially sampled run, per seed."""
    x0 = np.full(d, 2.0) if x0 is None else np.asarray(x0, dtype=float)
    items = [
        (d, C, lam, delta, n0, p, iters, tuple(float(v) for v in x0),
         seed.master_seed, seed.stream_path, r)
        for r in range(runs)
    ]
    rows = parallel_map(_szoppa_study_worker, items, n_jobs)
    return {
        "run": list(range(runs)),
        "final_dist": [r[0] for r in rows],
        "warning_count": [r[1] for r in rows],
        "min_ess": [r[2] for r in rows],
    }


def _szoppa_study_worker(item):
    from .algorithms import PolynomialSamples

    d, C, lam, delta, n0, p, iters, x0, master, path, r = item
    entry = get_entry("quadratic", C=C, mu=0.0, dim=d)
    trace = szoppa_run(
        entry.objective,
        np.array(x0),
        GibbsProxParams(lam, delta),
        PolynomialSamples(n0, p),
        iters,
        SeedSpec(master, tuple(path) + (r,)),
    )
    dist = float(np.linalg.norm(trace.final_x - np.zeros(d)))
    min_ess = min(rec.ess for rec in trace.records)
    return dist, len(trace.warnings), min_ess
