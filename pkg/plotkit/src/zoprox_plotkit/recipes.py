"""Declarative figure recipes over the experiment CSV schema.

A recipe names which columns of which files go on which axes, and nothing
else; the renderer checksums what it plots against what it read, so a
recipe cannot silently transform data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


@dataclass(frozen=True)
class Series:
    path: str                      # CSV file, relative to the data directory
    x: str                         # column for the horizontal axis
    y: str                         # column for the vertical axis
    label: str
    where: Optional[tuple] = None  # (column, value) row selector
    twin: bool = False             # draw on the right-hand axis
    style: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: tuple
    xscale: str = "linear"
    yscale: str = "linear"
    twin_ylabel: Optional[str] = None
    twin_yscale: str = "linear"


@dataclass(frozen=True)
class FigureRecipe:
    name: str
    panels: tuple
    output: str
    metadata: dict = field(default_factory=dict)


def _sidecar_metadata(data_dir: Path, which: str) -> dict:
    sidecar = data_dir / f"{which}.json"
    meta = {"source_dir": str(data_dir)}
    if sidecar.exists():
        payload = json.loads(sidecar.read_text())
        meta["config_hash"] = payload.get("config_hash", "")
        meta["files"] = payload.get("files", {})
    return meta


def fig1c_recipe(data_dir, output) -> FigureRecipe:
    """Single panel: classical prox, exact operator, sampled mean, and the
    mean ESS on a twin axis, against log temperature."""
    csv = "fig1c.csv"
    series = (
        Series(csv, "delta", "prox", "classical prox", style={"ls": "--", "color": "k"}),
        Series(csv, "delta", "zprox_exact", "exact operator", style={"color": "tab:orange"}),
        Series(csv, "delta", "szopo_mean", "sampled (mean)", style={"color": "tab:blue"}),
        Series(csv, "delta", "ess_mean", "mean ESS", twin=True,
               style={"color": "tab:green", "ls": ":"}),
    )
    panel = Panel(
        title="Operator estimates across temperature",
        xlabel="delta", ylabel="estimate", xscale="log",
        twin_ylabel="ESS", twin_yscale="log",
        series=series,
    )
    return FigureRecipe(
        name="fig1c", panels=(panel,), output=str(output),
        metadata=_sidecar_metadata(Path(data_dir), "fig1c"),
    )


def fig3_recipe(data_dir, output, ns=(50, 500, 5000)) -> FigureRecipe:
    """Three panels: the sweep estimates with ESS, then empirical bias and
    variance with one curve per sample budget."""
    sweep = "fig3_sweep.csv"
    bv = "fig3_bias_variance.csv"
    estimates = Panel(
        title="Estimates and ESS",
        xlabel="delta", ylabel="estimate", xscale="log",
        twin_ylabel="ESS", twin_yscale="log",
        series=(
            Series(sweep, "delta", "prox", "classical prox", style={"ls": "--", "color": "k"}),
            Series(sweep, "delta", "zprox_exact", "exact operator", style={"color": "tab:orange"}),
            Series(sweep, "delta", "szopo_mean", "sampled (mean)", style={"color": "tab:blue"}),
            Series(sweep, "delta", "ess_mean", "mean ESS", twin=True,
                   style={"color": "tab:green", "ls": ":"}),
        ),
    )
    bias = Panel(
        title="Empirical bias",
        xlabel="delta", ylabel="bias", xscale="log",
        series=tuple(
            Series(bv, "delta", "bias", f"N={n}", where=("n", float(n)))
            for n in ns
        ),
    )
    variance = Panel(
        title="Empirical variance",
        xlabel="delta", ylabel="variance", xscale="log", yscale="log",
        series=tuple(
            Series(bv, "delta", "variance", f"N={n}", where=("n", float(n)))
            for n in ns
        ),
    )
    return FigureRecipe(
        name="fig3", panels=(estimates, bias, variance), output=str(output),
        metadata=_sidecar_metadata(Path(data_dir), "fig3"),
    )


def fig6_recipe(data_dir, output) -> FigureRecipe:
    """Leading-order theoretical variance vs empirical MSE over the
    distance to the minimizer, ESS in green on the right axis."""
    csv = "fig6.csv"
    panel = Panel(
        title="Asymptotic vs empirical estimator variance",
        xlabel="distance to minimizer", ylabel="squared error", yscale="log",
        twin_ylabel="ESS", twin_yscale="log",
        series=(
            Series(csv, "dist", "var_theory", "theory C2/N", style={"color": "tab:orange"}),
            Series(csv, "dist", "mse", "empirical MSE", style={"color": "tab:blue", "marker": "o"}),
            Series(csv, "dist", "ess_mean", "mean ESS", twin=True,
                   style={"color": "tab:green", "ls": ":"}),
        ),
    )
    return FigureRecipe(
        name="fig6", panels=(panel,), output=str(output),
        metadata=_sidecar_metadata(Path(data_dir), "fig6"),
    )


def fig2_recipe(data_dir, output, objectives=None, configs=None, seeds=None) -> FigureRecipe:
    """Per-seed objective traces, one panel per benchmark, colored by
    stepsize configuration."""
    import csv as _csv

    csv_name = "fig2.csv"
    path = Path(data_dir) / csv_name
    objs, cfgs, seed_vals = [], [], []
    with open(path, newline="") as fh:
        for row in _csv.DictReader(fh):
            objs.append(row["objective"])
            cfgs.append(row["config"])
            seed_vals.append(row["seed"])
    if objectives is None:
        objectives = sorted(set(objs))
    if configs is None:
        configs = sorted(set(cfgs))
    if seeds is None:
        seeds = sorted(set(seed_vals), key=float)
    palette = ["tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple", "tab:brown"]
    panels = []
    for obj in objectives:
        series = []
        for ci, cfg in enumerate(configs):
            color = palette[ci % len(palette)]
            for si, s in enumerate(seeds):
                series.append(
                    Series(
                        csv_name, "iter", "f",
                        label=cfg if si == 0 else "",
                        where=(("objective", obj), ("config", cfg), ("seed", float(s))),
                        style={"color": color, "alpha": 0.35, "lw": 0.8},
                    )
                )
        panels.append(
            Panel(title=obj, xlabel="iteration", ylabel="f", series=tuple(series))
        )
    return FigureRecipe(
        name="fig2", panels=tuple(panels), output=str(output),
        metadata=_sidecar_metadata(Path(data_dir), "fig2"),
    )


def fig5_recipe(data_dir, output, objectives=("abs", "quadratic", "wiggly1d"),
                lambdas=(0.01, 0.1, 1.0, 10.0, 35.0)) -> FigureRecipe:
    """Envelope shape per stepsize, one panel per 1-D objective."""
    csv_name = "fig5.csv"
    palette = ["tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple"]
    panels = []
    for obj in objectives:
        series = [
            Series(csv_name, "x", "f", "objective",
                   where=(("objective", obj), ("lambda", lambdas[0])),
                   style={"color": "k", "lw": 1.2}),
        ]
        for li, lam in enumerate(lambdas):
            series.append(
                Series(csv_name, "x", "env_value", f"lambda={lam}",
                       where=(("objective", obj), ("lambda", float(lam))),
                       style={"color": palette[li % len(palette)], "lw": 1.0})
            )
        panels.append(Panel(title=obj, xlabel="x", ylabel="value", series=tuple(series)))
    return FigureRecipe(
        name="fig5", panels=tuple(panels), output=str(output),
        metadata=_sidecar_metadata(Path(data_dir), "fig5"),
    )


_BUILDERS = {
    "fig1c": fig1c_recipe,
    "fig2": fig2_recipe,
    "fig3": fig3_recipe,
    "fig5": fig5_recipe,
    "fig6": fig6_recipe,
}


def recipe_for(which: str, data_dir, output) -> FigureRecipe:
    if which not in _BUILDERS:
        raise KeyError(f"unknown figure {which!r}; choose from {sorted(_BUILDERS)}")
    return _BUILDERS[which](data_dir, output)
