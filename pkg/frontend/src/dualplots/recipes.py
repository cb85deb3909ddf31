"""Figure recipes: one deterministic image per figure id.

Every recipe reads one or more ``dualctl`` result CSVs, groups records by
system size (or another series key), averages the ``value`` column per
group, and plots those arrays as-is — no physics is recomputed here.
Axis scales follow the corresponding paper panels.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = (
    "experiment",
    "seed",
    "realization",
    "param_name",
    "param_value",
    "L",
    "t",
    "observable",
    "value",
    "sem",
)

VOLUME_LAW_DENSITY = 0.386  # random-quadratic entanglement density reference

_FIGSIZE = (4.8, 3.6)
_DPI = 150


class RecipeError(ValueError):
    """Unusable input for a figure recipe."""


# ---------------------------------------------------------------------------
# CSV input.


def load_csv(path) -> tuple:
    """Read one result CSV into (records, metadata)."""
    meta: dict = {}
    rows: list = []
    with open(path, newline="", encoding="utf-8") as fh:
        header = None
        for raw in csv.reader(fh):
            if not raw:
                continue
            if raw[0].startswith("#"):
                body = ",".join(raw)[1:].strip()
                key, _, rest = body.partition(":")
                try:
                    meta[key.strip()] = json.loads(rest.strip())
                except json.JSONDecodeError:
                    meta[key.strip()] = rest.strip()
                continue
            if header is None:
                header = raw
                missing = [c for c in REQUIRED_COLUMNS if c not in header]
                if missing:
                    raise RecipeError(
                        f"{path}: missing columns {missing}; found {header}"
                    )
                continue
            rec = dict(zip(header, raw))
            rec["param_value"] = float(rec["param_value"])
            rec["L"] = int(rec["L"])
            rec["t"] = int(rec["t"])
            rec["value"] = float(rec["value"])
            rows.append(rec)
    if header is None:
        raise RecipeError(f"{path}: no CSV header found")
    if not rows:
        raise RecipeError(f"{path}: no data records")
    return rows, meta


def experiment_name(meta: dict) -> str:
    cfg = meta.get("config", {})
    return cfg.get("experiment", "") if isinstance(cfg, dict) else ""


def group_mean(records, observable, x_key="param_value", series_key="L"):
    """{series: (x array, mean-value array)}, sorted in x, deterministic."""
    rows = [r for r in records if r["observable"] == observable]
    if not rows:
        present = sorted({r["observable"] for r in records})
        raise RecipeError(f"no {observable!r} records (have {present})")
    groups: dict = {}
    for r in rows:
        groups.setdefault((r[series_key], r[x_key]), []).append(r["value"])
    series: dict = {}
    for (s, x), vals in sorted(groups.items()):
        series.setdefault(s, ([], []))
        series[s][0].append(x)
        series[s][1].append(float(np.mean(vals)))
    return {s: (np.array(x), np.array(y)) for s, (x, y) in series.items()}


# ---------------------------------------------------------------------------
# Recipes.  Each takes the per-experiment record lists it declared and an
# Axes; the renderer handles lookup, layout and saving.


def _series_plot(ax, curves, xlabel, ylabel, label_fmt="L={s}", marker="o"):
    for s, (x, y) in sorted(curves.items()):
        ax.plot(x, y, marker=marker, markersize=3.5, label=label_fmt.format(s=s))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)


def fig2a(data, ax):
    curves = group_mean(data["aa-unitary"], "entropy_density")
    _series_plot(ax, curves, r"$\lambda$", r"$S_A/L_A$")
    ax.axhline(VOLUME_LAW_DENSITY, color="k", linestyle="--", linewidth=0.9)
    ax.set_title("unitary circuit, long-time entropy density")


def fig2c(data, ax):
    curves = group_mean(data["aa-dual"], "entropy_density")
    _series_plot(ax, curves, r"$\lambda$", r"$S_A/L_A$")
    ax.set_title("rotated circuit, long-time entropy density")


def fig2d(data, ax):
    curves = group_mean(data["aa-dual"], "entropy",
                        x_key="L", series_key="param_value")
    _series_plot(ax, curves, r"$L$", r"$S_A$", label_fmt=r"$\lambda$={s}")
    ax.set_xscale("log")
    ax.set_title("rotated circuit, entropy vs size")


def fig4a(data, ax):
    curves = group_mean(data["clifford2d"], "entropy_per_l")
    _series_plot(ax, curves, r"$p$", r"$S_A/L$")
    ax.set_title("2D Clifford, unrotated")


def fig4b(data, ax):
    curves = group_mean(data["clifford2d-dual"], "entropy_per_l")
    _series_plot(ax, curves, r"$p$", r"$S_A/L$")
    ax.set_title("2D Clifford, rotated")


def fig5a(data, ax):
    curves = group_mean(data["mbl-eigen"], "entropy_ratio")
    _series_plot(ax, curves, r"$J_x$", r"$S_A/S_R$")
    ax.set_title("eigenstate entanglement ratio")


def fig5b(data, ax):
    curves = group_mean(data["mbl-dual"], "entropy_ratio")
    _series_plot(ax, curves, r"$J_x$", r"$S_A/S_R$")
    ax.set_title("rotated circuit, evolved-state ratio")


def fig5c(data, ax):
    curves = group_mean(data["mbl-ancilla"], "purification_time",
                        x_key="L", series_key="param_value")
    _series_plot(ax, curves, r"$L$", r"$t_p$", label_fmt=r"$J_x$={s}")
    ax.set_title("ancilla purification time")


def fig6(data, ax):
    curves = group_mean(data["correlator"], "correlator")
    _series_plot(ax, curves, r"$J_x$", r"$C(r,0;r,T/2)$")
    ax.set_title("space-time spin correlator")


def fig7(data, ax):
    curves = group_mean(data["ipr"], "ipr_mean")
    _series_plot(ax, curves, r"$\lambda$", "mean IPR")
    ax.set_yscale("log")
    ax.set_title("single-particle participation")


def fig8(data, ax):
    curves = group_mean(data["spectrum"], "window_fraction",
                        series_key="observable")
    x, y = curves["window_fraction"]
    ax.plot(x, y, marker="o", markersize=3.5, label="grid fraction")
    closed = group_mean(data["spectrum"], "half_width_closed",
                        series_key="observable")["half_width_closed"]
    ax.plot(closed[0], np.asarray(closed[1]) * (2.0 / math.pi), linestyle="--",
            label="closed form (scaled)")
    equal = group_mean(data["spectrum"], "window_fraction_equal",
                       series_key="observable")["window_fraction_equal"]
    ax.plot(equal[0], equal[1], marker="s", markersize=3,
            label=r"$\alpha_J=\alpha_h$")
    ax.set_yscale("log")
    ax.set_xlabel(r"$\alpha_h$")
    ax.set_ylabel("real-energy window")
    ax.legend(fontsize=8)


RECIPES = {
    "fig2a": (fig2a, ("aa-unitary",)),
    "fig2c": (fig2c, ("aa-dual",)),
    "fig2d": (fig2d, ("aa-dual",)),
    "fig4a": (fig4a, ("clifford2d",)),
    "fig4b": (fig4b, ("clifford2d-dual",)),
    "fig5a": (fig5a, ("mbl-eigen",)),
    "fig5b": (fig5b, ("mbl-dual",)),
    "fig5c": (fig5c, ("mbl-ancilla",)),
    "fig6": (fig6, ("correlator",)),
    "fig7": (fig7, ("ipr",)),
    "fig8": (fig8, ("spectrum",)),
}


# ---------------------------------------------------------------------------
# Rendering.


def _load_inputs(csv_paths) -> dict:
    data: dict = {}
    for path in csv_paths:
        records, meta = load_csv(path)
        name = experiment_name(meta)
        if not name:
            raise RecipeError(f"{path}: metadata does not name an experiment")
        data.setdefault(name, []).extend(records)
    return data


def render(figure_id: str, csv_paths, out_dir) -> Path:
    """Render one recipe to <out_dir>/<figure_id>.png and return the path."""
    if figure_id not in RECIPES:
        known = ", ".join(sorted(RECIPES))
        raise RecipeError(f"unknown figure id {figure_id!r} (known: {known})")
    recipe, needs = RECIPES[figure_id]
    data = _load_inputs(csv_paths)
    missing = [n for n in needs if n not in data]
    if missing:
        raise RecipeError(
            f"{figure_id} needs CSVs from {missing}; got {sorted(data)}"
        )
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    try:
        recipe(data, ax)
        out = Path(out_dir) / f"{figure_id}.png"
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, metadata={"Software": None})
    finally:
        plt.close(fig)
    return out
