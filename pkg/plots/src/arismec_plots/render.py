"""CSV loading, seed averaging, and the three figure families.

Rendering is a pure function of the CSV contents: rows are regrouped by
sorted keys, so the layout does not depend on row order, and the figure
style is pinned (Agg backend, fixed size and dpi).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FAMILIES = {
    "converge": "arismec/converge/v1",
    "sweep-m": "arismec/sweep-m/v1",
    "sweep-loc": "arismec/sweep-loc/v1",
}


class SchemaError(ValueError):
    """The CSV is missing or does not carry the expected schema tag."""


@dataclass
class PlotSpec:
    input_path: str | Path
    family: str
    output_path: str | Path
    dpi: int = 150
    figsize: tuple = (6.4, 4.2)
    title: str | None = None


def load_rows(path, family: str):
    """Parsed rows of a schema-tagged CSV; raises SchemaError on mismatch."""
    if family not in FAMILIES:
        raise SchemaError(f"unknown figure family {family!r}")
    text = Path(path).read_text()
    lines = text.splitlines()
    tag = None
    for ln in lines:
        if ln.startswith("# schema:"):
            tag = ln.split(":", 1)[1].strip()
            break
    expected = FAMILIES[family]
    if tag != expected:
        raise SchemaError(f"expected schema {expected!r}, found {tag!r}")
    return list(csv.DictReader(ln for ln in lines if not ln.startswith("#")))


def average_traces(rows):
    """Seed-averaged objective trace per element count.

    Seeds stop at different iterations; shorter runs hold their final
    value, so the average at iteration t uses every seed.
    Returns {m: (iterations, mean_mcl)} with m ascending.
    """
    per_run = {}
    for r in rows:
        key = (int(r["m"]), int(r["seed"]))
        per_run.setdefault(key, {})[int(r["iter"])] = float(r["mcl_s"])
    out = {}
    for m in sorted({m for m, _ in per_run}):
        runs = [v for (mm, _), v in sorted(per_run.items()) if mm == m]
        horizon = max(max(v) for v in runs)
        curves = np.array([[v.get(t, v[max(v)])
                            for t in range(1, horizon + 1)] for v in runs])
        out[m] = (np.arange(1, horizon + 1), curves.mean(axis=0))
    return out


def average_final(rows, group_fields, x_field, value_field="mcl_s"):
    """Seed statistics of a final value along one sweep axis.

    Returns {group: (x, mean, lo, hi)} with x ascending per group; lo/hi
    are the min/max over seeds.
    """
    buckets = {}
    for r in rows:
        group = tuple(r[f] for f in group_fields)
        x = float(r[x_field])
        buckets.setdefault(group, {}).setdefault(x, []).append(float(r[value_field]))
    out = {}
    for group in sorted(buckets):
        xs = np.array(sorted(buckets[group]))
        vals = [np.array(buckets[group][x]) for x in xs]
        out[group] = (xs,
                      np.array([v.mean() for v in vals]),
                      np.array([v.min() for v in vals]),
                      np.array([v.max() for v in vals]))
    return out


def _user_columns(rows):
    if not rows:
        return []
    return sorted((c for c in rows[0] if c.startswith("t_user_")),
                  key=lambda c: int(c.rsplit("_", 1)[1]))


def _empty_axes(ax, message: str):
    ax.text(0.5, 0.5, message, ha="center", va="center",
            transform=ax.transAxes, color="tab:red")


def _render_converge(ax, rows):
    curves = average_traces(rows)
    if not curves:
        _empty_axes(ax, "no data rows in convergence CSV")
    for m, (its, mean) in curves.items():
        ax.plot(its, mean, marker="o", markersize=3, label=f"M = {m}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("max latency [s]")
    if curves:
        ax.legend()


def _render_sweep_m(ax, rows):
    stats = average_final(rows, ("variant", "p_tot_mw"), "m")
    if not stats:
        _empty_axes(ax, "no data rows in element-sweep CSV")
    for (variant, p_mw), (xs, mean, lo, hi) in stats.items():
        line, = ax.plot(xs, mean, marker="o", markersize=3,
                        label=f"{variant}, {float(p_mw):g} mW")
        ax.fill_between(xs, lo, hi, alpha=0.15, color=line.get_color())
    ax.set_xlabel("reflecting elements")
    ax.set_ylabel("max latency [s]")
    if stats:
        ax.legend()


def _render_sweep_loc(ax, rows):
    stats = average_final(rows, ("variant",), "x_ris_m")
    if not stats:
        _empty_axes(ax, "no data rows in location-sweep CSV")
    for (variant,), (xs, mean, lo, hi) in stats.items():
        line, = ax.plot(xs, mean, marker="o", markersize=3, label=variant)
        ax.fill_between(xs, lo, hi, alpha=0.15, color=line.get_color())
        for col in _user_columns(rows):
            _, umean, _, _ = average_final(rows, ("variant",), "x_ris_m",
                                           value_field=col)[(variant,)]
            ax.plot(xs, umean, linestyle="--", linewidth=0.9,
                    label=f"{variant} user {col.rsplit('_', 1)[1]}")
    ax.set_xlabel("surface x [m]")
    ax.set_ylabel("latency [s]")
    if stats:
        ax.legend(fontsize=8)


_RENDERERS = {
    "converge": _render_converge,
    "sweep-m": _render_sweep_m,
    "sweep-loc": _render_sweep_loc,
}


def render(spec: PlotSpec) -> Path:
    """Render one figure family from its CSV; returns the output path."""
    rows = load_rows(spec.input_path, spec.family)
    fig, ax = plt.subplots(figsize=spec.figsize)
    try:
        _RENDERERS[spec.family](ax, rows)
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
        out = Path(spec.output_path)
        fig.savefig(out, dpi=spec.dpi)
    finally:
        plt.close(fig)
    return out
