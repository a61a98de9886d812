"""Figure rendering for sweep rows. Headless (Agg); one PNG per experiment."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

golden_mean = (math.sqrt(5) - 1.0) / 2.0
fig_width = 5.0

params = {
    "axes.labelsize": 10,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 150,
    "lines.linewidth": 1.2,
    "lines.markersize": 3,
}


def new():
    with plt.rc_context(params):
        fig, ax = plt.subplots()
    return fig, ax


def save(fig, path):
    with plt.rc_context(params):
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def fig3(rows, path):
    fig, ax = new()
    curves = defaultdict(list)
    base = {}
    for r in rows:
        if r["policy"] == "zero_wait":
            base[r["alpha"]] = (r["err"], r["aoi"])
        else:
            curves[r["alpha"]].append((r["err"], r["aoi"]))
    for alpha in sorted(curves):
        pts = sorted(curves[alpha])
        line, = ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=rf"$\alpha={alpha:g}$")
        if alpha in base:
            ax.plot(*base[alpha], marker="x", markersize=7, color=line.get_color(), linestyle="none")
    ax.plot([], [], marker="x", color="k", linestyle="none", label="zero-wait")
    ax.set_xlabel("time-stamp error")
    ax.set_ylabel("AoI")
    ax.legend()
    save(fig, path)


def fig4(rows, path):
    fig, ax = new()
    curves = defaultdict(list)
    for r in rows:
        curves[(r["alpha1"], r["policy"])].append((r["sum_err"], r["sum_aoi"]))
    colors = {}
    for (alpha1, policy) in sorted(curves):
        pts = sorted(curves[(alpha1, policy)])
        kw = {"color": colors[alpha1]} if alpha1 in colors else {}
        line, = ax.plot(
            [p[0] for p in pts], [p[1] for p in pts],
            linestyle="-" if policy == "RR" else "--", marker="o" if policy == "RR" else "s",
            label=rf"{policy}, $\alpha_1={alpha1:g}$", **kw,
        )
        colors.setdefault(alpha1, line.get_color())
    ax.set_xlabel("sum time-stamp error")
    ax.set_ylabel("sum AoI")
    ax.legend(ncol=2)
    save(fig, path)


def fig5(rows, path):
    fig, ax = new()
    xs = list(range(len(rows)))
    w = 0.38
    b1 = ax.bar([x - w / 2 for x in xs], [r["m1"] for r in rows], w, label=r"$m_1^*$")
    b2 = ax.bar([x + w / 2 for x in xs], [r["m2"] for r in rows], w, label=r"$m_2^*$")
    ax.bar_label(b1, fontsize=7)
    ax.bar_label(b2, fontsize=7)
    ax.set_xticks(xs, [f"{r['alpha1']:g}" for r in rows])
    ax.set_xlabel(r"server 1 recovery rate $\alpha_1$")
    ax.set_ylabel("optimal number of trials")
    ax.legend()
    save(fig, path)


RENDERERS = {"fig3": fig3, "fig4": fig4, "fig5": fig5}


def render(kind: str, rows, path) -> Path:
    RENDERERS[kind](rows, path)
    return Path(path)
