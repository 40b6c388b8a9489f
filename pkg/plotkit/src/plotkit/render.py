"""Phase heatmaps and scatter grids for the recovery experiment CSV schemas.

phase.csv:   n,p,s,fail_prob,red_region,blue_region
scatter.csv: system_id,n,m,p,s,nsc_cpsi_lo,nsc_cpsi_hi,nsc_pg_lo,nsc_pg_hi

Phase panels (one per n) show the empirical probability of imperfect joint
recovery over the (s, p) grid with a log color scale; cells with zero failures
are painted white. Red outlines surround cells whose systems all violate the
necessary condition, blue outlines cells whose systems all satisfy the
sufficient one. Scatter panels plot interval midpoints of the two constants
against each other with the diagonal, the impossible sub-diagonal region
shaded, and the near-one-half bands marked.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import LineCollection
from matplotlib.colors import LogNorm

_PHASE_COLUMNS = ("n", "p", "s", "fail_prob", "red_region", "blue_region")
_SCATTER_COLUMNS = ("system_id", "n", "m", "p", "s", "nsc_cpsi_lo", "nsc_cpsi_hi", "nsc_pg_lo", "nsc_pg_hi")


@dataclass
class PlotSpec:
    input_csv: str
    output_path: str
    kind: str  # "phase" or "scatter"
    panel_keys: tuple[str, ...] = ()
    tol: float = 0.05
    dpi: int = 150

    def __post_init__(self) -> None:
        if self.kind not in ("phase", "scatter"):
            raise ValueError(f"unknown plot kind: {self.kind!r}")
        if not self.panel_keys:
            self.panel_keys = ("n",) if self.kind == "phase" else ("n", "p")


def load_rows(path, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        return list(reader)


def phase_grid(rows: list[dict]):
    """Arrange phase rows into per-panel grids.

    Returns {panel n: (s_values, p_values, prob, white_mask, red, blue)} where
    prob has shape (len(p_values), len(s_values)) and white_mask marks cells
    with fail_prob exactly zero (absent cells are white as well).
    """
    panels: dict[int, dict[tuple[int, int], dict]] = {}
    for row in rows:
        panels.setdefault(int(row["n"]), {})[(int(row["p"]), int(row["s"]))] = row
    out = {}
    for n, cells in sorted(panels.items()):
        ps = sorted({p for p, _ in cells})
        ss = sorted({s for _, s in cells})
        prob = np.zeros((len(ps), len(ss)))
        white = np.ones((len(ps), len(ss)), dtype=bool)
        red = np.zeros((len(ps), len(ss)), dtype=bool)
        blue = np.zeros((len(ps), len(ss)), dtype=bool)
        for (p, s), row in cells.items():
            i, j = ps.index(p), ss.index(s)
            value = float(row["fail_prob"])
            prob[i, j] = value
            white[i, j] = value == 0.0
            red[i, j] = row["red_region"] in ("1", "true", "True")
            blue[i, j] = row["blue_region"] in ("1", "true", "True")
        out[n] = (ss, ps, prob, white, red, blue)
    return out


def outline_segments(flags: np.ndarray, xs: list[int], ys: list[int]):
    """Cell-boundary segments separating flagged cells from unflagged space.

    flags is indexed [y, x]; cells are unit squares centered on (xs[j], ys[i]).
    """
    segments = []
    rows, cols = flags.shape
    for i in range(rows):
        for j in range(cols):
            if not flags[i, j]:
                continue
            x0, x1 = xs[j] - 0.5, xs[j] + 0.5
            y0, y1 = ys[i] - 0.5, ys[i] + 0.5
            if j == 0 or not flags[i, j - 1]:
                segments.append(((x0, y0), (x0, y1)))
            if j == cols - 1 or not flags[i, j + 1]:
                segments.append(((x1, y0), (x1, y1)))
            if i == 0 or not flags[i - 1, j]:
                segments.append(((x0, y0), (x1, y0)))
            if i == rows - 1 or not flags[i + 1, j]:
                segments.append(((x0, y1), (x1, y1)))
    return segments


def render_phase(spec: PlotSpec) -> str:
    rows = load_rows(spec.input_csv, _PHASE_COLUMNS)
    panels = phase_grid(rows)
    count = max(len(panels), 1)
    fig, axes = plt.subplots(1, count, figsize=(4.2 * count, 4.0), squeeze=False)
    positives = [float(r["fail_prob"]) for r in rows if float(r["fail_prob"]) > 0.0]
    vmin = min(positives) if positives else 1e-2
    norm = LogNorm(vmin=vmin, vmax=1.0)
    cmap = plt.get_cmap("magma_r").copy()
    cmap.set_bad("white")
    mesh = None
    for ax, (n, (ss, ps, prob, white, red, blue)) in zip(axes[0], sorted(panels.items())):
        masked = np.ma.masked_where(white, np.maximum(prob, vmin * (1 - white)))
        x_edges = np.array([s - 0.5 for s in ss] + [ss[-1] + 0.5])
        y_edges = np.array([p - 0.5 for p in ps] + [ps[-1] + 0.5])
        mesh = ax.pcolormesh(x_edges, y_edges, masked, norm=norm, cmap=cmap)
        for flags, color in ((red, "red"), (blue, "blue")):
            segs = outline_segments(flags, ss, ps)
            if segs:
                ax.add_collection(LineCollection(segs, colors=color, linewidths=1.6))
        ax.set_xlabel("sparsity level s")
        ax.set_ylabel("outputs p")
        ax.set_title(f"n = {n}")
        ax.set_xticks(ss)
        ax.set_yticks(ps)
    if not panels:
        axes[0][0].set_axis_off()
    if mesh is not None:
        fig.colorbar(mesh, ax=list(axes[0]), label="P(imperfect joint recovery)", shrink=0.85)
    fig.suptitle("Imperfect joint recovery probability (white = none observed)")
    fig.savefig(spec.output_path, dpi=spec.dpi)
    plt.close(fig)
    return spec.output_path


def scatter_points(rows: list[dict], panel_keys: tuple[str, ...]):
    """{panel key tuple: (cpsi midpoints, pg midpoints, s values)} sorted."""
    panels: dict[tuple, list[tuple[float, float, int]]] = {}
    for row in rows:
        key = tuple(int(row[k]) for k in panel_keys)
        cpsi = 0.5 * (float(row["nsc_cpsi_lo"]) + float(row["nsc_cpsi_hi"]))
        pg = 0.5 * (float(row["nsc_pg_lo"]) + float(row["nsc_pg_hi"]))
        panels.setdefault(key, []).append((cpsi, pg, int(row["s"])))
    return dict(sorted(panels.items()))


def render_scatter(spec: PlotSpec) -> str:
    rows = load_rows(spec.input_csv, _SCATTER_COLUMNS)
    panels = scatter_points(rows, spec.panel_keys)
    count = max(len(panels), 1)
    cols = min(count, 4)
    nrows = (count + cols - 1) // cols
    fig, axes = plt.subplots(nrows, cols, figsize=(3.4 * cols, 3.2 * nrows), squeeze=False)
    flat_axes = [ax for row in axes for ax in row]
    band = (0.5 - spec.tol, 0.5 + spec.tol)
    for ax in flat_axes[count:]:
        ax.set_axis_off()
    items = list(panels.items()) or [((), [])]
    for ax, (key, pts) in zip(flat_axes, items):
        # impossible region below the diagonal
        ax.fill([0, 1, 1], [0, 0, 1], color="0.85", zorder=0)
        ax.plot([0, 1], [0, 1], color="black", linewidth=0.8, zorder=1)
        ax.axvspan(*band, color="red", alpha=0.15, zorder=0)
        ax.axhspan(*band, color="blue", alpha=0.15, zorder=0)
        if pts:
            xs = [q[0] for q in pts]
            ys = [q[1] for q in pts]
            ss = [q[2] for q in pts]
            sc = ax.scatter(xs, ys, c=ss, cmap="viridis", s=14, zorder=2)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        if key:
            ax.set_title(", ".join(f"{k}={v}" for k, v in zip(spec.panel_keys, key)), fontsize=9)
        ax.set_xlabel("nsc of C Psi")
        ax.set_ylabel("nsc of one-step residual")
    fig.suptitle("Nullspace constants (midpoints of certified intervals)")
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=spec.dpi)
    plt.close(fig)
    return spec.output_path
