"""SVG figures for the CLI report paths (Agg backend, no display needed)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({"font.size": 9, "axes.linewidth": 0.8, "svg.hashsalt": "dyson",
                     "figure.dpi": 100})


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def kernel_heatmap(xs, ys, values, path, title=""):
    """Heat map of ``values[i, j] = K(x_i, y_j)``."""
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    im = ax.pcolormesh(np.asarray(ys), np.asarray(xs), np.asarray(values), shading="nearest",
                       cmap="RdBu_r")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("y")
    ax.set_ylabel("x")
    ax.set_title(title)
    return _save(fig, path)


def kernel_lines(r, series: dict, path, xlabel="y - x", title=""):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for label, v in series.items():
        ax.plot(r, v, lw=1.2, label=label)
    ax.axhline(0, color="0.6", lw=0.5)
    ax.set_xlabel(xlabel)
    ax.legend(frameon=False)
    ax.set_title(title)
    return _save(fig, path)


def relaxation_plot(us, gaps, bounds, path):
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.loglog(us, gaps, "o-", lw=1.2, label="gap")
    ax.loglog(us, bounds, "s--", lw=1.0, label="bound")
    ax.set_xlabel("u")
    ax.set_ylabel("sup |K - K_sin|")
    ax.legend(frameon=False)
    return _save(fig, path)


def density_plot(edges, est, se, ref_x, ref, path, title=""):
    """Histogram estimate with 3 SE bars against a reference curve."""
    edges = np.asarray(edges)
    c = 0.5 * (edges[1:] + edges[:-1])
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.errorbar(c, est, yerr=3 * np.asarray(se), fmt=".", ms=3, lw=0.8, label="Monte Carlo")
    if ref is not None:
        ax.plot(ref_x, ref, lw=1.2, label="kernel")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(frameon=False)
    ax.set_title(title)
    return _save(fig, path)
