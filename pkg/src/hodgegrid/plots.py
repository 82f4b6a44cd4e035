"""Figure rendering for the CLI report paths.

Panels mirror the delimited outputs: Betti numbers and the first non-zero
T/C/N eigenvalues along a filtration, and persistent kernel dimensions over
the (level, span) grid.  Files are written next to the CSV they accompany.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PANEL_STYLE = {"linewidth": 1.6, "marker": "o", "markersize": 3.5}


def filtration_panels(rows, path, title=None):
    """Six panels: beta_0, beta_1, beta_2 and lambda_T1, lambda_C1,
    lambda_N1 against the isovalue.  `rows` is a sequence of dicts with
    those keys plus 'isovalue'."""
    iso = [r["isovalue"] for r in rows]
    fig, axes = plt.subplots(2, 3, figsize=(11, 6), sharex=True)
    panels = [
        ("beta0", r"$\beta_0$"), ("beta1", r"$\beta_1$"), ("beta2", r"$\beta_2$"),
        ("lambda_T1", r"$\lambda_1^T$"), ("lambda_C1", r"$\lambda_1^C$"),
        ("lambda_N1", r"$\lambda_1^N$"),
    ]
    for ax, (key, label) in zip(axes.ravel(), panels):
        vals = np.array([r[key] for r in rows], dtype=float)
        ax.plot(iso, vals, color="tab:blue", **PANEL_STYLE)
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
        if key.startswith("beta"):
            ax.set_ylim(bottom=-0.2)
    for ax in axes[1]:
        ax.set_xlabel("isovalue")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def persistence_heatmap(records, path, title=None):
    """Persistent kernel dimension over the (l, p) grid, one panel per degree."""
    degrees = sorted({r["k"] for r in records})
    fig, axes = plt.subplots(1, len(degrees), figsize=(4.2 * len(degrees), 3.6),
                             squeeze=False)
    for ax, k in zip(axes[0], degrees):
        recs = [r for r in records if r["k"] == k]
        ls = sorted({r["l"] for r in recs})
        ps = sorted({r["p"] for r in recs})
        mat = np.full((len(ps), len(ls)), np.nan)
        for r in recs:
            mat[ps.index(r["p"]), ls.index(r["l"])] = r["kernel_dim"]
        im = ax.imshow(mat, origin="lower", aspect="auto", cmap="viridis",
                       extent=(min(ls) - 0.5, max(ls) + 0.5, min(ps) - 0.5, max(ps) + 0.5))
        ax.set_xlabel("level l")
        ax.set_ylabel("span p")
        ax.set_title(f"persistent kernel dim, degree {k}")
        fig.colorbar(im, ax=ax, shrink=0.85)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def spectrum_panel(records, path, title=None):
    """Eigenvalue stem plot per (degree, kind) record."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for rec in records:
        eigs = np.asarray(rec["eigenvalues"], dtype=float)
        label = f"k={rec.get('k')} {rec.get('kind')} (ker {rec.get('kernel_dim')})"
        ax.plot(np.arange(1, len(eigs) + 1), eigs, label=label, **PANEL_STYLE)
    ax.set_xlabel("index")
    ax.set_ylabel("eigenvalue")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
