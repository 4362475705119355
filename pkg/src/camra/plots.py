"""Figure rendering for the analyze and bench report paths.

All figures are written to files (Agg backend); nothing is shown
interactively.  Returns the written paths so callers can log them.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SCATTER_MAX = 20_000


def _subsample(a, b, rng_seed=0):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size > _SCATTER_MAX:
        idx = np.random.default_rng(rng_seed).choice(a.size, _SCATTER_MAX,
                                                     replace=False)
        return a[idx], b[idx]
    return a, b


def decorrelation_figure(path, lh, hl, band_sum, band_diff, stats):
    """Scatter of the detail pair before/after plus coefficient histograms."""
    fig, axes = plt.subplots(2, 2, figsize=(9, 8))
    x, y = _subsample(lh, hl)
    axes[0, 0].plot(x, y, ",", alpha=0.4)
    axes[0, 0].set_xlabel("LH")
    axes[0, 0].set_ylabel("HL")
    axes[0, 0].set_title(f"before (r = {stats.pearson_before:.4f})")
    x, y = _subsample(band_sum, band_diff)
    axes[0, 1].plot(x, y, ",", alpha=0.4, color="tab:green")
    axes[0, 1].set_xlabel("sum")
    axes[0, 1].set_ylabel("diff")
    axes[0, 1].set_title(f"after (r = {stats.pearson_after:.4f})")
    axes[1, 0].hist(np.asarray(lh).ravel(), bins=128, color="tab:blue")
    axes[1, 0].set_title(f"LH histogram ({stats.entropy_before:.2f} bits)")
    axes[1, 1].hist(np.asarray(band_diff).ravel(), bins=128, color="tab:green")
    axes[1, 1].set_title(f"diff histogram ({stats.entropy_after:.2f} bits)")
    for ax in axes.ravel():
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def lossless_bpp_figure(path, mean_bpp):
    """Bar chart of corpus-average lossless rates per scheme."""
    order = [k for k in ("proposed", "mallat", "demux", "cfa-gray", "rgb")
             if k in mean_bpp]
    vals = [mean_bpp[k] for k in order]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    bars = ax.bar(order, vals, color="tab:blue")
    bars[0].set_color("tab:green")
    for rect, v in zip(bars, vals):
        ax.annotate(f"{v:.3f}", (rect.get_x() + rect.get_width() / 2, v),
                    ha="center", va="bottom", fontsize=9)
    ax.set_ylabel("bits per pixel")
    ax.set_title("Lossless rate by scheme (corpus average)")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def rd_curves_figure(path, curves, key="psnr_cfa_db", title="Rate-distortion"):
    """Average R-D curves, one line per scheme."""
    fig, ax = plt.subplots(figsize=(7, 5))
    for name, curve in curves.items():
        pts = sorted((c["bpp"], c[key]) for c in curve if c.get(key) is not None)
        if not pts:
            continue
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=name)
    ax.set_xlabel("bits per pixel")
    ax.set_ylabel("PSNR (dB)")
    ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_bench_figures(figdir, mean_lossless, curves_cfa, curves_display):
    os.makedirs(figdir, exist_ok=True)
    paths = []
    if mean_lossless:
        paths.append(lossless_bpp_figure(
            os.path.join(figdir, "lossless_bpp.png"), mean_lossless))
    if curves_cfa:
        paths.append(rd_curves_figure(
            os.path.join(figdir, "rd_cfa.png"), curves_cfa,
            key="psnr_cfa_db", title="Rate-distortion (raw mosaic domain)"))
    if curves_display:
        paths.append(rd_curves_figure(
            os.path.join(figdir, "rd_display.png"), curves_display,
            key="psnr_display_db", title="Rate-distortion (display domain)"))
    return paths
