"""Figure rendering for the CLI report paths.

Backend-free matplotlib (Figure + Agg canvas) so importing this module never
touches global state.
"""

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = [
    "save_feature_map",
    "save_beampattern",
    "save_rir_overview",
    "save_bench_curve",
]


def _new_fig(width=7.0, height=4.0):
    fig = Figure(figsize=(width, height))
    FigureCanvasAgg(fig)
    return fig


def save_feature_map(values, path, title="", hop_s=None, sample_rate=None):
    """Heatmap of a (T, F) feature grid, frames on x, bins on y."""
    values = np.asarray(values)
    fig = _new_fig()
    ax = fig.add_subplot(111)
    extent = None
    if hop_s is not None and sample_rate is not None:
        extent = [0, values.shape[0] * hop_s, 0, sample_rate / 2000.0]
    im = ax.imshow(values.T, origin="lower", aspect="auto", extent=extent, cmap="magma")
    ax.set_xlabel("time (s)" if extent else "frame")
    ax.set_ylabel("frequency (kHz)" if extent else "bin")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def save_beampattern(pattern, azimuths_deg, path, sample_rate=None, title="beampattern"):
    """Heatmap of |B| in dB over (direction, frequency)."""
    pattern = np.asarray(pattern)
    db = 20.0 * np.log10(np.maximum(pattern, 1e-8))
    fig = _new_fig()
    ax = fig.add_subplot(111)
    f_hi = (sample_rate / 2000.0) if sample_rate else pattern.shape[1]
    im = ax.imshow(
        db,
        origin="lower",
        aspect="auto",
        extent=[0, f_hi, azimuths_deg[0], azimuths_deg[-1]],
        cmap="viridis",
        vmin=-40.0,
        vmax=5.0,
    )
    ax.set_xlabel("frequency (kHz)" if sample_rate else "bin")
    ax.set_ylabel("direction (deg)")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="dB")
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def save_rir_overview(rir, path):
    """Waveform plus energy decay curve of a simulated filter."""
    from .decay import schroeder_curve

    fig = _new_fig(7.0, 5.0)
    t = np.arange(rir.n_samples) / rir.sample_rate
    ax1 = fig.add_subplot(211)
    for m in range(rir.n_channels):
        ax1.plot(t, rir.samples[m], lw=0.6, alpha=0.8, label=f"ch{m}")
    ax1.set_ylabel("amplitude")
    ax1.legend(fontsize=7, ncol=4)
    ax1.set_title(f"{rir.kind} filter, fs={rir.sample_rate} Hz")

    ax2 = fig.add_subplot(212, sharex=ax1)
    edc = 10.0 * np.log10(np.maximum(schroeder_curve(rir.samples[0]), 1e-30))
    ax2.plot(t, edc, lw=0.9)
    ax2.set_ylim(-80, 5)
    ax2.set_xlabel("time (s)")
    ax2.set_ylabel("decay (dB)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def save_bench_curve(reports, path):
    """Workers against seconds-per-item, log-log."""
    fig = _new_fig(5.0, 4.0)
    ax = fig.add_subplot(111)
    threads = [r.threads for r in reports]
    per_item = [r.seconds_per_item for r in reports]
    ax.loglog(threads, per_item, "o-")
    ax.set_xlabel("workers")
    ax.set_ylabel("s / item")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
