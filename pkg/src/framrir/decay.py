"""Reverberation-time measurement via backward integration."""

import numpy as np

__all__ = ["schroeder_curve", "measure_t60"]


def schroeder_curve(h: np.ndarray) -> np.ndarray:
    """Energy decay curve: backward-integrated squared impulse response,
    normalized to 1 at the first sample."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 1 or h.size == 0:
        raise ValueError("expected a non-empty single-channel impulse response")
    edc = np.cumsum(h[::-1] ** 2)[::-1]
    if edc[0] <= 0:
        raise ValueError("impulse response has no energy")
    return edc / edc[0]


def measure_t60(
    h: np.ndarray,
    sample_rate: int,
    max_drop: float = 55.0,
    floor_margin: float = 5.0,
    min_drop: float = 25.0,
) -> float:
    """Decay time extrapolated from the energy decay curve.

    Finds the first crossing of the decay curve `drop` dB below its level at
    the direct-path arrival and scales the crossing time by 60/drop. The
    measurement depth adapts to the available dynamic range (up to
    ``max_drop``, staying ``floor_margin`` dB above the curve's floor), which
    keeps the estimate away from the truncation plunge at the filter end.
    Exact for exponential decays; returns NaN when fewer than ``min_drop`` dB
    of range are available.

    Slope-fit estimators of the T20/T30 family assume an exponential decay
    and systematically over-read the convex decay the stochastic simulator
    produces, so the crossing form is the default measurement here.
    """
    h = np.asarray(h, dtype=float)
    db = 10.0 * np.log10(np.maximum(schroeder_curve(h), 1e-300))
    direct = int(np.argmax(np.abs(h) >= 0.5 * np.abs(h).max()))
    rel = db[direct:] - db[direct]
    drop = min(max_drop, -float(rel.min()) - floor_margin)
    if drop < min_drop:
        return float("nan")
    crossing = int(np.argmax(rel <= -drop))
    return crossing / float(sample_rate) * (60.0 / drop)
