"""Multirate post-processing: high-rate train -> intermediate rate -> 80 Hz
high-pass -> target rate."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

__all__ = [
    "RateFactors",
    "RirFilter",
    "rate_factors",
    "downsample_highpass_downsample",
]


@dataclass(frozen=True)
class RateFactors:
    """Integer rate factors tying the three processing rates together."""

    r_h: int
    r_l: int
    sample_rate: int

    @property
    def high_rate(self) -> int:
        return self.r_h * self.sample_rate

    @property
    def mid_rate(self) -> int:
        return self.r_l * self.sample_rate


@dataclass
class RirFilter:
    """Multi-channel impulse response at the target rate."""

    samples: np.ndarray            # (M, N)
    direct_path_sample: np.ndarray  # (M,) direct impulse index per channel
    sample_rate: int
    kind: str = "full"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples))
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("RIR contains non-finite samples")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


def rate_factors(sample_rate: int) -> RateFactors:
    """Oversampling factors for a target rate: r_h = floor(1e6 / fs),
    r_l = floor(sqrt(r_h))."""
    if sample_rate <= 0:
        raise ValueError(f"sample_rate must be > 0, got {sample_rate}")
    r_h = 10**6 // int(sample_rate)
    r_l = math.isqrt(r_h)
    if not 1 < r_l < r_h:
        raise ValueError(
            f"sample_rate {sample_rate} leaves no room for the two-stage "
            f"chain (r_h={r_h}, r_l={r_l})"
        )
    return RateFactors(r_h=r_h, r_l=r_l, sample_rate=int(sample_rate))


def _decimation_taps(up: int, down: int, taps_per_phase: int, beta: float) -> np.ndarray:
    # Windowed-sinc low-pass at the narrower Nyquist. resample_poly scales
    # the taps by `up` itself to compensate zero insertion.
    m = max(up, down)
    return signal.firwin(2 * taps_per_phase * m + 1, 1.0 / m, window=("kaiser", beta))


def downsample_highpass_downsample(
    train,
    factors: RateFactors,
    highpass_hz: float = 80.0,
    kaiser_beta: float = 7.0,
    taps_per_phase: int = 10,
    kind: str = "full",
    metadata: dict | None = None,
) -> RirFilter:
    """Run the two-stage decimation chain with the 80 Hz high-pass between.

    `train` is a HighRateTrain or an (M, L) array at ``factors.high_rate``.
    Both anti-aliasing stages use linear-phase FIRs whose group delay is
    compensated internally, so the direct-path index maps to
    ``round(index / r_h)``; the mapping is recorded in the metadata.
    """
    if hasattr(train, "channels"):
        x = np.atleast_2d(train.channels)
        direct_hi = np.asarray(train.direct_index)
    else:
        x = np.atleast_2d(np.asarray(train, dtype=float))
        direct_hi = None
    if x.size == 0:
        raise ValueError("empty train")

    taps1 = _decimation_taps(factors.r_l, factors.r_h, taps_per_phase, kaiser_beta)
    y = signal.resample_poly(x, factors.r_l, factors.r_h, axis=1, window=taps1)

    sos = signal.butter(2, highpass_hz, btype="highpass", fs=factors.mid_rate, output="sos")
    y = signal.sosfilt(sos, y, axis=1)

    taps2 = _decimation_taps(1, factors.r_l, taps_per_phase, kaiser_beta)
    y = signal.resample_poly(y, 1, factors.r_l, axis=1, window=taps2)

    n_out = y.shape[1]
    if direct_hi is not None:
        direct = np.clip(np.round(direct_hi / factors.r_h).astype(np.int64), 0, n_out - 1)
    else:
        direct = np.zeros(x.shape[0], dtype=np.int64)

    meta = dict(metadata or {})
    meta.update(
        {
            "r_h": factors.r_h,
            "r_l": factors.r_l,
            "highpass_hz": highpass_hz,
            "direct_index_map": "round(high_rate_index / r_h)",
        }
    )
    return RirFilter(
        samples=y,
        direct_path_sample=direct,
        sample_rate=factors.sample_rate,
        kind=kind,
        metadata=meta,
    )
