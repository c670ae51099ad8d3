"""Shoebox image-source reference implementation.

Serves as the deterministic verification oracle and speed baseline for the
stochastic simulator: mirrored sources are enumerated explicitly and pushed
through the identical impulse-train assembly and decimation chain.
"""

import math
from dataclasses import dataclass

import numpy as np

from .params import distances_to_mics
from .resample import RirFilter, downsample_highpass_downsample, rate_factors

__all__ = ["IsmConfig", "eyring_reflection_coefficient", "enumerate_images", "ism_rir"]


@dataclass
class IsmConfig:
    """Room, absolute source/mic coordinates and enumeration depth.

    max_order None picks the smallest order whose lattice covers the full
    propagation range c0 * duration. duration defaults to t60; a longer
    duration keeps arrivals past the nominal decay, which matters when
    measuring decay times from the output.
    """

    room_dims: tuple
    source_position: tuple
    mic_positions: list
    t60: float
    sample_rate: int = 16000
    max_order: int | None = None
    duration: float | None = None
    sound_speed: float = 343.0
    reflection: float | None = None  # override; default derives from t60

    def __post_init__(self):
        dims = np.asarray(self.room_dims, dtype=float)
        if dims.shape != (3,) or np.any(dims <= 0):
            raise ValueError(f"room_dims must be 3 positive lengths, got {self.room_dims}")
        if self.t60 <= 0:
            raise ValueError("t60 must be > 0")
        src = np.asarray(self.source_position, dtype=float)
        if np.any(src <= 0) or np.any(src >= dims):
            raise ValueError("source must lie strictly inside the room")
        mics = np.atleast_2d(np.asarray(self.mic_positions, dtype=float))
        if np.any(mics <= 0) or np.any(mics >= dims):
            raise ValueError("all mics must lie strictly inside the room")
        if self.max_order is not None and self.max_order < 0:
            raise ValueError("max_order must be >= 0")

    @property
    def effective_duration(self) -> float:
        return self.t60 if self.duration is None else self.duration

    def resolved_max_order(self) -> int:
        if self.max_order is not None:
            return self.max_order
        reach = self.sound_speed * self.effective_duration
        return int(math.ceil(reach / (2.0 * min(self.room_dims)))) + 1


def eyring_reflection_coefficient(room_dims, t60: float) -> float:
    """Pressure reflection coefficient from Eyring absorption.

    Inverts 1 - abar = exp(-0.161 V / (S T60)) and takes r = sqrt(1 - abar),
    which makes the image-lattice energy decay track the requested T60.
    """
    dims = np.asarray(room_dims, dtype=float)
    if dims.shape != (3,) or np.any(dims <= 0):
        raise ValueError(f"room_dims must be 3 positive lengths, got {room_dims}")
    if t60 <= 0:
        raise ValueError("t60 must be > 0")
    lx, ly, lz = dims
    ratio = (lx * ly * lz) / (2.0 * (lx * ly + lx * lz + ly * lz))
    return float(math.exp(-0.0805 * ratio / t60))


def enumerate_images(cfg: IsmConfig):
    """Mirror the source across all walls up to max_order per axis.

    Returns (positions, reflection_counts) with (2*max_order + 1)**3 entries.
    Per axis, lattice index m maps to coordinate m*L + s for even m and
    m*L + (L - s) for odd m, contributing |m| reflections.
    """
    order = cfg.resolved_max_order()
    dims = np.asarray(cfg.room_dims, dtype=float)
    src = np.asarray(cfg.source_position, dtype=float)
    m = np.arange(-order, order + 1)
    axis_pos = [
        np.where(m % 2 == 0, m * dims[k] + src[k], m * dims[k] + (dims[k] - src[k]))
        for k in range(3)
    ]
    axis_g = np.abs(m)
    px, py, pz = np.meshgrid(axis_pos[0], axis_pos[1], axis_pos[2], indexing="ij")
    positions = np.stack([px.ravel(), py.ravel(), pz.ravel()], axis=1)
    counts = (
        axis_g[:, None, None] + axis_g[None, :, None] + axis_g[None, None, :]
    ).ravel()
    return positions, counts


def ism_rir(cfg: IsmConfig) -> RirFilter:
    """Reference RIR: enumerate images, build the high-rate train, decimate.

    Amplitudes are r**g / D with the arrival index ceil(D/c0 * rate);
    arrivals that would land past the filter end are dropped. Deterministic:
    repeated runs are byte-identical.
    """
    factors = rate_factors(cfg.sample_rate)
    rate = factors.r_h * cfg.sample_rate
    duration = cfg.effective_duration
    length = math.ceil(duration * rate)
    r = cfg.reflection
    if r is None:
        r = eyring_reflection_coefficient(cfg.room_dims, cfg.t60)
    if not 0.0 < r < 1.0:
        raise ValueError(f"reflection coefficient must be in (0, 1), got {r}")

    positions, counts = enumerate_images(cfg)
    mics = np.atleast_2d(np.asarray(cfg.mic_positions, dtype=float))
    dist = distances_to_mics(positions, mics)  # (n_images, M)
    src_dist = distances_to_mics(cfg.source_position, mics)[0]

    channels = np.zeros((mics.shape[0], length))
    direct = np.zeros(mics.shape[0], dtype=np.int64)
    for m_idx in range(mics.shape[0]):
        q = np.ceil(dist[:, m_idx] / cfg.sound_speed * rate).astype(np.int64)
        keep = q <= length - 1
        np.add.at(channels[m_idx], q[keep], r ** counts[keep] / dist[keep, m_idx])
        direct[m_idx] = min(
            int(np.ceil(src_dist[m_idx] / cfg.sound_speed * rate)), length - 1
        )

    from .core import HighRateTrain  # local import avoids a cycle

    train = HighRateTrain(channels=channels, direct_index=direct, rate=rate)
    meta = {
        "method": "image_source",
        "t60": cfg.t60,
        "max_order": cfg.resolved_max_order(),
        "reflection_coefficient": r,
        "n_images": len(counts),
    }
    return downsample_highpass_downsample(train, factors, kind="full", metadata=meta)
