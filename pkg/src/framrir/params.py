"""Parameter containers and shared array geometry helpers."""

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

SOUND_SPEED = 343.0


@dataclass
class SimParams:
    """Control knobs for the stochastic RIR simulator.

    Parameters
    ----------
    t60 : float
        Target reverberation time in seconds.
    sample_rate : int
        Output sample rate in Hz.
    num_images : int
        Number of random virtual sources. More images give a denser tail
        at the cost of speed.
    alpha, beta : float
        Support bounds of the quadratic distance-ratio distribution,
        0 <= alpha < beta <= 1. alpha must be > 0 when images are sampled.
    perturb_lo, perturb_hi : float
        Uniform bounds of the reflection-count perturbation.
    tau : float
        Distance shrinkage exponent applied to the perturbation term.
    sound_speed : float
        Speed of sound in m/s.
    seed : int
        Base RNG seed. Per-source streams are derived from it.
    """

    t60: float
    sample_rate: int = 16000
    num_images: int = 2048
    alpha: float = 0.1
    beta: float = 1.0
    perturb_lo: float = -2.0
    perturb_hi: float = 2.0
    tau: float = 0.25
    sound_speed: float = SOUND_SPEED
    seed: int = 0

    def __post_init__(self):
        if self.t60 <= 0:
            raise ValueError(f"t60 must be > 0, got {self.t60}")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        if self.num_images < 0:
            raise ValueError(f"num_images must be >= 0, got {self.num_images}")
        if not (0.0 <= self.alpha < self.beta <= 1.0):
            raise ValueError(
                f"need 0 <= alpha < beta <= 1, got alpha={self.alpha} beta={self.beta}"
            )
        if self.perturb_lo > self.perturb_hi:
            raise ValueError("perturb_lo must be <= perturb_hi")
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.sound_speed <= 0:
            raise ValueError("sound_speed must be > 0")


@dataclass
class Scene:
    """Room box, microphone layout and source placements.

    Microphone coordinates live in an arbitrary array-local frame; sources
    are (distance, azimuth, elevation) triples relative to the reference
    point (the array centroid unless `reference_point` is given).
    """

    room_dims: tuple
    mic_positions: list
    sources: list
    reference_point: tuple | None = None

    def __post_init__(self):
        dims = np.asarray(self.room_dims, dtype=float)
        if dims.shape != (3,) or np.any(dims <= 0):
            raise ValueError(f"room_dims must be 3 positive lengths, got {self.room_dims}")
        mics = np.atleast_2d(np.asarray(self.mic_positions, dtype=float))
        if mics.ndim != 2 or mics.shape[1] != 3 or mics.shape[0] < 1:
            raise ValueError("mic_positions must be an (M, 3) array with M >= 1")
        srcs = np.atleast_2d(np.asarray(self.sources, dtype=float))
        if srcs.ndim != 2 or srcs.shape[1] != 3 or srcs.shape[0] < 1:
            raise ValueError("sources must be an (S, 3) array of (distance, azimuth, elevation)")
        if np.any(srcs[:, 0] <= 0):
            raise ValueError("source distances must be > 0")
        aperture = _aperture(mics)
        if aperture >= dims.min():
            raise ValueError(
                f"array aperture {aperture:.3f} m must be smaller than the "
                f"smallest room dimension {dims.min():.3f} m"
            )
        diag = float(np.linalg.norm(dims))
        for k, d in enumerate(srcs[:, 0]):
            if d > diag:
                warnings.warn(
                    f"source {k} direct distance {d:.2f} m exceeds the room "
                    f"diagonal {diag:.2f} m",
                    stacklevel=2,
                )

    @property
    def n_mics(self) -> int:
        return np.atleast_2d(np.asarray(self.mic_positions)).shape[0]

    @property
    def n_sources(self) -> int:
        return np.atleast_2d(np.asarray(self.sources)).shape[0]


def _aperture(mics: np.ndarray) -> float:
    if mics.shape[0] == 1:
        return 0.0
    diff = mics[:, None, :] - mics[None, :, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def linear_array(spacings) -> np.ndarray:
    """Mic coordinates of a linear array along x from gap widths in meters.

    ``linear_array([0.04, 0.08, 0.04])`` gives the 4-element layout used
    throughout the tests, centered on the origin.
    """
    pos = np.concatenate([[0.0], np.cumsum(np.asarray(spacings, dtype=float))])
    pos -= pos.mean()
    out = np.zeros((len(pos), 3))
    out[:, 0] = pos
    return out


def sph_to_cart(distance, azimuth, elevation) -> np.ndarray:
    """Spherical (distance, azimuth, elevation) to cartesian, vectorized."""
    d = np.asarray(distance, dtype=float)
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    return np.stack(
        [d * np.cos(el) * np.cos(az), d * np.cos(el) * np.sin(az), d * np.sin(el)],
        axis=-1,
    )


def array_center(scene: Scene) -> np.ndarray:
    """Reference point used as the sphere center: centroid unless overridden."""
    if scene.reference_point is not None:
        return np.asarray(scene.reference_point, dtype=float)
    return np.atleast_2d(np.asarray(scene.mic_positions, dtype=float)).mean(axis=0)


def source_position(scene: Scene, source_index: int) -> np.ndarray:
    """Cartesian position of a source in the mic coordinate frame."""
    d, az, el = np.atleast_2d(np.asarray(scene.sources, dtype=float))[source_index]
    return array_center(scene) + sph_to_cart(d, az, el)


def distances_to_mics(points: np.ndarray, mics: np.ndarray) -> np.ndarray:
    """Euclidean distances, shape (n_points, n_mics).

    Shared by the stochastic and image-source paths so matched geometries
    produce bit-identical distances.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    mics = np.atleast_2d(np.asarray(mics, dtype=float))
    diff = pts[:, None, :] - mics[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def scene_fingerprint(scene: Scene) -> str:
    """Stable short hash of the scene geometry, for filter metadata."""
    mics = np.atleast_2d(np.asarray(scene.mic_positions, dtype=float))
    srcs = np.atleast_2d(np.asarray(scene.sources, dtype=float))
    blob = b"".join(
        [
            np.asarray(scene.room_dims, dtype=float).tobytes(),
            mics.tobytes(),
            srcs.tobytes(),
            array_center(scene).tobytes(),
        ]
    )
    return hashlib.sha256(blob).hexdigest()[:16]
