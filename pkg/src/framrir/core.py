"""Stochastic multi-channel RIR synthesis.

Instead of enumerating mirrored sources, a population of virtual sources is
drawn at random: propagation distances come from a quadratic density on a
normalized support, reflection counts grow with distance up to the count at
which the farthest arrival has decayed by 60 dB, and every virtual source is
placed on a sphere around the array reference point so that inter-mic delays
stay geometrically exact.
"""

import math
from dataclasses import dataclass

import numpy as np

from .params import (
    Scene,
    SimParams,
    array_center,
    distances_to_mics,
    scene_fingerprint,
    source_position,
    sph_to_cart,
)
from .resample import RirFilter, downsample_highpass_downsample, rate_factors

__all__ = [
    "ImageSet",
    "HighRateTrain",
    "RirResult",
    "quadratic_ratio_sample",
    "rescale_distance_ratio",
    "reflection_coefficient",
    "sample_image_geometry",
    "max_reflections",
    "sample_reflection_counts",
    "build_impulse_train",
    "early_reverb_train",
    "simulate_rir",
]


@dataclass
class ImageSet:
    """Virtual-source population for one source; row 0 is the direct path."""

    distances: np.ndarray        # (I+1,) distance to the array reference point
    azimuths: np.ndarray         # (I+1,) rad
    elevations: np.ndarray       # (I+1,) rad
    distance_ratios: np.ndarray  # (I+1,) D_i / direct distance, 1.0 for row 0
    mic_distances: np.ndarray    # (I+1, M) per-mic propagation distances
    reflections: np.ndarray      # (I+1,) fractional reflection counts, 0 for row 0
    direct_distance: float
    source_index: int = 0

    @property
    def n_images(self) -> int:
        return len(self.distances) - 1

    @property
    def direct_mic_distances(self) -> np.ndarray:
        return self.mic_distances[0]


@dataclass
class HighRateTrain:
    """Multi-channel impulse train at the oversampled rate."""

    channels: np.ndarray      # (M, L)
    direct_index: np.ndarray  # (M,) sample of the direct impulse per channel
    rate: int                 # Hz, r_h * sample_rate

    @property
    def length(self) -> int:
        return self.channels.shape[1]


@dataclass
class RirResult:
    """Filters produced for one source."""

    full: RirFilter
    early: RirFilter | None = None


def _stream(seed: int, source_index: int, stage: int) -> np.random.Generator:
    # Counter-based generator; one independent stream per (source, stage) so
    # geometry and perturbation draws stay reproducible in any call order.
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence((int(seed), int(source_index), int(stage))))
    )


def quadratic_ratio_sample(
    rng: np.random.Generator, n: int, alpha: float, beta: float
) -> np.ndarray:
    """Draw from the quadratic density 3x^2/(beta^3 - alpha^3) on (alpha, beta]
    via the inverse CDF (x^3 - alpha^3)/(beta^3 - alpha^3)."""
    u = rng.random(n)
    return np.cbrt(alpha**3 + (1.0 - u) * (beta**3 - alpha**3))


def rescale_distance_ratio(dr_hat, alpha: float, beta: float, max_ratio: float):
    """Map raw draws on (alpha, beta] linearly onto [1, max_ratio].

    alpha lands exactly on 1 and beta exactly (to rounding) on max_ratio,
    the farthest-to-direct distance ratio c0*T60/d0.
    """
    dr_hat = np.asarray(dr_hat, dtype=float)
    return 1.0 + (alpha / (beta - alpha)) * (dr_hat / alpha - 1.0) * (max_ratio - 1.0)


def reflection_coefficient(room_dims, t60: float) -> float:
    """Uniform wall reflection coefficient from room shape and decay target.

    Uses the volume-to-surface ratio of the box; larger rooms or shorter
    decay targets give more absorbing walls.
    """
    dims = np.asarray(room_dims, dtype=float)
    if dims.shape != (3,) or np.any(dims <= 0):
        raise ValueError(f"room_dims must be 3 positive lengths, got {room_dims}")
    if t60 <= 0:
        raise ValueError(f"t60 must be > 0, got {t60}")
    lx, ly, lz = dims
    volume = lx * ly * lz
    surface = 2.0 * (lx * ly + lx * lz + ly * lz)
    ratio = volume / surface
    return float(np.sqrt(1.0 - (1.0 - np.exp(-0.16 * ratio / t60)) ** 2))


def sample_image_geometry(params: SimParams, scene: Scene, source_index: int = 0) -> ImageSet:
    """Draw virtual-source positions for one source.

    Azimuths are uniform on [0, 2pi), elevations uniform on [-pi/2, pi/2],
    and normalized distance ratios follow the quadratic density
    ``3 x^2 / (beta^3 - alpha^3)`` on (alpha, beta], rescaled linearly onto
    [1, c0*T60/d0] so every image travels farther than the direct path.
    Deterministic for a fixed (seed, source_index).
    """
    if params.alpha == 0.0:
        raise ValueError("alpha must be > 0 to sample image distances")
    srcs = np.atleast_2d(np.asarray(scene.sources, dtype=float))
    d0, src_az, src_el = srcs[source_index]
    c_max = params.sound_speed * params.t60
    if c_max <= d0:
        raise ValueError(
            f"c0*t60 = {c_max:.3f} m must exceed the direct distance {d0:.3f} m"
        )
    mics = np.atleast_2d(np.asarray(scene.mic_positions, dtype=float))
    center = array_center(scene)

    n = params.num_images
    rng = _stream(params.seed, source_index, 0)
    thetas = rng.uniform(0.0, 2.0 * np.pi, n)
    phis = rng.uniform(-np.pi / 2.0, np.pi / 2.0, n)
    dr_hat = quadratic_ratio_sample(rng, n, params.alpha, params.beta)
    dr = rescale_distance_ratio(dr_hat, params.alpha, params.beta, c_max / d0)
    dist = d0 * dr

    azimuths = np.concatenate([[src_az], thetas])
    elevations = np.concatenate([[src_el], phis])
    distances = np.concatenate([[d0], dist])
    ratios = np.concatenate([[1.0], dr])

    # direct path goes through the same scalar helper exposed publicly so
    # matched geometries reproduce its coordinates exactly
    direct_pos = source_position(scene, source_index)
    image_pos = center + sph_to_cart(dist, thetas, phis).reshape(n, 3)
    positions = np.vstack([direct_pos[None, :], image_pos])
    mic_dist = distances_to_mics(positions, mics)

    reflections = np.full(n + 1, np.nan)
    reflections[0] = 0.0
    return ImageSet(
        distances=distances,
        azimuths=azimuths,
        elevations=elevations,
        distance_ratios=ratios,
        mic_distances=mic_dist,
        reflections=reflections,
        direct_distance=float(d0),
        source_index=source_index,
    )


def max_reflections(t60: float, d0: float, r: float, c0: float = 343.0) -> float:
    """Reflection count at which the farthest arrival has decayed by 60 dB."""
    if not 0.0 < r < 1.0:
        raise ValueError(f"reflection coefficient must be in (0, 1), got {r}")
    if c0 * t60 <= d0:
        raise ValueError("c0*t60 must exceed the direct distance")
    return (math.log10(c0 * t60) - math.log10(d0) - 3.0) / math.log10(r)


def sample_reflection_counts(
    images: ImageSet,
    params: SimParams,
    rr_max: float,
    rng: np.random.Generator | None = None,
) -> ImageSet:
    """Fill fractional reflection counts for every non-direct image.

    Counts grow quadratically with propagation distance toward ``rr_max``
    and receive a uniform perturbation scaled by the distance ratio raised
    to ``tau``; the result is clamped to [1, rr_max]. The direct path keeps
    a count of zero. Fractional counts stand in for per-image variation of
    the wall coefficient.
    """
    if rr_max < 1.0:
        raise ValueError(f"rr_max must be >= 1, got {rr_max}")
    if rng is None:
        rng = _stream(params.seed, images.source_index, 1)
    n = images.n_images
    c_max = params.sound_speed * params.t60
    p = rng.uniform(params.perturb_lo, params.perturb_hi, n)
    d = images.distances[1:]
    dr = images.distance_ratios[1:]
    g = 1.0 + (d / c_max) ** 2 * (rr_max - 1.0) + p * dr**params.tau
    images.reflections[1:] = np.clip(g, 1.0, rr_max)
    images.reflections[0] = 0.0
    return images


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def build_impulse_train(images: ImageSet, params: SimParams, r: float) -> HighRateTrain:
    """Accumulate all arrivals into a high-rate multi-channel impulse train.

    Per channel the arrival index is ``ceil(D/c0 * rate)`` clamped to the
    last sample, with amplitude ``r**g / D`` using the per-mic distance.
    Colliding arrivals add up.
    """
    if np.any(np.isnan(images.reflections)):
        raise ValueError("reflection counts not sampled; call sample_reflection_counts first")
    factors = rate_factors(params.sample_rate)
    rate = factors.r_h * params.sample_rate
    length = math.ceil(params.t60 * rate)
    n_mics = images.mic_distances.shape[1]

    q = np.minimum(
        np.ceil(images.mic_distances / params.sound_speed * rate).astype(np.int64),
        length - 1,
    )
    amps = r ** images.reflections[:, None] / images.mic_distances

    channels = np.zeros((n_mics, length))
    for m in range(n_mics):
        np.add.at(channels[m], q[:, m], amps[:, m])
    return HighRateTrain(channels=channels, direct_index=q[0].copy(), rate=rate)


def early_reverb_train(train: HighRateTrain, params: SimParams) -> HighRateTrain:
    """Keep only the [-6, +50] ms context around each channel's direct path."""
    rate = train.rate
    lo = _ceil_div(6 * rate, 1000)
    hi = _ceil_div(50 * rate, 1000)
    n = np.arange(train.length)
    channels = np.zeros_like(train.channels)
    for m in range(train.channels.shape[0]):
        rel = n - train.direct_index[m]
        keep = (rel >= -lo) & (rel <= hi)
        channels[m, keep] = train.channels[m, keep]
    return HighRateTrain(channels=channels, direct_index=train.direct_index.copy(), rate=rate)


def simulate_rir(params: SimParams, scene: Scene, include_early: bool = True) -> list:
    """Simulate one multi-channel RIR per source in the scene.

    Returns a list of :class:`RirResult` holding the full filter and, when
    requested, the early-reverberation variant, both at ``params.sample_rate``
    after the shared decimation chain. Bit-reproducible for a fixed seed.
    """
    factors = rate_factors(params.sample_rate)
    r = reflection_coefficient(scene.room_dims, params.t60)
    meta_base = {
        "t60": params.t60,
        "seed": params.seed,
        "num_images": params.num_images,
        "alpha": params.alpha,
        "beta": params.beta,
        "perturb_lo": params.perturb_lo,
        "perturb_hi": params.perturb_hi,
        "tau": params.tau,
        "sound_speed": params.sound_speed,
        "sample_rate": params.sample_rate,
        "reflection_coefficient": r,
        "scene": scene_fingerprint(scene),
    }

    results = []
    for k in range(scene.n_sources):
        images = sample_image_geometry(params, scene, k)
        if params.num_images > 0:
            rr_max = max_reflections(
                params.t60, images.direct_distance, r, params.sound_speed
            )
            images = sample_reflection_counts(images, params, rr_max)
        train = build_impulse_train(images, params, r)
        src = np.atleast_2d(np.asarray(scene.sources, dtype=float))[k]
        meta = dict(
            meta_base,
            source_index=k,
            distance=float(src[0]),
            azimuth=float(src[1]),
            elevation=float(src[2]),
        )
        full = downsample_highpass_downsample(train, factors, kind="full", metadata=meta)
        early = None
        if include_early:
            early = downsample_highpass_downsample(
                early_reverb_train(train, params), factors, kind="early", metadata=meta
            )
        results.append(RirResult(full=full, early=early))
    return results
