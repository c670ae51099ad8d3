"""framrir: fast stochastic multi-channel room impulse response simulation.

High-level API:

- :func:`simulate_rir` draws randomized virtual sources and renders
  multi-channel filters with exact inter-mic delays.
- :func:`ism_rir` is the deterministic image-source reference.
- :mod:`framrir.features` verifies directional structure (IPD/AF/DPR,
  MVDR beampatterns).
- :func:`generate_batch` produces reproducible training mixtures on the fly.
"""

__version__ = "0.1.0"

from .core import (
    HighRateTrain,
    ImageSet,
    RirResult,
    build_impulse_train,
    early_reverb_train,
    max_reflections,
    quadratic_ratio_sample,
    reflection_coefficient,
    rescale_distance_ratio,
    sample_image_geometry,
    sample_reflection_counts,
    simulate_rir,
)
from .decay import measure_t60, schroeder_curve
from .ism import IsmConfig, enumerate_images, eyring_reflection_coefficient, ism_rir
from .mixture import (
    CurriculumState,
    MixtureResult,
    MixtureSpec,
    SyntheticPool,
    WavDirectoryPool,
    curriculum_step,
    generate_batch,
    sample_scene,
    spatialize_and_mix,
)
from .params import Scene, SimParams, array_center, linear_array, source_position, sph_to_cart
from .resample import RateFactors, RirFilter, downsample_highpass_downsample, rate_factors

__all__ = [
    "__version__",
    "SimParams",
    "Scene",
    "linear_array",
    "array_center",
    "source_position",
    "sph_to_cart",
    "ImageSet",
    "HighRateTrain",
    "RirResult",
    "RirFilter",
    "RateFactors",
    "quadratic_ratio_sample",
    "rescale_distance_ratio",
    "reflection_coefficient",
    "sample_image_geometry",
    "max_reflections",
    "sample_reflection_counts",
    "build_impulse_train",
    "early_reverb_train",
    "simulate_rir",
    "rate_factors",
    "downsample_highpass_downsample",
    "IsmConfig",
    "enumerate_images",
    "eyring_reflection_coefficient",
    "ism_rir",
    "schroeder_curve",
    "measure_t60",
    "MixtureSpec",
    "MixtureResult",
    "CurriculumState",
    "SyntheticPool",
    "WavDirectoryPool",
    "sample_scene",
    "spatialize_and_mix",
    "curriculum_step",
    "generate_batch",
]
