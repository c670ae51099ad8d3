"""Thin in-process binding over the framrir core for ML dataloaders.

Two entry points, mapping-configured so dataloader code never touches the
library's dataclasses directly:

- :func:`py_simulate_rir` renders multi-channel filters from a config
  mapping and hands them over as contiguous float32 arrays.
- :func:`py_generate_batch` produces a reproducible batch of training
  mixtures, optionally across worker processes.

No logic lives here: configs go through the same validation the CLI uses,
so error behavior matches it, and all numeric work happens inside the core
(numpy/scipy release the interpreter lock for the heavy array routines, and
batch items run in worker processes), leaving only marshalling on this side.
"""

from dataclasses import dataclass, field

import numpy as np

from framrir import __version__ as _core_version
from framrir.io import (
    config_curriculum,
    config_mixture_spec,
    config_scene,
    config_sim_params,
    validate_config,
)
from framrir.mixture import generate_batch as _generate_batch

__version__ = "0.1.0"
__core_version__ = _core_version

__all__ = [
    "__version__",
    "__core_version__",
    "BindingError",
    "BindingBatch",
    "py_simulate_rir",
    "py_generate_batch",
]


class BindingError(ValueError):
    """Raised for any configuration or simulation error from the core."""


@dataclass
class BindingBatch:
    """One generated batch; every array is contiguous float32 (channels x samples)."""

    mixtures: list = field(default_factory=list)
    sources: list = field(default_factory=list)        # per item: list per speaker
    early_sources: list = field(default_factory=list)  # per item: list per speaker
    noises: list = field(default_factory=list)
    metadata: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.mixtures)


def _as_f32(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float32)


def py_simulate_rir(config: dict, include_early: bool = True):
    """Simulate RIR filters from a ``{"sim": ..., "scene": ...}`` mapping.

    Returns ``(full, early, metadata)``: ``full`` is a contiguous float32
    array of shape (n_sources, n_channels, n_samples), ``early`` matches it
    (or is None), and ``metadata`` is one mapping per source carrying the
    seed, decay target, DOA and direct-path indexes.
    """
    try:
        cfg = validate_config(dict(config))
        params = config_sim_params(cfg)
        scene = config_scene(cfg)
        from framrir import simulate_rir

        results = simulate_rir(params, scene, include_early=include_early)
    except (ValueError, TypeError) as exc:
        raise BindingError(str(exc)) from exc

    full = _as_f32(np.stack([r.full.samples for r in results]))
    early = None
    if include_early:
        early = _as_f32(np.stack([r.early.samples for r in results]))
    metadata = []
    for r in results:
        meta = dict(r.full.metadata)
        meta["direct_path_sample"] = [int(v) for v in r.full.direct_path_sample]
        meta["sample_rate"] = r.full.sample_rate
        metadata.append(meta)
    return full, early, metadata


def py_generate_batch(
    config: dict, batch_size: int, seed: int = 0, workers: int = 1
) -> BindingBatch:
    """Generate a reproducible mixture batch from a ``{"mixture": ...,
    "curriculum": ...}`` mapping.

    (seed, item index) fully determines every sample, so the content is
    identical for any worker count and across processes. ``batch_size=0``
    yields an empty batch.
    """
    try:
        cfg = validate_config(dict(config))
        spec = config_mixture_spec(cfg)
        curriculum = config_curriculum(cfg)
        items = _generate_batch(
            batch_size, spec, curriculum=curriculum, seed=seed, workers=workers
        )
    except (ValueError, TypeError) as exc:
        raise BindingError(str(exc)) from exc

    batch = BindingBatch()
    for item in items:
        batch.mixtures.append(_as_f32(item.mixture))
        batch.sources.append([_as_f32(s) for s in item.sources])
        batch.early_sources.append([_as_f32(s) for s in item.early_sources])
        batch.noises.append(_as_f32(item.noise))
        batch.metadata.append(dict(item.metadata))
    return batch
