"""On-the-fly multi-channel mixture generation.

Each utterance gets a freshly sampled room, decay target, source placements
and gain structure; speakers are spatialized with simulated filters and
overlapped subject to a minimum overlap ratio, with a point-source noise
spanning the whole utterance. A curriculum schedule can cap the sampled
decay range epoch by epoch.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import fftconvolve

from .core import simulate_rir
from .params import Scene, SimParams, linear_array

__all__ = [
    "MixtureSpec",
    "CurriculumState",
    "MixtureResult",
    "SyntheticPool",
    "WavDirectoryPool",
    "sample_scene",
    "spatialize_and_mix",
    "curriculum_step",
    "generate_batch",
]


def _check_range(name, rng):
    lo, hi = rng
    if lo > hi:
        raise ValueError(f"{name} range is empty: {rng}")


@dataclass
class MixtureSpec:
    """Sampling ranges for one training utterance."""

    n_speakers: int = 2
    sir_db: tuple = (-6.0, 6.0)
    snr_db: tuple = (10.0, 20.0)
    min_overlap_ratio: float = 0.5
    speaker_distance: tuple = (0.3, 6.0)
    t60_range: tuple = (0.1, 0.7)
    room_length: tuple = (3.0, 10.0)
    room_width: tuple = (3.0, 10.0)
    room_height: tuple = (2.5, 4.0)
    elevation_range: tuple = (-np.pi / 4, np.pi / 4)
    mic_spacings: tuple = (0.04, 0.08, 0.04)
    sample_rate: int = 16000
    num_images: int = 2048
    utterance_seconds: float = 4.0
    # "full": power ratios measured over the whole utterance at the
    # reference channel (channel 0); "overlap" restricts the interferer
    # power to the overlapped region.
    sir_scope: str = "full"

    def __post_init__(self):
        if self.n_speakers < 1:
            raise ValueError("need at least one speaker")
        for name in (
            "sir_db",
            "snr_db",
            "speaker_distance",
            "t60_range",
            "room_length",
            "room_width",
            "room_height",
            "elevation_range",
        ):
            _check_range(name, getattr(self, name))
        if not 0.0 <= self.min_overlap_ratio <= 1.0:
            raise ValueError("min_overlap_ratio must be in [0, 1]")
        if self.sir_scope not in ("full", "overlap"):
            raise ValueError("sir_scope must be 'full' or 'overlap'")


@dataclass(frozen=True)
class CurriculumState:
    """Epoch-indexed cap on the sampled decay range, in milliseconds."""

    epoch: int = 0
    lower_ms: float = 50.0
    upper_ms: float = 100.0
    step_ms: float = 50.0
    max_ms: float = 700.0

    @property
    def t60_bounds(self) -> tuple:
        return self.lower_ms / 1000.0, self.upper_ms / 1000.0


def curriculum_step(state: CurriculumState) -> CurriculumState:
    """Advance one epoch: raise the upper bound by the step, capped."""
    return replace(
        state,
        epoch=state.epoch + 1,
        upper_ms=min(state.upper_ms + state.step_ms, state.max_ms),
    )


@dataclass
class MixtureResult:
    mixture: np.ndarray          # (M, N)
    sources: list                # per speaker, (M, N) reverberant reference
    early_sources: list          # per speaker, (M, N) early-reverb reference
    noise: np.ndarray            # (M, N)
    metadata: dict


@dataclass(frozen=True)
class SyntheticPool:
    """Self-contained source material: amplitude-modulated filtered noise.

    Stands in for speech when no corpus is wired up; spectrum and envelope
    are shaped enough to exercise overlap, scaling and feature paths.
    """

    lowpass_hz: float = 3800.0
    modulation_hz: float = 3.0

    def draw(self, rng: np.random.Generator, n_samples: int, sample_rate: int) -> np.ndarray:
        x = rng.standard_normal(n_samples)
        # crude spectral tilt: leaky integrator, then remove DC
        a = math.exp(-2.0 * math.pi * self.lowpass_hz / sample_rate)
        from scipy.signal import lfilter

        x = lfilter([1.0 - a], [1.0, -a], x)
        x -= x.mean()
        t = np.arange(n_samples) / sample_rate
        phase = rng.uniform(0.0, 2.0 * np.pi)
        envelope = 0.55 + 0.45 * np.sin(2.0 * np.pi * self.modulation_hz * t + phase)
        x = x * envelope
        peak = np.abs(x).max()
        return x / peak if peak > 0 else x


@dataclass(frozen=True)
class WavDirectoryPool:
    """Clean mono WAV files from a user-supplied directory."""

    directory: str

    def _files(self):
        import pathlib

        files = sorted(pathlib.Path(self.directory).glob("*.wav"))
        if not files:
            raise ValueError(f"no .wav files under {self.directory}")
        return files

    def draw(self, rng: np.random.Generator, n_samples: int, sample_rate: int) -> np.ndarray:
        from .io import read_wav

        files = self._files()
        x, fs = read_wav(files[int(rng.integers(len(files)))])
        if fs != sample_rate:
            raise ValueError(f"expected {sample_rate} Hz material, got {fs} Hz")
        x = x[0] if x.ndim == 2 else x
        if len(x) >= n_samples:
            start = int(rng.integers(len(x) - n_samples + 1))
            return x[start : start + n_samples]
        reps = int(np.ceil(n_samples / len(x)))
        return np.tile(x, reps)[:n_samples]


def sample_scene(
    spec: MixtureSpec,
    rng: np.random.Generator,
    curriculum: CurriculumState | None = None,
) -> tuple:
    """Draw one utterance's (Scene, SimParams).

    The scene holds the speaker placements followed by the point-noise
    placement as its last source. The decay target honors the curriculum's
    current upper bound when one is supplied.
    """
    room = (
        rng.uniform(*spec.room_length),
        rng.uniform(*spec.room_width),
        rng.uniform(*spec.room_height),
    )
    if curriculum is not None:
        lo, hi = curriculum.t60_bounds
    else:
        lo, hi = spec.t60_range
    t60 = rng.uniform(lo, hi)

    placements = []
    for _ in range(spec.n_speakers + 1):  # + point noise
        placements.append(
            (
                rng.uniform(*spec.speaker_distance),
                rng.uniform(0.0, 2.0 * np.pi),
                rng.uniform(*spec.elevation_range),
            )
        )
    scene = Scene(
        room_dims=room,
        mic_positions=linear_array(spec.mic_spacings),
        sources=placements,
    )
    params = SimParams(
        t60=t60,
        sample_rate=spec.sample_rate,
        num_images=spec.num_images,
        seed=int(rng.integers(2**63)),
    )
    return scene, params


def _convolve_multichannel(x: np.ndarray, rir: np.ndarray) -> np.ndarray:
    # (N,) dry signal against (M, L) filter -> (M, N + L - 1)
    return fftconvolve(rir, x[None, :], axes=1)


def _power(x: np.ndarray) -> float:
    return float(np.mean(x**2))


def spatialize_and_mix(
    sources: list,
    noise: np.ndarray,
    rirs: list,
    spec: MixtureSpec,
    rng: np.random.Generator,
    sir_db: list | None = None,
    snr_db: float | None = None,
    offsets: list | None = None,
) -> MixtureResult:
    """Convolve, overlap and scale one utterance.

    `rirs` holds one RirResult per speaker plus one for the noise (last).
    Interferers are scaled so the reference-channel power ratio against the
    first speaker equals the drawn SIR; the noise is scaled against the
    first speaker for the drawn SNR. Gains are applied to the returned
    references as well, so targets stay consistent with the mixture.
    """
    if len(rirs) != len(sources) + 1:
        raise ValueError("need one RIR per speaker plus one for the noise")
    n0 = len(sources[0])
    min_len = min(len(s) for s in sources)

    if offsets is None:
        offsets = [0]
        for k in range(1, len(sources)):
            need = math.ceil(spec.min_overlap_ratio * min(n0, len(sources[k])))
            hi = n0 - need
            if hi < 0:
                raise ValueError(
                    f"speaker {k} is shorter than the required overlap window"
                )
            offsets.append(int(rng.integers(0, hi + 1)))
    for k in range(1, len(sources)):
        nk = len(sources[k])
        achieved = max(0, min(n0, offsets[k] + nk) - offsets[k]) / min(n0, nk)
        if achieved < spec.min_overlap_ratio:
            raise ValueError(
                f"speaker {k} overlap ratio {achieved:.2f} is below the "
                f"required {spec.min_overlap_ratio}"
            )
    if sir_db is None:
        sir_db = [float(rng.uniform(*spec.sir_db)) for _ in range(len(sources) - 1)]
    if snr_db is None:
        snr_db = float(rng.uniform(*spec.snr_db))

    rir_len = rirs[0].full.n_samples
    total = max(off + len(s) for off, s in zip(offsets, sources)) + rir_len - 1

    placed_full, placed_early = [], []
    for k, (src, off) in enumerate(zip(sources, offsets)):
        img = _convolve_multichannel(src, rirs[k].full.samples)
        out = np.zeros((img.shape[0], total))
        out[:, off : off + img.shape[1]] = img
        placed_full.append(out)
        if rirs[k].early is not None:
            img_e = _convolve_multichannel(src, rirs[k].early.samples)
            out_e = np.zeros((img_e.shape[0], total))
            out_e[:, off : off + img_e.shape[1]] = img_e
            placed_early.append(out_e)
        else:
            placed_early.append(out.copy())

    # reference-channel scaling
    gains = [1.0]
    p_ref = _power(placed_full[0][0])
    for k in range(1, len(sources)):
        if spec.sir_scope == "overlap":
            lo = offsets[k]
            hi = min(total, offsets[k] + len(sources[k]) + rir_len - 1)
            p_int = _power(placed_full[k][0, lo:hi])
            p_tgt = _power(placed_full[0][0, lo:hi])
        else:
            p_int = _power(placed_full[k][0])
            p_tgt = p_ref
        g = math.sqrt(p_tgt / (p_int * 10.0 ** (sir_db[k - 1] / 10.0)))
        gains.append(g)
        placed_full[k] *= g
        placed_early[k] *= g

    # full-utterance point noise
    dry_len = total - rir_len + 1
    reps = int(np.ceil(dry_len / len(noise)))
    noise_dry = np.tile(noise, reps)[:dry_len]
    noise_img = _convolve_multichannel(noise_dry, rirs[-1].full.samples)[:, :total]
    g_noise = math.sqrt(p_ref / (_power(noise_img[0]) * 10.0 ** (snr_db / 10.0)))
    noise_img *= g_noise

    mixture = sum(placed_full) + noise_img
    overlap_ratios = []
    for k in range(1, len(sources)):
        ov = max(0, min(n0, offsets[k] + len(sources[k])) - offsets[k])
        overlap_ratios.append(ov / min(n0, len(sources[k])))

    return MixtureResult(
        mixture=mixture,
        sources=placed_full,
        early_sources=placed_early,
        noise=noise_img,
        metadata={
            "offsets": offsets,
            "gains": gains,
            "noise_gain": g_noise,
            "sir_db": sir_db,
            "snr_db": snr_db,
            "overlap_ratios": overlap_ratios,
        },
    )


def _generate_item(args) -> MixtureResult:
    spec, curriculum, seed, index, pool = args
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), int(index)))))
    scene, params = sample_scene(spec, rng, curriculum)
    n_dry = int(spec.utterance_seconds * spec.sample_rate)
    sources = [pool.draw(rng, n_dry, spec.sample_rate) for _ in range(spec.n_speakers)]
    noise = pool.draw(rng, n_dry, spec.sample_rate)
    rirs = simulate_rir(params, scene)
    result = spatialize_and_mix(sources, noise, rirs, spec, rng)
    # training batches travel as float32 (and cross process boundaries)
    result.mixture = result.mixture.astype(np.float32)
    result.sources = [s.astype(np.float32) for s in result.sources]
    result.early_sources = [s.astype(np.float32) for s in result.early_sources]
    result.noise = result.noise.astype(np.float32)
    result.metadata.update(
        {
            "index": index,
            "seed": seed,
            "sim_seed": params.seed,
            "t60": params.t60,
            "room_dims": list(scene.room_dims),
            "doas_deg": [
                float(np.degrees(s[1])) for s in np.atleast_2d(scene.sources)
            ],
            "distances": [float(s[0]) for s in np.atleast_2d(scene.sources)],
        }
    )
    return result


def generate_batch(
    batch_size: int,
    spec: MixtureSpec,
    curriculum: CurriculumState | None = None,
    seed: int = 0,
    workers: int = 1,
    pool=None,
    executor: ProcessPoolExecutor | None = None,
) -> list:
    """Generate `batch_size` independent utterances.

    Per-item seeds derive from (seed, item index), so the content is
    reproducible and identical for any worker count. Items run in parallel
    worker processes when workers > 1; pass a long-lived `executor` to keep
    workers warm across batches, as a training loop would.
    """
    if batch_size < 0:
        raise ValueError("batch_size must be >= 0")
    if pool is None:
        pool = SyntheticPool()
    jobs = [(spec, curriculum, seed, i, pool) for i in range(batch_size)]
    if executor is not None:
        return list(executor.map(_generate_item, jobs))
    if workers <= 1 or batch_size <= 1:
        return [_generate_item(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as owned:
        return list(owned.map(_generate_item, jobs))
