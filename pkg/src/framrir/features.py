"""Spectral and directional verification features.

Log-power spectra, inter-channel phase differences, direction-matched phase
templates, angle features, directional power ratios over a fixed beam grid,
and mask-based MVDR beampatterns. Shapes follow the (T, F, M) convention for
multi-channel spectrograms.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.signal import ShortTimeFFT, get_window

from .params import SOUND_SPEED

__all__ = [
    "StftSpec",
    "stft",
    "istft",
    "lps",
    "ipd",
    "tpd",
    "angle_feature",
    "plane_wave_steering",
    "superdirective_grid",
    "directional_power_ratio",
    "irm_masks",
    "mask_covariance",
    "mvdr_weights",
    "mvdr_beampattern",
]

_EPS = 1e-12


@dataclass(frozen=True)
class StftSpec:
    """Analysis frame layout; frame 32 ms / hop 8 ms unless overridden."""

    sample_rate: int
    frame_ms: float = 32.0
    hop_ms: float = 8.0
    window: str = "hann"

    def __post_init__(self):
        if not 0 < self.hop_ms < self.frame_ms:
            raise ValueError("need 0 < hop < frame")

    @property
    def frame_samples(self) -> int:
        return int(round(self.frame_ms * self.sample_rate / 1000.0))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_ms * self.sample_rate / 1000.0))

    @property
    def n_bins(self) -> int:
        return self.frame_samples // 2 + 1

    def _transform(self) -> ShortTimeFFT:
        win = get_window(self.window, self.frame_samples)
        return ShortTimeFFT(
            win, hop=self.hop_samples, fs=self.sample_rate, fft_mode="onesided"
        )


def stft(x: np.ndarray, spec: StftSpec) -> np.ndarray:
    """
    Analysis transform.
    Arguments:
        x: (N,) or (M, N) waveform at spec.sample_rate
    Return:
        (T, F) or (T, F, M) complex spectrogram
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < spec.frame_samples:
        raise ValueError(
            f"signal of {n} samples is shorter than one {spec.frame_samples}-sample frame"
        )
    sft = spec._transform()
    spectro = sft.stft(x, axis=-1)  # (..., F, T)
    if spectro.ndim == 2:
        return spectro.T
    return np.moveaxis(spectro, (0, 1, 2), (2, 1, 0))


def istft(y: np.ndarray, spec: StftSpec, n_samples: int) -> np.ndarray:
    """Inverse of :func:`stft`; reconstructs the first n_samples."""
    y = np.asarray(y)
    if y.ndim == 2:
        spectro = y.T
    else:
        spectro = np.moveaxis(y, (0, 1, 2), (2, 1, 0))
    sft = spec._transform()
    return sft.istft(spectro, k1=n_samples)


def lps(y: np.ndarray, ref_channel: int = 0) -> np.ndarray:
    """Log power spectrum of one channel, in dB. (T, F)."""
    y = np.asarray(y)
    if y.ndim == 3:
        y = y[..., ref_channel]
    return 10.0 * np.log10(np.abs(y) ** 2 + _EPS)


def ipd(y: np.ndarray, pair: tuple) -> np.ndarray:
    """
    Observed inter-channel phase difference for one mic pair.
    Arguments:
        y: (T, F, M) spectrogram
        pair: (m1, m2) channel indexes
    Return:
        (T, F) phase differences wrapped to (-pi, pi]
    """
    m1, m2 = pair
    return np.angle(y[..., m1] * np.conj(y[..., m2]))


def _propagation_unit(azimuth: float, elevation: float = 0.0) -> np.ndarray:
    return np.array(
        [
            np.cos(elevation) * np.cos(azimuth),
            np.cos(elevation) * np.sin(azimuth),
            np.sin(elevation),
        ]
    )


def pair_delay_samples(
    azimuth: float,
    pair: tuple,
    mic_positions: np.ndarray,
    spec: StftSpec,
    elevation: float = 0.0,
    sound_speed: float = SOUND_SPEED,
) -> float:
    """Far-field TDOA of a mic pair toward a direction, in samples."""
    mics = np.atleast_2d(np.asarray(mic_positions, dtype=float))
    u = _propagation_unit(azimuth, elevation)
    m1, m2 = pair
    return float((mics[m1] - mics[m2]) @ u / sound_speed * spec.sample_rate)


def tpd(
    azimuth: float,
    pair: tuple,
    mic_positions: np.ndarray,
    spec: StftSpec,
    elevation: float = 0.0,
    sound_speed: float = SOUND_SPEED,
) -> np.ndarray:
    """
    Target phase differences a plane wave from `azimuth` would produce.
    Return:
        (F,) phases 2*pi*f/(2*(F-1)) * tau_pair, f = 0..F-1
    """
    tau = pair_delay_samples(azimuth, pair, mic_positions, spec, elevation, sound_speed)
    f = np.arange(spec.n_bins)
    return 2.0 * np.pi * f / (2.0 * (spec.n_bins - 1)) * tau


def angle_feature(
    y: np.ndarray,
    azimuth: float,
    mic_positions: np.ndarray,
    spec: StftSpec,
    pairs: list | None = None,
    elevation: float = 0.0,
    sound_speed: float = SOUND_SPEED,
) -> np.ndarray:
    """
    Direction match between observed and target phase differences, summed
    over mic pairs as cos(TPD - IPD).
    Arguments:
        y: (T, F, M) spectrogram
        azimuth: steering direction in rad
        pairs: mic pairs; defaults to all M*(M-1)/2 combinations
    Return:
        (T, F) angle feature, bounded by the number of pairs
    """
    if y.ndim != 3:
        raise ValueError("expected a (T, F, M) spectrogram")
    n_mics = y.shape[-1]
    if pairs is None:
        pairs = list(itertools.combinations(range(n_mics), 2))
    if len(pairs) < 1:
        raise ValueError("need at least one mic pair")
    out = np.zeros(y.shape[:2])
    for pair in pairs:
        target = tpd(azimuth, pair, mic_positions, spec, elevation, sound_speed)
        out += np.cos(target[None, :] - ipd(y, pair))
    return out


def plane_wave_steering(
    azimuth: float,
    mic_positions: np.ndarray,
    spec: StftSpec,
    elevation: float = 0.0,
    sound_speed: float = SOUND_SPEED,
) -> np.ndarray:
    """
    Free-field steering vectors for all bins.
    Return:
        (F, M) complex, exp(j * 2*pi*f/nfft * tau_m) with tau_m the
        per-mic advance toward the source
    """
    mics = np.atleast_2d(np.asarray(mic_positions, dtype=float))
    u = _propagation_unit(azimuth, elevation)
    tau = mics @ u / sound_speed * spec.sample_rate  # samples, per mic
    f = np.arange(spec.n_bins)
    nfft = 2 * (spec.n_bins - 1)
    return np.exp(1j * 2.0 * np.pi * f[:, None] / nfft * tau[None, :])


def superdirective_grid(
    mic_positions: np.ndarray,
    spec: StftSpec,
    n_beams: int = 36,
    diag_load: float = 1e-3,
    sound_speed: float = SOUND_SPEED,
):
    """
    Fixed beam grid for the directional power ratio: superdirective weights
    w = Gamma^-1 d / (d^H Gamma^-1 d) against a sinc diffuse-coherence model.
    Return:
        (weights (V, F, M) complex, azimuths (V,) rad)
    """
    mics = np.atleast_2d(np.asarray(mic_positions, dtype=float))
    n_mics = mics.shape[0]
    azimuths = np.arange(n_beams) * (2.0 * np.pi / n_beams)
    dist = np.sqrt(((mics[:, None, :] - mics[None, :, :]) ** 2).sum(-1))
    freqs = np.arange(spec.n_bins) * spec.sample_rate / (2.0 * (spec.n_bins - 1))
    # Gamma: (F, M, M) diffuse coherence with diagonal loading
    gamma = np.sinc(2.0 * freqs[:, None, None] * dist[None, :, :] / sound_speed)
    gamma = gamma + diag_load * np.eye(n_mics)[None, :, :]
    gamma_inv = np.linalg.inv(gamma)

    weights = np.zeros((n_beams, spec.n_bins, n_mics), dtype=complex)
    for v, az in enumerate(azimuths):
        d = plane_wave_steering(az, mics, spec, sound_speed=sound_speed)  # (F, M)
        num = np.einsum("fij,fj->fi", gamma_inv, d)
        den = np.einsum("fi,fi->f", np.conj(d), num).real
        weights[v] = num / np.maximum(den, _EPS)[:, None]
    return weights, azimuths


def directional_power_ratio(
    y: np.ndarray, target_beam: int, beam_weights: np.ndarray
) -> np.ndarray:
    """
    Power of the target beam against the whole grid, per T-F bin.
    Arguments:
        y: (T, F, M) spectrogram
        target_beam: index into the grid
        beam_weights: (V, F, M) fixed beamformer coefficients
    Return:
        (T, F) ratios in [0, 1]; bins with no energy get the uniform 1/V
    """
    if not 0 <= target_beam < beam_weights.shape[0]:
        raise ValueError("target_beam outside the grid")
    # (V, T, F) beam powers
    powers = np.abs(np.einsum("vfm,tfm->vtf", np.conj(beam_weights), y)) ** 2
    denom = powers.sum(axis=0)
    n_beams = beam_weights.shape[0]
    out = np.full(denom.shape, 1.0 / n_beams)
    nz = denom > 0
    out[nz] = powers[target_beam][nz] / denom[nz]
    return out


def irm_masks(reference_specs: list, eps: float = _EPS) -> list:
    """Ideal ratio masks |S_k| / sum_j |S_j| from per-source references."""
    mags = [np.abs(np.asarray(s)) for s in reference_specs]
    total = sum(mags) + eps
    return [m / total for m in mags]


def mask_covariance(y: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """
    Mask-weighted spatial covariance.
    Arguments:
        y: (T, F, M) spectrogram
        mask: (T, F) weights in [0, 1]
    Return:
        (F, M, M) complex covariance per bin
    """
    weighted = mask[..., None] * y
    num = np.einsum("tfi,tfj->fij", weighted, np.conj(y))
    den = np.maximum(mask.sum(axis=0), _EPS)
    return num / den[:, None, None]


def mvdr_weights(
    noise_cov: np.ndarray, steering: np.ndarray, diag_load: float = 1e-6
) -> np.ndarray:
    """
    Minimum-variance distortionless weights w = Phi^-1 d / (d^H Phi^-1 d).
    Diagonal loading (relative to the per-bin trace) keeps the solve stable
    for singular covariances.
    Arguments:
        noise_cov: (F, M, M)
        steering: (F, M)
    Return:
        (F, M) complex weights with w^H d = 1 per bin
    """
    n_bins, n_mics, _ = noise_cov.shape
    trace = np.einsum("fii->f", noise_cov).real
    load = diag_load * np.maximum(trace, _EPS) / n_mics
    phi = noise_cov + load[:, None, None] * np.eye(n_mics)[None, :, :]
    num = np.linalg.solve(phi, steering[..., None])[..., 0]  # (F, M)
    den = np.einsum("fi,fi->f", np.conj(steering), num)
    return num / np.where(np.abs(den) > _EPS, den, _EPS)[:, None]


def mvdr_beampattern(
    mixture: np.ndarray,
    masks: list,
    scan_azimuths: np.ndarray,
    mic_positions: np.ndarray,
    spec: StftSpec,
    target: int = 0,
    steer_azimuth: float | None = None,
    diag_load: float = 1e-6,
    sound_speed: float = SOUND_SPEED,
):
    """
    Beampattern of a mask-based MVDR beamformer over a direction grid.

    The interference-plus-noise covariance is estimated with the sum of the
    non-target masks. Steering uses the exact plane wave when
    `steer_azimuth` is given, otherwise the principal component of the
    mask-weighted target covariance.
    Arguments:
        mixture: (M, N) waveform
        masks: list of (T, F) oracle masks in [0, 1], one per source
        scan_azimuths: (D,) directions to scan, rad
    Return:
        (magnitudes (D, F), weights (F, M))
    """
    mixture = np.atleast_2d(np.asarray(mixture, dtype=float))
    if mixture.shape[0] == 1:
        n_bins = spec.n_bins
        return np.ones((len(scan_azimuths), n_bins)), np.ones((n_bins, 1), dtype=complex)
    y = stft(mixture, spec)  # (T, F, M)

    noise_mask = np.clip(sum(m for k, m in enumerate(masks) if k != target), 0.0, 1.0)
    noise_cov = mask_covariance(y, noise_mask)

    if steer_azimuth is not None:
        steering = plane_wave_steering(
            steer_azimuth, mic_positions, spec, sound_speed=sound_speed
        )
    else:
        target_cov = mask_covariance(y, np.asarray(masks[target]))
        _, vecs = np.linalg.eigh(target_cov)
        principal = vecs[..., -1]  # (F, M)
        phase = principal[:, :1] / np.maximum(np.abs(principal[:, :1]), _EPS)
        steering = principal * np.conj(phase) * np.sqrt(principal.shape[-1])

    weights = mvdr_weights(noise_cov, steering, diag_load=diag_load)
    pattern = np.zeros((len(scan_azimuths), spec.n_bins))
    for i, az in enumerate(scan_azimuths):
        a = plane_wave_steering(az, mic_positions, spec, sound_speed=sound_speed)
        pattern[i] = np.abs(np.einsum("fm,fm->f", np.conj(weights), a))
    return pattern, weights
