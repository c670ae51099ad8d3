"""File formats: WAV I/O, the "FRIR" filter container, JSON config."""

import json
import struct
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .mixture import CurriculumState, MixtureSpec
from .params import Scene, SimParams

__all__ = [
    "read_wav",
    "write_wav",
    "RirRecord",
    "write_rir_container",
    "read_rir_container",
    "load_config",
    "validate_config",
    "config_sim_params",
    "config_scene",
    "config_mixture_spec",
    "config_curriculum",
]

MAGIC = b"FRIR"
CONTAINER_VERSION = 1
KIND_CODES = {"full": 0, "early": 1}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}


def write_wav(path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float32 WAV; channels along the first axis."""
    data = np.atleast_2d(np.asarray(samples, dtype=np.float32))
    wavfile.write(path, int(sample_rate), data.T if data.shape[0] > 1 else data[0])


def read_wav(path):
    """Read a WAV as float64 in [-1, 1], shape (M, N). Integer PCM is
    normalized by its type range."""
    sample_rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        data = data / 32768.0
    elif data.dtype == np.int32:
        data = data / 2147483648.0
    elif data.dtype == np.uint8:
        data = (data.astype(float) - 128.0) / 128.0
    else:
        data = data.astype(np.float64)
    if data.ndim == 1:
        data = data[None, :]
    else:
        data = data.T
    return data, int(sample_rate)


@dataclass
class RirRecord:
    """One container entry; float32 payload, channel-major."""

    samples: np.ndarray  # (M, N)
    sample_rate: int
    kind: str = "full"
    seed: int = 0


_RECORD_HEADER = struct.Struct("<HIIBQ")  # n_channels, n_samples, f_s, kind, seed
_FILE_HEADER = struct.Struct("<4sHI")     # magic, version, count


def write_rir_container(path, records: list) -> None:
    with open(path, "wb") as fh:
        fh.write(_FILE_HEADER.pack(MAGIC, CONTAINER_VERSION, len(records)))
        for rec in records:
            data = np.ascontiguousarray(np.atleast_2d(rec.samples), dtype="<f4")
            m, n = data.shape
            fh.write(
                _RECORD_HEADER.pack(m, n, int(rec.sample_rate), KIND_CODES[rec.kind], rec.seed)
            )
            fh.write(data.tobytes())


def read_rir_container(path) -> list:
    with open(path, "rb") as fh:
        head = fh.read(_FILE_HEADER.size)
        if len(head) != _FILE_HEADER.size:
            raise ValueError("truncated container header")
        magic, version, count = _FILE_HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != CONTAINER_VERSION:
            raise ValueError(f"unsupported container version {version}")
        records = []
        for _ in range(count):
            rh = fh.read(_RECORD_HEADER.size)
            if len(rh) != _RECORD_HEADER.size:
                raise ValueError("truncated record header")
            m, n, fs, kind, seed = _RECORD_HEADER.unpack(rh)
            payload = fh.read(4 * m * n)
            if len(payload) != 4 * m * n:
                raise ValueError("record payload shorter than declared")
            samples = np.frombuffer(payload, dtype="<f4").reshape(m, n)
            records.append(
                RirRecord(samples=samples, sample_rate=fs, kind=KIND_NAMES[kind], seed=seed)
            )
        return records


_KNOWN_KEYS = {
    "sim": {
        "t60", "sample_rate", "num_images", "alpha", "beta",
        "perturb_lo", "perturb_hi", "tau", "sound_speed", "seed",
    },
    "scene": {"room_dims", "mic_positions", "mic_spacings", "sources", "reference_point"},
    "mixture": {
        "n_speakers", "sir_db", "snr_db", "min_overlap_ratio", "speaker_distance",
        "t60_range", "room_length", "room_width", "room_height", "elevation_range",
        "mic_spacings", "sample_rate", "num_images", "utterance_seconds", "sir_scope",
    },
    "curriculum": {"epoch", "lower_ms", "upper_ms", "step_ms", "max_ms"},
}


def validate_config(cfg: dict) -> dict:
    """Reject unknown sections or keys; value validation happens in the
    dataclass constructors."""
    if not isinstance(cfg, dict):
        raise ValueError("config root must be an object")
    unknown_sections = set(cfg) - set(_KNOWN_KEYS)
    if unknown_sections:
        raise ValueError(f"unknown config sections: {sorted(unknown_sections)}")
    for section, keys in _KNOWN_KEYS.items():
        if section in cfg:
            if not isinstance(cfg[section], dict):
                raise ValueError(f"config section {section!r} must be an object")
            bad = set(cfg[section]) - keys
            if bad:
                raise ValueError(f"unknown keys in {section!r}: {sorted(bad)}")
    return cfg


def load_config(path) -> dict:
    with open(path) as fh:
        return validate_config(json.load(fh))


def config_sim_params(cfg: dict, **overrides) -> SimParams:
    kwargs = dict(cfg.get("sim", {}))
    kwargs.update(overrides)
    return SimParams(**kwargs)


def config_scene(cfg: dict) -> Scene:
    section = dict(cfg.get("scene", {}))
    if "mic_spacings" in section:
        from .params import linear_array

        section["mic_positions"] = linear_array(section.pop("mic_spacings"))
    return Scene(**section)


def config_mixture_spec(cfg: dict) -> MixtureSpec:
    section = {
        k: tuple(v) if isinstance(v, list) else v
        for k, v in cfg.get("mixture", {}).items()
    }
    return MixtureSpec(**section)


def config_curriculum(cfg: dict):
    if "curriculum" not in cfg:
        return None
    return CurriculumState(**cfg["curriculum"])
