"""Wall-clock benchmarks: per-RIR simulation cost and batch generation."""

import json
import os
import platform
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import simulate_rir
from .ism import IsmConfig, ism_rir
from .mixture import MixtureSpec, generate_batch, sample_scene

__all__ = ["BenchReport", "bench_rir", "bench_ism", "bench_batch"]

SCHEMA_VERSION = 1


@dataclass
class BenchReport:
    method: str
    threads: int
    n_items: int
    total_seconds: float
    seconds_per_item: float
    host: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.total_seconds <= 0 or self.seconds_per_item <= 0:
            raise ValueError("timings must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _host_info() -> dict:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "cpu_count": os.cpu_count(),
        "python": platform.python_version(),
    }


def _rir_workload(n_rooms, sources_per_room, spec, seed):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((int(seed), 0xBE))))
    work = []
    for _ in range(n_rooms):
        room_spec = MixtureSpec(
            n_speakers=sources_per_room - 1 if sources_per_room > 1 else 1,
            sample_rate=spec.sample_rate,
            num_images=spec.num_images,
            mic_spacings=spec.mic_spacings,
        )
        work.append(sample_scene(room_spec, rng))
    return work


def _run_fram(job):
    scene, params = job
    simulate_rir(params, scene, include_early=False)


def bench_rir(
    n_rooms: int = 20,
    sources_per_room: int = 3,
    threads: int = 1,
    spec: MixtureSpec | None = None,
    repeats: int = 3,
    warmup: int = 1,
    seed: int = 0,
) -> BenchReport:
    """Median wall-clock cost of simulating n_rooms x sources_per_room RIRs."""
    spec = spec or MixtureSpec()
    work = _rir_workload(n_rooms, sources_per_room, spec, seed)
    for job in work[: max(warmup, 1)]:
        _run_fram(job)

    times = []
    if threads <= 1:
        for _ in range(repeats):
            tic = time.perf_counter()
            for job in work:
                _run_fram(job)
            times.append(time.perf_counter() - tic)
    else:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            list(executor.map(_run_fram, work[:threads]))  # pool warmup
            for _ in range(repeats):
                tic = time.perf_counter()
                list(executor.map(_run_fram, work))
                times.append(time.perf_counter() - tic)

    total = statistics.median(times)
    n_rirs = n_rooms * sources_per_room
    return BenchReport(
        method="fram",
        threads=threads,
        n_items=n_rirs,
        total_seconds=total,
        seconds_per_item=total / n_rirs,
        host=_host_info(),
        extra={"n_rooms": n_rooms, "sources_per_room": sources_per_room,
               "seconds_per_call": total / n_rooms, "repeats": repeats},
    )


def bench_ism(
    n_rooms: int = 5,
    sources_per_room: int = 3,
    spec: MixtureSpec | None = None,
    repeats: int = 1,
    seed: int = 0,
) -> BenchReport:
    """Single-thread cost of the image-source reference on a matched workload."""
    spec = spec or MixtureSpec()
    work = _rir_workload(n_rooms, sources_per_room, spec, seed)
    rng = np.random.default_rng(seed)

    configs = []
    for scene, params in work:
        dims = np.asarray(scene.room_dims)
        center = dims / 2.0
        mics = np.asarray(scene.mic_positions) + center
        for _ in range(sources_per_room):
            src = rng.uniform(0.3, dims - 0.3)
            configs.append(
                IsmConfig(
                    room_dims=tuple(dims),
                    source_position=tuple(src),
                    mic_positions=mics,
                    t60=params.t60,
                    sample_rate=params.sample_rate,
                )
            )
    ism_rir(configs[0])  # warmup

    times = []
    for _ in range(repeats):
        tic = time.perf_counter()
        for cfg in configs:
            ism_rir(cfg)
        times.append(time.perf_counter() - tic)
    total = statistics.median(times)
    return BenchReport(
        method="ism",
        threads=1,
        n_items=len(configs),
        total_seconds=total,
        seconds_per_item=total / len(configs),
        host=_host_info(),
        extra={"n_rooms": n_rooms, "sources_per_room": sources_per_room},
    )


def bench_batch(
    spec: MixtureSpec | None = None,
    workers: tuple = (1, 2, 4, 8),
    n_batches: int = 4,
    batch_size: int = 1,
    seed: int = 0,
) -> list:
    """Seconds per generated batch for each worker count.

    One warm-up batch per configuration is excluded from the timing.
    """
    spec = spec or MixtureSpec(utterance_seconds=2.0)
    reports = []
    for w in workers:
        if w <= 1:
            executor = None
            generate_batch(batch_size, spec, seed=seed)  # warmup
            batch_times = []
            for b in range(n_batches):
                tic = time.perf_counter()
                generate_batch(batch_size, spec, seed=seed + 1 + b)
                batch_times.append(time.perf_counter() - tic)
        else:
            # keep workers warm across batches, dataloader-style; the
            # warm-up batch absorbs pool startup and is excluded
            with ProcessPoolExecutor(max_workers=w) as executor:
                generate_batch(batch_size, spec, seed=seed, executor=executor)
                batch_times = []
                for b in range(n_batches):
                    tic = time.perf_counter()
                    generate_batch(
                        batch_size, spec, seed=seed + 1 + b, executor=executor
                    )
                    batch_times.append(time.perf_counter() - tic)
        per_batch = statistics.median(batch_times)
        reports.append(
            BenchReport(
                method="batch",
                threads=w,
                n_items=n_batches,
                total_seconds=sum(batch_times),
                seconds_per_item=per_batch,
                host=_host_info(),
                extra={"batch_size": batch_size},
            )
        )
    return reports
