"""Command-line entry point: simulate | mix | features | bench."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import bench_batch, bench_ism, bench_rir
from .core import simulate_rir
from .features import (
    StftSpec,
    angle_feature,
    directional_power_ratio,
    ipd,
    irm_masks,
    lps,
    mvdr_beampattern,
    stft,
    superdirective_grid,
)
from .io import (
    RirRecord,
    config_curriculum,
    config_mixture_spec,
    config_scene,
    config_sim_params,
    load_config,
    read_wav,
    write_rir_container,
    write_wav,
)
from .mixture import WavDirectoryPool, generate_batch
from .params import Scene, SimParams, linear_array


def _parse_floats(text):
    return [float(v) for v in text.replace(";", ",").split(",") if v != ""]


def _simulate_scene(args):
    if args.config:
        cfg = load_config(args.config)
        params = config_sim_params(cfg, **({"seed": args.seed} if args.seed is not None else {}))
        scene = config_scene(cfg)
        return params, scene
    if args.t60 is None:
        raise SystemExit2("--t60 is required without --config")
    mics = linear_array(_parse_floats(args.spacing))
    sources = []
    for spec_str in args.source or ["1.5,0,0"]:
        d, az_deg, el_deg = _parse_floats(spec_str)
        sources.append((d, np.radians(az_deg), np.radians(el_deg)))
    params = SimParams(
        t60=args.t60,
        sample_rate=args.fs,
        num_images=args.images,
        seed=args.seed if args.seed is not None else int.from_bytes(np.random.bytes(4), "little"),
    )
    scene = Scene(room_dims=tuple(_parse_floats(args.room)), mic_positions=mics, sources=sources)
    return params, scene


class SystemExit2(SystemExit):
    def __init__(self, message):
        print(f"error: {message}", file=sys.stderr)
        super().__init__(2)


def cmd_simulate(args) -> int:
    params, scene = _simulate_scene(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = simulate_rir(params, scene, include_early=args.early)

    records = []
    for k, res in enumerate(results):
        variants = [res.full] + ([res.early] if res.early is not None else [])
        for filt in variants:
            if args.format == "wav":
                path = out_dir / f"src{k}_{filt.kind}.wav"
                write_wav(path, filt.samples, filt.sample_rate)
            else:
                records.append(
                    RirRecord(
                        samples=filt.samples.astype(np.float32),
                        sample_rate=filt.sample_rate,
                        kind=filt.kind,
                        seed=params.seed,
                    )
                )
        meta = dict(res.full.metadata)
        meta.update(
            {
                "source": k,
                "azimuth_deg": float(np.degrees(meta.pop("azimuth"))),
                "elevation_deg": float(np.degrees(meta.pop("elevation"))),
                "direct_index": [int(v) for v in res.full.direct_path_sample],
                "n_samples": res.full.n_samples,
            }
        )
        print(json.dumps(meta))
    if args.format == "frir":
        write_rir_container(out_dir / "rirs.frir", records)
    if args.plot:
        from .plots import save_rir_overview

        for k, res in enumerate(results):
            save_rir_overview(res.full, out_dir / f"src{k}_full.png")
    return 0


def cmd_mix(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    spec = config_mixture_spec(cfg)
    curriculum = config_curriculum(cfg)
    pool = WavDirectoryPool(args.speech_dir) if args.speech_dir else None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    batch = generate_batch(
        args.n, spec, curriculum=curriculum, seed=args.seed, workers=args.workers, pool=pool
    )
    for item in batch:
        idx = item.metadata["index"]
        write_wav(out_dir / f"mix{idx:04d}.wav", item.mixture, spec.sample_rate)
        for s, (full, early) in enumerate(zip(item.sources, item.early_sources)):
            write_wav(out_dir / f"mix{idx:04d}_src{s}.wav", full, spec.sample_rate)
            write_wav(out_dir / f"mix{idx:04d}_src{s}_early.wav", early, spec.sample_rate)
        with open(out_dir / f"mix{idx:04d}.json", "w") as fh:
            json.dump(item.metadata, fh, indent=2)
    print(json.dumps({"written": len(batch), "out": str(out_dir)}))
    return 0


def _save_grid(values, out_dir, name, fmt):
    if fmt == "npy":
        path = out_dir / f"{name}.npy"
        np.save(path, values)
    else:
        path = out_dir / f"{name}.csv"
        np.savetxt(path, values, delimiter=",")
    return path


def cmd_features(args) -> int:
    waveform, fs = read_wav(args.input)
    spec = StftSpec(sample_rate=fs, frame_ms=args.frame_ms, hop_ms=args.hop_ms)
    mics = linear_array(_parse_floats(args.spacing))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    y = stft(waveform, spec)
    if y.ndim == 2:
        y = y[:, :, None]

    written = {}
    hop_s = spec.hop_samples / fs

    def emit(name, values, title):
        written[name] = str(_save_grid(values, out_dir, name, args.format))
        if args.plot:
            from .plots import save_feature_map

            save_feature_map(values, out_dir / f"{name}.png", title, hop_s, fs)

    if args.lps:
        emit("lps", lps(y), "log power spectrum (dB)")
    if args.ipd:
        pair = tuple(int(v) for v in _parse_floats(args.pair))
        emit(f"cosipd_{pair[0]}{pair[1]}", np.cos(ipd(y, pair)), "cos IPD")
    if args.af:
        if args.doa is None:
            raise SystemExit2("--af needs --doa")
        emit(
            f"af_{int(args.doa)}",
            angle_feature(y, np.radians(args.doa), mics, spec),
            f"angle feature at {args.doa} deg",
        )
    if args.dpr:
        weights, azimuths = superdirective_grid(mics, spec, n_beams=args.beams)
        target = int(np.argmin(np.abs(np.degrees(azimuths) - (args.doa or 0.0))))
        emit(
            f"dpr_{int(np.degrees(azimuths[target]))}",
            directional_power_ratio(y, target, weights),
            "directional power ratio",
        )
    if args.beampattern:
        if not args.refs:
            raise SystemExit2("--beampattern needs --refs (one per source)")
        refs = [read_wav(p)[0][0] for p in args.refs]
        masks = irm_masks([stft(r, spec) for r in refs])
        scan = np.radians(np.arange(0, 360, 5.0))
        steer = np.radians(args.doa) if args.doa is not None else None
        pattern, _ = mvdr_beampattern(
            waveform, masks, scan, mics, spec, steer_azimuth=steer
        )
        written["beampattern"] = str(_save_grid(pattern, out_dir, "beampattern", args.format))
        if args.plot:
            from .plots import save_beampattern

            save_beampattern(pattern, np.arange(0, 360, 5.0), out_dir / "beampattern.png", fs)
    if not written:
        raise SystemExit2("nothing to do; pass --lps/--ipd/--af/--dpr/--beampattern")
    print(json.dumps(written))
    return 0


def cmd_bench(args) -> int:
    reports = []
    for t in (int(v) for v in _parse_floats(args.threads)):
        reports.append(bench_rir(n_rooms=args.rooms, sources_per_room=args.sources, threads=t))
    if args.ism:
        reports.append(bench_ism(n_rooms=min(args.rooms, 5), sources_per_room=args.sources))
    batch_reports = []
    if args.batch:
        workers = tuple(int(v) for v in _parse_floats(args.workers))
        batch_reports = bench_batch(workers=workers, n_batches=args.batches)
    payload = [r.to_dict() for r in reports + batch_reports]
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        if args.plot and batch_reports:
            from .plots import save_bench_curve

            save_bench_curve(batch_reports, Path(args.out).with_suffix(".png"))
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framrir",
        description="Fast stochastic multi-channel RIR simulation and verification tools",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate RIR filters")
    p_sim.add_argument("--config", help="JSON config with sim/scene sections")
    p_sim.add_argument("--t60", type=float, help="reverberation time in seconds")
    p_sim.add_argument("--fs", type=int, default=16000)
    p_sim.add_argument("--images", type=int, default=2048)
    p_sim.add_argument("--spacing", default="0.04,0.08,0.04",
                       help="linear array gap widths in meters")
    p_sim.add_argument("--room", default="5,4,3")
    p_sim.add_argument("--source", action="append",
                       help="distance_m,azimuth_deg,elevation_deg (repeatable)")
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--early", action="store_true", help="also write the early filter")
    p_sim.add_argument("--format", choices=("wav", "frir"), default="wav")
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--plot", action="store_true")
    p_sim.set_defaults(func=cmd_simulate)

    p_mix = sub.add_parser("mix", help="generate mixtures")
    p_mix.add_argument("--config")
    p_mix.add_argument("--n", type=int, default=1)
    p_mix.add_argument("--seed", type=int, default=0)
    p_mix.add_argument("--workers", type=int, default=1)
    p_mix.add_argument("--speech-dir")
    p_mix.add_argument("--out", required=True)
    p_mix.set_defaults(func=cmd_mix)

    p_feat = sub.add_parser("features", help="compute verification features")
    p_feat.add_argument("input", help="multi-channel WAV")
    p_feat.add_argument("--lps", action="store_true")
    p_feat.add_argument("--ipd", action="store_true")
    p_feat.add_argument("--af", action="store_true")
    p_feat.add_argument("--dpr", action="store_true")
    p_feat.add_argument("--beampattern", action="store_true")
    p_feat.add_argument("--doa", type=float, help="steering azimuth in degrees")
    p_feat.add_argument("--pair", default="0,1")
    p_feat.add_argument("--beams", type=int, default=36)
    p_feat.add_argument("--refs", nargs="+", help="per-source reference WAVs for masks")
    p_feat.add_argument("--spacing", default="0.04,0.08,0.04")
    p_feat.add_argument("--frame-ms", type=float, default=32.0)
    p_feat.add_argument("--hop-ms", type=float, default=8.0)
    p_feat.add_argument("--format", choices=("csv", "npy"), default="csv")
    p_feat.add_argument("--out", required=True)
    p_feat.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p_feat.set_defaults(func=cmd_features)

    p_bench = sub.add_parser("bench", help="benchmark simulation throughput")
    p_bench.add_argument("--threads", default="1")
    p_bench.add_argument("--rooms", type=int, default=10)
    p_bench.add_argument("--sources", type=int, default=3)
    p_bench.add_argument("--ism", action="store_true", help="also time the image-source reference")
    p_bench.add_argument("--batch", action="store_true", help="also time batch generation")
    p_bench.add_argument("--workers", default="1,2,4,8")
    p_bench.add_argument("--batches", type=int, default=4)
    p_bench.add_argument("--out")
    p_bench.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
