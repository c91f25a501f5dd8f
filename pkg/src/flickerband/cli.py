"""Command-line entry point.

Subcommands::

    synth      banded/clean training pairs from a directory of clean PNGs
    decompose  low/mid/high band images, recomposition and band energies
    taloss     trajectory-alignment loss on MFG4 feature fixtures
    evaluate   PSNR / SSIM / MS-SSIM / GMSD of restored vs reference images
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__, banding, metrics, specband, traj
from .config import SNAPSHOT_NAME, RunConfig, dump_config, file_seed, load_config
from .imagecore import (ImagePlanes, encode_png, load_image, read_mfg4, save_image,
                        write_jsonl, write_mfrg)
from .isp import IspParams

log = logging.getLogger("flickerband")

MANIFEST_NAME = "manifest.jsonl"
ISP_STREAM = 100
COMPONENT_OFFSET = {"low": 0.0, "mid": 0.5, "high": 0.5}


def _pngs(directory: str | Path) -> list[Path]:
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() == ".png" and p.is_file())


def _fan_out(fn: Callable, jobs: Sequence, workers: int) -> list:
    """Ordered map over ``jobs``; in-process when ``workers`` is 1."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


# -- synth -------------------------------------------------------------------

def _synth_one(job: tuple[dict, str]) -> dict:
    cfg_dict, src = job
    cfg = RunConfig.from_dict(cfg_dict)
    src = Path(src)
    try:
        seed = file_seed(cfg.seed, src.name)
        spec = cfg.banding.draw(seed)
        if cfg.isp.randomize:
            isp = IspParams.randomized(np.random.default_rng([seed, ISP_STREAM]))
        else:
            isp = cfg.isp.params()
        clean = load_image(src)
        res = banding.synthesize(clean, spec, isp, source_path=src.name, output_path=src.name)
        out_dir = Path(cfg.output)
        (out_dir / src.name).write_bytes(encode_png(res.degraded.to_hwc(), cfg.synth.bit_depth))
        if cfg.synth.save_raw:
            write_mfrg(out_dir / f"{src.stem}.raw.mfrg", res.banded_raw.data)
        return {"ok": True, "manifest": res.manifest}
    except Exception as exc:  # reported per file, run continues
        return {"ok": False, "error": f"{src.name}: {exc}"}


def cmd_synth(cfg: RunConfig) -> int:
    inputs, out = _io_dirs(cfg)
    if inputs.resolve() == out.resolve():
        raise SystemExit("--output must differ from --input for synth")
    files = _pngs(inputs)
    jobs = [(cfg.to_dict(), str(f)) for f in files]
    results = _fan_out(_synth_one, jobs, cfg.resolved_workers)
    failures = [r["error"] for r in results if not r["ok"]]
    write_jsonl(out / MANIFEST_NAME, [r["manifest"] for r in results if r["ok"]])
    dump_config(cfg, out / SNAPSHOT_NAME)
    for msg in failures:
        log.error(msg)
    log.info("synth: %d ok, %d failed", len(results) - len(failures), len(failures))
    return 1 if failures else 0


# -- decompose ---------------------------------------------------------------

def _decompose_one(job: tuple[dict, str]) -> dict:
    cfg_dict, src = job
    cfg = RunConfig.from_dict(cfg_dict)
    src = Path(src)
    try:
        img = load_image(src)
        part = cfg.specband.partition(img.height, img.width)
        comps = specband.decompose(img, part)
        out_dir = Path(cfg.output)
        depth = cfg.specband.bit_depth
        for name, comp in zip(specband.BAND_NAMES, comps):
            write_mfrg(out_dir / f"{src.stem}_{name}.mfrg", comp)
            shown = np.clip(comp + COMPONENT_OFFSET[name], 0.0, 1.0)
            (out_dir / f"{src.stem}_{name}.png").write_bytes(
                encode_png(np.transpose(shown, (1, 2, 0)), depth))
        save_image(specband.recompose(img, part), out_dir / f"{src.stem}_recomposed.png", depth)
        sidecar = {
            "source": src.name,
            "height": img.height,
            "width": img.width,
            "partition": part.params(),
            "png_offsets": COMPONENT_OFFSET,
            **specband.band_energies(img, part),
        }
        with open(out_dir / f"{src.stem}_bands.json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
        return {"ok": True}
    except Exception as exc:
        return {"ok": False, "error": f"{src.name}: {exc}"}


def cmd_decompose(cfg: RunConfig) -> int:
    inputs, out = _io_dirs(cfg)
    jobs = [(cfg.to_dict(), str(f)) for f in _pngs(inputs)]
    results = _fan_out(_decompose_one, jobs, cfg.resolved_workers)
    dump_config(cfg, out / SNAPSHOT_NAME)
    failures = [r["error"] for r in results if not r["ok"]]
    for msg in failures:
        log.error(msg)
    return 1 if failures else 0


# -- taloss ------------------------------------------------------------------

def _load_stacks(directory: Path, timestep: int) -> list[traj.FeatureStack]:
    return [traj.FeatureStack(read_mfg4(p), p.stem, timestep)
            for p in sorted(directory.glob("*.mfg4"))]


def cmd_taloss(cfg: RunConfig) -> int:
    if not cfg.input:
        raise SystemExit("--input is required")
    t = cfg.taloss
    if t.layer_weights is None or t.gamma is None:
        raise SystemExit("taloss needs taloss.layer_weights and taloss.gamma in the config")
    root = Path(cfg.input)
    lq = _load_stacks(root / "lq", t.timestep)
    gt = _load_stacks(root / "gt", t.timestep)
    ta_cfg = traj.TAConfig({str(k): float(v) for k, v in t.layer_weights.items()},
                           float(t.gamma), float(t.eps))
    total = traj.total_ta_loss(lq, gt, ta_cfg)
    result = {
        "timestep": t.timestep,
        "per_layer": traj.per_layer_losses(lq, gt, t.eps),
        "layer_weights": ta_cfg.layer_weights,
        "gamma": ta_cfg.global_gamma,
        "total": total,
    }
    text = json.dumps(result, indent=2, sort_keys=True)
    print(text)
    if cfg.output:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "taloss.json").write_text(text + "\n", encoding="utf-8")
        dump_config(cfg, out / SNAPSHOT_NAME)
    return 0


# -- evaluate ----------------------------------------------------------------

def center_crop(img: ImagePlanes, size: int = 512) -> ImagePlanes:
    if img.height < size or img.width < size:
        log.warning("image %dx%d smaller than %d crop; using full frame", img.height, img.width, size)
        return img
    top = (img.height - size) // 2
    left = (img.width - size) // 2
    return img.with_data(img.data[:, top:top + size, left:left + size])


def _evaluate_one(job: tuple[str, str, bool]) -> dict:
    restored, reference, crop = job
    name = Path(restored).name
    try:
        a, b = load_image(restored), load_image(reference)
        if crop:
            a, b = center_crop(a), center_crop(b)
        return {"ok": True, "report": metrics.report(a, b, name).to_dict()}
    except Exception as exc:
        return {"ok": False, "error": f"{name}: {exc}"}


def cmd_evaluate(cfg: RunConfig) -> int:
    if not cfg.input or not cfg.reference:
        raise SystemExit("evaluate needs --input (restored) and --reference (ground truth)")
    restored = {p.name: p for p in _pngs(cfg.input)}
    reference = {p.name: p for p in _pngs(cfg.reference)}
    unmatched = sorted(set(restored) ^ set(reference))
    if unmatched:
        log.error("unmatched filenames between directories: %s", ", ".join(unmatched))
        return 2
    jobs = [(str(restored[n]), str(reference[n]), cfg.crop512) for n in sorted(restored)]
    results = _fan_out(_evaluate_one, jobs, cfg.resolved_workers)
    rows = [r["report"] for r in results if r["ok"]]
    failures = [r["error"] for r in results if not r["ok"]]
    for msg in failures:
        log.error(msg)
    out = Path(cfg.output) if cfg.output else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(out / "metrics.jsonl", rows)
        _write_summary(out / "summary.csv", rows)
        dump_config(cfg, out / SNAPSHOT_NAME)
    else:
        for r in rows:
            print(json.dumps(r, sort_keys=True))
    return 1 if failures else 0


_CSV_COLS = ("name", "psnr_db", "ssim", "ms_ssim", "gmsd")


def _write_summary(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_COLS)
        for r in rows:
            w.writerow([r[c] for c in _CSV_COLS])
        if rows:
            w.writerow(["mean"] + [float(np.mean([r[c] for r in rows])) for c in _CSV_COLS[1:]])


# -- argument handling -------------------------------------------------------

def _io_dirs(cfg: RunConfig) -> tuple[Path, Path]:
    if not cfg.input or not cfg.output:
        raise SystemExit("--input and --output are required")
    inputs = Path(cfg.input)
    if not inputs.is_dir():
        raise SystemExit(f"input directory {inputs} does not exist")
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return inputs, out


COMMANDS = {
    "synth": cmd_synth,
    "decompose": cmd_decompose,
    "taloss": cmd_taloss,
    "evaluate": cmd_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flickerband", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML run config; flags override it")
        p.add_argument("--input")
        p.add_argument("--output")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "evaluate":
            p.add_argument("--reference", help="ground-truth directory")
            p.add_argument("--crop512", action="store_true", default=None,
                           help="score the central 512x512 crop")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    for key in ("input", "output", "seed", "workers", "reference", "crop512"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def main(argv: Iterable[str] | None = None) -> int:
    args = build_parser().parse_args(None if argv is None else list(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = resolve_config(args)
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
