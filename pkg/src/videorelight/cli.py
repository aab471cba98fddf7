"""Command-line entry point: gen-data, train, relight, evaluate, grid.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
Every command writes exactly one run manifest whose hashes make the run
reconstructable. ``RELIGHT_THREADS`` caps torch parallelism; 0 selects the
deterministic single-threaded mode the acceptance suite uses.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import DataError, NumericError, __version__
from .tensorio import TENSOR_SUFFIX, TensorIOError, read_tensor, write_tensor
from .training.checkpoint import CheckpointError


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _config_hash(obj) -> str:
    return hashlib.sha256(
        json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _manifest_path(out: Path) -> Path:
    if out.suffix:  # file-like output: manifest sits alongside
        return out.with_name(out.stem + ".manifest.json")
    return out / "run_manifest.json"


def _write_manifest(out: Path, command: str, config_hash: str,
                    dataset_hash: str | None, checkpoint_hash: str | None,
                    seed: int | None, wall_time: float) -> Path:
    manifest = {
        "command": command,
        "config_hash": config_hash,
        "dataset_hash": dataset_hash,
        "checkpoint_hash": checkpoint_hash,
        "seed": seed,
        "tool_version": __version__,
        "wall_time": wall_time,
    }
    path = _manifest_path(out)
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return path


def _prepare_out(out: Path, force: bool) -> Path:
    """Refuse to clobber existing outputs unless --force."""
    if out.suffix:
        if out.exists() and not force:
            raise DataError(f"output {out} exists; pass --force to overwrite")
        out.parent.mkdir(parents=True, exist_ok=True)
        return out
    if out.exists() and any(out.iterdir()) and not force:
        raise DataError(f"output directory {out} is not empty; pass --force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError as e:
        raise click.UsageError(f"--size must look like 32x32, got {text!r}") from e


def configure_threads() -> None:
    import torch

    value = os.environ.get("RELIGHT_THREADS")
    if value is None:
        return
    try:
        n = int(value)
    except ValueError as e:
        raise DataError(f"RELIGHT_THREADS must be an integer, got {value!r}") from e
    torch.set_num_threads(1 if n <= 0 else n)


@click.group()
@click.version_option(__version__)
def cli() -> None:
    """Desk-scale video relighting: data generation, two-stage training,
    relighting inference, evaluation, and contact sheets."""
    configure_threads()


@cli.command("gen-data")
@click.option("--count", type=int, required=True, help="Number of pairs.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--frames", type=int, default=8, show_default=True)
@click.option("--size", default="32x32", show_default=True, help="HxW frame size.")
@click.option("--force", is_flag=True, help="Overwrite an existing output.")
def gen_data(count: int, seed: int, out_dir: Path, frames: int, size: str,
             force: bool) -> None:
    """Generate a paired relighting dataset with exact ground truth."""
    from .data import GeneratorConfig, generate_dataset, write_dataset
    from .data.dataset import dataset_hash

    height, width = _parse_size(size)
    if count < 1:
        raise click.UsageError("--count must be positive")
    t0 = time.monotonic()
    out_dir = _prepare_out(out_dir, force)
    try:
        cfg = GeneratorConfig(frames=frames, height=height, width=width).validate()
    except ValueError as e:
        raise click.UsageError(str(e)) from e
    samples = generate_dataset(count, seed, cfg)
    write_dataset(samples, out_dir, seeds=[seed] * count,
                  extra_meta={"root_seed": seed, "frames": frames,
                              "height": height, "width": width})
    cfg_hash = _config_hash({"command": "gen-data", "count": count, "seed": seed,
                             "frames": frames, "height": height, "width": width})
    _write_manifest(out_dir, "gen-data", cfg_hash, dataset_hash(out_dir), None,
                    seed, time.monotonic() - t0)
    click.echo(f"wrote {count} samples to {out_dir}")


def _load_run_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read config {path}: {e}") from e


@cli.command("train")
@click.option("--stage", type=click.Choice(["spatial", "temporal"]), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="JSON with 'model'/'schedule'/'train' sections.")
@click.option("--data", "data_dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--force", is_flag=True)
def train_cmd(stage: str, config_path: Path | None, data_dir: Path,
              out_dir: Path, force: bool) -> None:
    """Train one stage: 'spatial' pretrains the image backbone on frame
    slices, 'temporal' finetunes the frame-axis and lighting paths with the
    spatial backbone frozen."""
    from .data.dataset import dataset_hash, read_dataset
    from .diffusion.schedule import ScheduleConfig
    from .model.config import ModelConfig
    from .pipeline import RelightPipeline
    from .training import TrainConfig, load_pipeline, train

    t0 = time.monotonic()
    out_dir = _prepare_out(out_dir, force)
    raw = _load_run_config(config_path)
    stage_name = "spatial_pretrain" if stage == "spatial" else "temporal_finetune"
    train_dict = {**raw.get("train", {}), "stage": stage_name}
    try:
        train_cfg = TrainConfig.from_dict(train_dict)
    except (TypeError, ValueError) as e:
        raise click.UsageError(f"bad train config: {e}") from e

    samples = read_dataset(data_dir)
    ds_hash = dataset_hash(data_dir)

    if train_cfg.init_checkpoint:
        pipeline, _ = load_pipeline(train_cfg.init_checkpoint)
    else:
        try:
            model_cfg = ModelConfig.from_dict(raw.get("model", {}))
            sched_cfg = ScheduleConfig.from_dict(raw.get("schedule", {}))
        except (TypeError, ValueError) as e:
            raise click.UsageError(f"bad model/schedule config: {e}") from e
        pipeline = RelightPipeline.create(model_cfg, sched_cfg, seed=train_cfg.seed)
        if stage_name == "temporal_finetune":
            click.echo("note: temporal finetune from scratch (no init_checkpoint)",
                       err=True)

    ckpt = train(pipeline, samples, train_cfg, out_dir, dataset_hash=ds_hash)
    cfg_hash = _config_hash({"command": "train", "stage": stage_name,
                             "train": train_cfg.to_dict(),
                             "model": pipeline.cfg.to_dict(),
                             "schedule": pipeline.schedule_cfg.to_dict()})
    _write_manifest(out_dir, "train", cfg_hash, ds_hash, _sha256_file(ckpt),
                    train_cfg.seed, time.monotonic() - t0)
    click.echo(f"final checkpoint: {ckpt}")


def _save_video_outputs(video: np.ndarray, out_dir: Path) -> None:
    from PIL import Image

    write_tensor(out_dir / f"video{TENSOR_SUFFIX}", video)
    for k in range(video.shape[0]):
        frame = np.clip(video[k] * 255.0 + 0.5, 0, 255).astype(np.uint8)
        Image.fromarray(frame).save(out_dir / f"frame_{k:03d}.png")


@cli.command("relight")
@click.option("--ckpt", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--input", "input_dir", type=click.Path(exists=True, path_type=Path),
              required=True, help="A sample directory (from gen-data).")
@click.option("--mode", type=click.Choice(["bg", "text", "hdr", "all"]),
              default="bg", show_default=True)
@click.option("--iie", "iie_n", type=int, default=1, show_default=True,
              help="Brightness-ensemble branches; 1 disables the ensemble.")
@click.option("--steps", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--prompt", default=None,
              help="Space-separated vocabulary tokens (required for text mode).")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--force", is_flag=True)
def relight_cmd(ckpt: Path, input_dir: Path, mode: str, iie_n: int, steps: int,
                seed: int, prompt: str | None, out_dir: Path, force: bool) -> None:
    """Relight one input video under the chosen conditioning mode."""
    from .data.dataset import read_sample
    from .data.prompts import parse_prompt
    from .diffusion.sampling import SamplerConfig, iie_sample, make_bundle, sample
    from .training import load_pipeline

    t0 = time.monotonic()
    if mode in ("text",) and not prompt:
        raise click.UsageError(
            "text mode needs --prompt, e.g. --prompt 'from-upper-left-front amber bright'")
    if iie_n < 1:
        raise click.UsageError("--iie must be >= 1")
    tokens = None
    if prompt:
        try:
            tokens = parse_prompt(prompt)
        except ValueError as e:
            raise click.UsageError(str(e)) from e

    out_dir = _prepare_out(out_dir, force)
    sample_obj = read_sample(input_dir)
    if mode == "all" and tokens is None:
        tokens = sample_obj.prompt  # stored target-light description
    pipeline, _ = load_pipeline(ckpt)
    pipeline.eval_mode()

    f, h, w, _ = sample_obj.v_rel.shape
    bundle = make_bundle(
        pipeline, f, h, w,
        v_rel=sample_obj.v_rel,
        v_bg=sample_obj.v_bg if mode in ("bg", "all") else None,
        prompt=tokens if mode in ("text", "all") else None,
        env=sample_obj.env if mode in ("hdr", "all") else None,
    )
    run_cfg = SamplerConfig(steps=steps, seed=seed)
    try:
        run_cfg.validate(pipeline.schedule.timesteps)
    except ValueError as e:
        raise click.UsageError(str(e)) from e
    if iie_n == 1:
        video = sample(pipeline, bundle, run_cfg)
    else:
        video = iie_sample(pipeline, sample_obj.v_rel, bundle, iie_n, run_cfg)
    if not np.all(np.isfinite(video)):
        raise NumericError("sampler produced non-finite values")
    _save_video_outputs(video, out_dir)

    meta_hash = _sha256_file(input_dir / "meta.json")
    cfg_hash = _config_hash({"command": "relight", "mode": mode, "iie": iie_n,
                             "steps": steps, "seed": seed,
                             "prompt": list(tokens) if tokens else None})
    _write_manifest(out_dir, "relight", cfg_hash, meta_hash, _sha256_file(ckpt),
                    seed, time.monotonic() - t0)
    click.echo(f"relit video written to {out_dir}")


@cli.command("evaluate")
@click.option("--ckpt", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--data", "data_dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True,
              help="Report JSON path; CSV and figures are written alongside.")
@click.option("--steps", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--iie", "iie_n", type=int, default=0,
              help="Also run the N-branch ensemble comparison (0 = skip).")
@click.option("--force", is_flag=True)
def evaluate_cmd(ckpt: Path, data_dir: Path, out_path: Path, steps: int,
                 seed: int, iie_n: int, force: bool) -> None:
    """Temporal sampler vs per-frame baseline over a held-out dataset."""
    from .data.dataset import dataset_hash, read_dataset
    from .diffusion.sampling import SamplerConfig
    from .evaluation import compare_modes, copy_input_psnr, iie_comparison
    from .evaluation.figures import save_report_figures
    from .training import load_pipeline

    t0 = time.monotonic()
    out_path = _prepare_out(out_path, force)
    samples = read_dataset(data_dir)
    pipeline, _ = load_pipeline(ckpt)
    pipeline.eval_mode()
    run_cfg = SamplerConfig(steps=steps, seed=seed)
    report, _ = compare_modes(pipeline, samples, run_cfg)
    if iie_n > 1:
        extra = iie_comparison(pipeline, samples, run_cfg, n_aug=iie_n,
                               perturb_seed=seed)
        report.per_sample.extend(extra.per_sample)
        report.aggregates = report.compute_aggregates()
        report.win_rates.update(extra.win_rates)
    report.win_rates["copy_input_psnr"] = copy_input_psnr(samples)
    report.write_json(out_path)
    report.write_csv(out_path.with_suffix(".csv"))
    figures = save_report_figures(report, out_path.with_suffix(""))

    for method, agg in sorted(report.aggregates.items()):
        click.echo(f"{method:>10}: " + "  ".join(
            f"{m}={agg[m]:.4f}" for m in ("psnr", "ssim", "smoothness", "albedo_err")))
    cfg_hash = _config_hash({"command": "evaluate", "steps": steps, "seed": seed,
                             "iie": iie_n})
    _write_manifest(out_path, "evaluate", cfg_hash, dataset_hash(data_dir),
                    _sha256_file(ckpt), seed, time.monotonic() - t0)
    click.echo(f"report: {out_path} (+ {out_path.with_suffix('.csv').name}, "
               f"{', '.join(f.name for f in figures)})")


@cli.command("grid")
@click.option("--video", "video_dir", type=click.Path(exists=True, path_type=Path),
              required=True, help="Directory of .vrt video tensors.")
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--force", is_flag=True)
def grid_cmd(video_dir: Path, out_path: Path, force: bool) -> None:
    """Render a frames-by-videos PNG contact sheet."""
    from .evaluation.figures import save_contact_sheet

    t0 = time.monotonic()
    out_path = _prepare_out(out_path, force)
    videos = {}
    for path in sorted(Path(video_dir).glob(f"*{TENSOR_SUFFIX}")):
        arr = read_tensor(path)
        if arr.ndim == 4 and arr.shape[-1] == 3:
            videos[path.stem] = arr
    if not videos:
        raise DataError(f"no {TENSOR_SUFFIX} video tensors found in {video_dir}")
    save_contact_sheet(videos, out_path)
    cfg_hash = _config_hash({"command": "grid", "videos": sorted(videos)})
    _write_manifest(out_path, "grid", cfg_hash, None, None, None,
                    time.monotonic() - t0)
    click.echo(f"contact sheet: {out_path}")


def dispatch(argv: list[str]) -> int:
    """Run one subcommand; returns the exit code instead of raising."""
    try:
        cli.main(args=list(argv), prog_name="videorelight", standalone_mode=False)
        return 0
    except click.UsageError as e:
        e.show(file=sys.stderr)
        return 2
    except click.ClickException as e:
        e.show(file=sys.stderr)
        return 2
    except click.Abort:
        return 2
    except (DataError, TensorIOError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except CheckpointError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
