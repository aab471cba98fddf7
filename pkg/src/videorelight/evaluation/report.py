"""Evaluation harness: the temporal sampler against its per-frame baseline
(temporal attention bypassed, one noise seed per frame), plus the optional
brightness-ensemble comparison on perturbed inputs."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data.pairs import brightness_augment
from ..diffusion.sampling import SamplerConfig, iie_sample, make_bundle, per_frame_sample, sample
from .metrics import albedo_preservation, psnr, smoothness_proxy, ssim

METRICS = ("psnr", "ssim", "smoothness", "albedo_err")
HIGHER_IS_BETTER = {"psnr": True, "ssim": True, "smoothness": False, "albedo_err": False}


@dataclass
class EvalReport:
    per_sample: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    win_rates: dict = field(default_factory=dict)

    def methods(self) -> list[str]:
        return sorted({row["method"] for row in self.per_sample})

    def rows_for(self, method: str) -> list[dict]:
        rows = [r for r in self.per_sample if r["method"] == method]
        return sorted(rows, key=lambda r: r["sample"])

    def compute_aggregates(self) -> dict:
        out = {}
        for method in self.methods():
            rows = self.rows_for(method)
            out[method] = {m: float(np.mean([r[m] for r in rows])) for m in METRICS}
            out[method]["count"] = len(rows)
        return out

    def compute_win_rates(self, a: str = "temporal", b: str = "per_frame") -> dict:
        rows_a = self.rows_for(a)
        rows_b = self.rows_for(b)
        if len(rows_a) != len(rows_b):
            raise ValueError(f"method row counts differ: {len(rows_a)} vs {len(rows_b)}")
        out = {}
        for m in METRICS:
            wins = 0
            for ra, rb in zip(rows_a, rows_b):
                if HIGHER_IS_BETTER[m]:
                    wins += ra[m] > rb[m]
                else:
                    wins += ra[m] < rb[m]
            out[m] = wins / max(len(rows_a), 1)
        return out

    def finalize(self) -> "EvalReport":
        self.aggregates = self.compute_aggregates()
        methods = self.methods()
        if "temporal" in methods and "per_frame" in methods:
            self.win_rates["temporal_vs_per_frame"] = self.compute_win_rates()
        return self

    def to_dict(self) -> dict:
        return {"per_sample": self.per_sample, "aggregates": self.aggregates,
                "win_rates": self.win_rates}

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(per_sample=d["per_sample"], aggregates=d["aggregates"],
                   win_rates=d["win_rates"])

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["sample", "method", *METRICS])
            writer.writeheader()
            for row in sorted(self.per_sample,
                              key=lambda r: (r["sample"], r["method"])):
                writer.writerow(row)


def _metric_row(sample_id: int, method: str, pred, gt, mask) -> dict:
    return {
        "sample": sample_id,
        "method": method,
        "psnr": psnr(pred, gt),
        "ssim": ssim(pred, gt),
        "smoothness": smoothness_proxy(pred),
        "albedo_err": albedo_preservation(pred, gt, mask),
    }


def _bg_bundle(pipeline, s):
    f, h, w, _ = s.v_rel.shape
    return make_bundle(pipeline, f, h, w, v_rel=s.v_rel, v_bg=s.v_bg)


def compare_modes(pipeline, samples, cfg: SamplerConfig,
                  collect_videos: int = 0) -> tuple[EvalReport, dict]:
    """Background-conditioned relighting, temporal vs per-frame, one row per
    (sample, method). Returns the report plus up to ``collect_videos``
    rendered examples for contact sheets."""
    report = EvalReport()
    examples = {}
    for i, s in enumerate(samples):
        bundle = _bg_bundle(pipeline, s)
        run_cfg = SamplerConfig(steps=cfg.steps, eta=cfg.eta,
                                guidance=cfg.guidance, seed=cfg.seed + i)
        pred_t = sample(pipeline, bundle, run_cfg)
        pred_f = per_frame_sample(pipeline, bundle, run_cfg)
        report.per_sample.append(_metric_row(i, "temporal", pred_t, s.v_appr, s.mask))
        report.per_sample.append(_metric_row(i, "per_frame", pred_f, s.v_appr, s.mask))
        if i < collect_videos:
            examples[i] = {"input": s.v_rel, "temporal": pred_t,
                           "per_frame": pred_f, "target": s.v_appr}
    return report.finalize(), examples


def iie_comparison(pipeline, samples, cfg: SamplerConfig, n_aug: int = 3,
                   perturb_seed: int = 0) -> EvalReport:
    """Ensemble vs single-input albedo robustness on brightness-perturbed
    inputs: each held-out input is rescaled before relighting."""
    rng = np.random.default_rng(perturb_seed)
    report = EvalReport()
    for i, s in enumerate(samples):
        scale = float(rng.uniform(0.6, 1.5))
        v_in = brightness_augment(s.v_rel, scale)
        f, h, w, _ = v_in.shape
        bundle = make_bundle(pipeline, f, h, w, v_rel=v_in, v_bg=s.v_bg)
        run_cfg = SamplerConfig(steps=cfg.steps, eta=cfg.eta,
                                guidance=cfg.guidance, seed=cfg.seed + i)
        pred_1 = iie_sample(pipeline, v_in, bundle, 1, run_cfg)
        pred_n = iie_sample(pipeline, v_in, bundle, n_aug, run_cfg)
        report.per_sample.append(_metric_row(i, "iie1", pred_1, s.v_appr, s.mask))
        report.per_sample.append(_metric_row(i, f"iie{n_aug}", pred_n, s.v_appr, s.mask))
    report.aggregates = report.compute_aggregates()
    report.win_rates[f"iie{n_aug}_vs_iie1"] = report.compute_win_rates(f"iie{n_aug}", "iie1")
    return report


def copy_input_psnr(samples) -> float:
    """The do-nothing baseline: report the input video as the prediction."""
    return float(np.mean([psnr(s.v_rel, s.v_appr) for s in samples]))
