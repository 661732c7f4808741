"""Configuration-driven benchmark: render scenes, run every method, score, report.

The array path registers all 37 captures; the filter-array and coded-aperture
paths consume only the center camera's ground-truth cube (the first 36 bands
for the 6x6 filter array).  Every reconstruction is scored against the
ground-truth cube on the full image and on the intersected area, and the run
is fully determined by the config and its seeds.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .arrays import build_layout
from .errors import ConfigurationError
from .imgio import save_gray_png, save_mask_png, save_rgb_png
from .metrics import QualityScore, crop_intersection, proportional_border, psnr, ssim
from .registration import RegistrationParams, register_all
from .scenes import SceneSpec, load_scene, random_scene, render_array_capture
from .snapshot import (blue_noise_mask, cassi_forward, default_pattern,
                       demosaic_dwt, demosaic_isd, demosaic_sd, demosaic_wbi,
                       gap_tv_reconstruct, mosaic)
from .spectral import BandPlan, render_rgb_preview

METHODS = ("array-register", "msfa-wbi", "msfa-sd", "msfa-isd", "msfa-dwt",
           "cassi-gap")
MSFA_BANDS = 36


@dataclass(frozen=True)
class BenchmarkConfig:
    scenes: tuple                     # generator seeds (int) or SceneSpec paths (str)
    methods: tuple = METHODS
    layouts: tuple = (("hexagonal", 60.0),)
    image_size: tuple = (320, 240)    # for generated scenes
    frames: tuple = (0,)
    sprites: int = 3
    registration: RegistrationParams = field(default_factory=RegistrationParams)
    gap_iterations: int = 30
    tv_weight: float = 0.05
    tv_steps: int = 5
    mask_seed: int = 7
    border_px: int | None = None      # None -> proportional to image width
    output_dir: str = "bench_out"
    previews: bool = True

    def __post_init__(self):
        if not self.scenes:
            raise ConfigurationError("config needs at least one scene")
        if not self.methods:
            raise ConfigurationError("config needs at least one method")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigurationError(f"unknown methods {unknown}; pick from {METHODS}")
        if not self.layouts:
            raise ConfigurationError("config needs at least one layout")
        if not self.frames:
            raise ConfigurationError("config needs at least one frame index")


@dataclass
class QualityReport:
    rows: list
    averages: dict
    parameters: dict
    timings: dict
    failures: list

    def method_average(self, method: str, region: str) -> tuple[float, float]:
        key = f"{method}|{region}"
        entry = self.averages[key]
        return entry["psnr_db"], entry["ssim"]


def config_to_dict(config: BenchmarkConfig) -> dict:
    data = asdict(config)
    data["registration"] = asdict(config.registration)
    return data


def config_from_dict(data: dict) -> BenchmarkConfig:
    reg = RegistrationParams(**data.get("registration", {}))
    known = {"scenes", "methods", "layouts", "image_size", "frames", "sprites",
             "gap_iterations", "tv_weight", "tv_steps", "mask_seed", "border_px",
             "output_dir", "previews"}
    kwargs = {k: v for k, v in data.items() if k in known}
    for key in ("scenes", "methods", "frames"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if "layouts" in kwargs:
        kwargs["layouts"] = tuple((str(k), float(s)) for k, s in kwargs["layouts"])
    if "image_size" in kwargs:
        kwargs["image_size"] = tuple(int(v) for v in kwargs["image_size"])
    return BenchmarkConfig(registration=reg, **kwargs)


def load_config(path) -> BenchmarkConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(config: BenchmarkConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
        fh.write("\n")


def make_default_config(output_dir: str = "bench_out",
                        scenes=(1, 2, 3, 4, 5), frames=(0, 1, 2),
                        **overrides) -> BenchmarkConfig:
    """Desk-scale default: five generated 320x240 scenes, three frames each."""
    return BenchmarkConfig(scenes=tuple(scenes), frames=tuple(frames),
                           output_dir=output_dir, **overrides)


def _resolve_scenes(config: BenchmarkConfig):
    width, height = config.image_size
    out = []
    for entry in config.scenes:
        if isinstance(entry, (int, np.integer)):
            scene = random_scene(int(entry), width, height, n_sprites=config.sprites,
                                 frames=max(config.frames) + 1)
            out.append((f"gen-{int(entry):03d}", scene))
        else:
            scene = load_scene(entry)
            out.append((Path(entry).stem, scene))
    return out


def _score(rows, scene_id: str, method: str, out_cube, ref_cube, border: int):
    rows.append(QualityScore(scene_id, method, "full",
                             psnr(out_cube, ref_cube), ssim(out_cube, ref_cube)))
    oc = crop_intersection(out_cube, border)
    rc = crop_intersection(ref_cube, border)
    rows.append(QualityScore(scene_id, method, "intersected",
                             psnr(oc, rc), ssim(oc, rc)))


def _averages(rows) -> dict:
    groups: dict = {}
    for r in rows:
        groups.setdefault(f"{r.method}|{r.region}", []).append(r)
    return {
        key: {"psnr_db": float(np.mean([r.psnr_db for r in rs])),
              "ssim": float(np.mean([r.ssim for r in rs])),
              "count": len(rs)}
        for key, rs in groups.items()
    }


class _StageClock:
    def __init__(self):
        self.totals: dict = {}

    def add(self, stage: str, start: float):
        self.totals[stage] = self.totals.get(stage, 0.0) + (time.perf_counter() - start)


def _crop_to_tile(cube, tile: int):
    """Largest cube whose spatial size is a multiple of the pattern tile."""
    h = cube.height - cube.height % tile
    w = cube.width - cube.width % tile
    if (h, w) == (cube.height, cube.width):
        return cube
    from .spectral import HyperCube
    return HyperCube(cube.values[:, :h, :w].copy(), cube.plan)


def _run_method(method: str, config: BenchmarkConfig, layout, plan, images, gt):
    """Dispatch one competitor; returns (output cube, reference cube, extras)."""
    extras: dict = {}
    if method == "array-register":
        details: dict = {}
        cube = register_all(images, layout, config.registration, plan,
                            details=details)
        extras = details
        return cube, gt.cube, extras
    if method.startswith("msfa-"):
        pattern = default_pattern()
        # The 6x6 array needs tile-aligned dimensions; trim the remainder the
        # same way the 37th band is dropped to fit the rectangular pattern.
        center36 = _crop_to_tile(gt.cube.take_bands(MSFA_BANDS),
                                 pattern.cells.shape[0])
        plan36 = BandPlan(MSFA_BANDS, plan.start_nm, plan.step_nm, plan.bandwidth_nm)
        raw = mosaic(center36, pattern)
        demosaic = {"msfa-wbi": demosaic_wbi, "msfa-sd": demosaic_sd,
                    "msfa-dwt": demosaic_dwt}.get(method)
        if demosaic is not None:
            return demosaic(raw, pattern, plan=plan36), center36, extras
        return demosaic_isd(raw, pattern, plan=plan36), center36, extras
    if method == "cassi-gap":
        mask = blue_noise_mask(gt.cube.width, gt.cube.height, config.mask_seed)
        meas = cassi_forward(gt.cube, mask)
        cube = gap_tv_reconstruct(meas, mask, gt.cube.bands,
                                  iterations=config.gap_iterations,
                                  tv_weight=config.tv_weight,
                                  tv_steps=config.tv_steps, plan=plan)
        return cube, gt.cube, extras
    raise ConfigurationError(f"unknown method {method!r}")


def _write_previews(preview_dir: Path, tag: str, gt, outputs: dict,
                    reg_details: dict, max_disparity: float) -> None:
    d = preview_dir / tag
    d.mkdir(parents=True, exist_ok=True)
    save_rgb_png(d / "gt_rgb.png", render_rgb_preview(gt.cube))
    save_gray_png(d / "gt_disparity.png",
                  gt.disparity / max(max_disparity, float(gt.disparity.max())))
    save_mask_png(d / "gt_visibility.png",
                  gt.occlusion.mean(axis=0))
    for method, cube in outputs.items():
        save_rgb_png(d / f"{method.replace('@', '_')}_rgb.png",
                     render_rgb_preview(cube))
    if "disparity" in reg_details:
        est = reg_details["disparity"].values
        save_gray_png(d / "estimated_disparity.png",
                      est / max(max_disparity, float(est.max())))
        save_mask_png(d / "estimated_visibility.png",
                      reg_details["visibility"].mean(axis=0))


def run_benchmark(config: BenchmarkConfig) -> QualityReport:
    """Full evaluation flow over scenes x frames x layouts x methods."""
    plan = BandPlan()
    scenes = _resolve_scenes(config)
    clock = _StageClock()
    rows: list = []
    failures: list = []
    preview_dir = Path(config.output_dir) / "previews"

    for layout_index, (kind, spacing) in enumerate(config.layouts):
        layout = build_layout(kind, spacing)
        for scene_id, scene in scenes:
            for frame in config.frames:
                t0 = time.perf_counter()
                images, gt = render_array_capture(scene, layout, frame, plan)
                clock.add("render", t0)
                tag = f"{scene_id}/f{frame}"
                outputs: dict = {}
                reg_details: dict = {}
                for method in config.methods:
                    # Snapshot competitors see only the center camera; their
                    # result is identical for every layout, so score them once.
                    if method != "array-register" and layout_index > 0:
                        continue
                    label = method
                    if method == "array-register" and len(config.layouts) > 1:
                        label = f"{method}@{kind}"
                    t0 = time.perf_counter()
                    try:
                        cube, ref, extras = _run_method(method, config, layout,
                                                        plan, images, gt)
                    except Exception as exc:  # keep the run going, flag at exit
                        failures.append(f"{tag}:{label}: {exc}")
                        clock.add(label, t0)
                        continue
                    clock.add(label, t0)
                    border = (config.border_px if config.border_px is not None
                              else proportional_border(gt.cube.width))
                    t0 = time.perf_counter()
                    _score(rows, tag, label, cube, ref, border)
                    clock.add("scoring", t0)
                    outputs[label] = cube
                    if extras:
                        reg_details = extras
                if config.previews and layout_index == 0:
                    _write_previews(preview_dir, tag, gt, outputs, reg_details,
                                    config.registration.max_disparity)

    return QualityReport(rows, _averages(rows), config_to_dict(config),
                         clock.totals, failures)


def run_gt_disparity_ablation(config: BenchmarkConfig) -> QualityReport:
    """Registration with estimated vs. injected ground-truth disparity."""
    plan = BandPlan()
    scenes = _resolve_scenes(config)
    kind, spacing = config.layouts[0]
    layout = build_layout(kind, spacing)
    clock = _StageClock()
    rows: list = []
    failures: list = []
    border = config.border_px
    for scene_id, scene in scenes:
        for frame in config.frames:
            t0 = time.perf_counter()
            images, gt = render_array_capture(scene, layout, frame, plan)
            clock.add("render", t0)
            tag = f"{scene_id}/f{frame}"
            b = border if border is not None else proportional_border(gt.cube.width)
            for label, injected in (("array-register", None),
                                    ("array-register-gtdisp", gt.disparity)):
                t0 = time.perf_counter()
                try:
                    cube = register_all(images, layout, config.registration, plan,
                                        disparity=injected)
                except Exception as exc:
                    failures.append(f"{tag}:{label}: {exc}")
                    clock.add(label, t0)
                    continue
                clock.add(label, t0)
                _score(rows, tag, label, cube, gt.cube, b)
    return QualityReport(rows, _averages(rows), config_to_dict(config),
                         clock.totals, failures)


def emit_report(report: QualityReport, output_dir, formats=("csv", "json")) -> dict:
    """Write the report; the CSV is byte-reproducible for identical runs."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    if "csv" in formats:
        path = out / "report.csv"
        lines = ["scene,method,region,psnr_db,ssim"]
        lines += [f"{r.scene},{r.method},{r.region},{r.psnr_db:.6f},{r.ssim:.6f}"
                  for r in report.rows]
        path.write_text("\n".join(lines) + "\n")
        written["csv"] = path
    if "json" in formats:
        path = out / "report.json"
        payload = {
            "rows": [asdict(r) for r in report.rows],
            "averages": report.averages,
            "parameters": report.parameters,
            "timings_s": report.timings,
            "failures": report.failures,
        }
        path.write_text(json.dumps(payload, indent=2) + "\n")
        written["json"] = path
    return written
