"""Command line front end: benchmark runs, layout stats, scene rendering."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .arrays import build_layout, convex_hull_area, data_rate_gbit_s, save_layout
from .bench import emit_report, load_config, run_benchmark, run_gt_disparity_ablation
from .imgio import save_mask_png, save_rgb_png, write_pgm16
from .metrics import crop_intersection, proportional_border
from .scenes import load_scene, random_scene, render_array_capture
from .spectral import BandPlan, render_rgb_preview, save_cube


def _print_report(report) -> None:
    print(f"{'method':28s} {'region':12s} {'psnr_db':>9s} {'ssim':>7s} {'n':>3s}")
    for key in sorted(report.averages):
        method, region = key.split("|")
        avg = report.averages[key]
        print(f"{method:28s} {region:12s} {avg['psnr_db']:9.2f} "
              f"{avg['ssim']:7.4f} {avg['count']:3d}")
    for stage, seconds in sorted(report.timings.items()):
        print(f"  [{stage}: {seconds:.1f} s]")
    if report.failures:
        print(f"{len(report.failures)} stage failure(s):", file=sys.stderr)
        for f in report.failures:
            print(f"  {f}", file=sys.stderr)


def _cmd_run(args) -> int:
    config = load_config(args.config)
    report = run_benchmark(config)
    written = emit_report(report, config.output_dir)
    _print_report(report)
    for kind, path in written.items():
        print(f"wrote {kind}: {path}")
    return 1 if report.failures else 0


def _cmd_ablate(args) -> int:
    config = load_config(args.config)
    report = run_gt_disparity_ablation(config)
    written = emit_report(report, Path(config.output_dir) / "ablation")
    _print_report(report)
    for kind, path in written.items():
        print(f"wrote {kind}: {path}")
    return 1 if report.failures else 0


def _cmd_layout(args) -> int:
    layout = build_layout(args.kind, args.baseline)
    area = convex_hull_area(layout, args.footprint)
    rate = data_rate_gbit_s(len(layout.poses), args.cam_width, args.cam_height,
                            args.bits, args.fps)
    print(f"layout:        {layout.kind} ({len(layout.poses)} cameras, "
          f"spacing {layout.spacing_mm:g} mm)")
    print(f"max baseline:  {layout.max_baseline_mm():.2f} mm")
    print(f"hull area:     {area:.0f} mm^2 (footprint radius {args.footprint:g} mm)")
    print(f"data rate:     {rate:.2f} Gbit/s at {args.cam_width}x{args.cam_height}, "
          f"{args.bits} bit, {args.fps:g} fps")
    if args.save:
        save_layout(layout, args.save)
        print(f"wrote layout: {args.save}")
    return 0


def _cmd_render(args) -> int:
    if Path(args.scene).exists():
        scene = load_scene(args.scene)
        scene_id = Path(args.scene).stem
    else:
        try:
            seed = int(args.scene)
        except ValueError:
            print(f"scene {args.scene!r} is neither a file nor a seed", file=sys.stderr)
            return 2
        scene = random_scene(seed)
        scene_id = f"gen-{seed:03d}"
    layout = build_layout(args.layout, args.baseline)
    plan = BandPlan()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images, gt = render_array_capture(scene, layout, args.frame, plan)
    for pose in layout.poses:
        write_pgm16(out / f"{scene_id}_cam{pose.id:02d}.pgm", images[pose.id])
        if not pose.is_center:
            save_mask_png(out / f"{scene_id}_visible{pose.id:02d}.png",
                          gt.occlusion[pose.id])
    save_cube(gt.cube, out / f"{scene_id}_gt.hsc")
    write_pgm16(out / f"{scene_id}_gt_disparity.pgm",
                gt.disparity / max(1.0, float(gt.disparity.max())))
    save_rgb_png(out / f"{scene_id}_gt_rgb.png", render_rgb_preview(gt.cube))
    border = proportional_border(gt.cube.width)
    save_rgb_png(out / f"{scene_id}_gt_rgb_intersected.png",
                 render_rgb_preview(crop_intersection(gt.cube, border)))
    print(f"rendered {scene_id} frame {args.frame}: {len(layout.poses)} captures, "
          f"cube {gt.cube.width}x{gt.cube.height}x{gt.cube.bands} -> {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Hyperspectral camera-array benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full benchmark from a config file")
    p_run.add_argument("--config", required=True)
    p_run.set_defaults(func=_cmd_run)

    p_abl = sub.add_parser("ablate-disparity",
                           help="registration with estimated vs ground-truth disparity")
    p_abl.add_argument("--config", required=True)
    p_abl.set_defaults(func=_cmd_ablate)

    p_lay = sub.add_parser("layout", help="print geometry stats for an array layout")
    p_lay.add_argument("--kind", choices=("hex", "hexagonal", "ortho", "orthogonal"),
                       required=True)
    p_lay.add_argument("--baseline", type=float, required=True, help="spacing in mm")
    p_lay.add_argument("--footprint", type=float, default=0.0,
                       help="camera footprint radius in mm for the hull area")
    p_lay.add_argument("--cam-width", type=int, default=2448)
    p_lay.add_argument("--cam-height", type=int, default=2048)
    p_lay.add_argument("--bits", type=int, default=8)
    p_lay.add_argument("--fps", type=float, default=23.0)
    p_lay.add_argument("--save", help="write the layout JSON here")
    p_lay.set_defaults(func=_cmd_layout)

    p_ren = sub.add_parser("render", help="render one scene's captures + ground truth")
    p_ren.add_argument("--scene", required=True,
                       help="SceneSpec JSON path or an integer generator seed")
    p_ren.add_argument("--out", required=True)
    p_ren.add_argument("--layout", default="hexagonal",
                       choices=("hex", "hexagonal", "ortho", "orthogonal"))
    p_ren.add_argument("--baseline", type=float, default=60.0)
    p_ren.add_argument("--frame", type=int, default=0)
    p_ren.set_defaults(func=_cmd_render)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
