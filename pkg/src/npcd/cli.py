"""Command-line front end: synth / propose / ablate / eval.

Exit codes: 0 success, 1 usage error, 2 data error. All randomness flows
from --seed; outputs are byte-identical across reruns and worker counts.
"""

import argparse
import multiprocessing as mp
import sys
import zlib
from pathlib import Path

import numpy as np

from . import evaluation, proposals
from .config import Config, apply_overrides, dump_config, load_config
from .errors import ConfigError, FormatError
from .evaluation import Detection, FrameData, MODES
from .ingest import (
    generate_synthetic_scene,
    read_calibration,
    read_labels,
    read_lidar_scan,
    read_scene_spec,
    write_calibration,
    write_labels,
    write_lidar_scan,
)
from .ingest.raster import read_depth_raster, depth_raster_to_cloud
from .cloud import PointCloud

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(USAGE_ERROR)


def _parse_budgets(text: str):
    try:
        return tuple(int(tok) for tok in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad --budget list {text!r}: {exc}") from exc


def _effective_config(args) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    if getattr(args, "seed", None) is not None:
        cfg = apply_overrides(cfg, {"ransac_seed": args.seed})
    if getattr(args, "iou", None) is not None:
        cfg = apply_overrides(cfg, {"eval_iou": args.iou})
    if getattr(args, "budget", None) is not None:
        cfg = apply_overrides(cfg, {"budgets": _parse_budgets(args.budget)})
    return cfg


def _frame_seed(base: int, stem: str) -> int:
    return (int(base) + zlib.crc32(stem.encode())) % (2**32)


def _discover_frames(input_dir: Path):
    """Return (kind, [(stem, cloud path, calib path)]) for a dataset dir."""
    velo = input_dir / "velodyne"
    depth = input_dir / "depth"
    calib_dir = input_dir / "calib"
    if velo.is_dir():
        kind, data_dir, suffix = "velodyne", velo, ".bin"
    elif depth.is_dir():
        kind, data_dir, suffix = "depth", depth, ".dpr"
    else:
        raise FormatError(f"{input_dir}: expected a velodyne/ or depth/ subdirectory")
    frames = []
    for path in sorted(data_dir.glob(f"*{suffix}")):
        stem = path.stem
        calib_path = calib_dir / f"{stem}.txt"
        if not calib_path.is_file():
            raise FormatError(f"missing calib for frame {stem}: {calib_path}")
        frames.append((stem, path, calib_path))
    if not frames:
        raise FormatError(f"{data_dir}: no {suffix} frames found")
    return kind, frames


def _load_cloud(kind: str, cloud_path: Path, calib) -> PointCloud:
    if kind == "velodyne":
        return read_lidar_scan(cloud_path, calib)
    depth = read_depth_raster(cloud_path)
    return depth_raster_to_cloud(depth, calib.cam_projection[:, :3])


def _propose_one(task):
    stem, kind, cloud_path, calib_path, cfg, out_path, seed, threads = task
    calib = read_calibration(calib_path)
    cloud = _load_cloud(kind, Path(cloud_path), calib)
    frame_cfg = apply_overrides(cfg, {"ransac_seed": _frame_seed(seed, stem)})
    ranked, stats = proposals.propose_frame(cloud, calib, frame_cfg, workers=threads)
    proposals.write_proposals(out_path, ranked, calib.cam_projection,
                              (cfg.map_width, cfg.map_height), cfg.anchor_class)
    return stem, stats


def cmd_propose(args) -> int:
    cfg = _effective_config(args)
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    in_dir = Path(args.input)
    out_dir = Path(args.output)
    (out_dir / "proposals").mkdir(parents=True, exist_ok=True)
    kind, frames = _discover_frames(in_dir)
    seed = args.seed if args.seed is not None else cfg.ransac_seed
    workers = max(1, args.workers)

    tasks = []
    for stem, cloud_path, calib_path in frames:
        out_path = out_dir / "proposals" / f"{stem}.txt"
        threads = workers if len(frames) == 1 else 1
        tasks.append((stem, kind, str(cloud_path), str(calib_path), cfg,
                      str(out_path), seed, threads))

    if workers > 1 and len(frames) > 1:
        with mp.get_context("fork").Pool(min(workers, len(frames))) as pool:
            results = pool.map(_propose_one, tasks)
    else:
        results = [_propose_one(t) for t in tasks]

    results.sort(key=lambda r: r[0])
    stats = [s for _, s in results]
    print(
        f"frames={len(stats)} "
        f"mean_anchors_in_frustum={np.mean([s.n_anchors_in_frustum for s in stats]):.1f} "
        f"mean_selected={np.mean([s.n_selected for s in stats]):.1f} "
        f"mean_output={np.mean([s.n_output for s in stats]):.1f} "
        f"mean_runtime_s={np.mean([s.runtime_s for s in stats]):.3f}"
    )
    return 0


def _ablate_frames(args, cfg) -> list:
    src = Path(args.input)
    if src.is_file():
        spec = read_scene_spec(src)
        seed = args.seed if args.seed is not None else 0
        scenes = [generate_synthetic_scene(spec, seed + i)
                  for i in range(spec.n_scenes)]
        return [FrameData(s.cloud, s.calibration, s.gt_boxes) for s in scenes]
    kind, frames = _discover_frames(src)
    label_dir = src / "label_2"
    out = []
    for stem, cloud_path, calib_path in frames:
        label_path = label_dir / f"{stem}.txt"
        if not label_path.is_file():
            raise FormatError(f"missing labels for frame {stem}: {label_path}")
        calib = read_calibration(calib_path)
        cloud = _load_cloud(kind, cloud_path, calib)
        out.append(FrameData(cloud, calib, read_labels(label_path)))
    return out


def cmd_ablate(args) -> int:
    cfg = _effective_config(args)
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    frames = _ablate_frames(args, cfg)
    methods = (args.method,) if args.method else evaluation.METHODS
    modes = (args.mode,) if args.mode else ("2d", "3d")
    curves = evaluation.ablation_curves(
        frames, cfg, budgets=cfg.budgets, iou=cfg.eval_iou, modes=modes,
        methods=methods, workers=max(1, args.workers),
    )
    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    evaluation.write_recall_curves(out_path, curves)
    print(f"wrote {out_path} ({len(curves)} curves, {len(frames)} frames)")
    return 0


def cmd_eval(args) -> int:
    cfg = _effective_config(args)
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    prop_dir = Path(args.proposals)
    label_dir = Path(args.labels)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    prop_stems = {p.stem for p in prop_dir.glob("*.txt")}
    label_stems = {p.stem for p in label_dir.glob("*.txt")}
    if not label_stems:
        raise FormatError(f"{label_dir}: no label files")
    common = sorted(prop_stems & label_stems)
    skipped = sorted(prop_stems ^ label_stems)
    for stem in skipped:
        print(f"warning: frame {stem} present on one side only; excluded",
              file=sys.stderr)
    if not common:
        raise FormatError("no frames shared between proposals and labels")

    frame_dets, frame_gts = [], []
    for stem in common:
        entries = proposals.read_proposals(prop_dir / f"{stem}.txt")
        frame_dets.append([Detection(e.box, score, e.rect) for e, score in entries])
        gts = [g for g in read_labels(label_dir / f"{stem}.txt")
               if g.label == cfg.anchor_class]
        frame_gts.append(gts)

    modes = (args.mode,) if args.mode else MODES
    iou = cfg.eval_iou
    ap_rows, recall_rows = [], []
    for mode in modes:
        for tier in ("easy", "moderate", "hard", "all"):
            gts_t = [evaluation._filter_tier(g, tier) for g in frame_gts]
            ap = evaluation.dataset_average_precision(frame_dets, gts_t, iou,
                                                      mode, cfg.ap_points)
            rec = evaluation.dataset_recall_at(frame_dets, gts_t, iou, mode,
                                               budget=10)
            ap_rows.append((mode, iou, tier, cfg.ap_points, ap))
            recall_rows.append((mode, iou, tier, 10, rec))

    evaluation.write_ap_summary(out_dir / "ap_summary.csv", ap_rows)
    evaluation.write_recall_table(out_dir / "recall_budget10.csv", recall_rows)
    print(f"evaluated {len(common)} frames "
          f"({len(skipped)} excluded); wrote {out_dir}/ap_summary.csv "
          f"and {out_dir}/recall_budget10.csv")
    return 0


def cmd_synth(args) -> int:
    cfg = _effective_config(args)
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        return 0
    spec = read_scene_spec(args.spec)
    out_dir = Path(args.output)
    seed = args.seed if args.seed is not None else 0
    for sub in ("velodyne", "calib", "label_2"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    for i in range(spec.n_scenes):
        scene = generate_synthetic_scene(spec, seed + i)
        stem = f"{i:06d}"
        lidar_points = scene.calibration.rect_to_lidar(scene.cloud.points)
        write_lidar_scan(out_dir / "velodyne" / f"{stem}.bin", lidar_points)
        write_calibration(out_dir / "calib" / f"{stem}.txt", scene.calibration)
        write_labels(out_dir / "label_2" / f"{stem}.txt", scene.gt_boxes)
    print(f"wrote {spec.n_scenes} scenes to {out_dir}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="npcd",
                     description="3D object proposals from point-cloud density")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--seed", type=int, help="master seed for all randomness")
    common.add_argument("--workers", type=int, default=1,
                        help="parallel workers (frames, or anchor slices for a single frame)")
    common.add_argument("--print-config", action="store_true",
                        help="print the effective config and exit")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propose", parents=[common],
                       help="generate per-frame proposal files")
    p.add_argument("input", help="dataset dir with velodyne/ (or depth/) and calib/")
    p.add_argument("output", help="output dir; proposals/ is created inside")
    p.set_defaults(func=cmd_propose)

    p = sub.add_parser("ablate", parents=[common],
                       help="recall curves for the npcd/pcd/inc methods")
    p.add_argument("input", help="scene-spec file or dataset dir with labels")
    p.add_argument("output", help="output CSV path (recall_curves.csv)")
    p.add_argument("--iou", type=float, help="IoU threshold (default from config)")
    p.add_argument("--budget", help="comma-separated proposal budgets")
    p.add_argument("--mode", choices=("2d", "bev", "3d"), help="restrict to one mode")
    p.add_argument("--method", choices=evaluation.METHODS, help="restrict to one method")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("eval", parents=[common],
                       help="AP and recall@10 for proposal files against labels")
    p.add_argument("proposals", help="directory of proposal .txt files")
    p.add_argument("labels", help="directory of KITTI label .txt files")
    p.add_argument("output", help="output directory for CSV reports")
    p.add_argument("--iou", type=float, help="IoU threshold (default from config)")
    p.add_argument("--mode", choices=("2d", "bev", "3d"), help="restrict to one mode")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", parents=[common],
                       help="write a synthetic dataset (velodyne/calib/label_2)")
    p.add_argument("spec", help="scene-spec key=value file")
    p.add_argument("output", help="dataset output directory")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
