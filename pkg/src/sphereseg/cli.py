"""Command-line pipeline: project scenes, make masks, back-project, evaluate.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(malformed files, dimension mismatches), 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import backprojection, evaluation, masks, oracle, projection
from .backprojection import DepthMode, PredictionSet
from .cloud_io import LabeledCloud, load_point_cloud, save_labeled_cloud
from .errors import SphereSegError
from .projection import ReferencePoint

MERGED_PREDICTION = "prediction.txt"


class ConfigError(Exception):
    """Scene configuration is missing, malformed, or self-inconsistent."""


@dataclass
class SceneSpec:
    name: str
    reference: ReferencePoint


@dataclass
class SceneConfig:
    cloud_path: Path
    scenes: list[SceneSpec]
    width: int = projection.DEFAULT_WIDTH
    height: int = projection.DEFAULT_HEIGHT
    building_label: int = 0
    depth_mode: DepthMode = field(default_factory=DepthMode)
    min_score: float = masks.DEFAULT_MIN_SCORE
    max_range: float | None = None
    categories: dict[int, str] | None = None

    def __post_init__(self) -> None:
        if not self.scenes:
            raise ConfigError("config must define at least one scene")
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        names = [s.name for s in self.scenes]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate scene names in config: {names}")


def load_config(path: str | Path, overrides: dict | None = None) -> SceneConfig:
    """Parse the JSON scene configuration, applying CLI flag overrides."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc

    overrides = overrides or {}
    try:
        scenes = [
            SceneSpec(
                name=str(s["name"]),
                reference=ReferencePoint(
                    float(s["reference"]["x"]),
                    float(s["reference"]["y"]),
                    float(s["reference"]["z"]),
                    name=str(s["name"]),
                ),
            )
            for s in doc["scenes"]
        ]
        image = doc.get("image", {})
        dm = doc.get("depth_mode", {})
        config = SceneConfig(
            cloud_path=(path.parent / doc["cloud"]).resolve(),
            scenes=scenes,
            width=int(overrides.get("width") or image.get("width", projection.DEFAULT_WIDTH)),
            height=int(overrides.get("height") or image.get("height", projection.DEFAULT_HEIGHT)),
            building_label=int(doc["building_label"]),
            depth_mode=DepthMode(
                mode=str(overrides.get("depth_mode") or dm.get("mode", "all")),
                epsilon_rel=float(
                    overrides.get("epsilon_rel")
                    if overrides.get("epsilon_rel") is not None
                    else dm.get("epsilon_rel", backprojection.DEFAULT_EPSILON_REL)
                ),
            ),
            min_score=float(
                overrides.get("min_score")
                if overrides.get("min_score") is not None
                else doc.get("min_score", masks.DEFAULT_MIN_SCORE)
            ),
            max_range=None if doc.get("max_range") is None else float(doc["max_range"]),
            categories={int(k): str(v) for k, v in doc["categories"].items()}
            if "categories" in doc
            else None,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid config ({exc})") from exc
    return config


def _load_cloud(config: SceneConfig) -> LabeledCloud:
    return load_point_cloud(config.cloud_path, categories=config.categories)


def cmd_project(config: SceneConfig, out_dir: str | Path, workers: int | None = None) -> list[Path]:
    """Write `<scene>.ppm` and `<scene>.spmap` for every configured scene."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cloud = _load_cloud(config)
    written = []
    for scene in config.scenes:
        try:
            image, mapping, stats = projection.project_scene(
                cloud, scene.reference, config.width, config.height,
                max_range=config.max_range, workers=workers,
            )
        except SphereSegError as exc:
            exc.args = (f"scene {scene.name!r}: {exc}",)
            raise
        ppm = out_dir / f"{scene.name}.ppm"
        spmap = out_dir / f"{scene.name}.spmap"
        projection.write_image(image, ppm)
        projection.write_mapping(mapping, spmap)
        print(
            f"[{scene.name}] mapped {stats.n_mapped}/{stats.n_points} points "
            f"({stats.n_degenerate} degenerate, {stats.n_out_of_range} out of range)"
        )
        written += [ppm, spmap]
    return written


def cmd_segment_oracle(
    config: SceneConfig,
    proj_dir: str | Path,
    out_dir: str | Path,
    rule: str = "nearest",
    dilate_px: int = 0,
    seed: int = 0,
) -> list[Path]:
    """Write a ground-truth `mask_union.pgm` per scene from saved mappings."""
    proj_dir, out_dir = Path(proj_dir), Path(out_dir)
    cloud = _load_cloud(config)
    written = []
    for scene in config.scenes:
        mapping = projection.read_mapping(proj_dir / f"{scene.name}.spmap")
        mask = oracle.oracle_mask(mapping, cloud, config.building_label, rule=rule)
        if dilate_px > 0:
            mask = oracle.perturb_mask(mask, dilate_px, seed=seed)
        scene_dir = out_dir / scene.name
        scene_dir.mkdir(parents=True, exist_ok=True)
        target = scene_dir / "mask_union.pgm"
        masks.write_mask_pgm(mask, target)
        written.append(target)
    return written


def _scene_mask(config: SceneConfig, scene_dir: Path) -> masks.Mask:
    """Load one scene's mask: the union file, or score-filtered per-box masks."""
    union = scene_dir / "mask_union.pgm"
    boxes_json = scene_dir / "boxes.json"
    if boxes_json.is_file():
        boxset = masks.read_boxes(boxes_json, config.width, config.height)
        kept = [
            k for k, box in enumerate(boxset.boxes) if box.score >= config.min_score
        ]
        per_box = [masks.read_mask_pgm(scene_dir / f"mask_{k}.pgm") for k in kept]
        if per_box:
            return masks.merge_masks(per_box)
        return masks.Mask.empty(config.width, config.height)
    if union.is_file():
        return masks.read_mask_pgm(union)
    raise FileNotFoundError(
        f"no mask_union.pgm or boxes.json + mask_<k>.pgm in {scene_dir}"
    )


def cmd_backproject(
    config: SceneConfig,
    proj_dir: str | Path,
    masks_dir: str | Path,
    out_dir: str | Path,
) -> PredictionSet:
    """Back-project every scene's mask and write per-scene + merged predictions."""
    proj_dir, masks_dir, out_dir = Path(proj_dir), Path(masks_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cloud = _load_cloud(config)
    per_scene = []
    for scene in config.scenes:
        try:
            mapping = projection.read_mapping(proj_dir / f"{scene.name}.spmap")
            mask = _scene_mask(config, masks_dir / scene.name)
            pred = backprojection.backproject(
                mask, mapping, config.depth_mode, n_points=cloud.n_points
            )
        except SphereSegError as exc:
            exc.args = (f"scene {scene.name!r}: {exc}",)
            raise
        backprojection.save_predictions(pred, out_dir / f"prediction_{scene.name}.txt")
        per_scene.append(pred)
    merged = backprojection.merge_predictions(per_scene)
    backprojection.save_predictions(merged, out_dir / MERGED_PREDICTION)
    highlighted = backprojection.apply_labels(cloud, merged)
    save_labeled_cloud(highlighted, out_dir / "highlighted.ply", format="ply_ascii")
    return merged


def cmd_evaluate(
    config: SceneConfig,
    pred_path: str | Path,
    json_out: str | Path | None = None,
) -> dict:
    """Evaluate predictions; prints the metric and FP tables, returns the report.

    `pred_path` may be a single prediction file or a directory written by
    the back-projection step (per-scene rows plus the merged total).
    """
    pred_path = Path(pred_path)
    cloud = _load_cloud(config)

    named: list[tuple[str, PredictionSet]] = []
    if pred_path.is_dir():
        for scene in config.scenes:
            f = pred_path / f"prediction_{scene.name}.txt"
            if f.is_file():
                named.append((scene.name, backprojection.load_predictions(f)))
        merged_file = pred_path / MERGED_PREDICTION
        if merged_file.is_file():
            total_pred = backprojection.load_predictions(merged_file)
        elif named:
            total_pred = backprojection.merge_predictions([p for _, p in named])
        else:
            raise FileNotFoundError(f"no prediction files found in {pred_path}")
    else:
        total_pred = backprojection.load_predictions(pred_path)

    entries = []
    for name, pred in named:
        confusion = evaluation.confusion_counts(pred, cloud, config.building_label)
        metrics = evaluation.compute_metrics(confusion, name)
        breakdown = evaluation.fp_breakdown(pred, cloud, config.building_label)
        entries.append((name, confusion, metrics, breakdown))

    total_confusion = evaluation.confusion_counts(total_pred, cloud, config.building_label)
    total_metrics = evaluation.compute_metrics(total_confusion, "Total")
    total_breakdown = evaluation.fp_breakdown(total_pred, cloud, config.building_label)
    entries.append(("Total", total_confusion, total_metrics, total_breakdown))

    print(evaluation.render_metrics_table([e[2] for e in entries]))
    print()
    print("False positive ratio per category:")
    print(evaluation.render_fp_table([(e[0], e[3]) for e in entries]))

    report = {
        "areas": [
            evaluation.report_json(name, confusion, metrics, breakdown)
            for name, confusion, metrics, breakdown in entries[:-1]
        ],
        "total": evaluation.report_json("Total", total_confusion, total_metrics, total_breakdown),
    }
    if json_out is not None:
        with open(json_out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return report


def cmd_pipeline(
    config: SceneConfig,
    out_dir: str | Path,
    masks_source: str = "oracle",
    rule: str = "nearest",
    dilate_px: int = 0,
    workers: int | None = None,
) -> dict:
    """Run project -> masks -> back-project -> evaluate into one directory.

    `masks_source` is "oracle" or a directory of externally produced masks
    laid out as `<dir>/<scene>/mask_union.pgm` (or boxes.json + mask_<k>.pgm).
    """
    out_dir = Path(out_dir)
    stage = "project"
    try:
        cmd_project(config, out_dir / "projection", workers=workers)
        stage = "segment"
        if masks_source == "oracle":
            masks_dir = out_dir / "masks"
            cmd_segment_oracle(
                config, out_dir / "projection", masks_dir, rule=rule, dilate_px=dilate_px
            )
        else:
            masks_dir = Path(masks_source)
            for scene in config.scenes:
                if not (masks_dir / scene.name).is_dir():
                    raise FileNotFoundError(
                        f"external masks directory has no entry for scene {scene.name!r}"
                    )
        stage = "backproject"
        cmd_backproject(config, out_dir / "projection", masks_dir, out_dir / "backprojection")
        stage = "evaluate"
        return cmd_evaluate(
            config, out_dir / "backprojection", json_out=out_dir / "report.json"
        )
    except Exception as exc:
        exc.args = (f"pipeline stage {stage!r} failed: {exc}",)
        raise


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sphere-seg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="scene configuration JSON")
        p.add_argument("--width", type=int, help="override image width")
        p.add_argument("--height", type=int, help="override image height")
        p.add_argument("--depth-mode", choices=["all", "nearest"], help="override depth mode")
        p.add_argument("--epsilon-rel", type=float, help="override nearest-mode depth band")
        p.add_argument("--min-score", type=float, help="override box score threshold")
        p.add_argument("--workers", type=int, help="projection worker threads")

    p = sub.add_parser("project", help="render equirectangular images and mappings")
    common(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("segment-oracle", help="derive masks from ground truth labels")
    common(p)
    p.add_argument("--proj", required=True, help="directory with <scene>.spmap files")
    p.add_argument("--out", required=True)
    p.add_argument("--rule", choices=["nearest", "any"], default="nearest")
    p.add_argument("--dilate", type=int, default=0, help="contour bleed in pixels")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("backproject", help="lift masks to 3D point predictions")
    common(p)
    p.add_argument("--proj", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    common(p)
    p.add_argument("--pred", required=True, help="prediction file or directory")
    p.add_argument("--json", help="also write the report as JSON")

    p = sub.add_parser("pipeline", help="run all four stages")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--masks", default="oracle", help='"oracle" or external masks directory')
    p.add_argument("--rule", choices=["nearest", "any"], default="nearest")
    p.add_argument("--dilate", type=int, default=0)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    overrides = {
        "width": args.width,
        "height": args.height,
        "depth_mode": args.depth_mode,
        "epsilon_rel": args.epsilon_rel,
        "min_score": args.min_score,
    }
    try:
        config = load_config(args.config, overrides)
        if args.command == "project":
            cmd_project(config, args.out, workers=args.workers)
        elif args.command == "segment-oracle":
            cmd_segment_oracle(
                config, args.proj, args.out, rule=args.rule,
                dilate_px=args.dilate, seed=args.seed,
            )
        elif args.command == "backproject":
            cmd_backproject(config, args.proj, args.masks, args.out)
        elif args.command == "evaluate":
            cmd_evaluate(config, args.pred, json_out=args.json)
        elif args.command == "pipeline":
            cmd_pipeline(
                config, args.out, masks_source=args.masks,
                rule=args.rule, dilate_px=args.dilate, workers=args.workers,
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SphereSegError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
