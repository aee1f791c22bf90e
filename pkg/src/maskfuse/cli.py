"""Command-line surface: gen, fuse, evaluate, sweep, report.

Exit codes: 0 success, 1 internal error, 2 usage or input error.

Corpus layout written by ``gen`` and consumed by the other commands::

    out/
      index.json                  image ids, dimensions, seeds, transforms
      gt/<id>.png                 16-bit label PNGs
      pred/<transform>/<id>.json  one manifest per image per transform
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import formats
from .formats import ManifestError
from .maskcore import OVERLAP_RULES, instances_to_label_map, label_map_to_instances
from .metrics import evaluate_corpus
from .synthgen import NoiseConfig, RosetteConfig, ScoreModel, derive_seed, generate_rosette, simulate_versions
from .threshold import DEFAULT_TAUS, SweepConfig, SWEEP_CSV_HEADER, filter_by_score, sweep as run_sweep
from .transforms import ALL_TRANSFORMS, Transform
from .tta_fusion import FusionConfig, tta_pipeline


class InputError(Exception):
    """User-facing input problem; reported with exit code 2."""


def _map_ordered(fn, items, threads: int):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _parse_transforms(spec: str) -> tuple[Transform, ...]:
    names = [s.strip() for s in spec.split(",") if s.strip()]
    try:
        ts = tuple(Transform(n) for n in names)
    except ValueError as exc:
        raise InputError(f"unknown transform in --transforms: {exc}") from None
    if Transform.IDENTITY not in ts:
        raise InputError("--transforms must include 'identity'")
    return ts


def _parse_range(spec: str, flag: str) -> tuple[int, int]:
    parts = spec.split(",")
    if len(parts) != 2:
        raise InputError(f"{flag} expects LO,HI")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise InputError(f"{flag} expects integers, got {spec!r}") from None
    return lo, hi


def _fusion_config(args) -> FusionConfig:
    try:
        return FusionConfig(
            match_threshold=args.match_threshold,
            min_versions=args.min_versions,
            count_absent_versions=getattr(args, "vote_over_all_versions", False),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _add_fusion_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--match-threshold", type=float, default=0.5,
                   help="IoU above which instances are aligned (default 0.5)")
    p.add_argument("--min-versions", type=int, default=1,
                   help="minimum member versions for a fused instance (default 1)")
    p.add_argument("--vote-over-all-versions", action="store_true",
                   help="majority denominator = all versions instead of matched members")


def _load_version_manifests(pred_dir: Path) -> dict[str, dict[Transform, Path]]:
    """Map image id -> {transform: manifest path} from pred/<transform>/ dirs."""
    if not pred_dir.is_dir():
        raise InputError(f"prediction directory not found: {pred_dir}")
    per_image: dict[str, dict[Transform, Path]] = {}
    found_any = False
    for t in ALL_TRANSFORMS:
        tdir = pred_dir / t.value
        if not tdir.is_dir():
            continue
        for path in sorted(tdir.glob("*.json")):
            found_any = True
            per_image.setdefault(path.stem, {})[t] = path
    if not found_any:
        raise InputError(
            f"no manifests under {pred_dir} (expected <transform>/<image>.json)"
        )
    missing = sorted(i for i, v in per_image.items() if Transform.IDENTITY not in v)
    if missing:
        raise InputError(
            f"missing identity manifests for image ids: {', '.join(missing)}"
        )
    return per_image


def _read_versions(paths: dict[Transform, Path]):
    versions = {}
    for t, path in paths.items():
        _, ps = formats.load_manifest(path)
        versions[t] = ps
    return versions


def _load_gt_dir(gt_dir: Path, suffix: str) -> dict[str, Path]:
    if not gt_dir.is_dir():
        raise InputError(f"ground-truth directory not found: {gt_dir}")
    out = {}
    for path in sorted(gt_dir.glob("*.png")):
        stem = path.stem
        if suffix and stem.endswith(suffix):
            stem = stem[: -len(suffix)]
        out[stem] = path
    if not out:
        raise InputError(f"no label PNGs in {gt_dir}")
    return out


# ---------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    out = Path(args.out)
    transforms = _parse_transforms(args.transforms)
    try:
        rosette = RosetteConfig(
            width=args.width,
            height=args.height,
            leaf_count=args.leaves,
            leaf_length_range=_parse_range(args.leaf_length, "--leaf-length"),
            leaf_width_range=_parse_range(args.leaf_width, "--leaf-width"),
            center_jitter=args.center_jitter,
            seed=args.seed,
        )
        noise = NoiseConfig(
            merge_prob=args.merge_prob,
            drop_prob=args.drop_prob,
            boundary_noise=args.boundary_noise,
            score_model=ScoreModel(jitter=args.score_jitter),
            seed=args.seed,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None

    def one(i: int):
        image_id = f"img_{i:04d}"
        cfg_i = replace(rosette, seed=derive_seed(rosette.seed, 0, i))
        noise_i = replace(noise, seed=derive_seed(noise.seed, 1, i))
        gt = generate_rosette(cfg_i, connectivity=args.connectivity)
        versions = simulate_versions(gt, noise_i, transforms)
        formats.save_label_png(out / "gt" / f"{image_id}.png", gt)
        for t, ps in versions.items():
            formats.save_manifest(out / "pred" / t.value / f"{image_id}.json", image_id, ps)
        return image_id

    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {out}: {exc}") from None
    ids = _map_ordered(one, range(args.images), args.threads)
    index = {
        "width": args.width,
        "height": args.height,
        "seed": args.seed,
        "images": ids,
        "transforms": [t.value for t in transforms],
        "noise": {
            "merge_prob": args.merge_prob,
            "drop_prob": args.drop_prob,
            "boundary_noise": args.boundary_noise,
            "score_jitter": args.score_jitter,
        },
    }
    formats.atomic_write_text(out / "index.json", json.dumps(index, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(ids)} images to {out}")
    return 0


def cmd_fuse(args) -> int:
    pred_dir = Path(args.pred_dir)
    out = Path(args.out)
    cfg = _fusion_config(args)
    per_image = _load_version_manifests(pred_dir)
    ids = sorted(per_image)
    if args.image is not None:
        if args.image not in per_image:
            raise InputError(f"image id {args.image!r} not found under {pred_dir}")
        ids = [args.image]

    def one(image_id: str):
        versions = _read_versions(per_image[image_id])
        if args.tau is not None:
            versions = {t: filter_by_score(ps, args.tau) for t, ps in versions.items()}
        fused = tta_pipeline(versions, cfg)
        formats.save_manifest(out / f"{image_id}.json", image_id, fused)
        formats.save_label_png(
            out / f"{image_id}.png", instances_to_label_map(fused, args.overlap_rule)
        )
        return image_id

    _map_ordered(one, ids, args.threads)
    print(f"fused {len(ids)} images into {out}")
    return 0


def cmd_evaluate(args) -> int:
    pred_dir = Path(args.pred)
    gt_map = _load_gt_dir(Path(args.gt), args.suffix)
    if not pred_dir.is_dir():
        raise InputError(f"prediction directory not found: {pred_dir}")
    pred_map: dict[str, Path] = {}
    for path in sorted(pred_dir.iterdir()):
        if path.suffix == ".json":
            pred_map[path.stem] = path
        elif path.suffix == ".png" and path.stem not in pred_map:
            pred_map[path.stem] = path
    if not pred_map:
        raise InputError(f"no predictions (.json manifests or .png label maps) in {pred_dir}")
    unpaired = sorted(set(pred_map) ^ set(gt_map))
    if unpaired:
        raise InputError(f"unpaired image ids between pred and gt: {', '.join(unpaired)}")

    def one(image_id: str):
        path = pred_map[image_id]
        if path.suffix == ".json":
            _, ps = formats.load_manifest(path)
        else:
            ps = label_map_to_instances(formats.load_label_png(path))
        gt = formats.load_label_png(gt_map[image_id])
        return image_id, ps, gt

    pairs = _map_ordered(one, sorted(pred_map), args.threads)
    try:
        report = evaluate_corpus(pairs, overlap_rule=args.overlap_rule)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats.atomic_write_text(out / "report.csv", report.to_csv())
    formats.atomic_write_text(out / "report.json", report.to_json())
    print(
        f"{report.n_images} images  mean_sbd={report.mean_sbd:.4f}  "
        f"mean_dic={report.mean_dic:+.3f}  mean_abs_dic={report.mean_abs_dic:.3f}"
    )
    return 0


def _parse_taus(spec: str) -> tuple[float, ...]:
    try:
        taus = tuple(float(s) for s in spec.split(",") if s.strip())
    except ValueError:
        raise InputError(f"--taus expects comma-separated numbers, got {spec!r}") from None
    if not taus:
        raise InputError("--taus is empty")
    return taus


def cmd_sweep(args) -> int:
    per_image = _load_version_manifests(Path(args.pred_dir))
    gt_map = _load_gt_dir(Path(args.gt), args.suffix)
    unpaired = sorted(set(per_image) ^ set(gt_map))
    if unpaired:
        raise InputError(f"unpaired image ids between pred and gt: {', '.join(unpaired)}")
    try:
        cfg = SweepConfig(
            taus=_parse_taus(args.taus),
            apply_tta=args.tta,
            fusion=_fusion_config(args),
            overlap_rule=args.overlap_rule,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None

    def one(image_id: str):
        versions = _read_versions(per_image[image_id])
        gt = formats.load_label_png(gt_map[image_id])
        return image_id, versions, gt

    corpus = _map_ordered(one, sorted(per_image), args.threads)
    try:
        table = run_sweep(corpus, cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    formats.atomic_write_text(args.out, table.to_csv())
    print(f"swept {len(cfg.taus)} thresholds over {table.n_images} images -> {args.out}")
    return 0


def cmd_report(args) -> int:
    expected = SWEEP_CSV_HEADER.split(",")
    tables = []
    for path in args.sweeps:
        p = Path(path)
        try:
            with open(p, newline="", encoding="utf-8") as fh:
                rows = list(csv.reader(fh))
        except OSError as exc:
            raise InputError(f"cannot read {p}: {exc}") from None
        if not rows or rows[0] != expected:
            raise InputError(f"{p}: not a sweep CSV (header mismatch)")
        tables.append((p.stem, rows[1:]))

    lines = []
    plot_rows = []
    for name, rows in tables:
        lines.append(f"## {name}")
        lines.append("")
        lines.append("| tau | mean_sbd | mean_dic | mean_abs_dic | mean_pred_count | n_images |")
        lines.append("|----:|---------:|---------:|-------------:|----------------:|---------:|")
        for row in rows:
            lines.append("| " + " | ".join(row) + " |")
            tau = row[0]
            for metric, value in zip(expected[1:-1], row[1:-1]):
                plot_rows.append((name, tau, metric, value))
        lines.append("")
    text = "\n".join(lines)
    if args.out:
        formats.atomic_write_text(args.out, text + ("\n" if not text.endswith("\n") else ""))
    else:
        print(text)
    if args.csv_out:
        buf = ["source,tau,metric,value"]
        buf += [",".join(r) for r in plot_rows]
        formats.atomic_write_text(args.csv_out, "\n".join(buf) + "\n")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maskfuse",
        description="TTA fusion, threshold sweeps and segmentation/counting metrics for instance masks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic rosette corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--images", type=int, default=10)
    p.add_argument("--leaves", type=int, default=8)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--leaf-length", default="60,100", help="LO,HI pixels")
    p.add_argument("--leaf-width", default="18,30", help="LO,HI pixels")
    p.add_argument("--center-jitter", type=int, default=6)
    p.add_argument("--merge-prob", type=float, default=0.0)
    p.add_argument("--drop-prob", type=float, default=0.0)
    p.add_argument("--boundary-noise", type=int, default=0)
    p.add_argument("--score-jitter", type=float, default=0.0)
    p.add_argument("--transforms", default=",".join(t.value for t in ALL_TRANSFORMS))
    p.add_argument("--connectivity", type=int, choices=(4, 8), default=4,
                   help="pixel connectivity used to keep generated leaves contiguous")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fuse", help="fuse per-transform prediction manifests")
    p.add_argument("--pred-dir", required=True, help="directory with <transform>/<image>.json")
    p.add_argument("--out", required=True, help="output directory for fused manifests + label PNGs")
    p.add_argument("--image", help="fuse a single image id")
    p.add_argument("--tau", type=float, help="filter each version by score before fusing")
    p.add_argument("--overlap-rule", choices=OVERLAP_RULES, default="votes")
    p.add_argument("--threads", type=int, default=1)
    _add_fusion_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", help="evaluate predictions against ground-truth label PNGs")
    p.add_argument("--pred", required=True, help="directory of manifests (.json) or label PNGs")
    p.add_argument("--gt", required=True, help="directory of ground-truth label PNGs")
    p.add_argument("--out", required=True, help="output directory for report.csv / report.json")
    p.add_argument("--suffix", default="", help="gt filename suffix to strip when pairing (e.g. _label)")
    p.add_argument("--overlap-rule", choices=OVERLAP_RULES, default="votes")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run the detection-threshold sweep")
    p.add_argument("--pred-dir", required=True, help="directory with <transform>/<image>.json")
    p.add_argument("--gt", required=True, help="directory of ground-truth label PNGs")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--taus", default=",".join(str(t) for t in DEFAULT_TAUS))
    p.add_argument("--tta", action="store_true", help="fuse versions at each threshold")
    p.add_argument("--suffix", default="")
    p.add_argument("--overlap-rule", choices=OVERLAP_RULES, default="votes")
    p.add_argument("--threads", type=int, default=1)
    _add_fusion_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render sweep CSVs to a markdown table")
    p.add_argument("sweeps", nargs="+", help="sweep CSV files")
    p.add_argument("--out", help="write markdown here instead of stdout")
    p.add_argument("--csv-out", help="also write a long-format plot-ready CSV")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort internal error
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
