"""Command-line frontend.

Subcommands: stats, rfs, copypaste, mosaic, seesaw, ema, select, eval,
tta-fuse, gen-fixture. A TOML config file (one table per subcommand) can
supply any flag's value; explicit flags win. Exit codes: 0 success,
1 validation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import compose, fixtures, rfs, seesaw, tta
from .data import (
    Dataset,
    DatasetParseError,
    DatasetValidationError,
    annotation_mask,
    category_stats,
    parse_dataset,
    serialize_dataset,
)
from .ema import EmaState, ema_update, select_epoch
from .evaluation import EvalConfig, evaluate
from .io_utils import (
    atomic_write_text,
    format_repeat_factor_csv,
    read_ap_curve_csv,
    read_checkpoint,
    read_results_json,
    write_checkpoint,
    write_results_json,
)
from .masks import rle_encode


class CliValidationError(ValueError):
    pass


def _load_dataset(path: str, validate_masks: bool = False) -> Dataset:
    with open(path, "r", encoding="utf-8") as f:
        return parse_dataset(f.read(), validate_masks=validate_masks)


def _write_json(path: str, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2))


def _cmd_stats(args) -> int:
    ds = _load_dataset(args.annotations)
    stats = category_stats(ds)
    report = {
        "n_images": len(ds.images),
        "n_categories": len(ds.categories),
        "n_instances": len(ds.annotations),
        "category_fractions": stats.category_fractions,
        "instance_fractions": stats.instance_fractions,
    }
    if args.per_category:
        report["per_category"] = {str(k): v for k, v in stats.per_category.items()}
    text = json.dumps(report, indent=2)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        print(text)
    return 0


def _cmd_rfs(args) -> int:
    ds = _load_dataset(args.annotations)
    factors = rfs.compute_repeat_factors(ds, t=args.t)
    schedule = rfs.build_epoch_schedule(factors, args.epoch, args.seed)
    _write_json(
        args.out_schedule,
        {"seed": schedule.seed, "epoch": schedule.epoch_index, "entries": schedule.entries},
    )
    if args.out_table:
        atomic_write_text(args.out_table, format_repeat_factor_csv(factors.per_category))
    return 0


def _load_samples(ds: Dataset, image_dir: str) -> dict[int, compose.Sample]:
    from PIL import Image

    anns_by_image: dict[int, list] = {}
    for a in ds.annotations:
        anns_by_image.setdefault(a.image_id, []).append(a)
    samples = {}
    for im in ds.images:
        path = os.path.join(image_dir, im.file_name)
        pixels = np.asarray(Image.open(path).convert("RGB"), dtype=np.uint8)
        anns = [
            compose.SampleAnnotation(
                category_id=a.category_id, mask=annotation_mask(ds, a)
            ).refreshed()
            for a in anns_by_image.get(im.id, [])
        ]
        samples[im.id] = compose.Sample(image=pixels, annotations=anns)
    return samples


def _write_samples(out_dir: str, composed: list[compose.Sample], prefix: str) -> None:
    """Write PNGs plus one LVIS-format annotation JSON for the composed set."""
    from PIL import Image

    from .data import AnnotationRecord, CategoryRecord, ImageRecord

    os.makedirs(out_dir, exist_ok=True)
    images, annotations = [], []
    cat_ids = set()
    ann_id = 1
    for i, s in enumerate(composed):
        name = f"{prefix}_{i:05d}.png"
        Image.fromarray(s.image).save(os.path.join(out_dir, name))
        h, w = s.image.shape[:2]
        images.append(ImageRecord(id=i + 1, width=w, height=h, file_name=name))
        for a in s.annotations:
            annotations.append(
                AnnotationRecord(
                    id=ann_id,
                    image_id=i + 1,
                    category_id=a.category_id,
                    segmentation=rle_encode(a.mask),
                    bbox=a.bbox,
                    area=a.area,
                )
            )
            cat_ids.add(a.category_id)
            ann_id += 1
    image_counts: dict[int, set] = {}
    for a in annotations:
        image_counts.setdefault(a.category_id, set()).add(a.image_id)
    from .data import bucket_for_image_count

    categories = [
        CategoryRecord(
            id=c,
            name=f"cat_{c}",
            image_count=len(image_counts[c]),
            bucket=bucket_for_image_count(len(image_counts[c])),
        )
        for c in sorted(cat_ids)
    ]
    ds = Dataset(images=images, categories=categories, annotations=annotations)
    atomic_write_text(os.path.join(out_dir, f"{prefix}_annotations.json"), serialize_dataset(ds))


def _cmd_copypaste(args) -> int:
    ds = _load_dataset(args.annotations, validate_masks=True)
    samples = _load_samples(ds, args.images)
    params = compose.PasteParams(n_instances=args.n_instances)
    ann_index = {a.id: (a.image_id, a) for a in ds.annotations}
    rng = np.random.default_rng(args.seed)
    composed = []
    image_ids = sorted(samples)
    for k in range(args.count):
        target_id = image_ids[int(rng.integers(0, len(image_ids)))]
        picked = compose.select_paste_instances(
            ds, params, seed=int(rng.integers(0, 2**63 - 1))
        )
        sources = []
        for ann_id in picked:
            image_id, ann = ann_index[ann_id]
            s = samples[image_id]
            anns = [a for a in ds.annotations if a.image_id == image_id]
            sources.append((s, anns.index(ann)))
        composed.append(
            compose.copy_paste(
                samples[target_id], sources, params, seed=int(rng.integers(0, 2**63 - 1))
            )
        )
    _write_samples(args.out_dir, composed, "copypaste")
    return 0


def _cmd_mosaic(args) -> int:
    ds = _load_dataset(args.annotations, validate_masks=True)
    samples = _load_samples(ds, args.images)
    params = compose.MosaicParams(
        apply_prob=1.0,
        base_size=(args.base_size, args.base_size),
        short_side_range=tuple(args.short_side_range),
    )
    rng = np.random.default_rng(args.seed)
    image_ids = sorted(samples)
    composed = []
    for _ in range(args.count):
        quad = [samples[image_ids[int(rng.integers(0, len(image_ids)))]] for _ in range(4)]
        composed.append(compose.mosaic(quad, params, seed=int(rng.integers(0, 2**63 - 1))))
    _write_samples(args.out_dir, composed, "mosaic")
    return 0


def _cmd_seesaw(args) -> int:
    if args.action != "grad-check":
        raise CliValidationError(f"unknown seesaw action: {args.action}")
    err = seesaw.grad_check(n_cases=args.cases, n_classes=args.classes, seed=args.seed)
    print(f"max relative gradient error over {args.cases} cases: {err:.3e}")
    return 0 if err < 1e-5 else 1


def _cmd_ema(args) -> int:
    state = EmaState(decay=args.decay)
    for path in args.inputs:
        state = ema_update(state, read_checkpoint(path))
    write_checkpoint(args.out, state.shadow)
    return 0


def _cmd_select(args) -> int:
    curve = read_ap_curve_csv(args.curve)
    if args.criterion.startswith("weighted:"):
        w = tuple(float(x) for x in args.criterion.split(":", 1)[1].split(","))
        criterion = ("weighted", *w)
    else:
        criterion = args.criterion
    print(select_epoch(curve, criterion))
    return 0


def _cmd_eval(args) -> int:
    ds = _load_dataset(args.gt, validate_masks=True)
    dets = read_results_json(args.results)
    cfg = EvalConfig(
        metric_kind="boundary_iou" if args.metric == "boundary" else "mask_iou",
        max_per_img=args.max_per_img,
        fixed_ap=args.fixed_ap,
        max_per_class_dataset=args.max_per_class,
    )
    report = evaluate(ds, dets, cfg)
    text = json.dumps(report.to_dict(), indent=2)
    if args.report:
        atomic_write_text(args.report, text)
    print(f"AP={report.ap:.2f} AP_r={report.ap_r:.2f} AP_c={report.ap_c:.2f} AP_f={report.ap_f:.2f}")
    return 0


def _cmd_tta_fuse(args) -> int:
    with open(args.views, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    if len(manifest) != len(args.results):
        raise CliValidationError(
            f"{len(args.results)} results files but {len(manifest)} views"
        )
    ds = _load_dataset(args.gt)
    extents = {im.id: (im.width, im.height) for im in ds.images}
    det_sets = []
    for path, v in zip(args.results, manifest):
        view = tta.TtaView(scale=(int(v["w"]), int(v["h"])), hflip=bool(v["hflip"]))
        dets = read_results_json(path)
        by_img: dict[int, list] = {}
        for d in dets:
            by_img.setdefault(d.image_id, []).append(d)
        mapped = []
        for image_id, group in by_img.items():
            mapped.extend(tta.unmap(group, view, extents[image_id]))
        det_sets.append(mapped)
    cfg = tta.FuseConfig(nms_iou=args.nms_iou, mask_vote=args.mask_vote)
    write_results_json(args.out, tta.fuse(det_sets, cfg))
    return 0


def _cmd_gen_fixture(args) -> int:
    ds, sidecar = fixtures.gen_fixture(
        n_categories=args.categories,
        zipf_s=args.zipf,
        n_images=args.images,
        seed=args.seed,
    )
    atomic_write_text(args.out, serialize_dataset(ds))
    if args.sidecar:
        _write_json(args.sidecar, sidecar)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltseg")
    parser.add_argument("--config", help="TOML config file, one table per subcommand")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset category statistics")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out")
    p.add_argument("--per-category", action="store_true")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("rfs", help="repeat factor sampling schedule")
    p.add_argument("--annotations", required=True)
    p.add_argument("--t", type=float, default=rfs.DEFAULT_THRESHOLD)
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-schedule", required=True)
    p.add_argument("--out-table")
    p.set_defaults(func=_cmd_rfs)

    p = sub.add_parser("copypaste", help="balanced copy-paste composition")
    p.add_argument("--annotations", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--n-instances", type=int, default=compose.DEFAULT_N_INSTANCES)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_copypaste)

    p = sub.add_parser("mosaic", help="balanced mosaic composition")
    p.add_argument("--annotations", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--base-size", type=int, default=320)
    p.add_argument("--short-side-range", type=int, nargs=2, default=[640, 1400])
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_mosaic)

    p = sub.add_parser("seesaw", help="seesaw loss kernel checks")
    p.add_argument("action", choices=["grad-check"])
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_seesaw)

    p = sub.add_parser("ema", help="fold checkpoints into an EMA shadow")
    p.add_argument("--decay", type=float, default=0.999)
    p.add_argument("--out", required=True)
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=_cmd_ema)

    p = sub.add_parser("select", help="early-stop epoch selection from an AP curve CSV")
    p.add_argument("--curve", required=True)
    p.add_argument("--criterion", default="max_ap")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("eval", help="mask/boundary AP evaluation")
    p.add_argument("--gt", required=True)
    p.add_argument("--results", required=True)
    p.add_argument("--metric", choices=["mask", "boundary"], default="mask")
    p.add_argument("--fixed-ap", action="store_true")
    p.add_argument("--max-per-img", type=int, default=300)
    p.add_argument("--max-per-class", type=int, default=10000)
    p.add_argument("--report")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("tta-fuse", help="fuse per-view detections")
    p.add_argument("--results", nargs="+", required=True)
    p.add_argument("--views", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--nms-iou", type=float, default=0.6)
    p.add_argument("--mask-vote", action="store_true")
    p.set_defaults(func=_cmd_tta_fuse)

    p = sub.add_parser("gen-fixture", help="synthetic long-tail dataset")
    p.add_argument("--categories", type=int, required=True)
    p.add_argument("--zipf", type=float, required=True)
    p.add_argument("--images", type=int, default=400)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sidecar")
    p.set_defaults(func=_cmd_gen_fixture)

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Inject config-file values as subparser defaults; explicit flags win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    with open(path, "rb") as f:
        cfg = tomllib.load(f)
    sub_actions = [
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    ]
    subparsers = sub_actions[0].choices
    for section, values in cfg.items():
        if section not in subparsers:
            raise CliValidationError(f"config names unknown subcommand [{section}]")
        sp = subparsers[section]
        known = {a.dest: a for a in sp._actions}
        for key in values:
            dest = key.replace("-", "_")
            if dest not in known:
                raise CliValidationError(
                    f"unknown config key '{key}' in section [{section}]"
                )
            # a value from the config satisfies a required flag
            known[dest].required = False
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in values.items()})
    return argv


def _thread_cap() -> int:
    """Worker-parallelism cap from LONGTAIL_THREADS (default 1).

    Every hot path is vectorized, so the toolkit currently runs
    single-threaded regardless; the variable is validated and reserved.
    """
    raw = os.environ.get("LONGTAIL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise CliValidationError(f"LONGTAIL_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise CliValidationError(f"LONGTAIL_THREADS must be >= 1, got {n}")
    return n


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        _thread_cap()
        argv = _apply_config(parser, list(argv))
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as e:
        return int(e.code or 0)
    except (
        CliValidationError,
        DatasetParseError,
        DatasetValidationError,
        ValueError,
        IndexError,
        OSError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
