"""Mask / boundary / fixed AP evaluation, detection caps, and mask rescoring."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, DatasetValidationError, annotation_mask
from .masks import RleMask, boundary_iou, mask_boundary, mask_iou, rle_decode

DEFAULT_IOU_THRESHOLDS = tuple(np.round(np.arange(0.50, 0.96, 0.05), 2).tolist())
RECALL_POINTS = np.arange(101) / 100.0


class EvalValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Detection:
    image_id: int
    category_id: int
    score: float
    mask: RleMask
    iou_pred: float | None = None

    def to_dict(self) -> dict:
        d = {
            "image_id": self.image_id,
            "category_id": self.category_id,
            "score": self.score,
            "segmentation": self.mask.to_dict(),
        }
        if self.iou_pred is not None:
            d["iou_pred"] = self.iou_pred
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Detection":
        return cls(
            image_id=int(d["image_id"]),
            category_id=int(d["category_id"]),
            score=float(d["score"]),
            mask=RleMask.from_dict(d["segmentation"]),
            iou_pred=float(d["iou_pred"]) if "iou_pred" in d else None,
        )


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple[float, ...] = DEFAULT_IOU_THRESHOLDS
    metric_kind: str = "mask_iou"  # or "boundary_iou"
    boundary_dilation_frac: float = 0.02
    max_per_img: int = 300
    fixed_ap: bool = False
    max_per_class_dataset: int = 10000

    def __post_init__(self):
        if any(not (0.0 < t <= 1.0) for t in self.iou_thresholds):
            raise ValueError("IoU thresholds must lie in (0, 1]")
        if list(self.iou_thresholds) != sorted(self.iou_thresholds):
            raise ValueError("IoU thresholds must be sorted ascending")
        if self.max_per_img < 1 or self.max_per_class_dataset < 1:
            raise ValueError("detection caps must be >= 1")
        if self.metric_kind not in ("mask_iou", "boundary_iou"):
            raise ValueError(f"unknown metric kind: {self.metric_kind}")


@dataclass(frozen=True)
class EvalReport:
    ap: float
    ap_r: float
    ap_c: float
    ap_f: float
    per_category_ap: dict[int, float]
    config: EvalConfig

    def to_dict(self) -> dict:
        return {
            "AP": self.ap,
            "AP_r": self.ap_r,
            "AP_c": self.ap_c,
            "AP_f": self.ap_f,
            "per_category_ap": {str(k): v for k, v in self.per_category_ap.items()},
            "config": {
                "iou_thresholds": list(self.config.iou_thresholds),
                "metric_kind": self.config.metric_kind,
                "boundary_dilation_frac": self.config.boundary_dilation_frac,
                "max_per_img": self.config.max_per_img,
                "fixed_ap": self.config.fixed_ap,
                "max_per_class_dataset": self.config.max_per_class_dataset,
            },
        }


def _det_sort_key(d: Detection):
    # deterministic regardless of input order: score desc, then stable fields
    return (-d.score, d.image_id, d.category_id, d.mask.counts)


def apply_caps(dets: list[Detection], cfg: EvalConfig) -> list[Detection]:
    """Per-image top-k by score; under fixed AP, also per-category across
    the whole dataset. The per-image cap is applied first."""
    by_image: dict[int, list[Detection]] = {}
    for d in dets:
        by_image.setdefault(d.image_id, []).append(d)
    kept: list[Detection] = []
    for image_id in sorted(by_image):
        ranked = sorted(by_image[image_id], key=_det_sort_key)
        kept.extend(ranked[: cfg.max_per_img])

    if cfg.fixed_ap:
        by_cat: dict[int, list[Detection]] = {}
        for d in kept:
            by_cat.setdefault(d.category_id, []).append(d)
        kept = []
        for cat_id in sorted(by_cat):
            ranked = sorted(by_cat[cat_id], key=_det_sort_key)
            kept.extend(ranked[: cfg.max_per_class_dataset])
    return kept


def rescore(dets: list[Detection]) -> list[Detection]:
    """score' = score * predicted mask IoU."""
    out = []
    for d in dets:
        if d.iou_pred is None:
            raise EvalValidationError(
                f"detection in image {d.image_id} has no iou_pred to rescore with"
            )
        out.append(replace(d, score=d.score * d.iou_pred))
    return out


def calibration_oracle(dets: list[Detection], gt: Dataset) -> list[float]:
    """True mask IoU of each detection against its best same-category GT."""
    gt_by_img_cat: dict[tuple[int, int], list[np.ndarray]] = {}
    for a in gt.annotations:
        gt_by_img_cat.setdefault((a.image_id, a.category_id), []).append(
            annotation_mask(gt, a)
        )
    out = []
    for d in dets:
        candidates = gt_by_img_cat.get((d.image_id, d.category_id), [])
        if not candidates:
            out.append(0.0)
            continue
        m = rle_decode(d.mask)
        out.append(max(mask_iou(m, g) for g in candidates))
    return out


def _pair_iou(
    det_masks: list[np.ndarray], gt_masks: list[np.ndarray], cfg: EvalConfig
) -> np.ndarray:
    """IoU matrix (n_det, n_gt) under the configured metric."""
    if cfg.metric_kind == "boundary_iou":
        h, w = det_masks[0].shape if det_masks else gt_masks[0].shape
        d = max(1, int(np.ceil(cfg.boundary_dilation_frac * float(np.hypot(h, w)))))
        det_masks = [mask_boundary(m, d) if m.any() else m for m in det_masks]
        gt_masks = [mask_boundary(m, d) if m.any() else m for m in gt_masks]
    if not det_masks or not gt_masks:
        return np.zeros((len(det_masks), len(gt_masks)))
    a = np.stack([m.ravel() for m in det_masks]).astype(np.float32)
    b = np.stack([m.ravel() for m in gt_masks]).astype(np.float32)
    inter = a @ b.T
    union = a.sum(axis=1)[:, None] + b.sum(axis=1)[None, :] - inter
    # IoU of two empty masks pinned to 0
    return np.where(union > 0, inter / np.maximum(union, 1.0), 0.0)


def evaluate(gt: Dataset, dets: list[Detection], cfg: EvalConfig) -> EvalReport:
    """COCO-style AP over the configured IoU metric and thresholds.

    Per category: detections are capped, globally score-sorted, greedily
    matched per image to unmatched GT (highest IoU wins, ties to the lower GT
    id), and the precision envelope is integrated at 101 recall points; AP
    averages over thresholds, then categories, then buckets.
    """
    image_ids = set(gt.images_by_id)
    cat_ids = set(gt.categories_by_id)
    for d in dets:
        if d.image_id not in image_ids:
            raise EvalValidationError(f"detection references missing image {d.image_id}")
        if d.category_id not in cat_ids:
            raise EvalValidationError(
                f"detection references missing category {d.category_id}"
            )

    dets = apply_caps(dets, cfg)

    gt_by_cat_img: dict[int, dict[int, list]] = {}
    for a in gt.annotations:
        gt_by_cat_img.setdefault(a.category_id, {}).setdefault(a.image_id, []).append(a)
    det_by_cat_img: dict[int, dict[int, list[Detection]]] = {}
    for d in dets:
        det_by_cat_img.setdefault(d.category_id, {}).setdefault(d.image_id, []).append(d)

    thresholds = np.asarray(cfg.iou_thresholds)
    per_category_ap: dict[int, float] = {}

    for cat_id, gt_imgs in gt_by_cat_img.items():
        n_gt = sum(len(v) for v in gt_imgs.values())
        det_imgs = det_by_cat_img.get(cat_id, {})

        # per-image matching; accumulate (score, tie_key, tp-flag per threshold)
        records: list[tuple[tuple, np.ndarray]] = []
        for image_id in set(gt_imgs) | set(det_imgs):
            anns = sorted(gt_imgs.get(image_id, []), key=lambda a: a.id)
            img_dets = sorted(det_imgs.get(image_id, []), key=_det_sort_key)
            gt_masks = [annotation_mask(gt, a) for a in anns]
            det_masks = [rle_decode(d.mask) for d in img_dets]
            iou = _pair_iou(det_masks, gt_masks, cfg)
            tp = np.zeros((len(img_dets), len(thresholds)), dtype=bool)
            for ti, thr in enumerate(thresholds):
                taken = np.zeros(len(anns), dtype=bool)
                for di in range(len(img_dets)):
                    best_j, best_iou = -1, thr
                    for j in range(len(anns)):
                        if taken[j]:
                            continue
                        if iou[di, j] >= best_iou and (
                            best_j < 0 or iou[di, j] > best_iou
                        ):
                            best_j, best_iou = j, iou[di, j]
                    if best_j >= 0:
                        taken[best_j] = True
                        tp[di, ti] = True
            for di, d in enumerate(img_dets):
                records.append((_det_sort_key(d), tp[di]))
        per_category_ap[cat_id] = _average_precision(records, n_gt, len(thresholds))

    buckets = {c.id: c.bucket for c in gt.categories}
    def _mean(ids):
        vals = [per_category_ap[i] for i in ids]
        return 100.0 * float(np.mean(vals)) if vals else 0.0

    present = list(per_category_ap)
    report = EvalReport(
        ap=_mean(present),
        ap_r=_mean([i for i in present if buckets[i] == "rare"]),
        ap_c=_mean([i for i in present if buckets[i] == "common"]),
        ap_f=_mean([i for i in present if buckets[i] == "frequent"]),
        per_category_ap={i: 100.0 * per_category_ap[i] for i in present},
        config=cfg,
    )
    return report


def _average_precision(records, n_gt: int, n_thr: int) -> float:
    """Mean over thresholds of 101-point interpolated AP, in [0, 1]."""
    if n_gt == 0:
        return 0.0
    if not records:
        return 0.0
    records.sort(key=lambda r: r[0])
    tp = np.stack([r[1] for r in records])  # (n_det, n_thr)
    ap_sum = 0.0
    for ti in range(n_thr):
        cum_tp = np.cumsum(tp[:, ti])
        cum_fp = np.cumsum(~tp[:, ti])
        recall = cum_tp / n_gt
        precision = cum_tp / np.maximum(cum_tp + cum_fp, 1)
        # envelope: best precision at any recall >= r
        for i in range(len(precision) - 2, -1, -1):
            precision[i] = max(precision[i], precision[i + 1])
        idx = np.searchsorted(recall, RECALL_POINTS, side="left")
        q = np.where(idx < len(precision), precision[np.minimum(idx, len(precision) - 1)], 0.0)
        ap_sum += float(q.mean())
    return ap_sum / n_thr


__all__ = [
    "Detection",
    "EvalConfig",
    "EvalReport",
    "apply_caps",
    "rescore",
    "calibration_oracle",
    "evaluate",
    "mask_iou",
    "mask_boundary",
    "boundary_iou",
]
