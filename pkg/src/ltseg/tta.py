"""Test-time augmentation: map per-view detections back and fuse them.

Views are (target_w, target_h) resolutions with an optional horizontal flip.
Unmapping un-flips and nearest-neighbor-resizes masks to the original image
extent; fusion concatenates all views and runs per-(image, category) greedy
NMS on mask bounding boxes, optionally replacing each survivor's mask by a
score-weighted pixel vote over the detections it suppressed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .evaluation import Detection
from .masks import MaskShapeError, mask_iou, mask_to_bbox, resize_nearest, rle_decode, rle_encode

# the four test resolutions of the reference setup, each with/without hflip
DEFAULT_VIEW_SCALES = ((1600, 1000), (1600, 1400), (1800, 1200), (1800, 1600))


class FuseValidationError(ValueError):
    pass


@dataclass(frozen=True)
class TtaView:
    scale: tuple[int, int]  # (target_w, target_h)
    hflip: bool = False

    def __post_init__(self):
        if self.scale[0] < 1 or self.scale[1] < 1:
            raise ValueError(f"view scale must be positive, got {self.scale}")


def default_views() -> list[TtaView]:
    return [
        TtaView(scale=s, hflip=f) for s in DEFAULT_VIEW_SCALES for f in (False, True)
    ]


@dataclass(frozen=True)
class FuseConfig:
    nms_iou: float = 0.6
    mask_vote: bool = False
    vote_iou: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.nms_iou <= 1.0) or not (0.0 < self.vote_iou <= 1.0):
            raise ValueError("fusion thresholds must lie in (0, 1]")


def remap(dets: list[Detection], view: TtaView, orig: tuple[int, int]) -> list[Detection]:
    """Map original-coordinate detections into a view (resize, then flip)."""
    w, h = view.scale
    out = []
    for d in dets:
        m = rle_decode(d.mask)
        if m.shape != (orig[1], orig[0]):
            raise MaskShapeError(
                f"mask extent {m.shape} does not match original {(orig[1], orig[0])}"
            )
        m = resize_nearest(m, h, w)
        if view.hflip:
            m = m[:, ::-1]
        out.append(replace(d, mask=rle_encode(m)))
    return out


def unmap(dets: list[Detection], view: TtaView, orig: tuple[int, int]) -> list[Detection]:
    """Map view-coordinate detections back to the original extent.

    Un-flips first, then nearest-neighbor resizes to (orig_w, orig_h);
    remap followed by unmap is identity up to resampling tolerance.
    """
    w, h = view.scale
    ow, oh = orig
    out = []
    for d in dets:
        m = rle_decode(d.mask)
        if m.shape != (h, w):
            raise MaskShapeError(
                f"mask extent {m.shape} does not match view {(h, w)}"
            )
        if view.hflip:
            m = m[:, ::-1]
        m = resize_nearest(m, oh, ow)
        out.append(replace(d, mask=rle_encode(m)))
    return out


def _box_iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def fuse(det_sets: list[list[Detection]], cfg: FuseConfig) -> list[Detection]:
    """Concatenate views and per-(image, category) greedy box-NMS.

    With mask_vote, each survivor's mask becomes the 0.5-thresholded
    score-weighted mean over itself and the suppressed masks whose mask IoU
    with it reaches vote_iou.
    """
    pool: list[Detection] = [d for ds in det_sets for d in ds]

    extents: dict[int, tuple[int, int]] = {}
    for d in pool:
        prev = extents.setdefault(d.image_id, d.mask.size)
        if prev != d.mask.size:
            raise FuseValidationError(
                f"image {d.image_id} has mixed mask extents {prev} vs {d.mask.size}"
            )

    groups: dict[tuple[int, int], list[Detection]] = {}
    for d in pool:
        groups.setdefault((d.image_id, d.category_id), []).append(d)

    fused: list[Detection] = []
    for key in sorted(groups):
        # sort key is input-order independent: score desc then mask bytes
        ranked = sorted(groups[key], key=lambda d: (-d.score, d.mask.counts))
        masks = [rle_decode(d.mask) for d in ranked]
        boxes = [mask_to_bbox(m) for m in masks]
        suppressed_by: dict[int, list[int]] = {}
        alive = [True] * len(ranked)
        for i in range(len(ranked)):
            if not alive[i]:
                continue
            suppressed_by[i] = []
            for j in range(i + 1, len(ranked)):
                if alive[j] and _box_iou(boxes[i], boxes[j]) >= cfg.nms_iou:
                    alive[j] = False
                    suppressed_by[i].append(j)
        for i, mine in suppressed_by.items():
            det = ranked[i]
            if cfg.mask_vote and mine:
                voters = [i] + [
                    j for j in mine if mask_iou(masks[i], masks[j]) >= cfg.vote_iou
                ]
                weights = np.array([ranked[j].score for j in voters])
                stack = np.stack([masks[j] for j in voters]).astype(float)
                mean = np.tensordot(weights, stack, axes=1) / weights.sum()
                det = replace(det, mask=rle_encode(mean >= 0.5))
            fused.append(det)
    return fused
