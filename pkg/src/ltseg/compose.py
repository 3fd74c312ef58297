"""Balanced copy-paste and balanced mosaic composition with consistent annotations.

All compositing is hard (binary-mask) and all geometric resampling is
nearest-neighbor, so every output annotation's mask pixels carry values
copied verbatim from its source instance's region. Later pastes occlude
earlier ones and everything occludes the target.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, annotation_mask
from .masks import mask_to_bbox, resize_nearest

logger = logging.getLogger(__name__)

DEFAULT_N_INSTANCES = 6
DEFAULT_MIN_REMAINING_AREA_FRAC = 0.1
DEFAULT_MIN_BOX_AREA = 4.0
# short-side presets; the wider one avoids generating too many tiny objects
SHORT_SIDE_PRESETS = {"wide": (400, 1400), "narrow": (640, 1400)}


class SelectionError(ValueError):
    pass


@dataclass
class SampleAnnotation:
    category_id: int
    mask: np.ndarray  # bool (H, W), same extent as the sample image
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    area: float = 0.0

    def refreshed(self) -> "SampleAnnotation":
        return SampleAnnotation(
            category_id=self.category_id,
            mask=self.mask,
            bbox=mask_to_bbox(self.mask),
            area=float(np.count_nonzero(self.mask)),
        )


@dataclass
class Sample:
    image: np.ndarray  # (H, W, 3) uint8
    annotations: list[SampleAnnotation] = field(default_factory=list)


@dataclass(frozen=True)
class PasteParams:
    n_instances: int = DEFAULT_N_INSTANCES
    bucket_weights: dict = None
    scale_jitter: tuple[float, float] = (0.8, 1.25)
    hflip_prob: float = 0.5
    min_remaining_area_frac: float = DEFAULT_MIN_REMAINING_AREA_FRAC

    def __post_init__(self):
        if self.bucket_weights is None:
            object.__setattr__(
                self, "bucket_weights", {"rare": 1.0, "common": 1.0, "frequent": 1.0}
            )
        if any(w < 0 for w in self.bucket_weights.values()):
            raise ValueError("bucket weights must be >= 0")
        if all(w == 0 for w in self.bucket_weights.values()):
            raise ValueError("at least one bucket weight must be positive")
        lo, hi = self.scale_jitter
        if not (0 < lo <= hi):
            raise ValueError(f"scale jitter must satisfy 0 < lo <= hi, got {self.scale_jitter}")


@dataclass(frozen=True)
class MosaicParams:
    apply_prob: float = 0.5
    base_size: tuple[int, int] = (640, 640)  # (W, H)
    short_side_range: tuple[int, int] = SHORT_SIDE_PRESETS["narrow"]
    min_box_area: float = DEFAULT_MIN_BOX_AREA

    def __post_init__(self):
        if not (0.0 <= self.apply_prob <= 1.0):
            raise ValueError(f"apply_prob must be in [0, 1], got {self.apply_prob}")
        if self.short_side_range[0] >= self.short_side_range[1]:
            raise ValueError("short side range must satisfy min < max")


def select_paste_instances(
    ds: Dataset, params: PasteParams, seed: int
) -> list[int]:
    """Draw annotation ids with probability proportional to their category
    bucket's weight (with replacement)."""
    rng = np.random.default_rng(seed)
    ann_ids = []
    weights = []
    for a in ds.annotations:
        w = params.bucket_weights.get(ds.categories_by_id[a.category_id].bucket, 0.0)
        if w > 0:
            ann_ids.append(a.id)
            weights.append(w)
    if params.n_instances == 0:
        return []
    if not ann_ids:
        raise SelectionError("no annotations in any positively weighted bucket")
    p = np.asarray(weights)
    p = p / p.sum()
    picks = rng.choice(len(ann_ids), size=params.n_instances, replace=True, p=p)
    return [ann_ids[i] for i in picks]


def _extract_patch(sample: Sample, ann: SampleAnnotation):
    x, y, w, h = (int(v) for v in ann.bbox)
    img = sample.image[y : y + h, x : x + w]
    msk = ann.mask[y : y + h, x : x + w]
    return img, msk


def copy_paste(
    target: Sample,
    sources: list[tuple[Sample, int]],
    params: PasteParams,
    seed: int,
) -> Sample:
    """Paste source instances (by annotation index) onto the target.

    Pasted instances land topmost in order; occluded annotations lose the
    pasted region from their masks and are dropped once their remaining area
    falls below min_remaining_area_frac of the area they had when they
    entered the composition.
    """
    rng = np.random.default_rng(seed)
    out_img = target.image.copy()
    H, W = out_img.shape[:2]

    live: list[tuple[SampleAnnotation, float]] = []  # (annotation, entry area)
    n_target = len(target.annotations)
    for a in target.annotations:
        a = a.refreshed()
        live.append((SampleAnnotation(a.category_id, a.mask.copy(), a.bbox, a.area), a.area))

    for src_sample, ann_idx in sources:
        ann = src_sample.annotations[ann_idx].refreshed()
        if ann.area == 0:
            raise ValueError("source instance mask is empty")
        img_patch, msk_patch = _extract_patch(src_sample, ann)
        if rng.random() < params.hflip_prob:
            img_patch = img_patch[:, ::-1]
            msk_patch = msk_patch[:, ::-1]
        f = rng.uniform(*params.scale_jitter)
        ph = int(round(msk_patch.shape[0] * f))
        pw = int(round(msk_patch.shape[1] * f))
        if ph < 1 or pw < 1:
            logger.warning(
                "skipping paste: instance scaled to %dx%d (< 1 px)", ph, pw
            )
            continue
        img_patch = resize_nearest(img_patch, ph, pw)
        msk_patch = resize_nearest(msk_patch, ph, pw)

        py = int(rng.integers(0, max(1, H - ph + 1)))
        px = int(rng.integers(0, max(1, W - pw + 1)))
        ph_c = min(ph, H - py)
        pw_c = min(pw, W - px)
        img_patch = img_patch[:ph_c, :pw_c]
        msk_patch = msk_patch[:ph_c, :pw_c]
        if not msk_patch.any():
            logger.warning("skipping paste: instance fully clipped away")
            continue

        region = (slice(py, py + ph_c), slice(px, px + pw_c))
        out_img[region][msk_patch] = img_patch[msk_patch]

        full_mask = np.zeros((H, W), dtype=bool)
        full_mask[region] = msk_patch
        for a, _ in live:
            a.mask &= ~full_mask
        live.append(
            (SampleAnnotation(ann.category_id, full_mask).refreshed(), float(np.count_nonzero(full_mask)))
        )

    survivors = []
    for a, entry_area in live:
        a = a.refreshed()
        if a.area >= params.min_remaining_area_frac * entry_area and a.area > 0:
            survivors.append(a)
    return Sample(image=out_img, annotations=survivors)


def mosaic(samples: list[Sample], params: MosaicParams, seed: int) -> Sample:
    """Stitch 4 samples onto a 2W x 2H canvas around a jittered center point.

    Each input is resized so its short side falls in short_side_range and is
    anchored at the center point toward its quadrant's corner; annotations
    are scaled/translated with the pixels, clipped to the visible region, and
    dropped when the clipped box area falls below min_box_area.
    """
    if len(samples) != 4:
        raise ValueError(f"mosaic needs exactly 4 samples, got {len(samples)}")
    rng = np.random.default_rng(seed)
    W, H = params.base_size
    CW, CH = 2 * W, 2 * H
    canvas = np.full((CH, CW, 3), 114, dtype=np.uint8)
    # center jitter uniform over the middle half of the canvas
    cx = int(rng.integers(W // 2, W + W // 2 + 1))
    cy = int(rng.integers(H // 2, H + H // 2 + 1))

    out_anns: list[SampleAnnotation] = []
    for quadrant, sample in enumerate(samples):
        h0, w0 = sample.image.shape[:2]
        target_short = rng.uniform(*params.short_side_range)
        f = target_short / min(h0, w0)
        rh, rw = max(1, int(round(h0 * f))), max(1, int(round(w0 * f)))
        img = resize_nearest(sample.image, rh, rw)

        if quadrant == 0:  # top-left: bottom-right corner at the center
            x1, y1 = cx, cy
            x0, y0 = max(0, x1 - rw), max(0, y1 - rh)
            sx0, sy0 = rw - (x1 - x0), rh - (y1 - y0)
        elif quadrant == 1:  # top-right
            x0, y0 = cx, max(0, cy - rh)
            x1, y1 = min(CW, x0 + rw), cy
            sx0, sy0 = 0, rh - (y1 - y0)
        elif quadrant == 2:  # bottom-left
            x0, y0 = max(0, cx - rw), cy
            x1, y1 = cx, min(CH, y0 + rh)
            sx0, sy0 = rw - (x1 - x0), 0
        else:  # bottom-right
            x0, y0 = cx, cy
            x1, y1 = min(CW, x0 + rw), min(CH, y0 + rh)
            sx0, sy0 = 0, 0
        canvas[y0:y1, x0:x1] = img[sy0 : sy0 + (y1 - y0), sx0 : sx0 + (x1 - x0)]

        for a in sample.annotations:
            rmask = resize_nearest(a.mask, rh, rw)
            placed = np.zeros((CH, CW), dtype=bool)
            placed[y0:y1, x0:x1] = rmask[sy0 : sy0 + (y1 - y0), sx0 : sx0 + (x1 - x0)]
            if not placed.any():
                continue
            na = SampleAnnotation(a.category_id, placed).refreshed()
            bx, by, bw, bh = na.bbox
            if bw * bh < params.min_box_area:
                continue
            out_anns.append(na)
    return Sample(image=canvas, annotations=out_anns)


def maybe_mosaic(sample_stream, params: MosaicParams, seed: int) -> Sample:
    """With probability apply_prob emit a mosaic of the next 4 stream samples,
    otherwise pass the next sample through unmodified."""
    rng = np.random.default_rng(seed)
    stream = iter(sample_stream)
    if rng.random() < params.apply_prob:
        quad = [next(stream) for _ in range(4)]
        return mosaic(quad, params, seed=int(rng.integers(0, 2**63 - 1)))
    return next(stream)
