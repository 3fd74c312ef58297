"""LVIS/COCO-style annotation data model, parsing, and category statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .masks import RleMask, mask_to_bbox, polygons_to_mask, rle_decode, rle_encode

RARE_MAX_IMAGES = 10
COMMON_MAX_IMAGES = 100
BUCKETS = ("rare", "common", "frequent")


class DatasetParseError(ValueError):
    """Malformed annotation JSON; carries the byte offset when known."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class DatasetValidationError(ValueError):
    """Structurally valid JSON whose contents break a dataset invariant."""


def bucket_for_image_count(image_count: int) -> str:
    """LVIS v1.0 partition: rare <=10 images, common 11-100, frequent >100."""
    if image_count <= RARE_MAX_IMAGES:
        return "rare"
    if image_count <= COMMON_MAX_IMAGES:
        return "common"
    return "frequent"


@dataclass(frozen=True)
class ImageRecord:
    id: int
    width: int
    height: int
    file_name: str = ""


@dataclass(frozen=True)
class CategoryRecord:
    id: int
    name: str
    image_count: int
    bucket: str


@dataclass(frozen=True)
class AnnotationRecord:
    id: int
    image_id: int
    category_id: int
    segmentation: list | RleMask
    bbox: tuple[float, float, float, float]
    area: float

    def decode_mask(self, height: int, width: int) -> np.ndarray:
        if isinstance(self.segmentation, RleMask):
            return rle_decode(self.segmentation)
        return polygons_to_mask(self.segmentation, height, width)


@dataclass(frozen=True)
class Dataset:
    images: list[ImageRecord]
    categories: list[CategoryRecord]
    annotations: list[AnnotationRecord]

    images_by_id: dict[int, ImageRecord] = field(repr=False, default_factory=dict)
    categories_by_id: dict[int, CategoryRecord] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "images_by_id", {im.id: im for im in self.images})
        object.__setattr__(
            self, "categories_by_id", {c.id: c for c in self.categories}
        )


def _require_unique(ids: list[int], kind: str) -> None:
    if len(set(ids)) != len(ids):
        seen = set()
        for i in ids:
            if i in seen:
                raise DatasetValidationError(f"duplicate {kind} id {i}")
            seen.add(i)


def _parse_segmentation(seg) -> list | RleMask:
    if isinstance(seg, dict):
        return RleMask.from_dict(seg)
    if isinstance(seg, list):
        return [list(map(float, poly)) for poly in seg]
    raise DatasetValidationError(f"unsupported segmentation payload: {type(seg)}")


def parse_dataset(json_text: str, validate_masks: bool = True) -> Dataset:
    """Parse LVIS/COCO annotation JSON into a validated Dataset.

    Recomputes category image_count from the annotations when absent and
    assigns frequency buckets. With validate_masks, every mask is decoded to
    check extent and to recompute inconsistent area values (polygon areas get
    a +-1 px^2 slack before being overwritten).
    """
    try:
        raw = json.loads(json_text)
    except json.JSONDecodeError as e:
        raise DatasetParseError(
            f"malformed JSON at byte offset {e.pos}: {e.msg}", offset=e.pos
        ) from e

    images = []
    for im in raw.get("images", []):
        rec = ImageRecord(
            id=int(im["id"]),
            width=int(im["width"]),
            height=int(im["height"]),
            file_name=str(im.get("file_name", "")),
        )
        if rec.width < 1 or rec.height < 1:
            raise DatasetValidationError(f"image {rec.id} has nonpositive extent")
        images.append(rec)
    _require_unique([im.id for im in images], "image")
    images_by_id = {im.id: im for im in images}

    raw_cats = raw.get("categories", [])
    _require_unique([int(c["id"]) for c in raw_cats], "category")
    cat_ids = {int(c["id"]) for c in raw_cats}

    annotations = []
    ann_image_ids: dict[int, set[int]] = {}
    for a in raw.get("annotations", []):
        image_id = int(a["image_id"])
        category_id = int(a["category_id"])
        if image_id not in images_by_id:
            raise DatasetValidationError(
                f"annotation {a.get('id')} references missing image_id {image_id}"
            )
        if category_id not in cat_ids:
            raise DatasetValidationError(
                f"annotation {a.get('id')} references missing category_id {category_id}"
            )
        seg = _parse_segmentation(a["segmentation"])
        bbox = tuple(float(v) for v in a.get("bbox", (0.0, 0.0, 0.0, 0.0)))
        area = float(a.get("area", -1.0))
        rec = AnnotationRecord(
            id=int(a["id"]),
            image_id=image_id,
            category_id=category_id,
            segmentation=seg,
            bbox=bbox,
            area=area,
        )
        if validate_masks:
            im = images_by_id[image_id]
            mask = rec.decode_mask(im.height, im.width)
            if mask.shape != (im.height, im.width):
                raise DatasetValidationError(
                    f"annotation {rec.id} mask extent {mask.shape} does not fit "
                    f"image {im.id} ({im.height}, {im.width})"
                )
            true_area = float(np.count_nonzero(mask))
            slack = 1.0 if isinstance(seg, list) else 0.0
            if rec.area < 0 or abs(rec.area - true_area) > slack:
                rec = replace(rec, area=true_area)
        annotations.append(rec)
        ann_image_ids.setdefault(category_id, set()).add(image_id)
    _require_unique([a.id for a in annotations], "annotation")

    categories = []
    for c in raw_cats:
        cid = int(c["id"])
        if "image_count" in c:
            image_count = int(c["image_count"])
        else:
            image_count = len(ann_image_ids.get(cid, ()))
        categories.append(
            CategoryRecord(
                id=cid,
                name=str(c.get("name", f"category_{cid}")),
                image_count=image_count,
                bucket=bucket_for_image_count(image_count),
            )
        )

    return Dataset(images=images, categories=categories, annotations=annotations)


def serialize_dataset(ds: Dataset) -> str:
    """Serialize a Dataset back to LVIS/COCO JSON (retained fields only)."""
    doc = {
        "images": [
            {
                "id": im.id,
                "width": im.width,
                "height": im.height,
                "file_name": im.file_name,
            }
            for im in ds.images
        ],
        "categories": [
            {"id": c.id, "name": c.name, "image_count": c.image_count}
            for c in ds.categories
        ],
        "annotations": [
            {
                "id": a.id,
                "image_id": a.image_id,
                "category_id": a.category_id,
                "segmentation": (
                    a.segmentation.to_dict()
                    if isinstance(a.segmentation, RleMask)
                    else a.segmentation
                ),
                "bbox": list(a.bbox),
                "area": a.area,
            }
            for a in ds.annotations
        ],
    }
    return json.dumps(doc)


@dataclass(frozen=True)
class CategoryStats:
    per_category: dict  # id -> {"instance_count", "image_count", "bucket"}
    category_fractions: dict  # bucket -> fraction of categories
    instance_fractions: dict  # bucket -> fraction of instances


def category_stats(ds: Dataset) -> CategoryStats:
    """Per-category instance/image counts plus global bucket fractions."""
    inst_counts: dict[int, int] = {c.id: 0 for c in ds.categories}
    for a in ds.annotations:
        inst_counts[a.category_id] += 1

    per_category = {
        c.id: {
            "instance_count": inst_counts[c.id],
            "image_count": c.image_count,
            "bucket": c.bucket,
        }
        for c in ds.categories
    }

    n_cats = len(ds.categories)
    n_inst = len(ds.annotations)
    cat_frac = {b: 0.0 for b in BUCKETS}
    inst_frac = {b: 0.0 for b in BUCKETS}
    for c in ds.categories:
        if n_cats:
            cat_frac[c.bucket] += 1.0 / n_cats
        if n_inst:
            inst_frac[c.bucket] += inst_counts[c.id] / n_inst
    return CategoryStats(
        per_category=per_category,
        category_fractions=cat_frac,
        instance_fractions=inst_frac,
    )


def annotation_mask(ds: Dataset, ann: AnnotationRecord) -> np.ndarray:
    im = ds.images_by_id[ann.image_id]
    return ann.decode_mask(im.height, im.width)


def annotation_from_mask(
    ann_id: int, image_id: int, category_id: int, mask: np.ndarray
) -> AnnotationRecord:
    """Build an AnnotationRecord with RLE segmentation from a dense mask."""
    return AnnotationRecord(
        id=ann_id,
        image_id=image_id,
        category_id=category_id,
        segmentation=rle_encode(mask),
        bbox=mask_to_bbox(mask),
        area=float(np.count_nonzero(mask)),
    )
