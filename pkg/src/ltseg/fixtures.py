"""Synthetic long-tail dataset generator for desk-scale tests and demos.

Category image-counts follow a Zipf(s) profile over category rank; masks are
simple axis-aligned rectangles (polygons) or ellipses (RLE). The sidecar
records the generator's ground-truth per-bucket fractions so statistics code
can be checked against an exact oracle.
"""

from __future__ import annotations

import logging

import numpy as np

from .data import (
    BUCKETS,
    AnnotationRecord,
    CategoryRecord,
    Dataset,
    ImageRecord,
    bucket_for_image_count,
)
from .masks import rle_encode


def _ellipse_mask(height, width, cy, cx, ry, rx):
    yy, xx = np.mgrid[0:height, 0:width]
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def gen_fixture(
    n_categories: int,
    zipf_s: float,
    n_images: int = 400,
    seed: int = 0,
    image_size: tuple[int, int] = (128, 128),
):
    """Build a synthetic Dataset plus a ground-truth stats sidecar dict."""
    if n_categories < 3:
        raise ValueError("need at least 3 categories so every bucket can fill")
    rng = np.random.default_rng(seed)
    w, h = image_size

    images = [
        ImageRecord(id=i + 1, width=w, height=h, file_name=f"img_{i + 1:06d}.png")
        for i in range(n_images)
    ]

    # Zipf profile over rank, scaled so the head category is frequent
    head = max(1, int(0.6 * n_images))
    target_counts = [
        max(1, min(n_images, int(round(head / (k + 1) ** zipf_s))))
        for k in range(n_categories)
    ]

    annotations = []
    cat_image_counts = []
    inst_counts = []
    ann_id = 1
    for k, want in enumerate(target_counts):
        cat_id = k + 1
        img_ids = rng.choice(n_images, size=want, replace=False) + 1
        n_inst_cat = 0
        for img_id in img_ids:
            for _ in range(int(rng.integers(1, 3))):
                x0 = int(rng.integers(0, w - 16))
                y0 = int(rng.integers(0, h - 16))
                bw = int(rng.integers(6, 16))
                bh = int(rng.integers(6, 16))
                if rng.random() < 0.5:
                    seg = [[x0, y0, x0 + bw, y0, x0 + bw, y0 + bh, x0, y0 + bh]]
                    area = float(bw * bh)
                else:
                    mask = _ellipse_mask(h, w, y0 + bh / 2, x0 + bw / 2, bh / 2, bw / 2)
                    seg = rle_encode(mask)
                    area = float(np.count_nonzero(mask))
                annotations.append(
                    AnnotationRecord(
                        id=ann_id,
                        image_id=int(img_id),
                        category_id=cat_id,
                        segmentation=seg,
                        bbox=(float(x0), float(y0), float(bw), float(bh)),
                        area=area,
                    )
                )
                ann_id += 1
                n_inst_cat += 1
        cat_image_counts.append(want)
        inst_counts.append(n_inst_cat)

    categories = [
        CategoryRecord(
            id=k + 1,
            name=f"cat_{k + 1:04d}",
            image_count=cat_image_counts[k],
            bucket=bucket_for_image_count(cat_image_counts[k]),
        )
        for k in range(n_categories)
    ]
    ds = Dataset(images=images, categories=categories, annotations=annotations)

    n_inst = sum(inst_counts)
    cat_frac = {b: 0.0 for b in BUCKETS}
    inst_frac = {b: 0.0 for b in BUCKETS}
    for k in range(n_categories):
        b = categories[k].bucket
        cat_frac[b] += 1.0 / n_categories
        inst_frac[b] += inst_counts[k] / n_inst if n_inst else 0.0
    for b in BUCKETS:
        if cat_frac[b] == 0.0:
            logging.getLogger(__name__).warning(
                "fixture has an empty %s bucket for these parameters", b
            )
    sidecar = {
        "n_categories": n_categories,
        "n_images": n_images,
        "n_instances": n_inst,
        "zipf_s": zipf_s,
        "seed": seed,
        "per_category": [
            {
                "id": k + 1,
                "image_count": cat_image_counts[k],
                "instance_count": inst_counts[k],
                "bucket": categories[k].bucket,
            }
            for k in range(n_categories)
        ],
        "category_fractions": cat_frac,
        "instance_fractions": inst_frac,
    }
    return ds, sidecar
