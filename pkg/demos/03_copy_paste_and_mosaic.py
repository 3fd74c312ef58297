"""Composite instances across images and stitch four-image mosaics.

Builds a couple of synthetic samples, pastes tail-category instances onto a
target, then assembles a 2x2 mosaic. PNGs land in demos/out/ so the results
can be eyeballed.
"""

import os

import numpy as np
from PIL import Image

from ltseg.compose import (
    MosaicParams,
    PasteParams,
    Sample,
    SampleAnnotation,
    copy_paste,
    mosaic,
)

OUT = os.path.join(os.path.dirname(__file__), "out")


def blob_sample(h, w, bg, fg, cat, seed):
    rng = np.random.default_rng(seed)
    img = np.full((h, w, 3), bg, np.uint8)
    cy, cx = rng.integers(20, h - 20), rng.integers(20, w - 20)
    yy, xx = np.mgrid[0:h, 0:w]
    mask = ((yy - cy) ** 2 / rng.integers(40, 120) + (xx - cx) ** 2 / rng.integers(40, 120)) <= 1
    img[mask] = fg
    ann = SampleAnnotation(category_id=cat, mask=mask).refreshed()
    return Sample(image=img, annotations=[ann])


def main():
    os.makedirs(OUT, exist_ok=True)
    target = blob_sample(96, 96, bg=(40, 40, 40), fg=(200, 60, 60), cat=1, seed=0)
    sources = [
        (blob_sample(96, 96, bg=30, fg=(60, 200, 60), cat=2, seed=1), 0),
        (blob_sample(96, 96, bg=30, fg=(60, 60, 200), cat=3, seed=2), 0),
    ]

    pasted = copy_paste(target, sources, PasteParams(n_instances=2), seed=5)
    Image.fromarray(pasted.image).save(os.path.join(OUT, "copy_paste.png"))
    print(f"copy-paste: target had {len(target.annotations)} annotation(s), "
          f"output has {len(pasted.annotations)}")
    for a in pasted.annotations:
        print(f"  category {a.category_id}: area {a.area:.0f}, bbox {tuple(round(v) for v in a.bbox)}")

    quad = [blob_sample(96, 96, bg=20 * i, fg=(255 - 40 * i, 80, 40 * i), cat=i, seed=i)
            for i in range(1, 5)]
    params = MosaicParams(base_size=(96, 96), short_side_range=(100, 180))
    m = mosaic(quad, params, seed=9)
    Image.fromarray(m.image).save(os.path.join(OUT, "mosaic.png"))
    print(f"\nmosaic: canvas {m.image.shape[1]}x{m.image.shape[0]}, "
          f"{len(m.annotations)} annotations survived clipping")
    print(f"images written to {OUT}/")


if __name__ == "__main__":
    main()
