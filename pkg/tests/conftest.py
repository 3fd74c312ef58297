import numpy as np
import pytest

from ltseg.data import (
    AnnotationRecord,
    CategoryRecord,
    Dataset,
    ImageRecord,
    bucket_for_image_count,
)
from ltseg.evaluation import Detection
from ltseg.fixtures import gen_fixture
from ltseg.masks import mask_to_bbox, rle_encode


def make_dataset(image_sizes, cat_image_counts, annotations):
    """Small-dataset builder for tests.

    image_sizes: list of (w, h); cat_image_counts: list of image_count per
    category id 1..n; annotations: list of (image_id, category_id, bool mask).
    """
    images = [
        ImageRecord(id=i + 1, width=w, height=h, file_name=f"im{i + 1}.png")
        for i, (w, h) in enumerate(image_sizes)
    ]
    categories = [
        CategoryRecord(
            id=i + 1,
            name=f"c{i + 1}",
            image_count=n,
            bucket=bucket_for_image_count(n),
        )
        for i, n in enumerate(cat_image_counts)
    ]
    anns = [
        AnnotationRecord(
            id=k + 1,
            image_id=img,
            category_id=cat,
            segmentation=rle_encode(mask),
            bbox=mask_to_bbox(mask),
            area=float(np.count_nonzero(mask)),
        )
        for k, (img, cat, mask) in enumerate(annotations)
    ]
    return Dataset(images=images, categories=categories, annotations=anns)


def det(image_id, category_id, score, mask, iou_pred=None):
    return Detection(
        image_id=image_id,
        category_id=category_id,
        score=score,
        mask=rle_encode(mask),
        iou_pred=iou_pred,
    )


def rect_mask(h, w, y0, x0, bh, bw):
    m = np.zeros((h, w), dtype=bool)
    m[y0 : y0 + bh, x0 : x0 + bw] = True
    return m


@pytest.fixture(scope="session")
def zipf_fixture():
    return gen_fixture(n_categories=50, zipf_s=1.2, n_images=400, seed=7)
