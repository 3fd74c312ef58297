"""Repeat factor sampling: oversample images containing infrequent categories.

Each category gets r_c = max(1, sqrt(t / f_c)) where f_c is the fraction of
training images containing it; each image repeats according to the max r_c
over its categories. Epoch schedules realize fractional repeat factors by
stochastic rounding from a per-epoch seeded stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset

DEFAULT_THRESHOLD = 0.001


class RfsConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RepeatFactors:
    threshold: float
    per_category: dict[int, float]
    per_image: dict[int, float]


@dataclass(frozen=True)
class EpochSchedule:
    epoch_index: int
    seed: int
    entries: list[int]


def compute_repeat_factors(ds: Dataset, t: float = DEFAULT_THRESHOLD) -> RepeatFactors:
    """Per-category and per-image repeat factors at frequency threshold t."""
    if not (0.0 < t <= 1.0):
        raise RfsConfigError(f"threshold must be in (0, 1], got {t}")
    if not ds.images:
        raise RfsConfigError("dataset has no images")

    n_images = len(ds.images)
    per_category: dict[int, float] = {}
    for c in ds.categories:
        f = c.image_count / n_images
        # categories in no image never influence any image's factor
        per_category[c.id] = max(1.0, math.sqrt(t / f)) if f > 0 else 1.0

    cats_per_image: dict[int, set[int]] = {}
    for a in ds.annotations:
        cats_per_image.setdefault(a.image_id, set()).add(a.category_id)

    per_image = {}
    for im in ds.images:
        cats = cats_per_image.get(im.id)
        if not cats:
            per_image[im.id] = 1.0
        else:
            per_image[im.id] = max(per_category[c] for c in cats)
    return RepeatFactors(threshold=t, per_category=per_category, per_image=per_image)


def build_epoch_schedule(
    rf: RepeatFactors, epoch_index: int, seed: int
) -> EpochSchedule:
    """One epoch's oversampled image id list.

    Each image appears floor(r_I) times plus a Bernoulli(frac(r_I)) extra
    draw; the final order is a seeded permutation. The per-epoch stream is
    derived from (seed, epoch_index) so epochs reproduce out of order.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch_index]))
    entries: list[int] = []
    for image_id in sorted(rf.per_image):
        r = rf.per_image[image_id]
        reps = int(math.floor(r))
        if rng.random() < r - reps:
            reps += 1
        entries.extend([image_id] * reps)
    order = rng.permutation(len(entries))
    return EpochSchedule(
        epoch_index=epoch_index,
        seed=seed,
        entries=[entries[i] for i in order],
    )
