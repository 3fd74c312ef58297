"""Independent brute-force oracles used by the test suite.

Everything here is deliberately written with plain per-pixel loops and
without reusing the library's algorithms, so it can serve as a second
opinion on the fast implementations.
"""

from __future__ import annotations

import numpy as np

from ltseg.data import Dataset
from ltseg.masks import rle_decode


def pip_even_odd(px: float, py: float, xs, ys) -> bool:
    """Even-odd ray-cast point-in-polygon test for a single point."""
    inside = False
    n = len(xs)
    for i in range(n):
        x1, y1 = xs[i], ys[i]
        x2, y2 = xs[(i + 1) % n], ys[(i + 1) % n]
        if (y1 <= py < y2) or (y2 <= py < y1):
            xi = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if xi > px:
                inside = not inside
    return inside


def rasterize_bruteforce(polys, height: int, width: int) -> np.ndarray:
    """Per-pixel-center scan with vertex clipping, unioned over polygons."""
    mask = np.zeros((height, width), dtype=bool)
    for poly in polys:
        pts = np.asarray(poly, dtype=float).reshape(-1, 2)
        xs = np.clip(pts[:, 0], 0, width).tolist()
        ys = np.clip(pts[:, 1], 0, height).tolist()
        for r in range(height):
            for c in range(width):
                if pip_even_odd(c + 0.5, r + 0.5, xs, ys):
                    mask[r, c] = True
    return mask


def chebyshev_band_bruteforce(mask: np.ndarray, d: int) -> np.ndarray:
    """Foreground pixels with background (or out-of-bounds) within Chebyshev
    distance d, by scanning each pixel's (2d+1)^2 window."""
    h, w = mask.shape
    band = np.zeros_like(mask)
    for r in range(h):
        for c in range(w):
            if not mask[r, c]:
                continue
            near_bg = False
            for dr in range(-d, d + 1):
                for dc in range(-d, d + 1):
                    rr, cc = r + dr, c + dc
                    if rr < 0 or rr >= h or cc < 0 or cc >= w or not mask[rr, cc]:
                        near_bg = True
                        break
                if near_bg:
                    break
            band[r, c] = near_bg
    return band


def iou_bruteforce(a: np.ndarray, b: np.ndarray) -> float:
    inter = union = 0
    for r in range(a.shape[0]):
        for c in range(a.shape[1]):
            if a[r, c] and b[r, c]:
                inter += 1
            if a[r, c] or b[r, c]:
                union += 1
    return inter / union if union else 0.0


def boundary_iou_bruteforce(a, b, dilation_frac: float) -> float:
    h, w = a.shape
    d = max(1, int(np.ceil(dilation_frac * float(np.hypot(h, w)))))
    return iou_bruteforce(
        chebyshev_band_bruteforce(a, d), chebyshev_band_bruteforce(b, d)
    )


def softmax_ce_reference(logits, label: int):
    """Plain softmax cross-entropy loss and gradient."""
    z = np.asarray(logits, dtype=float)
    e = np.exp(z - z.max())
    p = e / e.sum()
    loss = -np.log(p[label])
    grad = p.copy()
    grad[label] -= 1.0
    return float(loss), grad


def ref_evaluate(gt: Dataset, dets, cfg):
    """Reference AP evaluator: plain loops, brute-force IoU, direct recall
    sweep. Mirrors the pinned matching/tie-break contract but shares no code
    with the library implementation."""
    # per-image cap, then optional per-class dataset cap
    key = lambda d: (-d.score, d.image_id, d.category_id, d.mask.counts)
    per_img = {}
    for d in dets:
        per_img.setdefault(d.image_id, []).append(d)
    capped = []
    for img in sorted(per_img):
        capped.extend(sorted(per_img[img], key=key)[: cfg.max_per_img])
    if cfg.fixed_ap:
        per_cat = {}
        for d in capped:
            per_cat.setdefault(d.category_id, []).append(d)
        capped = []
        for cat in sorted(per_cat):
            capped.extend(sorted(per_cat[cat], key=key)[: cfg.max_per_class_dataset])

    def metric_iou(ma, mb):
        if cfg.metric_kind == "boundary_iou":
            return boundary_iou_bruteforce(ma, mb, cfg.boundary_dilation_frac)
        return iou_bruteforce(ma, mb)

    cat_aps = {}
    gt_cats = sorted({a.category_id for a in gt.annotations})
    for cat in gt_cats:
        gt_anns = [a for a in gt.annotations if a.category_id == cat]
        n_gt = len(gt_anns)
        cat_dets = sorted([d for d in capped if d.category_id == cat], key=key)
        per_thr_aps = []
        for thr in cfg.iou_thresholds:
            flags = []
            for img in sorted({a.image_id for a in gt_anns} | {d.image_id for d in cat_dets}):
                img_gt = sorted([a for a in gt_anns if a.image_id == img], key=lambda a: a.id)
                img_dets = [d for d in cat_dets if d.image_id == img]
                gmasks = [a.decode_mask(gt.images_by_id[img].height, gt.images_by_id[img].width) for a in img_gt]
                used = [False] * len(img_gt)
                for d in img_dets:
                    dm = rle_decode(d.mask)
                    best_j, best = -1, thr
                    for j in range(len(img_gt)):
                        if used[j]:
                            continue
                        v = metric_iou(dm, gmasks[j])
                        if v >= best and (best_j < 0 or v > best):
                            best_j, best = j, v
                    if best_j >= 0:
                        used[best_j] = True
                        flags.append((key(d), True))
                    else:
                        flags.append((key(d), False))
            flags.sort(key=lambda t: t[0])
            tps = 0
            pr = []  # (recall, precision) after each detection
            for i, (_, is_tp) in enumerate(flags):
                if is_tp:
                    tps += 1
                pr.append((tps / n_gt, tps / (i + 1)))
            best_ps = []
            for k in range(101):
                r = k / 100.0
                best_p = 0.0
                for rec, prec in pr:
                    if rec >= r and prec > best_p:
                        best_p = prec
                best_ps.append(best_p)
            per_thr_aps.append(float(np.mean(best_ps)))
        cat_aps[cat] = sum(per_thr_aps) / len(per_thr_aps)

    buckets = {c.id: c.bucket for c in gt.categories}

    def mean_of(ids):
        vals = [cat_aps[i] for i in ids]
        return 100.0 * float(np.mean(vals)) if vals else 0.0

    return {
        "AP": mean_of(gt_cats),
        "AP_r": mean_of([c for c in gt_cats if buckets[c] == "rare"]),
        "AP_c": mean_of([c for c in gt_cats if buckets[c] == "common"]),
        "AP_f": mean_of([c for c in gt_cats if buckets[c] == "frequent"]),
        "per_category": {c: 100.0 * cat_aps[c] for c in gt_cats},
    }
