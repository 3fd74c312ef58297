"""Binary mask primitives: RLE codec, polygon rasterization, IoU, boundary bands.

Masks are 2D numpy bool arrays of shape (H, W), row-major. The RLE codec
follows the de-facto COCO compressed format: column-major runs starting with
a (possibly zero-length) background run, packed into a printable character
string with 5-bit groups and delta coding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


class MaskCodecError(ValueError):
    """Raised when an RLE payload is inconsistent with its declared size."""


class MaskShapeError(ValueError):
    """Raised when two masks that must share an extent do not."""


@dataclass(frozen=True)
class RleMask:
    """Compressed run-length mask: (height, width) plus the COCO count string."""

    size: tuple[int, int]
    counts: str

    def to_dict(self) -> dict:
        return {"size": [self.size[0], self.size[1]], "counts": self.counts}

    @classmethod
    def from_dict(cls, d: dict) -> "RleMask":
        h, w = d["size"]
        return cls(size=(int(h), int(w)), counts=str(d["counts"]))


def _pack_counts(cnts: list[int]) -> str:
    """Pack run lengths into the COCO compressed character string."""
    out = []
    for i, x in enumerate(cnts):
        if i > 2:
            x -= cnts[i - 2]
        more = True
        while more:
            c = x & 0x1F
            x >>= 5
            more = (x != -1) if (c & 0x10) else (x != 0)
            if more:
                c |= 0x20
            out.append(chr(c + 48))
    return "".join(out)


def _unpack_counts(s: str) -> list[int]:
    cnts: list[int] = []
    i = 0
    n = len(s)
    while i < n:
        x = 0
        k = 0
        more = True
        while more:
            if i >= n:
                raise MaskCodecError("truncated RLE count string")
            c = ord(s[i]) - 48
            x |= (c & 0x1F) << (5 * k)
            more = bool(c & 0x20)
            i += 1
            k += 1
            if not more and (c & 0x10):
                x |= -1 << (5 * k)
        if len(cnts) > 2:
            x += cnts[-2]
        cnts.append(x)
    return cnts


def rle_encode(mask: np.ndarray) -> RleMask:
    """Encode a bool (H, W) mask into compressed column-major RLE."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise MaskShapeError(f"expected 2D mask, got shape {mask.shape}")
    h, w = mask.shape
    flat = mask.ravel(order="F")
    if flat.size == 0:
        return RleMask(size=(h, w), counts=_pack_counts([0]))
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs = [0] + runs
    return RleMask(size=(h, w), counts=_pack_counts(runs))


def rle_decode(rle: RleMask) -> np.ndarray:
    """Decode compressed RLE back into a bool (H, W) mask."""
    h, w = rle.size
    cnts = _unpack_counts(rle.counts)
    if any(c < 0 for c in cnts):
        raise MaskCodecError(f"negative run length in RLE for size {rle.size}")
    total = sum(cnts)
    if total != h * w:
        raise MaskCodecError(
            f"RLE runs sum to {total}, expected {h}x{w}={h * w}"
        )
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    val = False
    for c in cnts:
        if val:
            flat[pos : pos + c] = True
        pos += c
        val = not val
    return flat.reshape((h, w), order="F")


def polygons_to_mask(polys: list, height: int, width: int) -> np.ndarray:
    """Rasterize a union of polygons onto an (H, W) bool grid.

    A pixel is foreground iff its center (col+0.5, row+0.5) lies inside the
    polygon under the even-odd rule. Each polygon is a flat [x0, y0, x1, y1,
    ...] coordinate list; vertices are clipped to the image extent first.
    Multiple polygons are unioned.
    """
    mask = np.zeros((height, width), dtype=bool)
    for poly in polys:
        pts = np.asarray(poly, dtype=float).reshape(-1, 2)
        if pts.shape[0] < 3:
            raise ValueError(
                f"polygon needs at least 3 vertices, got {pts.shape[0]}"
            )
        xs = np.clip(pts[:, 0], 0.0, float(width))
        ys = np.clip(pts[:, 1], 0.0, float(height))
        _scanline_fill(mask, xs, ys)
    return mask


def _scanline_fill(mask: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> None:
    """Even-odd scanline fill of one polygon, ORed into `mask` in place."""
    height, width = mask.shape
    n = len(xs)
    x2 = np.roll(xs, -1)
    y2 = np.roll(ys, -1)
    ymin = max(0, int(np.floor(ys.min())))
    ymax = min(height - 1, int(np.ceil(ys.max())))
    for row in range(ymin, ymax + 1):
        yc = row + 0.5
        # half-open rule: an edge contributes iff yc is in [min(y), max(y))
        lo = np.minimum(ys, y2)
        hi = np.maximum(ys, y2)
        hit = (lo <= yc) & (yc < hi)
        if not hit.any():
            continue
        x1h, y1h = xs[hit], ys[hit]
        x2h, y2h = x2[hit], y2[hit]
        xi = np.sort(x1h + (yc - y1h) * (x2h - x1h) / (y2h - y1h))
        for k in range(0, len(xi) - 1, 2):
            c0 = int(np.ceil(xi[k] - 0.5))
            c1 = int(np.ceil(xi[k + 1] - 0.5)) - 1
            if c1 >= 0 and c0 <= width - 1:
                mask[row, max(0, c0) : min(width - 1, c1) + 1] = True


def mask_to_bbox(mask: np.ndarray) -> tuple[float, float, float, float]:
    """Tight (x, y, w, h) box of a bool mask; all zeros when the mask is empty."""
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return (0.0, 0.0, 0.0, 0.0)
    y0, y1 = int(rows[0]), int(rows[-1])
    x0, x1 = int(cols[0]), int(cols[-1])
    return (float(x0), float(y0), float(x1 - x0 + 1), float(y1 - y0 + 1))


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two equal-extent bool masks.

    The IoU of two empty masks is defined as 0 so that empty predictions
    never match anything.
    """
    if a.shape != b.shape:
        raise MaskShapeError(f"extent mismatch: {a.shape} vs {b.shape}")
    inter = np.count_nonzero(a & b)
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return inter / union


def mask_boundary(mask: np.ndarray, d: int) -> np.ndarray:
    """Inner boundary band: foreground pixels within Chebyshev distance d of
    the complement (pixels outside the image count as background)."""
    if d < 1:
        raise ValueError(f"band width must be >= 1, got {d}")
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.zeros_like(mask)
    struct = np.ones((2 * d + 1, 2 * d + 1), dtype=bool)
    interior = ndimage.binary_erosion(mask, structure=struct, border_value=0)
    return mask & ~interior


def boundary_iou(a: np.ndarray, b: np.ndarray, dilation_frac: float) -> float:
    """IoU of the two masks' boundary bands of width ceil(frac * diagonal)."""
    if a.shape != b.shape:
        raise MaskShapeError(f"extent mismatch: {a.shape} vs {b.shape}")
    h, w = a.shape
    d = max(1, int(np.ceil(dilation_frac * float(np.hypot(h, w)))))
    return mask_iou(mask_boundary(a, d), mask_boundary(b, d))


def resize_nearest(mask_or_image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize for masks (2D) or images (3D, channels last).

    Output pixel (r, c) samples the input at floor((r+0.5)*Hin/Hout),
    clipped to the input extent; preserves binarity of masks.
    """
    arr = np.asarray(mask_or_image)
    in_h, in_w = arr.shape[0], arr.shape[1]
    rows = np.minimum(
        ((np.arange(out_h) + 0.5) * in_h / out_h).astype(np.int64), in_h - 1
    )
    cols = np.minimum(
        ((np.arange(out_w) + 0.5) * in_w / out_w).astype(np.int64), in_w - 1
    )
    return arr[np.ix_(rows, cols)]
