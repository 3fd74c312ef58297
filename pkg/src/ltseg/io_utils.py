"""File I/O helpers: atomic writes, flat checkpoints, results JSON, AP-curve CSV."""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile

import numpy as np

from .ema import ApCurve
from .evaluation import Detection

CHECKPOINT_MAGIC = b"FLTW0001"


class CheckpointFormatError(ValueError):
    pass


def atomic_write_bytes(path: str, payload: bytes) -> None:
    """Write via a temp file + rename so interrupted runs never leave partials."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-ltseg-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_checkpoint(path: str, params) -> None:
    """Flat checkpoint: 8-byte magic, little-endian u64 count, float32 data."""
    arr = np.asarray(params, dtype="<f4").ravel()
    payload = CHECKPOINT_MAGIC + struct.pack("<Q", arr.size) + arr.tobytes()
    atomic_write_bytes(path, payload)


def read_checkpoint(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {blob[:8]!r}")
    (count,) = struct.unpack("<Q", blob[8:16])
    data = np.frombuffer(blob[16:], dtype="<f4")
    if data.size != count:
        raise CheckpointFormatError(
            f"{path}: header says {count} params, payload has {data.size}"
        )
    return data.astype(np.float64)


def write_results_json(path: str, dets: list[Detection]) -> None:
    atomic_write_text(path, json.dumps([d.to_dict() for d in dets]))


def read_results_json(path: str) -> list[Detection]:
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    return [Detection.from_dict(d) for d in raw]


def read_ap_curve_csv(path: str) -> ApCurve:
    """CSV columns: epoch, AP, APr, APc, APf (header row required)."""
    epochs, ap, ap_r, ap_c, ap_f = [], [], [], [], []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            epochs.append(int(row["epoch"]))
            ap.append(float(row["AP"]))
            ap_r.append(float(row["APr"]))
            ap_c.append(float(row["APc"]))
            ap_f.append(float(row["APf"]))
    return ApCurve(
        epochs=tuple(epochs),
        ap=tuple(ap),
        ap_r=tuple(ap_r),
        ap_c=tuple(ap_c),
        ap_f=tuple(ap_f),
    )


def format_repeat_factor_csv(per_category: dict[int, float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["category_id", "repeat_factor"])
    for cat_id in sorted(per_category):
        writer.writerow([cat_id, f"{per_category[cat_id]:.6f}"])
    return buf.getvalue()
