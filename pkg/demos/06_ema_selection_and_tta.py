"""Average checkpoints, pick an early-stop epoch, and fuse multi-scale views.

Three loosely related end-of-training steps that share one theme: squeeze
more accuracy out of a model that is already trained.
"""

import math

import numpy as np

from ltseg.ema import ApCurve, EmaState, ema_update, select_epoch
from ltseg.evaluation import Detection
from ltseg.masks import rle_encode
from ltseg.tta import FuseConfig, TtaView, default_views, fuse, remap, unmap


def main():
    # EMA: noisy weights settle toward their running mean
    rng = np.random.default_rng(0)
    state = EmaState(decay=0.98)
    target = np.array([1.0, -2.0, 0.5])
    for _ in range(400):
        state = ema_update(state, target + rng.normal(scale=0.5, size=3))
    print(f"EMA shadow after 400 noisy steps: {np.array2string(state.shadow, precision=3)}"
          f"  (true mean {target.tolist()})")

    # selection: overall AP favors late epochs, the rare bucket peaks early
    epochs = tuple(range(1, 21))
    curve = ApCurve(
        epochs=epochs,
        ap=tuple(30.0 * (1 - math.exp(-e / 6)) for e in epochs),
        ap_r=tuple(18.0 * math.exp(-((e - 6) ** 2) / 20.0) for e in epochs),
        ap_c=tuple(24.0 + 0.2 * e for e in epochs),
        ap_f=tuple(30.0 + 0.2 * e for e in epochs),
    )
    print(f"\nmax_ap picks epoch {select_epoch(curve, 'max_ap')}, "
          f"max_min_bucket picks epoch {select_epoch(curve, 'max_min_bucket')} "
          "(where the rare bucket peaks)")

    # TTA: the same object seen at two scales collapses to one detection
    base = np.zeros((50, 50), dtype=bool)
    base[10:30, 15:40] = True
    orig = (50, 50)
    views = [TtaView(scale=(50, 50)), TtaView(scale=(100, 100), hflip=True)]
    det_sets = []
    for i, v in enumerate(views):
        d = Detection(1, 1, 0.9 - 0.05 * i, rle_encode(base))
        mapped = remap([d], v, orig)          # what the model would see
        det_sets.append(unmap(mapped, v, orig))  # back to original frame
    fused = fuse(det_sets, FuseConfig(nms_iou=0.6))
    print(f"\n{len(views)} views produced {sum(len(s) for s in det_sets)} detections; "
          f"fusion keeps {len(fused)} at score {fused[0].score}")
    print(f"the stock view set has {len(default_views())} scale/flip combinations")


if __name__ == "__main__":
    main()
