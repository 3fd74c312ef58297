import numpy as np
import pytest

from conftest import make_dataset, rect_mask
from ltseg.compose import (
    MosaicParams,
    PasteParams,
    Sample,
    SampleAnnotation,
    SelectionError,
    copy_paste,
    maybe_mosaic,
    mosaic,
    select_paste_instances,
)


def solid_sample(h, w, color, annotations=()):
    img = np.full((h, w, 3), color, dtype=np.uint8)
    return Sample(image=img, annotations=list(annotations))


def instance(h, w, y0, x0, bh, bw, cat=1):
    return SampleAnnotation(category_id=cat, mask=rect_mask(h, w, y0, x0, bh, bw)).refreshed()


class TestSelectPasteInstances:
    def _ds(self):
        # category 1 rare, 2 common, 3 frequent
        anns = []
        for img in range(1, 4):
            anns.append((img, 1, rect_mask(8, 8, 0, 0, 2, 2)))
            anns.append((img, 2, rect_mask(8, 8, 2, 2, 2, 2)))
            anns.append((img, 3, rect_mask(8, 8, 4, 4, 2, 2)))
        return make_dataset([(8, 8)] * 3, [3, 50, 200], anns)

    def test_rare_only_weights(self):
        ds = self._ds()
        params = PasteParams(
            n_instances=20, bucket_weights={"rare": 1.0, "common": 0.0, "frequent": 0.0}
        )
        picked = select_paste_instances(ds, params, seed=0)
        cats = {ds.annotations[[a.id for a in ds.annotations].index(i)].category_id for i in picked}
        assert cats == {1}

    def test_zero_instances(self):
        ds = self._ds()
        assert select_paste_instances(ds, PasteParams(n_instances=0), seed=0) == []

    def test_empty_weighted_buckets_rejected(self):
        anns = [(1, 1, rect_mask(8, 8, 0, 0, 2, 2))]
        ds = make_dataset([(8, 8)], [200], anns)  # only a frequent category
        params = PasteParams(
            n_instances=2, bucket_weights={"rare": 1.0, "common": 0.0, "frequent": 0.0}
        )
        with pytest.raises(SelectionError):
            select_paste_instances(ds, params, seed=0)

    def test_uniform_weights_match_bucket_frequencies(self, zipf_fixture):
        ds, sidecar = zipf_fixture
        params = PasteParams(n_instances=100_000)
        picked = select_paste_instances(ds, params, seed=3)
        cat_by_ann = {a.id: a.category_id for a in ds.annotations}
        bucket_by_cat = {c.id: c.bucket for c in ds.categories}
        counts = {"rare": 0, "common": 0, "frequent": 0}
        for ann_id in picked:
            counts[bucket_by_cat[cat_by_ann[ann_id]]] += 1
        for b in counts:
            want = sidecar["instance_fractions"][b]
            assert counts[b] / 100_000 == pytest.approx(want, abs=0.02)

    def test_reproducible_per_seed(self):
        ds = self._ds()
        params = PasteParams(n_instances=10)
        assert select_paste_instances(ds, params, 5) == select_paste_instances(ds, params, 5)


class TestCopyPaste:
    def test_paste_onto_empty_target(self):
        target = solid_sample(32, 32, 10)
        src = solid_sample(32, 32, 200, [instance(32, 32, 4, 4, 8, 8, cat=7)])
        params = PasteParams(n_instances=1, scale_jitter=(1.0, 1.0), hflip_prob=0.0)
        out = copy_paste(target, [(src, 0)], params, seed=1)
        assert len(out.annotations) == 1
        a = out.annotations[0]
        assert a.category_id == 7
        assert a.area == 64
        assert (out.image[a.mask] == 200).all()
        assert (out.image[~a.mask] == 10).all()

    def test_full_occlusion_drops_target_annotation(self):
        target = solid_sample(10, 10, 0, [instance(10, 10, 0, 0, 10, 10, cat=1)])
        src = solid_sample(10, 10, 99, [instance(10, 10, 0, 0, 10, 10, cat=2)])
        params = PasteParams(
            n_instances=1, scale_jitter=(1.0, 1.0), hflip_prob=0.0, min_remaining_area_frac=0.1
        )
        out = copy_paste(target, [(src, 0)], params, seed=0)
        assert [a.category_id for a in out.annotations] == [2]

    def test_hflip_mirrors_mask(self):
        src_mask = np.zeros((16, 16), dtype=bool)
        src_mask[4:8, 2:5] = True
        src_mask[4, 2] = False  # asymmetric shape
        src = Sample(
            image=np.full((16, 16, 3), 50, np.uint8),
            annotations=[SampleAnnotation(category_id=1, mask=src_mask).refreshed()],
        )
        target = solid_sample(16, 16, 0)
        params = PasteParams(n_instances=1, scale_jitter=(1.0, 1.0), hflip_prob=1.0)
        out = copy_paste(target, [(src, 0)], params, seed=3)
        pasted = out.annotations[0]
        x, y, w, h = (int(v) for v in pasted.bbox)
        patch = pasted.mask[y : y + h, x : x + w]
        sx, sy, sw, sh = (int(v) for v in src.annotations[0].bbox)
        src_patch = src_mask[sy : sy + sh, sx : sx + sw]
        assert np.array_equal(patch, src_patch[:, ::-1])

    def test_count_identity_disjoint(self):
        target = solid_sample(64, 64, 0, [instance(64, 64, 0, 0, 6, 6)])
        srcs = [
            (solid_sample(64, 64, 100 + i, [instance(64, 64, 20, 20, 5, 5, cat=i + 2)]), 0)
            for i in range(3)
        ]
        params = PasteParams(n_instances=3, scale_jitter=(1.0, 1.0), hflip_prob=0.0)
        out = copy_paste(target, srcs, params, seed=9)
        survivors = sum(1 for a in out.annotations if a.category_id == 1)
        pasted = sum(1 for a in out.annotations if a.category_id != 1)
        assert len(out.annotations) == survivors + pasted
        assert pasted == 3

    def test_determinism(self):
        target = solid_sample(48, 48, 30, [instance(48, 48, 5, 5, 10, 10)])
        src = solid_sample(48, 48, 222, [instance(48, 48, 10, 10, 12, 9, cat=2)])
        params = PasteParams(n_instances=1)
        a = copy_paste(target, [(src, 0)], params, seed=77)
        b = copy_paste(target, [(src, 0)], params, seed=77)
        assert np.array_equal(a.image, b.image)
        assert len(a.annotations) == len(b.annotations)
        for x, y in zip(a.annotations, b.annotations):
            assert np.array_equal(x.mask, y.mask)

    def test_pixel_provenance(self):
        # unique source colors: every pasted mask pixel must carry its color
        target = solid_sample(64, 64, 1, [instance(64, 64, 0, 0, 20, 20)])
        srcs = []
        for i in range(4):
            color = 50 + 40 * i
            srcs.append(
                (solid_sample(64, 64, color, [instance(64, 64, 8, 8, 11, 13, cat=i + 2)]), 0)
            )
        params = PasteParams(n_instances=4, scale_jitter=(0.7, 1.4))
        out = copy_paste(target, srcs, params, seed=5)
        for a in out.annotations:
            if a.category_id == 1:
                expect = 1
            else:
                expect = 50 + 40 * (a.category_id - 2)
            frac = (out.image[a.mask] == expect).all(axis=-1).mean()
            assert frac >= 0.98


class TestMosaic:
    def params(self, **kw):
        base = dict(
            apply_prob=0.5,
            base_size=(40, 40),
            short_side_range=(60, 120),
            min_box_area=4.0,
        )
        base.update(kw)
        return MosaicParams(**base)

    def test_wrong_arity(self):
        with pytest.raises(ValueError):
            mosaic([solid_sample(8, 8, 0)] * 3, self.params(), seed=0)

    def test_solid_color_covers_canvas(self):
        samples = [solid_sample(40, 40, 77) for _ in range(4)]
        # short sides >= 1.5x canvas half guarantee full quadrant coverage
        out = mosaic(samples, self.params(short_side_range=(60, 120)), seed=2)
        assert out.image.shape == (80, 80, 3)
        assert (out.image == 77).all()
        assert out.annotations == []

    def test_area_matches_analytic_scaling(self):
        # geometry chosen so the first sample's instance is never clipped:
        # crop <= rw - cx <= 50 columns, instance starts at >= 38 * 1.5 = 57
        h = w = 100
        inst = instance(h, w, 38, 38, 60, 60)
        sample = Sample(np.zeros((h, w, 3), np.uint8), [inst])
        blanks = [solid_sample(h, w, 0) for _ in range(3)]
        params = self.params(base_size=(400, 400), short_side_range=(150, 250))
        for seed in range(20):
            # replay the generator to recover the resize factor
            rng = np.random.default_rng(seed)
            rng.integers(200, 601)  # cx
            rng.integers(200, 601)  # cy
            f = rng.uniform(150, 250) / 100
            out = mosaic([sample] + blanks, params, seed=seed)
            assert len(out.annotations) == 1
            assert out.annotations[0].area == pytest.approx(inst.area * f * f, rel=0.02)

    def test_straddling_instance_clipped_like_bruteforce(self):
        h = w = 100
        inst = instance(h, w, 0, 0, 100, 100)  # full-image instance
        sample = Sample(np.full((h, w, 3), 9, np.uint8), [inst])
        blanks = [solid_sample(h, w, 0) for _ in range(3)]
        params = self.params(base_size=(60, 60), short_side_range=(70, 90), min_box_area=1.0)
        for seed in range(5):
            # replay the generator: center point and quadrant-0 resize factor
            rng = np.random.default_rng(seed)
            cx = int(rng.integers(30, 91))
            cy = int(rng.integers(30, 91))
            rs = int(round(100 * rng.uniform(70, 90) / 100))
            out = mosaic([sample] + blanks, params, seed=seed)
            mine = out.annotations
            assert len(mine) == 1
            # brute force: the transformed full-image mask intersected with
            # the top-left quadrant is the visible rectangle
            expected = (cx - max(0, cx - rs)) * (cy - max(0, cy - rs))
            assert mine[0].area == expected
            # the mask must sit exactly on the pixels carrying source color
            painted = (out.image == 9).all(axis=-1)
            assert np.array_equal(mine[0].mask, painted)

    def test_min_box_area_drop(self):
        h = w = 100
        tiny = instance(h, w, 50, 50, 1, 1)
        sample = Sample(np.zeros((h, w, 3), np.uint8), [tiny])
        blanks = [solid_sample(h, w, 0) for _ in range(3)]
        params = self.params(base_size=(40, 40), short_side_range=(41, 50), min_box_area=9.0)
        out = mosaic([sample] + blanks, params, seed=0)
        assert out.annotations == []

    def test_determinism(self):
        samples = [solid_sample(40, 40, c, [instance(40, 40, 5, 5, 10, 10)]) for c in (10, 20, 30, 40)]
        a = mosaic(samples, self.params(), seed=6)
        b = mosaic(samples, self.params(), seed=6)
        assert np.array_equal(a.image, b.image)
        assert len(a.annotations) == len(b.annotations)

    def test_masks_within_bounds_and_boxes_positive(self):
        samples = [
            solid_sample(50, 70, 10 * i, [instance(50, 70, 5, 5, 20, 30)]) for i in range(1, 5)
        ]
        out = mosaic(samples, self.params(base_size=(60, 60), short_side_range=(65, 130)), seed=8)
        for a in out.annotations:
            assert a.mask.shape == out.image.shape[:2]
            _, _, bw, bh = a.bbox
            assert bw > 0 and bh > 0


class TestMaybeMosaic:
    def _stream(self):
        while True:
            yield solid_sample(16, 16, 5)

    def test_prob_zero_identity(self):
        s = self._stream()
        first = next(s)

        def stream():
            yield first
            yield from s

        out = maybe_mosaic(stream(), MosaicParams(apply_prob=0.0, base_size=(16, 16), short_side_range=(20, 40)), seed=0)
        assert out is first

    def test_prob_one_always_mosaic(self):
        params = MosaicParams(apply_prob=1.0, base_size=(16, 16), short_side_range=(20, 40))
        for seed in range(5):
            out = maybe_mosaic(self._stream(), params, seed=seed)
            assert out.image.shape == (32, 32, 3)

    def test_empirical_apply_rate(self):
        params = MosaicParams(apply_prob=0.5, base_size=(12, 12), short_side_range=(14, 26))
        stream = self._stream()
        hits = 0
        n = 10_000
        for seed in range(n):
            out = maybe_mosaic(stream, params, seed=seed)
            if out.image.shape == (24, 24, 3):
                hits += 1
        assert hits / n == pytest.approx(0.5, abs=0.02)
