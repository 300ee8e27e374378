import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roilink.geometry import (
    FrameDims,
    RectPx,
    concentric_fit,
    intersect,
    iogt,
    iou,
    union_area,
)

from oracles import raster_iogt, raster_iou, raster_union_area, rasterize

rect_coords = st.integers(min_value=0, max_value=48)
rect_dims = st.integers(min_value=0, max_value=16)
rects = st.builds(RectPx, rect_coords, rect_coords, rect_dims, rect_dims)
nonempty_rects = st.builds(
    RectPx, rect_coords, rect_coords, st.integers(1, 16), st.integers(1, 16)
)


class TestRectPx:
    def test_negative_dims_rejected(self):
        with pytest.raises(ValueError):
            RectPx(0, 0, -1, 5)

    def test_empty_detection(self):
        assert RectPx(3, 4, 0, 5).is_empty
        assert not RectPx(3, 4, 1, 1).is_empty

    def test_frame_dims_validation(self):
        with pytest.raises(ValueError):
            FrameDims(0, 10)

    def test_clamped(self):
        dims = FrameDims(10, 10)
        assert RectPx(-5, -5, 8, 8).clamped(dims) == RectPx(0, 0, 3, 3)
        assert RectPx(20, 20, 5, 5).clamped(dims) == RectPx.empty()
        assert RectPx(2, 2, 4, 4).clamped(dims) == RectPx(2, 2, 4, 4)


class TestIntersect:
    def test_identity(self):
        a = RectPx(0, 0, 10, 10)
        assert intersect(a, a) == a

    def test_disjoint(self):
        assert intersect(RectPx(0, 0, 10, 10), RectPx(20, 20, 5, 5)).is_empty

    def test_partial_overlap(self):
        # matches the 32x32 rasterization oracle
        a, b = RectPx(0, 0, 10, 10), RectPx(5, 5, 10, 10)
        got = intersect(a, b)
        assert got == RectPx(5, 5, 5, 5)
        mask = rasterize([a], 32, 32) & rasterize([b], 32, 32)
        assert int(mask.sum()) == got.area

    @given(rects, rects)
    def test_commutes_and_contained(self, a, b):
        got = intersect(a, b)
        assert got == intersect(b, a)
        assert a.contains(got) and b.contains(got)


class TestIou:
    def test_identity_is_one(self):
        a = RectPx(3, 7, 9, 2)
        assert iou(a, a) == 1.0

    def test_disjoint_is_zero(self):
        assert iou(RectPx(0, 0, 10, 10), RectPx(20, 20, 5, 5)) == 0.0

    def test_half_overlap(self):
        # 50 px intersection / 150 px union, pinned by the rasterization oracle
        a, b = RectPx(0, 0, 10, 10), RectPx(5, 0, 10, 10)
        assert iou(a, b) == raster_iou(a, b, 32, 32) == 50 / 150

    def test_both_empty_is_zero(self):
        assert iou(RectPx.empty(), RectPx.empty()) == 0.0

    @given(rects, rects)
    def test_symmetric_and_bounded(self, a, b):
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0

    @given(rects, rects)
    def test_matches_raster_oracle(self, a, b):
        assert iou(a, b) == raster_iou(a, b, 64, 64)


class TestIogt:
    def test_full_frame_prediction(self):
        frame = RectPx(0, 0, 3840, 2160)
        assert iogt(frame, RectPx(100, 200, 20, 20)) == 1.0

    def test_identity(self):
        g = RectPx(5, 5, 10, 10)
        assert iogt(g, g) == 1.0

    def test_quarter_coverage(self):
        p, g = RectPx(0, 0, 10, 10), RectPx(5, 5, 10, 10)
        assert iogt(p, g) == raster_iogt(p, g, 32, 32) == 0.25

    def test_degenerate_gt_raises(self):
        with pytest.raises(ValueError, match="degenerate ground truth"):
            iogt(RectPx(0, 0, 10, 10), RectPx(0, 0, 0, 5))

    @given(nonempty_rects, nonempty_rects)
    def test_dominates_iou(self, p, g):
        assert iogt(p, g) >= iou(p, g)

    @given(nonempty_rects, nonempty_rects)
    def test_one_iff_contained(self, p, g):
        assert (iogt(p, g) == 1.0) == p.contains(g)


class TestUnionArea:
    def test_empty_list(self):
        assert union_area([]) == 0

    def test_disjoint_sum(self):
        assert union_area([RectPx(0, 0, 10, 10), RectPx(20, 20, 10, 10)]) == 200

    def test_overlapping(self):
        boxes = [RectPx(0, 0, 10, 10), RectPx(5, 5, 10, 10)]
        assert union_area(boxes) == raster_union_area(boxes, 32, 32) == 175

    @given(st.lists(rects, max_size=8))
    def test_matches_raster_oracle(self, boxes):
        assert union_area(boxes) == raster_union_area(boxes, 64, 64)

    @given(st.lists(nonempty_rects, max_size=6))
    def test_bounded_by_sum_with_equality_iff_disjoint(self, boxes):
        total = sum(b.area for b in boxes)
        got = union_area(boxes)
        assert got <= total
        pairwise_disjoint = all(
            intersect(a, b).is_empty for i, a in enumerate(boxes) for b in boxes[i + 1 :]
        )
        assert (got == total) == pairwise_disjoint


class TestConcentricFit:
    def test_budget_covers_source(self):
        src = RectPx(0, 0, 100, 100)
        assert concentric_fit(src, 10000) is src

    def test_zero_budget(self):
        assert concentric_fit(RectPx(0, 0, 100, 100), 0).is_empty

    def test_quarter_budget(self):
        # exhaustive search over same-aspect integer dims agrees: 50x50 at (25,25)
        assert concentric_fit(RectPx(0, 0, 100, 100), 2500) == RectPx(25, 25, 50, 50)

    def test_negative_budget_rejected(self):
        with pytest.raises(ValueError):
            concentric_fit(RectPx(0, 0, 10, 10), -1)

    @settings(max_examples=300)
    @given(nonempty_rects, st.integers(0, 300))
    def test_fit_properties(self, src, max_area):
        fit = concentric_fit(src, max_area)
        assert src.contains(fit)
        assert fit.area <= max_area or max_area >= src.area
        if max_area >= src.area:
            assert fit == src
        elif not fit.is_empty:
            # exceeding the budget when both dims step up => maximality
            assert (fit.w + 1) * (fit.h + 1) > max_area
            # center drift at most one pixel per axis
            assert abs((2 * fit.x + fit.w) - (2 * src.x + src.w)) <= 2
            assert abs((2 * fit.y + fit.h) - (2 * src.y + src.h)) <= 2

    @given(nonempty_rects, st.integers(0, 400), st.integers(0, 400))
    def test_monotone_budgets_nest(self, src, a, b):
        lo, hi = min(a, b), max(a, b)
        assert concentric_fit(src, hi).contains(concentric_fit(src, lo))

    def test_dims_are_floored_real_scale(self):
        # w' = floor(w * sqrt(budget/area)) <=> w'^2 * h <= budget * w < (w'+1)^2 * h,
        # verified in exact integer arithmetic
        for src in [RectPx(0, 0, 10, 3), RectPx(2, 5, 37, 11), RectPx(0, 0, 99, 100)]:
            for budget in range(0, src.area):
                fit = concentric_fit(src, budget)
                if fit.is_empty:
                    assert budget * src.w < src.h or budget * src.h < src.w
                    continue
                assert fit.w**2 * src.h <= budget * src.w < (fit.w + 1) ** 2 * src.h
                assert fit.h**2 * src.w <= budget * src.h < (fit.h + 1) ** 2 * src.w
