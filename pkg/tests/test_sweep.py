import random

import pytest

from roilink.dataset import Dataset
from roilink.geometry import FrameDims, RectPx
from roilink.matching import AnnotationSet, MatchConfig, MatchMode
from roilink.selection import (
    Accounting,
    ProposalSet,
    ScoredBox,
    SelectionMode,
    SelectionPolicy,
)
from roilink.sweep import (
    StageTiming,
    SweepConfig,
    SweepError,
    bench,
    compose_throughput,
    default_r_grid,
    sweep,
)
from roilink.dataset import ImageRecord

FRAME = FrameDims(100, 100)
CONF_POLICY = SelectionPolicy(SelectionMode.CONFIDENCE_PREFIX, Accounting.UNION_PIXELS)


def make_dataset(per_image):
    """per_image: list of (gt_rects, scored_boxes) tuples."""
    images = tuple(
        ImageRecord(i, f"{i}.png", FRAME) for i in range(len(per_image))
    )
    annotations = {
        i: AnnotationSet(FRAME, tuple(gts)) for i, (gts, _) in enumerate(per_image)
    }
    detections = {
        i: ProposalSet(FRAME, tuple(dets)) for i, (_, dets) in enumerate(per_image)
    }
    return Dataset(images, annotations, detections)


def rand_image(rng, scored=True):
    gts, dets = [], []
    for _ in range(rng.randint(1, 5)):
        w, h = rng.randint(1, 30), rng.randint(1, 30)
        gts.append(RectPx(rng.randint(0, 100 - w), rng.randint(0, 100 - h), w, h))
    for _ in range(rng.randint(0, 5)):
        w, h = rng.randint(1, 40), rng.randint(1, 40)
        rect = RectPx(rng.randint(0, 100 - w), rng.randint(0, 100 - h), w, h)
        dets.append(ScoredBox(rect, round(rng.random(), 3) if scored else None))
    return gts, dets


class TestGrid:
    def test_default_grid_shape(self):
        grid = default_r_grid()
        assert len(grid) == 51
        assert grid[0] == 0.0
        assert grid[1] == pytest.approx(1e-3)
        assert grid[-1] == 1.0
        assert list(grid) == sorted(grid)

    def test_config_validation(self):
        with pytest.raises(SweepError):
            SweepConfig(r_grid=(0.5, 0.1))
        with pytest.raises(SweepError):
            SweepConfig(r_grid=(0.0, 1.5))
        with pytest.raises(SweepError):
            SweepConfig(aggregation="median")


class TestSweep:
    def test_identity_predictions_at_full_budget(self):
        gts = [RectPx(0, 0, 10, 10), RectPx(40, 40, 20, 20)]
        ds = make_dataset([(gts, [ScoredBox(g, 0.9) for g in gts])])
        points = sweep(ds, SweepConfig(r_grid=(1.0,), policy=CONF_POLICY))
        assert points[0].precision == 1 and points[0].recall == 1 and points[0].f1 == 1

    def test_zero_budget_zero_recall(self):
        gts = [RectPx(0, 0, 10, 10)]
        ds = make_dataset([(gts, [ScoredBox(RectPx(0, 0, 10, 10), 0.9)])])
        points = sweep(ds, SweepConfig(r_grid=(0.0,), policy=CONF_POLICY))
        assert points[0].recall == 0

    def test_full_frame_prediction_limit_case(self):
        gts = [RectPx(0, 0, 10, 10), RectPx(50, 0, 10, 10), RectPx(0, 50, 10, 10)]
        full = ScoredBox(RectPx(0, 0, 100, 100), 1.0)
        ds = make_dataset([(gts, [full])])
        points = sweep(ds, SweepConfig(r_grid=(1.0,), policy=CONF_POLICY))
        assert points[0].recall == 1

    def test_missing_proposals_error_lists_ids(self):
        ds = make_dataset([(([RectPx(0, 0, 5, 5)]), [])])
        broken = Dataset(ds.images, ds.annotations, {})
        with pytest.raises(SweepError, match=r"\[0\]"):
            sweep(broken, SweepConfig())
        with pytest.raises(SweepError, match="no detections"):
            sweep(Dataset(ds.images, ds.annotations, None), SweepConfig())

    def test_row_per_grid_value_sorted(self):
        rng = random.Random(3)
        ds = make_dataset([rand_image(rng) for _ in range(3)])
        cfg = SweepConfig(policy=CONF_POLICY)
        points = sweep(ds, cfg)
        assert len(points) == len(cfg.r_grid)
        assert [p.r for p in points] == list(cfg.r_grid)

    def test_recall_monotone_under_confidence_prefix(self):
        rng = random.Random(7)
        for _ in range(10):
            ds = make_dataset([rand_image(rng) for _ in range(rng.randint(1, 3))])
            points = sweep(ds, SweepConfig(policy=CONF_POLICY))
            recalls = [p.recall for p in points]
            assert all(a <= b for a, b in zip(recalls, recalls[1:]))

    def test_recall_at_full_budget_equals_untruncated(self):
        rng = random.Random(11)
        ds = make_dataset([rand_image(rng) for _ in range(3)])
        points = sweep(ds, SweepConfig(r_grid=(1.0,), policy=CONF_POLICY))
        # untruncated: every proposal matched directly
        from roilink.matching import match, metrics_from_counts

        tp = n_gt = 0
        for i in sorted(ds.annotations):
            gts = list(ds.annotations[i].boxes)
            preds = [b.rect for b in ds.detections[i].boxes]
            tp += len(match(preds, gts, MatchConfig()).matched_gt)
            n_gt += len(gts)
        assert points[0].recall == metrics_from_counts(tp, 0, 0, n_gt).recall

    def test_macro_vs_micro_differ_on_skewed_images(self):
        # image A: 1 gt, matched; image B: 9 gts, none matched
        a = ([RectPx(0, 0, 10, 10)], [ScoredBox(RectPx(0, 0, 10, 10), 0.9)])
        b = (
            [RectPx(i * 10, 50, 8, 8) for i in range(9)],
            [ScoredBox(RectPx(90, 90, 2, 2), 0.9)],
        )
        ds = make_dataset([a, b])
        micro = sweep(ds, SweepConfig(r_grid=(1.0,), policy=CONF_POLICY, aggregation="micro"))
        macro = sweep(ds, SweepConfig(r_grid=(1.0,), policy=CONF_POLICY, aggregation="macro"))
        assert micro[0].recall == pytest.approx(0.1)
        assert macro[0].recall == pytest.approx(0.5)

    def test_one_to_one_iou_mode(self):
        gts = [RectPx(0, 0, 10, 10)]
        ds = make_dataset([(gts, [ScoredBox(RectPx(0, 0, 100, 100), 1.0)])])
        cfg = SweepConfig(
            r_grid=(1.0,),
            policy=CONF_POLICY,
            match=MatchConfig(mode=MatchMode.ONE_TO_ONE_IOU),
        )
        # a huge box fails the IoU threshold even though it covers the gt
        assert sweep(ds, cfg)[0].recall == 0


class TestThroughput:
    def test_serial_composition_matches_report(self):
        fps = compose_throughput([StageTiming("heatmap", 51.0), StageTiming("boxes", 30.1)], "serial")
        assert fps == pytest.approx(18.93, abs=0.01)
        assert round(fps, 1) == 18.9

    def test_parallel_is_slowest_stage(self):
        fps = compose_throughput([StageTiming("heatmap", 51.0), StageTiming("boxes", 30.1)], "parallel")
        assert fps == 30.1

    def test_single_stage_identity(self):
        for x in (1.0, 45.5, 1000.0):
            assert compose_throughput([StageTiming("s", x)], "serial") == pytest.approx(x)

    def test_serial_never_exceeds_slowest(self):
        rng = random.Random(1)
        for _ in range(100):
            stages = [StageTiming(f"s{i}", rng.uniform(0.1, 100)) for i in range(rng.randint(1, 5))]
            serial = compose_throughput(stages, "serial")
            assert serial <= min(s.fps for s in stages) + 1e-9

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            compose_throughput([], "serial")

    def test_bad_fps_rejected(self):
        with pytest.raises(ValueError):
            StageTiming("s", 0.0)


class TestBench:
    def test_stages_produce_positive_fps(self):
        timings = bench(["binarize", "components"], FrameDims(160, 120), n_frames=5)
        assert [t.name for t in timings] == ["binarize", "components"]
        assert all(t.fps > 0 for t in timings)
        serial = compose_throughput(timings, "serial")
        assert serial <= min(t.fps for t in timings) + 1e-9

    def test_two_identical_stages_halve_serial_fps(self):
        timings = bench(["binarize", "binarize"], FrameDims(320, 240), n_frames=30)
        serial = compose_throughput(timings, "serial")
        mean = (timings[0].fps + timings[1].fps) / 2
        assert serial == pytest.approx(mean / 2, rel=0.05)

    def test_zero_frames_rejected(self):
        with pytest.raises(ValueError):
            bench(["binarize"], FrameDims(32, 32), n_frames=0)

    def test_unknown_stage_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            bench(["warp"], FrameDims(32, 32), n_frames=1)
