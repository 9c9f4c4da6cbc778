import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from cellsnake.errors import DegenerateContourError, DegenerateHistogramError
from cellsnake.image import GrayImage
from cellsnake.segment import (Segment, SegmenterSettings, binarize, boundary_pixels, connected_components,
                               morph_open_close, otsu_threshold, partition_ok, segment_image,
                               segmentation_from_labels, trace_boundary)
from cellsnake.snake import contour_mask
from cellsnake.synth import render_frame

from conftest import disk_scene

masks = arrays(bool, st.tuples(st.integers(1, 14), st.integers(1, 14)))


def otsu_oracle(img):
    """Exhaustive between-class variance over the 255 split points; the
    threshold is the middle of the first run of maximal k."""
    bins = np.rint(img.pixels.ravel() * 255).astype(int)
    var = np.full(255, -1.0)
    for k in range(255):
        lo, hi = bins[bins <= k], bins[bins > k]
        if lo.size and hi.size:
            var[k] = lo.size * hi.size / bins.size ** 2 * (lo.mean() - hi.mean()) ** 2
    top = var.max()
    k1 = int(np.flatnonzero(var >= top * (1 - 1e-12))[0])
    k2 = k1
    while k2 + 1 < 255 and var[k2 + 1] >= top * (1 - 1e-12):
        k2 += 1
    return ((k1 + k2) / 2 + 0.5) / 255


def test_otsu_two_level():
    a = np.full(100, 0.2)
    a[60:] = 0.8
    img = GrayImage(a.reshape(10, 10))
    t = otsu_threshold(img)
    assert 0.2 < t < 0.8
    assert t == pytest.approx(otsu_oracle(img))
    assert 1 - otsu_threshold(GrayImage(1 - img.pixels)) == pytest.approx(t)


def test_otsu_constant_raises():
    with pytest.raises(DegenerateHistogramError):
        otsu_threshold(GrayImage(np.full((4, 4), 0.3)))


def test_otsu_matches_oracle_on_noisy_images(rng):
    for _ in range(5):
        a = np.clip(np.concatenate([rng.normal(0.3, 0.05, 300), rng.normal(0.7, 0.08, 200)]), 0, 1)
        img = GrayImage(a.reshape(20, 25))
        assert otsu_threshold(img) == pytest.approx(otsu_oracle(img), abs=1e-12)


def test_otsu_inversion_within_one_bin(rng):
    for _ in range(10):
        a = np.clip(np.concatenate([rng.normal(0.25, 0.06, 500), rng.normal(0.65, 0.06, 400)]), 0, 1)
        a = np.rint(a * 255) / 255
        t = otsu_threshold(GrayImage(a.reshape(30, 30)))
        t_inv = otsu_threshold(GrayImage(1 - a.reshape(30, 30)))
        assert abs((1 - t_inv) - t) <= 1 / 255 + 1e-12


def test_binarize_examples():
    img = GrayImage(np.array([[0.1, 0.5], [0.9, 0.3]]))
    assert binarize(img, 0.0, "bright").all()
    assert not binarize(img, 0.95, "bright").any()
    b = binarize(img, 0.4, "bright")
    assert np.array_equal(binarize(img, 0.4, "dark"), ~b)
    with pytest.raises(ValueError):
        binarize(img, 0.4, "grey")


def test_morphology_examples():
    m = np.zeros((9, 9), bool)
    m[4, 4] = True
    assert not morph_open_close(m, 1).any()
    assert np.array_equal(morph_open_close(m, 0), m)
    assert morph_open_close(np.ones((6, 6), bool), 2).all()


def test_components_two_blocks():
    m = np.zeros((5, 9), bool)
    m[1:4, 1:4] = True
    m[1:4, 5:8] = True
    seg = connected_components(m)
    assert [s.area for s in seg.segments] == [9, 9]
    assert seg.labels[2, 2] == 1 and seg.labels[2, 6] == 2


def test_components_empty_and_diagonal():
    seg = connected_components(np.zeros((4, 4), bool))
    assert seg.segments == [] and not seg.labels.any()
    seg = connected_components(np.eye(4, dtype=bool))
    assert len(seg.segments) == 1 and seg.segments[0].area == 4


def test_components_min_area_renumbers():
    m = np.zeros((6, 10), bool)
    m[0, 0] = True
    m[2:5, 2:5] = True
    m[0, 8] = True
    m[3:6, 7:10] = True
    seg = connected_components(m, min_area=4)
    assert seg.ids == [1, 2]
    assert [s.bbox for s in seg.segments] == [(2, 2, 4, 4), (7, 3, 9, 5)]
    assert partition_ok(seg)


def test_segment_properties():
    s = Segment(4, [(3, 1), (1, 1), (2, 2)])
    assert s.area == 3 and s.centroid == (2.0, 4 / 3)
    assert s.bbox == (1, 1, 3, 2)
    assert s.pixels.tolist() == [[1, 1], [3, 1], [2, 2]]
    with pytest.raises(ValueError):
        Segment(1, np.zeros((0, 2)))


def test_trace_examples():
    block = Segment(1, [(x, y) for y in range(3) for x in range(3)])
    bp = boundary_pixels(block)
    assert len(bp) == 8 and set(map(tuple, bp)) == {(x, y) for y in range(3) for x in range(3)} - {(1, 1)}
    steps = np.hypot(*np.diff(np.vstack([bp, bp[:1]]), axis=0).T)
    assert steps.sum() == pytest.approx(8.0)
    sq = trace_boundary(Segment(1, [(0, 0), (1, 0), (0, 1), (1, 1)]))
    assert sq.n == 4 and set(map(tuple, sq.points.astype(int))) == {(0, 0), (1, 0), (0, 1), (1, 1)}
    with pytest.raises(DegenerateContourError):
        trace_boundary(Segment(1, [(x, 0) for x in range(5)]))


def test_trace_is_counterclockwise_on_screen():
    block = Segment(1, [(x, y) for y in range(4) for x in range(5)])
    bp = boundary_pixels(block).astype(float)
    x, y = bp.T
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert area < 0  # y axis points down


def test_trace_fidelity_on_disk():
    img, lab = render_frame(disk_scene(radius=15), 0)
    seg = segmentation_from_labels(lab)
    s = seg.segments[0]
    c = trace_boundary(s, 2.0)
    mask = contour_mask(c, *lab.shape)
    covered = mask[s.pixels[:, 1], s.pixels[:, 0]].mean()
    assert covered >= 0.95 and mask.sum() <= 1.10 * s.area


def test_segment_image_disk_partition():
    img, lab = render_frame(disk_scene(contrast=0.6), 0)
    seg = segment_image(img, SegmenterSettings(polarity="bright"))
    assert len(seg.segments) == 1 and partition_ok(seg)
    truth = lab > 0
    got = seg.labels > 0
    assert (got & truth).sum() / (got | truth).sum() > 0.95


def test_settings_validation():
    with pytest.raises(ValueError):
        SegmenterSettings(polarity="x")
    with pytest.raises(ValueError):
        SegmenterSettings(min_area=0)


def test_partition_check_detects_corruption():
    seg = connected_components(np.ones((3, 3), bool))
    seg.labels[0, 0] = 0
    assert not partition_ok(seg)


@settings(max_examples=80, deadline=None)
@given(masks, st.integers(1, 4))
def test_components_match_scipy_and_partition(m, min_area):
    seg = connected_components(m, min_area=min_area)
    assert partition_ok(seg)
    ref, n = ndimage.label(m, structure=np.ones((3, 3)))
    sizes = np.bincount(ref.ravel())[1:]
    assert len(seg.segments) == int(np.sum(sizes >= min_area))
    assert sorted(s.area for s in seg.segments) == sorted(sizes[sizes >= min_area].tolist())
    assert sum(s.area for s in seg.segments) + int((seg.labels == 0).sum()) == m.size


@settings(max_examples=40, deadline=None)
@given(masks, st.integers(0, 5), st.integers(0, 5))
def test_components_translation_invariant(m, dx, dy):
    a = connected_components(m)
    big = np.zeros((m.shape[0] + dy, m.shape[1] + dx), bool)
    big[dy:, dx:] = m
    b = connected_components(big)
    assert len(a.segments) == len(b.segments)
    for s, t in zip(a.segments, b.segments):
        assert np.array_equal(s.pixels + [dx, dy], t.pixels)


@settings(max_examples=30, deadline=None)
@given(masks)
def test_components_deterministic(m):
    a, b = connected_components(m), connected_components(m)
    assert np.array_equal(a.labels, b.labels)
