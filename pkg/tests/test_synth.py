import json

import numpy as np
import pytest

from cellsnake.errors import SceneSpecError
from cellsnake.segment import partition_ok, segmentation_from_labels
from cellsnake.synth import CellSpec, SceneSpec, load_scene, mask_jaccard, render_frame, render_sequence

from conftest import disk_scene


def test_static_disk_interior_exact():
    spec = disk_scene(contrast=0.5, background=0.2, radius=10)
    img, lab = render_frame(spec, 0)
    yy, xx = np.mgrid[0:64, 0:64]
    d = np.hypot(xx - 32, yy - 32)
    assert np.all(img.pixels[d <= 9] == 0.7)
    assert np.all(img.pixels[d >= 11] == 0.2)
    assert np.array_equal(lab > 0, d <= 10)


def test_fixed_seed_is_reproducible():
    spec = disk_scene(noise=0.05, seed=11, frames=3)
    f1, _ = render_sequence(spec)
    f2, _ = render_sequence(spec)
    assert all(np.array_equal(a.pixels, b.pixels) for a, b in zip(f1, f2))
    f3, _ = render_sequence(disk_scene(noise=0.05, seed=12, frames=3))
    assert not np.array_equal(f1[0].pixels, f3[0].pixels)


def test_zero_noise_ignores_seed():
    a, _ = render_sequence(disk_scene(seed=1))
    b, _ = render_sequence(disk_scene(seed=2))
    assert np.array_equal(a[0].pixels, b[0].pixels)


def test_split_ground_truth():
    spec = SceneSpec(64, 64, 0.2, 0.0, [CellSpec([(32, 32)] * 4, 12, 0.5, split_frame=2,
                                                 split_offsets=((-8, 0), (8, 0)))])
    frames, gt = render_sequence(spec)
    assert [sorted(p) for p in gt.pixels] == [[1], [1], [2, 3], [2, 3]]
    assert gt.centroids[2][2][0] < 32 < gt.centroids[2][3][0]


def test_intensities_in_range_and_partition():
    spec = SceneSpec(48, 48, 0.9, 0.3, [CellSpec([(20, 20)], 8, 0.1), CellSpec([(28, 24)], 8, -0.6)], seed=3)
    frames, gt = render_sequence(spec)
    assert frames[0].pixels.min() >= 0 and frames[0].pixels.max() <= 1
    assert partition_ok(segmentation_from_labels(gt.labels[0]))


def test_validation_messages():
    with pytest.raises(SceneSpecError, match="cell 1 frame 0"):
        SceneSpec(20, 20, 0.2, 0, [CellSpec([(2, 2)], 5, 0.3)]).validate()
    with pytest.raises(SceneSpecError, match=r"cells\[0\].contrast"):
        SceneSpec(20, 20, 0.8, 0, [CellSpec([(10, 10)], 3, 0.5)]).validate()
    with pytest.raises(SceneSpecError, match="noise_sigma"):
        SceneSpec(20, 20, 0.2, -1, []).validate()
    with pytest.raises(SceneSpecError, match="trajectory"):
        SceneSpec(20, 20, 0.2, 0, [CellSpec([(10, 10)], 3, 0.3), CellSpec([(10, 10)] * 2, 3, 0.3)]).validate()


def test_scene_json_roundtrip(tmp_path):
    d = {"width": 40, "height": 30, "background": 0.1, "noise_sigma": 0.02, "seed": 5, "frames": 3,
         "cells": [{"center": [10, 15], "velocity": [2, 0], "radius": 4, "contrast": 0.4}]}
    p = tmp_path / "s.json"
    p.write_text(json.dumps(d))
    spec = load_scene(p)
    assert spec.cells[0].trajectory == [(10, 15), (12, 15), (14, 15)]
    again = SceneSpec.from_dict(spec.to_dict())
    assert again.to_dict() == spec.to_dict()
    with pytest.raises(SceneSpecError, match="unknown"):
        SceneSpec.from_dict({**d, "colour": 1})
    with pytest.raises(SceneSpecError, match="width"):
        SceneSpec.from_dict({k: v for k, v in d.items() if k != "width"})


def test_mask_jaccard_examples():
    t = np.zeros((5, 5), bool)
    t[1:3, 1:3] = True
    assert mask_jaccard(t, t) == 1.0
    assert mask_jaccard(np.zeros_like(t), t) == 0.0
    assert mask_jaccard([(1, 1), (2, 1)], [(1, 1), (2, 1), (1, 2), (2, 2)]) == 0.5
    with pytest.raises(ValueError):
        mask_jaccard(t, np.zeros_like(t))


def test_mask_jaccard_dilated_disk():
    yy, xx = np.mgrid[0:64, 0:64]
    d = np.hypot(xx - 32, yy - 32)
    a20, a21 = d <= 20, d <= 21
    # oracle: pixel counts of the two rasterized disks
    assert mask_jaccard(a21, a20) == pytest.approx(a20.sum() / a21.sum(), abs=1e-15)
    assert mask_jaccard(a21, a20) == pytest.approx(0.906, abs=0.01)
