import re

import numpy as np
import pytest

from cellsnake import _backend
from cellsnake.segment import SegmenterSettings
from cellsnake.snake import SnakeParams
from cellsnake.synth import CellSpec, SceneSpec

AC_TITLES = {
    1: "matching oracle equivalence",
    2: "overlap weight exactness, symmetry, triangle inequality",
    3: "snake convergence on high-contrast disk",
    4: "low-contrast disk: hybrid vs plain snake",
    5: "split event and parent/child tracks",
    6: "internal energy gradient vs finite differences",
    7: "energy descent under zero image force",
    8: "partition invariant of produced segmentations",
    9: "deterministic track outputs",
}
_ac_results = {}
AC_METRICS = {}  # criterion number -> short measured summary


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_ac(\d+)_", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    failed = report.failed
    if report.when == "call" or failed:
        _ac_results[n] = _ac_results.get(n, True) and not failed


def pytest_terminal_summary(terminalreporter):
    if not _ac_results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ac_results):
        status = "PASS" if _ac_results[n] else "FAIL"
        detail = f" ({AC_METRICS[n]})" if n in AC_METRICS else ""
        terminalreporter.write_line(f"AC-{n} {status}: {AC_TITLES.get(n, '')}{detail}")


@pytest.fixture(params=_backend.available_backends())
def backend(request):
    prev = _backend.use_backend(request.param)
    yield request.param
    _backend.use_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def disk_scene(contrast=0.6, noise=0.0, background=0.2, radius=20.0, size=64, seed=0, frames=1):
    c = size / 2.0
    return SceneSpec(size, size, background, noise, [CellSpec([(c, c)] * frames, radius, contrast)], seed=seed)


def split_scene():
    """Two touching disks in frame 0 (one segment) that separate in frame 1."""
    return SceneSpec(64, 64, 0.2, 0.0, [CellSpec([(24, 32), (22, 32)], 9, 0.5),
                                        CellSpec([(40, 32), (42, 32)], 9, 0.5)])


BRIGHT = SegmenterSettings(polarity="bright")
AC3_PARAMS = SnakeParams(alpha=0.1, beta=0.4, gamma=1.0, w_edge=100.0)


def random_alignment_instance(rng, size=24, max_segments=5, max_pairs=20):
    """Two label maps of up to ``max_segments`` rectangles; frame t+1 shifts,
    splits, drops and adds rectangles so splits, merges and ties all occur.
    Redraws until the L=2 candidate-pair count fits the brute-force oracle."""
    from cellsnake.align import _candidate_pairs

    while True:
        a, b = _draw_instance(rng, size, max_segments)
        if len(_candidate_pairs(a, b, 2, 0.2, 2)) <= max_pairs:
            return a, b


def _draw_instance(rng, size, max_segments):
    from cellsnake.segment import segmentation_from_labels

    def paint(rects):
        lab = np.zeros((size, size), np.int32)
        for i, (x0, y0, x1, y1) in enumerate(rects, start=1):
            lab[y0:y1, x0:x1] = i
        # relabel 1..m, dropping rectangles fully painted over
        ids = [v for v in np.unique(lab) if v]
        out = np.zeros_like(lab)
        for j, v in enumerate(ids, start=1):
            out[lab == v] = j
        return out

    def rect():
        x0, y0 = rng.integers(0, size - 4, 2)
        w, h = rng.integers(2, 9, 2)
        return [int(x0), int(y0), int(min(size, x0 + w)), int(min(size, y0 + h))]

    rects = [rect() for _ in range(int(rng.integers(1, max_segments + 1)))]
    nxt = []
    for x0, y0, x1, y1 in rects:
        r = rng.random()
        dx, dy = (int(v) for v in rng.integers(-2, 3, 2))
        moved = [max(0, x0 + dx), max(0, y0 + dy), min(size, x1 + dx), min(size, y1 + dy)]
        if moved[2] - moved[0] < 1 or moved[3] - moved[1] < 1 or r < 0.1:
            continue
        if r < 0.35 and moved[2] - moved[0] >= 2:
            mid = (moved[0] + moved[2]) // 2
            nxt += [[moved[0], moved[1], mid, moved[3]], [mid, moved[1], moved[2], moved[3]]]
        else:
            nxt.append(moved)
    if rng.random() < 0.3:
        nxt.append(rect())
    if len(rects) > 1 and rng.random() < 0.3:
        # merge: one rectangle covering the first two
        a, b = rects[0], rects[1]
        nxt.append([min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3])])
    nxt = nxt[:max_segments]
    seg_t = segmentation_from_labels(paint(rects), 0)
    seg_t1 = segmentation_from_labels(paint(nxt), 1)
    return seg_t, seg_t1
