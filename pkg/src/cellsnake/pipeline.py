"""Segment -> align -> seed snakes -> evolve, folded over a frame sequence."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .align import MERGE, SPLIT, AlignmentResult, align_frames, overlap_weight
from .errors import DegenerateContourError, FrameMismatchError
from .image import GrayImage, image_energy
from .segment import SegmenterSettings, Segmentation, segment_image, trace_boundary
from .snake import Contour, EvolutionReport, SnakeParams, contour_mask, evolve, rectangle_contour

log = logging.getLogger(__name__)

SEQUENCE_END, DISAPPEARANCE = "sequence_end", "disappearance"


@dataclass(frozen=True)
class AlignmentSettings:
    L: int = 2
    w_min: float = 0.2
    adjacency_gap: int = 2
    exact_limit: int = 20

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError("alignment.L must be an integer >= 1")
        if not 0.0 <= self.w_min <= 1.0:
            raise ValueError("alignment.w_min must lie in [0, 1]")
        if int(self.adjacency_gap) != self.adjacency_gap or self.adjacency_gap < 0:
            raise ValueError("alignment.adjacency_gap must be an integer >= 0")
        if int(self.exact_limit) != self.exact_limit or self.exact_limit < 0:
            raise ValueError("alignment.exact_limit must be an integer >= 0")


@dataclass(frozen=True)
class PipelineConfig:
    snake: SnakeParams = field(default_factory=SnakeParams)
    segmenter: SegmenterSettings = field(default_factory=SegmenterSettings)
    alignment: AlignmentSettings = field(default_factory=AlignmentSettings)
    sigma: float = 2.0

    def __post_init__(self):
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError("energy.sigma must be finite and >= 0")
        if self.snake.w_term and self.sigma <= 0:
            raise ValueError("energy.sigma must be > 0 when snake.w_term is non-zero")

    def energy_field(self, img: GrayImage):
        s = self.snake
        return image_energy(img, s.w_line, s.w_edge, s.w_term, self.sigma)


@dataclass(eq=False)
class FrameResult:
    frame: int
    segmentation: Segmentation
    alignment: AlignmentResult | None
    segment_tracks: dict  # segment id -> track id
    contours: dict = field(default_factory=dict)  # track id -> refined Contour
    reports: dict = field(default_factory=dict)  # track id -> EvolutionReport
    parents: dict = field(default_factory=dict)  # new child track id -> parent track id
    terminated: dict = field(default_factory=dict)  # previous track id -> reason
    skipped: list = field(default_factory=list)  # segment ids without a snake
    next_track_id: int = 1

    @property
    def active_tracks(self):
        return set(self.segment_tracks.values())


@dataclass
class TrackEntry:
    frame: int
    centroid: tuple
    area: int
    contour: Contour | None = None


@dataclass
class Track:
    id: int
    parent: int | None = None
    entries: list = field(default_factory=list)
    termination: str | None = None

    @property
    def first(self):
        return self.entries[0].frame

    @property
    def last(self):
        return self.entries[-1].frame

    @property
    def lifespan(self):
        return len(self.entries)


@dataclass
class MobilityStats:
    track_id: int
    mean_speed: float
    net_displacement: float
    path_length: float
    confinement_ratio: float


def _assign_tracks(prev: FrameResult, seg: Segmentation, res: AlignmentResult):
    """Map current segments to track ids given the alignment to ``prev``."""
    prev_map = prev.segment_tracks
    nxt = prev.next_track_id
    cur, parents, terminated = {}, {}, {}

    def new_track(parent=None):
        nonlocal nxt
        tid = nxt
        nxt += 1
        if parent is not None:
            parents[tid] = parent
        return tid

    for m in res.matches:
        s_tracks = [prev_map[i] for i in m.t_ids]
        if m.event == SPLIT:
            terminated[s_tracks[0]] = SPLIT
            for sid in m.t1_ids:
                cur[sid] = new_track(parent=s_tracks[0])
        elif m.event == MERGE:
            keep = min(s_tracks)
            cur[m.t1_ids[0]] = keep
            for t in s_tracks:
                if t != keep:
                    terminated[t] = MERGE
        elif len(m.t_ids) == 1:
            cur[m.t1_ids[0]] = s_tracks[0]
        else:
            # group-to-group: pair members by overlap, leftovers merge or branch off
            cands = sorted(((overlap_weight(a, b), a.id, b.id)
                            for a in m.t_group.segments for b in m.t1_group.segments),
                           key=lambda c: (-c[0], c[1], c[2]))
            used_a, used_b = set(), set()
            for w, a, b in cands:
                if w > 0 and a not in used_a and b not in used_b:
                    cur[b] = prev_map[a]
                    used_a.add(a)
                    used_b.add(b)
            for a in m.t_ids:
                if a not in used_a:
                    terminated[prev_map[a]] = MERGE
            for b in m.t1_ids:
                if b not in used_b:
                    best = next((a for w, a, bb in cands if bb == b), m.t_ids[0])
                    cur[b] = new_track(parent=prev_map[best])
    for sid in res.disappearances:
        terminated[prev_map[sid]] = DISAPPEARANCE
    for sid in res.appearances:
        cur[sid] = new_track()
    return dict(sorted(cur.items())), parents, terminated, nxt


def _refine(seg, field_, params, spacing):
    try:
        c = trace_boundary(seg, spacing)
    except DegenerateContourError as exc:
        log.warning("skipping segment %d: %s", seg.id, exc)
        return None
    return evolve(c, field_, params)


def process_frame(img: GrayImage, previous: FrameResult | None, cfg: PipelineConfig,
                  frame: int | None = None, workers: int = 1) -> FrameResult:
    """Segment ``img``, align to ``previous``, refine each segment with a snake."""
    if frame is None:
        frame = 0 if previous is None else previous.frame + 1
    seg = segment_image(img, cfg.segmenter, frame)
    if previous is None:
        mapping = {s.id: i + 1 for i, s in enumerate(seg.segments)}
        res = FrameResult(frame, seg, None, mapping, next_track_id=len(mapping) + 1)
    else:
        if previous.segmentation.shape != seg.shape:
            raise FrameMismatchError(f"frame {frame} is {seg.shape[1]}x{seg.shape[0]}, previous frame is "
                                     f"{previous.segmentation.shape[1]}x{previous.segmentation.shape[0]}")
        a = cfg.alignment
        alignment = align_frames(previous.segmentation, seg, a.L, a.w_min, a.adjacency_gap, a.exact_limit)
        mapping, parents, terminated, nxt = _assign_tracks(previous, seg, alignment)
        res = FrameResult(frame, seg, alignment, mapping, parents=parents, terminated=terminated,
                          next_track_id=nxt)

    field_ = cfg.energy_field(img)
    segs = seg.segments
    spacing = cfg.snake.resample_spacing
    if workers > 1 and len(segs) > 1:
        with ThreadPoolExecutor(workers) as ex:
            reports = list(ex.map(lambda s: _refine(s, field_, cfg.snake, spacing), segs))
    else:
        reports = [_refine(s, field_, cfg.snake, spacing) for s in segs]
    for s, rep in zip(segs, reports):
        tid = res.segment_tracks[s.id]
        if rep is None:
            res.skipped.append(s.id)
            continue
        res.contours[tid] = rep.contour
        res.reports[tid] = rep
    return res


def build_tracks(frames) -> list:
    tracks = {}
    for fr in frames:
        for tid, reason in fr.terminated.items():
            tracks[tid].termination = reason
        for sid, tid in fr.segment_tracks.items():
            s = fr.segmentation[sid]
            if tid not in tracks:
                tracks[tid] = Track(tid, parent=fr.parents.get(tid))
            tracks[tid].entries.append(TrackEntry(fr.frame, s.centroid, s.area, fr.contours.get(tid)))
    for t in tracks.values():
        if t.termination is None:
            t.termination = SEQUENCE_END
    return [tracks[k] for k in sorted(tracks)]


def track_sequence(images, cfg: PipelineConfig | None = None, workers: int = 1):
    """Run the pipeline over a sequence; returns (frame results, tracks)."""
    cfg = cfg or PipelineConfig()
    images = list(images)
    if not images:
        raise ValueError("empty image sequence")
    shape = images[0].shape
    frames = []
    prev = None
    for i, img in enumerate(images):
        if img.shape != shape:
            raise FrameMismatchError(f"frame {i} has shape {img.shape}, expected {shape}")
        prev = process_frame(img, prev, cfg, frame=i, workers=workers)
        frames.append(prev)
    return frames, build_tracks(frames)


def frame_mask(fr: FrameResult) -> np.ndarray:
    """Foreground of a processed frame: refined contours, plus the raw pixels
    of segments that had no snake."""
    shape = fr.segmentation.shape
    mask = np.zeros(shape, dtype=bool)
    for c in fr.contours.values():
        mask |= contour_mask(c, *shape)
    for sid in fr.skipped:
        px = fr.segmentation[sid].pixels
        mask[px[:, 1], px[:, 0]] = True
    return mask


def plain_snake(img: GrayImage, cfg: PipelineConfig | None = None, margin: int = 2) -> EvolutionReport:
    """Classic snake without segmentation: seeded on the rectangle ``margin``
    pixels inside the image border and evolved on the same energy field."""
    cfg = cfg or PipelineConfig()
    h, w = img.shape
    if w - 1 - 2 * margin < 1 or h - 1 - 2 * margin < 1:
        raise ValueError(f"margin {margin} leaves no room in a {w}x{h} image")
    seed = rectangle_contour(margin, margin, w - 1 - margin, h - 1 - margin, cfg.snake.resample_spacing)
    return evolve(seed, cfg.energy_field(img), cfg.snake)


def mobility_stats(tracks) -> list:
    out = []
    for t in tracks:
        c = np.array([e.centroid for e in t.entries], dtype=np.float64)
        if len(c) < 2:
            out.append(MobilityStats(t.id, 0.0, 0.0, 0.0, 1.0))
            continue
        path = float(np.sum(np.hypot(*np.diff(c, axis=0).T)))
        net = float(np.hypot(*(c[-1] - c[0])))
        ratio = 1.0 if path == 0 else min(1.0, net / path)
        out.append(MobilityStats(t.id, path / (len(c) - 1), net, path, ratio))
    return out


def tracks_to_dict(tracks):
    return {"tracks": [{
        "id": t.id, "parent": t.parent, "first": t.first, "last": t.last, "termination": t.termination,
        "entries": [{"frame": e.frame, "cx": round(e.centroid[0], 6), "cy": round(e.centroid[1], 6),
                     "area": int(e.area)} for e in t.entries],
    } for t in tracks]}


MOBILITY_CSV_HEADER = ["track", "mean_speed", "net_disp", "path_len", "confinement"]


def mobility_rows(stats):
    for s in stats:
        yield [s.track_id, f"{s.mean_speed:.6f}", f"{s.net_displacement:.6f}",
               f"{s.path_length:.6f}", f"{s.confinement_ratio:.6f}"]

