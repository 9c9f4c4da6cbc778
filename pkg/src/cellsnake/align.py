"""Topological alignment of two consecutive segmentations.

Segments are grouped (up to L spatially adjacent segments per group) and
groups of frame t are matched to groups of frame t+1 by relative overlap
(Jaccard index of the group unions). The selected matches are pairwise
segment-disjoint and maximize the summed weight.

Weights are optimized as exact fractions, so totals and ties are decided
identically by every search strategy. Among equal-weight solutions the one
containing the smallest match key (t ids, then t+1 ids) of the symmetric
difference wins; this order decomposes over independent sub-problems.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import FrameMismatchError, InstanceTooLargeError

ONE_TO_ONE, SPLIT, MERGE = "one-to-one", "split", "merge"
BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True, eq=False)
class SegmentGroup:
    frame: int
    segments: tuple

    def __post_init__(self):
        segs = tuple(sorted(self.segments, key=lambda s: s.id))
        if not segs:
            raise ValueError("empty segment group")
        ids = [s.id for s in segs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate segment ids in group {ids}")
        object.__setattr__(self, "segments", segs)

    @property
    def ids(self) -> tuple:
        return tuple(s.id for s in self.segments)

    def __len__(self):
        return len(self.segments)

    @cached_property
    def keys(self) -> np.ndarray:
        if len(self.segments) == 1:
            return self.segments[0].keys
        return np.unique(np.concatenate([s.keys for s in self.segments]))


@dataclass(frozen=True, eq=False)
class Match:
    t_group: SegmentGroup
    t1_group: SegmentGroup
    weight: float
    event: str | None = None
    exact: Fraction | None = field(default=None, repr=False)

    @property
    def t_ids(self):
        return self.t_group.ids

    @property
    def t1_ids(self):
        return self.t1_group.ids

    @property
    def key(self):
        return (self.t_ids, self.t1_ids)


@dataclass(eq=False)
class AlignmentResult:
    frame_t: int
    frame_t1: int
    matches: list
    disappearances: list  # frame-t ids in no match
    appearances: list  # frame-t+1 ids in no match
    total_weight: float

    @property
    def events(self):
        return [(m.event, m) for m in self.matches]

    def to_dict(self):
        return {
            "frame_t": self.frame_t,
            "frame_t1": self.frame_t1,
            "matches": [{"t_ids": list(m.t_ids), "t1_ids": list(m.t1_ids), "weight": m.weight, "event": m.event}
                        for m in self.matches],
            "appearances": list(self.appearances),
            "disappearances": list(self.disappearances),
            "total_weight": self.total_weight,
        }


def _overlap_counts(a_keys, b_keys):
    inter = np.intersect1d(a_keys, b_keys, assume_unique=True).size
    return inter, a_keys.size + b_keys.size - inter


def overlap_weight(p, q) -> float:
    """Relative overlap |A(p) & A(q)| / |A(p) | A(q)| of two segments."""
    if p.area == 0 or q.area == 0:
        raise ValueError("overlap weight of an empty segment")
    inter, union = _overlap_counts(p.keys, q.keys)
    return inter / union


def _exact_group_weight(s: SegmentGroup, t: SegmentGroup) -> Fraction:
    inter, union = _overlap_counts(s.keys, t.keys)
    return Fraction(inter, union)


def group_weight(s: SegmentGroup, t: SegmentGroup) -> float:
    inter, union = _overlap_counts(s.keys, t.keys)
    return inter / union


def _boxes_touch(a, b, gap):
    ax0, ay0, ax1, ay1 = a.bbox
    bx0, by0, bx1, by1 = b.bbox
    return (ax0 - gap <= bx1 + gap and bx0 - gap <= ax1 + gap
            and ay0 - gap <= by1 + gap and by0 - gap <= ay1 + gap)


def candidate_groups(seg, L: int = 2, adjacency_gap: int = 2) -> list:
    """Singletons plus every 2..L set of pairwise-adjacent segments."""
    if L < 1:
        raise ValueError("group size L must be >= 1")
    segs = sorted(seg.segments, key=lambda s: s.id)
    groups = [SegmentGroup(seg.frame, (s,)) for s in segs]
    if L == 1 or len(segs) < 2:
        return groups
    adj = {s.id: set() for s in segs}
    for a, b in itertools.combinations(segs, 2):
        if _boxes_touch(a, b, adjacency_gap):
            adj[a.id].add(b.id)
            adj[b.id].add(a.id)
    for size in range(2, L + 1):
        for combo in itertools.combinations(segs, size):
            if all(b.id in adj[a.id] for a, b in itertools.combinations(combo, 2)):
                groups.append(SegmentGroup(seg.frame, combo))
    return groups


def _candidate_pairs(seg_t, seg_t1, L, w_min, adjacency_gap):
    if seg_t.shape != seg_t1.shape:
        raise FrameMismatchError(f"frame shapes differ: {seg_t.shape} vs {seg_t1.shape}")
    g_t = candidate_groups(seg_t, L, adjacency_gap)
    g_t1 = candidate_groups(seg_t1, L, adjacency_gap)
    by_member = {}
    for g in g_t1:
        for sid in g.ids:
            by_member.setdefault(sid, []).append(g)
    lab1 = seg_t1.labels
    pairs = []
    for s in g_t:
        px = np.concatenate([seg.pixels for seg in s.segments])
        hit = np.unique(lab1[px[:, 1], px[:, 0]])
        seen = set()
        for sid in hit[hit > 0].tolist():
            for t in by_member.get(sid, ()):
                if t.ids in seen:
                    continue
                seen.add(t.ids)
                w = _exact_group_weight(s, t)
                if w > 0 and float(w) >= w_min:
                    pairs.append(Match(s, t, float(w), exact=w))
    pairs.sort(key=lambda m: m.key)
    return pairs


def _conflicts(a: Match, b: Match) -> bool:
    return bool(set(a.t_ids) & set(b.t_ids)) or bool(set(a.t1_ids) & set(b.t1_ids))


def _better(total, keys, best_total, best_keys) -> bool:
    if best_keys is None or total > best_total:
        return True
    if total < best_total:
        return False
    diff = keys ^ best_keys
    return bool(diff) and min(diff) in keys


def _branch_and_bound(pairs):
    """Exact maximum-weight compatible subset of ``pairs``."""
    order = sorted(pairs, key=lambda m: (-m.exact, m.key))
    n = len(order)
    suffix = [Fraction(0)] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + order[i].exact
    best = {"total": Fraction(-1), "keys": None, "sel": []}
    chosen = []
    used_t, used_t1 = set(), set()

    def rec(i, total):
        if total + suffix[i] < best["total"]:
            return
        if i == n:
            keys = frozenset(m.key for m in chosen)
            if _better(total, keys, best["total"], best["keys"]):
                best.update(total=total, keys=keys, sel=list(chosen))
            return
        m = order[i]
        if not (used_t & set(m.t_ids)) and not (used_t1 & set(m.t1_ids)):
            chosen.append(m)
            used_t.update(m.t_ids)
            used_t1.update(m.t1_ids)
            rec(i + 1, total + m.exact)
            chosen.pop()
            used_t.difference_update(m.t_ids)
            used_t1.difference_update(m.t1_ids)
        rec(i + 1, total)

    rec(0, Fraction(0))
    return best["sel"]


def _greedy(pairs):
    sel = []
    used_t, used_t1 = set(), set()
    for m in sorted(pairs, key=lambda m: (-m.exact, m.key)):
        if used_t & set(m.t_ids) or used_t1 & set(m.t1_ids):
            continue
        sel.append(m)
        used_t.update(m.t_ids)
        used_t1.update(m.t1_ids)
    return sel


def _components(pairs):
    """Split candidate pairs into groups that share no segment."""
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for m in pairs:
        nodes = [("t", i) for i in m.t_ids] + [("t1", i) for i in m.t1_ids]
        r0 = find(nodes[0])
        for nd in nodes[1:]:
            r = find(nd)
            if r != r0:
                parent[r] = r0
    comps = {}
    for m in pairs:
        comps.setdefault(find(("t", m.t_ids[0])), []).append(m)
    return list(comps.values())


def _result(seg_t, seg_t1, selected):
    selected = sorted(selected, key=lambda m: m.key)
    used_t = {i for m in selected for i in m.t_ids}
    used_t1 = {i for m in selected for i in m.t1_ids}
    total = sum((m.exact for m in selected), Fraction(0))
    res = AlignmentResult(
        frame_t=seg_t.frame, frame_t1=seg_t1.frame, matches=selected,
        disappearances=[i for i in sorted(seg_t.ids) if i not in used_t],
        appearances=[i for i in sorted(seg_t1.ids) if i not in used_t1],
        total_weight=float(total),
    )
    return classify_events(res)


def align_frames(seg_t, seg_t1, L: int = 2, w_min: float = 0.2, adjacency_gap: int = 2,
                 exact_limit: int = 20) -> AlignmentResult:
    """Maximum-weight topological alignment of two segmentations.

    Candidate pairs are split into independent conflict components; each is
    solved exactly by branch and bound when it has at most ``exact_limit``
    pairs, greedily by descending weight otherwise.
    """
    pairs = _candidate_pairs(seg_t, seg_t1, L, w_min, adjacency_gap)
    selected = []
    for comp in _components(pairs):
        selected.extend(_branch_and_bound(comp) if len(comp) <= exact_limit else _greedy(comp))
    return _result(seg_t, seg_t1, selected)


def brute_force_align(seg_t, seg_t1, L: int = 2, w_min: float = 0.2,
                      adjacency_gap: int = 2) -> AlignmentResult:
    """Exhaustive search over every compatible match set (test oracle)."""
    pairs = _candidate_pairs(seg_t, seg_t1, L, w_min, adjacency_gap)
    if len(pairs) > BRUTE_FORCE_LIMIT:
        raise InstanceTooLargeError(f"{len(pairs)} candidate pairs exceed brute-force limit {BRUTE_FORCE_LIMIT}")
    best_total, best_keys, best_sel = Fraction(-1), None, []

    def walk(i, chosen):
        nonlocal best_total, best_keys, best_sel
        if i == len(pairs):
            total = sum((m.exact for m in chosen), Fraction(0))
            keys = frozenset(m.key for m in chosen)
            if _better(total, keys, best_total, best_keys):
                best_total, best_keys, best_sel = total, keys, list(chosen)
            return
        walk(i + 1, chosen)
        if all(not _conflicts(pairs[i], c) for c in chosen):
            walk(i + 1, chosen + [pairs[i]])

    walk(0, [])
    return _result(seg_t, seg_t1, best_sel)


def event_of(n_t: int, n_t1: int) -> str:
    if n_t == 1 and n_t1 > 1:
        return SPLIT
    if n_t > 1 and n_t1 == 1:
        return MERGE
    return ONE_TO_ONE


def classify_events(r: AlignmentResult) -> AlignmentResult:
    tagged = [replace(m, event=event_of(len(m.t_group), len(m.t1_group))) for m in r.matches]
    return replace(r, matches=tagged)
