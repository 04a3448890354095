"""Two-level graph matching and the pairwise distance matrix.

Level 1 assigns regions one-to-one greedily by ascending mean-color distance,
using topological agreement of already-assigned neighbors as a tie-breaker.
Level 2 matches descriptors inside each assigned region pair by mutual
nearest neighbor under a ratio test. The distance is one minus the matched
fraction of descriptors, so identical graphs are at distance zero.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np

from .config import RunConfig
from .types import Arsrg, DistanceMatrix

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class MatchResult:
    region_pairs: tuple[tuple[int, int, int], ...]  # (region_a, region_b, n_matches)
    total_matched: int
    distance: float


def _neighbor_sets(g: Arsrg) -> dict[int, set[int]]:
    nbrs: dict[int, set[int]] = {r.id: set() for r in g.regions}
    for i, j in g.region_edges:
        nbrs[i].add(j)
        nbrs[j].add(i)
    return nbrs


def assign_regions(a: Arsrg, b: Arsrg) -> list[tuple[int, int]]:
    """Greedy one-to-one assignment by ascending mean-color distance.

    Tie-break: prefer pairs whose already-assigned neighbors correspond,
    then lexicographic (region_a id, region_b id).
    """
    nbrs_a, nbrs_b = _neighbor_sets(a), _neighbor_sets(b)
    col_a = {r.id: np.array(r.mean_color) for r in a.regions}
    col_b = {r.id: np.array(r.mean_color) for r in b.regions}
    free_a = sorted(col_a)
    free_b = sorted(col_b)
    dist = {
        (i, j): float(np.linalg.norm(col_a[i] - col_b[j])) / SQRT3
        for i in free_a for j in free_b
    }
    assigned: dict[int, int] = {}
    out: list[tuple[int, int]] = []
    while free_a and free_b:
        best = None
        for i in free_a:
            for j in free_b:
                topo = sum(1 for na in nbrs_a[i]
                           if na in assigned and assigned[na] in nbrs_b[j])
                key = (dist[(i, j)], -topo, i, j)
                if best is None or key < best:
                    best = key
        _, _, i, j = best
        assigned[i] = j
        out.append((i, j))
        free_a.remove(i)
        free_b.remove(j)
    return out


def _ratio_pass(d1: float, d2: Optional[float], ratio: float) -> bool:
    # a zero-distance (exact) match always passes; a lone candidate has no
    # second neighbor to compare against
    if d1 == 0.0 or d2 is None:
        return True
    return d1 < ratio * d2


def match_descriptor_sets(da: np.ndarray, db: np.ndarray, ratio: float) -> list[tuple[int, int]]:
    """Mutual-nearest matches under a two-sided ratio test (Euclidean metric)."""
    if len(da) == 0 or len(db) == 0:
        return []
    d2 = (
        np.sum(da * da, axis=1)[:, None]
        + np.sum(db * db, axis=1)[None, :]
        - 2.0 * (da @ db.T)
    )
    d = np.sqrt(np.maximum(d2, 0.0))
    nn_a = np.argmin(d, axis=1)
    nn_b = np.argmin(d, axis=0)
    out = []
    for i, j in enumerate(nn_a.tolist()):
        if nn_b[j] != i:
            continue
        if not _ratio_pass(float(d[i, j]), _second_smallest(d[i, :], j), ratio):
            continue
        if not _ratio_pass(float(d[i, j]), _second_smallest(d[:, j], i), ratio):
            continue
        out.append((i, j))
    return out


def _second_smallest(row: np.ndarray, exclude: int) -> Optional[float]:
    if len(row) < 2:
        return None
    mask = np.ones(len(row), dtype=bool)
    mask[exclude] = False
    return float(row[mask].min())


def match_graphs(a: Arsrg, b: Arsrg, ratio_threshold: float = 0.6,
                 min_region_matches: int = 3) -> MatchResult:
    if not (0.0 < ratio_threshold <= 1.0):
        raise ValueError("ratio_threshold must lie in (0,1]")
    if min_region_matches < 1:
        raise ValueError("min_region_matches must be >= 1")
    total_desc = a.descriptor_count() + b.descriptor_count()
    if total_desc == 0:
        return MatchResult(region_pairs=(), total_matched=0, distance=1.0)
    vec_a = {r.id: np.array([a.descriptors[k].vector for k in r.descriptor_ids])
             for r in a.regions}
    vec_b = {r.id: np.array([b.descriptors[k].vector for k in r.descriptor_ids])
             for r in b.regions}
    pairs = []
    total = 0
    for ra, rb in assign_regions(a, b):
        da, db = vec_a[ra], vec_b[rb]
        matches = match_descriptor_sets(da, db, ratio_threshold)
        if len(matches) >= min_region_matches:
            pairs.append((ra, rb, len(matches)))
            total += len(matches)
    distance = 1.0 - 2.0 * total / total_desc
    distance = min(max(distance, 0.0), 1.0)
    return MatchResult(region_pairs=tuple(pairs), total_matched=total, distance=distance)


def symmetric_distance(a: Arsrg, b: Arsrg, ratio_threshold: float = 0.6,
                       min_region_matches: int = 3) -> float:
    fwd = match_graphs(a, b, ratio_threshold, min_region_matches).distance
    rev = match_graphs(b, a, ratio_threshold, min_region_matches).distance
    return (fwd + rev) / 2.0


_WORKER_STATE: dict = {}


def _init_worker(graphs, ratio_threshold, min_region_matches):
    _WORKER_STATE["graphs"] = graphs
    _WORKER_STATE["ratio"] = ratio_threshold
    _WORKER_STATE["min_matches"] = min_region_matches


def _pair_distance(pair: tuple[int, int]) -> tuple[int, int, float]:
    i, j = pair
    g = _WORKER_STATE["graphs"]
    d = symmetric_distance(g[i], g[j], _WORKER_STATE["ratio"], _WORKER_STATE["min_matches"])
    return i, j, d


def build_distance_matrix(graphs: list[Arsrg], cfg: RunConfig, workers: int = 1,
                          progress: Optional[TextIO] = None) -> DistanceMatrix:
    """All n(n-1)/2 unordered pair distances; diagonal zero without computation.

    The result is independent of worker count: each cell is a pure function of
    its pair, and results land in disjoint cells.
    """
    if not graphs:
        raise ValueError("need at least one graph")
    n = len(graphs)
    values = np.zeros((n, n), dtype=np.float64)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    args = (graphs, cfg.ratio_threshold, cfg.min_region_matches)
    done = 0
    if workers <= 1 or len(pairs) < 2:
        _init_worker(*args)
        results = map(_pair_distance, pairs)
        for i, j, d in results:
            values[i, j] = values[j, i] = d
            done += 1
            if progress is not None and done % 100 == 0:
                print(f"match: {done}/{len(pairs)} pairs", file=progress, flush=True)
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=args) as pool:
            for i, j, d in pool.map(_pair_distance, pairs, chunksize=64):
                values[i, j] = values[j, i] = d
                done += 1
                if progress is not None and done % 100 == 0:
                    print(f"match: {done}/{len(pairs)} pairs", file=progress, flush=True)
    dm = DistanceMatrix(names=tuple(g.image_id for g in graphs), values=values)
    dm.check()
    return dm
