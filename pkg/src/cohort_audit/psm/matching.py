"""Greedy 1:k nearest-neighbour matching on propensity scores.

Base individuals are visited in ascending score order (ties by id). Each one
takes the k nearest still-available pool scores, breaking distance ties by id.
A base individual that cannot get k partners (pool exhausted, or caliper) is
left unmatched and consumes nothing.

Available pool slots are tracked with two path-compressed "next free index"
forests over the score-sorted pool, so a full run costs roughly
O((n_base * k + n_pool) log n_pool) even for million-row pools.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np


class EmptyPool(ValueError):
    pass


class InvalidK(ValueError):
    pass


@dataclass(frozen=True)
class MatchedCohort:
    pairs: tuple[tuple[Hashable, tuple[Hashable, ...]], ...]
    unmatched_base: tuple[Hashable, ...]
    k: int
    base_is_treated: bool | None = None
    with_replacement: bool = False

    @property
    def matched_base(self) -> tuple:
        return tuple(b for b, _ in self.pairs)

    @property
    def partners(self) -> tuple:
        return tuple(p for _, ps in self.pairs for p in ps)

    @property
    def size(self) -> int:
        """Matched individuals, counting a reused partner once per use."""
        return (self.k + 1) * len(self.pairs)

    def matched_ids(self) -> list:
        """Base ids followed by partner ids, distinct, in match order."""
        seen = dict.fromkeys(self.matched_base)
        seen.update(dict.fromkeys(self.partners))
        return list(seen)


def _find(parent: list[int], i: int) -> int:
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


class _Pool:
    """Score-sorted pool with O(α) lookup of the nearest free slot on each side."""

    def __init__(self, scores: Sequence[float], ids: Sequence[Hashable]):
        self.scores = list(scores)
        self.ids = list(ids)
        n = len(self.scores)
        self.free = n
        # right[i]: smallest free index >= i (n = none); left[i+1]: largest free index <= i (-1 = none)
        self.right = list(range(n + 1))
        self.left = list(range(n + 1))
        self.block_start = np.searchsorted(np.asarray(self.scores), np.asarray(self.scores),
                                           side="left").tolist()

    def next_right(self, i: int) -> int:
        return _find(self.right, i)

    def next_left(self, i: int) -> int:
        return _find(self.left, i + 1) - 1

    def take(self, i: int) -> None:
        self.right[i] = i + 1
        self.left[i + 1] = i
        self.free -= 1

    def _iter_right(self, pos: int):
        j = self.next_right(pos)
        n = len(self.scores)
        while j < n:
            yield j
            j = self.next_right(j + 1)

    def _iter_left(self, pos: int):
        # Within one equal-score block the smallest id (lowest index) goes first.
        hi = pos - 1
        while True:
            last = self.next_left(hi)
            if last < 0:
                return
            start = self.block_start[last]
            j = self.next_right(start)
            while j <= last:
                yield j
                j = self.next_right(j + 1)
            hi = start - 1

    def nearest(self, x: float, k: int, caliper: float | None) -> list[int]:
        """Indices of the k nearest free scores to ``x``; fewer if the caliper cuts in."""
        pos = bisect_left(self.scores, x)
        left, right = self._iter_left(pos), self._iter_right(pos)
        li, ri = next(left, None), next(right, None)
        chosen: list[int] = []
        while len(chosen) < k and (li is not None or ri is not None):
            if ri is None:
                take_left = True
            elif li is None:
                take_left = False
            else:
                dl, dr = x - self.scores[li], self.scores[ri] - x
                take_left = dl < dr or (dl == dr and self.ids[li] < self.ids[ri])
            j = li if take_left else ri
            if caliper is not None and abs(self.scores[j] - x) > caliper:
                break
            chosen.append(j)
            if take_left:
                li = next(left, None)
            else:
                ri = next(right, None)
        return chosen


def _greedy(base: list[tuple[float, Hashable]], pool: _Pool, k: int,
            caliper: float | None, with_replacement: bool):
    pairs = []
    unmatched = []
    for score, bid in base:
        if not with_replacement and pool.free < k:
            unmatched.append(bid)
            continue
        chosen = pool.nearest(score, k, caliper)
        if len(chosen) < k:
            unmatched.append(bid)
            continue
        if not with_replacement:
            for j in chosen:
                pool.take(j)
        pairs.append((bid, tuple(pool.ids[j] for j in chosen)))
    return tuple(pairs), tuple(unmatched)


def _check(k: int, n_pool: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidK(f"k must be a positive integer, got {k!r}")
    if n_pool == 0:
        raise EmptyPool("matching pool is empty")


def match_one_to_k(
    scores: Mapping[Hashable, float],
    base_ids: Iterable[Hashable],
    pool_ids: Iterable[Hashable],
    k: int,
    caliper: float | None = None,
    *,
    with_replacement: bool = False,
    base_is_treated: bool | None = None,
) -> MatchedCohort:
    """Match every base individual to ``k`` pool individuals by nearest score."""
    base_ids = list(base_ids)
    pool_ids = list(pool_ids)
    _check(k, len(pool_ids))
    overlap = set(base_ids) & set(pool_ids)
    if overlap:
        raise ValueError(f"base and pool overlap on {len(overlap)} ids")
    missing = [i for i in base_ids + pool_ids if i not in scores]
    if missing:
        raise KeyError(f"no score for ids {missing[:5]}")
    base = sorted((float(scores[i]), i) for i in base_ids)
    pool_sorted = sorted((float(scores[i]), i) for i in pool_ids)
    pool = _Pool([s for s, _ in pool_sorted], [i for _, i in pool_sorted])
    pairs, unmatched = _greedy(base, pool, int(k), caliper, with_replacement)
    return MatchedCohort(pairs, unmatched, int(k), base_is_treated, with_replacement)


def match_arrays(
    ids: np.ndarray,
    scores: np.ndarray,
    is_base: np.ndarray,
    k: int,
    caliper: float | None = None,
    *,
    with_replacement: bool = False,
    base_is_treated: bool | None = None,
) -> MatchedCohort:
    """Same rule as :func:`match_one_to_k` for integer-id arrays; sorts with numpy."""
    ids = np.asarray(ids)
    scores = np.asarray(scores, dtype=float)
    is_base = np.asarray(is_base, dtype=bool)
    if len(np.unique(ids)) != len(ids):
        raise ValueError("ids must be unique")
    _check(k, int((~is_base).sum()))
    b_ids, b_scores = ids[is_base], scores[is_base]
    p_ids, p_scores = ids[~is_base], scores[~is_base]
    b_order = np.lexsort((b_ids, b_scores))
    p_order = np.lexsort((p_ids, p_scores))
    base = list(zip(b_scores[b_order].tolist(), b_ids[b_order].tolist()))
    pool = _Pool(p_scores[p_order].tolist(), p_ids[p_order].tolist())
    pairs, unmatched = _greedy(base, pool, int(k), caliper, with_replacement)
    return MatchedCohort(pairs, unmatched, int(k), base_is_treated, with_replacement)
