"""Proximity weight vectors: positional decay and dependency-tree distance.

Both schemes produce one weight per token, exactly zero on the aspect span
and in (0, 1] (position) or [0, 1) (dependency) elsewhere.  Weights scale
hidden states before convolution; they are data, not parameters.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import DataError
from .corpus import ROOT, DepForest


def _check_span(n: int, tau: int, m: int):
    if n < 1 or m < 1 or tau < 0 or tau + m > n:
        raise DataError(f"invalid aspect span: n={n}, tau={tau}, m={m}")


def position_proximity(n: int, tau: int, m: int) -> np.ndarray:
    """Linear positional decay: 1 - distance_to_nearest_border / n.

    Left of the span the weight is 1 - (tau - i)/n, on the span it is 0,
    right of it 1 - (i - tau - m + 1)/n.  No normalization is applied.
    """
    _check_span(n, tau, m)
    p = np.zeros(n, dtype=np.float64)
    for i in range(tau):
        p[i] = 1.0 - (tau - i) / n
    for i in range(tau + m, n):
        p[i] = 1.0 - (i - tau - m + 1) / n
    return p


def tree_distances(forest: DepForest, tau: int, m: int) -> np.ndarray:
    """Shortest-path length from each token to the nearest aspect token.

    Head links are treated as undirected edges and searched breadth-first
    from every aspect token.  Tokens in a tree containing no aspect token
    get the constant n/2 (kept as an exact real, not rounded).
    """
    n = forest.n
    _check_span(n, tau, m)
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for i, head in enumerate(forest.heads):
        if head != ROOT:
            adjacency[i].append(head)
            adjacency[head].append(i)

    # Multi-source BFS: seeding every aspect token at 0 yields, per token,
    # the minimum path length to any of them.
    dist = np.full(n, -1, dtype=np.int64)
    queue = deque(range(tau, tau + m))
    dist[tau : tau + m] = 0
    while queue:
        cur = queue.popleft()
        for nxt in adjacency[cur]:
            if dist[nxt] < 0:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)

    d = np.where(dist >= 0, dist.astype(np.float64), n / 2)
    d[tau : tau + m] = 0.0
    return d


def dependency_proximity(d: np.ndarray, n: int, tau: int, m: int) -> np.ndarray:
    """Tree-distance decay: 1 - d_i/n off the span, 0 on the span.

    A distance above n would yield a negative weight; that is rejected
    rather than clamped (it cannot arise from valid single-tree distances,
    and the n/2 multi-tree constant stays at weight 0.5).
    """
    _check_span(n, tau, m)
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (n,):
        raise DataError(f"distance vector has shape {d.shape}, expected ({n},)")
    if np.any(d > n):
        raise DataError("tree distance exceeds sentence length; refusing negative weight")
    p = 1.0 - d / n
    p[tau : tau + m] = 0.0
    return p


def match_forests(instances, forests: list[DepForest]) -> list[DepForest]:
    """Pair each instance with its sentence's dependency structure.

    When every block carries a unique ``# sent_id`` the match is by id;
    otherwise blocks are taken positionally, one per sentence in corpus
    order.  Either way an instance without a counterpart is an error.
    """
    ids = [f.sent_id for f in forests]
    by_id = all(ids) and len(set(ids)) == len(ids)
    if by_id:
        table = {f.sent_id: f for f in forests}
        out = []
        for inst in instances:
            forest = table.get(inst.sentence_id)
            if forest is None:
                raise DataError(f"no dependency parse for sentence {inst.sentence_id!r}")
            out.append(forest)
        return out
    out = []
    for inst in instances:
        if inst.sentence_index >= len(forests):
            raise DataError(
                f"sentence {inst.sentence_id!r} at position {inst.sentence_index} "
                f"has no dependency parse ({len(forests)} blocks present)"
            )
        out.append(forests[inst.sentence_index])
    return out


def proximity_for_instance(instance, mode: str, forest: DepForest | None = None) -> np.ndarray:
    """Dispatch to the configured proximity scheme for one instance."""
    if mode == "position":
        return position_proximity(instance.n, instance.aspect_start, instance.aspect_len)
    if mode == "dependency":
        if forest is None:
            raise DataError("dependency proximity requires a parsed dependency structure")
        if forest.n != instance.n:
            raise DataError(
                f"sentence {instance.sentence_id!r}: dependency structure has "
                f"{forest.n} tokens, instance has {instance.n}"
            )
        d = tree_distances(forest, instance.aspect_start, instance.aspect_len)
        return dependency_proximity(d, instance.n, instance.aspect_start, instance.aspect_len)
    raise DataError(f"unknown proximity mode {mode!r}")
