"""Exact linear-maximization layers over structured action sets.

Each layer solves ``argmax_{a in A} <theta, a>`` for one family of action
sets ``A`` and returns the maximizing action as a float vector:

* top-k subsets of ``n`` items, encoded as 0/1 indicator vectors,
* rankings of ``n`` items, encoded as permutations of ``1..n`` where a
  larger score receives a larger rank,
* source-to-destination paths on an 8-connected grid, encoded as 0/1
  cell-membership vectors (scores must be non-positive so the problem
  reduces to a shortest path and stays polynomial).

All layers break ties deterministically, which makes them usable as
reproducible argmax oracles inside perturbation-based losses.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

# Refuse to enumerate action sets larger than this.
ENUMERATION_GUARD = 1_000_000

# Neighbor offsets of a grid cell, iterated in row-major order of the
# 3x3 block around the cell (center excluded).  This order is part of
# the layer contract: together with the (distance, cell index) heap
# ordering it pins down which shortest path Dijkstra returns on ties.
GRID_NEIGHBOR_OFFSETS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


@dataclass(frozen=True)
class TopKSpace:
    """Subsets of exactly ``k`` out of ``n`` items."""

    n: int
    k: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k must be in [1, n={self.n}], got {self.k}")

    @property
    def dim(self) -> int:
        return self.n


@dataclass(frozen=True)
class RankingSpace:
    """Permutations of ``n`` items encoded as rank vectors in ``1..n``."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")

    @property
    def dim(self) -> int:
        return self.n


@dataclass(frozen=True)
class GridPathSpace:
    """Simple paths between two cells of an 8-connected rows x cols grid.

    Actions are 0/1 cell-membership vectors of length ``rows * cols``
    (row-major).  ``source`` and ``dest`` are (row, col) pairs.
    """

    rows: int
    cols: int
    source: tuple[int, int]
    dest: tuple[int, int]

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must be non-empty, got {self.rows}x{self.cols}")
        for name, (r, c) in (("source", self.source), ("dest", self.dest)):
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(
                    f"{name}={(r, c)} outside {self.rows}x{self.cols} grid"
                )

    @property
    def dim(self) -> int:
        return self.rows * self.cols

    def cell_index(self, cell: tuple[int, int]) -> int:
        return cell[0] * self.cols + cell[1]

    def neighbors(self, cell: tuple[int, int]) -> list[tuple[int, int]]:
        r, c = cell
        out = []
        for dr, dc in GRID_NEIGHBOR_OFFSETS:
            rr, cc = r + dr, c + dc
            if 0 <= rr < self.rows and 0 <= cc < self.cols:
                out.append((rr, cc))
        return out


Space = TopKSpace | RankingSpace | GridPathSpace


def _check_theta(theta: np.ndarray, space: Space) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (space.dim,):
        raise ValueError(
            f"theta has shape {theta.shape}, expected ({space.dim},) for {space}"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite entries")
    return theta


def topk_argmax(theta: np.ndarray, space: TopKSpace) -> np.ndarray:
    """Indicator vector of the ``k`` largest scores, ties to the lowest index."""
    theta = _check_theta(theta, space)
    # Stable sort on -theta keeps the lowest index first among ties.
    order = np.argsort(-theta, kind="stable")
    action = np.zeros(space.n, dtype=np.float64)
    action[order[: space.k]] = 1.0
    return action


def ranking_argmax(theta: np.ndarray, space: RankingSpace) -> np.ndarray:
    """Rank vector assigning rank ``n`` to the largest score.

    Ties are broken toward the lowest index, which then receives the
    lower rank.  Example: theta=[0.1, 0.5, 0.3] -> [1, 3, 2].
    """
    theta = _check_theta(theta, space)
    order = np.argsort(theta, kind="stable")
    action = np.empty(space.n, dtype=np.float64)
    action[order] = np.arange(1, space.n + 1, dtype=np.float64)
    return action


def grid_path_argmax(theta: np.ndarray, space: GridPathSpace) -> np.ndarray:
    """Membership vector of the score-maximal source->dest path.

    Requires every score to be non-positive: cell weights ``-theta`` are
    then non-negative and Dijkstra over the 8-connected grid finds the
    path maximizing the summed scores.  The path cost counts both the
    source and the destination cell.  Ties are resolved by settling
    cells in (distance, cell index) order and visiting neighbors in
    ``GRID_NEIGHBOR_OFFSETS`` order, keeping the first predecessor found.
    """
    theta = _check_theta(theta, space)
    if np.any(theta > 0):
        bad = int(np.argmax(theta > 0))
        raise ValueError(
            f"grid path scores must be <= 0, got theta[{bad}]={theta[bad]!r}"
        )
    weights = -theta  # non-negative cell weights, row-major
    src = space.cell_index(space.source)
    dst = space.cell_index(space.dest)

    dist = np.full(space.dim, np.inf)
    dist[src] = weights[src]
    parent = {src: -1}
    settled = np.zeros(space.dim, dtype=bool)
    heap: list[tuple[float, int]] = [(dist[src], src)]
    while heap:
        d, u = heapq.heappop(heap)
        if settled[u]:
            continue
        settled[u] = True
        if u == dst:
            break
        ur, uc = divmod(u, space.cols)
        for vr, vc in space.neighbors((ur, uc)):
            v = vr * space.cols + vc
            if settled[v]:
                continue
            nd = d + weights[v]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))

    action = np.zeros(space.dim, dtype=np.float64)
    node = dst
    while node != -1:
        action[node] = 1.0
        node = parent[node]
    return action


def argmax_action(theta: np.ndarray, space: Space) -> np.ndarray:
    """Dispatch to the exact layer matching the space type."""
    if isinstance(space, TopKSpace):
        return topk_argmax(theta, space)
    if isinstance(space, RankingSpace):
        return ranking_argmax(theta, space)
    if isinstance(space, GridPathSpace):
        return grid_path_argmax(theta, space)
    raise TypeError(f"unsupported space {type(space).__name__}")


def _count_actions(space: Space) -> int:
    if isinstance(space, TopKSpace):
        return math.comb(space.n, space.k)
    if isinstance(space, RankingSpace):
        return math.factorial(space.n)
    raise TypeError(f"unsupported space {type(space).__name__}")


def enumerate_paths(space: GridPathSpace) -> list[list[tuple[int, int]]]:
    """All simple source->dest paths as cell sequences, DFS order.

    Raises if more than ``ENUMERATION_GUARD`` paths exist.  Note that
    two distinct paths may share one membership encoding (they visit
    the same cell set in different orders), so this list can be longer
    than ``enumerate_actions(space)``.
    """
    paths: list[list[tuple[int, int]]] = []
    visited = {space.source}
    trail = [space.source]

    def dfs(cell: tuple[int, int]) -> None:
        if cell == space.dest:
            if len(paths) >= ENUMERATION_GUARD:
                raise ValueError(
                    f"more than {ENUMERATION_GUARD} paths in {space}"
                )
            paths.append(list(trail))
            return
        for nxt in space.neighbors(cell):
            if nxt not in visited:
                visited.add(nxt)
                trail.append(nxt)
                dfs(nxt)
                trail.pop()
                visited.remove(nxt)

    dfs(space.source)
    return paths


def path_to_action(path: list[tuple[int, int]], space: GridPathSpace) -> np.ndarray:
    action = np.zeros(space.dim, dtype=np.float64)
    for cell in path:
        action[space.cell_index(cell)] = 1.0
    return action


def enumerate_actions(space: Space) -> np.ndarray:
    """Duplicate-free matrix of all feasible action encodings, one per row.

    Raises if the action set exceeds ``ENUMERATION_GUARD``.  Intended
    for brute-force oracles and small-instance experts; the order is
    deterministic (lexicographic for subsets and rankings, DFS-first
    for grid paths).
    """
    if isinstance(space, TopKSpace):
        count = _count_actions(space)
        if count > ENUMERATION_GUARD:
            raise ValueError(f"{count} actions exceed guard {ENUMERATION_GUARD}")
        rows = np.zeros((count, space.n), dtype=np.float64)
        for i, combo in enumerate(itertools.combinations(range(space.n), space.k)):
            rows[i, list(combo)] = 1.0
        return rows
    if isinstance(space, RankingSpace):
        count = _count_actions(space)
        if count > ENUMERATION_GUARD:
            raise ValueError(f"{count} actions exceed guard {ENUMERATION_GUARD}")
        rows = np.empty((count, space.n), dtype=np.float64)
        for i, perm in enumerate(itertools.permutations(range(1, space.n + 1))):
            rows[i] = perm
        return rows
    if isinstance(space, GridPathSpace):
        seen: dict[bytes, int] = {}
        rows = []
        for path in enumerate_paths(space):
            action = path_to_action(path, space)
            key = action.tobytes()
            if key not in seen:
                seen[key] = len(rows)
                rows.append(action)
        return np.array(rows, dtype=np.float64)
    raise TypeError(f"unsupported space {type(space).__name__}")


def brute_force_argmax(theta: np.ndarray, space: Space) -> np.ndarray:
    """Exhaustive argmax over ``enumerate_actions``, ties to the first row.

    Reference oracle for the exact layers; subject to the same
    enumeration guard.
    """
    theta = _check_theta(theta, space)
    actions = enumerate_actions(space)
    scores = actions @ theta
    return actions[int(np.argmax(scores))].copy()
