"""Single-machine scheduling with release dates.

An instance has ``n`` jobs, each with a release date ``r_j`` and a
processing time ``p_j``.  A policy picks one processing order; jobs run
back to back, never before release:

    C(first) = max(r, 0) + p,   C(next) = max(r, C(prev)) + p.

The objective is the total completion time ``sum_j C_j`` (reward is its
negative).  Episodes are single-step: one ranking decision per instance.

Processing times are integers uniform on {1..100}; release dates are
uniform on [0, 0.4 * sum(p)], which makes release order matter without
drowning out processing times.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

N_FEATURES = 8
EXHAUSTIVE_LIMIT = 8


@dataclass(frozen=True)
class SmspInstance:
    release: np.ndarray
    processing: np.ndarray

    @property
    def n(self) -> int:
        return self.release.shape[0]


def smsp_generate(n: int, rng: np.random.Generator) -> SmspInstance:
    """Draw one instance: p ~ U{1..100}, r ~ U[0, 0.4 * sum(p)]."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    processing = rng.integers(1, 101, size=n).astype(np.float64)
    release = rng.uniform(0.0, 0.4 * processing.sum(), size=n)
    return SmspInstance(release=release, processing=processing)


def total_completion(instance: SmspInstance, sequence: np.ndarray) -> float:
    """Sum of completion times when jobs run in ``sequence`` order."""
    sequence = np.asarray(sequence, dtype=np.int64)
    if sorted(sequence.tolist()) != list(range(instance.n)):
        raise ValueError(f"sequence {sequence} is not a permutation of 0..{instance.n - 1}")
    t = 0.0
    total = 0.0
    for j in sequence:
        t = max(instance.release[j], t) + instance.processing[j]
        total += t
    return total


def preemptive_completions(release: np.ndarray, processing: np.ndarray) -> np.ndarray:
    """Completion time of each job under the preemptive relaxation.

    Simulates the shortest-remaining-work rule, which solves the
    preemptive version of the problem exactly; the resulting completion
    order is a strong guide for non-preemptive sequencing.
    """
    n = len(release)
    remaining = processing.astype(np.float64).copy()
    done = np.zeros(n)
    t = float(release.min())
    finished = 0
    while finished < n:
        open_jobs = (release <= t + 1e-12) & (remaining > 0)
        if not np.any(open_jobs):
            t = float(release[remaining > 0].min())
            continue
        j = int(np.flatnonzero(open_jobs)[np.argmin(remaining[open_jobs])])
        future = release[(release > t) & (remaining > 0)]
        horizon = t + remaining[j]
        if len(future):
            horizon = min(horizon, float(future.min()))
        remaining[j] -= horizon - t
        t = horizon
        if remaining[j] <= 1e-12:
            remaining[j] = 0.0
            done[j] = t
            finished += 1
    return done


def smsp_observe(instance: SmspInstance) -> np.ndarray:
    """Per-job feature rows, each entry in [0, 1].

    Time-valued columns are scaled by max release plus total work, an
    upper bound on the schedule span.  Columns: scaled release,
    processing, release plus processing; normalized ranks of release
    and processing; two pairwise slack aggregates: the job's estimated
    start (its release vs. the work other jobs can fit before it) and
    its completion time under the preemptive relaxation; a constant.
    """
    r = instance.release.astype(np.float64)
    p = instance.processing.astype(np.float64)
    n = instance.n
    span = r.max() + p.sum()
    rank = np.empty(n)
    rank[np.argsort(r, kind="stable")] = np.arange(n)
    prank = np.empty(n)
    prank[np.argsort(p, kind="stable")] = np.arange(n)
    denom = max(n - 1, 1)
    work_before = np.array(
        [np.sum(np.minimum(p, np.maximum(0.0, r[j] - r))) for j in range(n)]
    )
    feats = np.column_stack([
        r / span,
        p / span,
        (r + p) / span,
        rank / denom,
        prank / denom,
        np.maximum(r, work_before) / span,
        preemptive_completions(r, p) / span,
        np.ones(n),
    ])
    return feats


def smsp_greedy(instance: SmspInstance) -> np.ndarray:
    """Sort by release date, then processing time, then index."""
    n = instance.n
    return np.lexsort((np.arange(n), instance.processing, instance.release))


@lru_cache(maxsize=4)
def _all_permutations(n: int) -> np.ndarray:
    return np.array(list(permutations(range(n))), dtype=np.int64)


def smsp_expert(instance: SmspInstance) -> np.ndarray:
    """Exhaustively optimal sequence; refuses instances beyond 8 jobs.

    Ties resolve to the lexicographically smallest optimal permutation.
    """
    n = instance.n
    if n > EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"exhaustive search limited to n <= {EXHAUSTIVE_LIMIT}, got n = {n}"
        )
    perms = _all_permutations(n)
    t = np.zeros(len(perms))
    total = np.zeros(len(perms))
    for k in range(n):
        jobs = perms[:, k]
        t = np.maximum(instance.release[jobs], t) + instance.processing[jobs]
        total += t
    return perms[int(np.argmin(total))].copy()


def sequence_to_ranks(sequence: np.ndarray) -> np.ndarray:
    """Rank vector: the job processed first gets rank 1."""
    sequence = np.asarray(sequence, dtype=np.int64)
    ranks = np.empty(sequence.shape[0], dtype=np.float64)
    ranks[sequence] = np.arange(1, sequence.shape[0] + 1, dtype=np.float64)
    return ranks


def ranks_to_sequence(ranks: np.ndarray) -> np.ndarray:
    """Inverse of ``sequence_to_ranks``; stable for tied ranks."""
    return np.argsort(np.asarray(ranks), kind="stable")
