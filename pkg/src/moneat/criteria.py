"""The two training objectives.

Performance rewards reaching the goal quickly and, on failure, ending
close to it; a success always scores above any failure.  Experience
gain measures the diversity of (pre-state, action, post-state) triples
a candidate collected, as the total edge weight of the minimum spanning
tree over its deduplicated experience points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

# An experience point is a 1-D float vector of length 2*n_sensors +
# n_actions with every component normalized into [0, 1]: pre-action
# sensor readings, the two action outputs, post-action readings.
ExperiencePoint = np.ndarray

N_ACTIONS = 2


class ConfigurationError(ValueError):
    """A call was made with an empty or inconsistent configuration."""


class InvalidScenarioError(ValueError):
    """Scenario bookkeeping values are out of range."""


def experience_dim(n_sensors: int) -> int:
    return 2 * n_sensors + N_ACTIONS


@dataclass
class ScenarioResult:
    """Outcome of rolling one genome through one scenario."""

    success: bool
    t_total: float            # straight-line time to goal at rated velocity
    t_remaining: float        # unused budget when the run ended
    final_distance: float     # distance to goal at the final step
    experience_points: np.ndarray  # (n_steps, experience_dim) rows
    final_displacement: float      # distance from the start pose; recorded only
    elapsed: float = 0.0      # simulated seconds consumed
    trajectory: np.ndarray | None = None   # (n_steps+1, 3) poses incl. start
    actions: np.ndarray | None = None      # (n_steps, 2) physical (rot, dist)
    collided_steps: np.ndarray | None = None
    outcome: str = ""         # success | timeout | collision | step_cap


@dataclass
class CriteriaConfig:
    # alpha is the exploitation-vs-exploration importance factor carried
    # in run configs; none of the criterion formulas consume it.
    alpha: float = 0.2
    n_scenarios: int = 0
    max_experience_points: int = 500


def performance_scenario(r: ScenarioResult) -> float:
    """Per-scenario score: success pays 1 plus the saved-time ratio,
    failure pays 1/(1 + final distance)."""
    if r.t_total <= 0.0:
        raise InvalidScenarioError(f"t_total must be positive, got {r.t_total}")
    if r.success:
        return 1.0 + r.t_remaining / r.t_total
    return 1.0 / (1.0 + r.final_distance)


def performance_total(results: list[ScenarioResult]) -> float:
    if not results:
        raise ConfigurationError("performance_total needs at least one scenario")
    return sum(performance_scenario(r) for r in results)


def experience_union(per_scenario, cap: int) -> np.ndarray:
    """Pool experience points across scenarios, drop exact duplicates
    (first occurrence kept), then stride-subsample down to ``cap``."""
    arrays = []
    dim = None
    for pts in per_scenario:
        a = np.asarray(pts, dtype=np.float64)
        if a.size == 0:
            continue
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if dim is None:
            dim = a.shape[1]
        elif a.shape[1] != dim:
            raise ValueError(
                f"experience dimension mismatch: {a.shape[1]} vs {dim}")
        arrays.append(a)
    if not arrays:
        return np.zeros((0, 0), dtype=np.float64)
    pooled = np.ascontiguousarray(np.concatenate(arrays, axis=0))
    # Exact duplicates (bitwise-equal rows) collapse onto their first
    # occurrence; no value in the experience encoding has two bit
    # patterns, so byte equality is value equality.
    row_bytes = pooled.tobytes()
    stride = pooled.shape[1] * pooled.itemsize
    seen: dict[bytes, int] = {}
    for k in range(pooled.shape[0]):
        key = row_bytes[k * stride:(k + 1) * stride]
        if key not in seen:
            seen[key] = k
    if len(seen) != pooled.shape[0]:
        pooled = pooled[np.fromiter(seen.values(), dtype=np.int64,
                                    count=len(seen))]
    n = pooled.shape[0]
    if n > cap:
        keep = (np.arange(cap, dtype=np.int64) * n) // cap
        pooled = pooled[keep]
    return pooled


@lru_cache(maxsize=8)
def _triu_cached(n: int):
    return np.triu_indices(n, k=1)


@njit(cache=True)
def _edge_weights(p):
    """All pairwise Euclidean distances, packed (i, j) with i < j in
    row-major order."""
    n = p.shape[0]
    d = p.shape[1]
    w = np.empty(n * (n - 1) // 2, dtype=np.float64)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for c in range(d):
                t = p[i, c] - p[j, c]
                acc += t * t
            w[k] = math.sqrt(acc)
            k += 1
    return w


@njit(cache=True)
def _union_sweep(edges, w, ei, ej, parent, size, state):
    """Kruskal sweep over one ascending batch of edge indices; tags the
    connected components with a union-find.  ``state`` carries
    (total weight, edges taken) across batches."""
    total = state[0]
    taken = int(state[1])
    n_goal = parent.shape[0] - 1
    for idx in range(edges.shape[0]):
        e = edges[idx]
        a = ei[e]
        b = ej[e]
        ra = a
        while parent[ra] != ra:
            ra = parent[ra]
        rb = b
        while parent[rb] != rb:
            rb = parent[rb]
        while parent[a] != ra:
            nxt = parent[a]
            parent[a] = ra
            a = nxt
        while parent[b] != rb:
            nxt = parent[b]
            parent[b] = rb
            b = nxt
        if ra != rb:
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]
            total += w[e]
            taken += 1
            if taken == n_goal:
                break
    state[0] = total
    state[1] = taken


def mst_total_weight(points) -> float:
    """Total weight of the minimum spanning tree over the complete graph
    with Euclidean edge lengths, by Kruskal's ascending edge sweep with
    union-find.  The sweep consumes edges in ascending batches (smallest
    batch first via partial selection) since the tree almost always
    completes long before the full edge list would be sorted.  Fewer
    than two points weigh 0.
    """
    p = np.asarray(points, dtype=np.float64)
    if p.ndim == 1 and p.size:
        p = p.reshape(1, -1)
    n = p.shape[0] if p.ndim == 2 else 0
    if n < 2:
        return 0.0
    p = np.ascontiguousarray(p)
    w = _edge_weights(p)
    ii, jj = _triu_cached(n)
    parent = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    state = np.zeros(2, dtype=np.float64)
    remaining = np.arange(w.shape[0], dtype=np.int64)
    batch = min(32 * n, w.shape[0])
    while int(state[1]) < n - 1 and remaining.size:
        if batch < remaining.size:
            split = np.argpartition(w[remaining], batch - 1)
            chosen = remaining[split[:batch]]
            remaining = remaining[split[batch:]]
        else:
            chosen = remaining
            remaining = remaining[:0]
        chosen = chosen[np.argsort(w[chosen], kind="stable")]
        _union_sweep(chosen, w, ii, jj, parent, size, state)
        batch *= 4
    return float(state[0])


def experience_gain(per_scenario, cfg: CriteriaConfig) -> float:
    """Overall experience objective: MST weight of the capped union."""
    return mst_total_weight(
        experience_union(per_scenario, cfg.max_experience_points))


def write_experience_csv(points, n_sensors: int, path) -> None:
    pts = np.asarray(points, dtype=np.float64)
    cols = ([f"pre_s{i+1}" for i in range(n_sensors)]
            + ["act_rotate", "act_translate"]
            + [f"post_s{i+1}" for i in range(n_sensors)])
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(cols) + "\n")
        for row in pts:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
