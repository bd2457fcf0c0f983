"""Maximum flow on bipartite supply/demand graphs with float capacities.

Both routines answer the same question: given row supplies, column
demands and a set of admissible (row, column) cells of unbounded
capacity, how much mass can be routed? ``bipartite_max_flow`` handles an
arbitrary cell set (Dinic); ``interval_max_flow`` handles the special case
where each row's admissible columns form a contiguous window whose ends
move monotonically with the row, which a single greedy sweep solves.
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np

FLOW_EPS = 1e-15


def bipartite_max_flow(
    supply: Sequence[float],
    demand: Sequence[float],
    cells: Sequence[tuple[int, int]],
) -> tuple[float, np.ndarray]:
    """Max flow from ``supply`` rows to ``demand`` columns through ``cells``.

    Returns the flow value and the (rows x cols) flow matrix. Each call owns
    its residual graph, so concurrent calls do not interact.
    """
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    m, n = supply.size, demand.size
    flow = np.zeros((m, n))
    if not len(cells):
        return 0.0, flow

    # node ids: source 0, rows 1..m, cols m+1..m+n, sink m+n+1
    src, snk = 0, m + n + 1
    size = m + n + 2
    head: list[list[int]] = [[] for _ in range(size)]
    to: list[int] = []
    cap: list[float] = []

    def add(u: int, v: int, c: float) -> int:
        head[u].append(len(to))
        to.append(v)
        cap.append(c)
        head[v].append(len(to))
        to.append(u)
        cap.append(0.0)
        return len(to) - 2

    big = float(supply.sum() + demand.sum() + 1.0)
    used_rows = sorted({i for i, _ in cells})
    used_cols = sorted({j for _, j in cells})
    for i in used_rows:
        add(src, 1 + i, float(supply[i]))
    cell_edges = [(i, j, add(1 + i, 1 + m + j, big)) for i, j in cells]
    for j in used_cols:
        add(1 + m + j, snk, float(demand[j]))

    total = 0.0
    while True:
        level = [-1] * size
        level[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for e in head[u]:
                if cap[e] > FLOW_EPS and level[to[e]] < 0:
                    level[to[e]] = level[u] + 1
                    queue.append(to[e])
        if level[snk] < 0:
            break
        it = [0] * size

        def push(u: int, f: float) -> float:
            if u == snk:
                return f
            edges = head[u]
            while it[u] < len(edges):
                e = edges[it[u]]
                v = to[e]
                if cap[e] > FLOW_EPS and level[v] == level[u] + 1:
                    got = push(v, min(f, cap[e]))
                    if got > FLOW_EPS:
                        cap[e] -= got
                        cap[e ^ 1] += got
                        return got
                it[u] += 1
            return 0.0

        while True:
            f = push(src, big)
            if f <= FLOW_EPS:
                break
            total += f

    for i, j, e in cell_edges:
        flow[i, j] = cap[e ^ 1]
    return total, flow


def interval_max_flow(
    supply: np.ndarray,
    demand: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Greedy max flow when row ``i`` may use columns ``lo[i]..hi[i]`` (inclusive).

    Requires ``lo`` and ``hi`` non-decreasing in ``i``. Each row pours into
    the leftmost column with spare demand inside its window; with monotone
    windows no later row can use a column an earlier row skipped past, so
    the sweep is optimal. Returns the value and a sparse list of
    ``(i, j, mass)`` triplets.
    """
    remaining = np.array(demand, dtype=float)
    triplets = []
    total = 0.0
    j = 0
    for i in range(len(supply)):
        left = float(supply[i])
        if hi[i] < lo[i]:
            continue
        j = max(j, int(lo[i]))
        while left > FLOW_EPS and j <= hi[i]:
            take = min(left, remaining[j])
            if take > 0:
                triplets.append((i, j, take))
                remaining[j] -= take
                left -= take
                total += take
            if remaining[j] <= FLOW_EPS:
                j += 1
        # j stays at the first column that may still have demand for the next row
    return total, np.array(triplets, dtype=float).reshape(-1, 3)
