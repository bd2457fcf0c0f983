"""Finite metric measure spaces and the example families used throughout.

A space is a dense distance matrix plus point weights. Constructors cover
discrete l1-cubes ``[k]^n`` (optionally scaled), discrete tori
``(Z/kZ)^n`` and Cartesian products of connected graphs with the path
metric.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .measure import AtomicMeasure

DEFAULT_SIZE_BUDGET = 4096
METRIC_TOL = 1e-9
WEIGHT_TOL = 1e-12
RADIUS_TOL = 1e-12


class SpaceError(ValueError):
    """Malformed space data, or a construction over the size budget."""


@dataclass(frozen=True, eq=False)
class FiniteMMSpace:
    dist: np.ndarray
    weights: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        dist = np.asarray(self.dist, dtype=float)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise SpaceError(f"distance matrix must be square, got shape {dist.shape}")
        if dist.shape[0] != weights.size:
            raise SpaceError(f"{dist.shape[0]} points but {weights.size} weights")
        if weights.size == 0:
            raise SpaceError("space must have at least one point")
        if np.any(weights <= 0):
            raise SpaceError("point weights must be positive")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise SpaceError(f"weights sum to {weights.sum()!r}, expected 1")
        if self.labels is not None and len(self.labels) != weights.size:
            raise SpaceError("labels must match the number of points")
        dist.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "weights", weights)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_points(self) -> int:
        return int(self.weights.size)

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(np.abs(self.weights - 1.0 / self.n_points) <= WEIGHT_TOL))

    @property
    def diameter(self) -> float:
        return float(self.dist.max())

    def scaled(self, t: float) -> "FiniteMMSpace":
        """``tX``: same points and measure, distances multiplied by ``t``."""
        if t <= 0:
            raise SpaceError(f"scale must be positive, got {t!r}")
        return FiniteMMSpace(t * self.dist, self.weights, self.labels)

    def mass(self, points: Iterable[int]) -> float:
        idx = np.fromiter(points, dtype=int)
        return float(self.weights[idx].sum()) if idx.size else 0.0

    def as_dict(self) -> dict:
        out = {"dist": self.dist.tolist(), "weights": self.weights.tolist()}
        if self.labels is not None:
            out["labels"] = [str(x) for x in self.labels]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FiniteMMSpace":
        try:
            return cls(data["dist"], data["weights"], data.get("labels"))
        except KeyError as exc:
            raise SpaceError('space JSON needs "dist" and "weights"') from exc

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


@dataclass
class MetricReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_metric(space: FiniteMMSpace, tol: float = METRIC_TOL) -> MetricReport:
    """Every violated axiom with its witness; an empty report means a metric."""
    d = space.dist
    report = MetricReport()
    for i in np.flatnonzero(np.abs(np.diag(d)) > tol):
        report.violations.append(("zero-diagonal", (int(i),)))
    for i, j in zip(*np.nonzero(d < -tol)):
        report.violations.append(("non-negative", (int(i), int(j))))
    for i, j in zip(*np.nonzero(np.abs(d - d.T) > tol)):
        if i < j:
            report.violations.append(("symmetry", (int(i), int(j))))
    n = space.n_points
    for b in range(n):
        # d[a, c] > d[a, b] + d[b, c] for the middle point b
        bad = d > d[:, b][:, None] + d[b, :][None, :] + tol
        for a, c in zip(*np.nonzero(bad)):
            report.violations.append(("triangle", (int(a), b, int(c))))
    return report


def _check_budget(size: int, budget: int) -> None:
    if size > budget:
        raise SpaceError(f"space would have {size} points, over the budget of {budget}")


def _uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def lattice_points(k: int, n: int) -> np.ndarray:
    """All of ``[k]^n`` in lexicographic order, one row per point."""
    return np.array(list(itertools.product(range(k), repeat=n)), dtype=int).reshape(-1, n)


def make_cube(k: int, n: int, scale: float = 1.0, budget: int = DEFAULT_SIZE_BUDGET) -> FiniteMMSpace:
    """``[k]^n`` with ``scale`` times the l1 distance and the uniform measure.

    ``scale=1/k`` gives the grid ``(1/k)[k]^n`` inside the unit cube.
    """
    if k < 2 or n < 1:
        raise SpaceError(f"need k >= 2 and n >= 1, got k={k}, n={n}")
    if scale <= 0:
        raise SpaceError(f"scale must be positive, got {scale!r}")
    _check_budget(k**n, budget)
    pts = lattice_points(k, n)
    dist = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2) * scale
    return FiniteMMSpace(dist, _uniform(len(pts)), tuple(map(tuple, pts.tolist())))


def make_torus(k: int, n: int, scale: float = 1.0, budget: int = DEFAULT_SIZE_BUDGET) -> FiniteMMSpace:
    """``(Z/kZ)^n`` with the cyclic l1 distance; ``k`` must be even."""
    if k < 2 or k % 2:
        raise SpaceError(
            f"discrete torus needs an even k >= 2 (the l1 torus comparison is stated for even k), got k={k}"
        )
    if n < 1:
        raise SpaceError(f"need n >= 1, got {n}")
    _check_budget(k**n, budget)
    pts = lattice_points(k, n)
    diff = np.abs(pts[:, None, :] - pts[None, :, :])
    dist = np.minimum(diff, k - diff).sum(axis=2) * scale
    return FiniteMMSpace(dist, _uniform(len(pts)), tuple(map(tuple, pts.tolist())))


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..order-1``."""

    order: int
    edges: tuple

    def __post_init__(self):
        edges = tuple(tuple(int(v) for v in e) for e in self.edges)
        for e in edges:
            if len(e) != 2 or not all(0 <= v < self.order for v in e):
                raise SpaceError(f"bad edge {e} for a graph of order {self.order}")
        object.__setattr__(self, "edges", edges)

    def path_metric(self) -> np.ndarray:
        rows = [i for i, j in self.edges] + [j for i, j in self.edges]
        cols = [j for i, j in self.edges] + [i for i, j in self.edges]
        adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.order, self.order))
        d = shortest_path(adj, directed=False, unweighted=True)
        if np.isinf(d).any():
            raise SpaceError("graph factor is disconnected")
        return d

    def as_dict(self) -> dict:
        return {"order": self.order, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        return cls(int(data["order"]), tuple(map(tuple, data["edges"])))


def complete_graph(k: int) -> Graph:
    return Graph(k, tuple(itertools.combinations(range(k), 2)))


def path_graph(k: int) -> Graph:
    return Graph(k, tuple((i, i + 1) for i in range(k - 1)))


def cycle_graph(k: int) -> Graph:
    if k < 3:
        return path_graph(k)
    return Graph(k, tuple((i, (i + 1) % k) for i in range(k)))


def make_product_graph(
    graphs: Sequence[Graph], scale: float = 1.0, budget: int = DEFAULT_SIZE_BUDGET
) -> FiniteMMSpace:
    """Cartesian product of connected graphs of a common order, path metric, uniform measure."""
    if not graphs:
        raise SpaceError("need at least one graph factor")
    k = graphs[0].order
    if k < 2:
        raise SpaceError("graph factors need order >= 2")
    if any(g.order != k for g in graphs):
        raise SpaceError(f"graph factors must share one order, got {[g.order for g in graphs]}")
    _check_budget(k ** len(graphs), budget)
    metrics = [g.path_metric() for g in graphs]
    pts = lattice_points(k, len(graphs))
    dist = np.zeros((len(pts), len(pts)))
    for axis, d in enumerate(metrics):
        dist += d[pts[:, axis][:, None], pts[:, axis][None, :]]
    return FiniteMMSpace(dist * scale, _uniform(len(pts)), tuple(map(tuple, pts.tolist())))


def closed_neighborhood(space: FiniteMMSpace, A: Iterable[int], r: float) -> frozenset:
    """``B_r(A) = {y : d(y, A) <= r}`` as a set of point indices."""
    idx = sorted(set(int(a) for a in A))
    if not idx:
        raise SpaceError("closed neighborhood of the empty set is not defined here")
    if r < 0:
        raise SpaceError(f"radius must be >= 0, got {r!r}")
    near = (space.dist[idx, :] <= r + RADIUS_TOL).any(axis=0)
    return frozenset(int(i) for i in np.flatnonzero(near))


def distance_pushforward(space: FiniteMMSpace, base: int = 0) -> AtomicMeasure:
    """Law of ``x -> d(x, base)`` under the space's measure."""
    if not 0 <= base < space.n_points:
        raise SpaceError(f"base point {base} out of range")
    return AtomicMeasure.from_values(space.dist[base], space.weights)
