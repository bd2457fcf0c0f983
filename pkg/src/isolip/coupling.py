"""Couplings of atomic measures and the functionals measured on them.

Plans live on the support grid ``row_atoms x col_atoms``. The two
set functionals are

* ``dev_succ(S) = max y - y' - max(x - x', 0)`` over ordered pairs of S,
  which is 0 exactly when S is the graph of a monotone 1-Lipschitz map,
* ``dis_delta_set(S) = max |x - y|``, the distance of S from the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .flow import bipartite_max_flow, interval_max_flow
from .measure import MASS_TOL, AtomicMeasure, MeasureError

PLAN_TOL = 1e-10
MATCH_TOL = 1e-12
SPARSE_JSON_THRESHOLD = 512
PHANTOM_TOL = 1e-15


class CouplingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PairSet:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if pts.size:
            pts = np.unique(pts, axis=0)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, pairs: Iterable[Sequence[float]]) -> "PairSet":
        return cls(np.array(list(pairs), dtype=float).reshape(-1, 2))

    def __len__(self) -> int:
        return len(self.points)


def _as_points(S) -> np.ndarray:
    pts = S.points if isinstance(S, PairSet) else np.asarray(S, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise CouplingError("pair set must be non-empty")
    return pts


def dev_terms(pts: np.ndarray) -> np.ndarray:
    """Matrix of ``y_a - y_b - max(x_a - x_b, 0)`` for all ordered pairs (a, b)."""
    x, y = pts[:, 0], pts[:, 1]
    return (y[:, None] - y[None, :]) - np.maximum(x[:, None] - x[None, :], 0.0)


def dev_succ(S) -> float:
    """Iso-deviation of a finite non-empty set in the plane."""
    return float(dev_terms(_as_points(S)).max())


def dis_delta_set(S) -> float:
    pts = _as_points(S)
    return float(np.abs(pts[:, 0] - pts[:, 1]).max())


def hausdorff_l1(S, T) -> float:
    """Two-sided Hausdorff distance under the l1 metric on the plane."""
    a, b = _as_points(S), _as_points(T)
    d = np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True, eq=False)
class Plan:
    """A (sub)transport plan: ``mass[i, j]`` sits at ``(row_atoms[i], col_atoms[j])``."""

    row_atoms: np.ndarray
    col_atoms: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.row_atoms, dtype=float).reshape(-1)
        cols = np.asarray(self.col_atoms, dtype=float).reshape(-1)
        mass = np.asarray(self.mass, dtype=float).reshape(rows.size, cols.size)
        if np.any(mass < -PLAN_TOL):
            raise CouplingError("plan mass must be non-negative")
        # float cancellation leaves ~1e-17 crumbs that would read as support
        mass = np.where(mass > PHANTOM_TOL, mass, 0.0)
        for arr in (rows, cols, mass):
            arr.setflags(write=False)
        object.__setattr__(self, "row_atoms", rows)
        object.__setattr__(self, "col_atoms", cols)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_triplets(cls, rows, cols, triplets) -> "Plan":
        mass = np.zeros((len(rows), len(cols)))
        for i, j, w in triplets:
            mass[int(i), int(j)] += w
        return cls(rows, cols, mass)

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def row_sums(self) -> np.ndarray:
        return self.mass.sum(axis=1)

    def col_sums(self) -> np.ndarray:
        return self.mass.sum(axis=0)

    def support_cells(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.mass > 0))]

    def cell_points(self, cells: Iterable[tuple[int, int]]) -> np.ndarray:
        cells = list(cells)
        return np.array([(self.row_atoms[i], self.col_atoms[j]) for i, j in cells], dtype=float).reshape(-1, 2)

    def support(self) -> PairSet:
        return PairSet(self.cell_points(self.support_cells()))

    def mass_on(self, cells: Iterable[tuple[int, int]]) -> float:
        cells = list(cells)
        if not cells:
            return 0.0
        i, j = np.array(cells).T
        return float(self.mass[i, j].sum())

    def restrict(self, cells: Iterable[tuple[int, int]]) -> "Plan":
        keep = np.zeros_like(self.mass, dtype=bool)
        for i, j in cells:
            keep[i, j] = True
        return Plan(self.row_atoms, self.col_atoms, np.where(keep, self.mass, 0.0))

    def is_transport(self, mu: AtomicMeasure, nu: AtomicMeasure, tol: float = PLAN_TOL) -> bool:
        return (
            _same_atoms(self.row_atoms, mu.atoms)
            and _same_atoms(self.col_atoms, nu.atoms)
            and bool(np.all(np.abs(self.row_sums() - mu.weights) <= tol))
            and bool(np.all(np.abs(self.col_sums() - nu.weights) <= tol))
        )

    def is_subtransport(self, mu: AtomicMeasure, nu: AtomicMeasure, tol: float = PLAN_TOL) -> bool:
        return (
            _same_atoms(self.row_atoms, mu.atoms)
            and _same_atoms(self.col_atoms, nu.atoms)
            and bool(np.all(self.row_sums() <= mu.weights + tol))
            and bool(np.all(self.col_sums() <= nu.weights + tol))
        )

    def completed(self, mu: AtomicMeasure, nu: AtomicMeasure) -> "Plan":
        """Extend a subtransport plan to a transport plan.

        The unused marginal mass is coupled independently, which only adds
        mass; ``pi(S)`` can only grow for every cell set ``S``.
        """
        r = mu.weights - self.row_sums()
        c = nu.weights - self.col_sums()
        r[r <= MASS_TOL] = 0.0
        c[c <= MASS_TOL] = 0.0
        left = 0.5 * (r.sum() + c.sum())
        if left <= MASS_TOL:
            return Plan(mu.atoms, nu.atoms, self.mass)
        return Plan(mu.atoms, nu.atoms, self.mass + np.outer(r, c) / left)

    def as_dict(self) -> dict:
        out = {"rows": self.row_atoms.tolist(), "cols": self.col_atoms.tolist()}
        if max(self.mass.shape) > SPARSE_JSON_THRESHOLD:
            out["triplets"] = [[i, j, float(self.mass[i, j])] for i, j in self.support_cells()]
        else:
            out["mass"] = self.mass.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Plan":
        if "mass" in data:
            return cls(data["rows"], data["cols"], data["mass"])
        return cls.from_triplets(data["rows"], data["cols"], data["triplets"])


def _same_atoms(a: np.ndarray, b: np.ndarray) -> bool:
    return a.size == b.size and bool(np.all(np.abs(a - b) <= MATCH_TOL))


def _require_probability(*measures: AtomicMeasure) -> None:
    for m in measures:
        if not m.is_probability:
            raise MeasureError(f"expected a probability measure, got mass {m.mass!r}")


def cell_distances(mu: AtomicMeasure, nu: AtomicMeasure) -> np.ndarray:
    return np.abs(mu.atoms[:, None] - nu.atoms[None, :])


def dis_delta_plan(pi: Plan) -> float:
    """``inf_S max(dis S, 1 - pi(S))`` over distance sublevel sets of the grid."""
    d = np.abs(pi.row_atoms[:, None] - pi.col_atoms[None, :]).ravel()
    w = pi.mass.ravel()
    order = np.argsort(d, kind="stable")
    d, w = d[order], w[order]
    inside = np.cumsum(w)
    # S = empty set: dis = 0, deficit = 1
    best = 1.0
    last = np.r_[d[1:] != d[:-1], True]
    for c, m in zip(d[last], inside[last]):
        best = min(best, max(float(c), 1.0 - float(m)))
    return best


def max_mass_within(mu: AtomicMeasure, nu: AtomicMeasure, c: float) -> tuple[float, np.ndarray]:
    """Largest coupling mass on cells with ``|x - y| <= c``, with its flow triplets."""
    lo = np.searchsorted(nu.atoms, mu.atoms - c - MATCH_TOL, side="left")
    hi = np.searchsorted(nu.atoms, mu.atoms + c + MATCH_TOL, side="right") - 1
    return interval_max_flow(mu.weights, nu.weights, lo, hi)


def prohorov(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    """Prohorov distance via its coupling form.

    ``g(c)`` is the best coupling mass within distance ``c`` of the diagonal.
    The objective ``max(c, 1 - g(c))`` only needs evaluating at grid cell
    distances; ``c`` increases and ``1 - g(c)`` decreases, so a bisection
    finds the crossing index and the optimum is attained at it or just before.
    """
    _require_probability(mu, nu)
    cand = np.unique(np.concatenate(([0.0], cell_distances(mu, nu).ravel())))
    deficit = {}

    def gap(idx: int) -> float:
        if idx not in deficit:
            deficit[idx] = max(0.0, 1.0 - max_mass_within(mu, nu, float(cand[idx]))[0])
        return deficit[idx]

    lo, hi = 0, len(cand) - 1
    # invariant: cand[hi] >= gap(hi); the largest distance always couples everything
    while lo < hi:
        mid = (lo + hi) // 2
        if cand[mid] >= gap(mid):
            hi = mid
        else:
            lo = mid + 1
    best = float(cand[hi])
    if hi > 0:
        best = min(best, gap(hi - 1))
    return best


def strassen_plan(mu: AtomicMeasure, nu: AtomicMeasure) -> tuple[Plan, float]:
    """A transport plan attaining the Prohorov distance, and the threshold used."""
    p = prohorov(mu, nu)
    cand = np.unique(np.concatenate(([0.0], cell_distances(mu, nu).ravel())))
    c = float(cand[np.searchsorted(cand, p + MATCH_TOL, side="right") - 1])
    _, triplets = max_mass_within(mu, nu, c)
    plan = Plan.from_triplets(mu.atoms, nu.atoms, triplets).completed(mu, nu)
    return plan, c


def quantile_coupling(mu: AtomicMeasure, nu: AtomicMeasure) -> Plan:
    """Comonotone coupling: pairs equal quantile levels of ``mu`` and ``nu``.

    The unit interval is cut at the union of both cumulative weight
    sequences; each piece goes to the cell of the two quantiles it covers.
    Breakpoints closer than 1e-12 are merged so rounding never creates
    phantom cells.
    """
    _require_probability(mu, nu)
    ca = mu.cumulative()
    cb = nu.cumulative()
    ca[-1] = cb[-1] = 1.0
    cuts = np.unique(np.concatenate(([0.0], ca, cb)))
    cuts = cuts[np.r_[True, np.diff(cuts) > MASS_TOL]]
    cuts[-1] = 1.0
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    rows = np.minimum(np.searchsorted(ca, mids), mu.size - 1)
    cols = np.minimum(np.searchsorted(cb, mids), nu.size - 1)
    mass = np.zeros((mu.size, nu.size))
    np.add.at(mass, (rows, cols), np.diff(cuts))
    return Plan(mu.atoms, nu.atoms, mass)


def compose_subtransport(pi1: Plan, pi2: Plan) -> Plan:
    """Glue ``pi1`` (mu1 -> mu2) and ``pi2`` (mu2 -> mu3) along mu2.

    For each middle atom y the conditional laws of ``pi1`` given y and of
    ``pi2`` given y are combined independently with weight
    ``min(pr2 pi1 {y}, pr1 pi2 {y})``. The result is a subtransport plan of
    total mass at least ``pi1.total + pi2.total - 1``.
    """
    if not _same_atoms(pi1.col_atoms, pi2.row_atoms):
        raise CouplingError("middle atoms of the two plans do not match")
    into = pi1.col_sums()
    out = pi2.row_sums()
    w = np.minimum(into, out)
    left = np.divide(pi1.mass, into[None, :], out=np.zeros_like(pi1.mass), where=into[None, :] > 0)
    right = np.divide(pi2.mass, out[:, None], out=np.zeros_like(pi2.mass), where=out[:, None] > 0)
    mass = (left * w[None, :]) @ right
    return Plan(pi1.row_atoms, pi2.col_atoms, mass)


def plan_support_dev(pi: Plan) -> float:
    cells = pi.support_cells()
    if not cells:
        return 0.0
    return dev_succ(pi.cell_points(cells))


def is_staircase(pi: Plan) -> bool:
    """Support monotone: i < i' in support implies j <= j'."""
    cells = sorted(pi.support_cells())
    return all(j0 <= j1 for (_, j0), (_, j1) in zip(cells, cells[1:]))


def generic_max_mass_within(mu: AtomicMeasure, nu: AtomicMeasure, c: float) -> float:
    """Same quantity as :func:`max_mass_within`, through the general max-flow routine."""
    d = cell_distances(mu, nu)
    cells = [(int(i), int(j)) for i, j in zip(*np.nonzero(d <= c + MATCH_TOL))]
    return bipartite_max_flow(mu.weights, nu.weights, cells)[0]


__all__ = [
    "PairSet",
    "Plan",
    "CouplingError",
    "dev_terms",
    "dev_succ",
    "dis_delta_set",
    "dis_delta_plan",
    "hausdorff_l1",
    "prohorov",
    "strassen_plan",
    "quantile_coupling",
    "compose_subtransport",
    "plan_support_dev",
    "is_staircase",
    "max_mass_within",
    "generic_max_mass_within",
    "cell_distances",
]

