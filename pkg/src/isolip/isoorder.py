"""Deciding ``mu >'_(s,t) nu`` between atomic probability measures.

``mu`` iso-dominates ``nu`` with error ``(s, t)`` when some coupling puts
mass at least ``1 - t`` on a cell set ``S`` with ``dev_succ(S) <= s``.

For a fixed ``S`` the best coupling mass on ``S`` is a bipartite max-flow
(a partial coupling on ``S`` always extends to a full one). ``dev_succ(S)
<= s`` is a pairwise condition, so admissible sets are the cliques of a
compatibility graph on grid cells and only maximal cliques matter. The
exact search is Bron-Kerbosch with pivoting, pruned by the max-flow of
``R | P`` as an upper bound. Certificate mode only tries the quantile
coupling with greedy trimming of offending cells.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coupling import (
    Plan,
    _same_atoms,
    compose_subtransport,
    dev_succ,
    dev_terms,
    quantile_coupling,
)
from .flow import bipartite_max_flow
from .lipschitz import LipschitzError, ScalarField, is_one_lipschitz, pushforward_field
from .measure import AtomicMeasure, MeasureError
from .mmspace import FiniteMMSpace

DEFAULT_CELL_BUDGET = 400
DECISION_TOL = 1e-10
COMPAT_TOL = 1e-12


class BudgetError(RuntimeError):
    """Exact search requested on a grid larger than the configured budget."""


class DecisionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class OrderCertificate:
    plan: Plan
    cells: tuple
    s_achieved: float
    t_achieved: float

    @classmethod
    def build(cls, plan: Plan, cells) -> "OrderCertificate":
        cells = tuple(sorted((int(i), int(j)) for i, j in cells))
        if not cells:
            raise DecisionError("certificate needs a non-empty cell set")
        s = dev_succ(plan.cell_points(cells))
        t = max(0.0, 1.0 - plan.mass_on(cells))
        return cls(plan, cells, s, t)

    def verify(self, mu: AtomicMeasure, nu: AtomicMeasure, s: float, t: float, tol: float = DECISION_TOL) -> bool:
        """Recompute everything from the plan and cells and compare with ``(s, t)``."""
        if not self.plan.is_transport(mu, nu):
            return False
        m, n = self.plan.mass.shape
        if not all(0 <= i < m and 0 <= j < n for i, j in self.cells):
            return False
        fresh = OrderCertificate.build(self.plan, self.cells)
        return fresh.s_achieved <= s + tol and fresh.t_achieved <= t + tol

    def subplan(self) -> Plan:
        """The plan restricted to the certified cells (a subtransport plan)."""
        return self.plan.restrict(self.cells)

    def as_dict(self) -> dict:
        return {
            "plan": self.plan.as_dict(),
            "cells": [list(c) for c in self.cells],
            "s_achieved": self.s_achieved,
            "t_achieved": self.t_achieved,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OrderCertificate":
        return cls(
            Plan.from_dict(data["plan"]),
            tuple(tuple(c) for c in data["cells"]),
            float(data["s_achieved"]),
            float(data["t_achieved"]),
        )


@dataclass
class SearchRecord:
    """Why no certificate was produced.

    ``exhaustive`` is True only for a completed exact search, which is a
    genuine refutation; a certificate-mode miss proves nothing.
    """

    mode: str
    exhaustive: bool
    nodes: int
    best_mass: float
    target_mass: float
    note: str = ""

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class OrderDecision:
    holds: bool
    s: float
    t: float
    mode: str
    certificate: OrderCertificate | None = None
    refutation: SearchRecord | None = None

    def as_dict(self) -> dict:
        return {
            "holds": self.holds,
            "s": self.s,
            "t": self.t,
            "mode": self.mode,
            "certificate": self.certificate.as_dict() if self.certificate else None,
            "refutation": self.refutation.as_dict() if self.refutation else None,
        }


def _check_inputs(mu: AtomicMeasure, nu: AtomicMeasure, s: float, t: float) -> None:
    if s < 0 or t < 0:
        raise DecisionError(f"s and t must be non-negative, got s={s!r}, t={t!r}")
    for name, m in (("mu", mu), ("nu", nu)):
        if not m.is_probability:
            raise MeasureError(f"{name} must be a probability measure (mass {m.mass!r})")


def trimmed_quantile_certificate(mu: AtomicMeasure, nu: AtomicMeasure, s: float) -> OrderCertificate:
    """Quantile coupling with its lightest offending cells dropped until ``dev <= s``."""
    plan = quantile_coupling(mu, nu)
    cells = plan.support_cells()
    while True:
        pts = plan.cell_points(cells)
        bad = dev_terms(pts) > s + COMPAT_TOL
        if not bad.any():
            break
        involved = np.flatnonzero(bad.any(axis=0) | bad.any(axis=1))
        masses = np.array([plan.mass[cells[k]] for k in involved])
        # lowest mass first; among equals the later cell goes
        drop = involved[np.lexsort((-involved, masses))[0]]
        cells = cells[:drop] + cells[drop + 1:]
    return OrderCertificate.build(plan, cells)


class _CliqueSearch:
    """Branch and bound over maximal cliques of the cell compatibility graph."""

    def __init__(self, mu: AtomicMeasure, nu: AtomicMeasure, s: float, target: float | None):
        self.mu, self.nu = mu, nu
        self.target = target
        quant = quantile_coupling(mu, nu).mass
        grid = [(i, j) for i in range(mu.size) for j in range(nu.size)]
        # decreasing quantile mass, then row-major
        grid.sort(key=lambda c: (-quant[c], c))
        self.cells = grid
        pts = np.array([(mu.atoms[i], nu.atoms[j]) for i, j in grid], dtype=float)
        d = dev_terms(pts)
        ok = (d <= s + COMPAT_TOL) & (d.T <= s + COMPAT_TOL)
        np.fill_diagonal(ok, False)
        self.nbr = [sum(1 << int(b) for b in np.flatnonzero(row)) for row in ok]
        self.nodes = 0
        self.best_mass = -1.0
        self.best_key = None
        self.best_mask = 0
        self.best_flow = None
        self._cache: dict[int, tuple[float, np.ndarray]] = {}

    def _flow(self, mask: int) -> tuple[float, np.ndarray]:
        hit = self._cache.get(mask)
        if hit is None:
            cells = [self.cells[b] for b in _bits(mask)]
            hit = bipartite_max_flow(self.mu.weights, self.nu.weights, cells)
            self._cache[mask] = hit
        return hit

    def _offer(self, mask: int, value: float, flow: np.ndarray) -> None:
        cells = [self.cells[b] for b in _bits(mask) if flow[self.cells[b]] > 0] or [self.cells[_lowbit(mask)]]
        key = (-value, dev_succ(np.array([(self.mu.atoms[i], self.nu.atoms[j]) for i, j in cells])), len(cells))
        if self.best_key is None or value > self.best_mass + 1e-15 or (
            abs(value - self.best_mass) <= 1e-15 and key < self.best_key
        ):
            self.best_mass, self.best_key, self.best_mask, self.best_flow = value, key, mask, flow

    def _done(self) -> bool:
        return self.target is not None and self.best_mass >= self.target - DECISION_TOL

    def _is_clique(self, P: int) -> bool:
        rest = P
        while rest:
            v = _lowbit(rest)
            rest &= rest - 1
            if rest & ~self.nbr[v]:
                return False
        return True

    def _expand(self, R: int, P: int, X: int) -> None:
        self.nodes += 1
        bound, flow = self._flow(R | P)
        if bound <= self.best_mass + 1e-15 and self.best_key is not None:
            return
        if self.target is not None and bound < self.target - DECISION_TOL:
            return
        if self._is_clique(P):
            self._offer(R | P, bound, flow)
            return
        pivot_pool = P | X
        u = max(_bits(pivot_pool), key=lambda v: (_popcount(P & self.nbr[v]), -v))
        for v in _bits(P & ~self.nbr[u]):
            bit = 1 << v
            self._expand(R | bit, P & self.nbr[v], X & self.nbr[v])
            if self._done():
                return
            P &= ~bit
            X |= bit

    def run(self, seed_cells: Sequence[tuple[int, int]] = ()) -> None:
        if seed_cells:
            index = {c: k for k, c in enumerate(self.cells)}
            mask = sum(1 << index[c] for c in seed_cells)
            value, flow = self._flow(mask)
            self._offer(mask, value, flow)
            if self._done():
                return
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 4 * len(self.cells) + 100))
        try:
            self._expand(0, (1 << len(self.cells)) - 1, 0)
        finally:
            sys.setrecursionlimit(limit)

    def certificate(self) -> OrderCertificate:
        sub = Plan(self.mu.atoms, self.nu.atoms, self.best_flow)
        plan = sub.completed(self.mu, self.nu)
        cells = [self.cells[b] for b in _bits(self.best_mask)]
        positive = [c for c in cells if plan.mass[c] > 0]
        return OrderCertificate.build(plan, positive or cells[:1])


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _lowbit(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _check_budget(mu: AtomicMeasure, nu: AtomicMeasure, budget: int) -> None:
    cells = mu.size * nu.size
    if cells > budget:
        raise BudgetError(f"exact search over {cells} cells exceeds the budget of {budget}")


def max_order_mass(
    mu: AtomicMeasure, nu: AtomicMeasure, s: float, budget: int = DEFAULT_CELL_BUDGET
) -> tuple[float, OrderCertificate]:
    """``max pi(S)`` over couplings ``pi`` and cell sets with ``dev_succ(S) <= s``."""
    _check_inputs(mu, nu, s, 0.0)
    _check_budget(mu, nu, budget)
    seed = trimmed_quantile_certificate(mu, nu, s)
    search = _CliqueSearch(mu, nu, s, target=None)
    search.run(seed.cells)
    return search.best_mass, search.certificate()


def decide_iso_order(
    mu: AtomicMeasure,
    nu: AtomicMeasure,
    s: float,
    t: float,
    mode: str = "exact",
    budget: int = DEFAULT_CELL_BUDGET,
) -> OrderDecision:
    """Does ``mu`` iso-dominate ``nu`` with error ``(s, t)``?

    ``mode="exact"`` settles the question either way (within ``budget``
    grid cells). ``mode="certificate"`` only looks for a quick witness; a
    negative answer there carries a non-exhaustive record.
    """
    _check_inputs(mu, nu, s, t)
    if mode not in ("exact", "certificate"):
        raise DecisionError(f"unknown mode {mode!r}")
    if mode == "exact":
        _check_budget(mu, nu, budget)
    target = 1.0 - t
    quick = trimmed_quantile_certificate(mu, nu, s)
    if quick.t_achieved <= t + DECISION_TOL:
        return OrderDecision(True, s, t, mode, certificate=quick)
    if mode == "certificate":
        record = SearchRecord(
            "certificate", False, 1, 1.0 - quick.t_achieved, target,
            "quantile coupling with trimming found no witness; this is not a refutation",
        )
        return OrderDecision(False, s, t, mode, refutation=record)
    search = _CliqueSearch(mu, nu, s, target)
    search.run(quick.cells)
    if search.best_mass >= target - DECISION_TOL:
        return OrderDecision(True, s, t, mode, certificate=search.certificate())
    record = SearchRecord(
        "exact", True, search.nodes, max(search.best_mass, 0.0), target,
        "no cell set of iso-deviation <= s carries enough coupling mass",
    )
    return OrderDecision(False, s, t, mode, refutation=record)


def candidate_deviations(mu: AtomicMeasure, nu: AtomicMeasure) -> np.ndarray:
    """Every value ``dev_succ(S)`` can take on a cell set of the grid."""
    pts = np.array([(a, b) for a in mu.atoms for b in nu.atoms], dtype=float)
    d = dev_terms(pts).ravel()
    return np.unique(np.concatenate(([0.0], d[d > 0])))


def min_s_at_t(
    mu: AtomicMeasure,
    nu: AtomicMeasure,
    t: float,
    budget: int = DEFAULT_CELL_BUDGET,
    return_certificate: bool = False,
):
    """Smallest ``s`` with ``mu >'_(s,t) nu``; attained on the finite candidate set."""
    _check_inputs(mu, nu, 0.0, t)
    _check_budget(mu, nu, budget)
    cand = candidate_deviations(mu, nu)
    quant_dev = dev_succ(quantile_coupling(mu, nu).support())
    hi = int(np.searchsorted(cand, quant_dev - COMPAT_TOL, side="left"))
    hi = min(hi, len(cand) - 1)
    lo = 0
    found = None
    while lo < hi:
        mid = (lo + hi) // 2
        dec = decide_iso_order(mu, nu, float(cand[mid]), t, "exact", budget)
        if dec.holds:
            hi, found = mid, dec.certificate
        else:
            lo = mid + 1
    s = float(cand[hi])
    if not return_certificate:
        return s
    if found is None or found.s_achieved > s + DECISION_TOL:
        found = decide_iso_order(mu, nu, s, t, "exact", budget).certificate
    return s, found


def classic_iso_order(mu: AtomicMeasure, nu: AtomicMeasure) -> tuple[bool, dict | None]:
    """Look for a monotone non-decreasing 1-Lipschitz ``f`` with ``f_* mu = nu``.

    Such a map can only be the one read off the comonotone coupling, so the
    coupling must be single-valued on rows and the resulting map 1-Lipschitz
    between consecutive atoms.
    """
    for name, m in (("mu", mu), ("nu", nu)):
        if not m.is_probability:
            raise MeasureError(f"{name} must be a probability measure")
    plan = quantile_coupling(mu, nu)
    targets = []
    for row in plan.mass:
        cols = np.flatnonzero(row > 0)
        if cols.size != 1:
            return False, None
        targets.append(float(nu.atoms[cols[0]]))
    f = np.array(targets)
    if np.any(np.abs(np.diff(f)) > np.diff(mu.atoms) + COMPAT_TOL):
        return False, None
    return True, dict(zip(mu.atoms.tolist(), f.tolist()))


@dataclass
class FieldResult:
    index: int
    provenance: str
    holds: bool
    method: str
    s_achieved: float | None = None
    t_achieved: float | None = None
    refutation: SearchRecord | None = None
    certificate: OrderCertificate | None = None

    def as_dict(self, with_certificates: bool = False) -> dict:
        out = {
            "index": self.index,
            "provenance": self.provenance,
            "holds": self.holds,
            "method": self.method,
            "s_achieved": self.s_achieved,
            "t_achieved": self.t_achieved,
            "refutation": self.refutation.as_dict() if self.refutation else None,
        }
        if with_certificates and self.certificate is not None:
            out["certificate"] = self.certificate.as_dict()
        return out


@dataclass
class DominanceReport:
    eps: float
    t: float
    results: list = field(default_factory=list)
    verdict: str = "certified over supplied family"
    vacuous: bool = False

    @property
    def all_pass(self) -> bool:
        return all(r.holds for r in self.results)

    @property
    def failures(self) -> list:
        return [r for r in self.results if not r.holds]

    @property
    def unresolved(self) -> list:
        return [r for r in self.failures if r.refutation is not None and not r.refutation.exhaustive]

    def as_dict(self) -> dict:
        return {
            "eps": self.eps,
            "t": self.t,
            "verdict": self.verdict,
            "vacuous": self.vacuous,
            "all_pass": self.all_pass,
            "results": [r.as_dict() for r in self.results],
        }


def check_iso_dominant(
    nu: AtomicMeasure,
    X: FiniteMMSpace,
    eps: float,
    family: Sequence[ScalarField],
    t: float = 0.0,
    budget: int = DEFAULT_CELL_BUDGET,
) -> DominanceReport:
    """Test ``nu >'_(eps,t) f_* m_X`` for each field in ``family``.

    The 1-measurement of X is infinite; a pass only certifies the supplied
    family. Each field is tried with the quick certificate first and the
    exact search when the grid fits the budget.
    """
    for f in family:
        ok, pair = is_one_lipschitz(X, f)
        if not ok:
            raise LipschitzError(f"family member {f.provenance!r} is not 1-Lipschitz (pair {pair})")
    report = DominanceReport(eps, t, vacuous=not family)
    if not family:
        report.verdict = "vacuous: empty family"
    for k, f in enumerate(family):
        mu = pushforward_field(X, f)
        dec = decide_iso_order(nu, mu, eps, t, "certificate")
        method = "certificate"
        if not dec.holds and nu.size * mu.size <= budget:
            dec = decide_iso_order(nu, mu, eps, t, "exact", budget)
            method = "exact"
        cert = dec.certificate
        report.results.append(
            FieldResult(
                k, f.provenance, dec.holds, method,
                cert.s_achieved if cert else None,
                cert.t_achieved if cert else None,
                dec.refutation, cert,
            )
        )
    return report


def compose_certificates(
    first: OrderCertificate,
    second: OrderCertificate,
    mu1: AtomicMeasure,
    mu3: AtomicMeasure,
) -> OrderCertificate:
    """Chain ``mu1 >'_(s1,t1) mu2`` and ``mu2 >'_(s2,t2) mu3`` into one certificate for mu1, mu3."""
    if not _same_atoms(first.plan.col_atoms, second.plan.row_atoms):
        raise DecisionError("certificates do not share the middle measure")
    glued = compose_subtransport(first.subplan(), second.subplan())
    cells = glued.support_cells()
    plan = glued.completed(mu1, mu3)
    return OrderCertificate.build(plan, cells)
