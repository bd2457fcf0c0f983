"""Exhaustive isoperimetric checks on small finite spaces.

Every subset ``A`` of X is a bitmask. Tables over all ``2^|X|`` masks are
filled by doubling: the masks with top bit ``b`` are the masks below
``2^b`` plus point ``b``, so ``m(A)`` and the neighborhood mask of ``A``
extend by one vectorized operation per point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .isoorder import DEFAULT_CELL_BUDGET, DominanceReport, check_iso_dominant
from .lipschitz import ScalarField
from .measure import AtomicMeasure, cdf_eval, support_gaps
from .mmspace import RADIUS_TOL, FiniteMMSpace

SUBSET_BUDGET = 22
VOLUME_TOL = 1e-12
_CHUNK = 11


class SubsetBudgetError(RuntimeError):
    pass


def _indices(mask: int) -> tuple:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


class SubsetTables:
    """Volume and neighborhood-mass tables over all subsets of a small space."""

    def __init__(self, X: FiniteMMSpace, budget: int = SUBSET_BUDGET):
        n = X.n_points
        if n > budget:
            raise SubsetBudgetError(
                f"exhaustive subset enumeration over {n} points exceeds the budget of {budget}; "
                "a sampled check would not be exact"
            )
        self.X = X
        self.n = n
        self.volume = self._doubling_sum(X.weights)
        lo = X.weights[: min(n, _CHUNK)]
        hi = X.weights[_CHUNK:]
        self._low = self._doubling_sum(lo)
        self._high = self._doubling_sum(hi) if hi.size else np.zeros(1)
        self._nbr_mass: dict[float, np.ndarray] = {}
        self._profiles: dict[float, "ProfileTable"] = {}

    @staticmethod
    def _doubling_sum(w: np.ndarray) -> np.ndarray:
        out = np.zeros(1 << w.size)
        for b, wb in enumerate(w):
            half = 1 << b
            out[half: 2 * half] = out[:half] + wb
        return out

    def _mask_mass(self, masks: np.ndarray) -> np.ndarray:
        low = masks & ((1 << _CHUNK) - 1)
        high = masks >> _CHUNK
        return self._low[low] + self._high[high]

    def neighborhood_mass(self, r: float) -> np.ndarray:
        """``m(B_r(A))`` for every mask ``A``."""
        key = round(float(r), 12)
        hit = self._nbr_mass.get(key)
        if hit is not None:
            return hit
        near = self.X.dist <= r + RADIUS_TOL
        balls = [int(sum(1 << int(j) for j in np.flatnonzero(row))) for row in near]
        masks = np.zeros(1 << self.n, dtype=np.int64)
        for b, ball in enumerate(balls):
            half = 1 << b
            masks[half: 2 * half] = masks[:half] | ball
        mass = self._mask_mass(masks)
        self._nbr_mass[key] = mass
        return mass


@dataclass
class ProfileTable:
    """``I_X^eps(v)`` for every achievable volume ``v``, with a minimizing subset."""

    eps: float
    volumes: np.ndarray
    values: np.ndarray
    witnesses: list

    def lookup(self, v: float) -> int | None:
        k = int(np.searchsorted(self.volumes, v - VOLUME_TOL))
        if k < len(self.volumes) and abs(self.volumes[k] - v) <= VOLUME_TOL:
            return k
        return None

    def __call__(self, v: float) -> float:
        k = self.lookup(v)
        if k is None:
            raise KeyError(f"volume {v!r} is not achieved by any subset")
        return float(self.values[k])

    def as_dict(self) -> dict:
        return {
            "eps": self.eps,
            "entries": [
                {"volume": float(v), "value": float(x), "witness": list(w)}
                for v, x, w in zip(self.volumes, self.values, self.witnesses)
            ],
        }


def _profile(tables: SubsetTables, eps: float) -> ProfileTable:
    key = round(float(eps), 12)
    if key not in tables._profiles:
        tables._profiles[key] = _build_profile(tables, eps)
    return tables._profiles[key]


def _build_profile(tables: SubsetTables, eps: float) -> ProfileTable:
    vol = tables.volume
    nbr = tables.neighborhood_mass(eps)
    order = np.argsort(vol, kind="stable")
    sv = vol[order]
    group = np.concatenate(([0], np.cumsum(np.diff(sv) > VOLUME_TOL)))
    # within each volume class: smallest neighborhood mass, then smallest mask
    pick = np.lexsort((order, nbr[order], group))
    first = np.r_[True, group[pick][1:] != group[pick][:-1]]
    chosen = order[pick[first]]
    starts = np.r_[0, np.flatnonzero(np.diff(group)) + 1]
    volumes = sv[starts]
    return ProfileTable(float(eps), volumes, nbr[chosen], [_indices(int(m)) for m in chosen])


def isoperimetric_profile(X: FiniteMMSpace, eps: float, budget: int = SUBSET_BUDGET) -> ProfileTable:
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps!r}")
    return _profile(SubsetTables(X, budget), eps)


@dataclass
class ICLReport:
    eps: float
    passed: bool
    pairs_checked: int
    violation: dict | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _check_icl(tables: SubsetTables, nu: AtomicMeasure, eps: float) -> ICLReport:
    atoms = nu.atoms
    F = np.minimum(nu.cumulative(), 1.0)
    pairs = 0
    for ia, a in enumerate(atoms):
        for ib in range(ia, len(atoms)):
            b = atoms[ib]
            prof = _profile(tables, float(b - a + eps))
            # cheapest neighborhood among sets at least as heavy as F(a)
            heavy = np.flatnonzero((prof.volumes >= F[ia] - VOLUME_TOL) & (prof.volumes > VOLUME_TOL))
            pairs += 1
            if heavy.size == 0:
                continue
            k = heavy[int(np.argmin(prof.values[heavy]))]
            if prof.values[k] < F[ib] - VOLUME_TOL:
                return ICLReport(eps, False, pairs, {
                    "a": float(a),
                    "b": float(b),
                    "A": list(prof.witnesses[k]),
                    "F_b": float(F[ib]),
                    "neighborhood_mass": float(prof.values[k]),
                    "radius": float(b - a + eps),
                })
    return ICLReport(eps, True, pairs)


def check_ICL(X: FiniteMMSpace, nu: AtomicMeasure, eps: float, budget: int = SUBSET_BUDGET) -> ICLReport:
    """``F(b) <= m(B_{b-a+eps}(A))`` for all atoms ``a <= b`` and all ``A`` with ``m(A) >= F(a)``."""
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps!r}")
    if not nu.is_probability:
        raise ValueError("nu must be a probability measure")
    return _check_icl(SubsetTables(X, budget), nu, eps)


@dataclass
class ICPlusReport:
    eps: float
    passed: bool
    entries: list = field(default_factory=list)

    @property
    def vacuous_at(self) -> list:
        return [e["t"] for e in self.entries if e["status"] == "vacuous"]

    def as_dict(self) -> dict:
        return {"eps": self.eps, "passed": self.passed, "entries": self.entries}


def _check_ic_plus(tables: SubsetTables, nu: AtomicMeasure, eps: float) -> ICPlusReport:
    gaps = support_gaps(nu)
    image = _profile(tables, 0.0)
    report = ICPlusReport(eps, True)
    for k in range(nu.size - 1):
        t = float(nu.atoms[k])
        V_t = cdf_eval(nu, t)
        step = float(gaps.delta_plus[k])
        if image.lookup(V_t) is None:
            report.entries.append({"t": t, "status": "vacuous", "V": V_t})
            continue
        r = step + eps
        lhs = _profile(tables, r)(V_t)
        rhs = cdf_eval(nu, float(nu.atoms[k + 1]))
        ok = lhs >= rhs - VOLUME_TOL
        entry = {"t": t, "status": "pass" if ok else "fail", "V": V_t, "radius": r, "profile": lhs, "V_next": rhs}
        if not ok:
            report.passed = False
            prof = _profile(tables, r)
            entry["witness"] = list(prof.witnesses[prof.lookup(V_t)])
        report.entries.append(entry)
    return report


def check_IC_plus(X: FiniteMMSpace, nu: AtomicMeasure, eps: float, budget: int = SUBSET_BUDGET) -> ICPlusReport:
    """``I_X^{delta+(t)+eps}(V(t)) >= V(t + delta+(t))`` at every non-top atom with ``V(t)`` achievable."""
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps!r}")
    return _check_ic_plus(SubsetTables(X, budget), nu, eps)


@dataclass
class BridgeReport:
    hypotheses_ok: bool
    hypothesis_notes: list = field(default_factory=list)
    ic_plus: ICPlusReport | None = None
    icl: ICLReport | None = None
    icl_eps: float | None = None
    implication_holds: bool | None = None

    def as_dict(self) -> dict:
        return {
            "hypotheses_ok": self.hypotheses_ok,
            "hypothesis_notes": self.hypothesis_notes,
            "ic_plus": self.ic_plus.as_dict() if self.ic_plus else None,
            "icl": self.icl.as_dict() if self.icl else None,
            "icl_eps": self.icl_eps,
            "implication_holds": self.implication_holds,
        }


def icl_from_ic_plus_bound(
    X: FiniteMMSpace, nu: AtomicMeasure, eps: float, budget: int = SUBSET_BUDGET
) -> BridgeReport:
    """Cross-check that IC+_eps passing forces ICL at ``(N - 2) * eps``."""
    notes = []
    if not X.is_uniform:
        notes.append("measure on X is not uniform")
    scaled = nu.weights * X.n_points
    if np.any(np.abs(scaled - np.round(scaled)) > 1e-9):
        notes.append(f"atom weights of nu are not multiples of 1/{X.n_points}")
    if notes:
        return BridgeReport(False, notes)
    tables = SubsetTables(X, budget)
    ic = _check_ic_plus(tables, nu, eps)
    # for a single atom the bound is vacuous; clamp the radius at eps * 0
    icl_eps = max(nu.size - 2, 0) * eps
    icl = _check_icl(tables, nu, icl_eps)
    return BridgeReport(True, notes, ic, icl, icl_eps, (not ic.passed) or icl.passed)


@dataclass
class TheoremReport:
    applied: bool
    conclusion: str
    Delta: float | None = None
    side_condition: str = ""
    icl: ICLReport | None = None
    dominance: DominanceReport | None = None
    branch: str = ""

    def as_dict(self) -> dict:
        return {
            "applied": self.applied,
            "conclusion": self.conclusion,
            "Delta": self.Delta,
            "side_condition": self.side_condition,
            "branch": self.branch,
            "icl": self.icl.as_dict() if self.icl else None,
            "dominance": self.dominance.as_dict() if self.dominance else None,
        }


def icl_to_dominant(
    X: FiniteMMSpace,
    nu: AtomicMeasure,
    eps: float,
    family: Sequence[ScalarField],
    budget: int = SUBSET_BUDGET,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> TheoremReport:
    """ICL_eps(nu) on X should make nu an ``(eps + Delta)``-iso-dominant; test it on ``family``."""
    lightest = float(X.weights.min())
    bottom = float(nu.weights[0])
    if bottom > lightest + VOLUME_TOL:
        return TheoremReport(
            False, "side condition fails: theorem not applied",
            side_condition=f"nu(min supp) = {bottom!r} exceeds the lightest point mass {lightest!r}",
        )
    Delta = support_gaps(nu).Delta
    icl = check_ICL(X, nu, eps, budget)
    if not icl.passed:
        return TheoremReport(False, "ICL fails: theorem not applicable", Delta, "ok", icl)
    dom = check_iso_dominant(nu, X, eps + Delta, family, budget=cell_budget)
    if dom.all_pass:
        conclusion = "dominance confirmed over supplied family"
    elif any(r.refutation is not None and r.refutation.exhaustive for r in dom.failures):
        conclusion = "VIOLATION: exact refutation despite ICL"
    else:
        conclusion = "unresolved: some members exceeded the exact budget"
    return TheoremReport(True, conclusion, Delta, "ok", icl, dom)


def dominant_to_icl(
    X: FiniteMMSpace,
    nu: AtomicMeasure,
    eps: float,
    family: Sequence[ScalarField],
    budget: int = SUBSET_BUDGET,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> TheoremReport:
    """Family-level eps-dominance should give ICL_{2 eps}; a miss means the family under-samples."""
    branch = "singleton support" if nu.size == 1 else "every support point is an atom"
    dom = check_iso_dominant(nu, X, eps, family, budget=cell_budget)
    if not dom.all_pass:
        return TheoremReport(False, "premise not established on the family", dominance=dom, branch=branch)
    icl = check_ICL(X, nu, 2 * eps, budget)
    conclusion = "ICL at 2*eps confirmed" if icl.passed else "inconclusive premise"
    return TheoremReport(True, conclusion, support_gaps(nu).Delta, "ok", icl, dom, branch)
