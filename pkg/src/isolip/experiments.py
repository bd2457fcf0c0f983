"""Desk-scale reproductions: normal law on product graphs, cube and torus
discretizations, and the observable-diameter chain.

Each runner returns an :class:`ExperimentReport` whose ``rows`` have fixed
columns (see ``COLUMNS``) and whose ``checks`` are the assertions the run
is expected to satisfy. Nothing time-dependent goes into a report, so
equal configs give byte-identical output.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

from .coupling import Plan, max_mass_within, prohorov
from .isoorder import (
    DEFAULT_CELL_BUDGET,
    OrderCertificate,
    check_iso_dominant,
    min_s_at_t,
    trimmed_quantile_certificate,
)
from .isoperim import SUBSET_BUDGET, check_ICL
from .lipschitz import (
    ScalarField,
    distance_fields,
    mcshane_family,
    obs_diameter_lower,
    obs_diameter_upper,
    pushforward_field,
)
from .measure import AtomicMeasure, convolve_power, partial_diameter, scale_shift
from .mmspace import (
    FiniteMMSpace,
    Graph,
    complete_graph,
    cycle_graph,
    distance_pushforward,
    make_cube,
    make_product_graph,
    make_torus,
    path_graph,
)

CSV_VERSION = 1
CHECK_TOL = 1e-9
WORKERS_ENV = "ISOLIP_WORKERS"

COLUMNS = {
    "normal-law": ["k", "n", "eps_kn", "mean_shift", "prohorov", "bridge_s", "bridge_t", "kappa", "diam_nu", "diam_gauss"],
    "cube-stability": ["k", "n", "family_size", "min_s_max", "bound", "dominant_at_bound", "prohorov_next", "prohorov_bound"],
    "torus": ["k", "n", "points", "icl", "family_size", "min_s_max", "dominant_at_1", "min_s_max_scaled"],
    "obsdiam-chain": ["k", "n", "kappa", "eps_kn", "diam_nu", "lower_graph", "lower_cube", "upper", "ineq1", "ineq2", "ineq3"],
}


def epsilon_kn(k: int, n: int) -> float:
    """Scale making the l1 norm on ``[k]^n`` unit-variance under the uniform law."""
    return math.sqrt(12.0 / ((k * k - 1) * n))


@dataclass
class FamilySpec:
    distance: bool = True
    mcshane: int = 0
    max_anchors: int = 4
    seed: int = 0

    def build(self, X: FiniteMMSpace) -> list[ScalarField]:
        fields = distance_fields(X) if self.distance else []
        if self.mcshane:
            fields += mcshane_family(X, self.mcshane, self.seed, self.max_anchors)
        return fields


@dataclass
class GaussianGrid:
    """Standard normal law discretized on ``[-half_width, half_width]``.

    Each grid atom takes the mass of its midpoint cell; the tails beyond the
    outer midpoints fold into the end atoms.
    """

    half_width: float = 6.0
    atoms: int = 2401

    def measure(self) -> AtomicMeasure:
        x = np.linspace(-self.half_width, self.half_width, self.atoms)
        edges = np.concatenate(([-np.inf], 0.5 * (x[1:] + x[:-1]), [np.inf]))
        w = np.diff(ndtr(edges))
        w /= w.sum()
        return AtomicMeasure(x, w)


@dataclass
class ExperimentConfig:
    name: str
    k: int = 2
    n: int = 2
    k_list: list = field(default_factory=lambda: [2, 4, 8, 16])
    n_list: list = field(default_factory=lambda: [4, 16, 64, 256])
    kappa_list: list = field(default_factory=lambda: [0.1, 0.25, 0.5])
    kappa: float = 0.5
    factors: list | None = None
    grid: GaussianGrid = field(default_factory=GaussianGrid)
    family: FamilySpec = field(default_factory=FamilySpec)
    seed: int = 0
    budget: int = DEFAULT_CELL_BUDGET
    subset_budget: int = SUBSET_BUDGET
    out: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "grid" in data:
            data["grid"] = GaussianGrid(**data["grid"])
        if "family" in data:
            data["family"] = FamilySpec(**data["family"])
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ExperimentReport:
    experiment: str
    rows: list
    checks: list
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "version": CSV_VERSION,
            "passed": self.passed,
            "meta": self.meta,
            "rows": self.rows,
            "checks": [asdict(c) for c in self.checks],
        }


@dataclass
class ConvergenceRow:
    n: int
    k: int
    eps_kn: float
    mean_shift: float
    prohorov: float
    bridge_s: float
    bridge_t: float
    kappa: float
    diam_nu: float
    diam_gauss: float
    runtime: float = field(default=0.0, compare=False)

    def as_row(self) -> dict:
        # runtime stays out of saved rows so reruns are byte-identical
        return {c: getattr(self, c) for c in COLUMNS["normal-law"]}


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map_rows(fn: Callable, items: Sequence) -> list:
    """Evaluate rows independently; results come back in input order."""
    workers = min(_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def scaled_distance_law(k: int, n: int, scale: float) -> AtomicMeasure:
    """``(scale * d_0)_* m_{[k]^n}`` as an n-fold convolution of uniform ``{0..k-1}``."""
    base = AtomicMeasure.uniform(range(k))
    return scale_shift(convolve_power(base, n), scale)


def prohorov_bridge_certificate(mu: AtomicMeasure, nu: AtomicMeasure, p: float) -> OrderCertificate:
    """Certificate for ``mu >'_(2p, p) nu`` from an optimal Prohorov coupling.

    The cells within distance ``p`` of the diagonal carry mass ``>= 1 - p``
    and have iso-deviation at most twice their diagonal distortion.
    """
    cand = np.abs(mu.atoms[:, None] - nu.atoms[None, :])
    c = float(cand[cand <= p + 1e-12].max()) if np.any(cand <= p + 1e-12) else 0.0
    _, triplets = max_mass_within(mu, nu, c)
    cells = [(int(i), int(j)) for i, j, w in triplets if w > 0]
    sub = Plan.from_triplets(mu.atoms, nu.atoms, triplets)
    return OrderCertificate.build(sub.completed(mu, nu), cells)


def _normal_row(args) -> ConvergenceRow:
    k, n, grid, kappa = args
    started = time.perf_counter()
    eps = epsilon_kn(k, n)
    raw = scaled_distance_law(k, n, eps)
    shift = raw.mean()
    nu = scale_shift(raw, 1.0, -shift)
    gauss = grid.measure()
    p = prohorov(nu, gauss)
    cert = prohorov_bridge_certificate(nu, gauss, p)
    return ConvergenceRow(
        n, k, eps, shift, p, cert.s_achieved, cert.t_achieved, kappa,
        partial_diameter(nu, 1 - kappa), partial_diameter(gauss, 1 - kappa),
        time.perf_counter() - started,
    )


def run_normal_law(k: int, n_list: Sequence[int], grid: GaussianGrid | None = None, kappa: float = 0.5) -> ExperimentReport:
    """Prohorov distance from the centered, rescaled distance law on ``[k]^n`` to the Gaussian grid."""
    grid = grid or GaussianGrid()
    rows = _map_rows(_normal_row, [(k, n, grid, kappa) for n in n_list])
    checks = []
    dists = [r.prohorov for r in rows]
    checks.append(Check(
        "prohorov non-increasing in n",
        all(b <= a + CHECK_TOL for a, b in zip(dists, dists[1:])),
        ", ".join(f"n={r.n}: {r.prohorov:.6f}" for r in rows),
    ))
    for r in rows:
        ok = r.bridge_s <= 2 * r.prohorov + CHECK_TOL and r.bridge_t <= r.prohorov + CHECK_TOL
        checks.append(Check(f"bridge certificate (2p, p) at n={r.n}", ok, f"s={r.bridge_s:.6g}, t={r.bridge_t:.6g}"))
        checks.append(Check(
            f"variance normalization at n={r.n}",
            abs(r.eps_kn**2 * r.n * (k * k - 1) / 12 - 1) <= 1e-12,
        ))
    meta = {
        "recentered": True,
        "note": "each law is translated by minus its mean before comparison; "
                "the uncentered scaled distance law drifts off to infinity",
        "grid": asdict(grid),
    }
    return ExperimentReport("normal-law", [r.as_row() for r in rows], checks, meta)


def _family_min_s(nu: AtomicMeasure, X: FiniteMMSpace, family: Sequence[ScalarField], budget: int) -> float:
    """Largest over the family of the least ``s`` with ``nu >'_(s,0) f_* m``.

    Exact when the grid fits ``budget``; otherwise the quantile certificate's
    deviation, which is an upper bound.
    """
    worst = 0.0
    for f in family:
        mu = pushforward_field(X, f)
        if nu.size * mu.size <= budget:
            s = min_s_at_t(nu, mu, 0.0, budget)
        else:
            s = trimmed_quantile_certificate(nu, mu, math.inf).s_achieved
        worst = max(worst, s)
    return worst


def run_cube_stability(
    k_list: Sequence[int], n: int, family: FamilySpec | None = None, budget: int = DEFAULT_CELL_BUDGET
) -> ExperimentReport:
    """``(1/k) d_0`` on the grid ``(1/k)[k]^n`` against the grid's 1-Lipschitz family."""
    family = family or FamilySpec()
    rows, checks = [], []
    laws = {}
    for k in k_list:
        X = make_cube(k, n, 1.0 / k)
        nu = distance_pushforward(X, 0)
        laws[k] = nu
        fields = family.build(X)
        worst = _family_min_s(nu, X, fields, budget)
        dom = check_iso_dominant(nu, X, 1.0 / k, fields, budget=budget)
        rows.append({
            "k": k, "n": n, "family_size": len(fields), "min_s_max": worst,
            "bound": 1.0 / k, "dominant_at_bound": dom.all_pass,
            "prohorov_next": None, "prohorov_bound": None,
        })
        checks.append(Check(f"min_s <= 1/k at k={k}", worst <= 1.0 / k + CHECK_TOL, f"min_s={worst:.6g}"))
        checks.append(Check(f"1/k-iso-dominant over family at k={k}", dom.all_pass))
    for row, nxt in zip(rows, rows[1:]):
        k, k2 = row["k"], nxt["k"]
        gap = prohorov(laws[k], laws[k2])
        bound = n / k + n / k2
        row["prohorov_next"], row["prohorov_bound"] = gap, bound
        checks.append(Check(f"d_P(nu_{k}, nu_{k2}) <= n/{k} + n/{k2}", gap <= bound + CHECK_TOL, f"{gap:.6g} <= {bound:.6g}"))
    # the trend toward 0 is reported, not asserted: small k can be exact by accident
    trend = [r["min_s_max"] for r in rows]
    return ExperimentReport("cube-stability", rows, checks, {"family": asdict(family), "min_s_trend": trend})


def run_torus(
    k: int,
    n: int,
    family: FamilySpec | None = None,
    budget: int = DEFAULT_CELL_BUDGET,
    subset_budget: int = SUBSET_BUDGET,
) -> ExperimentReport:
    """Distance law on the discrete torus: exhaustive ICL when small, 1-dominance over the family."""
    family = family or FamilySpec()
    X = make_torus(k, n)
    nu = distance_pushforward(X, 0)
    checks = []
    icl = None
    if X.n_points <= subset_budget:
        icl = check_ICL(X, nu, 0.0, subset_budget).passed
        checks.append(Check("ICL(d_0 law) by exhaustion", icl))
    fields = family.build(X)
    dom = check_iso_dominant(nu, X, 1.0, fields, budget=budget)
    worst = _family_min_s(nu, X, fields, budget)
    checks.append(Check("1-iso-dominant over family", dom.all_pass))
    checks.append(Check("min_s <= 1", worst <= 1.0 + CHECK_TOL, f"min_s={worst:.6g}"))
    row = {
        "k": k, "n": n, "points": X.n_points, "icl": icl, "family_size": len(fields),
        "min_s_max": worst, "dominant_at_1": dom.all_pass, "min_s_max_scaled": worst / k,
    }
    return ExperimentReport("torus", [row], checks, {"family": asdict(family), "scaled_space": f"(1/{k}) torus"})


_NAMED = {"K": complete_graph, "P": path_graph, "C": cycle_graph}


def parse_graph(spec) -> Graph:
    """``"K2"``, ``"P3"``, ``"C3"`` or ``{"order": k, "edges": [...]}``."""
    if isinstance(spec, dict):
        return Graph.from_dict(spec)
    spec = str(spec).strip()
    if spec[:1] in _NAMED and spec[1:].isdigit():
        return _NAMED[spec[:1]](int(spec[1:]))
    raise ValueError(f"unknown graph spec {spec!r}; use K<k>, P<k>, C<k> or an adjacency dict")


def run_obsdiam_chain(
    k: int,
    n: int,
    graphs: Sequence | None = None,
    kappa_list: Sequence[float] = (0.1, 0.25, 0.5),
    family: FamilySpec | None = None,
    budget: int = DEFAULT_CELL_BUDGET,
) -> ExperimentReport:
    """Sandwich ``diam(nu_{k,n}; 1-kappa)`` between sampled observable diameters.

    With ``L_G`` and ``L_C`` sampled lower bounds for the graph product and
    the cube (both scaled by ``eps_kn``) and ``D = diam(nu; 1-kappa)``:
    (1) ``L_G <= D + eps``, (2) ``D <= L_C`` (the family holds ``d_0``),
    (3) ``L_C <= D + eps``. Each is implied by the exact chain, so a failure
    is a bug.
    """
    family = family or FamilySpec(mcshane=20)
    factors = [parse_graph(g) for g in graphs] if graphs else [path_graph(k)] * n
    if len(factors) != n or any(g.order != k for g in factors):
        raise ValueError(f"need {n} graph factors of order {k}")
    eps = epsilon_kn(k, n)
    nu = scaled_distance_law(k, n, eps)
    XG = make_product_graph(factors, scale=eps)
    XC = make_cube(k, n, eps)
    fam_g = family.build(XG)
    fam_c = [ScalarField(XC.dist[0], "distance:0")] + family.build(XC)
    dom = check_iso_dominant(nu, XG, eps, fam_g, budget=budget)
    checks = [Check("nu is eps-iso-dominant of the graph product over family", dom.all_pass)]
    rows = []
    for kappa in kappa_list:
        D = partial_diameter(nu, 1 - kappa)
        LG = obs_diameter_lower(XG, kappa, fam_g)
        LC = obs_diameter_lower(XC, kappa, fam_c)
        up = obs_diameter_upper(nu, eps, 0.0, kappa)
        i1 = LG <= up + CHECK_TOL
        i2 = D <= LC + CHECK_TOL
        i3 = LC <= up + CHECK_TOL
        rows.append({
            "k": k, "n": n, "kappa": kappa, "eps_kn": eps, "diam_nu": D,
            "lower_graph": LG, "lower_cube": LC, "upper": up,
            "ineq1": i1, "ineq2": i2, "ineq3": i3,
        })
        checks.append(Check(f"chain (1)-(3) at kappa={kappa}", i1 and i2 and i3,
                            f"L_G={LG:.6g}, D={D:.6g}, L_C={LC:.6g}, D+eps={up:.6g}"))
    meta = {
        "factors": [g.as_dict() for g in factors],
        "family": asdict(family),
        "note": "observable diameters are lower bounds from a sampled family",
    }
    return ExperimentReport("obsdiam-chain", rows, checks, meta)
