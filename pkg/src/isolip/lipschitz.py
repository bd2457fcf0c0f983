"""1-Lipschitz functions on finite spaces, their pushforwards and diameter bounds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measure import AtomicMeasure, partial_diameter
from .mmspace import FiniteMMSpace

LIP_TOL = 1e-12


class LipschitzError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ScalarField:
    values: np.ndarray
    provenance: str = "user"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def as_dict(self) -> dict:
        return {"values": self.values.tolist(), "provenance": self.provenance}

    @classmethod
    def from_dict(cls, data: dict) -> "ScalarField":
        return cls(data["values"], data.get("provenance", "user"))


def _check_size(X: FiniteMMSpace, f: ScalarField) -> None:
    if f.values.size != X.n_points:
        raise LipschitzError(f"field has {f.values.size} values for a space of {X.n_points} points")


def is_one_lipschitz(X: FiniteMMSpace, f: ScalarField) -> tuple[bool, tuple[int, int] | None]:
    """Exact pairwise check; on failure also returns the worst pair."""
    _check_size(X, f)
    excess = np.abs(f.values[:, None] - f.values[None, :]) - X.dist
    worst = np.unravel_index(int(np.argmax(excess)), excess.shape)
    if excess[worst] > LIP_TOL:
        return False, (int(worst[0]), int(worst[1]))
    return True, None


def distance_field(X: FiniteMMSpace, p: int) -> ScalarField:
    return ScalarField(X.dist[p], f"distance:{p}")


def distance_fields(X: FiniteMMSpace) -> list[ScalarField]:
    return [distance_field(X, p) for p in range(X.n_points)]


def mcshane_random(
    X: FiniteMMSpace,
    anchors: int,
    seed: int,
    offset_range: tuple[float, float] | None = None,
) -> ScalarField:
    """``f(x) = min_j (c_j + d(x, p_j))`` for random anchors ``p_j`` and offsets ``c_j``.

    Offsets default to ``[-diam X, diam X]``. A minimum of 1-Lipschitz
    functions is 1-Lipschitz, so every output is admissible.
    """
    if anchors < 1:
        raise LipschitzError("need at least one anchor")
    rng = np.random.default_rng(seed)
    lo, hi = offset_range if offset_range is not None else (-X.diameter, X.diameter)
    pts = rng.choice(X.n_points, size=anchors, replace=anchors > X.n_points)
    offsets = rng.uniform(lo, hi, size=anchors) if hi > lo else np.full(anchors, float(lo))
    values = (offsets[:, None] + X.dist[pts, :]).min(axis=0)
    return ScalarField(values, f"mcshane:{seed}:{anchors}")


def mcshane_family(X: FiniteMMSpace, count: int, seed: int, max_anchors: int = 4) -> list[ScalarField]:
    """``count`` seeded McShane fields with 1..max_anchors anchors each."""
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**31 - 1, size=count)
    anchors = rng.integers(1, max_anchors + 1, size=count)
    return [mcshane_random(X, int(a), int(s)) for a, s in zip(anchors, seeds)]


def pushforward_field(X: FiniteMMSpace, f: ScalarField) -> AtomicMeasure:
    ok, pair = is_one_lipschitz(X, f)
    if not ok:
        raise LipschitzError(f"field is not 1-Lipschitz; worst pair {pair}")
    return AtomicMeasure.from_values(f.values, X.weights)


def obs_diameter_lower(X: FiniteMMSpace, kappa: float, family: Sequence[ScalarField]) -> float:
    """Lower bound on ``ObsDiam(X; -kappa)`` from a finite family of 1-Lipschitz fields."""
    if not 0.0 <= kappa <= 1.0:
        raise LipschitzError(f"kappa must lie in [0, 1], got {kappa!r}")
    if not family:
        raise LipschitzError("family must be non-empty")
    return max(partial_diameter(pushforward_field(X, f), 1.0 - kappa) for f in family)


def obs_diameter_upper(nu: AtomicMeasure, s: float, t: float, kappa: float) -> float:
    """Upper bound ``diam(nu; 1 - kappa) + s`` on ``ObsDiam(X; -kappa - t)``.

    Valid when ``nu`` is an ``(s, t)``-iso-dominant of X; checking that
    premise is the caller's job.
    """
    if kappa < 0:
        raise LipschitzError(f"kappa must be >= 0, got {kappa!r}")
    alpha = max(0.0, 1.0 - kappa)
    return partial_diameter(nu, alpha) + s


@dataclass(frozen=True)
class ObsDiamInterval:
    """``ObsDiam(X; -kappa)`` bracketed, never as a point value."""

    kappa: float
    lower: float
    upper: float
    lower_source: str
    upper_source: str

    @property
    def consistent(self) -> bool:
        return self.lower <= self.upper + 1e-9
