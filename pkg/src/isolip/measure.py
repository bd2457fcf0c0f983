"""Finitely-supported Borel measures on the real line.

An :class:`AtomicMeasure` is ``sum_i w_i * delta_{a_i}`` with strictly
increasing atoms and positive weights. Everything here is pure; measures
are immutable once built.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MERGE_TOL = 1e-12
MASS_TOL = 1e-12


class MeasureError(ValueError):
    """Raised on malformed measure data or out-of-range arguments."""


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape != weights.shape:
            raise MeasureError(
                f"atoms and weights differ in length ({atoms.size} vs {weights.size})"
            )
        if atoms.size == 0:
            raise MeasureError("a measure needs at least one atom")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise MeasureError("atoms and weights must be finite")
        bad = np.flatnonzero(weights <= 0)
        if bad.size:
            i = int(bad[0])
            raise MeasureError(f"weight at index {i} is {weights[i]!r}; weights must be > 0")
        steps = np.diff(atoms)
        unsorted = np.flatnonzero(steps < -MERGE_TOL)
        if unsorted.size:
            i = int(unsorted[0])
            raise MeasureError(
                f"atoms must be sorted: atoms[{i}]={atoms[i]!r} > atoms[{i + 1}]={atoms[i + 1]!r}"
            )
        if np.any(steps <= MERGE_TOL):
            atoms, weights = _merge_close(atoms, weights)
        total = float(weights.sum())
        if total > 1.0 + MASS_TOL:
            raise MeasureError(f"total mass {total!r} exceeds 1")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_values(cls, values: Iterable[float], weights: Iterable[float] | None = None) -> "AtomicMeasure":
        """Pushforward-style constructor: unsorted values, repeated values merged."""
        values = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
        if weights is None:
            weights = np.full(values.size, 1.0 / max(values.size, 1))
        weights = np.asarray(weights, dtype=float)
        keep = weights > 0
        values, weights = values[keep], weights[keep]
        order = np.argsort(values, kind="stable")
        return cls(values[order], weights[order])

    @classmethod
    def dirac(cls, x: float = 0.0) -> "AtomicMeasure":
        return cls([x], [1.0])

    @classmethod
    def uniform(cls, points: Sequence[float]) -> "AtomicMeasure":
        return cls.from_values(points)

    @property
    def size(self) -> int:
        return int(self.atoms.size)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def is_probability(self) -> bool:
        return abs(self.mass - 1.0) <= MASS_TOL

    def mean(self) -> float:
        return float(np.dot(self.atoms, self.weights) / self.mass)

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.weights)

    def allclose(self, other: "AtomicMeasure", tol: float = 1e-12) -> bool:
        return (
            self.size == other.size
            and bool(np.all(np.abs(self.atoms - other.atoms) <= tol))
            and bool(np.all(np.abs(self.weights - other.weights) <= tol))
        )

    def as_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "AtomicMeasure":
        try:
            atoms, weights = data["atoms"], data["weights"]
        except (KeyError, TypeError) as exc:
            raise MeasureError('measure JSON needs "atoms" and "weights" arrays') from exc
        atoms = np.asarray(atoms, dtype=float)
        unsorted = np.flatnonzero(np.diff(atoms) <= 0)
        if unsorted.size:
            i = int(unsorted[0])
            raise MeasureError(
                f"atoms must be strictly increasing: atoms[{i}]={atoms[i]!r}, atoms[{i + 1}]={atoms[i + 1]!r}"
            )
        return cls(atoms, weights)

    def to_json(self) -> str:
        return json.dumps(self.as_dict())

    @classmethod
    def from_json(cls, text: str) -> "AtomicMeasure":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        pairs = ", ".join(f"{a:g}:{w:.6g}" for a, w in zip(self.atoms, self.weights))
        return f"AtomicMeasure({{{pairs}}})"


def _merge_close(atoms: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Clusters chains of near-equal atoms; the first atom of a chain represents it.
    starts = np.concatenate(([True], np.diff(atoms) > MERGE_TOL))
    idx = np.cumsum(starts) - 1
    merged = np.zeros(int(idx[-1]) + 1)
    np.add.at(merged, idx, weights)
    return atoms[starts].copy(), merged


def _require_probability(mu: AtomicMeasure, name: str = "mu") -> None:
    if not mu.is_probability:
        raise MeasureError(f"{name} must be a probability measure (mass {mu.mass!r})")


def cdf_eval(mu: AtomicMeasure, t: float) -> float:
    """``mu((-inf, t])``."""
    k = int(np.searchsorted(mu.atoms, t, side="right"))
    if k == 0:
        return 0.0
    if k == mu.size:
        return mu.mass if not mu.is_probability else 1.0
    return float(mu.weights[:k].sum())


def generalized_inverse(mu: AtomicMeasure, s: float, c: float = 0.0) -> float:
    """Left-continuous quantile ``inf{t : s <= F(t)}``; returns ``c`` at ``s == 0``."""
    if not 0.0 <= s <= 1.0:
        raise MeasureError(f"s must lie in [0, 1], got {s!r}")
    _require_probability(mu)
    if s == 0.0:
        return float(c)
    cum = mu.cumulative()
    k = int(np.searchsorted(cum, s - MASS_TOL, side="left"))
    return float(mu.atoms[min(k, mu.size - 1)])


def partial_diameter(mu: AtomicMeasure, alpha: float) -> float:
    """Smallest ``b - a`` over atom windows ``[a, b]`` carrying mass >= alpha.

    ``diam`` of the empty set is 0, so ``alpha == 0`` gives 0.
    """
    if not 0.0 <= alpha <= 1.0:
        raise MeasureError(f"alpha must lie in [0, 1], got {alpha!r}")
    if alpha <= float(mu.weights.max()) + MASS_TOL:
        return 0.0
    cum = np.concatenate(([0.0], mu.cumulative()))
    best = math.inf
    j = 0
    n = mu.size
    # Two pointers: for each left end i, the smallest right end j with enough mass.
    for i in range(n):
        j = max(j, i)
        while j < n and cum[j + 1] - cum[i] < alpha - MASS_TOL:
            j += 1
        if j == n:
            break
        best = min(best, float(mu.atoms[j] - mu.atoms[i]))
    if math.isinf(best):
        raise MeasureError(f"no set carries mass {alpha!r} (total mass {mu.mass!r})")
    return best


def convolve(mu: AtomicMeasure, nu: AtomicMeasure) -> AtomicMeasure:
    """Law of ``X + Y`` for independent ``X ~ mu`` and ``Y ~ nu``."""
    sums = np.add.outer(mu.atoms, nu.atoms).ravel()
    prods = np.multiply.outer(mu.weights, nu.weights).ravel()
    return AtomicMeasure.from_values(sums, prods)


def convolve_power(mu: AtomicMeasure, n: int) -> AtomicMeasure:
    """n-fold convolution by repeated squaring."""
    if n < 1:
        raise MeasureError(f"n must be >= 1, got {n}")
    result = None
    base = mu
    while n:
        if n & 1:
            result = base if result is None else convolve(result, base)
        n >>= 1
        if n:
            base = convolve(base, base)
    return result


def scale_shift(mu: AtomicMeasure, a: float, b: float = 0.0) -> AtomicMeasure:
    """Pushforward under ``x -> a*x + b``."""
    if a == 0:
        raise MeasureError("scale factor must be non-zero")
    return AtomicMeasure.from_values(a * mu.atoms + b, mu.weights)


def recenter(mu: AtomicMeasure) -> AtomicMeasure:
    return scale_shift(mu, 1.0, -mu.mean())


@dataclass(frozen=True)
class SupportGaps:
    """Gaps between consecutive atoms.

    ``delta_minus[0]`` and ``delta_plus[-1]`` are ``inf``. ``Delta`` is the
    largest finite backward gap, reported as 0 with ``singleton=True`` when
    the support is a single point.
    """

    delta_minus: np.ndarray
    Delta: float
    delta_plus: np.ndarray
    singleton: bool


def support_gaps(nu: AtomicMeasure) -> SupportGaps:
    gaps = np.diff(nu.atoms)
    inf = np.array([math.inf])
    delta_minus = np.concatenate((inf, gaps))
    delta_plus = np.concatenate((gaps, inf))
    singleton = nu.size == 1
    Delta = 0.0 if singleton else float(gaps.max())
    return SupportGaps(delta_minus, Delta, delta_plus, singleton)

