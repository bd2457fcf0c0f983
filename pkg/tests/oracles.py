"""Slow, independent reference implementations used only by the tests.

Each one follows a definition directly (enumeration or a generic LP) and
shares no code with the package beyond the input containers.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def dev_bruteforce(points) -> float:
    best = -np.inf
    for (x, y) in points:
        for (x2, y2) in points:
            best = max(best, y - y2 - max(x - x2, 0.0))
    return float(best)


def dis_bruteforce(points) -> float:
    return float(max(abs(x - y) for x, y in points))


def hausdorff_bruteforce(S, T) -> float:
    def one_sided(A, B):
        return max(min(abs(a[0] - b[0]) + abs(a[1] - b[1]) for b in B) for a in A)

    return float(max(one_sided(S, T), one_sided(T, S)))


def convolve_bruteforce(mu, nu) -> dict:
    out: dict = {}
    for a, p in zip(mu.atoms, mu.weights):
        for b, q in zip(nu.atoms, nu.weights):
            key = round(float(a + b), 9)
            out[key] = out.get(key, 0.0) + p * q
    return dict(sorted(out.items()))


def partial_diameter_bruteforce(mu, alpha) -> float:
    if alpha <= 0:
        return 0.0
    best = np.inf
    n = mu.size
    for i in range(n):
        for j in range(i, n):
            if mu.weights[i:j + 1].sum() >= alpha - 1e-12:
                best = min(best, mu.atoms[j] - mu.atoms[i])
    return float(best)


def max_coupling_mass_lp(mu, nu, allowed: np.ndarray) -> float:
    """max pi(allowed cells) over full transport plans pi between mu and nu."""
    m, n = mu.size, nu.size
    c = -allowed.astype(float).ravel()
    A_eq, b_eq = [], []
    for i in range(m):
        row = np.zeros((m, n))
        row[i, :] = 1
        A_eq.append(row.ravel())
        b_eq.append(mu.weights[i])
    # the last column constraint is implied by the others; dropping it keeps
    # the LP feasible when the two total masses differ in the last bits
    for j in range(n - 1):
        col = np.zeros((m, n))
        col[:, j] = 1
        A_eq.append(col.ravel())
        b_eq.append(nu.weights[j])
    res = linprog(c, A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(-res.fun)


def prohorov_lp(mu, nu) -> float:
    """min over thresholds d of max(d, 1 - max pi(|x - y| <= d)), via LP."""
    D = np.abs(mu.atoms[:, None] - nu.atoms[None, :])
    best = 1.0
    for d in np.unique(np.concatenate(([0.0], D.ravel()))):
        g = max_coupling_mass_lp(mu, nu, D <= d + 1e-12)
        best = min(best, max(float(d), 1.0 - g))
    return best


def decide_bruteforce(mu, nu, s, t) -> bool:
    """Every cell set S with dev(S) <= s, best coupling mass by LP."""
    cells = [(i, j) for i in range(mu.size) for j in range(nu.size)]
    pts = {c: (float(mu.atoms[c[0]]), float(nu.atoms[c[1]])) for c in cells}
    best = 0.0
    for r in range(len(cells), 0, -1):
        for S in itertools.combinations(cells, r):
            if dev_bruteforce([pts[c] for c in S]) > s + 1e-12:
                continue
            allowed = np.zeros((mu.size, nu.size), dtype=bool)
            for c in S:
                allowed[c] = True
            best = max(best, max_coupling_mass_lp(mu, nu, allowed))
            if best >= 1 - t - 1e-9:
                return True
    return best >= 1 - t - 1e-9


def monotone_lipschitz_map_exists(mu, nu) -> bool:
    """Search every non-decreasing assignment atoms(mu) -> atoms(nu) for a 1-Lipschitz one."""
    m, n = mu.size, nu.size
    for assign in itertools.combinations_with_replacement(range(n), m):
        img = nu.atoms[list(assign)]
        if np.any(np.diff(img) > np.diff(mu.atoms) + 1e-12):
            continue
        pushed = np.zeros(n)
        for i, j in enumerate(assign):
            pushed[j] += mu.weights[i]
        if np.allclose(pushed, nu.weights, atol=1e-9):
            return True
    return False


def subsets(npts):
    for r in range(1, npts + 1):
        yield from itertools.combinations(range(npts), r)


def neighborhood(dist, A, r):
    return {x for x in range(len(dist)) if min(dist[x][a] for a in A) <= r + 1e-12}


def profile_bruteforce(X, eps) -> dict:
    """volume (as Fraction over |X| for uniform X) -> min neighborhood mass."""
    N = X.n_points
    out: dict = {Fraction(0): 0.0}
    for A in subsets(N):
        v = Fraction(len(A), N)
        mass = len(neighborhood(X.dist, A, eps)) / N
        out[v] = min(out.get(v, np.inf), mass)
    return out


def icl_bruteforce(X, nu, eps) -> bool:
    """Direct reading of ICL_eps(nu) on a uniform finite space."""
    N = X.n_points
    F = np.cumsum(nu.weights)
    for A in subsets(N):
        mA = len(A) / N
        for ia, a in enumerate(nu.atoms):
            if F[ia] > mA + 1e-12:
                continue
            for ib in range(ia, nu.size):
                r = nu.atoms[ib] - a + eps
                if F[ib] > len(neighborhood(X.dist, A, r)) / N + 1e-12:
                    return False
    return True
