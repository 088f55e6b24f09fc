"""Menu-time geometry of realizable item distributions.

An item distribution x is realizable from the current memory state exactly
when every item's "menu time" mu_i = k*(x_i/f_i) / sum_j (x_j/f_j) is at
most 1; when it is, a sparse menu distribution inducing x up to any epsilon
can be built greedily, one menu per stage.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .core import MenuDistribution, as_distribution, as_menu
from .errors import (InvalidInputError, InvalidModelError, NotRealizableError,
                     ResourceLimitError)

IRD_TOL = 1e-9
ORACLE_MAX_ITEMS = 12


def _check_scores(scores, n: int | None = None) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1:
        raise InvalidModelError("scores must be a vector")
    if n is not None and scores.shape[0] != n:
        raise InvalidInputError(f"score dimension mismatch: expected {n}, got {scores.shape[0]}")
    if np.min(scores) <= 0:
        raise InvalidModelError(f"scores must be positive, min is {np.min(scores)}")
    return scores


def menu_times(x, scores, k: int) -> np.ndarray:
    """Per-item menu time vector; sums to k, and mu_i = 0 exactly when x_i = 0."""
    x = as_distribution(x)
    n = x.shape[0]
    scores = _check_scores(scores, n)
    if not (1 <= k < n):
        raise InvalidInputError(f"need 1 <= k < n, got k={k}, n={n}")
    ratios = x / scores
    return k * ratios / float(np.sum(ratios))


def ird_contains(x, scores, k: int, tol: float = IRD_TOL) -> bool:
    """Threshold test: x is realizable iff max_i mu_i <= 1 (within tol)."""
    return bool(np.max(menu_times(x, scores, k)) <= 1.0 + tol)


def menu_choice_distribution(menu, scores) -> np.ndarray:
    """Agent selection distribution over all n items when `menu` is shown."""
    scores = _check_scores(scores)
    menu = as_menu(menu, scores.shape[0])
    p = np.zeros(scores.shape[0])
    idx = list(menu)
    p[idx] = scores[idx] / float(np.sum(scores[idx]))
    return p


def ird_contains_oracle(x, scores, k: int, tol: float = 1e-7) -> bool:
    """Brute-force membership: LP feasibility of x as a convex combination of
    the menu-conditional distributions over all C(n,k) menus.

    Test oracle only; capped at n <= 12.
    """
    from scipy.optimize import linprog

    x = as_distribution(x)
    n = x.shape[0]
    scores = _check_scores(scores, n)
    if n > ORACLE_MAX_ITEMS:
        raise ResourceLimitError(f"oracle supports n <= {ORACLE_MAX_ITEMS}, got {n}")
    cols = [menu_choice_distribution(menu, scores) for menu in combinations(range(n), k)]
    P = np.stack(cols, axis=1)
    m = P.shape[1]
    # minimize s  s.t.  -s <= (P z - x)_i <= s,  sum z = 1,  z >= 0
    c = np.zeros(m + 1)
    c[-1] = 1.0
    ones = np.ones((n, 1))
    A_ub = np.block([[P, -ones], [-P, -ones]])
    b_ub = np.concatenate([x, -x])
    A_eq = np.concatenate([np.ones((1, m)), np.zeros((1, 1))], axis=1)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.ones(1),
                  bounds=[(0, None)] * (m + 1), method="highs")
    if not res.success:
        raise InvalidInputError(f"feasibility LP failed: {res.message}")
    return bool(res.fun <= tol)


def induced_item_distribution(z: MenuDistribution, scores) -> np.ndarray:
    """Exact expected selection distribution sum_K z(K) p_{K,v}."""
    scores = _check_scores(scores)
    out = np.zeros(scores.shape[0])
    for menu, prob in zip(z.menus, z.probs):
        idx = list(as_menu(menu, scores.shape[0]))
        out[idx] += prob * scores[idx] / float(np.sum(scores[idx]))
    return out


def greedy_menu_stages(mu: np.ndarray, k: int, tau: float,
                       n_stages: int) -> list[tuple[int, ...]]:
    """Stage menus of the greedy construction: each stage takes the k items
    with largest remaining menu time (ties to the lowest index) and lowers
    their remaining time by tau. Items with mu_i = 0 are never shown."""
    remaining = mu.astype(float).copy()
    eligible = mu > 0
    if int(np.sum(eligible)) < k:
        raise NotRealizableError("fewer than k items with positive menu time")
    remaining[~eligible] = -np.inf
    stages = []
    for _ in range(n_stages):
        order = np.argsort(-remaining, kind="stable")
        menu = tuple(sorted(int(i) for i in order[:k]))
        remaining[list(menu)] -= tau
        stages.append(menu)
    return stages


def build_menu_distribution(x, scores, k: int, epsilon: float) -> MenuDistribution:
    """Sparse menu distribution whose induced item distribution is within
    epsilon of x in the max norm.

    Runs ceil(1/tau) greedy stages with tau = epsilon * k^2 / n; each stage
    menu gets relative weight equal to its score sum, duplicates merged.
    """
    x = as_distribution(x)
    n = x.shape[0]
    scores = _check_scores(scores, n)
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    mu = menu_times(x, scores, k)
    if np.max(mu) > 1.0 + IRD_TOL:
        raise NotRealizableError(
            f"max menu time {np.max(mu):.6f} exceeds 1; clamp the target first")
    tau = epsilon * k * k / n
    n_stages = max(1, math.ceil(1.0 / tau))
    weights: dict[tuple[int, ...], float] = {}
    for menu in greedy_menu_stages(mu, k, tau, n_stages):
        weights[menu] = weights.get(menu, 0.0) + float(np.sum(scores[list(menu)]))
    total = sum(weights.values())
    menus = tuple(sorted(weights))
    probs = np.array([weights[m] / total for m in menus])
    return MenuDistribution(menus=menus, probs=probs)


def eird_contains_grid(x, model, k: int, grid) -> bool:
    """Outer approximation of everywhere-realizability: the threshold test
    must pass at every memory vector of the grid."""
    grid = list(grid)
    if not grid:
        raise InvalidInputError("empty memory grid")
    return all(ird_contains(x, model.scores(as_distribution(v)), k) for v in grid)
