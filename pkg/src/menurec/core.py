"""Simplex geometry: item distributions, menus, the smoothed simplex, projections.

All vectors are dense float64 numpy arrays; items are 0-based indices.
Menus are canonically stored as sorted tuples of distinct indices so they
hash and compare deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleSetError, InvalidInputError

SUM_TOL = 1e-9
FLOOR_SLACK = 1e-12


def as_distribution(x, n: int | None = None) -> np.ndarray:
    """Validate `x` as an item distribution and return it as a float array.

    Entries must be >= 0 and sum to 1 within 1e-9. Negative float dust
    above -1e-12 is clipped to zero.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError(f"distribution must be a 1-d vector, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise InvalidInputError(f"dimension mismatch: expected {n}, got {x.shape[0]}")
    if x.shape[0] < 1:
        raise InvalidInputError("empty distribution")
    if np.min(x) < -FLOOR_SLACK:
        raise InvalidInputError(f"negative entry {np.min(x)} in distribution")
    s = float(np.sum(x))
    if abs(s - 1.0) > SUM_TOL:
        raise InvalidInputError(f"distribution sums to {s}, expected 1 within {SUM_TOL}")
    return np.maximum(x, 0.0)


def as_menu(items, n: int, k: int | None = None) -> tuple[int, ...]:
    """Validate a menu and return it as a sorted tuple of distinct indices."""
    menu = tuple(sorted(int(i) for i in items))
    if len(menu) == 0 or len(set(menu)) != len(menu):
        raise InvalidInputError(f"menu items must be distinct and non-empty: {menu}")
    if menu[0] < 0 or menu[-1] >= n:
        raise InvalidInputError(f"menu items out of range [0, {n}): {menu}")
    if k is not None and len(menu) != k:
        raise InvalidInputError(f"menu must have exactly {k} items, got {len(menu)}")
    return menu


@dataclass(frozen=True)
class MenuDistribution:
    """Sparse probability distribution over menus (sorted index tuples)."""

    menus: tuple[tuple[int, ...], ...]
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if len(self.menus) != probs.shape[0]:
            raise InvalidInputError("menus and probs length mismatch")
        if len(set(self.menus)) != len(self.menus):
            raise InvalidInputError("duplicate menus in support")
        if probs.size == 0 or np.min(probs) <= 0:
            raise InvalidInputError("menu probabilities must be positive")
        if abs(float(np.sum(probs)) - 1.0) > SUM_TOL:
            raise InvalidInputError("menu probabilities must sum to 1")

    @property
    def support_size(self) -> int:
        return len(self.menus)

    def sample(self, rng: np.random.Generator) -> tuple[int, ...]:
        i = int(rng.choice(len(self.menus), p=self.probs / np.sum(self.probs)))
        return self.menus[i]


@dataclass(frozen=True)
class SmoothedSimplexParams:
    """The simplex smoothed with uniform noise: hull of vertices with 1-phi
    on one item and phi/(n-1) on each other."""

    phi: float
    n: int

    def __post_init__(self):
        if not (0.0 < self.phi < 1.0):
            raise InvalidInputError(f"phi must lie in (0,1), got {self.phi}")
        if self.n < 2:
            raise InvalidInputError("need at least 2 items")

    @property
    def floor(self) -> float:
        return self.phi / (self.n - 1)

    def vertex(self, i: int) -> np.ndarray:
        b = np.full(self.n, self.floor)
        b[i] = 1.0 - self.phi
        return b

    def vertices(self) -> np.ndarray:
        """All n vertices, one per row."""
        return np.stack([self.vertex(i) for i in range(self.n)])


def smoothed_simplex_contains(x, params: SmoothedSimplexParams) -> bool:
    """Membership in the smoothed simplex, with 1e-12 slack on the coordinate floor.

    For phi <= (n-1)/n the hull equals the simplex with per-coordinate floor
    phi/(n-1); past that the affine shrink map flips orientation and the
    floor becomes a ceiling.
    """
    x = as_distribution(x, params.n)
    scale = 1.0 - params.phi * params.n / (params.n - 1)
    if scale >= 0:
        return bool(np.min(x) >= params.floor - FLOOR_SLACK)
    return bool(np.max(x) <= params.floor + FLOOR_SLACK)


def tv_distance(p, q) -> float:
    """Total variation distance (1/2) * sum |p_i - q_i|."""
    p = as_distribution(p)
    q = as_distribution(q, p.shape[0])
    return 0.5 * float(np.sum(np.abs(p - q)))


def project_simplex(y: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = total} by the sort method."""
    if total <= 0:
        raise InvalidInputError("simplex total mass must be positive")
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - total
    rho = np.nonzero(u * np.arange(1, len(y) + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def project_floored_simplex(y: np.ndarray, floors: np.ndarray) -> np.ndarray:
    """Projection onto {x >= floors, sum x = 1} via a shifted simplex projection."""
    slack = 1.0 - float(np.sum(floors))
    if slack < -FLOOR_SLACK:
        raise InfeasibleSetError("coordinate floors sum beyond 1")
    if slack <= 0:
        return floors.astype(float).copy()
    return floors + project_simplex(y - floors, slack)


def _project_ball(y: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    d = y - center
    norm = float(np.linalg.norm(d))
    if norm <= radius:
        return y.copy()
    return center + d * (radius / norm)


def _project_halfspace(y: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    excess = float(a @ y) - b
    if excess <= 0:
        return y.copy()
    return y - a * (excess / float(a @ a))


@dataclass(frozen=True)
class SetDescriptor:
    """Intersection of the simplex with optional coordinate floors, one
    Euclidean ball, and optional extra halfspaces A x <= b.

    The halfspace block is used by the optimizers for menu-time polytopes;
    the plain floors/ball form covers the smoothed simplex and step clamps.
    """

    n: int
    floors: np.ndarray | None = None
    ball: tuple[np.ndarray, float] | None = None
    halfspaces: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.floors is not None:
            f = np.asarray(self.floors, dtype=float)
            if f.shape != (self.n,):
                raise InvalidInputError("floors dimension mismatch")
            object.__setattr__(self, "floors", f)
        if self.ball is not None:
            c, r = self.ball
            c = np.asarray(c, dtype=float)
            if c.shape != (self.n,) or r < 0:
                raise InvalidInputError("bad ball descriptor")
            object.__setattr__(self, "ball", (c, float(r)))
        if self.halfspaces is not None:
            A, b = self.halfspaces
            A = np.asarray(A, dtype=float)
            b = np.asarray(b, dtype=float)
            if A.ndim != 2 or A.shape[1] != self.n or b.shape != (A.shape[0],):
                raise InvalidInputError("bad halfspace block")
            object.__setattr__(self, "halfspaces", (A, b))

    def effective_floors(self) -> np.ndarray:
        return self.floors if self.floors is not None else np.zeros(self.n)

    def contains(self, x, tol: float = 1e-8) -> bool:
        x = np.asarray(x, dtype=float)
        if abs(float(np.sum(x)) - 1.0) > max(tol, SUM_TOL):
            return False
        if np.min(x - self.effective_floors()) < -tol:
            return False
        if self.ball is not None:
            c, r = self.ball
            if float(np.linalg.norm(x - c)) > r + tol:
                return False
        if self.halfspaces is not None:
            A, b = self.halfspaces
            if float(np.max(A @ x - b)) > tol:
                return False
        return True

    def shrink(self, xi: float, center: np.ndarray) -> "SetDescriptor":
        """Image of the set under x -> (1-xi) x + xi center (center must be
        interior, sum 1); same descriptor family with adjusted parameters."""
        if not (0 <= xi < 1):
            raise InvalidInputError(f"shrink factor must be in [0,1), got {xi}")
        floors = (1 - xi) * self.effective_floors() + xi * center
        ball = None
        if self.ball is not None:
            c, r = self.ball
            ball = ((1 - xi) * c + xi * center, (1 - xi) * r)
        halfspaces = None
        if self.halfspaces is not None:
            A, b = self.halfspaces
            halfspaces = (A, (1 - xi) * b + xi * (A @ center))
        return SetDescriptor(self.n, floors=floors, ball=ball, halfspaces=halfspaces)


def project_to_set(x, set_descriptor: SetDescriptor, tol: float = 1e-12,
                   max_iter: int = 10000) -> np.ndarray:
    """Euclidean projection of `x` onto the described set, within 1e-8 of the
    true projection.

    Uses Dykstra's correction scheme cycling over the closed-form
    sub-projections (floored simplex, ball, each halfspace), iterated until
    successive iterates move less than `tol` or `max_iter` cycles; this
    converges to the true projection for intersections of convex sets. The
    cycle tolerance sits well below the accuracy contract because the
    scheme's linear convergence leaves a tail beyond the last cycle's move.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (set_descriptor.n,):
        raise InvalidInputError("point dimension mismatch with set descriptor")
    floors = set_descriptor.effective_floors()
    if float(np.sum(floors)) > 1.0 + SUM_TOL:
        raise InfeasibleSetError("floors sum beyond 1: empty set")
    if set_descriptor.ball is not None:
        c, r = set_descriptor.ball
        base = project_floored_simplex(c, floors)
        if float(np.linalg.norm(base - c)) > r + 1e-7 and set_descriptor.halfspaces is None:
            raise InfeasibleSetError("ball does not meet the floored simplex")

    projections = [lambda y: project_floored_simplex(y, floors)]
    if set_descriptor.ball is not None:
        c, r = set_descriptor.ball
        projections.append(lambda y, c=c, r=r: _project_ball(y, c, r))
    if set_descriptor.halfspaces is not None:
        A, b = set_descriptor.halfspaces
        for i in range(A.shape[0]):
            projections.append(
                lambda y, a=A[i], bi=float(b[i]): _project_halfspace(y, a, bi))

    if len(projections) == 1:
        return projections[0](x)

    y = x.copy()
    corrections = [np.zeros_like(x) for _ in projections]
    for _ in range(max_iter):
        y_prev = y.copy()
        for j, proj in enumerate(projections):
            z = y + corrections[j]
            y = proj(z)
            corrections[j] = z - y
        if float(np.max(np.abs(y - y_prev))) < tol:
            break
    if not set_descriptor.contains(y, tol=1e-6):
        raise InfeasibleSetError("projection did not reach the set; descriptor may be empty")
    return y


def chebyshev_center(set_descriptor: SetDescriptor) -> tuple[np.ndarray, float]:
    """Largest inscribed ball (center, radius) within the affine hull {sum x = 1}.

    Solved as a small LP; the ball term of the descriptor, if any, is ignored
    (callers only shrink polytopal sets).
    """
    from scipy.optimize import linprog

    n = set_descriptor.n
    rows = []
    rhs = []
    floors = set_descriptor.effective_floors()
    for i in range(n):
        a = np.zeros(n)
        a[i] = -1.0
        rows.append(a)
        rhs.append(-float(floors[i]))
    if set_descriptor.halfspaces is not None:
        A, b = set_descriptor.halfspaces
        for i in range(A.shape[0]):
            rows.append(A[i].astype(float))
            rhs.append(float(b[i]))
    A_ub = []
    for a in rows:
        tangential = a - np.mean(a)  # component within the sum-1 hyperplane
        A_ub.append(np.concatenate([a, [float(np.linalg.norm(tangential))]]))
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(
        c,
        A_ub=np.asarray(A_ub),
        b_ub=np.asarray(rhs),
        A_eq=np.concatenate([np.ones((1, n)), np.zeros((1, 1))], axis=1),
        b_eq=np.ones(1),
        bounds=[(None, None)] * n + [(0, None)],
        method="highs",
    )
    if not res.success:
        raise InfeasibleSetError(f"chebyshev LP failed: {res.message}")
    return res.x[:n], float(res.x[-1])
