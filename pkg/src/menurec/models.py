"""Preference model families and numerical class verification.

A preference model maps a memory vector v in the simplex to per-item scores
in [lam, 1]; the agent picks among a shown menu with probability
proportional to these scores. Families here have analytically known class
constants (floor, Lipschitz bound, constant sum, multiplicative envelope
factor) so experiments can verify declared classes on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import as_distribution
from .errors import InvalidInputError, ResourceLimitError

LOTTERY_STATE_CAP = 300_000


@dataclass(frozen=True)
class ClassSpec:
    """Declared class membership of a model: floor lam always; the other
    constants only when the class asserts them."""

    name: str
    lam: float
    lipschitz: float | None = None
    const_sum: float | None = None
    sigma: float | None = None


@dataclass(frozen=True)
class PreferenceModel:
    n: int
    score_fn: object  # v (n,) -> scores (n,)
    meta: ClassSpec
    spec: dict
    batch_score_fn: object | None = None  # V (m,n) -> (m,n), optional fast path

    def scores(self, v: np.ndarray) -> np.ndarray:
        return self.score_fn(v)

    def scores_batch(self, V: np.ndarray) -> np.ndarray:
        if self.batch_score_fn is not None:
            return self.batch_score_fn(V)
        return np.stack([self.score_fn(v) for v in V])


@dataclass(frozen=True)
class ClassReport:
    class_name: str
    max_violation: float
    witness_vector: np.ndarray
    grid_size: int
    lipschitz_estimate: float
    components: dict

    @property
    def passed(self) -> bool:
        # exact-arithmetic families leave only float dust
        return self.max_violation <= 1e-9


def _check_column_stochastic(A: np.ndarray, n: int) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != (n, n):
        raise InvalidInputError(f"mixing matrix must be {n}x{n}, got {A.shape}")
    if np.min(A) < 0:
        raise InvalidInputError("mixing matrix entries must be non-negative")
    if np.max(np.abs(A.sum(axis=0) - 1.0)) > 1e-9:
        raise InvalidInputError("mixing matrix columns must sum to 1")
    return A


def make_linear_mix_model(n: int, lam: float, A) -> PreferenceModel:
    """Scores (1-lam) * (A v) + lam for a column-stochastic A.

    Constant sum (1-lam) + n*lam; per-function Lipschitz bound
    (1-lam) * max_i ||row_i(A)||.
    """
    if not (0 < lam < 1):
        raise InvalidInputError(f"lam must lie in (0,1), got {lam}")
    A = _check_column_stochastic(A, n)
    L = (1 - lam) * float(np.max(np.linalg.norm(A, axis=1)))
    meta = ClassSpec(name="smooth", lam=lam, lipschitz=L, const_sum=(1 - lam) + n * lam)
    return PreferenceModel(
        n=n,
        score_fn=lambda v: (1 - lam) * (A @ v) + lam,
        batch_score_fn=lambda V: (1 - lam) * (V @ A.T) + lam,
        meta=meta,
        spec={"kind": "linear_mix", "n": n, "lam": lam, "A": A.tolist()},
    )


def make_pseudo_increasing_model(n: int, lam: float, beta: float, A) -> PreferenceModel:
    """Scores (1-lam) * ((1-beta) v_i + beta (A v)_i) + lam.

    Sandwiched multiplicatively around the affine envelope (1-lam) v_i + lam
    within factor sigma = max(1/(1-beta), 1 + beta(1-lam)/lam); also smooth
    with the same constant sum as the linear mix family.
    """
    if not (0 < lam < 1):
        raise InvalidInputError(f"lam must lie in (0,1), got {lam}")
    if not (0 <= beta < 1):
        raise InvalidInputError(f"beta must lie in [0,1), got {beta}")
    A = _check_column_stochastic(A, n)
    sigma = max(1.0 / (1.0 - beta), 1.0 + beta * (1 - lam) / lam)
    rows = (1 - beta) * np.eye(n) + beta * A
    L = (1 - lam) * float(np.max(np.linalg.norm(rows, axis=1)))
    meta = ClassSpec(name="pseudo_increasing", lam=lam, lipschitz=L,
                     const_sum=(1 - lam) + n * lam, sigma=sigma)
    if beta == 0.0:
        score_fn = lambda v: (1 - lam) * v + lam
        batch_score_fn = lambda V: (1 - lam) * V + lam
    else:
        score_fn = lambda v: (1 - lam) * ((1 - beta) * v + beta * (A @ v)) + lam
        batch_score_fn = lambda V: (1 - lam) * ((1 - beta) * V + beta * (V @ A.T)) + lam
    return PreferenceModel(
        n=n,
        score_fn=score_fn,
        batch_score_fn=batch_score_fn,
        meta=meta,
        spec={"kind": "pseudo_increasing", "n": n, "lam": lam, "beta": beta, "A": A.tolist()},
    )


def make_constant_model(scores) -> PreferenceModel:
    """Memoryless agent: scores fixed regardless of history."""
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or s.shape[0] < 2:
        raise InvalidInputError("need a vector of at least 2 scores")
    if np.min(s) <= 0 or np.max(s) > 1:
        raise InvalidInputError("constant scores must lie in (0, 1]")
    meta = ClassSpec(name="constant", lam=float(np.min(s)), lipschitz=0.0,
                     const_sum=float(np.sum(s)))
    return PreferenceModel(
        n=s.shape[0],
        score_fn=lambda v, s=s: s.copy(),
        batch_score_fn=lambda V, s=s: np.broadcast_to(s, V.shape).copy(),
        meta=meta,
        spec={"kind": "constant", "scores": s.tolist()},
    )


def is_independent_set(num_vertices: int, edges, subset) -> bool:
    sub = set(subset)
    return not any(u in sub and v in sub for u, v in edges)


def make_mis_model(num_vertices: int, edges, lam: float,
                   eps_interp: float = 0.01) -> PreferenceModel:
    """Hardness environment encoding Maximum Independent Set.

    Items are {0} + one item per graph vertex. Item 0 scores
    |S|(1-lam)/(n-1) + lam when the memory mass off item 0 rests
    eps-uniformly on an independent vertex set S, lam otherwise, with the
    boundary ramped linearly over an eps_interp band. All other items score
    a constant lam.
    """
    if not (0 < lam < 1):
        raise InvalidInputError(f"lam must lie in (0,1), got {lam}")
    if eps_interp <= 0:
        raise InvalidInputError("eps_interp must be positive")
    edges = tuple(sorted((min(int(u), int(v)), max(int(u), int(v))) for u, v in edges))
    for u, v in edges:
        if not (0 <= u < num_vertices and 0 <= v < num_vertices) or u == v:
            raise InvalidInputError(f"bad edge ({u},{v}) for {num_vertices} vertices")
    n = num_vertices + 1
    edge_set = set(edges)

    def item0_score(v: np.ndarray) -> float:
        w = v[1:]
        members = np.nonzero(w > eps_interp)[0]
        if members.size == 0 or not is_independent_set(num_vertices, edge_set, members):
            return lam
        target = members.size * (1 - lam) / (n - 1) + lam
        off_mass = float(np.sum(w)) - float(np.sum(w[members]))
        spread = float(np.max(w[members]) - np.min(w[members]))
        excess = max(off_mass - eps_interp, spread - eps_interp, 0.0)
        ramp = min(1.0, excess / eps_interp)
        return target - (target - lam) * ramp

    def score_fn(v: np.ndarray) -> np.ndarray:
        f = np.full(n, lam)
        f[0] = item0_score(v)
        return f

    meta = ClassSpec(name="mis", lam=lam, lipschitz=(1 - lam) * n / eps_interp)
    return PreferenceModel(
        n=n,
        score_fn=score_fn,
        meta=meta,
        spec={"kind": "mis", "num_vertices": num_vertices, "edges": [list(e) for e in edges],
              "lam": lam, "eps_interp": eps_interp},
    )


class _LotteryScorer:
    """State-table scorer: memory vectors round to the nearest (l1) vector
    induced by a truncated selection history; each state hides a fresh
    lottery of low-score items drawn from (seed, state)."""

    def __init__(self, n: int, gamma: float, seed: int):
        self.n = n
        self.gamma = gamma
        self.seed = seed
        self.k = n // 2
        self.lam = 1.0 / (n - self.k + 1)
        self.h = max(1, math.ceil(math.log(n) / math.log(1.0 / gamma)))
        if n ** self.h > LOTTERY_STATE_CAP:
            raise ResourceLimitError(
                f"lottery state space n^h = {n ** self.h} exceeds cap {LOTTERY_STATE_CAP}")
        self._score_cache: dict[int, np.ndarray] = {}
        from itertools import product

        weights = np.array([self.gamma ** (self.h - 1 - a) for a in range(self.h)])
        weights /= weights.sum()
        self.states = list(product(range(self.n), repeat=self.h))
        self.state_vectors = np.zeros((len(self.states), self.n))
        for row, hist in enumerate(self.states):
            for a, item in enumerate(hist):
                self.state_vectors[row, item] += weights[a]

    def state_index(self, v: np.ndarray) -> int:
        return int(np.abs(self.state_vectors - v).sum(axis=1).argmin())

    def state_of(self, v: np.ndarray) -> tuple[int, ...]:
        return self.states[self.state_index(v)]

    def lottery_items(self, state: tuple[int, ...]) -> np.ndarray:
        rng = np.random.default_rng([self.seed, *state])
        return rng.choice(np.arange(1, self.n), size=self.k - 2, replace=False)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        idx = self.state_index(v)
        cached = self._score_cache.get(idx)
        if cached is None:
            f = np.ones(self.n)
            f[0] = self.lam
            if self.k >= 3:
                f[self.lottery_items(self.states[idx])] = self.lam
            self._score_cache[idx] = cached = f
        return cached.copy()


def make_lottery_model(n: int, gamma: float, seed: int) -> PreferenceModel:
    """Hardness environment with per-state item lotteries.

    Requires n even and gamma in (0, 1/2) so each memory vector decodes a
    unique truncated history; menu size k = n/2 and floor lam = 1/(n-k+1)
    come from the construction. Deterministic given the seed.
    """
    if n < 4 or n % 2 != 0:
        raise InvalidInputError(f"n must be even and >= 4, got {n}")
    if not (0 < gamma < 0.5):
        raise InvalidInputError(f"gamma must lie in (0, 1/2), got {gamma}")
    scorer = _LotteryScorer(n, gamma, int(seed))
    meta = ClassSpec(name="lottery", lam=scorer.lam)
    return PreferenceModel(
        n=n,
        score_fn=scorer,
        meta=meta,
        spec={"kind": "lottery", "n": n, "gamma": gamma, "seed": int(seed)},
    )


def model_from_spec(spec: dict) -> PreferenceModel:
    """Rebuild a model from its serializable description."""
    kind = spec.get("kind")
    if kind == "linear_mix":
        return make_linear_mix_model(spec["n"], spec["lam"], np.asarray(spec["A"]))
    if kind == "pseudo_increasing":
        return make_pseudo_increasing_model(spec["n"], spec["lam"], spec["beta"],
                                            np.asarray(spec["A"]))
    if kind == "constant":
        return make_constant_model(np.asarray(spec["scores"]))
    if kind == "mis":
        return make_mis_model(spec["num_vertices"], spec["edges"], spec["lam"],
                              spec.get("eps_interp", 0.01))
    if kind == "lottery":
        return make_lottery_model(spec["n"], spec["gamma"], spec["seed"])
    raise InvalidInputError(f"unknown model kind {kind!r}")


def uniform_mixing_matrix(n: int) -> np.ndarray:
    return np.full((n, n), 1.0 / n)


def simplex_grid(n: int, resolution: float) -> np.ndarray:
    """All points of the simplex whose coordinates are multiples of
    `resolution` (which must divide 1 up to rounding)."""
    if resolution <= 0:
        raise InvalidInputError("grid resolution must be positive")
    m = round(1.0 / resolution)
    points = []
    for dividers in combinations(range(m + n - 1), n - 1):
        prev = -1
        counts = []
        for d in dividers:
            counts.append(d - prev - 1)
            prev = d
        counts.append(m + n - 2 - prev)
        points.append(counts)
    return np.asarray(points, dtype=float) / m


def verify_class(model: PreferenceModel, class_spec: ClassSpec | None = None,
                 grid_resolution: float = 0.05) -> ClassReport:
    """Grid check of a declared class: score range, constant sum, the
    multiplicative envelope, and an empirical Lipschitz estimate from
    adjacent grid pairs. Zero max violation (up to float dust) means the
    model matches the declaration on the grid."""
    spec = class_spec if class_spec is not None else model.meta
    grid = simplex_grid(model.n, grid_resolution)
    S = model.scores_batch(grid)

    range_viol = np.maximum(spec.lam - S, S - 1.0)
    components = {"range": float(np.max(range_viol))}
    per_point = np.max(range_viol, axis=1)

    if spec.const_sum is not None:
        sum_viol = np.abs(S.sum(axis=1) - spec.const_sum)
        components["const_sum"] = float(np.max(sum_viol))
        per_point = np.maximum(per_point, sum_viol)

    if spec.sigma is not None:
        env = (1 - spec.lam) * grid + spec.lam
        sig_viol = np.maximum(S - spec.sigma * env, env / spec.sigma - S)
        components["sigma_envelope"] = float(np.max(sig_viol))
        per_point = np.maximum(per_point, np.max(sig_viol, axis=1))

    # empirical Lipschitz constant over grid neighbours (one resolution unit
    # moved between a pair of coordinates)
    m = round(1.0 / grid_resolution)
    index = {tuple(np.rint(p * m).astype(int)): i for i, p in enumerate(grid)}
    step = float(np.sqrt(2.0)) / m
    lip_est = 0.0
    for key, i in index.items():
        for a in range(model.n):
            if key[a] == 0:
                continue
            for b in range(a + 1, model.n):
                moved = list(key)
                moved[a] -= 1
                moved[b] += 1
                j = index.get(tuple(moved))
                if j is None:
                    continue
                diff = float(np.max(np.abs(S[i] - S[j])))
                if diff > lip_est * step:
                    lip_est = diff / step
    components["lipschitz_estimate"] = lip_est
    if spec.lipschitz is not None:
        components["lipschitz_excess"] = max(0.0, lip_est - spec.lipschitz)
        per_point = np.maximum(per_point, components["lipschitz_excess"])

    worst = int(np.argmax(per_point))
    return ClassReport(
        class_name=spec.name,
        max_violation=float(max(np.max(per_point), 0.0)),
        witness_vector=grid[worst],
        grid_size=grid.shape[0],
        lipschitz_estimate=lip_est,
        components=components,
    )
