"""The recommender algorithms.

Two long-memory algorithms alternate learning and optimization stages on top
of the gradient-free linear optimizer (one targets everywhere-realizable
distributions, one the smoothed simplex); one short-memory algorithm treats
smoothed-simplex vertices as bandit arms held over long pulls; and two
memoryless algorithms cover fixed preferences (menu-level exponential
weights, and score estimation followed by bandit linear optimization).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import MenuDistribution, SetDescriptor, project_to_set
from .errors import (ConfigurationError, InfeasibleSetError,
                     NotRealizableError, ResourceLimitError)
from .learn import (ModelEstimate, burn_in, exp3_init, exp3_next, exp3_probs,
                    exp3_update, query_scores, rcfkm_init, rcfkm_next,
                    rcfkm_update)
from .menus import build_menu_distribution, ird_contains, menu_times
from .simulate import Episode, RunTrace

MEMORYLESS_MAX_ITEMS = 12


def mu_polytope_halfspaces(scores: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Linear form of the realizability test: k x_i / f_i <= sum_j x_j / f_j."""
    inv = 1.0 / scores
    A = np.tile(-inv, (scores.shape[0], 1))
    A[np.diag_indices_from(A)] += k * inv
    return A, np.zeros(scores.shape[0])


class _TargetRealizer:
    """Builds menu distributions for optimizer targets, projecting targets
    that fail the estimated realizability test and reusing the last build
    when the target has barely moved."""

    def __init__(self, scores: np.ndarray, k: int, epsilon: float,
                 rebuild_tol: float = 0.0):
        self.scores = scores
        self.k = k
        self.epsilon = epsilon
        self.rebuild_tol = rebuild_tol
        A, b = mu_polytope_halfspaces(scores, k)
        self.polytope = SetDescriptor(scores.shape[0], halfspaces=(A, b))
        self._last_x: np.ndarray | None = None
        self._last_z: MenuDistribution | None = None

    def feasible_target(self, x: np.ndarray) -> np.ndarray:
        if ird_contains(x, self.scores, self.k):
            return x
        return project_to_set(x, self.polytope)

    def realize(self, x: np.ndarray) -> tuple[np.ndarray, MenuDistribution]:
        x = self.feasible_target(x)
        if (self._last_x is not None and self.rebuild_tol > 0
                and float(np.max(np.abs(x - self._last_x))) <= self.rebuild_tol):
            return x, self._last_z
        z = build_menu_distribution(x, self.scores, self.k, self.epsilon)
        self._last_x = x
        self._last_z = z
        return x, z


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigurationError(message)


def _check_gamma_schedule(episode: Episode, c: float):
    expected = 1.0 - episode.T ** (-c)
    _require(abs(episode.gamma - expected) <= 1e-9,
             f"gamma={episode.gamma} inconsistent with 1 - 1/T^c = {expected}")


# ---------------------------------------------------------------------------
# Algorithm 1: everywhere-realizable benchmark, smooth models, slow memory.

@dataclass
class Alg1Params:
    """Schedule for the learn/optimize alternation.

    Defaults follow the analyzed schedule: re-learn radius rho = T^(-c/4),
    drift budget beta = rho^2, query length beta * T^c, burn-in T^c. The
    boost fields scale desk-size runs without changing the exponents.
    """

    c: float
    rho: float | None = None
    beta: float | None = None
    delta: float | None = None
    t_burn: int | None = None
    t_query: int | None = None
    query_boost: float = 1.0
    menu_epsilon: float = 0.05
    rebuild_tol: float = 0.0
    exploration_scale: float = 0.8
    step_scale: float = 0.3
    estimate_merge_tol: float = 0.05

    def resolve(self, T: int) -> dict:
        rho = T ** (-self.c / 4) if self.rho is None else self.rho
        beta = rho * rho if self.beta is None else self.beta
        t_burn = math.ceil(T ** self.c) if self.t_burn is None else self.t_burn
        t_query = (math.ceil(self.query_boost * beta * T ** self.c)
                   if self.t_query is None else self.t_query)
        delta = min(0.05, 1.0 / T) if self.delta is None else self.delta
        return {"rho": rho, "beta": beta, "t_burn": t_burn,
                "t_query": max(1, t_query), "delta": delta}


def _query_alpha(t_query: int, n: int, k: int, delta: float) -> float:
    """Confidence radius the query contract yields at this length."""
    w = max(1.0, t_query * (k - 1) / (n - 1))
    return math.sqrt(math.log(2 * n / delta) / (2 * w))


def run_alg1(episode: Episode, params: Alg1Params, diag: dict | None = None) -> RunTrace:
    """Alternate score queries and optimizer rounds over a contracting inner
    approximation of the everywhere-realizable set."""
    n, k, T = episode.n, episode.k, episode.T
    meta = episode.model.meta
    _require(meta.const_sum is not None and meta.lipschitz is not None,
             "algorithm 1 needs a declared smooth model (constant sum and Lipschitz bound)")
    _require(meta.lam >= k * k / n - 1e-12,
             f"algorithm 1 needs score floor >= k^2/n = {k * k / n}, got {meta.lam}")
    _check_gamma_schedule(episode, params.c)
    sched = params.resolve(T)
    rng = episode.algo_rng

    burn_in(episode, t_burn=sched["t_burn"], rng=rng)

    state = None
    stacked_A = None
    action_set = None
    last_scores = None
    realizer = None
    if diag is not None:
        diag.setdefault("stages", [])
        diag.setdefault("mu_max", [])

    while not episode.done:
        t_query = min(sched["t_query"], episode.remaining)
        alpha = _query_alpha(t_query, n, k, sched["delta"])
        query_start = episode.t
        est = query_scores(episode, t_query, alpha, sched["delta"], rng=rng)
        if episode.done:
            break
        v_star = episode.memory_vector
        f_hat = est.clamped(meta.lam)
        if last_scores is None or float(np.max(np.abs(f_hat - last_scores))) > params.estimate_merge_tol:
            A, b = mu_polytope_halfspaces(f_hat, k)
            stacked_A = A if stacked_A is None else np.vstack([stacked_A, A])
            action_set = SetDescriptor(n, halfspaces=(stacked_A, np.zeros(stacked_A.shape[0])))
            last_scores = f_hat
        realizer = _TargetRealizer(f_hat, k, params.menu_epsilon, params.rebuild_tol)
        if state is None:
            state = rcfkm_init(action_set, max(1, episode.remaining),
                               exploration_scale=params.exploration_scale,
                               step_scale=params.step_scale)
        opt_start = episode.t
        while (not episode.done
               and float(np.linalg.norm(episode.memory_vector - v_star)) <= sched["rho"]):
            x_t = rcfkm_next(state, rng)
            x_t, z_t = realizer.realize(x_t)
            if diag is not None:
                diag["mu_max"].append(float(np.max(menu_times(x_t, f_hat, k))))
            _, reward = episode.show(z_t.sample(rng))
            state = rcfkm_update(state, reward, action_set)
        if diag is not None:
            diag["stages"].append((query_start, opt_start, episode.t))
    return episode.trace()


# ---------------------------------------------------------------------------
# Algorithm 2: smoothed-simplex benchmark, pseudo-increasing smooth models.

@dataclass
class Alg2Params:
    """One optimizer step per held stage over the smoothed simplex.

    Defaults: stage exponents y = 5c/8 (query) and z = c/2 (step), so
    t_query = T^(c-y) and t_step = T^(c-z); targets are clamped into a ball
    of radius lam * phi around the queried memory vector.
    """

    c: float
    phi: float
    y: float | None = None
    z: float | None = None
    t_burn: int | None = None
    t_query: int | None = None
    t_step: int | None = None
    rho: float | None = None
    clamp_radius: float | None = None
    delta: float | None = None
    menu_epsilon: float = 0.05
    exploration_scale: float = 0.8
    step_scale: float = 0.3
    step_size: float | None = None
    exploration_radius: float | None = None

    def resolve(self, T: int, lam: float) -> dict:
        y = 5 * self.c / 8 if self.y is None else self.y
        z = self.c / 2 if self.z is None else self.z
        t_burn = math.ceil(T ** self.c) if self.t_burn is None else self.t_burn
        t_query = math.ceil(T ** (self.c - y)) if self.t_query is None else self.t_query
        t_step = math.ceil(T ** (self.c - z)) if self.t_step is None else self.t_step
        rho = T ** (-z) if self.rho is None else self.rho
        clamp = lam * self.phi if self.clamp_radius is None else self.clamp_radius
        delta = min(0.05, 1.0 / T) if self.delta is None else self.delta
        return {"y": y, "z": z, "t_burn": t_burn, "t_query": max(1, t_query),
                "t_step": max(1, t_step), "rho": rho, "clamp_radius": clamp,
                "delta": delta}

    def validate(self, meta, n: int, k: int):
        _require(meta.sigma is not None, "algorithm 2 needs a declared pseudo-increasing model")
        _require(meta.const_sum is not None, "algorithm 2 needs a declared smooth model")
        _require(meta.sigma <= math.sqrt(4 * (n - 1) / k) + 1e-12,
                 f"sigma={meta.sigma} exceeds sqrt(4(n-1)/k)")
        _require(self.phi >= 4 * k * meta.lam * meta.sigma ** 2 - 1e-12,
                 f"phi={self.phi} below 4*k*lam*sigma^2 = {4 * k * meta.lam * meta.sigma ** 2}")


def run_alg2(episode: Episode, params: Alg2Params, diag: dict | None = None) -> RunTrace:
    """Stage loop: query, take one optimizer target over the smoothed simplex,
    clamp it near the current memory vector, hold its menu distribution."""
    n, k, T = episode.n, episode.k, episode.T
    meta = episode.model.meta
    params.validate(meta, n, k)
    _check_gamma_schedule(episode, params.c)
    sched = params.resolve(T, meta.lam)
    rng = episode.algo_rng

    burn_in(episode, t_burn=sched["t_burn"], rng=rng)

    floors = np.full(n, params.phi / (n - 1))
    base_set = SetDescriptor(n, floors=floors)
    n_stages = max(1, (T - sched["t_burn"]) // (sched["t_query"] + sched["t_step"]))
    state = rcfkm_init(base_set, n_stages,
                       exploration_radius=params.exploration_radius,
                       step_size=params.step_size,
                       exploration_scale=params.exploration_scale,
                       step_scale=params.step_scale)
    if diag is not None:
        diag.setdefault("stages", [])

    while not episode.done:
        t_query = min(sched["t_query"], episode.remaining)
        alpha = _query_alpha(t_query, n, k, sched["delta"])
        query_start = episode.t
        est = query_scores(episode, t_query, alpha, sched["delta"], rng=rng)
        if episode.done:
            break
        v_star = episode.memory_vector
        f_hat = est.clamped(meta.lam)
        raw = rcfkm_next(state, rng)
        x_star = _clamped_target(raw, v_star, sched["clamp_radius"], floors, f_hat, k)
        z = build_menu_distribution(x_star, f_hat, k, params.menu_epsilon)
        stage_rewards = []
        counts = np.zeros(n)
        while (not episode.done and len(stage_rewards) < sched["t_step"]
               and float(np.linalg.norm(episode.memory_vector - v_star)) <= sched["rho"]):
            chosen, reward = episode.show(z.sample(rng))
            counts[chosen] += 1.0
            stage_rewards.append(reward)
        if stage_rewards:
            state = rcfkm_update(state, float(np.mean(stage_rewards)))
        if diag is not None:
            diag["stages"].append({
                "query_start": query_start, "opt_start": episode.t - len(stage_rewards),
                "end": episode.t, "v_star": v_star, "target": x_star,
                "rounds": len(stage_rewards), "counts": counts,
            })
    return episode.trace()


def _clamped_target(x: np.ndarray, v_star: np.ndarray, radius: float,
                    floors: np.ndarray, scores: np.ndarray, k: int) -> np.ndarray:
    """Project a raw target into the ball around the (floored) memory vector
    intersected with the smoothed simplex and the estimated realizability
    polytope, falling back to wider sets if the intersection is empty."""
    n = x.shape[0]
    center = project_to_set(v_star, SetDescriptor(n, floors=floors))
    A, b = mu_polytope_halfspaces(scores, k)
    try:
        return project_to_set(x, SetDescriptor(
            n, floors=floors, ball=(center, radius), halfspaces=(A, b)))
    except InfeasibleSetError:
        pass
    try:
        return project_to_set(x, SetDescriptor(n, floors=floors, halfspaces=(A, b)))
    except InfeasibleSetError:
        # last resort: the choice distribution of the top-score menu is
        # always realizable
        top = tuple(np.argsort(-scores, kind="stable")[:k])
        p = np.zeros(n)
        p[list(top)] = scores[list(top)] / float(np.sum(scores[list(top)]))
        return p


# ---------------------------------------------------------------------------
# Algorithm 3: vertex arms held over long pulls, any fixed discount.

@dataclass
class Alg3Params:
    """Arm-per-vertex bandit over held pulls.

    alpha defaults to alpha_scale * T^(-1/6); t_hold to
    ceil(t_hold_const / (alpha^4 (1-gamma))) capped at T/10.
    """

    phi: float
    alpha: float | None = None
    alpha_scale: float = 1.0
    t_hold: int | None = None
    t_hold_const: float = 4.0

    def resolve(self, T: int, gamma: float) -> dict:
        alpha = self.alpha_scale * T ** (-1 / 6) if self.alpha is None else self.alpha
        if self.t_hold is None:
            t_hold = math.ceil(self.t_hold_const / (alpha ** 4 * (1.0 - gamma)))
            t_hold = min(t_hold, max(1, T // 10))
        else:
            t_hold = self.t_hold
        return {"alpha": alpha, "t_hold": max(1, t_hold)}

    def validate(self, meta, n: int, k: int, gamma: float):
        _require(meta.sigma is not None, "algorithm 3 needs a declared pseudo-increasing model")
        _require(gamma < 1.0, "algorithm 3 needs gamma < 1")
        _require(meta.lam >= meta.sigma ** 2 * k / n - 1e-12,
                 f"needs score floor >= sigma^2 k / n = {meta.sigma ** 2 * k / n}")
        _require(self.phi >= 2 * meta.lam * k ** 3 * meta.sigma ** 6 - 1e-12,
                 f"phi={self.phi} below 2*lam*k^3*sigma^6")

    @staticmethod
    def selection_floor_held(meta, k: int) -> float:
        """Lower bound on picking the held item when its memory weight is 1."""
        return 1.0 - k * meta.lam * meta.sigma ** 2

    @staticmethod
    def selection_floor_cold(meta, k: int) -> float:
        """Lower bound on picking the held item when its memory weight is 0."""
        return 1.0 / (2 * meta.sigma ** 2 * k ** 4)

    @staticmethod
    def fixed_point_weight(meta, k: int) -> float:
        """Lower bound on the stationary memory weight of a held item."""
        return 1.0 - 2 * meta.sigma ** 6 * k ** 3 * meta.lam


def hold_item_pull(episode: Episode, item: int, rounds: int) -> np.ndarray:
    """Hold `item` in the menu for `rounds` rounds, filling the rest of the
    menu with the k-1 items of smallest current memory weight (ties to the
    lowest index). Returns the realized rewards."""
    k = episode.k
    rewards = np.empty(min(rounds, episode.remaining))
    for i in range(rewards.shape[0]):
        v = episode.memory_vector
        order = np.argsort(np.delete(v, item), kind="stable")
        others = [j if j < item else j + 1 for j in order[:k - 1]]
        menu = tuple(sorted([item] + others))
        _, rewards[i] = episode.show(menu)
    return rewards


def run_alg3(episode: Episode, params: Alg3Params, diag: dict | None = None,
             strict: bool = True) -> RunTrace:
    """Exponential-weights over the n vertex arms; each pull holds one item
    for t_hold rounds and feeds back the pull's average reward."""
    n, k, T = episode.n, episode.k, episode.T
    if strict:
        params.validate(episode.model.meta, n, k, episode.gamma)
    sched = params.resolve(T, episode.gamma)
    rng = episode.algo_rng
    state = exp3_init(n, horizon=max(1, math.ceil(T / sched["t_hold"])))
    if diag is not None:
        diag.setdefault("pulls", [])
    while not episode.done:
        arm = exp3_next(state, rng)
        rewards = hold_item_pull(episode, arm, sched["t_hold"])
        state = exp3_update(state, arm, float(np.mean(rewards)))
        if diag is not None:
            diag["pulls"].append({"arm": arm, "rounds": rewards.shape[0],
                                  "terminal_weight": float(episode.memory_vector[arm]),
                                  "mean_reward": float(np.mean(rewards))})
    return episode.trace()


# ---------------------------------------------------------------------------
# Memoryless agents (fixed preferences).

def _require_constant_model(episode: Episode):
    _require(episode.model.meta.lipschitz == 0.0,
             "memoryless algorithms need a constant preference model")


def run_memoryless_exp3(episode: Episode, diag: dict | None = None) -> RunTrace:
    """Exponential-weights directly over all menus."""
    n, k = episode.n, episode.k
    _require_constant_model(episode)
    if n > MEMORYLESS_MAX_ITEMS:
        raise ResourceLimitError(f"menu enumeration capped at n <= {MEMORYLESS_MAX_ITEMS}")
    menus = list(combinations(range(n), k))
    state = exp3_init(len(menus), horizon=episode.T)
    rng = episode.algo_rng
    while not episode.done:
        arm = exp3_next(state, rng)
        _, reward = episode.show(menus[arm])
        state = exp3_update(state, arm, reward)
    if diag is not None:
        diag["final_probs"] = exp3_probs(state)
        diag["menus"] = menus
    return episode.trace()


@dataclass
class MemorylessEstimateParams:
    """Score-ratio estimation phase followed by bandit linear optimization
    over the estimated realizability polytope."""

    estimation_rounds: int | None = None   # default: one T^(2/3) block per cell
    delta: float | None = None
    menu_epsilon: float = 0.05
    rebuild_tol: float = 0.0
    exploration_scale: float = 0.8
    step_scale: float = 0.3

    def resolve(self, T: int, n: int, k: int) -> dict:
        cells = math.ceil((n - 1) / (k - 1))
        t_est = (cells * math.ceil(T ** (2 / 3))
                 if self.estimation_rounds is None else self.estimation_rounds)
        delta = min(0.05, 1.0 / T) if self.delta is None else self.delta
        return {"t_est": min(t_est, max(1, T // 2)), "delta": delta}


def run_memoryless_estimate(episode: Episode, params: MemorylessEstimateParams,
                            diag: dict | None = None) -> RunTrace:
    n, k, T = episode.n, episode.k, episode.T
    _require_constant_model(episode)
    sched = params.resolve(T, n, k)
    rng = episode.algo_rng
    alpha = _query_alpha(sched["t_est"], n, k, sched["delta"])
    est = query_scores(episode, sched["t_est"], alpha, sched["delta"], rng=rng)
    f_hat = est.clamped(episode.model.meta.lam)
    if diag is not None:
        diag["estimate"] = est
    realizer = _TargetRealizer(f_hat, k, params.menu_epsilon, params.rebuild_tol)
    if episode.done:
        return episode.trace()
    state = rcfkm_init(realizer.polytope, max(1, episode.remaining),
                       exploration_scale=params.exploration_scale,
                       step_scale=params.step_scale)
    if diag is not None:
        diag.setdefault("targets_mu_max", [])
    while not episode.done:
        x_t = rcfkm_next(state, rng)
        x_t, z_t = realizer.realize(x_t)
        if diag is not None:
            diag["targets_mu_max"].append(float(np.max(menu_times(x_t, f_hat, k))))
        _, reward = episode.show(z_t.sample(rng))
        state = rcfkm_update(state, reward)
    return episode.trace()
