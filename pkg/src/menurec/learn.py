"""Estimation subroutines and bandit optimizers.

burn_in and query_scores consume episode rounds; the optimizers are plain
sequential state machines. The gradient-free linear optimizer follows the
classical one-point spherical estimator, extended to tolerate a contracting
sequence of action sets and small perturbations of its emitted actions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import SetDescriptor, chebyshev_center, project_to_set
from .errors import (ConfigurationError, ContractViolationError,
                     InfeasibleParametersError, InvalidInputError)
from .simulate import Episode


def burn_in(episode: Episode, c: float | None = None, t_burn: int | None = None,
            rng: np.random.Generator | None = None) -> int:
    """Consume exactly ceil(T^c) rounds (or an explicit t_burn) showing
    uniform-random menus, so that the discount weight of anything before the
    burn-in is at most 1/2 afterwards. Returns the rounds consumed."""
    if t_burn is None:
        if c is None:
            raise ConfigurationError("burn_in needs either c or t_burn")
        t_burn = math.ceil(episode.T ** c)
    if t_burn > episode.remaining:
        raise ConfigurationError(
            f"burn-in of {t_burn} rounds exceeds the {episode.remaining} remaining")
    rng = episode.algo_rng if rng is None else rng
    for _ in range(t_burn):
        menu = tuple(sorted(rng.choice(episode.n, size=episode.k, replace=False)))
        episode.show(menu)
    return t_burn


@dataclass(frozen=True)
class ModelEstimate:
    """Relative score estimates around a memory vector, normalized to max 1."""

    center: np.ndarray
    tilde_f: np.ndarray
    alpha: float
    delta: float

    def clamped(self, floor: float) -> np.ndarray:
        """Estimates floored at floor/2 to keep menu-time ratios bounded."""
        return np.maximum(self.tilde_f, floor / 2.0)


def query_rounds_needed(alpha: float, delta: float, n: int, k: int) -> int:
    """Minimum per-cell rounds for the (alpha, delta) confidence contract."""
    w_min = math.log(2 * n / delta) / (2 * alpha * alpha)
    return math.ceil(w_min * (n - 1) / (k - 1))


def query_scores(episode: Episode, t_query: int, alpha: float, delta: float,
                 rng: np.random.Generator | None = None) -> ModelEstimate:
    """Estimate relative scores at the current memory vector.

    Item 0 anchors every menu; the other items are partitioned into cells of
    size k-1 (the last cell padded with already-covered items whose extra
    observations are discarded) and each cell is shown for an equal share of
    t_query rounds. Per-item frequencies relative to item 0 are normalized
    so the largest estimate is 1.
    """
    n, k = episode.n, episode.k
    if alpha <= 0 or not (0 < delta < 1):
        raise InvalidInputError("need alpha > 0 and delta in (0,1)")
    w_ideal = t_query * (k - 1) / (n - 1)
    if w_ideal < math.log(2 * n / delta) / (2 * alpha * alpha):
        raise InfeasibleParametersError(
            f"t_query={t_query} too small for alpha={alpha}, delta={delta}: "
            f"needs at least {query_rounds_needed(alpha, delta, n, k)} rounds")

    others = list(range(1, n))
    chunk = k - 1
    official = [others[i:i + chunk] for i in range(0, len(others), chunk)]
    cells = [list(c) for c in official]
    if len(cells[-1]) < chunk:
        # pad with already-covered items; their observations here are discarded
        pad = [j for j in others if j not in cells[-1]][:chunk - len(cells[-1])]
        cells[-1].extend(pad)

    rounds = min(t_query, episode.remaining)
    base, extra = divmod(rounds, len(cells))
    chosen_counts = np.zeros(n)
    anchor_counts = np.zeros(len(cells))
    for c_idx, cell in enumerate(cells):
        menu = tuple(sorted([0] + cell))
        own = set(official[c_idx])
        for _ in range(base + (1 if c_idx < extra else 0)):
            chosen, _ = episode.show(menu)
            if chosen == 0:
                anchor_counts[c_idx] += 1.0
            elif chosen in own:
                chosen_counts[chosen] += 1.0

    hat = np.zeros(n)
    hat[0] = 1.0
    for c_idx, cell in enumerate(official):
        # half a pseudo-count keeps every estimate strictly positive
        anchor = max(anchor_counts[c_idx], 0.5)
        for j in cell:
            hat[j] = max(chosen_counts[j], 0.5) / anchor
    tilde = hat / float(np.max(hat))
    return ModelEstimate(center=episode.memory_vector, tilde_f=tilde,
                         alpha=float(alpha), delta=float(delta))


@dataclass
class RcfkmState:
    """One-point gradient-free linear optimizer over a (possibly contracting)
    convex action set; the iterate always lives in the shrunken set so the
    spherical exploration step stays feasible."""

    horizon: int
    iterate: np.ndarray
    exploration_radius: float
    step_size: float
    shrink: float
    action_set: SetDescriptor
    shrunken_set: SetDescriptor
    center: np.ndarray
    inscribed_radius: float
    last_direction: np.ndarray | None = None
    steps_taken: int = 0


def rcfkm_init(action_set: SetDescriptor, horizon: int,
               exploration_radius: float | None = None,
               step_size: float | None = None,
               exploration_scale: float = 0.8,
               step_scale: float = 0.3) -> RcfkmState:
    """Schedule: exploration radius Theta(H^-1/4), step size Theta(H^-3/4),
    shrink factor = radius / inscribed radius."""
    if horizon < 1:
        raise InvalidInputError("optimizer horizon must be >= 1")
    center, r_in = chebyshev_center(action_set)
    if r_in <= 0:
        raise InvalidInputError("action set has empty interior")
    if exploration_radius is None:
        exploration_radius = min(exploration_scale * horizon ** -0.25, 0.5 * r_in)
    if exploration_radius > r_in:
        raise InvalidInputError("exploration radius exceeds the inscribed radius")
    if step_size is None:
        step_size = step_scale * horizon ** -0.75
    xi = exploration_radius / r_in
    shrunken = action_set.shrink(xi, center)
    return RcfkmState(
        horizon=horizon,
        iterate=center.copy(),
        exploration_radius=float(exploration_radius),
        step_size=float(step_size),
        shrink=float(xi),
        action_set=action_set,
        shrunken_set=shrunken,
        center=center,
        inscribed_radius=float(r_in),
    )


def _tangent_sphere_sample(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform direction within the sum-zero subspace of R^n."""
    while True:
        g = rng.standard_normal(n)
        g -= g.mean()
        norm = float(np.linalg.norm(g))
        if norm > 1e-12:
            return g / norm


def rcfkm_next(state: RcfkmState, rng: np.random.Generator) -> np.ndarray:
    """Emit the next action: the iterate plus a spherical exploration step,
    always inside the current (unshrunken) action set."""
    if state.exploration_radius == 0.0:
        state.last_direction = None
        return state.iterate.copy()
    u = _tangent_sphere_sample(state.iterate.shape[0], rng)
    state.last_direction = u
    y = state.iterate + state.exploration_radius * u
    if not state.action_set.contains(y, tol=1e-9):
        y = project_to_set(y, state.action_set)
    return y


def _structurally_contained(inner: SetDescriptor, outer: SetDescriptor) -> bool:
    if inner.n != outer.n:
        return False
    if np.min(inner.effective_floors() - outer.effective_floors()) < -1e-12:
        return False
    if outer.ball is not None:
        if inner.ball is None:
            return False
        ci, ri = inner.ball
        co, ro = outer.ball
        if float(np.linalg.norm(ci - co)) + ri > ro + 1e-12:
            return False
    if outer.halfspaces is not None:
        if inner.halfspaces is None:
            return False
        Ao, bo = outer.halfspaces
        Ai, bi = inner.halfspaces
        if Ai.shape[0] < Ao.shape[0]:
            return False
        if not np.array_equal(Ai[:Ao.shape[0]], Ao) or np.min(bo - bi[:Ao.shape[0]]) < -1e-12:
            return False
    return True


def rcfkm_update(state: RcfkmState, observed_reward: float,
                 next_set: SetDescriptor | None = None) -> RcfkmState:
    """One gradient step from the observed reward of the last emitted action;
    the action set may contract (next_set must sit inside the current one)."""
    reward = min(1.0, max(0.0, float(observed_reward)))
    if next_set is not None and next_set is not state.action_set:
        if not _structurally_contained(next_set, state.action_set):
            raise ContractViolationError("next action set is not contained in the current one")
        center, r_in = chebyshev_center(next_set)
        if state.exploration_radius > r_in:
            raise ContractViolationError(
                "next set too small for the configured exploration radius")
        state.action_set = next_set
        state.center = center
        state.inscribed_radius = float(r_in)
        state.shrink = state.exploration_radius / r_in
        state.shrunken_set = next_set.shrink(state.shrink, center)
    if state.last_direction is not None and state.exploration_radius > 0:
        dim = state.iterate.shape[0] - 1
        gradient = (dim / state.exploration_radius) * reward * state.last_direction
        target = state.iterate + state.step_size * gradient
    else:
        target = state.iterate
    if not state.shrunken_set.contains(target, tol=1e-10):
        target = project_to_set(target, state.shrunken_set)
    state.iterate = target
    state.last_direction = None
    state.horizon -= 1
    state.steps_taken += 1
    return state


@dataclass
class Exp3State:
    """Exponential-weights bandit with explicit exploration mixing."""

    n_arms: int
    cum_est: np.ndarray
    learning_rate: float
    explore_mix: float
    t: int = 0
    clamp_warnings: int = 0


def exp3_init(n_arms: int, horizon: int | None = None,
              learning_rate: float | None = None,
              explore_mix: float | None = None) -> Exp3State:
    if n_arms < 1:
        raise InvalidInputError("need at least one arm")
    if explore_mix is None:
        if horizon is None or horizon < 1:
            raise InvalidInputError("exp3 needs a horizon to derive its defaults")
        explore_mix = min(1.0, math.sqrt(n_arms * math.log(max(n_arms, 2))
                                         / ((math.e - 1) * horizon)))
    if learning_rate is None:
        learning_rate = explore_mix / n_arms
    return Exp3State(n_arms=n_arms, cum_est=np.zeros(n_arms),
                     learning_rate=float(learning_rate), explore_mix=float(explore_mix))


def exp3_probs(state: Exp3State) -> np.ndarray:
    z = state.learning_rate * (state.cum_est - np.max(state.cum_est))
    w = np.exp(z)
    return (1.0 - state.explore_mix) * w / float(np.sum(w)) \
        + state.explore_mix / state.n_arms


def exp3_next(state: Exp3State, rng: np.random.Generator) -> int:
    p = exp3_probs(state)
    c = np.cumsum(p)
    return int(np.searchsorted(c, rng.random() * c[-1], side="right"))


def exp3_update(state: Exp3State, arm: int, reward: float) -> Exp3State:
    """Importance-weighted update; rewards outside [0,1] are clamped and
    counted in clamp_warnings."""
    if not (0 <= arm < state.n_arms):
        raise InvalidInputError(f"arm {arm} out of range")
    if reward < 0.0 or reward > 1.0:
        state.clamp_warnings += 1
        reward = min(1.0, max(0.0, reward))
    p = exp3_probs(state)
    state.cum_est[arm] += reward / p[arm]
    state.t += 1
    return state
