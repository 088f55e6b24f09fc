import math

import numpy as np
import pytest

from menurec.core import SetDescriptor
from menurec.errors import (ConfigurationError, ContractViolationError,
                            InfeasibleParametersError)
from menurec.learn import (Exp3State, burn_in, exp3_init, exp3_next,
                           exp3_probs, exp3_update, query_rounds_needed,
                           query_scores, rcfkm_init, rcfkm_next, rcfkm_update)
from menurec.models import make_constant_model
from menurec.simulate import Episode, RewardProcess

CONST_SCORES = np.array([0.6, 0.3, 0.2, 0.1])


def _episode(T, seed=1, scores=CONST_SCORES, gamma=0.9, k=2):
    model = make_constant_model(scores)
    return Episode(model, gamma, RewardProcess.indicator(0, scores.shape[0]),
                   T=T, seed=seed, k=k)


def test_burn_in_consumes_exact_rounds():
    episode = _episode(T=500)
    consumed = burn_in(episode, c=0.5)   # ceil(500^0.5) = 23
    assert consumed == math.ceil(500 ** 0.5)
    assert episode.t == consumed + 1
    assert episode.trace().T == consumed


def test_burn_in_bound_holds_after():
    for horizon_c in (10, 100, 1000):
        gamma = 1 - 1 / horizon_c
        assert gamma ** horizon_c <= 0.5
    episode = _episode(T=10)
    burn_in(episode, t_burn=1)
    assert episode.t == 2


def test_burn_in_needs_budget():
    episode = _episode(T=10)
    with pytest.raises(ConfigurationError):
        burn_in(episode, t_burn=11)


def test_query_scores_constant_model_ratios():
    episode = _episode(T=30_000)
    est = query_scores(episode, 30_000, alpha=0.02, delta=0.05)
    expected = np.array([1.0, 0.5, 1 / 3, 1 / 6])
    assert np.max(est.tilde_f) == 1.0
    assert np.max(np.abs(est.tilde_f - expected)) < 0.02
    assert np.all(est.tilde_f > 0)


def test_query_scores_equal_scores():
    episode = _episode(T=12_000, scores=np.full(4, 0.7))
    est = query_scores(episode, 12_000, alpha=0.05, delta=0.05)
    assert np.max(np.abs(est.tilde_f - 1.0)) < 0.1


def test_query_minimum_rounds_formula():
    # per-cell floor: ceil(log(2n/delta) / (2 alpha^2)) shown rounds per set
    needed = query_rounds_needed(0.01, 0.01, 4, 2)
    per_cell = math.log(2 * 4 / 0.01) / (2 * 0.01 ** 2)
    assert needed == math.ceil(per_cell * 3)
    episode = _episode(T=200)
    with pytest.raises(InfeasibleParametersError):
        query_scores(episode, 100, alpha=0.01, delta=0.01)
    assert episode.t == 1  # nothing consumed


def test_query_padding_when_cells_uneven():
    # n=6, k=3: items 1..5 in cells of 2 -> last cell padded
    scores = np.array([0.6, 0.5, 0.4, 0.3, 0.2, 0.1])
    model = make_constant_model(scores)
    episode = Episode(model, 0.9, RewardProcess.indicator(0, 6), T=30_000,
                      seed=3, k=3)
    est = query_scores(episode, 30_000, alpha=0.05, delta=0.05)
    expected = scores / scores[0]
    assert np.max(np.abs(est.tilde_f - expected)) < 0.05


def test_query_scores_failure_rate_within_delta():
    alpha, delta = 0.1, 0.05
    t_query = query_rounds_needed(alpha, delta, 4, 2)
    expected = np.array([1.0, 0.5, 1 / 3, 1 / 6])
    failures = 0
    for seed in range(200):
        episode = _episode(T=t_query, seed=seed)
        est = query_scores(episode, t_query, alpha=alpha, delta=delta)
        # conversion to max-normalized scores can double per-frequency error
        if np.max(np.abs(est.tilde_f - expected)) > 2 * alpha:
            failures += 1
    assert failures / 200 <= delta


def test_rcfkm_zero_exploration_emits_iterate():
    state = rcfkm_init(SetDescriptor(n=4), horizon=100, exploration_radius=0.0)
    rng = np.random.default_rng(0)
    assert np.allclose(rcfkm_next(state, rng), state.iterate)


def test_rcfkm_emission_near_center():
    state = rcfkm_init(SetDescriptor(n=4), horizon=100, exploration_radius=0.01)
    rng = np.random.default_rng(0)
    y = rcfkm_next(state, rng)
    assert np.linalg.norm(y - state.iterate) <= 0.01 + 1e-12


def test_rcfkm_emission_mean_matches_iterate():
    state = rcfkm_init(SetDescriptor(n=4), horizon=100)
    rng = np.random.default_rng(7)
    emissions = np.stack([rcfkm_next(state, rng) for _ in range(10_000)])
    delta = state.exploration_radius
    assert np.max(np.abs(emissions.mean(axis=0) - state.iterate)) <= 3 * delta / 100


def test_rcfkm_zero_rewards_stays_in_shrunken_set():
    sd = SetDescriptor(n=4)
    state = rcfkm_init(sd, horizon=500)
    rng = np.random.default_rng(1)
    for _ in range(500):
        y = rcfkm_next(state, rng)
        assert sd.contains(y, tol=1e-9)
        state = rcfkm_update(state, 0.0)
        assert state.shrunken_set.contains(state.iterate, tol=1e-8)


def test_rcfkm_fixed_linear_reward_regret():
    r = np.array([1.0, 0.3, 0.2, 0.1])
    T = 10_000
    regrets = []
    for seed in range(3):
        rng = np.random.default_rng(seed)
        state = rcfkm_init(SetDescriptor(n=4), T)
        total = 0.0
        for _ in range(T):
            x = rcfkm_next(state, rng)
            reward = float(r @ x)
            total += reward
            state = rcfkm_update(state, reward)
        regrets.append(np.max(r) * T - total)
    assert np.mean(regrets) <= 5 * T ** 0.75


def test_rcfkm_perturbed_actions_regret():
    r = np.array([1.0, 0.3, 0.2, 0.1])
    T = 10_000
    eps = T ** -0.25
    regrets = []
    for seed in range(3):
        rng = np.random.default_rng(seed)
        state = rcfkm_init(SetDescriptor(n=4), T)
        total = 0.0
        for _ in range(T):
            x = rcfkm_next(state, rng)
            d = rng.standard_normal(4)
            d -= d.mean()
            d /= np.linalg.norm(d)
            reward = float(np.clip(r @ (x + eps * d), 0, 1))
            total += reward
            state = rcfkm_update(state, reward)
        regrets.append(np.max(r) * T - total)
    assert np.mean(regrets) <= 1.5 * 5 * T ** 0.75


def test_rcfkm_contracting_sets_feasible_emissions():
    rng = np.random.default_rng(5)
    floors = np.zeros(4)
    sd = SetDescriptor(n=4, floors=floors)
    state = rcfkm_init(sd, horizon=200)
    for step in range(200):
        y = rcfkm_next(state, rng)
        assert state.action_set.contains(y, tol=1e-9)
        floors = floors + 1e-5  # keep contracting slowly
        sd = SetDescriptor(n=4, floors=floors.copy())
        state = rcfkm_update(state, float(rng.random()), sd)


def test_rcfkm_rejects_non_contracting_set():
    state = rcfkm_init(SetDescriptor(n=4, floors=np.full(4, 0.05)), horizon=10)
    rng = np.random.default_rng(2)
    rcfkm_next(state, rng)
    wider = SetDescriptor(n=4, floors=np.full(4, 0.01))
    with pytest.raises(ContractViolationError):
        rcfkm_update(state, 0.5, wider)


def test_exp3_two_arms_converges():
    T = 10_000
    for seed in range(5):
        state = exp3_init(2, horizon=T)
        rng = np.random.default_rng(seed)
        last = []
        for t in range(T):
            arm = exp3_next(state, rng)
            reward = 1.0 if arm == 0 else 0.0
            state = exp3_update(state, arm, reward)
            if t >= 0.9 * T:
                last.append(arm)
        assert np.mean(np.array(last) == 0) >= 0.9


def test_exp3_identical_rewards_stays_near_uniform():
    T = 10_000
    for seed in range(5):
        state = exp3_init(3, horizon=T)
        rng = np.random.default_rng(seed + 10)
        for _ in range(T):
            arm = exp3_next(state, rng)
            state = exp3_update(state, arm, 0.5)
        assert np.max(np.abs(exp3_probs(state) - 1 / 3)) < 0.1


def test_exp3_single_arm():
    state = exp3_init(1, horizon=100)
    rng = np.random.default_rng(0)
    assert exp3_next(state, rng) == 0
    assert exp3_probs(state)[0] == pytest.approx(1.0)


def test_exp3_probs_positive_and_normalized():
    state = exp3_init(5, horizon=1000)
    rng = np.random.default_rng(3)
    for _ in range(200):
        arm = exp3_next(state, rng)
        state = exp3_update(state, arm, float(rng.random()))
        p = exp3_probs(state)
        assert np.min(p) > 0
        assert np.sum(p) == pytest.approx(1.0, abs=1e-9)


def test_exp3_clamps_out_of_range_rewards():
    state = exp3_init(2, horizon=100)
    state = exp3_update(state, 0, 1.7)
    state = exp3_update(state, 1, -0.3)
    assert state.clamp_warnings == 2
