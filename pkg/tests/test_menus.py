import numpy as np
import pytest

from menurec.core import MenuDistribution
from menurec.errors import (InvalidInputError, InvalidModelError,
                            NotRealizableError, ResourceLimitError)
from menurec.menus import (build_menu_distribution, eird_contains_grid,
                           greedy_menu_stages, ird_contains,
                           ird_contains_oracle, induced_item_distribution,
                           menu_choice_distribution, menu_times)
from menurec.models import make_constant_model, make_linear_mix_model

F = np.array([0.5, 0.5, 0.25, 0.25])
X = np.array([0.4, 0.3, 0.2, 0.1])


def test_menu_times_hand_example():
    mu = menu_times(X, F, 2)
    expected = 2 * np.array([0.8, 0.6, 0.8, 0.4]) / 2.6
    assert np.allclose(mu, expected)
    assert mu.sum() == pytest.approx(2.0)


def test_menu_times_proportional_scores():
    x = F / F.sum()
    mu = menu_times(x, F, 2)
    assert np.allclose(mu, 0.5)


def test_menu_times_point_mass():
    x = np.array([1.0, 0.0, 0.0, 0.0])
    mu = menu_times(x, F, 2)
    assert mu[0] == pytest.approx(2.0)
    assert np.all(mu[1:] == 0.0)


def test_menu_times_errors():
    with pytest.raises(InvalidModelError):
        menu_times(X, np.array([0.5, 0.0, 0.25, 0.25]), 2)
    with pytest.raises(InvalidInputError):
        menu_times(X, F, 4)


def test_menu_times_scale_invariance():
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = rng.dirichlet(np.ones(5))
        f = rng.uniform(0.1, 1.0, size=5)
        c = rng.uniform(0.2, 5.0)
        assert np.max(np.abs(menu_times(x, f, 2) - menu_times(x, c * f, 2))) < 1e-12


def test_ird_contains_examples():
    assert ird_contains(X, F, 2)
    assert not ird_contains([1.0, 0.0, 0.0, 0.0], F, 2)
    assert ird_contains(np.full(4, 0.25), np.full(4, 0.7), 2)


def test_ird_oracle_agrees_on_examples():
    assert ird_contains_oracle(X, F, 2)
    assert not ird_contains_oracle([1.0, 0.0, 0.0, 0.0], F, 2)
    assert ird_contains_oracle(np.full(4, 0.25), np.full(4, 0.7), 2)


def test_ird_oracle_accepts_menu_vertices():
    from itertools import combinations
    for menu in combinations(range(4), 2):
        p = menu_choice_distribution(menu, F)
        assert ird_contains_oracle(p, F, 2)
        assert ird_contains(p, F, 2, tol=1e-9)


def test_ird_oracle_resource_cap():
    with pytest.raises(ResourceLimitError):
        ird_contains_oracle(np.full(13, 1 / 13), np.full(13, 0.5), 2)


def test_threshold_test_matches_oracle_random():
    rng = np.random.default_rng(31)
    checked = 0
    for _ in range(120):
        n = int(rng.integers(4, 9))
        k = int(rng.integers(2, 4))
        f = rng.uniform(0.1, 1.0, size=n)
        x = rng.dirichlet(np.ones(n))
        mu_max = float(np.max(menu_times(x, f, k)))
        if abs(mu_max - 1.0) <= 1e-6:
            continue
        assert ird_contains(x, f, k) == ird_contains_oracle(x, f, k)
        checked += 1
    assert checked > 100


def test_menu_choice_distribution():
    p = menu_choice_distribution((0, 1), np.array([0.6, 0.3, 0.2, 0.1]))
    assert np.allclose(p, [2 / 3, 1 / 3, 0, 0])


def test_induced_point_mass_menu():
    z = MenuDistribution(menus=((0, 1),), probs=np.array([1.0]))
    got = induced_item_distribution(z, np.array([0.6, 0.3, 0.2, 0.1]))
    assert np.allclose(got, [2 / 3, 1 / 3, 0, 0])


def test_induced_uniform_menus_constant_scores():
    from itertools import combinations
    menus = tuple(combinations(range(4), 2))
    z = MenuDistribution(menus=menus, probs=np.full(len(menus), 1 / len(menus)))
    got = induced_item_distribution(z, np.full(4, 0.3))
    assert np.allclose(got, 0.25)


def test_build_exact_for_proportional_target():
    # stages * k is a multiple of n, so the cycling construction is exact
    x = F / F.sum()
    z = build_menu_distribution(x, F, 2, epsilon=0.5)
    assert np.max(np.abs(induced_item_distribution(z, F) - x)) < 1e-9


def test_build_accuracy_and_support_on_hand_instance():
    eps = 0.01
    z = build_menu_distribution(X, F, 2, epsilon=eps)
    x_hat = induced_item_distribution(z, F)
    assert np.max(np.abs(x_hat - X)) <= eps
    assert z.support_size <= int(np.ceil(4 / (eps * 4)))


def test_build_stage_count_exact():
    for eps in (0.1, 0.01, 0.37):
        tau = eps * 4 / 4
        mu = menu_times(X, F, 2)
        stages = greedy_menu_stages(mu, 2, tau, int(np.ceil(1 / tau)))
        assert len(stages) == int(np.ceil(1 / tau))


def test_build_vacuous_epsilon():
    z = build_menu_distribution(X, F, 2, epsilon=1.0)
    assert z.support_size >= 1
    assert np.max(np.abs(induced_item_distribution(z, F) - X)) <= 1.0


def test_build_rejects_unrealizable():
    with pytest.raises(NotRealizableError):
        build_menu_distribution([1.0, 0.0, 0.0, 0.0], F, 2, epsilon=0.1)


def test_build_never_shows_zero_mass_items():
    x = np.array([0.5, 0.5, 0.0, 0.0])
    z = build_menu_distribution(x, F, 2, epsilon=0.05)
    for menu in z.menus:
        assert 2 not in menu and 3 not in menu


def test_build_accuracy_random_instances():
    rng = np.random.default_rng(17)
    done = 0
    while done < 40:
        n = int(rng.integers(4, 8))
        k = int(rng.integers(2, 4))
        f = rng.uniform(0.1, 1.0, size=n)
        x = rng.dirichlet(np.ones(n))
        if not ird_contains(x, f, k):
            continue
        for eps in (0.1, 0.01):
            z = build_menu_distribution(x, f, k, eps)
            err = np.max(np.abs(induced_item_distribution(z, f) - x))
            assert err <= eps + 1e-12
            assert z.support_size <= int(np.ceil(n / (eps * k * k)))
        done += 1


def test_eird_grid_constant_scores_independent_of_grid():
    model = make_constant_model(np.array([0.6, 0.3, 0.2, 0.1]))
    rng = np.random.default_rng(23)
    grid_small = [np.full(4, 0.25)]
    grid_big = [rng.dirichlet(np.ones(4)) for _ in range(20)]
    for x in (X, np.array([0.7, 0.1, 0.1, 0.1])):
        a = eird_contains_grid(x, model, 2, grid_small)
        b = eird_contains_grid(x, model, 2, grid_big)
        assert a == b
        assert a == ird_contains(x, model.scores(np.full(4, 0.25)), 2)


def test_eird_grid_high_floor_uniform_always_inside():
    # score floor at k^2/n: uniform is realizable from every memory vector
    n, k = 8, 2
    model = make_linear_mix_model(n, lam=k * k / n, A=np.eye(n))
    rng = np.random.default_rng(29)
    grid = [rng.dirichlet(np.ones(n)) for _ in range(30)]
    assert eird_contains_grid(np.full(n, 1 / n), model, k, grid)


def test_eird_grid_point_mass_never_inside():
    model = make_constant_model(np.full(4, 0.5))
    assert not eird_contains_grid(np.array([1.0, 0, 0, 0]), model, 2,
                                  [np.full(4, 0.25)])
