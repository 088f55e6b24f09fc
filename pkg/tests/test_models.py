from itertools import combinations

import numpy as np
import pytest

from menurec.errors import InvalidInputError
from menurec.menus import menu_choice_distribution, menu_times
from menurec.models import (ClassSpec, make_constant_model,
                            make_linear_mix_model, make_lottery_model,
                            make_mis_model, make_pseudo_increasing_model,
                            model_from_spec, simplex_grid,
                            uniform_mixing_matrix, verify_class)


def brute_force_mis(num_vertices, edges):
    """Independent oracle: largest independent set by subset enumeration."""
    edge_set = {tuple(sorted(e)) for e in edges}
    best = 0
    for size in range(num_vertices, 0, -1):
        for subset in combinations(range(num_vertices), size):
            s = set(subset)
            if not any(u in s and v in s for u, v in edge_set):
                return size
    return best


def test_linear_mix_uniform_memory():
    model = make_linear_mix_model(4, 0.1, np.eye(4))
    f = model.scores(np.full(4, 0.25))
    assert np.allclose(f, 0.325)
    assert model.meta.const_sum == pytest.approx(1.3)


def test_linear_mix_endpoint():
    model = make_linear_mix_model(4, 0.1, np.eye(4))
    f = model.scores(np.array([1.0, 0, 0, 0]))
    assert np.allclose(f, [1.0, 0.1, 0.1, 0.1])


def test_linear_mix_constant_sum_random():
    rng = np.random.default_rng(3)
    A = rng.dirichlet(np.ones(5), size=5).T  # columns sum to 1
    model = make_linear_mix_model(5, 0.2, A)
    for _ in range(100):
        v = rng.dirichlet(np.ones(5))
        assert np.sum(model.scores(v)) == pytest.approx(model.meta.const_sum, abs=1e-9)


def test_linear_mix_rejects_bad_matrix():
    with pytest.raises(InvalidInputError):
        make_linear_mix_model(3, 0.1, np.ones((3, 3)))


def test_pseudo_increasing_beta_zero_is_envelope():
    model = make_pseudo_increasing_model(4, 0.1, 0.0, uniform_mixing_matrix(4))
    assert model.meta.sigma == pytest.approx(1.0)
    rng = np.random.default_rng(5)
    for _ in range(50):
        v = rng.dirichlet(np.ones(4))
        assert np.allclose(model.scores(v), 0.9 * v + 0.1)


def test_pseudo_increasing_hand_value():
    model = make_pseudo_increasing_model(4, 0.1, 0.2, uniform_mixing_matrix(4))
    f = model.scores(np.array([1.0, 0, 0, 0]))
    assert f[0] == pytest.approx(0.9 * (0.8 * 1.0 + 0.2 * 0.25) + 0.1)
    assert f[0] == pytest.approx(0.865)


def test_pseudo_increasing_envelope_verified_on_grid():
    model = make_pseudo_increasing_model(4, 0.1, 0.2, uniform_mixing_matrix(4))
    report = verify_class(model, grid_resolution=0.05)
    assert report.max_violation <= 1e-9
    assert report.passed


def test_constant_model_choice_probs():
    model = make_constant_model(np.array([0.6, 0.3, 0.2, 0.1]))
    p = menu_choice_distribution((0, 1), model.scores(np.full(4, 0.25)))
    assert np.allclose(p, [2 / 3, 1 / 3, 0, 0])


def test_constant_model_uniform_choice():
    model = make_constant_model(np.full(4, 0.4))
    p = menu_choice_distribution((1, 3), model.scores(np.full(4, 0.25)))
    assert p[1] == pytest.approx(0.5) and p[3] == pytest.approx(0.5)


def test_constant_model_ird_independent_of_memory():
    model = make_constant_model(np.array([0.6, 0.3, 0.2, 0.1]))
    rng = np.random.default_rng(7)
    x = np.array([0.4, 0.3, 0.2, 0.1])
    base = menu_times(x, model.scores(np.full(4, 0.25)), 2)
    for _ in range(20):
        v = rng.dirichlet(np.ones(4))
        assert np.allclose(menu_times(x, model.scores(v), 2), base)


def test_mis_model_uniform_independent_set():
    # path 0-1-2-3 on 4 vertices; items 1..4 map to vertices 0..3
    model = make_mis_model(4, [(0, 1), (1, 2), (2, 3)], lam=0.1)
    v = np.zeros(5)
    v[1] = v[3] = 0.35   # vertices {0, 2}: independent
    v[0] = 0.3
    f = model.scores(v)
    assert f[0] == pytest.approx(2 * 0.9 / 4 + 0.1)
    assert np.allclose(f[1:], 0.1)


def test_mis_model_adjacent_pair_scores_floor():
    model = make_mis_model(4, [(0, 1), (1, 2), (2, 3)], lam=0.1)
    v = np.zeros(5)
    v[1] = v[2] = 0.5    # vertices {0, 1}: adjacent
    assert model.scores(v)[0] == pytest.approx(0.1)


def test_mis_model_best_stationary_is_maximum_independent_set():
    graphs = [
        (4, [(0, 1), (1, 2), (2, 3)]),                      # path
        (5, [(i, (i + 1) % 5) for i in range(5)]),           # cycle
        (4, list(combinations(range(4), 2))),                # complete
        (5, []),                                             # empty
    ]
    rng = np.random.default_rng(13)
    for nv in (6, 7, 8):
        edges = [e for e in combinations(range(nv), 2) if rng.random() < 0.4]
        graphs.append((nv, edges))
    for nv, edges in graphs:
        model = make_mis_model(nv, edges, lam=0.1)
        mis = brute_force_mis(nv, edges)
        best_score, best_sizes = -1.0, set()
        for size in range(1, nv + 1):
            for subset in combinations(range(nv), size):
                v = np.zeros(nv + 1)
                v[[j + 1 for j in subset]] = 1.0 / size
                f0 = model.scores(v)[0]
                if f0 > best_score + 1e-12:
                    best_score, best_sizes = f0, {subset}
                elif abs(f0 - best_score) <= 1e-12:
                    best_sizes.add(subset)
        expected = 0.9 * mis / nv + 0.1
        assert best_score == pytest.approx(expected)
        assert all(len(s) == mis for s in best_sizes)


def test_mis_path_graph_best_score():
    # path on 4 vertices, maximum independent set has size 2
    model = make_mis_model(4, [(0, 1), (1, 2), (2, 3)], lam=0.1)
    assert brute_force_mis(4, [(0, 1), (1, 2), (2, 3)]) == 2
    v = np.zeros(5)
    v[1] = v[3] = 0.5
    assert model.scores(v)[0] == pytest.approx(0.9 * 2 / 4 + 0.1)


def test_lottery_parameters():
    model = make_lottery_model(8, 0.4, seed=11)
    assert model.meta.lam == pytest.approx(1 / 5)
    scorer = model.score_fn
    assert scorer.k == 4
    assert scorer.h == 3


def test_lottery_optimal_menu_probability():
    model = make_lottery_model(8, 0.4, seed=11)
    scorer = model.score_fn
    state = (2, 5, 1)
    g = scorer.lottery_items(state)
    v = scorer.state_vectors[scorer.states.index(state)]
    f = model.scores(v)
    third = next(i for i in range(1, 8) if i not in set(g))
    menu = tuple(sorted([0, *g, third]))
    p = menu_choice_distribution(menu, f)
    assert p[0] == pytest.approx(1 / 8)
    # any menu missing one lottery item: exact appendix ratio, below 3/(4n)
    others = [i for i in range(1, 8) if i not in set(g)][:3]
    menu_bad = tuple(sorted([0, int(g[0]), *others[:2]]))
    p_bad = menu_choice_distribution(menu_bad, f)
    assert p_bad[0] == pytest.approx((1 / 5) / (2 + 2 / 5))
    assert p_bad[0] <= 3 / (4 * 8)


def test_lottery_deterministic_given_seed():
    a = make_lottery_model(8, 0.4, seed=4)
    b = make_lottery_model(8, 0.4, seed=4)
    c = make_lottery_model(8, 0.4, seed=5)
    rng = np.random.default_rng(0)
    diffs = 0
    for _ in range(100):
        v = rng.dirichlet(np.ones(8))
        fa, fb, fc = a.scores(v), b.scores(v), c.scores(v)
        assert np.array_equal(fa, fb)
        diffs += int(not np.array_equal(fa, fc))
    assert diffs > 0


def test_lottery_rejects_bad_gamma():
    with pytest.raises(InvalidInputError):
        make_lottery_model(8, 0.7, seed=1)
    with pytest.raises(InvalidInputError):
        make_lottery_model(7, 0.4, seed=1)


def test_verify_class_passes_for_all_constructors():
    models = [
        make_linear_mix_model(4, 0.1, np.eye(4)),
        make_linear_mix_model(5, 0.25, uniform_mixing_matrix(5)),
        make_pseudo_increasing_model(4, 0.1, 0.0, uniform_mixing_matrix(4)),
        make_pseudo_increasing_model(5, 0.2, 0.3, uniform_mixing_matrix(5)),
        make_constant_model(np.array([0.6, 0.3, 0.2, 0.1])),
        make_mis_model(4, [(0, 1), (1, 2), (2, 3)], lam=0.1),
        make_lottery_model(4, 0.25, seed=2),
    ]
    for model in models:
        report = verify_class(model, grid_resolution=0.05)
        assert report.max_violation <= 1e-9, (model.spec, report.components)
        assert report.passed


def test_verify_class_flags_wrong_class():
    model = make_constant_model(np.array([0.6, 0.3, 0.2, 0.1]))
    wrong = ClassSpec(name="pseudo_increasing", lam=0.1, sigma=1.2)
    report = verify_class(model, wrong, grid_resolution=0.1)
    assert report.max_violation > 0.01
    assert not report.passed


def test_verify_class_lipschitz_estimate_below_declared():
    model = make_linear_mix_model(4, 0.1, np.eye(4))
    report = verify_class(model, grid_resolution=0.05)
    assert report.lipschitz_estimate <= model.meta.lipschitz + 1e-9


def test_simplex_grid_counts():
    grid = simplex_grid(3, 0.25)
    assert grid.shape == (15, 3)
    assert np.allclose(grid.sum(axis=1), 1.0)


def test_model_spec_roundtrip():
    models = [
        make_linear_mix_model(4, 0.1, np.eye(4)),
        make_pseudo_increasing_model(4, 0.1, 0.2, uniform_mixing_matrix(4)),
        make_constant_model(np.array([0.6, 0.3, 0.2, 0.1])),
        make_mis_model(4, [(0, 1), (1, 2)], lam=0.1),
        make_lottery_model(8, 0.4, seed=11),
    ]
    rng = np.random.default_rng(19)
    for model in models:
        clone = model_from_spec(model.spec)
        for _ in range(10):
            v = rng.dirichlet(np.ones(model.n))
            assert np.allclose(model.scores(v), clone.scores(v))
