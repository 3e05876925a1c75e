import numpy as np
import pytest

import mirrorflow as mf

from helpers import central_difference_gradient


def test_quadratic_cost_hand_example():
    # rows (1, 0) -> 1 and (0, 1) -> -1: value at x is
    # 0.5*((x1 - 1)^2 + (x2 + 1)^2)
    design = np.array([[1.0, 0.0], [0.0, 1.0]])
    targets = np.array([1.0, -1.0])
    cost = mf.QuadraticCost(design, targets)
    assert cost.dim == 2
    x = np.array([2.0, 3.0])
    assert cost.value(x) == pytest.approx(0.5 * (1.0 + 16.0))
    np.testing.assert_allclose(cost.gradient(x), [1.0, 4.0], atol=1e-14)
    np.testing.assert_allclose(cost.hessian(), np.eye(2), atol=1e-14)


def test_quadratic_cost_gradient_matches_finite_differences(rng):
    design = rng.normal(size=(7, 3))
    targets = rng.normal(size=7)
    cost = mf.QuadraticCost(design, targets)
    for _ in range(5):
        x = rng.normal(size=3)
        fd = central_difference_gradient(cost.value, x)
        np.testing.assert_allclose(cost.gradient(x), fd, rtol=1e-6, atol=1e-8)


def test_quadratic_cost_validates_shapes():
    with pytest.raises(mf.DimensionMismatchError):
        mf.QuadraticCost(np.zeros((3, 2)), np.zeros(4))
    cost = mf.QuadraticCost(np.eye(2), np.zeros(2))
    with pytest.raises(mf.DimensionMismatchError):
        cost.value(np.zeros(3))


def test_cost_set_aggregates(rng):
    costs = [
        mf.QuadraticCost(rng.normal(size=(5, 3)), rng.normal(size=5))
        for _ in range(4)
    ]
    cs = mf.make_cost_set(costs)
    assert cs.n_agents == 4
    assert cs.dim == 3
    x = rng.normal(size=3)
    assert cs.global_value(x) == pytest.approx(sum(c.value(x) for c in costs))
    np.testing.assert_allclose(
        cs.global_gradient(x), sum(c.gradient(x) for c in costs), atol=1e-12
    )
    np.testing.assert_allclose(
        cs.global_hessian(), sum(c.hessian() for c in costs), atol=1e-12
    )


def test_gradient_stack_matches_per_agent(rng):
    cs = mf.synthetic_quadratic_costset(4, 3, seed=11)
    points = rng.normal(size=(4, 3))
    stack = cs.gradient_stack(points)
    assert stack.shape == (4, 3)
    for i, cost in enumerate(cs.costs):
        np.testing.assert_allclose(stack[i], cost.gradient(points[i]), atol=1e-12)


def test_make_cost_set_rejects_mixed_dims():
    a = mf.QuadraticCost(np.eye(2), np.zeros(2))
    b = mf.QuadraticCost(np.eye(3), np.zeros(3))
    with pytest.raises(mf.DimensionMismatchError):
        mf.make_cost_set([a, b])
    with pytest.raises(mf.InvalidParameterError):
        mf.make_cost_set([])


def test_closed_form_optimum_is_stationary(rng):
    cs = mf.synthetic_quadratic_costset(5, 3, seed=7)
    x_star = mf.closed_form_optimum(cs)
    np.testing.assert_allclose(cs.global_gradient(x_star), 0.0, atol=1e-9)
    # and it beats nearby points
    f_star = cs.global_value(x_star)
    for _ in range(10):
        assert cs.global_value(x_star + rng.normal(size=3) * 0.1) >= f_star


def test_closed_form_optimum_rejects_rank_deficient():
    design = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    cs = mf.make_cost_set([mf.QuadraticCost(design, np.ones(3))])
    with pytest.raises(mf.RankDeficientError):
        mf.closed_form_optimum(cs)


def test_strong_convexity_assumption_probe():
    good = mf.synthetic_quadratic_costset(3, 2, seed=0)
    assert good.assumption_strong_convexity_holds()
    flat = mf.make_cost_set(
        [mf.QuadraticCost(np.array([[1.0, 0.0]]), np.array([1.0]))] * 2
    )
    assert not flat.assumption_strong_convexity_holds()


def test_synthetic_costset_with_optimum_plants_stationary_point():
    target = np.array([0.8, 1.4, 0.5])
    cs = mf.synthetic_costset_with_optimum(4, 3, target, seed=3)
    np.testing.assert_allclose(cs.global_gradient(target), 0.0, atol=1e-9)
    np.testing.assert_allclose(mf.closed_form_optimum(cs), target, atol=1e-8)


def test_synthetic_generators_are_deterministic():
    a = mf.synthetic_quadratic_costset(3, 2, seed=42)
    b = mf.synthetic_quadratic_costset(3, 2, seed=42)
    for ca, cb in zip(a.costs, b.costs):
        np.testing.assert_array_equal(ca.design, cb.design)
        np.testing.assert_array_equal(ca.targets, cb.targets)
    t1 = mf.synthetic_regression_table(50, 4, seed=9)
    t2 = mf.synthetic_regression_table(50, 4, seed=9)
    np.testing.assert_array_equal(t1, t2)


def test_partition_dataset_standardization(rng):
    table = mf.synthetic_regression_table(120, 3, seed=5)
    cs = mf.partition_dataset(table, n_agents=4, rows_per_agent=30)
    assert cs.n_agents == 4
    assert cs.dim == 4  # 3 features + intercept
    stacked, _ = cs.stacked_design()
    assert stacked.shape == (120, 4)
    # standardized on the used rows: zero mean, unit variance per feature
    np.testing.assert_allclose(stacked[:, :3].mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(stacked[:, :3].std(axis=0), 1.0, atol=1e-10)
    np.testing.assert_array_equal(stacked[:, 3], np.ones(120))


def test_partition_dataset_without_extras():
    table = mf.synthetic_regression_table(60, 3, seed=5)
    cs = mf.partition_dataset(
        table, n_agents=2, rows_per_agent=30, standardize=False, intercept=False
    )
    assert cs.dim == 3
    stacked, targets = cs.stacked_design()
    np.testing.assert_array_equal(stacked, table[:60, :3])
    np.testing.assert_array_equal(targets, table[:60, 3])


def test_partition_dataset_rejects_short_table():
    table = mf.synthetic_regression_table(50, 3, seed=5)
    with pytest.raises(mf.InsufficientDataError):
        mf.partition_dataset(table, n_agents=4, rows_per_agent=30)


def test_load_table_detects_delimiters(tmp_path):
    comma = tmp_path / "a.csv"
    comma.write_text("x,y,target\n1,2,3\n4,5,6\n")
    semi = tmp_path / "b.csv"
    semi.write_text("x;y;target\n1;2;3\n4;5;6\n")
    expected = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    np.testing.assert_array_equal(mf.load_table(comma), expected)
    np.testing.assert_array_equal(mf.load_table(semi), expected)


def test_load_table_rejects_ragged_and_nonnumeric(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n3\n")
    with pytest.raises(mf.DataFormatError):
        mf.load_table(bad)
    worse = tmp_path / "worse.csv"
    worse.write_text("x,y\n1,apple\n")
    with pytest.raises(mf.DataFormatError):
        mf.load_table(worse)


def test_bundled_dataset_shape_and_positive_solution(data_dir):
    table = mf.load_table(data_dir / "synthetic_wine.csv")
    assert table.shape == (4000, 12)
    cs = mf.partition_dataset(table, n_agents=10, rows_per_agent=400)
    x_star = mf.closed_form_optimum(cs)
    assert np.all(x_star > 0), "optimum must sit inside the positive orthant"
