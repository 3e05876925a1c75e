import numpy as np
import pytest

import mirrorflow as mf


def _identity_costs(n):
    """Each agent holds 0.5*x^2 in one coordinate (design [[1]], target 0)."""
    return mf.make_cost_set(
        [mf.QuadraticCost(np.array([[1.0]]), np.array([0.0])) for _ in range(n)]
    )


def test_initial_state_maps_through_mirror():
    dgf = mf.negative_entropy_dgf(2)
    state = mf.initial_state(dgf, np.ones((3, 2)))
    np.testing.assert_array_equal(state.primal, np.ones((3, 2)))
    # gradient of x log x at 1 is 1 + log 1 = 1
    np.testing.assert_allclose(state.dual, np.ones((3, 2)), atol=1e-15)
    np.testing.assert_array_equal(state.feedback, np.zeros((3, 2)))
    assert state.time == 0.0


def test_vector_field_hand_example():
    # two agents on one edge, local costs 0.5*x^2, x = (1, -1), y = 0:
    # gradients (1, -1), disagreement Lx = (2, -2),
    # dual rate -(g + Lx + y) = (-3, 3), feedback rate Lx = (2, -2)
    cs = _identity_costs(2)
    graph = mf.build_graph(2, [(1, 2)])
    dgf = mf.euclidean_dgf(1)
    state = mf.initial_state(dgf, np.array([[1.0], [-1.0]]))
    dual_rate, feedback_rate = mf.vector_field(state, cs, graph, dgf)
    np.testing.assert_allclose(dual_rate, [[-3.0], [3.0]], atol=1e-15)
    np.testing.assert_allclose(feedback_rate, [[2.0], [-2.0]], atol=1e-15)


def test_euler_step_hand_example():
    # single agent, cost 0.5*x^2, x0 = 1, dt = 0.1: z1 = 1 - 0.1*1 = 0.9
    cs = _identity_costs(1)
    graph = mf.build_graph(1, [])
    dgf = mf.euclidean_dgf(1)
    state = mf.initial_state(dgf, np.array([[1.0]]))
    nxt = mf.euler_step(state, 0.1, cs, graph, dgf)
    np.testing.assert_allclose(nxt.primal, [[0.9]], atol=1e-15)
    np.testing.assert_allclose(nxt.feedback, [[0.0]], atol=1e-15)
    assert nxt.time == pytest.approx(0.1)


def test_euler_step_rejects_bad_dt(small_problem):
    cs, graph, dgf = small_problem
    state = mf.initial_state(dgf, np.zeros((5, 3)))
    with pytest.raises(mf.InvalidParameterError):
        mf.euler_step(state, 0.0, cs, graph, dgf)


def test_equilibrium_is_stationary(small_problem):
    cs, graph, dgf = small_problem
    eq = mf.equilibrium_state(cs, dgf)
    state = mf.NetworkState(
        primal=eq.primal, dual=eq.dual, feedback=eq.feedback, time=0.0
    )
    dual_rate, feedback_rate = mf.vector_field(state, cs, graph, dgf)
    np.testing.assert_allclose(dual_rate, 0.0, atol=1e-10)
    np.testing.assert_allclose(feedback_rate, 0.0, atol=1e-10)
    # feedback rows sum to zero: the local gradients balance at the optimum
    np.testing.assert_allclose(eq.feedback.sum(axis=0), 0.0, atol=1e-9)


def test_simulate_converges_on_small_problem(small_problem):
    cs, graph, dgf = small_problem
    x_star = mf.closed_form_optimum(cs)
    dt = mf.default_step_size(cs, graph)
    traj = mf.simulate(cs, graph, dgf, np.zeros((5, 3)), dt=dt, steps=20000,
                       stride=100, x_star=x_star)
    assert not traj.diverged
    final = traj.final_state
    assert np.max(np.abs(final.primal - x_star)) < 1e-10
    assert mf.consensus_error(final.primal) < 1e-10
    track = traj.scalar_track
    assert track is not None
    # full-resolution track, snapshots strided
    assert track["step"].shape == (20001,)
    assert len(traj) == 201
    assert track["suboptimality"][-1] < 1e-12
    assert traj.metadata["scheme"] == "integral-feedback euler"


def test_feedback_sum_is_conserved(small_problem):
    # column sums of the feedback block stay at their initial zero
    cs, graph, dgf = small_problem
    dt = mf.default_step_size(cs, graph)
    traj = mf.simulate(cs, graph, dgf, np.ones((5, 3)), dt=dt, steps=2000,
                       stride=50)
    sums = np.abs(traj.feedback.sum(axis=1))
    assert float(sums.max()) < 1e-12


def test_trajectory_state_accessors(small_problem):
    cs, graph, dgf = small_problem
    dt = mf.default_step_size(cs, graph)
    traj = mf.simulate(cs, graph, dgf, np.zeros((5, 3)), dt=dt, steps=100,
                       stride=10)
    first = traj.state_at(0)
    np.testing.assert_array_equal(first.primal, np.zeros((5, 3)))
    last = traj.state_at(len(traj) - 1)
    np.testing.assert_array_equal(last.primal, traj.final_state.primal)
    assert last.time == pytest.approx(100 * dt)


def test_divergence_sets_flag_not_exception(small_problem):
    cs, graph, dgf = small_problem
    traj = mf.simulate(cs, graph, dgf, np.zeros((5, 3)), dt=50.0, steps=5000)
    assert traj.diverged
    assert len(traj) < 5002  # truncated early
    assert np.all(np.isfinite(traj.times))


def test_entropy_overflow_marks_divergence():
    cs = _identity_costs(2)
    graph = mf.build_graph(2, [(1, 2)])
    dgf = mf.negative_entropy_dgf(1)
    # a huge step drives the dual past the exp guard
    traj = mf.simulate(cs, graph, dgf, np.full((2, 1), 5.0), dt=1e6, steps=50)
    assert traj.diverged


def test_no_feedback_constant_step_stalls_at_penalty_gap(small_problem):
    cs, graph, dgf = small_problem
    x_star = mf.closed_form_optimum(cs)
    dt = mf.default_step_size(cs, graph)
    traj = mf.simulate_no_feedback(cs, graph, dgf, np.zeros((5, 3)), eta0=dt,
                                   steps=30000, schedule="constant",
                                   stride=300, x_star=x_star)
    assert not traj.diverged
    # stationary point of grad f + Lx = 0, strictly worse than the optimum
    final = traj.final_state
    grads = cs.gradient_stack(final.primal)
    residual = grads + graph.laplacian @ final.primal
    assert np.max(np.abs(residual)) < 1e-8
    gap = traj.scalar_track["suboptimality"][-1]
    assert gap > 1e-6
    assert traj.metadata["scheme"] == "baseline definition v1"


def test_no_feedback_diminishing_outpaced_by_feedback(small_problem):
    cs, graph, dgf = small_problem
    x_star = mf.closed_form_optimum(cs)
    dt = mf.default_step_size(cs, graph)
    kwargs = dict(x0=np.zeros((5, 3)), steps=20000, stride=200, x_star=x_star)
    with_fb = mf.simulate(cs, graph, dgf, dt=dt, **kwargs)
    without = mf.simulate_no_feedback(cs, graph, dgf, eta0=dt,
                                      schedule="diminishing", **kwargs)
    gap_fb = with_fb.scalar_track["suboptimality"][-1]
    gap_no = without.scalar_track["suboptimality"][-1]
    assert gap_fb < gap_no
    # diminishing schedule accumulates sum of eta_k, not steps * eta0
    expected_time = dt * np.sum(1.0 / np.sqrt(np.arange(20000) + 1.0))
    assert without.final_state.time == pytest.approx(expected_time, rel=1e-12)


def test_no_feedback_rejects_unknown_schedule(small_problem):
    cs, graph, dgf = small_problem
    with pytest.raises(mf.InvalidParameterError):
        mf.simulate_no_feedback(cs, graph, dgf, np.zeros((5, 3)), eta0=0.01,
                                steps=10, schedule="warmup")


def test_centralized_descent_reaches_optimum(small_problem):
    cs, _, dgf = small_problem
    x_star = mf.closed_form_optimum(cs)
    traj = mf.centralized_mirror_descent(cs, dgf, np.zeros(3), dt=1e-3,
                                         steps=20000, stride=100)
    np.testing.assert_allclose(traj.primal[-1, 0], x_star, atol=1e-8)


def test_reduce_reconstruct_round_trip(small_problem):
    cs, graph, dgf = small_problem
    sd = mf.spectral_decomposition(graph)
    eq = mf.equilibrium_state(cs, dgf)
    dt = mf.default_step_size(cs, graph)
    traj = mf.simulate(cs, graph, dgf, np.ones((5, 3)), dt=dt, steps=500)
    state = traj.final_state
    back = mf.reconstruct_state(mf.reduce_state(state, eq, sd), dgf, sd, eq)
    np.testing.assert_allclose(back.primal, state.primal, atol=1e-10)
    np.testing.assert_allclose(back.feedback, state.feedback, atol=1e-10)


def test_reduced_simulation_matches_full(small_problem):
    cs, graph, dgf = small_problem
    sd = mf.spectral_decomposition(graph)
    x_star = mf.closed_form_optimum(cs)
    eq = mf.equilibrium_state(cs, dgf, x_star)
    dt = mf.default_step_size(cs, graph)
    x0 = np.ones((5, 3))
    full = mf.simulate(cs, graph, dgf, x0, dt=dt, steps=2000, stride=20)
    reduced = mf.simulate_reduced(cs, sd, dgf, x0, x_star, dt=dt, steps=2000,
                                  stride=20)
    lifted = mf.reconstruct_trajectory(reduced, dgf, sd, eq)
    np.testing.assert_array_equal(lifted.steps, full.steps)
    assert np.max(np.abs(lifted.primal - full.primal)) < 1e-9
    assert np.max(np.abs(lifted.feedback - full.feedback)) < 1e-9
    residual = mf.consensus_component_residual(reduced, sd)
    assert float(residual.max()) < 1e-12


def test_reduced_simulation_single_agent():
    cs = _identity_costs(1)
    graph = mf.build_graph(1, [])
    sd = mf.spectral_decomposition(graph)
    dgf = mf.euclidean_dgf(1)
    reduced = mf.simulate_reduced(cs, sd, dgf, np.array([[1.0]]),
                                  np.array([0.0]), dt=0.1, steps=10)
    assert reduced.memory.shape == (11, 0, 1)
    # x_{k+1} = 0.9 x_k exactly
    np.testing.assert_allclose(
        reduced.offset[:, 0, 0], 0.9 ** np.arange(11), atol=1e-14
    )


def test_default_step_size_hand_value():
    # two agents, identity local Hessians on one edge: H + L has top
    # eigenvalue 3, so the default step is 1/6
    cs = _identity_costs(2)
    graph = mf.build_graph(2, [(1, 2)])
    assert mf.default_step_size(cs, graph) == pytest.approx(1.0 / 6.0)


def test_consensus_error_hand_value():
    primal = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert mf.consensus_error(primal) == pytest.approx(5.0)
    assert mf.consensus_error(np.ones((4, 2))) == 0.0
