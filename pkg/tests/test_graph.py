import numpy as np
import pytest

import mirrorflow as mf


def test_build_graph_path_of_two():
    g = mf.build_graph(2, [(1, 2)])
    assert g.n == 2
    assert g.edges == ((1, 2),)
    np.testing.assert_array_equal(g.adjacency, [[0, 1], [1, 0]])
    np.testing.assert_array_equal(g.laplacian, [[1, -1], [-1, 1]])
    assert g.degree(1) == 1


def test_build_graph_single_agent():
    g = mf.build_graph(1, [])
    assert g.n == 1
    np.testing.assert_array_equal(g.laplacian, [[0.0]])


def test_build_graph_rejects_self_loop():
    with pytest.raises(mf.SelfLoopError):
        mf.build_graph(3, [(1, 1), (1, 2), (2, 3)])


def test_build_graph_rejects_duplicate_edge():
    with pytest.raises(mf.DuplicateEdgeError):
        mf.build_graph(3, [(1, 2), (2, 1), (2, 3)])


def test_build_graph_rejects_out_of_range_endpoint():
    with pytest.raises(mf.EdgeIndexError):
        mf.build_graph(3, [(1, 2), (2, 4)])


def test_build_graph_rejects_disconnected():
    with pytest.raises(mf.DisconnectedGraphError):
        mf.build_graph(4, [(1, 2), (3, 4)])


def test_cycle_graph_laplacian_spectrum():
    g = mf.cycle_graph(4)
    eigs = np.sort(np.linalg.eigvalsh(g.laplacian))
    np.testing.assert_allclose(eigs, [0.0, 2.0, 2.0, 4.0], atol=1e-12)


def test_complete_graph_laplacian_spectrum():
    g = mf.complete_graph(3)
    eigs = np.sort(np.linalg.eigvalsh(g.laplacian))
    np.testing.assert_allclose(eigs, [0.0, 3.0, 3.0], atol=1e-12)


def test_complete_graph_requires_two_agents():
    with pytest.raises(mf.InvalidParameterError):
        mf.complete_graph(1)


def test_random_connected_graph_is_connected_and_deterministic(rng):
    for n in range(2, 9):
        seed = int(rng.integers(0, 10_000))
        g1 = mf.random_connected_graph(n, 0.2, seed=seed)
        g2 = mf.random_connected_graph(n, 0.2, seed=seed)
        assert g1.edges == g2.edges
        eigs = np.sort(np.linalg.eigvalsh(g1.laplacian))
        assert eigs[1] > 1e-10, "algebraic connectivity must be positive"


def test_random_connected_graph_probability_extremes():
    dense = mf.random_connected_graph(6, 1.0, seed=1)
    assert len(dense.edges) == 15  # all pairs
    sparse = mf.random_connected_graph(6, 1e-12, seed=1)
    assert len(sparse.edges) == 5  # spanning tree, extra edges vanish


def test_random_connected_graph_rejects_bad_probability():
    with pytest.raises(mf.InvalidParameterError):
        mf.random_connected_graph(4, 1.5, seed=0)
    with pytest.raises(mf.InvalidParameterError):
        mf.random_connected_graph(4, 0.0, seed=0)


def test_laplacian_rows_sum_to_zero(rng):
    for _ in range(5):
        n = int(rng.integers(2, 9))
        g = mf.random_connected_graph(n, 0.4, seed=int(rng.integers(1e6)))
        np.testing.assert_allclose(g.laplacian.sum(axis=1), 0.0, atol=1e-12)
        np.testing.assert_array_equal(g.laplacian, g.laplacian.T)


def test_spectral_decomposition_structure():
    g = mf.cycle_graph(5)
    sd = mf.spectral_decomposition(g)
    n = sd.n
    # orthonormal basis, exact consensus first column
    np.testing.assert_allclose(sd.basis.T @ sd.basis, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(
        sd.consensus_direction, np.full(n, 1.0 / np.sqrt(n)), atol=1e-15
    )
    # reduced basis is the rest
    np.testing.assert_allclose(sd.reduced_basis, sd.basis[:, 1:], atol=0)
    # basis diagonalizes the Laplacian
    recon = sd.basis @ np.diag(sd.eigenvalues) @ sd.basis.T
    np.testing.assert_allclose(recon, g.laplacian, atol=1e-10)
    assert sd.eigenvalues[0] == pytest.approx(0.0, abs=1e-12)
    assert sd.algebraic_connectivity > 0.0


def test_sqrt_laplacian_squares_back(rng):
    for _ in range(4):
        n = int(rng.integers(2, 8))
        g = mf.random_connected_graph(n, 0.5, seed=int(rng.integers(1e6)))
        sd = mf.spectral_decomposition(g)
        np.testing.assert_allclose(
            sd.sqrt_laplacian @ sd.sqrt_laplacian, g.laplacian, atol=1e-9
        )
        np.testing.assert_array_equal(sd.sqrt_laplacian, sd.sqrt_laplacian.T)
        # consensus direction is annihilated
        np.testing.assert_allclose(
            sd.sqrt_laplacian @ sd.consensus_direction, 0.0, atol=1e-9
        )


def test_factored_coupling_reproduces_laplacian(rng):
    # S R (S R)^T = L because S r = 0 kills the consensus column.
    for _ in range(4):
        n = int(rng.integers(2, 8))
        g = mf.random_connected_graph(n, 0.4, seed=int(rng.integers(1e6)))
        sd = mf.spectral_decomposition(g)
        sr = sd.sqrt_laplacian @ sd.reduced_basis
        np.testing.assert_allclose(sr @ sr.T, g.laplacian, atol=1e-9)


def test_kron_identity_matches_manual():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    got = mf.kron_identity(m, 3)
    np.testing.assert_array_equal(got, np.kron(m, np.eye(3)))
