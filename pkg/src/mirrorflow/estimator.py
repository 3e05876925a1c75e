"""Scikit-learn estimator facade over the network solver.

Wraps the simulator as a least-squares regressor: rows are split across
a simulated agent network, the integral-feedback dynamics run to
consensus, and the shared minimizer becomes the coefficient vector.
Exists for pipeline interoperability (``get_params``/``set_params``,
``fit``/``predict``/``score``); the underlying modules remain the
primary interface for simulation studies.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dynamics import consensus_error, default_step_size, simulate
from .graph import build_graph, complete_graph, cycle_graph, random_connected_graph
from .mirror import euclidean_dgf, negative_entropy_dgf
from .objective import QuadraticCost, make_cost_set

_TOPOLOGIES = ("cycle", "complete", "random")
_DGFS = ("euclidean", "entropy")


class MirrorDescentRegressor(RegressorMixin, BaseEstimator):
    """Distributed least-squares via integral-feedback mirror descent.

    Parameters
    ----------
    n_agents : int, default 4
        Number of simulated agents the rows are split across.
    topology : {"cycle", "complete", "random"}, default "cycle"
        Communication graph between agents.
    edge_probability : float, default 0.3
        Extra-edge density for the random topology; ignored otherwise.
    dgf : {"euclidean", "entropy"}, default "euclidean"
        Mirror map. The entropy map constrains iterates (and therefore
        coefficients) to be strictly positive; use it only when the
        regression solution is expected in the positive orthant.
    step_size : float or None, default None
        Euler step size; None picks half the reciprocal of the stiffest
        curvature mode.
    n_steps : int, default 20000
        Number of Euler steps.
    fit_intercept : bool, default True
        Append a constant feature and report it as ``intercept_``.
    random_state : int, default 0
        Seed for the random topology; unused by the dynamics, which are
        deterministic.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Network-averaged primal variable after the run.
    intercept_ : float
        Fitted intercept (0.0 when ``fit_intercept=False``).
    consensus_error_ : float
        Final max pairwise disagreement between agents.
    n_iter_ : int
        Completed simulation steps.
    """

    def __init__(
        self,
        n_agents: int = 4,
        topology: str = "cycle",
        edge_probability: float = 0.3,
        dgf: str = "euclidean",
        step_size: float | None = None,
        n_steps: int = 20000,
        fit_intercept: bool = True,
        random_state: int = 0,
    ):
        self.n_agents = n_agents
        self.topology = topology
        self.edge_probability = edge_probability
        self.dgf = dgf
        self.step_size = step_size
        self.n_steps = n_steps
        self.fit_intercept = fit_intercept
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        if self.n_agents < 1:
            raise ValueError(f"n_agents must be >= 1, got {self.n_agents}")
        if self.topology not in _TOPOLOGIES:
            raise ValueError(f"topology must be one of {_TOPOLOGIES}, got {self.topology!r}")
        if self.dgf not in _DGFS:
            raise ValueError(f"dgf must be one of {_DGFS}, got {self.dgf!r}")
        if X.shape[0] < self.n_agents:
            raise ValueError(
                f"need at least one row per agent: {X.shape[0]} rows, "
                f"{self.n_agents} agents"
            )

        features = X.astype(float)
        if self.fit_intercept:
            features = np.hstack([features, np.ones((features.shape[0], 1))])
        dim = features.shape[1]

        row_blocks = np.array_split(np.arange(features.shape[0]), self.n_agents)
        costs = [
            QuadraticCost(design=features[idx], targets=y[idx].astype(float))
            for idx in row_blocks
        ]
        cost_set = make_cost_set(costs)

        graph = self._build_graph()
        mirror = (
            euclidean_dgf(dim) if self.dgf == "euclidean" else negative_entropy_dgf(dim)
        )
        dt = self.step_size
        if dt is None:
            dt = default_step_size(cost_set, graph)
        x0 = np.zeros((self.n_agents, dim)) if self.dgf == "euclidean" else np.ones(
            (self.n_agents, dim)
        )

        trajectory = simulate(
            cost_set=cost_set,
            graph=graph,
            dgf=mirror,
            x0=x0,
            dt=dt,
            steps=int(self.n_steps),
            stride=max(1, int(self.n_steps)),
        )
        if trajectory.diverged:
            warnings.warn(
                "network simulation diverged; coefficients are unreliable "
                "(reduce step_size)",
                ConvergenceWarning,
            )

        final = trajectory.final_state.primal
        averaged = final.mean(axis=0)
        if self.fit_intercept:
            self.coef_ = averaged[:-1]
            self.intercept_ = float(averaged[-1])
        else:
            self.coef_ = averaged
            self.intercept_ = 0.0
        self.consensus_error_ = consensus_error(final)
        self.n_iter_ = int(trajectory.steps[-1])
        self.diverged_ = bool(trajectory.diverged)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return X @ self.coef_ + self.intercept_

    def _build_graph(self):
        if self.n_agents == 1:
            return build_graph(1, [])
        if self.n_agents == 2:
            # both named generators need n >= 2; a single edge is the
            # only connected option either way
            return build_graph(2, [(1, 2)])
        if self.topology == "cycle":
            return cycle_graph(self.n_agents)
        if self.topology == "complete":
            return complete_graph(self.n_agents)
        seed = 0 if self.random_state is None else int(self.random_state)
        return random_connected_graph(
            self.n_agents, edge_probability=self.edge_probability, seed=seed
        )
