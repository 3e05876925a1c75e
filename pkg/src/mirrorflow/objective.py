"""Local cost functions, dataset partitioning, and the least-squares oracle.

Each agent owns a quadratic loss ``0.5 * ||A x - b||^2``. The global
objective sums the local ones; its minimizer has a closed form through
the pseudo-inverse of the stacked design, which serves as the ground
truth the dynamics are checked against. Non-quadratic costs can be
plugged in as capability records exposing ``value``, ``gradient``,
``hessian`` and ``dim``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import (
    DataFormatError,
    DimensionMismatchError,
    InsufficientDataError,
    InvalidParameterError,
    RankDeficientError,
)

# smallest/largest singular value ratio below which the stacked design
# is treated as rank deficient
_RANK_REL_TOL = 1e-10


@dataclass(frozen=True)
class QuadraticCost:
    """Least-squares block ``0.5 * ||design @ x - targets||^2``."""

    design: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        design = np.asarray(self.design, dtype=float)
        targets = np.asarray(self.targets, dtype=float).ravel()
        if design.ndim != 2 or design.shape[0] < 1 or design.shape[1] < 1:
            raise DimensionMismatchError(
                f"design must be a nonempty 2-d matrix, got shape {design.shape}"
            )
        if targets.shape[0] != design.shape[0]:
            raise DimensionMismatchError(
                f"targets length {targets.shape[0]} does not match "
                f"{design.shape[0]} design rows"
            )
        design.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "targets", targets)

    @property
    def dim(self) -> int:
        return self.design.shape[1]

    @cached_property
    def gram(self) -> np.ndarray:
        g = self.design.T @ self.design
        g.setflags(write=False)
        return g

    @cached_property
    def moment(self) -> np.ndarray:
        m = self.design.T @ self.targets
        m.setflags(write=False)
        return m

    def value(self, x) -> float:
        residual = self.design @ self._check(x) - self.targets
        return float(residual @ residual) / 2.0

    def gradient(self, x) -> np.ndarray:
        x = self._check(x)
        return self.design.T @ (self.design @ x - self.targets)

    def hessian(self, x=None) -> np.ndarray:
        # constant for a quadratic; x accepted for interface uniformity
        return self.gram

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(
                f"expected point of shape ({self.dim},), got {x.shape}"
            )
        return x


@dataclass(frozen=True)
class CostSet:
    """Per-agent costs sharing one decision dimension.

    When every cost is quadratic, stacked Gram-form arrays are
    precomputed so a simulation step touches only d-by-d blocks instead
    of the raw data rows.
    """

    costs: tuple
    dim: int

    def __post_init__(self):
        if len(self.costs) < 1:
            raise InvalidParameterError("cost set needs at least one agent")
        for c in self.costs:
            if c.dim != self.dim:
                raise DimensionMismatchError(
                    f"cost dimension {c.dim} differs from shared dimension {self.dim}"
                )

    @property
    def n_agents(self) -> int:
        return len(self.costs)

    @cached_property
    def is_quadratic(self) -> bool:
        return all(isinstance(c, QuadraticCost) for c in self.costs)

    @cached_property
    def _gram_stack(self) -> np.ndarray:
        return np.stack([c.gram for c in self.costs])

    @cached_property
    def _moment_stack(self) -> np.ndarray:
        return np.stack([c.moment for c in self.costs])

    @cached_property
    def _offsets(self) -> np.ndarray:
        return np.array([float(c.targets @ c.targets) / 2.0 for c in self.costs])

    def global_value(self, x) -> float:
        """Sum of local values at a single shared point."""
        if self.is_quadratic:
            x = np.asarray(x, dtype=float)
            gram = self._gram_stack.sum(axis=0)
            moment = self._moment_stack.sum(axis=0)
            return float(x @ gram @ x / 2.0 - moment @ x + self._offsets.sum())
        return float(sum(c.value(x) for c in self.costs))

    def global_gradient(self, x) -> np.ndarray:
        out = np.zeros(self.dim)
        for c in self.costs:
            out += c.gradient(x)
        return out

    def global_hessian(self, x=None) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for c in self.costs:
            out += c.hessian(x)
        return out

    def gradient_stack(self, points: np.ndarray) -> np.ndarray:
        """Local gradients at per-agent points, rows aligned with agents."""
        points = np.asarray(points, dtype=float)
        if points.shape != (self.n_agents, self.dim):
            raise DimensionMismatchError(
                f"expected points of shape ({self.n_agents}, {self.dim}), "
                f"got {points.shape}"
            )
        if self.is_quadratic:
            return np.einsum("nij,nj->ni", self._gram_stack, points) - self._moment_stack
        return np.stack([c.gradient(points[i]) for i, c in enumerate(self.costs)])

    def stacked_design(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.is_quadratic:
            raise InvalidParameterError("stacked design requires quadratic costs")
        design = np.vstack([c.design for c in self.costs])
        targets = np.concatenate([c.targets for c in self.costs])
        return design, targets

    def assumption_strong_convexity_holds(self, tol: float = 1e-10) -> bool:
        """Whether the global Hessian is positive definite (the regime in
        which the closed-form optimum and the stability certificate apply)."""
        h = self.global_hessian()
        eigs = np.linalg.eigvalsh(0.5 * (h + h.T))
        return bool(eigs[0] > tol * max(eigs[-1], 1.0))


def make_cost_set(costs) -> CostSet:
    costs = tuple(costs)
    if not costs:
        raise InvalidParameterError("cost set needs at least one agent")
    return CostSet(costs=costs, dim=costs[0].dim)


def closed_form_optimum(cost_set: CostSet) -> np.ndarray:
    """Global least-squares minimizer via the stacked pseudo-inverse.

    Requires the stacked design to have full column rank; otherwise the
    global objective is not strongly convex and there is no unique
    minimizer to certify against.
    """
    design, targets = cost_set.stacked_design()
    singular = np.linalg.svd(design, compute_uv=False)
    if singular[-1] <= _RANK_REL_TOL * singular[0]:
        raise RankDeficientError(
            "stacked design is rank deficient "
            f"(singular value ratio {singular[-1] / singular[0]:.2e})"
        )
    solution, *_ = np.linalg.lstsq(design, targets, rcond=None)
    return solution


def partition_dataset(
    table: np.ndarray,
    n_agents: int,
    rows_per_agent: int,
    standardize: bool = True,
    intercept: bool = True,
) -> CostSet:
    """Slice a numeric table into per-agent least-squares blocks.

    The last column is the regression target; agent i receives the
    contiguous rows ``[i*k, (i+1)*k)`` and leftover rows are discarded.
    Standardization (zero mean, unit variance per feature column) is
    computed on the used rows only, and the optional intercept column of
    ones is appended after it.
    """
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[1] < 2:
        raise DataFormatError(
            f"expected a table with >= 2 columns (features + target), got {table.shape}"
        )
    if n_agents < 1 or rows_per_agent < 1:
        raise InvalidParameterError("agents and rows per agent must be positive")
    needed = n_agents * rows_per_agent
    if table.shape[0] < needed:
        raise InsufficientDataError(
            f"need {needed} rows for {n_agents} agents x {rows_per_agent}, "
            f"table has {table.shape[0]}"
        )
    used = table[:needed]
    features = used[:, :-1].copy()
    targets = used[:, -1].copy()

    if standardize:
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        std[std < 1e-12] = 1.0  # constant columns pass through centered
        features = (features - mean) / std
    if intercept:
        features = np.hstack([features, np.ones((needed, 1))])

    costs = []
    for i in range(n_agents):
        block = slice(i * rows_per_agent, (i + 1) * rows_per_agent)
        costs.append(QuadraticCost(design=features[block], targets=targets[block]))
    return make_cost_set(costs)


def load_table(path) -> np.ndarray:
    """Read a delimited numeric table with one header row.

    The delimiter is sniffed from the header: semicolon when present,
    comma otherwise (the two layouts used by common regression CSVs).
    """
    with open(path, "r", newline="") as handle:
        header = handle.readline()
        if not header:
            raise DataFormatError(f"{path}: empty file")
        delimiter = ";" if ";" in header else ","
        reader = csv.reader(handle, delimiter=delimiter)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: non-numeric cell") from exc
    if not rows:
        raise DataFormatError(f"{path}: no data rows after the header")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataFormatError(f"{path}: ragged rows with widths {sorted(widths)}")
    return np.array(rows)


def synthetic_quadratic_costset(n_agents: int, dim: int, seed: int) -> CostSet:
    """Random per-agent quadratics whose sum is strongly convex.

    Each agent gets a (dim+2) x dim standard normal design. The global
    Hessian is checked for positive definiteness and the measure-zero
    degenerate draw is simply redrawn.
    """
    if n_agents < 1 or dim < 1:
        raise InvalidParameterError("agents and dimension must be positive")
    rng = np.random.default_rng(seed)
    rows = dim + 2
    while True:
        costs = [
            QuadraticCost(
                design=rng.standard_normal((rows, dim)),
                targets=rng.standard_normal(rows),
            )
            for _ in range(n_agents)
        ]
        cost_set = make_cost_set(costs)
        if cost_set.assumption_strong_convexity_holds():
            return cost_set


def synthetic_costset_with_optimum(
    n_agents: int, dim: int, optimum, seed: int
) -> CostSet:
    """Random quadratics whose global minimizer equals ``optimum`` exactly.

    Residuals are projected out of the stacked design's column space, so
    the global gradient vanishes at the requested point while individual
    agents keep nonzero local gradients there. Useful for planting
    strictly positive optima inside the entropy domain.
    """
    optimum = np.asarray(optimum, dtype=float)
    if optimum.shape != (dim,):
        raise DimensionMismatchError(
            f"optimum must have shape ({dim},), got {optimum.shape}"
        )
    rng = np.random.default_rng(seed)
    rows = dim + 2
    while True:
        design_blocks = [rng.standard_normal((rows, dim)) for _ in range(n_agents)]
        stacked = np.vstack(design_blocks)
        residual = rng.standard_normal(n_agents * rows)
        # remove the component visible to the normal equations
        coeffs, *_ = np.linalg.lstsq(stacked, residual, rcond=None)
        residual = residual - stacked @ coeffs
        targets = stacked @ optimum + residual
        costs = [
            QuadraticCost(
                design=design_blocks[i],
                targets=targets[i * rows : (i + 1) * rows],
            )
            for i in range(n_agents)
        ]
        cost_set = make_cost_set(costs)
        if cost_set.assumption_strong_convexity_holds():
            return cost_set


def synthetic_regression_table(
    rows: int,
    n_features: int,
    seed: int,
    noise: float = 0.75,
) -> np.ndarray:
    """Generate a regression table with a strictly positive solution.

    Features are correlated Gaussians on deliberately mismatched scales
    (so standardization matters); the target is a positive-weight linear
    model of the standardized features plus a positive offset and noise
    sized like real tabular ratings data (linear fits explain only part
    of the variance). After standardization with an intercept column,
    the least-squares solution stays elementwise positive, which keeps
    the problem inside the positive-orthant mirror map's reach.
    """
    if rows < n_features + 1:
        raise InvalidParameterError("need more rows than features")
    rng = np.random.default_rng(seed)
    latent = rng.standard_normal((rows, n_features))
    # mild cross-feature correlation: heavier mixing inflates the top
    # Gram eigenvalue, which throttles stable step sizes downstream
    mixing = np.eye(n_features) + 0.1 * rng.standard_normal((n_features, n_features))
    raw = latent @ mixing
    scales = 10.0 ** rng.uniform(-1.0, 2.0, size=n_features)
    shifts = rng.uniform(-2.0, 5.0, size=n_features)
    features = raw * scales + shifts

    standardized = (features - features.mean(axis=0)) / features.std(axis=0)
    weights = rng.uniform(0.4, 1.5, size=n_features)
    offset = rng.uniform(1.0, 2.0)
    targets = standardized @ weights + offset + noise * rng.standard_normal(rows)
    return np.hstack([features, targets[:, None]])
