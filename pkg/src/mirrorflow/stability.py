"""Linearized stability certificates for the integral-feedback flow.

The dynamics linearized at the equilibrium are governed, in deviation
coordinates, by a block matrix pairing the mirror-map inverse Hessian
with the combined cost-plus-Laplacian curvature and the spectral
coupling into the memory variable. Local exponential stability holds
exactly when every eigenvalue of that matrix has positive real part;
this module assembles the matrix, computes and checks its spectrum,
validates the determinant factorization that underpins the certificate,
and compares the certified rate against the rate measured on simulated
trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    AsymmetricInputError,
    DomainViolationError,
    EigensolverError,
    InsufficientTailError,
    InvalidParameterError,
    SingularFactorError,
    SingularHessianError,
)
from .graph import Graph, kron_identity, spectral_decomposition
from .mirror import DistanceGenerator
from .objective import CostSet
from .dynamics import Equilibrium, Trajectory

# relative symmetry and positivity tolerances, scaled by matrix norm
_SYMMETRY_REL_TOL = 1e-10
_POSITIVITY_REL_TOL = 1e-12
_DET_LOG_TOL = 1e-6


@dataclass(frozen=True)
class LinearizedSystem:
    """Block linearization at the equilibrium.

    ``matrix`` is the (2n-1)d square system matrix whose spectrum is
    certified. The blocks it was assembled from are kept for the
    determinant and pencil identities: the mirror map's inverse Hessian
    and Hessian at the optimum (block diagonal, one block per agent),
    the stacked cost Hessian, the lifted Laplacian, and the coupling
    into the memory directions.
    """

    matrix: np.ndarray
    mirror_inverse_hessian: np.ndarray
    mirror_hessian: np.ndarray
    cost_hessian: np.ndarray
    laplacian: np.ndarray
    coupling: np.ndarray
    n_agents: int
    dim: int

    @property
    def size(self) -> int:
        return (2 * self.n_agents - 1) * self.dim


@dataclass(frozen=True)
class StabilityReport:
    """Certificate outcome: spectrum flags, determinant flags, rate."""

    eigenvalues: np.ndarray
    min_real_part: float
    all_positive: bool
    hl_positive_definite: bool
    hl_smallest_eigenvalue: float
    det_sign_positive: bool
    det_consistent: bool
    rate_estimate: float
    tolerance: float
    violations: tuple

    @property
    def certified(self) -> bool:
        return self.all_positive and self.hl_positive_definite and self.det_sign_positive

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [
                {"re": float(v.real), "im": float(v.imag)} for v in self.eigenvalues
            ],
            "min_real_part": float(self.min_real_part),
            "all_positive": bool(self.all_positive),
            "hl_positive_definite": bool(self.hl_positive_definite),
            "hl_smallest_eigenvalue": float(self.hl_smallest_eigenvalue),
            "det_sign_positive": bool(self.det_sign_positive),
            "det_consistent": bool(self.det_consistent),
            "rate_estimate": float(self.rate_estimate),
            "tolerance": float(self.tolerance),
            "violations": list(self.violations),
            "certified": bool(self.certified),
        }


@dataclass(frozen=True)
class DeterminantCheck:
    """Two determinant evaluations and their agreement.

    The direct path factorizes the assembled matrix; the factored path
    multiplies the determinants of the mirror inverse Hessian, the
    combined curvature, and the Schur complement of the coupling.
    Both are carried as (sign, log|det|) so large instances do not
    overflow.
    """

    sign: float
    log_abs: float
    factored_sign: float
    factored_log_abs: float

    @property
    def value(self) -> float:
        with np.errstate(over="ignore"):
            return float(self.sign * np.exp(self.log_abs))

    @property
    def positive(self) -> bool:
        return self.sign > 0

    @property
    def consistent(self) -> bool:
        return (
            self.sign == self.factored_sign
            and abs(self.log_abs - self.factored_log_abs) < _DET_LOG_TOL
        )


@dataclass(frozen=True)
class RateComparison:
    """Fitted trajectory decay rate against the certified rate."""

    fitted_rate: float
    theoretical_rate: float
    r_squared: float
    n_samples: int
    window: tuple

    @property
    def ratio(self) -> float:
        return self.fitted_rate / self.theoretical_rate


def assemble_linearization(
    cost_set: CostSet,
    graph: Graph,
    dgf: DistanceGenerator,
    x_star,
) -> LinearizedSystem:
    """Build the linearization blocks at a known optimum.

    The mirror-map Hessian is inverted once per agent block; all agents
    share the optimum, so one d-by-d inversion suffices. For a single
    agent the memory directions are empty and the matrix reduces to the
    inverse-Hessian-weighted cost curvature.
    """
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape != (cost_set.dim,):
        raise InvalidParameterError(
            f"optimum must have shape ({cost_set.dim},), got {x_star.shape}"
        )
    if not dgf.domain.contains(x_star):
        raise DomainViolationError("optimum lies outside the mirror map's domain")

    n, d = cost_set.n_agents, cost_set.dim
    mirror_block = dgf.hessian(x_star)
    try:
        inverse_block = np.linalg.inv(mirror_block)
    except np.linalg.LinAlgError as exc:
        raise SingularHessianError(
            "mirror-map Hessian is singular at the optimum"
        ) from exc
    if not np.all(np.isfinite(inverse_block)):
        raise SingularHessianError("mirror-map Hessian inverse is not finite")

    inverse_hessian = np.kron(np.eye(n), inverse_block)
    mirror_hessian = np.kron(np.eye(n), mirror_block)
    cost_hessian = np.zeros((n * d, n * d))
    for i, cost in enumerate(cost_set.costs):
        block = slice(i * d, (i + 1) * d)
        cost_hessian[block, block] = cost.hessian(x_star)

    spectral = spectral_decomposition(graph)
    laplacian = kron_identity(spectral.laplacian, d)
    sqrt_lap = kron_identity(spectral.sqrt_laplacian, d)
    reduced = kron_identity(spectral.reduced_basis, d)
    coupling = sqrt_lap @ reduced

    size = (2 * n - 1) * d
    matrix = np.zeros((size, size))
    top = slice(0, n * d)
    bottom = slice(n * d, size)
    matrix[top, top] = inverse_hessian @ (cost_hessian + laplacian)
    matrix[top, bottom] = inverse_hessian @ coupling
    matrix[bottom, top] = -coupling.T

    return LinearizedSystem(
        matrix=matrix,
        mirror_inverse_hessian=inverse_hessian,
        mirror_hessian=mirror_hessian,
        cost_hessian=cost_hessian,
        laplacian=laplacian,
        coupling=coupling,
        n_agents=n,
        dim=d,
    )


def eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """Full spectrum of a real square matrix, deterministically ordered.

    Ordering is by real part, then imaginary part, so repeated calls and
    cross-implementation comparisons line up entry by entry.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidParameterError(f"expected a square matrix, got {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidParameterError("matrix entries must be finite")
    try:
        eigs = np.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"spectrum computation failed: {exc}") from exc
    order = np.lexsort((eigs.imag, eigs.real))
    return eigs[order]


def check_hl_positive_definite(
    cost_hessian: np.ndarray,
    laplacian: np.ndarray,
    tolerance: float | None = None,
) -> tuple[bool, float]:
    """Smallest eigenvalue of the combined curvature and its sign flag.

    Both inputs must be symmetric PSD on their own; the interesting
    content is whether their sum is strictly positive definite, which
    fails exactly when some direction is flat for every local cost and
    constant across the network.
    """
    cost_hessian = _require_symmetric(cost_hessian, "cost Hessian")
    laplacian = _require_symmetric(laplacian, "lifted Laplacian")
    if cost_hessian.shape != laplacian.shape:
        raise InvalidParameterError(
            f"shape mismatch: {cost_hessian.shape} vs {laplacian.shape}"
        )
    for name, block in (("cost Hessian", cost_hessian), ("lifted Laplacian", laplacian)):
        eigs = np.linalg.eigvalsh(block)
        scale = max(abs(eigs[0]), abs(eigs[-1]), 1.0)
        if eigs[0] < -_POSITIVITY_REL_TOL * scale:
            raise InvalidParameterError(f"{name} is not positive semidefinite")

    combined = cost_hessian + laplacian
    eigs = np.linalg.eigvalsh(combined)
    smallest = float(eigs[0])
    if tolerance is None:
        tolerance = _POSITIVITY_REL_TOL * max(abs(eigs[-1]), 1.0)
    return smallest > tolerance, smallest


def determinant_check(system: LinearizedSystem) -> DeterminantCheck:
    """Verify the determinant factorization of the assembled matrix.

    det(matrix) must equal det(inverse Hessian) * det(combined
    curvature) * det(Schur complement of the coupling through the
    combined curvature). Everything is compared in sign/log form.
    """
    sign, log_abs = np.linalg.slogdet(system.matrix)
    combined = system.cost_hessian + system.laplacian

    factors = []
    sign_d, log_d = np.linalg.slogdet(system.mirror_inverse_hessian)
    factors.append((sign_d, log_d, "mirror inverse Hessian"))
    sign_hl, log_hl = np.linalg.slogdet(combined)
    factors.append((sign_hl, log_hl, "combined curvature"))

    if system.coupling.shape[1] == 0:
        # single agent: no memory directions, empty factor contributes 1
        sign_schur, log_schur = 1.0, 0.0
    else:
        try:
            solved = np.linalg.solve(combined, system.coupling)
        except np.linalg.LinAlgError as exc:
            raise SingularFactorError(
                "combined curvature is singular; factored determinant undefined"
            ) from exc
        schur = system.coupling.T @ solved
        sign_schur, log_schur = np.linalg.slogdet(schur)
    factors.append((sign_schur, log_schur, "coupling Schur complement"))

    for factor_sign, _, name in factors:
        if factor_sign == 0.0:
            raise SingularFactorError(f"{name} factor is singular")

    factored_sign = np.prod([f[0] for f in factors])
    factored_log = float(np.sum([f[1] for f in factors]))
    return DeterminantCheck(
        sign=float(sign),
        log_abs=float(log_abs),
        factored_sign=float(factored_sign),
        factored_log_abs=factored_log,
    )


def check_stability(
    system: LinearizedSystem, tolerance: float | None = None
) -> StabilityReport:
    """Run every certificate check and collect the outcome flags.

    Failures are reported, not raised: a violated assumption shows up as
    a cleared flag plus an entry in ``violations`` naming what failed.
    """
    eigs = eigenvalues(system.matrix)
    if len(eigs) != system.size:
        raise EigensolverError(
            f"expected {system.size} eigenvalues, got {len(eigs)}"
        )
    if tolerance is None:
        tolerance = _POSITIVITY_REL_TOL * float(
            np.linalg.norm(system.matrix, 2)
        )
    min_real = float(eigs.real.min())
    all_positive = min_real > tolerance

    hl_flag, hl_smallest = check_hl_positive_definite(
        system.cost_hessian, system.laplacian
    )

    try:
        det = determinant_check(system)
    except SingularFactorError:
        det = None
    det_positive = det.positive if det is not None else False
    det_consistent = det.consistent if det is not None else False

    # eigenvalue-product determinant: complex pairs contribute positive
    # magnitude, real eigenvalues carry the sign
    real_eigs = eigs[np.abs(eigs.imag) <= 1e-12 * (1.0 + np.abs(eigs))]
    product_sign = float(np.prod(np.sign(real_eigs.real))) if len(real_eigs) else 1.0
    with np.errstate(divide="ignore"):
        product_log = float(np.sum(np.log(np.abs(eigs))))
    product_matches = det is not None and (
        (product_sign > 0) == det_positive
        and abs(product_log - det.log_abs) < _DET_LOG_TOL * max(1.0, abs(product_log))
    )

    violations = []
    if not all_positive:
        violations.append(
            "spectrum: an eigenvalue real part is at or below tolerance"
        )
    if not hl_flag:
        violations.append(
            "curvature: cost-plus-Laplacian matrix is not positive definite "
            "(some direction is flat for every cost and constant across agents)"
        )
    if not det_positive:
        violations.append("determinant: sign is not positive")
    if not det_consistent:
        violations.append("determinant: factored and direct paths disagree")
    if det_consistent and not product_matches:
        violations.append("determinant: eigenvalue product disagrees")

    return StabilityReport(
        eigenvalues=eigs,
        min_real_part=min_real,
        all_positive=all_positive,
        hl_positive_definite=hl_flag,
        hl_smallest_eigenvalue=hl_smallest,
        det_sign_positive=det_positive,
        det_consistent=det_consistent,
        rate_estimate=min_real,
        tolerance=float(tolerance),
        violations=tuple(violations),
    )


def symmetric_pencil(system: LinearizedSystem, eigenvalue: complex) -> np.ndarray:
    """Quadratic eigenvalue pencil in the primal block.

    Eliminating the memory block turns the eigenproblem into
    combined curvature minus eigenvalue times the mirror Hessian minus
    the Laplacian over the eigenvalue; the primal block of each
    eigenvector annihilates it.
    """
    if eigenvalue == 0:
        raise InvalidParameterError("pencil is undefined at eigenvalue zero")
    combined = system.cost_hessian + system.laplacian
    return (
        combined.astype(complex)
        - eigenvalue * system.mirror_hessian
        - (1.0 / eigenvalue) * system.laplacian
    )


def pencil_residuals(system: LinearizedSystem) -> np.ndarray:
    """Quadratic-form residual of each eigenvector against the pencil.

    For every eigenvalue, the primal block of the eigenvector is plugged
    into the pencil; the (non-Hermitian) quadratic form must vanish.
    Returns one residual per eigenvalue, each normalized by the squared
    probe norm.
    """
    try:
        eigs, vectors = np.linalg.eig(system.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigenvector computation failed: {exc}") from exc
    nd = system.n_agents * system.dim
    residuals = np.empty(len(eigs))
    for idx, lam in enumerate(eigs):
        if abs(lam) < 1e-300:
            residuals[idx] = np.inf
            continue
        probe = vectors[:nd, idx]
        norm = float(np.linalg.norm(probe))
        if norm == 0.0:
            residuals[idx] = np.inf
            continue
        probe = probe / norm
        pencil = symmetric_pencil(system, lam)
        residuals[idx] = abs(probe @ pencil @ probe)
    return residuals


def empirical_rate_vs_theory(
    trajectory: Trajectory,
    equilibrium: Equilibrium,
    theoretical_rate,
    ball_radius: float = 1e-2,
    min_samples: int = 10,
    floor: float = 1e-13,
) -> RateComparison:
    """Fit the trajectory's tail decay and compare with the certificate.

    The fit runs on log deviation-norm against time, restricted to
    samples after the trajectory first enters the given ball around the
    equilibrium and before the deviation saturates at the floor. The
    certified rate governs only that local regime, which is why the
    transient is excluded.
    """
    if isinstance(theoretical_rate, StabilityReport):
        theoretical_rate = theoretical_rate.rate_estimate
    theoretical_rate = float(theoretical_rate)
    if theoretical_rate <= 0:
        raise InvalidParameterError("theoretical rate must be positive")

    deviations = deviation_norms(trajectory, equilibrium)
    inside = np.nonzero(deviations < ball_radius)[0]
    if len(inside) == 0:
        raise InsufficientTailError(
            f"trajectory never enters the radius-{ball_radius:g} ball"
        )
    start = int(inside[0])
    tail = slice(start, len(deviations))
    times = trajectory.times[tail]
    values = deviations[tail]
    keep = values > floor
    if int(keep.sum()) < min_samples:
        raise InsufficientTailError(
            f"only {int(keep.sum())} usable tail samples, need {min_samples}"
        )
    times = times[keep]
    logs = np.log(values[keep])

    slope, _, r_squared = _least_squares_line(times, logs)
    return RateComparison(
        fitted_rate=float(-slope),
        theoretical_rate=theoretical_rate,
        r_squared=r_squared,
        n_samples=int(keep.sum()),
        window=(float(times[0]), float(times[-1])),
    )


def deviation_norms(trajectory: Trajectory, equilibrium: Equilibrium) -> np.ndarray:
    """Norm of the full state deviation at each snapshot."""
    d_primal = trajectory.primal - equilibrium.primal[None, :, :]
    d_dual = trajectory.dual - equilibrium.dual[None, :, :]
    d_feedback = trajectory.feedback - equilibrium.feedback[None, :, :]
    stacked = np.concatenate(
        [
            d_primal.reshape(len(trajectory), -1),
            d_dual.reshape(len(trajectory), -1),
            d_feedback.reshape(len(trajectory), -1),
        ],
        axis=1,
    )
    return np.linalg.norm(stacked, axis=1)


def _least_squares_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    design = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ np.array([slope, intercept])
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r_squared


def _require_symmetric(matrix: np.ndarray, name: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidParameterError(f"{name} must be square, got {matrix.shape}")
    scale = max(float(np.abs(matrix).max()), 1.0) if matrix.size else 1.0
    if float(np.abs(matrix - matrix.T).max()) > _SYMMETRY_REL_TOL * scale:
        raise AsymmetricInputError(f"{name} is not symmetric")
    return matrix
