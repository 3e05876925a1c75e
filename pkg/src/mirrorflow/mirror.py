"""Distance-generating functions and their calculus.

A distance generator bundles a strongly convex potential with its
gradient (the map into dual coordinates), the gradient of its convex
conjugate (the inverse map), and its Hessian. Two generators ship: the
squared Euclidean norm and negative entropy. Both are separable, so the
callables accept arrays of any shape whose last axis is the coordinate
axis; the potential reduces over that axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import (
    DomainViolationError,
    InvalidParameterError,
    NumericalOverflowError,
)

# e**x overflows float64 a little above 709
_EXP_GUARD = 700.0


@dataclass(frozen=True)
class Domain:
    """Descriptor of where a distance generator is defined.

    ``kind`` is ``"reals"`` or ``"positive"``. For the positive orthant,
    ``box_lower``/``box_upper`` bound the region used to state a strong
    convexity modulus and to sample property tests.
    """

    kind: str
    box_lower: float = -np.inf
    box_upper: float = np.inf

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return False
        if self.kind == "positive":
            return bool(np.all(x > 0.0))
        return True


@dataclass(frozen=True)
class DistanceGenerator:
    """Capability record for one distance-generating function.

    Fields
    ------
    value : x -> scalar potential (reduces over the last axis)
    gradient : x -> dual point, the mirror map
    gradient_inverse : dual -> primal, the conjugate's gradient
    hessian : d-vector -> (d, d) Hessian matrix
    hessian_diag : x -> elementwise Hessian diagonal (both shipped
        generators are separable, so the Hessian is diagonal)
    strong_convexity : modulus on the stated domain (box-restricted for
        negative entropy)
    """

    name: str
    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    gradient_inverse: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    hessian_diag: Callable[[np.ndarray], np.ndarray]
    strong_convexity: float
    domain: Domain


def euclidean_dgf(dim: int) -> DistanceGenerator:
    """Half squared Euclidean norm; the mirror map is the identity, so
    mirror descent reduces to gradient descent."""
    _check_dim(dim)

    def value(x):
        x = np.asarray(x, dtype=float)
        return np.sum(x * x, axis=-1) / 2.0

    def identity(x):
        return np.asarray(x, dtype=float).copy()

    return DistanceGenerator(
        name="euclidean",
        dim=dim,
        value=value,
        gradient=identity,
        gradient_inverse=identity,
        hessian=lambda x: np.eye(dim),
        hessian_diag=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        strong_convexity=1.0,
        domain=Domain(kind="reals"),
    )


def negative_entropy_dgf(
    dim: int, box_lower: float = 1e-6, box_upper: float = 1e3
) -> DistanceGenerator:
    """Negative entropy ``sum_j x_j log x_j`` on the positive orthant.

    The mirror map is ``1 + log x`` and its inverse is ``exp(z - 1)``.
    Negative entropy has no uniform strong convexity modulus on the whole
    orthant, so the modulus ``1 / box_upper`` is stated relative to the
    configurable box ``[box_lower, box_upper]^d``.
    """
    _check_dim(dim)
    if not (0.0 < box_lower < box_upper):
        raise InvalidParameterError(
            f"entropy box must satisfy 0 < lower < upper, got [{box_lower}, {box_upper}]"
        )

    def _require_positive(x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise DomainViolationError(
                "negative entropy needs strictly positive coordinates"
            )
        return x

    def value(x):
        x = _require_positive(x)
        return np.sum(x * np.log(x), axis=-1)

    def gradient(x):
        return 1.0 + np.log(_require_positive(x))

    def gradient_inverse(z):
        z = np.asarray(z, dtype=float)
        exponent = z - 1.0
        # symmetric guard: a very negative dual would underflow exp to
        # exactly 0 and silently leave the open positive domain
        if np.any(np.abs(exponent) > _EXP_GUARD):
            raise NumericalOverflowError(
                f"dual coordinate outside the exp guard (|z - 1| > {_EXP_GUARD})"
            )
        return np.exp(exponent)

    def hessian(x):
        return np.diag(1.0 / _require_positive(x))

    def hessian_diag(x):
        return 1.0 / _require_positive(x)

    return DistanceGenerator(
        name="negative_entropy",
        dim=dim,
        value=value,
        gradient=gradient,
        gradient_inverse=gradient_inverse,
        hessian=hessian,
        hessian_diag=hessian_diag,
        strong_convexity=1.0 / box_upper,
        domain=Domain(kind="positive", box_lower=box_lower, box_upper=box_upper),
    )


def bregman(dgf: DistanceGenerator, x, x_ref) -> float:
    """Bregman divergence: the potential at ``x`` minus its first-order
    expansion around ``x_ref``. Nonnegative; zero iff the points agree."""
    x = np.asarray(x, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    return float(
        dgf.value(x) - dgf.value(x_ref) - np.dot(dgf.gradient(x_ref), x - x_ref)
    )


def _check_dim(dim: int) -> None:
    if dim < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {dim}")
