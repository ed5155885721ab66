"""Reference scalar fields with exact derivative callbacks.

These power the convexity catalog, the pointwise-bound harness, and many
tests.  Every field is vectorized over stacked points and carries analytic
Euclidean gradient and Hessian, so horizontal quantities computed from them
are exact up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import ScalarField
from .group import GroupDescriptor

__all__ = [
    "constant_field",
    "coordinate_field",
    "horizontal_quadratic",
    "saddle_field",
    "gauge_quartic",
    "coordinate_product",
    "ConvexityCase",
    "convexity_catalog",
]


def constant_field(value: float, name: str | None = None) -> ScalarField:
    value = float(value)
    return ScalarField(
        name=name or f"const({value})",
        evaluate=lambda x: np.full(np.asarray(x).shape[:-1], value),
        euclid_gradient=lambda x: np.zeros(np.asarray(x).shape),
        euclid_hessian=lambda x: np.zeros(
            np.asarray(x).shape + (np.asarray(x).shape[-1],)
        ),
    )


def coordinate_field(group: GroupDescriptor, i: int) -> ScalarField:
    """The coordinate function x_i, i in 1..n."""
    if not 1 <= i <= group.n:
        raise ValueError(f"coordinate index must lie in 1..{group.n}, got {i}")
    n, k = group.n, i - 1

    def gradient(x: np.ndarray) -> np.ndarray:
        out = np.zeros(np.asarray(x).shape)
        out[..., k] = 1.0
        return out

    return ScalarField(
        name=f"x{i}",
        evaluate=lambda x: np.asarray(x, dtype=float)[..., k],
        euclid_gradient=gradient,
        euclid_hessian=lambda x: np.zeros(np.asarray(x).shape + (n,)),
    )


def horizontal_quadratic(group: GroupDescriptor, coeff: float = 1.0) -> ScalarField:
    """(coeff/2) * sum_{i<=m} x_i^2; horizontal Hessian is exactly coeff * I_m."""
    m, n = group.m, group.n
    coeff = float(coeff)

    def gradient(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        out[..., :m] = coeff * x[..., :m]
        return out

    bump = np.zeros((n, n))
    bump[:m, :m] = coeff * np.eye(m)

    return ScalarField(
        name=f"{coeff}/2*|x_H|^2",
        evaluate=lambda x: 0.5
        * coeff
        * np.sum(np.asarray(x, dtype=float)[..., :m] ** 2, axis=-1),
        euclid_gradient=gradient,
        euclid_hessian=lambda x: np.broadcast_to(
            bump, np.asarray(x).shape[:-1] + (n, n)
        ),
    )


def saddle_field(group: GroupDescriptor) -> ScalarField:
    """(x_2^2 - x_1^2) / 2; horizontal Hessian diag(-1, 1, 0, ...)."""
    if group.m < 2:
        raise ValueError("saddle needs at least two horizontal directions")
    n = group.n

    def gradient(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        out[..., 0] = -x[..., 0]
        out[..., 1] = x[..., 1]
        return out

    bump = np.zeros((n, n))
    bump[0, 0], bump[1, 1] = -1.0, 1.0

    return ScalarField(
        name="(x2^2-x1^2)/2",
        evaluate=lambda x: 0.5
        * (np.asarray(x, dtype=float)[..., 1] ** 2 - np.asarray(x, dtype=float)[..., 0] ** 2),
        euclid_gradient=gradient,
        euclid_hessian=lambda x: np.broadcast_to(
            bump, np.asarray(x).shape[:-1] + (n, n)
        ),
    )


def gauge_quartic(group: GroupDescriptor) -> ScalarField:
    """rho^4 = |x_H|^4 + t^2 on H^d: a polynomial, smooth everywhere."""
    d = group.heisenberg_d
    if d is None:
        raise ValueError("the gauge quartic needs a Heisenberg descriptor")
    m, n = group.m, group.n

    def evaluate(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h2 = np.sum(x[..., :m] ** 2, axis=-1)
        return h2**2 + x[..., -1] ** 2

    def gradient(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h2 = np.sum(x[..., :m] ** 2, axis=-1)
        out = np.zeros(x.shape)
        out[..., :m] = 4.0 * x[..., :m] * h2[..., None]
        out[..., -1] = 2.0 * x[..., -1]
        return out

    def hessian(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h2 = np.sum(x[..., :m] ** 2, axis=-1)
        out = np.zeros(x.shape + (n,))
        xh = x[..., :m]
        out[..., :m, :m] = 8.0 * xh[..., :, None] * xh[..., None, :]
        idx = np.arange(m)
        out[..., idx, idx] += 4.0 * h2[..., None]
        out[..., n - 1, n - 1] = 2.0
        return out

    return ScalarField(
        name="rho^4",
        evaluate=evaluate,
        euclid_gradient=gradient,
        euclid_hessian=hessian,
    )


def coordinate_product(group: GroupDescriptor, i: int, j: int) -> ScalarField:
    """The monomial x_i * x_j (1-based indices)."""
    for idx in (i, j):
        if not 1 <= idx <= group.n:
            raise ValueError(f"coordinate index must lie in 1..{group.n}, got {idx}")
    n, a, b = group.n, i - 1, j - 1

    def gradient(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        out[..., a] += x[..., b]
        out[..., b] += x[..., a]
        return out

    bump = np.zeros((n, n))
    bump[a, b] += 1.0
    bump[b, a] += 1.0

    return ScalarField(
        name=f"x{i}*x{j}",
        evaluate=lambda x: np.asarray(x, dtype=float)[..., a]
        * np.asarray(x, dtype=float)[..., b],
        euclid_gradient=gradient,
        euclid_hessian=lambda x: np.broadcast_to(
            bump, np.asarray(x).shape[:-1] + (n, n)
        ),
    )


@dataclass(frozen=True)
class ConvexityCase:
    """A catalog entry with its exact semiconvexity threshold.

    The field is semiconvex with constant c precisely when
    c >= threshold; threshold 0 means convex along X-lines.
    """

    field: ScalarField
    threshold: float


def convexity_catalog(group: GroupDescriptor) -> list[ConvexityCase]:
    """Six classified cases: three X-convex, two semiconvex-only, one worse.

    Thresholds are exact (the fields are quadratics or the gauge quartic),
    so expected verdicts at any tested constant follow by comparison.
    """
    cases = [
        ConvexityCase(horizontal_quadratic(group, 1.0), threshold=0.0),
        ConvexityCase(coordinate_field(group, 1), threshold=0.0),
        ConvexityCase(horizontal_quadratic(group, -1.0), threshold=1.0),
        ConvexityCase(saddle_field(group), threshold=1.0),
        ConvexityCase(horizontal_quadratic(group, -3.0), threshold=3.0),
    ]
    if group.heisenberg_d is not None:
        cases.insert(2, ConvexityCase(gauge_quartic(group), threshold=0.0))
    else:
        cases.insert(2, ConvexityCase(horizontal_quadratic(group, 2.0), threshold=0.0))
    return cases
