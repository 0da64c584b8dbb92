"""Objective-function abstraction and the built-in objective zoo.

An :class:`ObjectiveSpec` bundles a value/gradient pair with optional
smoothness metadata (gradient Lipschitz constant ``L``, Polyak-
Lojasiewicz constant ``mu``, minimum value, optimal-set descriptor).
Quadratics get a dedicated eigen-form representation because every
flow and bound computation for them works per eigencomponent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InputError

Array = np.ndarray

#: Singular values of the scaled Gram matrix below RANK_RTOL * sigma_max
#: are treated as zero; this defines the rank d+.
RANK_RTOL = 1e-10


def as_vector(x, dim: int | None = None) -> Array:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise InputError(f"expected a vector, got shape {x.shape}")
    if dim is not None and x.size != dim:
        raise InputError(f"expected dimension {dim}, got {x.size}")
    return x


# ---------------------------------------------------------------------------
# Optimal-set descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SingletonSet:
    """Optimal set consisting of a single point."""

    point: Array

    def project(self, x: Array) -> Array:
        return np.array(self.point, dtype=float, copy=True)

    def distance(self, x: Array) -> float:
        return float(np.linalg.norm(np.asarray(x, float) - self.point))


@dataclass(frozen=True)
class AffineSet:
    """Affine optimal set given by its (idempotent) projection operation."""

    projector: Callable[[Array], Array]

    def project(self, x: Array) -> Array:
        return np.asarray(self.projector(np.asarray(x, float)), dtype=float)

    def distance(self, x: Array) -> float:
        x = np.asarray(x, float)
        return float(np.linalg.norm(x - self.project(x)))


@dataclass(frozen=True)
class IntervalProductSet:
    """Per-coordinate interval optimal set [lo_i, hi_i] (for separable objectives)."""

    lo: Array
    hi: Array

    def __post_init__(self):
        lo, hi = as_vector(self.lo), as_vector(self.hi)
        if lo.size != hi.size or np.any(lo > hi):
            raise InputError("interval set requires lo <= hi per coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def project(self, x: Array) -> Array:
        return np.clip(np.asarray(x, float), self.lo, self.hi)

    def distance(self, x: Array) -> float:
        x = np.asarray(x, float)
        return float(np.linalg.norm(x - self.project(x)))


OptimalSet = SingletonSet | AffineSet | IntervalProductSet


# ---------------------------------------------------------------------------
# ObjectiveSpec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectiveSpec:
    """An evaluatable objective with declared smoothness/curvature metadata.

    ``value`` maps a point of shape ``(dim,)`` to a float and ``gradient``
    to a vector of the same shape.  Zoo objectives additionally accept
    stacked inputs of shape ``(..., dim)`` (reduction over the last axis),
    which batch-oriented diagnostics exploit opportunistically.
    Evaluations are pure; instances may be shared freely across workers.
    """

    dim: int
    value: Callable[[Array], float]
    gradient: Callable[[Array], Array]
    L: float | None = None
    mu: float | None = None
    f_star: float | None = None
    optimal_set: OptimalSet | None = None
    name: str = ""
    box_halfwidth: float | None = None  # domain on which L was certified

    def __post_init__(self):
        if self.dim < 1:
            raise InputError("dimension must be a positive integer")
        if self.L is not None and self.L <= 0:
            raise InputError("L must be positive when declared")
        if self.mu is not None and self.mu <= 0:
            raise InputError("mu must be positive when declared")

    @property
    def kappa(self) -> float | None:
        """Condition number L/mu when both constants are declared."""
        if self.L is None or self.mu is None:
            return None
        return self.L / self.mu

    def value_at(self, x) -> float:
        return float(self.value(as_vector(x, self.dim)))

    def gradient_at(self, x) -> Array:
        return np.asarray(self.gradient(as_vector(x, self.dim)), dtype=float)

    def in_declared_box(self, x) -> bool:
        """True when x lies in the box on which L was certified (if any)."""
        if self.box_halfwidth is None:
            return True
        return bool(np.max(np.abs(as_vector(x, self.dim))) <= self.box_halfwidth)


def finite_difference_gradient(obj: ObjectiveSpec, x: Array, h: float = 1e-6) -> Array:
    """Central finite differences of ``obj.value`` at ``x``."""
    x = as_vector(x, obj.dim)
    g = np.empty(obj.dim)
    for i in range(obj.dim):
        step = h * max(1.0, abs(x[i]))
        e = np.zeros(obj.dim)
        e[i] = step
        g[i] = (obj.value_at(x + e) - obj.value_at(x - e)) / (2 * step)
    return g


def check_gradient(
    obj: ObjectiveSpec,
    points: Sequence[Array],
    rel_tol: float = 1e-5,
) -> float:
    """Largest relative finite-difference error of the gradient over ``points``.

    Raises :class:`InputError` when the error exceeds ``rel_tol``.
    """
    worst = 0.0
    for x in points:
        exact = obj.gradient_at(x)
        approx = finite_difference_gradient(obj, x)
        err = float(np.linalg.norm(approx - exact)) / max(float(np.linalg.norm(exact)), 1e-8)
        worst = max(worst, err)
    if worst > rel_tol:
        raise InputError(f"gradient check failed: relative error {worst:.3e} > {rel_tol:.1e}")
    return worst


# ---------------------------------------------------------------------------
# Quadratics in eigen form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticSpec:
    """Convex quadratic objective normalised to eigen coordinates.

    The objective is f(x) = f* + 0.5 (x-p)^T H (x-p) with
    H = basis @ diag(sigma) @ basis.T, where ``sigma`` holds the nonzero
    spectrum in descending order, ``basis`` the corresponding orthonormal
    eigenvectors and ``p = projection`` the projection of the designated
    initial point onto the optimal set.  ``alpha`` are the eigen
    coordinates of ``x0 - p``, so ``||alpha|| = dist(x0, X*)``.
    """

    dim: int
    sigma: Array
    basis: Array
    projection: Array
    alpha: Array
    x0: Array
    f_star: float = 0.0
    source: tuple[Array, Array] | None = None  # (A, y) when built from data

    def __post_init__(self):
        sigma = as_vector(self.sigma)
        if sigma.size == 0 or np.any(sigma <= 0):
            raise InputError("spectrum must be nonempty and strictly positive")
        if np.any(np.diff(sigma) > 0):
            raise InputError("spectrum must be sorted in descending order")
        basis = np.asarray(self.basis, float)
        if basis.shape != (self.dim, sigma.size):
            raise InputError("basis must have shape (dim, d+)")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "projection", as_vector(self.projection, self.dim))
        object.__setattr__(self, "alpha", as_vector(self.alpha, sigma.size))
        object.__setattr__(self, "x0", as_vector(self.x0, self.dim))

    # -- derived quantities -------------------------------------------------

    @property
    def dplus(self) -> int:
        return int(self.sigma.size)

    @property
    def kappa(self) -> float:
        return float(self.sigma[0] / self.sigma[-1])

    @property
    def kappa_js(self) -> Array:
        """Consecutive spectral ratios sigma_j / sigma_{j+1}."""
        return self.sigma[:-1] / self.sigma[1:]

    @property
    def dist0(self) -> float:
        return float(np.linalg.norm(self.alpha))

    # -- evaluation ----------------------------------------------------------

    def value(self, x) -> float:
        z = self.basis.T @ (as_vector(x, self.dim) - self.projection)
        return self.f_star + 0.5 * float(z @ (self.sigma * z))

    def gradient(self, x) -> Array:
        z = self.basis.T @ (as_vector(x, self.dim) - self.projection)
        return self.basis @ (self.sigma * z)

    def value_from_data(self, x) -> float:
        """Evaluate via the raw (A, y) data; available for cross-checks."""
        if self.source is None:
            raise InputError("quadratic was not built from data")
        a, y = self.source
        r = y - a @ as_vector(x, self.dim)
        return 0.5 * float(r @ r) / a.shape[0]

    def optimal_set(self) -> OptimalSet:
        if self.dplus == self.dim:
            return SingletonSet(point=self.projection.copy())
        basis, p = self.basis, self.projection
        return AffineSet(projector=lambda x: x - basis @ (basis.T @ (x - p)))

    def to_objective(self, name: str = "") -> ObjectiveSpec:
        return ObjectiveSpec(
            dim=self.dim,
            value=self.value,
            gradient=self.gradient,
            L=float(self.sigma[0]),
            mu=float(self.sigma[-1]),
            f_star=self.f_star,
            optimal_set=self.optimal_set(),
            name=name or "quadratic",
        )

    # -- constructors ---------------------------------------------------------

    @classmethod
    def diagonal(cls, coefficients, x0, f_star: float = 0.0) -> "QuadraticSpec":
        """Spec for f(x) = f* + 0.5 * sum_i a_i x_i^2 with all a_i > 0."""
        a = as_vector(coefficients)
        x0 = as_vector(x0, a.size)
        if np.any(a <= 0):
            raise InputError("diagonal coefficients must be strictly positive")
        order = np.argsort(-a, kind="stable")
        return cls(
            dim=a.size,
            sigma=a[order],
            basis=np.eye(a.size)[:, order],
            projection=np.zeros(a.size),
            alpha=x0[order],
            x0=x0,
            f_star=f_star,
        )


def quadratic_from_data(A, y, x0, rank_rtol: float = RANK_RTOL) -> QuadraticSpec:
    """Eigen-form spec of the least-squares objective f(x) = ||y - Ax||^2 / (2n).

    The Gram matrix A^T A / n is diagonalised through the SVD of A;
    singular values of the Gram matrix below ``rank_rtol`` times its
    largest one are zeroed, which defines the rank d+.  The returned
    projection point is (I - V V^T) x0 + pinv(A) y, the limit of both
    the flow and the small-step iteration started at ``x0``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2:
        raise InputError("A must be a matrix")
    n, d = A.shape
    y = as_vector(y, n)
    x0 = as_vector(x0, d)
    if not np.any(A):
        raise InputError("objective is constant")

    u, s, vt = np.linalg.svd(A, full_matrices=False)
    gram_sigma = s**2 / n
    keep = gram_sigma > rank_rtol * gram_sigma[0]
    basis = vt[keep].T
    sigma = gram_sigma[keep]

    pinv_y = basis @ ((u[:, keep].T @ y) / s[keep])
    projection = x0 - basis @ (basis.T @ x0) + pinv_y
    alpha = basis.T @ (x0 - projection)
    r = y - A @ projection
    f_star = 0.5 * float(r @ r) / n
    return QuadraticSpec(
        dim=d,
        sigma=sigma,
        basis=basis,
        projection=projection,
        alpha=alpha,
        x0=x0,
        f_star=f_star,
        source=(A, y),
    )


# ---------------------------------------------------------------------------
# Separable objectives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarPiece:
    """One-dimensional building block of a separable objective."""

    value: Callable[[float], float]
    deriv: Callable[[float], float]
    optimum: tuple[float, float] | None = None  # optimal interval [lo, hi]
    min_value: float | None = None


def quadratic_piece(coefficient: float) -> ScalarPiece:
    """The scalar piece g(x) = coefficient * x^2."""
    if coefficient <= 0:
        raise InputError("coefficient must be positive")
    return ScalarPiece(
        value=lambda x: coefficient * x * x,
        deriv=lambda x: 2.0 * coefficient * x,
        optimum=(0.0, 0.0),
        min_value=0.0,
    )


def build_separable(pieces: Sequence[ScalarPiece], name: str = "separable") -> ObjectiveSpec:
    """Objective f(x) = sum_i g_i(x_i) from scalar value/derivative pairs."""
    pieces = list(pieces)
    if not pieces:
        raise InputError("at least one scalar piece is required")
    d = len(pieces)

    def value(x):
        x = as_vector(x, d)
        return float(sum(p.value(float(x[i])) for i, p in enumerate(pieces)))

    def gradient(x):
        x = as_vector(x, d)
        return np.array([p.deriv(float(x[i])) for i, p in enumerate(pieces)])

    optimal_set = None
    if all(p.optimum is not None for p in pieces):
        lo = np.array([p.optimum[0] for p in pieces], dtype=float)
        hi = np.array([p.optimum[1] for p in pieces], dtype=float)
        optimal_set = IntervalProductSet(lo=lo, hi=hi)
    f_star = None
    if all(p.min_value is not None for p in pieces):
        f_star = float(sum(p.min_value for p in pieces))

    return ObjectiveSpec(
        dim=d, value=value, gradient=gradient,
        f_star=f_star, optimal_set=optimal_set, name=name,
    )


def build_fsep_quartic(d: int, quartic_coeff: float = 0.1, box_halfwidth: float = 1.0) -> ObjectiveSpec:
    """Strongly convex separable objective f(x) = sum_i (i x_i^2 + c x_i^4).

    The declared smoothness constant L = (2 + 12 c B^2) d holds on the box
    [-B, B]^d; the strong-convexity constant is mu = 2 globally.
    """
    if d < 1:
        raise InputError("dimension must be a positive integer")
    if quartic_coeff < 0:
        raise InputError("quartic coefficient must be nonnegative")
    if box_halfwidth <= 0:
        raise InputError("box halfwidth must be positive")
    weights = np.arange(1, d + 1, dtype=float)
    c = float(quartic_coeff)

    def value(x):
        x = np.asarray(x, dtype=float)
        return (weights * x**2 + c * x**4).sum(axis=-1)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * weights * x + 4.0 * c * x**3

    return ObjectiveSpec(
        dim=d,
        value=value,
        gradient=gradient,
        L=(2.0 + 12.0 * c * box_halfwidth**2) * d,
        mu=2.0,
        f_star=0.0,
        optimal_set=SingletonSet(point=np.zeros(d)),
        name=f"fsep-quartic(d={d})",
        box_halfwidth=float(box_halfwidth),
    )


def batched_values(obj: ObjectiveSpec, points: Array) -> Array:
    """Objective values at a stack of points, batching when supported.

    The batched result is cross-checked against a scalar evaluation of
    the first point; objectives that merely happen to return the right
    shape fall back to the row-by-row path.
    """
    points = np.asarray(points, dtype=float)
    if len(points):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error")
                vals = np.asarray(obj.value(points), dtype=float)
            if vals.shape == points.shape[:-1] and np.isclose(
                vals[0], obj.value_at(points[0]), rtol=1e-12, atol=0.0
            ):
                return vals
        except Exception:
            pass
    return np.array([obj.value_at(p) for p in points])


def batched_gradients(obj: ObjectiveSpec, points: Array) -> Array:
    """Gradients at a stack of points, batching when supported (see
    :func:`batched_values` for the cross-check)."""
    points = np.asarray(points, dtype=float)
    if len(points):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error")
                grads = np.asarray(obj.gradient(points), dtype=float)
            if grads.shape == points.shape and np.allclose(
                grads[0], obj.gradient_at(points[0]), rtol=1e-12, atol=0.0
            ):
                return grads
        except Exception:
            pass
    return np.array([obj.gradient_at(p) for p in points])
