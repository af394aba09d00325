"""Objective oracles and the fixed suite of test problems.

Every oracle is an immutable bundle of pure functions, so a single
instance can be shared between concurrently running experiments.
Vectors are dense 1-D ``numpy`` float arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, InvalidBoxError, InvalidSpectrumError, NonConvergenceError

Vector = np.ndarray


@dataclass(frozen=True)
class SmoothOracle:
    """An ``alpha``-strongly convex function with ``lipschitz``-continuous gradient.

    ``excess`` optionally evaluates ``f(x) - f*`` without the cancellation
    incurred by subtracting two nearly equal values; quadratics provide it.
    ``hessian``/``linear`` are set for quadratics ``0.5 x'Ax - b'x + c``.
    """

    dimension: int
    alpha: float
    lipschitz: float
    value: Callable[[Vector], float]
    gradient: Callable[[Vector], Vector]
    minimizer: Optional[Vector] = None
    min_value: Optional[float] = None
    excess: Optional[Callable[[Vector], float]] = None
    hessian: Optional[np.ndarray] = field(default=None, repr=False)
    linear: Optional[Vector] = field(default=None, repr=False)
    name: str = "smooth"

    def __post_init__(self):
        if self.dimension < 1:
            raise DimensionError(f"dimension must be positive, got {self.dimension}")
        if not self.alpha > 0:
            raise ValueError(f"strong convexity modulus must be positive, got {self.alpha}")
        if self.alpha > self.lipschitz * (1 + 1e-12):
            raise ValueError(f"alpha={self.alpha} exceeds lipschitz={self.lipschitz}")

    @property
    def condition_number(self) -> float:
        return self.lipschitz / self.alpha


@dataclass(frozen=True)
class Nonsmooth:
    """Convex term ``h`` given by its value and proximal map ``prox(x, s)``.

    ``prox(x, s)`` returns ``argmin_y h(y) + |y - x|^2 / (2 s)``.
    ``project`` maps a point into the domain of ``h`` (identity when ``h``
    is finite everywhere); it is only used to draw meaningful test points.
    """

    value: Callable[[Vector], float]
    prox: Callable[[Vector, float], Vector]
    project: Callable[[Vector], Vector] = lambda x: x
    name: str = "h"


ZERO = Nonsmooth(value=lambda x: 0.0, prox=lambda x, s: np.array(x, dtype=float), name="zero")


@dataclass(frozen=True)
class CompositeOracle:
    """``f = g + h`` with ``g`` smooth and strongly convex, ``h`` proximable."""

    smooth: SmoothOracle
    nonsmooth: Nonsmooth = ZERO
    name: str = "composite"

    @property
    def dimension(self) -> int:
        return self.smooth.dimension

    @property
    def alpha(self) -> float:
        return self.smooth.alpha

    @property
    def lipschitz(self) -> float:
        return self.smooth.lipschitz

    @property
    def excess(self):
        return None

    def value(self, x: Vector) -> float:
        hx = self.nonsmooth.value(x)
        if not np.isfinite(hx):
            return float("inf")
        return self.smooth.value(x) + hx

    def prox(self, x: Vector, s: float) -> Vector:
        return self.nonsmooth.prox(x, s)


@dataclass(frozen=True)
class CoordinateOracle:
    """Coordinate access to a smooth oracle.

    ``partial(x, i)`` must read only ``x[i]`` and ``x[dependencies[i]]``;
    the lazy coordinate engine relies on this.
    """

    base: SmoothOracle
    coord_lipschitz: Vector
    partial: Callable[[Vector, int], float]
    dependencies: tuple

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def alpha(self) -> float:
        return self.base.alpha

    @property
    def lipschitz(self) -> float:
        return self.base.lipschitz

    @property
    def excess(self):
        return self.base.excess

    @property
    def minimizer(self):
        return self.base.minimizer

    @property
    def min_value(self):
        return self.base.min_value

    def value(self, x: Vector) -> float:
        return self.base.value(x)

    def gradient(self, x: Vector) -> Vector:
        return self.base.gradient(x)


def objective_gap(oracle, x: Vector, fstar: float) -> float:
    """``f(x) - fstar``, using the oracle's exact excess when ``fstar`` is its own minimum."""
    excess = getattr(oracle, "excess", None)
    own = getattr(oracle, "min_value", None)
    if excess is not None and own is not None and fstar == own:
        return float(excess(x))
    return float(oracle.value(x) - fstar)


# --------------------------------------------------------------------------
# quadratics


def _quadratic(A: np.ndarray, b: Vector, alpha: float, lipschitz: float, name: str,
               xstar: Optional[Vector] = None, constant: float = 0.0) -> SmoothOracle:
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    if xstar is None:
        xstar = np.linalg.solve(A, b)
    fstar = float(constant - 0.5 * b @ xstar)

    def value(x):
        return float(0.5 * x @ (A @ x) - b @ x + constant)

    def gradient(x):
        return A @ x - b

    def excess(x):
        r = x - xstar
        return float(0.5 * r @ (A @ r))

    return SmoothOracle(
        dimension=len(b), alpha=float(alpha), lipschitz=float(lipschitz),
        value=value, gradient=gradient, minimizer=xstar, min_value=fstar,
        excess=excess, hessian=A, linear=b, name=name,
    )


def random_rotation(dimension: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix from a seeded generator."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dimension, dimension)))
    return q * np.sign(np.diag(r))


def quadratic_from_spectrum(eigenvalues: Sequence[float], linear_term: Sequence[float],
                            rotation_seed: Optional[int] = None, constant: float = 0.0) -> SmoothOracle:
    """``f(x) = 0.5 x'Ax - b'x + constant`` where ``A`` has exactly the given spectrum.

    ``A`` is diagonal unless ``rotation_seed`` is given, in which case it is
    conjugated by a seeded random orthogonal matrix.
    """
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
    b = np.atleast_1d(np.asarray(linear_term, dtype=float))
    if lam.ndim != 1 or len(lam) == 0:
        raise InvalidSpectrumError("eigenvalues must be a non-empty vector")
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise InvalidSpectrumError(f"eigenvalues must be positive, got {lam}")
    if np.any(np.diff(lam) < 0):
        raise InvalidSpectrumError("eigenvalues must be sorted ascending")
    if b.shape != lam.shape:
        raise DimensionError(f"linear term has shape {b.shape}, spectrum has {lam.shape}")
    if rotation_seed is None:
        A = np.diag(lam)
        xstar = b / lam
    else:
        Q = random_rotation(len(lam), rotation_seed)
        A = (Q * lam) @ Q.T
        A = 0.5 * (A + A.T)
        xstar = Q @ ((Q.T @ b) / lam)
    return _quadratic(A, b, lam[0], lam[-1], "quadratic", xstar=xstar, constant=constant)


def spectrum(dimension: int, alpha: float, lipschitz: float, spacing: str = "linear") -> Vector:
    """Eigenvalues from ``alpha`` to ``lipschitz`` inclusive."""
    if dimension == 1:
        if alpha != lipschitz:
            raise InvalidSpectrumError("a 1-D spectrum needs alpha == lipschitz")
        return np.array([float(alpha)])
    if spacing == "linear":
        lam = np.linspace(alpha, lipschitz, dimension)
    elif spacing == "geometric":
        lam = np.geomspace(alpha, lipschitz, dimension)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    lam[0], lam[-1] = alpha, lipschitz
    return lam


def random_quadratic(dimension: int, alpha: float, lipschitz: float, seed: int = 0,
                     rotate: bool = True, spacing: str = "linear",
                     centered: bool = False) -> SmoothOracle:
    """Rotated quadratic with condition number ``lipschitz / alpha`` and a seeded linear term."""
    rng = np.random.default_rng(seed)
    b = np.zeros(dimension) if centered else rng.standard_normal(dimension)
    lam = spectrum(dimension, alpha, lipschitz, spacing)
    return quadratic_from_spectrum(lam, b, rotation_seed=seed + 1 if rotate else None)


def banded_quadratic(dimension: int, bandwidth: int = 3, seed: int = 0,
                     shift: float = 1.0) -> CoordinateOracle:
    """Diagonally dominant banded quadratic with ``bandwidth`` nonzero diagonals.

    Row ``i`` couples ``x[i]`` to the ``(bandwidth - 1) // 2`` neighbours on
    each side, so ``partial(x, i)`` reads at most ``bandwidth`` entries.
    """
    if bandwidth < 1 or bandwidth % 2 == 0:
        raise ValueError(f"bandwidth must be a positive odd integer, got {bandwidth}")
    rng = np.random.default_rng(seed)
    half = (bandwidth - 1) // 2
    A = np.zeros((dimension, dimension))
    for k in range(1, half + 1):
        off = rng.uniform(-1.0, 1.0, dimension - k)
        A += np.diag(off, k) + np.diag(off, -k)
    A += np.diag(np.abs(A).sum(axis=1) + shift * rng.uniform(1.0, 2.0, dimension))
    b = rng.standard_normal(dimension)
    eig = np.linalg.eigvalsh(A)
    base = _quadratic(A, b, eig[0], eig[-1], f"banded{bandwidth}")
    return coordinate_oracle(base)


def coordinate_oracle(quadratic: SmoothOracle) -> CoordinateOracle:
    """Coordinate access for a quadratic, with dependencies from the sparsity of its Hessian."""
    A, b = quadratic.hessian, quadratic.linear
    if A is None:
        raise ValueError("coordinate access needs a quadratic oracle")
    deps = []
    for i in range(quadratic.dimension):
        cols = np.flatnonzero(A[i])
        deps.append(cols[cols != i])
    deps = tuple(deps)
    rows = tuple(A[i, d] for i, d in enumerate(deps))
    diag = np.diag(A).copy()

    def partial(x, i):
        return float(diag[i] * x[i] + rows[i] @ x[deps[i]] - b[i])

    return CoordinateOracle(base=quadratic, coord_lipschitz=diag, partial=partial, dependencies=deps)


# --------------------------------------------------------------------------
# proximal maps


def prox_l1(x: Vector, s: float, weight: float = 1.0) -> Vector:
    """Soft-thresholding: the prox of ``weight * |.|_1`` at scale ``s``."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - s * weight, 0.0)


def prox_box(x: Vector, lower: Vector, upper: Vector, s: float = 1.0) -> Vector:
    """Projection onto ``[lower, upper]``; the scale ``s`` plays no role."""
    lower = np.broadcast_to(np.asarray(lower, dtype=float), np.shape(x))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), np.shape(x))
    if np.any(lower > upper):
        raise InvalidBoxError("box has lower > upper in some component")
    return np.clip(x, lower, upper)


def l1_term(weight: float) -> Nonsmooth:
    return Nonsmooth(
        value=lambda x: float(weight * np.abs(x).sum()),
        prox=lambda x, s: prox_l1(x, s, weight),
        name=f"l1({weight})",
    )


def box_term(lower: Vector, upper: Vector) -> Nonsmooth:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        raise InvalidBoxError("box has lower > upper in some component")

    def value(x):
        inside = np.all(x >= lower) and np.all(x <= upper)
        return 0.0 if inside else float("inf")

    return Nonsmooth(
        value=value,
        prox=lambda x, s: np.clip(x, lower, upper),
        project=lambda x: np.clip(x, lower, upper),
        name="box",
    )


def ridge_l1_problem(dimension: int, alpha: float = 1.0, lipschitz: float = 100.0,
                     weight: float = 0.1, seed: int = 0, rows: Optional[int] = None) -> CompositeOracle:
    """L1-regularized ridge least squares.

    ``g(x) = 0.5 |Mx - y|^2 + 0.5 alpha |x|^2`` with the singular values of
    ``M`` chosen so that ``g`` has curvature exactly in ``[alpha, lipschitz]``;
    ``h(x) = weight * |x|_1``.
    """
    rows = rows or 2 * dimension
    if rows < dimension:
        raise DimensionError("need at least as many rows as columns")
    rng = np.random.default_rng(seed)
    U = random_rotation(rows, seed + 1)[:, :dimension]
    V = random_rotation(dimension, seed + 2)
    sigma = np.sqrt(np.linspace(0.0, lipschitz - alpha, dimension))
    M = (U * sigma) @ V.T
    y = rng.standard_normal(rows) * 3.0

    def value(x):
        r = M @ x - y
        return float(0.5 * r @ r + 0.5 * alpha * x @ x)

    def gradient(x):
        return M.T @ (M @ x - y) + alpha * x

    g = SmoothOracle(
        dimension=dimension, alpha=alpha, lipschitz=lipschitz, value=value, gradient=gradient,
        hessian=M.T @ M + alpha * np.eye(dimension), linear=M.T @ y, name="ridge",
    )
    return CompositeOracle(smooth=g, nonsmooth=l1_term(weight), name="ridge_l1")


def box_quadratic_problem(dimension: int, alpha: float = 1.0, lipschitz: float = 100.0,
                          lower: float = -0.5, upper: float = 0.5, seed: int = 0) -> CompositeOracle:
    """Rotated quadratic restricted to a box that excludes its unconstrained minimizer."""
    rng = np.random.default_rng(seed)
    lam = spectrum(dimension, alpha, lipschitz)
    Q = random_rotation(dimension, seed + 1)
    x_free = rng.uniform(-2.0, 2.0, dimension)
    A = (Q * lam) @ Q.T
    A = 0.5 * (A + A.T)
    g = _quadratic(A, A @ x_free, alpha, lipschitz, "quadratic", xstar=x_free)
    lo = np.full(dimension, float(lower))
    hi = np.full(dimension, float(upper))
    return CompositeOracle(smooth=g, nonsmooth=box_term(lo, hi), name="box_quadratic")


def smooth_part(oracle) -> SmoothOracle:
    if isinstance(oracle, CompositeOracle):
        return oracle.smooth
    if isinstance(oracle, CoordinateOracle):
        return oracle.base
    return oracle


# --------------------------------------------------------------------------
# reference solutions


def gradient_mapping(oracle, x: Vector, step: Optional[float] = None) -> Vector:
    """``(x - prox(x - t grad g(x), t)) / t`` with ``t = 1/L``; the gradient for smooth oracles."""
    g = smooth_part(oracle)
    if not isinstance(oracle, CompositeOracle):
        return g.gradient(x)
    t = step or 1.0 / g.lipschitz
    return (x - oracle.prox(x - t * g.gradient(x), t)) / t


def reference_minimizer(oracle, tolerance: float = 1e-10, max_iter: int = 200_000,
                        x0: Optional[Vector] = None) -> tuple[Vector, float]:
    """Minimizer and minimum value to the given gradient-mapping residual.

    Quadratics with an attached exact minimizer return it directly. Otherwise
    this runs accelerated proximal gradient with the constant momentum
    ``(sqrt(L) - sqrt(alpha)) / (sqrt(L) + sqrt(alpha))``.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    minimizer = getattr(oracle, "minimizer", None)
    if minimizer is not None:
        xs = np.array(minimizer, dtype=float)
        fs = getattr(oracle, "min_value", None)
        return xs, float(oracle.value(xs) if fs is None else fs)

    g = smooth_part(oracle)
    L, a = g.lipschitz, g.alpha
    beta = (np.sqrt(L) - np.sqrt(a)) / (np.sqrt(L) + np.sqrt(a))
    prox = oracle.prox if isinstance(oracle, CompositeOracle) else (lambda z, t: z)
    x = np.zeros(g.dimension) if x0 is None else np.array(x0, dtype=float)
    x_prev = x.copy()
    best = np.inf
    for k in range(max_iter):
        y = x + beta * (x - x_prev)
        x_prev = x
        x = prox(y - g.gradient(y) / L, 1.0 / L)
        if k % 10 == 0 or k == max_iter - 1:
            res = float(np.linalg.norm(gradient_mapping(oracle, x)))
            best = min(best, res)
            if res <= tolerance:
                return x, float(oracle.value(x))
    raise NonConvergenceError("reference minimizer did not reach tolerance", best, max_iter)
