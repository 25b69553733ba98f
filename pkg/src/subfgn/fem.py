"""P1 finite elements on a uniform mesh of (0, 1) with zero Dirichlet data.

Only interior nodes carry unknowns. Vectors may carry trailing batch axes:
a state of shape ``(dim, R)`` holds ``R`` independent functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

__all__ = [
    "Mesh",
    "TridiagonalMatrix",
    "FemFunction",
    "SymmetricFactorization",
    "assemble_mass",
    "assemble_stiffness",
    "solve_tridiagonal",
    "l2_project",
    "l2_norm",
    "l2_norms",
    "refine_interpolate",
    "refine_coeffs",
    "interpolate",
]


@dataclass(frozen=True)
class Mesh:
    n_intervals: int

    def __post_init__(self) -> None:
        if int(self.n_intervals) != self.n_intervals or self.n_intervals < 2:
            raise ValueError(f"need at least 2 intervals, got {self.n_intervals!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.n_intervals

    @property
    def dim(self) -> int:
        return self.n_intervals - 1

    @property
    def nodes(self) -> np.ndarray:
        """Interior node coordinates ``x_j = j h``."""
        return np.arange(1, self.n_intervals) / self.n_intervals

    def refined(self) -> "Mesh":
        return Mesh(2 * self.n_intervals)


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Tridiagonal matrix stored by diagonals; ``sub[i] = A[i+1, i]``."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.diag)
        if len(self.sub) != n - 1 or len(self.sup) != n - 1:
            raise ValueError("off-diagonals must have length len(diag) - 1")

    @property
    def size(self) -> int:
        return len(self.diag)

    @property
    def symmetric(self) -> bool:
        return bool(np.array_equal(self.sub, self.sup))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = (-1,) + (1,) * (x.ndim - 1)
        y = self.diag.reshape(shape) * x
        y[:-1] += self.sup.reshape(shape) * x[1:]
        y[1:] += self.sub.reshape(shape) * x[:-1]
        return y

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sup, 1) + np.diag(self.sub, -1)

    def scaled_sum(self, a: float, other: "TridiagonalMatrix", b: float) -> "TridiagonalMatrix":
        """``a * self + b * other``."""
        return TridiagonalMatrix(
            a * self.sub + b * other.sub,
            a * self.diag + b * other.diag,
            a * self.sup + b * other.sup,
        )

    def factorize(self) -> "SymmetricFactorization":
        return SymmetricFactorization(self)


class SymmetricFactorization:
    """LDL^T factorization of an SPD tridiagonal matrix (LAPACK ``dpttrf``).

    ``count`` tallies how many factorizations were built, process-wide.
    """

    count = 0

    def __init__(self, A: TridiagonalMatrix):
        if not A.symmetric:
            raise ValueError("matrix is not symmetric")
        # the f2py wrapper wants a nonempty off-diagonal even for 1x1 systems
        sub = A.sub if A.size > 1 else np.zeros(1)
        d, e, info = lapack.dpttrf(A.diag, sub)
        if info != 0:
            raise np.linalg.LinAlgError(f"matrix is not positive definite (info={info})")
        self._d = d
        self._e = e
        self.size = A.size
        type(self).count += 1

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        rhs = b.reshape(self.size, -1)
        x, info = lapack.dpttrs(self._d, self._e, rhs)
        if info != 0:
            raise np.linalg.LinAlgError(f"dpttrs failed (info={info})")
        return x.reshape(b.shape)


def assemble_mass(mesh: Mesh) -> TridiagonalMatrix:
    n, h = mesh.dim, mesh.h
    off = np.full(n - 1, h / 6.0)
    return TridiagonalMatrix(off, np.full(n, 4.0 * h / 6.0), off.copy())


def assemble_stiffness(mesh: Mesh) -> TridiagonalMatrix:
    n, h = mesh.dim, mesh.h
    off = np.full(n - 1, -1.0 / h)
    return TridiagonalMatrix(off, np.full(n, 2.0 / h), off.copy())


def solve_tridiagonal(A: TridiagonalMatrix, b: np.ndarray) -> np.ndarray:
    """Thomas algorithm without pivoting.

    Works for any nonsingular tridiagonal ``A`` whose leading minors are
    nonzero (diagonally dominant or SPD in practice). ``b`` may carry batch
    columns.
    """
    b = np.asarray(b, dtype=float)
    n = A.size
    if b.shape[0] != n:
        raise ValueError(f"rhs has {b.shape[0]} rows, matrix has {n}")
    c = np.empty(n - 1)
    y = np.empty_like(b)
    piv = A.diag[0]
    if piv == 0.0:
        raise ZeroDivisionError("zero pivot in row 0")
    y[0] = b[0] / piv
    for i in range(1, n):
        c[i - 1] = A.sup[i - 1] / piv
        piv = A.diag[i] - A.sub[i - 1] * c[i - 1]
        if piv == 0.0:
            raise ZeroDivisionError(f"zero pivot in row {i}")
        y[i] = (b[i] - A.sub[i - 1] * y[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        y[i] -= c[i] * y[i + 1]
    return y


@dataclass
class FemFunction:
    mesh: Mesh
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape[0] != self.mesh.dim:
            raise ValueError(
                f"expected {self.mesh.dim} interior values, got {self.coeffs.shape[0]}"
            )

    def __mul__(self, c: float) -> "FemFunction":
        return FemFunction(self.mesh, c * self.coeffs)

    __rmul__ = __mul__


def l2_project(loads: np.ndarray, mesh: Mesh) -> FemFunction:
    """L2 projection from the load vector ``l_j = (g, chi_j)``."""
    return FemFunction(mesh, assemble_mass(mesh).factorize().solve(loads))


def l2_norms(coeffs: np.ndarray, mesh: Mesh) -> np.ndarray:
    """``sqrt(c^T M c)`` per batch column."""
    c = np.asarray(coeffs, dtype=float)
    sq = np.einsum("i...,i...->...", c, assemble_mass(mesh).matvec(c))
    return np.sqrt(np.maximum(sq, 0.0))


def l2_norm(f: FemFunction) -> float:
    return float(l2_norms(f.coeffs, f.mesh))


def refine_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Nodal values on the uniformly refined mesh.

    New midpoints average their neighbours, with zero boundary values.
    """
    c = np.asarray(coeffs, dtype=float)
    n = c.shape[0]
    fine = np.zeros((2 * n + 1,) + c.shape[1:])
    fine[1::2] = c
    padded = np.concatenate([np.zeros((1,) + c.shape[1:]), c, np.zeros((1,) + c.shape[1:])])
    fine[0::2] = 0.5 * (padded[:-1] + padded[1:])
    return fine


def refine_interpolate(f: FemFunction, target: Mesh | None = None) -> FemFunction:
    """Exact representation of ``f`` on the refined mesh (or a nested finer one)."""
    target = f.mesh.refined() if target is None else target
    coeffs, mesh = f.coeffs, f.mesh
    while mesh.n_intervals < target.n_intervals:
        coeffs, mesh = refine_coeffs(coeffs), mesh.refined()
    if mesh != target:
        raise ValueError(f"mesh {target.n_intervals} is not a dyadic refinement of {f.mesh.n_intervals}")
    return FemFunction(mesh, coeffs)


def interpolate(g, mesh: Mesh) -> FemFunction:
    """Nodal interpolant of a callable."""
    return FemFunction(mesh, np.asarray(g(mesh.nodes), dtype=float))
