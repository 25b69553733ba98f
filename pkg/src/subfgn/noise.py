"""Truncated Q-fBm expansion in the Dirichlet sine basis and its FEM loads."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cq import theoretical_rho
from .fem import Mesh
from .fgn import FgnParams, fgn_transform, n_normals, stream

__all__ = [
    "NoiseSpec",
    "FgnTrajectory",
    "eigenpair",
    "sample_trajectory",
    "sample_trajectories",
    "mode_load_coefficients",
    "load_matrix",
    "load_increment",
    "load_increments",
]


@dataclass(frozen=True)
class NoiseSpec:
    hurst: float
    m: float = 0.0
    K: int = 1000

    def __post_init__(self) -> None:
        if not 0.5 <= self.hurst < 1.0:
            raise ValueError(f"hurst must lie in [0.5, 1), got {self.hurst!r}")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")

    @property
    def theoretical_rho(self) -> float:
        return theoretical_rho(self.m)

    def eigenvalues(self) -> np.ndarray:
        return np.arange(1, self.K + 1, dtype=float) ** self.m


@dataclass
class FgnTrajectory:
    """Scaled mode increments; entry ``(k-1, n-1)`` is ``sqrt(Lambda_k) (W_k(t_n) - W_k(t_{n-1}))``."""

    increments: np.ndarray
    dt: float

    @property
    def K(self) -> int:
        return self.increments.shape[0]

    @property
    def n_steps(self) -> int:
        return self.increments.shape[1]


def eigenpair(k: int, m: float):
    """``(k^m, x -> sqrt(2) sin(k pi x))``."""
    if k < 1:
        raise ValueError("mode index starts at 1")
    return float(k) ** m, lambda x: np.sqrt(2.0) * np.sin(k * np.pi * np.asarray(x))


def _mode_normals(spec: NoiseSpec, params: FgnParams, master_seed: int, traj: int, cell) -> np.ndarray:
    width = n_normals(params)
    z = np.empty((spec.K, width))
    for k in range(1, spec.K + 1):
        z[k - 1] = stream(master_seed, *cell, traj, k).standard_normal(width)
    return z


def sample_trajectory(
    spec: NoiseSpec,
    n_steps: int,
    dt: float,
    master_seed: int,
    trajectory_index: int,
    cell: tuple[int, ...] = (),
) -> FgnTrajectory:
    """One sample path of the truncated noise.

    Row ``k`` is ``sqrt(k^m)`` times fGn drawn from
    ``stream(master_seed, *cell, trajectory_index, k)``. ``cell`` optionally
    namespaces independent experiments sharing a seed.
    """
    params = FgnParams(spec.hurst, n_steps, dt)
    z = _mode_normals(spec, params, master_seed, trajectory_index, cell)
    incr = fgn_transform(params, z) * np.sqrt(spec.eigenvalues())[:, None]
    return FgnTrajectory(incr, float(dt))


def sample_trajectories(spec, n_steps, dt, master_seed, indices, cell=()) -> np.ndarray:
    """Stacked increments, shape ``(len(indices), K, n_steps)``."""
    return np.stack(
        [sample_trajectory(spec, n_steps, dt, master_seed, i, cell).increments for i in indices]
    )


@lru_cache(maxsize=256)
def _load_column(k: int, n_intervals: int) -> np.ndarray:
    h = 1.0 / n_intervals
    x = np.arange(1, n_intervals) * h
    kph = k * np.pi * h
    # 2 - 2cos(kph) = 4 sin^2(kph/2), which avoids cancellation for small kph
    factor = 4.0 * np.sin(0.5 * kph) ** 2 / (k * k * np.pi * np.pi * h)
    col = np.sqrt(2.0) * np.sin(k * np.pi * x) * factor
    col.setflags(write=False)
    return col


def mode_load_coefficients(k: int, mesh: Mesh) -> np.ndarray:
    """Exact ``(phi_k, chi_j)`` for every interior hat function ``chi_j``."""
    if k < 1:
        raise ValueError("mode index starts at 1")
    return _load_column(int(k), mesh.n_intervals)


@lru_cache(maxsize=32)
def _load_matrix(K: int, n_intervals: int) -> np.ndarray:
    mesh = Mesh(n_intervals)
    P = np.empty((mesh.dim, K))
    for k in range(1, K + 1):
        P[:, k - 1] = _load_column(k, n_intervals)
    P.setflags(write=False)
    return P


def load_matrix(K: int, mesh: Mesh) -> np.ndarray:
    """Columns are :func:`mode_load_coefficients` for ``k = 1..K``."""
    return _load_matrix(int(K), mesh.n_intervals)


def load_increment(traj: FgnTrajectory, n: int, mesh: Mesh) -> np.ndarray:
    """FEM load of ``W_Q(t_n) - W_Q(t_{n-1})`` (no division by the step)."""
    if not 1 <= n <= traj.n_steps:
        raise IndexError(f"step {n} outside 1..{traj.n_steps}")
    return load_matrix(traj.K, mesh) @ traj.increments[:, n - 1]


def load_increments(increments: np.ndarray, mesh: Mesh) -> np.ndarray:
    """All step loads at once.

    ``increments`` has shape ``(K, N)`` or ``(R, K, N)``; the result has
    shape ``(N, dim)`` or ``(N, dim, R)`` as used by the stepper.
    """
    P = load_matrix(increments.shape[-2], mesh)
    if increments.ndim == 2:
        return (P @ increments).T
    return np.einsum("jk,rkn->njr", P, increments, optimize=True)
