"""Fully discrete CQ / P1-FEM stepper.

Each step solves

    (M/tau + d_0 K) u^n = M u^{n-1}/tau - K sum_{i=1}^{n-1} d_i u^{n-i} + b^n/tau

where ``d_i`` are the backward-Euler CQ weights of order ``1 - alpha`` and
``b^n`` is the FEM load of the noise increment over ``(t_{n-1}, t_n]``.
The sum deliberately stops at ``u^1``: the initial state only enters
through the difference quotient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cq import CqWeights, bdf1_weights
from .fem import (
    FemFunction,
    Mesh,
    SymmetricFactorization,
    TridiagonalMatrix,
    assemble_mass,
    assemble_stiffness,
)
from .noise import FgnTrajectory, load_increments

__all__ = ["SolverConfig", "SolutionHistory", "Stepper", "step_matrix", "advance", "run", "run_batch"]


@dataclass
class SolverConfig:
    alpha: float
    T: float
    N: int
    mesh: Mesh
    initial_data: FemFunction | None = None
    noise: FgnTrajectory | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not self.T > 0 or self.N < 1:
            raise ValueError("need T > 0 and N >= 1")
        if self.initial_data is None:
            self.initial_data = FemFunction(self.mesh, np.zeros(self.mesh.dim))
        if self.initial_data.mesh != self.mesh:
            raise ValueError("initial data lives on a different mesh")
        if self.noise is not None and self.noise.n_steps != self.N:
            raise ValueError(f"noise has {self.noise.n_steps} steps, config has N={self.N}")

    @property
    def tau(self) -> float:
        return self.T / self.N

    def weights(self) -> CqWeights:
        return bdf1_weights(1.0 - self.alpha, self.tau, self.N)


@dataclass
class SolutionHistory:
    mesh: Mesh
    states: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, n: int) -> FemFunction:
        return FemFunction(self.mesh, self.states[n])

    @property
    def final(self) -> FemFunction:
        return self[-1]


def step_matrix(config: SolverConfig, weights: CqWeights | None = None) -> SymmetricFactorization:
    """Factorized ``M/tau + d_0 K``."""
    weights = config.weights() if weights is None else weights
    M, K = assemble_mass(config.mesh), assemble_stiffness(config.mesh)
    return M.scaled_sum(1.0 / config.tau, K, weights.weights[0]).factorize()


class Stepper:
    """Holds the matrices and factorization shared by every step of a run.

    States may carry a trailing batch axis; all columns advance together
    and never mix.
    """

    def __init__(self, mesh: Mesh, weights: CqWeights, n_max: int, batch_shape=()):
        if len(weights) <= n_max - 1:
            raise ValueError("not enough CQ weights for the requested steps")
        self.mesh = mesh
        self.tau = weights.tau
        self.d = np.asarray(weights.weights)[: n_max + 1]
        self._d_rev = self.d[::-1].copy()
        self.M: TridiagonalMatrix = assemble_mass(mesh)
        self.K: TridiagonalMatrix = assemble_stiffness(mesh)
        self.lu = self.M.scaled_sum(1.0 / self.tau, self.K, self.d[0]).factorize()
        self._hist = np.zeros((n_max + 1, mesh.dim) + tuple(batch_shape))
        self.n = 0

    def start(self, u0: np.ndarray) -> None:
        self._hist[0] = u0
        self.n = 0

    def advance(self, load: np.ndarray | None) -> np.ndarray:
        n = self.n + 1
        hist = self._hist
        rhs = self.M.matvec(hist[n - 1]) / self.tau
        if n >= 2:
            # sum_{i=1}^{n-1} d_i u^{n-i} = d_{n-1} u^1 + ... + d_1 u^{n-1}
            past = np.tensordot(self._d_rev[-n:-1], hist[1:n], axes=(0, 0))
            rhs -= self.K.matvec(past)
        if load is not None:
            rhs += load / self.tau
        hist[n] = self.lu.solve(rhs)
        self.n = n
        return hist[n]

    @property
    def states(self) -> np.ndarray:
        return self._hist[: self.n + 1]


def advance(history: SolutionHistory, weights: CqWeights, load: np.ndarray | None) -> FemFunction:
    """One step appended to ``history`` (convenience path; rebuilds the factorization)."""
    mesh = history.mesh
    n = len(history)
    st = Stepper(mesh, weights, n)
    st._hist[:n] = np.asarray(history.states)
    st.n = n - 1
    u = st.advance(load).copy()
    history.states.append(u)
    return FemFunction(mesh, u)


def run(config: SolverConfig, cq_weights: CqWeights | None = None) -> SolutionHistory:
    """Solve stochastic forcing plus initial data in a single pass."""
    weights = config.weights() if cq_weights is None else cq_weights
    loads = None if config.noise is None else load_increments(config.noise.increments, config.mesh)
    st = Stepper(config.mesh, weights, config.N)
    st.start(config.initial_data.coeffs)
    for n in range(1, config.N + 1):
        st.advance(None if loads is None else loads[n - 1])
    if not np.all(np.isfinite(st.states)):
        raise FloatingPointError("non-finite state in solution history")
    return SolutionHistory(config.mesh, list(st.states.copy()))


def run_batch(
    mesh: Mesh,
    weights: CqWeights,
    N: int,
    u0: np.ndarray,
    increments: np.ndarray | None,
) -> np.ndarray:
    """Final states for a batch of trajectories, shape ``(dim, R)``.

    ``increments`` has shape ``(R, K, N)``; ``u0`` has shape ``(dim,)`` and
    is shared by every trajectory.
    """
    R = 1 if increments is None else increments.shape[0]
    loads = None if increments is None else load_increments(increments, mesh)
    st = Stepper(mesh, weights, N, batch_shape=(R,))
    st.start(np.broadcast_to(np.asarray(u0)[:, None], (mesh.dim, R)))
    for n in range(1, N + 1):
        st.advance(None if loads is None else loads[n - 1])
    out = st.states[N].copy()
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite final state")
    return out
