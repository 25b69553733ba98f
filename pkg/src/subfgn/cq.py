"""Backward-Euler convolution quadrature weights and predicted rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CqWeights",
    "bdf1_weights",
    "theoretical_rho",
    "predicted_temporal_rate",
    "predicted_spatial_rate",
]


@dataclass(frozen=True)
class CqWeights:
    beta: float
    tau: float
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)


def bdf1_weights(beta: float, tau: float, N: int) -> CqWeights:
    """Coefficients ``d_0..d_N`` of ``((1 - zeta) / tau)^beta``.

    Uses ``d_i = d_{i-1} (i - 1 - beta) / i`` rather than evaluating
    ``(-1)^i binom(beta, i)`` directly.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N!r}")
    d = np.empty(N + 1)
    d[0] = tau ** (-beta)
    for i in range(1, N + 1):
        d[i] = d[i - 1] * (i - 1 - beta) / i
    d.setflags(write=False)
    return CqWeights(beta=float(beta), tau=float(tau), weights=d)


def theoretical_rho(m: float, d: int = 1) -> float:
    """Noise regularity index for eigenvalues ``k^m``: ``(1 + m) d / 4``.

    The strict inequality's margin is dropped, as in the reported rates.
    """
    return (1.0 + m) * d / 4.0


def predicted_temporal_rate(H: float, alpha: float, rho: float) -> float:
    """Strong temporal order ``min(H - rho alpha, 1)``."""
    return min(H - rho * alpha, 1.0)


def predicted_spatial_rate(H: float, alpha: float, rho: float) -> float:
    """Strong spatial order ``min(2, 2 - 2 rho, 2H/alpha - 2 rho)``."""
    return min(2.0, 2.0 - 2.0 * rho, 2.0 * H / alpha - 2.0 * rho)
