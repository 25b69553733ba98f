"""Exact sampling of fractional Gaussian noise on a uniform time grid.

Increments of a one-dimensional fBm are drawn by circulant embedding of the
Toeplitz increment covariance (Davies-Harte / Wood-Chan). A Cholesky
fallback covers the rare case where roundoff makes the embedding indefinite.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "EmbeddingError",
    "FgnParams",
    "fgn_autocovariance",
    "circulant_spectrum",
    "fgn_transform",
    "sample_fgn",
    "stream",
]

# eigenvalues in [-CLAMP_RTOL * max, 0) are treated as roundoff and zeroed
CLAMP_RTOL = 1e-10
CHOLESKY_MAX_N = 1024


class EmbeddingError(ValueError):
    """The circulant embedding of the fGn covariance is not nonnegative."""


def _check_hurst(hurst: float) -> None:
    if not 0.5 <= hurst < 1.0:
        raise ValueError(f"hurst must lie in [0.5, 1), got {hurst!r}")


@dataclass(frozen=True)
class FgnParams:
    hurst: float
    n_steps: int
    dt: float

    def __post_init__(self) -> None:
        _check_hurst(self.hurst)
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")


def fgn_autocovariance(hurst: float, lag):
    """Autocovariance of unit-step, unit-variance fGn.

    ``gamma(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2``. Accepts a scalar
    or an array of nonnegative lags.
    """
    _check_hurst(hurst)
    k = np.abs(np.asarray(lag, dtype=float))
    two_h = 2.0 * hurst
    gamma = 0.5 * ((k + 1.0) ** two_h - 2.0 * k**two_h + np.abs(k - 1.0) ** two_h)
    return float(gamma) if gamma.ndim == 0 else gamma


def _embedding_row(hurst: float, n_steps: int) -> np.ndarray:
    # first row of the 2n circulant: gamma(0..n), gamma(n-1..1)
    gamma = fgn_autocovariance(hurst, np.arange(n_steps + 1))
    return np.concatenate([gamma, gamma[-2:0:-1]])


@lru_cache(maxsize=64)
def _spectrum_cached(hurst: float, n_steps: int) -> np.ndarray:
    lam = np.fft.fft(_embedding_row(hurst, n_steps)).real
    top = lam.max()
    if lam.min() < -CLAMP_RTOL * top:
        raise EmbeddingError(
            f"circulant embedding has eigenvalue {lam.min():.3e} "
            f"(max {top:.3e}) for H={hurst}, n={n_steps}"
        )
    lam = np.maximum(lam, 0.0)
    lam.setflags(write=False)
    return lam


def circulant_spectrum(hurst: float, n_steps: int) -> np.ndarray:
    """Eigenvalues of the size-``2 n_steps`` circulant embedding.

    Entries within roundoff of zero are clamped to zero.

    Raises:
        EmbeddingError: if an eigenvalue is below ``-1e-10 * max``.
    """
    _check_hurst(hurst)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    return _spectrum_cached(float(hurst), int(n_steps)).copy()


@lru_cache(maxsize=16)
def _cholesky_factor(hurst: float, n_steps: int) -> np.ndarray:
    lags = np.abs(np.subtract.outer(np.arange(n_steps), np.arange(n_steps)))
    return np.linalg.cholesky(fgn_autocovariance(hurst, lags))


def _method(hurst: float, n_steps: int) -> str:
    try:
        _spectrum_cached(float(hurst), int(n_steps))
        return "circulant"
    except EmbeddingError:
        if n_steps > CHOLESKY_MAX_N:
            raise
        return "cholesky"


def n_normals(params: FgnParams) -> int:
    """Number of standard normals consumed per sampled sequence."""
    if _method(params.hurst, params.n_steps) == "circulant":
        return 4 * params.n_steps
    return params.n_steps


def fgn_transform(params: FgnParams, z: np.ndarray) -> np.ndarray:
    """Map standard normals to fGn increments.

    This is the deterministic, linear half of :func:`sample_fgn`. ``z`` has
    trailing dimension ``n_normals(params)``; leading dimensions are batch.
    For the circulant method the first ``2n`` normals are the real parts and
    the next ``2n`` the imaginary parts of the complex Gaussian vector.
    """
    n = params.n_steps
    z = np.asarray(z, dtype=float)
    scale = params.dt**params.hurst
    if _method(params.hurst, n) == "cholesky":
        return scale * (z @ _cholesky_factor(float(params.hurst), n).T)
    lam = _spectrum_cached(float(params.hurst), n)
    m = 2 * n
    w = np.sqrt(lam / m) * (z[..., :m] + 1j * z[..., m:])
    return scale * np.fft.fft(w, axis=-1).real[..., :n]


def sample_fgn(params: FgnParams, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw fGn increments with covariance ``dt^{2H} gamma(|i-j|)``.

    Args:
        params: Hurst index, number of steps and step length.
        rng: source of standard normals; output is a deterministic function
            of its state.
        size: optional batch shape prepended to the output.

    Returns:
        Array of shape ``(*size, n_steps)``.
    """
    batch = () if size is None else tuple(np.atleast_1d(size))
    z = rng.standard_normal(batch + (n_normals(params),))
    return fgn_transform(params, z)


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(master_seed, *key)``.

    Streams are derived by key, not by draw order, so results do not depend
    on which trajectories or modes are generated first.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))
