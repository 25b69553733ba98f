"""Reference solutions that do not share the FEM discretization.

* :func:`mittag_leffler` evaluates ``E_alpha(-x)`` for real ``x >= 0``.
* :func:`exact_deterministic` propagates a sine expansion with the exact
  modal decay ``E_alpha(-(j pi)^2 t^alpha)``.
* :func:`fem_exact_in_time` does the same for the FEM semidiscretization,
  using the closed-form eigenpairs of the (K, M) pencil; it isolates the
  temporal error of the fully discrete scheme.
* :func:`spectral_stochastic_reference` runs the scalar CQ recursion per
  sine mode, which removes spatial error but keeps the time discretization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dst
from scipy.integrate import quad
from scipy.special import gammaln

from .cq import CqWeights, bdf1_weights
from .fem import FemFunction, Mesh, assemble_mass, l2_norms
from .noise import FgnTrajectory

__all__ = [
    "SineExpansion",
    "mittag_leffler",
    "ml_series",
    "ml_integral",
    "parabola_coefficients",
    "exact_deterministic",
    "fem_eigenvalues",
    "fem_exact_in_time",
    "spectral_stochastic_reference",
    "scalar_cq_solve",
    "l2_distance",
]

SERIES_MAX_X = 1.0


@dataclass
class SineExpansion:
    """Coefficients against ``phi_j = sqrt(2) sin(j pi x)``, ``j = 1..J``."""

    coeffs: np.ndarray

    @property
    def J(self) -> int:
        return len(self.coeffs)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs**2)))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        j = np.arange(1, self.J + 1)
        return np.sqrt(2.0) * np.sin(np.pi * np.multiply.outer(x, j)) @ self.coeffs


def ml_series(alpha: float, x: float, max_terms: int = 5000) -> float:
    """Power series ``sum (-x)^k / Gamma(alpha k + 1)``.

    Accurate in double precision only while the terms stay O(1), i.e. for
    ``x <~ 1`` at small ``alpha``.
    """
    if x == 0.0:
        return 1.0
    lx = np.log(x)
    total = 0.0
    for k in range(max_terms):
        term = np.exp(k * lx - gammaln(alpha * k + 1.0))
        total += -term if k % 2 else term
        if k > 2 and term < 1e-17 * abs(total):
            break
    return total


def ml_integral(alpha: float, x: float) -> float:
    """``E_alpha(-x)`` from its Laplace-type integral, for ``0 < alpha < 1``.

    With ``s = r^alpha`` the spectral density becomes smooth at the origin:

        E_alpha(-x) = sin(alpha pi)/(alpha pi)
                      * int_0^inf exp(-y^{1/alpha}) x / (y^2 + 2 x y cos(alpha pi) + x^2) dy
    """
    c = np.cos(alpha * np.pi)
    inv = 1.0 / alpha

    def f(y):
        return np.exp(-(y**inv)) * x / (y * y + 2.0 * x * y * c + x * x)

    # exp(-y^{1/alpha}) < 1e-17 beyond y = 40^alpha
    ymax = 40.0**alpha
    pts = [x] if x < ymax else None
    val, _ = quad(f, 0.0, ymax, points=pts, epsabs=0.0, epsrel=1e-13, limit=500)
    return np.sin(alpha * np.pi) / (alpha * np.pi) * val


def _ml_scalar(alpha: float, x: float) -> float:
    if alpha == 1.0:
        return float(np.exp(-x))
    if x <= SERIES_MAX_X:
        return ml_series(alpha, x)
    return ml_integral(alpha, x)


def mittag_leffler(alpha: float, x):
    """``E_alpha(-x)`` for ``alpha in (0, 1]`` and ``x >= 0`` (scalar or array)."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0) or not np.all(np.isfinite(xs)):
        raise ValueError("x must be finite and nonnegative")
    if xs.ndim == 0:
        return _ml_scalar(alpha, float(xs))
    flat = np.array([_ml_scalar(alpha, float(v)) for v in xs.ravel()])
    return flat.reshape(xs.shape)


def parabola_coefficients(J: int) -> SineExpansion:
    """Sine coefficients of ``x (1 - x)``: ``4 sqrt(2) / (j pi)^3`` for odd ``j``."""
    j = np.arange(1, J + 1)
    c = np.where(j % 2 == 1, 4.0 * np.sqrt(2.0) / (j * np.pi) ** 3, 0.0)
    return SineExpansion(c)


def exact_deterministic(expansion: SineExpansion, alpha: float, t: float) -> SineExpansion:
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return SineExpansion(expansion.coeffs.copy())
    j = np.arange(1, expansion.J + 1)
    nz = expansion.coeffs != 0.0
    out = np.zeros_like(expansion.coeffs)
    out[nz] = expansion.coeffs[nz] * mittag_leffler(alpha, (j[nz] * np.pi) ** 2 * t**alpha)
    return SineExpansion(out)


def fem_eigenvalues(mesh: Mesh) -> np.ndarray:
    """Generalized eigenvalues of the P1 stiffness/mass pair.

    ``(6/h^2) (1 - cos(j pi h)) / (2 + cos(j pi h))`` with eigenvectors
    ``sin(j pi x_i)``.
    """
    c = np.cos(np.arange(1, mesh.n_intervals) * np.pi * mesh.h)
    return 6.0 / mesh.h**2 * (1.0 - c) / (2.0 + c)


def fem_exact_in_time(u0: FemFunction, alpha: float, t: float) -> FemFunction:
    """Semidiscrete (continuous-time) FEM solution of the noise-free problem."""
    mesh = u0.mesh
    # DST-I diagonalizes both tridiagonal Toeplitz matrices
    modal = dst(u0.coeffs, type=1)
    decay = mittag_leffler(alpha, fem_eigenvalues(mesh) * t**alpha)
    return FemFunction(mesh, dst(modal * decay, type=1) / (2 * mesh.n_intervals))


def scalar_cq_solve(lam: np.ndarray, weights: CqWeights, g0: np.ndarray, forcing: np.ndarray | None) -> np.ndarray:
    """Final values of ``(g^n - g^{n-1})/tau + lam sum_{i=0}^{n-1} d_i g^{n-i} = f^n/tau``.

    Vectorized over the leading axis of ``lam``/``g0``; ``forcing`` has shape
    ``(len(lam), N)``.
    """
    lam = np.asarray(lam, dtype=float)
    g0 = np.broadcast_to(np.asarray(g0, dtype=float), lam.shape)
    tau, d = weights.tau, np.asarray(weights.weights)
    N = len(d) - 1 if forcing is None else forcing.shape[-1]
    out = np.zeros(lam.shape)
    # modes with neither initial data nor forcing stay zero
    live = g0 != 0.0
    if forcing is not None:
        live |= np.any(forcing != 0.0, axis=-1)
    if not np.any(live):
        return out
    lam_l = lam[live]
    hist = np.zeros((N + 1, lam_l.size))
    hist[0] = g0[live]
    f = None if forcing is None else forcing[live]
    d_rev = d[::-1].copy()
    denom = 1.0 / tau + d[0] * lam_l
    for n in range(1, N + 1):
        rhs = hist[n - 1] / tau
        if n >= 2:
            # sum_{i=1}^{n-1} d_i g^{n-i} = d_{n-1} g^1 + ... + d_1 g^{n-1}
            rhs = rhs - lam_l * (d_rev[len(d) - n : len(d) - 1] @ hist[1:n])
        if f is not None:
            rhs = rhs + f[:, n - 1] / tau
        hist[n] = rhs / denom
    out[live] = hist[N]
    return out


def spectral_stochastic_reference(
    alpha: float,
    T: float,
    traj: FgnTrajectory,
    initial: SineExpansion | None = None,
    J: int | None = None,
) -> SineExpansion:
    """Per-mode CQ solution at ``t = T`` with exact eigenvalues ``(j pi)^2``.

    Noise modes coincide with the eigenfunctions of the Laplacian, so each
    coefficient evolves independently. ``J`` defaults to
    ``max(K, 1000)``; modes without forcing only carry initial data.
    """
    K, N = traj.increments.shape
    J = max(K, 1000) if J is None else J
    if initial is not None:
        J = max(J, initial.J)
    lam = (np.arange(1, J + 1) * np.pi) ** 2
    g0 = np.zeros(J)
    if initial is not None:
        g0[: initial.J] = initial.coeffs
    forcing = np.zeros((J, N))
    forcing[:K] = traj.increments
    weights = bdf1_weights(1.0 - alpha, T / N, N)
    return SineExpansion(scalar_cq_solve(lam, weights, g0, forcing))


def l2_distance(f: FemFunction, g: SineExpansion, points_per_interval: int = 8, min_intervals: int = 512) -> float:
    """``||f - g||_{L2(0,1)}`` by composite Gauss-Legendre quadrature.

    The piecewise-linear ``f`` is integrated exactly; the sine series is
    resolved by subdividing mesh intervals down to ``1/min_intervals``.
    """
    mesh = f.mesh
    sub = max(1, -(-min_intervals // mesh.n_intervals))
    n_el = mesh.n_intervals * sub
    gx, gw = np.polynomial.legendre.leggauss(points_per_interval)
    left = np.arange(n_el) / n_el
    x = (left[:, None] + (gx[None, :] + 1.0) / (2 * n_el)).ravel()
    w = np.tile(gw / (2 * n_el), n_el)
    nodal = np.concatenate([[0.0], f.coeffs, [0.0]])
    fx = np.interp(x, np.linspace(0.0, 1.0, mesh.n_intervals + 1), nodal)
    return float(np.sqrt(np.sum(w * (fx - g(x)) ** 2)))


def project_expansion(g: SineExpansion, mesh: Mesh) -> FemFunction:
    """L2 projection of a sine series onto the P1 space."""
    from .noise import load_matrix

    loads = load_matrix(g.J, mesh) @ g.coeffs
    return FemFunction(mesh, assemble_mass(mesh).factorize().solve(loads))


def parseval_gap(g: SineExpansion, mesh: Mesh) -> float:
    """``| ||g|| - ||P_h g|| |``."""
    return abs(g.norm() - float(l2_norms(project_expansion(g, mesh).coeffs, mesh)))
