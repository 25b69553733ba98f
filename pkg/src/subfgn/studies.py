"""Monte Carlo convergence studies with refinements coupled per sample path.

Temporal studies draw noise on the finest time grid and block-sum it down
to every coarser grid, so all levels see the same realization. Spatial
studies need no coupling step: the noise lives in sine-mode space and the
same increment matrix drives every mesh.

Trajectories are processed in fixed-size chunks; each chunk is a pure
function of ``(seed, cell, trajectory indices)`` and per-trajectory
squared errors are reduced in index order, so tables do not depend on the
number of worker processes.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cq import (
    bdf1_weights,
    predicted_spatial_rate,
    predicted_temporal_rate,
    theoretical_rho,
)
from .fem import FemFunction, Mesh, l2_norms, l2_project, refine_coeffs
from .noise import FgnTrajectory, NoiseSpec, sample_trajectories
from .oracle import (
    SineExpansion,
    fem_exact_in_time,
    l2_distance,
    parabola_coefficients,
    scalar_cq_solve,
)
from .stepper import run_batch

__all__ = [
    "StudyConfig",
    "RateRow",
    "RateTable",
    "rate",
    "mean_rate",
    "coarsen_increments",
    "initial_state",
    "cell_key",
    "temporal_study",
    "spatial_study",
    "deterministic_study",
    "run_study",
    "CSV_COLUMNS",
]

log = logging.getLogger(__name__)

CHUNK = 10
CSV_COLUMNS = ("H", "alpha", "m", "level", "grid", "error", "rate", "mean_rate", "predicted_rate", "seed")


def rate(e_coarse: float, e_fine: float) -> float:
    """Observed order ``log2(e_coarse / e_fine)``."""
    if not (e_coarse > 0 and e_fine > 0):
        raise ValueError(f"errors must be positive, got {e_coarse!r}, {e_fine!r}")
    return math.log(e_coarse / e_fine) / math.log(2.0)


def mean_rate(errors) -> float:
    """Arithmetic mean of the successive rates of an error column."""
    errors = list(errors)
    rates = [rate(a, b) for a, b in zip(errors[:-1], errors[1:])]
    return sum(rates) / len(rates)


def coarsen_increments(fine, factor: int):
    """Block sums of consecutive increments along the last axis.

    Accepts an array or an :class:`FgnTrajectory`.
    """
    if isinstance(fine, FgnTrajectory):
        return FgnTrajectory(coarsen_increments(fine.increments, factor), fine.dt * factor)
    factor = int(factor)
    n = fine.shape[-1]
    if factor < 1 or n % factor:
        raise ValueError(f"factor {factor} does not divide {n} steps")
    if factor == 1:
        return fine.copy()
    return fine.reshape(fine.shape[:-1] + (n // factor, factor)).sum(axis=-1)


def _check_ladder(grids) -> list[int]:
    grids = [int(g) for g in grids]
    if len(grids) < 2:
        raise ValueError("a ladder needs at least two levels")
    for a, b in zip(grids[:-1], grids[1:]):
        if b != 2 * a:
            raise ValueError(f"grids must double at every level, got {grids}")
    return grids


@dataclass
class StudyConfig:
    kind: str
    alpha: float
    hurst: float = 0.75
    m: float = 0.0
    K: int = 1000
    trajectories: int = 100
    T: float = 0.01
    master_seed: int | None = None
    grids: list[int] = field(default_factory=lambda: [32, 64, 128, 256])
    fixed_h: int = 128
    fixed_N: int = 1024
    g0: str = "zero"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("temporal", "spatial", "deterministic", "deterministic-temporal"):
            raise ValueError(f"unknown study kind {self.kind!r}")
        self.grids = _check_ladder(self.grids)
        if self.g0 not in ("zero", "parabola"):
            raise ValueError(f"g0 must be 'zero' or 'parabola', got {self.g0!r}")
        if self.kind in ("temporal", "spatial"):
            if self.master_seed is None:
                raise ValueError("stochastic studies need a master seed")
            if self.trajectories < 1:
                raise ValueError("need at least one trajectory")

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.hurst, self.m, self.K)

    @property
    def rho(self) -> float:
        return theoretical_rho(self.m)


@dataclass
class RateRow:
    H: float
    alpha: float
    m: float
    grids: list[int]
    errors: list[float]
    predicted_rate: float
    seed: int | None = None

    @property
    def rates(self) -> list[float]:
        return [rate(a, b) for a, b in zip(self.errors[:-1], self.errors[1:])]

    @property
    def mean_rate(self) -> float:
        return mean_rate(self.errors)

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.errors[:-1], self.errors[1:]))


@dataclass
class RateTable:
    kind: str
    rows: list[RateRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def records(self):
        for row in self.rows:
            rates = [None] + row.rates
            for level, (grid, err, r) in enumerate(zip(row.grids, row.errors, rates)):
                yield {
                    "H": row.H,
                    "alpha": row.alpha,
                    "m": row.m,
                    "level": level,
                    "grid": grid,
                    "error": err,
                    "rate": r,
                    "mean_rate": row.mean_rate,
                    "predicted_rate": row.predicted_rate,
                    "seed": row.seed,
                }

    def to_csv(self, fh, meta: bool = True) -> None:
        import csv

        if meta:
            fh.write(f"# kind={self.kind}\n")
            for key, val in self.meta.items():
                fh.write(f"# {key}={val}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in self.records():
            writer.writerow(
                [
                    repr(rec["H"]),
                    repr(rec["alpha"]),
                    repr(rec["m"]),
                    rec["level"],
                    rec["grid"],
                    f"{rec['error']:.8e}",
                    "" if rec["rate"] is None else f"{rec['rate']:.6f}",
                    f"{rec['mean_rate']:.6f}",
                    f"{rec['predicted_rate']:.6f}",
                    "" if rec["seed"] is None else rec["seed"],
                ]
            )


def cell_key(hurst: float, alpha: float) -> tuple[int, int]:
    """Stream namespace of one table cell."""
    return (int(round(hurst * 10_000)), int(round(alpha * 10_000)))


def initial_state(kind: str, mesh: Mesh) -> np.ndarray:
    """``P_h G_0`` for ``G_0 = 0`` or ``G_0 = x (1 - x)``."""
    if kind == "zero":
        return np.zeros(mesh.dim)
    x, h = mesh.nodes, mesh.h
    # exact (x(1-x), chi_j) for the quadratic: h g(x_j) + h^3 g''/12
    return l2_project(h * x * (1.0 - x) - h**3 / 6.0, mesh).coeffs


def _chunks(n: int, size: int = CHUNK):
    return [list(range(s, min(s + size, n))) for s in range(0, n, size)]


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _temporal_chunk(args) -> np.ndarray:
    cfg, indices = args
    levels = cfg.grids + [2 * cfg.grids[-1]]
    n_fine = levels[-1]
    mesh = Mesh(cfg.fixed_h)
    u0 = initial_state(cfg.g0, mesh)
    incr = sample_trajectories(
        cfg.noise, n_fine, cfg.T / n_fine, cfg.master_seed, indices, cell_key(cfg.hurst, cfg.alpha)
    )
    finals = []
    for N in levels:
        w = bdf1_weights(1.0 - cfg.alpha, cfg.T / N, N)
        finals.append(run_batch(mesh, w, N, u0, coarsen_increments(incr, n_fine // N)))
    return np.array([l2_norms(a - b, mesh) ** 2 for a, b in zip(finals[:-1], finals[1:])])


def _spatial_chunk(args) -> np.ndarray:
    cfg, indices = args
    levels = cfg.grids + [2 * cfg.grids[-1]]
    N = cfg.fixed_N
    w = bdf1_weights(1.0 - cfg.alpha, cfg.T / N, N)
    incr = sample_trajectories(
        cfg.noise, N, cfg.T / N, cfg.master_seed, indices, cell_key(cfg.hurst, cfg.alpha)
    )
    finals = []
    for M in levels:
        mesh = Mesh(M)
        finals.append(run_batch(mesh, w, N, initial_state(cfg.g0, mesh), incr))
    out = []
    for M, coarse, fine in zip(levels[:-1], finals[:-1], finals[1:]):
        out.append(l2_norms(refine_coeffs(coarse) - fine, Mesh(2 * M)) ** 2)
    return np.array(out)


def _monte_carlo(cfg: StudyConfig, chunk_fn) -> list[float]:
    jobs = [(cfg, idx) for idx in _chunks(cfg.trajectories)]
    parts = _map(chunk_fn, jobs, cfg.workers)
    # shape (levels, trajectories) in trajectory-index order
    sq = np.concatenate(parts, axis=1)
    return [float(np.sqrt(np.mean(row))) for row in sq]


def _finish(cfg: StudyConfig, errors, predicted) -> RateRow:
    row = RateRow(cfg.hurst, cfg.alpha, cfg.m, list(cfg.grids), errors, predicted, cfg.master_seed)
    if not row.monotone:
        warnings.warn(
            f"errors not monotone for H={cfg.hurst}, alpha={cfg.alpha}: {errors}",
            RuntimeWarning,
            stacklevel=3,
        )
    return row


def temporal_study(cfg: StudyConfig) -> RateRow:
    """Self-convergence in time at fixed mesh, one (H, alpha) cell.

    Error at level ``N`` is the RMS over trajectories of
    ``||G_N - G_{2N}||`` at ``t = T``.
    """
    errors = _monte_carlo(cfg, _temporal_chunk)
    return _finish(cfg, errors, predicted_temporal_rate(cfg.hurst, cfg.alpha, cfg.rho))


def spatial_study(cfg: StudyConfig) -> RateRow:
    """Self-convergence in space at fixed ``N``, one (H, alpha) cell."""
    errors = _monte_carlo(cfg, _spatial_chunk)
    return _finish(cfg, errors, predicted_spatial_rate(cfg.hurst, cfg.alpha, cfg.rho))


def deterministic_study(cfg: StudyConfig) -> RateRow:
    """Noise-free convergence for ``G_0 = x(1-x)`` against reference solutions.

    ``kind="deterministic"`` varies the mesh over ``grids`` at fixed ``N``
    and measures the L2 distance to the per-mode CQ solution with exact
    eigenvalues (same time grid, no spatial error).
    ``kind="deterministic-temporal"`` varies ``N`` over ``grids`` at fixed
    mesh and compares with the continuous-time FEM solution built from
    Mittag-Leffler modal factors (no temporal error).
    """
    if cfg.kind == "deterministic-temporal":
        mesh = Mesh(cfg.fixed_h)
        u0 = FemFunction(mesh, initial_state("parabola", mesh))
        ref = fem_exact_in_time(u0, cfg.alpha, cfg.T)
        errors = []
        for N in cfg.grids:
            w = bdf1_weights(1.0 - cfg.alpha, cfg.T / N, N)
            G = run_batch(mesh, w, N, u0.coeffs, None)[:, 0]
            errors.append(float(l2_norms(G - ref.coeffs, mesh)))
        predicted = 1.0
    else:
        N = cfg.fixed_N
        w = bdf1_weights(1.0 - cfg.alpha, cfg.T / N, N)
        c0 = parabola_coefficients(max(cfg.K, 1000))
        lam = (np.arange(1, c0.J + 1) * np.pi) ** 2
        ref = SineExpansion(scalar_cq_solve(lam, w, c0.coeffs, None))
        errors = []
        for M in cfg.grids:
            mesh = Mesh(M)
            G = run_batch(mesh, w, N, initial_state("parabola", mesh), None)[:, 0]
            errors.append(l2_distance(FemFunction(mesh, G), ref))
        predicted = 2.0
    return RateRow(cfg.hurst, cfg.alpha, 0.0, list(cfg.grids), errors, predicted, None)


def run_study(base: StudyConfig, hursts, alphas) -> RateTable:
    """One row per ``(H, alpha)`` cell, each with its own noise streams."""
    fn = {
        "temporal": temporal_study,
        "spatial": spatial_study,
        "deterministic": deterministic_study,
        "deterministic-temporal": deterministic_study,
    }[base.kind]
    table = RateTable(base.kind)
    table.meta = {
        "T": base.T,
        "K": base.K,
        "trajectories": base.trajectories,
        "g0": base.g0,
        "fixed_h": f"1/{base.fixed_h}",
        "fixed_N": base.fixed_N,
        "streams": "independent per (seed, H, alpha) cell",
    }
    for H in hursts:
        for a in alphas:
            cfg = replace(base, hurst=H, alpha=a)
            log.info("running %s cell H=%s alpha=%s", base.kind, H, a)
            table.rows.append(fn(cfg))
    return table
