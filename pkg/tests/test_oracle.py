import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad

from subfgn.cq import bdf1_weights
from subfgn.fem import FemFunction, Mesh, l2_norm, l2_project
from subfgn.noise import FgnTrajectory, NoiseSpec, mode_load_coefficients, sample_trajectory
from subfgn.oracle import (
    SineExpansion,
    exact_deterministic,
    fem_exact_in_time,
    l2_distance,
    mittag_leffler,
    ml_integral,
    ml_series,
    parabola_coefficients,
    parseval_gap,
    project_expansion,
    scalar_cq_solve,
    spectral_stochastic_reference,
)
from subfgn.stepper import SolverConfig, run


def ml_mp(alpha, x):
    with mp.workdps(60):
        return float(mp.nsum(lambda k: (-mp.mpf(x)) ** k / mp.gamma(alpha * k + 1), [0, mp.inf]))


class TestMittagLeffler:
    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
    def test_at_zero(self, alpha):
        assert mittag_leffler(alpha, 0.0) == 1.0

    def test_exponential(self):
        assert mittag_leffler(1.0, 1.0) == pytest.approx(0.36787944117144233, rel=1e-15)

    def test_half_order_erfc(self):
        # E_{1/2}(-x) = exp(x^2) erfc(x); mpmath at 30 digits gives 0.42758357615580700
        assert mittag_leffler(0.5, 1.0) == pytest.approx(0.427583576155807004, rel=1e-12)
        for x in (0.3, 2.0, 7.5, 40.0):
            ref = float(mp.exp(mp.mpf(x) ** 2) * mp.erfc(x))
            assert mittag_leffler(0.5, x) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.8, 0.95, 0.99])
    @pytest.mark.parametrize("x", [0.05, 0.7, 1.0, 1.3, 3.0, 6.0, 15.0])
    def test_against_high_precision(self, alpha, x):
        assert mittag_leffler(alpha, x) == pytest.approx(ml_mp(alpha, x), rel=1e-10)

    @pytest.mark.parametrize("alpha,x_hi", [(0.1, 1.2), (0.3, 2.0), (0.5, 2.0), (0.8, 2.0), (0.95, 2.0)])
    def test_regimes_agree_on_overlap(self, alpha, x_hi):
        # at alpha = 0.1 the series terms overflow shortly past x = 1
        for x in np.linspace(0.5, x_hi, 7):
            assert ml_series(alpha, x) == pytest.approx(ml_integral(alpha, x), rel=1e-9)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
    def test_large_argument_asymptotics(self, alpha):
        from scipy.special import rgamma

        x = 1e6
        asym = sum((-1) ** (k + 1) * x**-k * rgamma(1 - alpha * k) for k in range(1, 5))
        assert mittag_leffler(alpha, x) == pytest.approx(asym, rel=1e-10)

    @pytest.mark.parametrize("alpha", [0.2, 0.6, 0.9])
    def test_monotone_in_unit_interval(self, alpha):
        xs = np.concatenate([np.linspace(0, 5, 41), np.logspace(0.8, 7, 30)])
        v = mittag_leffler(alpha, np.sort(xs))
        assert np.all(v > 0) and np.all(v <= 1)
        assert np.all(np.diff(v) <= 0)

    def test_domain(self):
        with pytest.raises(ValueError):
            mittag_leffler(0.0, 1.0)
        with pytest.raises(ValueError):
            mittag_leffler(0.5, -1.0)


class TestDeterministic:
    def test_identity_at_zero(self):
        c = parabola_coefficients(9)
        np.testing.assert_array_equal(exact_deterministic(c, 0.4, 0.0).coeffs, c.coeffs)

    def test_heat_single_mode(self):
        out = exact_deterministic(SineExpansion(np.array([2.0])), 1.0, 0.01)
        # exp(-pi^2 * 0.01) = 0.906018055788923 (mpmath)
        assert out.coeffs[0] == pytest.approx(2.0 * 0.906018055788923, rel=1e-14)

    def test_parabola_coefficients_by_quadrature(self):
        c = parabola_coefficients(8).coeffs
        for j in range(1, 9):
            val, _ = quad(lambda x: x * (1 - x) * np.sqrt(2) * np.sin(j * np.pi * x), 0, 1, epsabs=1e-14, limit=200)
            assert c[j - 1] == pytest.approx(val, abs=1e-10)

    def test_parseval(self):
        # ||x(1-x)||^2 = 1/30
        assert parabola_coefficients(2000).norm() ** 2 == pytest.approx(1 / 30, rel=1e-10)

    def test_parseval_projection_gap(self):
        # ||g||^2 - ||P_h g||^2 = ||g - P_h g||^2 = O(h^4)
        g = parabola_coefficients(1000)
        gaps = [parseval_gap(g, Mesh(n)) for n in (16, 32, 64)]
        assert gaps[0] < 1e-4
        assert np.log2(gaps[0] / gaps[1]) == pytest.approx(4.0, abs=0.3)

    def test_fem_exact_in_time_against_modal_ml(self):
        mesh = Mesh(8)
        g0 = l2_project(mode_load_coefficients(3, mesh), mesh)
        out = fem_exact_in_time(g0, 0.6, 0.01)
        c = np.cos(3 * np.pi * mesh.h)
        lam = 6 / mesh.h**2 * (1 - c) / (2 + c)
        np.testing.assert_allclose(out.coeffs, g0.coeffs * mittag_leffler(0.6, lam * 0.01**0.6), rtol=1e-12)

    def test_fem_converges_in_time_against_oracle(self):
        mesh, T, alpha = Mesh(32), 0.01, 0.5
        u0 = l2_project(mode_load_coefficients(1, mesh) + mode_load_coefficients(3, mesh), mesh)
        ref = fem_exact_in_time(u0, alpha, T)
        errs = [l2_norm(FemFunction(mesh, run(SolverConfig(alpha, T, N, mesh, u0)).final.coeffs - ref.coeffs)) for N in (64, 128)]
        assert np.log2(errs[0] / errs[1]) == pytest.approx(1.0, abs=0.05)


class TestSpectralReference:
    def test_zero(self):
        ref = spectral_stochastic_reference(0.5, 0.01, FgnTrajectory(np.zeros((3, 4)), 0.0025), J=3)
        assert not np.any(ref.coeffs)

    def test_two_step_hand_recursion(self):
        alpha, T, N = 0.4, 0.01, 2
        tau = T / N
        f1, f2 = 0.37, -1.21
        out = spectral_stochastic_reference(alpha, T, FgnTrajectory(np.array([[f1, f2]]), tau), J=1)
        lam = np.pi**2
        d0 = tau ** -(1 - alpha)
        d1 = -(1 - alpha) * d0
        g1 = (f1 / tau) / (1 / tau + d0 * lam)
        g2 = (g1 / tau - lam * d1 * g1 + f2 / tau) / (1 / tau + d0 * lam)
        assert out.coeffs[0] == pytest.approx(g2, abs=1e-13, rel=1e-13)

    def test_initial_data_modes_decouple(self):
        w = bdf1_weights(0.7, 0.001, 10)
        lam = np.array([1.0, 50.0])
        both = scalar_cq_solve(lam, w, np.array([1.0, 2.0]), None)
        one = scalar_cq_solve(lam[:1], w, np.array([1.0]), None)
        assert both[0] == pytest.approx(one[0], rel=1e-15)

    def test_fem_converges_to_reference_in_space(self):
        T, N, alpha = 0.01, 64, 0.5
        traj = sample_trajectory(NoiseSpec(0.75, -1.0, 64), N, T / N, 17, 0)
        ref = spectral_stochastic_reference(alpha, T, traj, J=64)
        errs = []
        for n in (8, 16, 32, 64):
            mesh = Mesh(n)
            G = run(SolverConfig(alpha, T, N, mesh, noise=traj)).final
            errs.append(l2_distance(G, ref))
        errs = np.array(errs)
        assert np.all(np.diff(errs) < 0)
        assert np.mean(np.log2(errs[:-1] / errs[1:])) > 1.5


class TestDistance:
    def test_zero_distance_to_own_projection_of_fem_function(self):
        # a P1 hat is not in the sine span, but its distance to a 4000-mode
        # truncation must be tiny
        mesh = Mesh(4)
        f = FemFunction(mesh, np.array([0.0, 1.0, 0.0]))
        J = 4000
        j = np.arange(1, J + 1)
        c = np.sqrt(2) * np.sin(j * np.pi / 2) * (2 - 2 * np.cos(j * np.pi / 4)) / (j**2 * np.pi**2 / 4)
        assert l2_distance(f, SineExpansion(c)) < 1e-5

    def test_projection_roundtrip(self):
        g = SineExpansion(np.array([0.0, 1.0]))
        mesh = Mesh(64)
        assert l2_distance(project_expansion(g, mesh), g) < 5e-3
