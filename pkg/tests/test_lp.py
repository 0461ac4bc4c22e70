import numpy as np
import pytest

from christoffel import convexity, harmonics, lp
from christoffel.errors import InvalidParameter, NonConvergence

from conftest import constant_field, harmonic_field, random_positive_field


class TestSolveLp:
    def test_constant_balance(self, grid24):
        sol = lp.solve_lp(constant_field(grid24, 2.0, L_max=12), 4.0)
        assert np.max(np.abs(sol.u.values - 1.0)) < 1e-12
        assert sol.converged

    def test_constant_scaled(self, grid24):
        # 2u = 8 u^3 has the constant solution u = 1/2
        sol = lp.solve_lp(constant_field(grid24, 8.0, L_max=12), 4.0)
        assert np.max(np.abs(sol.u.values - 0.5)) < 1e-12

    def test_perturbed_with_refined_grid_oracle(self, grid24):
        f = harmonic_field(grid24, 2.0, {(2, 0): 0.1}, L_max=12)
        sol = lp.solve_lp(f, 4.0, tol=1e-9)
        assert sol.residual_inf <= 1e-9
        assert lp.residual_on_refined_grid(sol, f) <= 1e-8
        assert sol.degree1_magnitude <= 1e-8

    def test_scaling_covariance(self, grid24):
        f = harmonic_field(grid24, 2.0, {(2, 1): 0.15}, L_max=12)
        sol = lp.solve_lp(f, 4.0, tol=1e-10)
        s = 2.5
        fs = harmonics.SphericalField(
            grid=grid24, values=s * f.values,
            coeffs=harmonics.HarmonicCoeffs(L_max=12, c=s * f.coeffs.c),
        )
        sol_s = lp.solve_lp(fs, 4.0, tol=1e-10)
        assert np.max(np.abs(sol_s.u.values - s ** (-0.5) * sol.u.values)) < 1e-8

    def test_positivity_of_converged(self, grid24):
        rng = np.random.default_rng(31)
        for _ in range(3):
            f = random_positive_field(grid24, rng, amp=0.2, l_max_content=3, L_max=16)
            sol = lp.solve_lp(f, 3.5, tol=1e-9)
            assert np.min(sol.u.values) > 0

    def test_p_gate(self, grid24):
        f = constant_field(grid24, 2.0, L_max=12)
        with pytest.raises(InvalidParameter):
            lp.solve_lp(f, 2.0)
        with pytest.raises(InvalidParameter):
            lp.solve_lp(f, 1.5)

    def test_nonconvergence_carries_best(self, grid24):
        f = harmonic_field(grid24, 2.0, {(2, 0): 0.3}, L_max=12)
        with pytest.raises(NonConvergence) as exc:
            lp.solve_lp(f, 4.0, tol=1e-13, max_iter=2)
        best = exc.value.best
        assert best is not None and not best.converged
        assert best.residual_inf > 0

    def test_insensitive_to_initial_guess(self, grid24):
        f = harmonic_field(grid24, 2.0, {(2, 0): 0.1}, L_max=16)
        sols = [
            lp.solve_lp(f, 4.0, tol=1e-11, initial=g).u.values
            for g in (0.8, 0.9, 1.0, 1.3, 2.0)
        ]
        for s in sols[1:]:
            assert np.max(np.abs(s - sols[0])) < 1e-9

    def test_zero_collapse_guarded(self, grid24):
        # u = 0 solves the equation; a start below the Newton separatrix must
        # be rejected rather than returned as a "solution"
        from christoffel.errors import PositivityLost

        f = harmonic_field(grid24, 2.0, {(2, 0): 0.1}, L_max=16)
        with pytest.raises(PositivityLost):
            lp.solve_lp(f, 4.0, tol=1e-11, initial=0.4)


class TestEigen:
    def test_constant_unit(self, grid24):
        sol = lp.solve_lp_eigen(constant_field(grid24, 1.0, L_max=12))
        assert abs(sol.lam - 2.0) < 1e-12
        assert np.max(np.abs(sol.u.values - 1.0)) < 1e-12

    def test_constant_general(self, grid24):
        sol = lp.solve_lp_eigen(constant_field(grid24, 5.0, L_max=12))
        assert abs(sol.lam - 0.4) < 1e-12
        assert np.max(np.abs(sol.u.values - 1.0)) < 1e-12

    def test_perturbed_bounds_and_normalization(self, grid24):
        f = harmonic_field(grid24, 1.0, {(2, 0): 0.05}, L_max=12)
        sol = lp.solve_lp_eigen(f, tol=1e-10)
        assert sol.residual_inf <= 1e-10
        assert np.min(sol.u.values) > 0
        assert abs(np.max(sol.u.values) - 1.0) < 1e-12
        assert 2.0 / np.max(f.values) - 1e-9 <= sol.lam <= 2.0 / np.min(f.values) + 1e-9

    def test_lambda_scaling(self, grid24):
        f = harmonic_field(grid24, 1.0, {(2, 1): 0.04}, L_max=12)
        sol = lp.solve_lp_eigen(f, tol=1e-11)
        s = 3.0
        fs = harmonics.SphericalField(
            grid=grid24, values=s * f.values,
            coeffs=harmonics.HarmonicCoeffs(L_max=12, c=s * f.coeffs.c),
        )
        sol_s = lp.solve_lp_eigen(fs, tol=1e-11)
        assert abs(sol_s.lam - sol.lam / s) < 1e-9

    def test_dilation_freedom(self, grid24):
        # u and 2u solve the same problem; normalization picks max u = 1
        f = harmonic_field(grid24, 1.0, {(2, 0): 0.05}, L_max=12)
        a = lp.solve_lp_eigen(f, tol=1e-10)
        b = lp.solve_lp_eigen(f, tol=1e-10, initial=2.0 * a.u.coeffs.c)
        assert abs(a.lam - b.lam) < 1e-9
        assert np.max(np.abs(a.u.values - b.u.values)) < 1e-8

    def test_lambda_bounds_on_seeded_fields(self, grid24):
        rng = np.random.default_rng(33)
        for _ in range(5):
            f = random_positive_field(grid24, rng, base=1.0, amp=0.1, l_max_content=3, L_max=16)
            sol = lp.solve_lp_eigen(f, tol=1e-9)
            assert 2.0 / np.max(f.values) - 1e-9 <= sol.lam <= 2.0 / np.min(f.values) + 1e-9


class TestGradientBound:
    def test_constant_equality(self, grid24):
        f = constant_field(grid24, 2.0, L_max=12)
        sol = lp.solve_lp(f, 4.0)
        holds, lhs, rhs = lp.check_lemma41(sol, f)
        assert holds and lhs < 1e-10 and rhs < 1e-10

    def test_unconditional_on_suite(self, grid24):
        rng = np.random.default_rng(35)
        for p in (3.0, 4.0):
            for _ in range(3):
                f = random_positive_field(grid24, rng, amp=0.15, l_max_content=3, L_max=16)
                sol = lp.solve_lp(f, p, tol=1e-9)
                holds, lhs, rhs = lp.check_lemma41(sol, f)
                assert holds, (lhs, rhs)

    def test_eigen_case_lambda_invariant(self, grid24):
        f = harmonic_field(grid24, 1.0, {(2, 0): 0.05}, L_max=12)
        sol = lp.solve_lp_eigen(f, tol=1e-9)
        holds, lhs, rhs = lp.check_lemma41(sol, f)
        assert holds


class TestT41Condition:
    def test_constant_holds(self, grid24):
        f = constant_field(grid24, 2.0, L_max=12)
        holds, lhs, rhs = lp.check_T41_cond(f, 4.0)
        assert holds and lhs == 0.0

    def test_monotone_in_gradient(self, grid24):
        lhs_vals = []
        for eps in (0.005, 0.01, 0.02):
            f = harmonic_field(grid24, 2.0, {(2, 0): eps}, L_max=12)
            _, lhs, _ = lp.check_T41_cond(f, 4.0)
            lhs_vals.append(lhs)
        assert lhs_vals[0] < lhs_vals[1] < lhs_vals[2]

    def test_holds_implies_convex_solution(self, grid24):
        f = harmonic_field(grid24, 2.0, {(2, 0): 0.012}, L_max=12)
        holds, lhs, rhs = lp.check_T41_cond(f, 4.0)
        assert holds, (lhs, rhs)
        sol = lp.solve_lp(f, 4.0, tol=1e-10)
        assert convexity.hessian_min(sol.u)[0] >= -1e-6

    def test_p_gate(self, grid24):
        with pytest.raises(InvalidParameter):
            lp.check_T41_cond(constant_field(grid24, 2.0, L_max=12), 1.5)
