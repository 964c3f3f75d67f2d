"""Constraint residuals against brute-force integrals, the reduced family's
exactness, the case expansions, and both solver modes."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergraphon import (
    ConvergenceError,
    DomainError,
    EpsilonTooLargeError,
    InfeasibleError,
    PerturbationAnsatz,
    ansatz_graphon,
    below_line_global_graphon,
    below_line_local_graphon,
    bernoulli_entropy,
    bregman_quotient_min,
    block_entropy_rate,
    case_entropy,
    constraint_residuals,
    edge_density,
    entropy_functional,
    exclusion_scan,
    g12_eliminating_k1,
    k2_quadratic_form,
    reduced_ansatz,
    solve_microcanonical,
    triangle_density,
)
from ergraphon.optimize import loglog_slope


def brute_k_integrals(a: PerturbationAnsatz):
    """Independent block-summation of the three constraint integrals."""
    lams = [a.lam, 1.0 - a.lam]
    d = [[a.g11, a.g12], [a.g12, a.g22]]
    k1 = sum(lams[i] * lams[j] * d[i][j] for i in range(2) for j in range(2))
    quad = sum(
        lams[i] * lams[j] * lams[k] * d[i][j] * d[j][k]
        for i in range(2) for j in range(2) for k in range(2)
    )
    cubic = sum(
        lams[i] * lams[j] * lams[k] * d[i][j] * d[j][k] * d[k][i]
        for i in range(2) for j in range(2) for k in range(2)
    )
    return k1, quad, cubic


def random_ansatz(rng, t1):
    while True:
        lam = rng.uniform(0.05, 0.95)
        g = rng.uniform(-t1, 1 - t1, size=3)
        a = PerturbationAnsatz(lam, *g)
        if a.in_unit_box(t1):
            return a


class TestResiduals:
    def test_zero_perturbation(self):
        r = constraint_residuals(0.4, PerturbationAnsatz(0.5, 0.0, 0.0, 0.0))
        assert (r.k1, r.k2, r.k3) == (0.0, 0.0, 0.0)

    def test_symmetric_split_closed_form(self):
        # lam = 1/2, g11 = g22 = -c, g12 = +c gives (0, 0, -c^3)
        t1, c = 0.3, 0.05
        r = constraint_residuals(t1, PerturbationAnsatz(0.5, -c, c, -c))
        assert r.k1 == pytest.approx(0.0, abs=1e-16)
        assert r.k2 == pytest.approx(0.0, abs=1e-16)
        assert r.k3 == pytest.approx(-c**3, rel=1e-12)

    def test_matches_brute_force_integrals(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            t1 = rng.uniform(0.15, 0.8)
            a = random_ansatz(rng, t1)
            r = constraint_residuals(t1, a)
            k1, quad, cubic = brute_k_integrals(a)
            assert r.k1 == pytest.approx(k1, abs=1e-14)
            assert r.k2 == pytest.approx(3 * t1 * quad, abs=1e-12)
            assert r.k3 == pytest.approx(cubic, abs=1e-14)

    def test_density_identity(self):
        # T1 = t1 + K1 and T2 = t1^3 + 3 t1^2 K1 + K2 + K3 exactly
        rng = np.random.default_rng(12)
        for _ in range(100):
            t1 = rng.uniform(0.15, 0.8)
            a = random_ansatz(rng, t1)
            r = constraint_residuals(t1, a)
            h = ansatz_graphon(t1, a)
            assert edge_density(h) == pytest.approx(t1 + r.k1, abs=1e-13)
            assert triangle_density(h) == pytest.approx(
                t1**3 + 3 * t1**2 * r.k1 + r.k2 + r.k3, abs=1e-13
            )

    def test_quadratic_form_matches_when_k1_zero(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            t1 = rng.uniform(0.15, 0.8)
            lam = rng.uniform(0.05, 0.95)
            g11 = rng.uniform(-0.2, 0.2)
            g22 = rng.uniform(-0.2, 0.2)
            g12 = g12_eliminating_k1(lam, g11, g22)
            a = PerturbationAnsatz(lam, g11, g12, g22)
            r = constraint_residuals(t1, a)
            assert r.k1 == pytest.approx(0.0, abs=1e-15)
            assert k2_quadratic_form(t1, lam, g11, g22) == pytest.approx(r.k2, abs=1e-12)

    @given(
        t1=st.floats(0.1, 0.85),
        lam=st.floats(0.05, 0.95),
        g11=st.floats(-0.1, 0.1),
        g12=st.floats(-0.1, 0.1),
        g22=st.floats(-0.1, 0.1),
    )
    @settings(max_examples=500, deadline=None)
    def test_k2_nonnegative_property(self, t1, lam, g11, g12, g22):
        r = constraint_residuals(t1, PerturbationAnsatz(lam, g11, g12, g22))
        assert r.k2 >= 0.0


class TestReducedAnsatz:
    def test_residuals_exact(self):
        rng = np.random.default_rng(21)
        done = 0
        while done < 100:
            t1 = rng.uniform(0.1, 0.85)
            eps = 10 ** rng.uniform(-6, -3)
            lam = rng.uniform(0.05, 0.95)
            try:
                a = reduced_ansatz(t1, eps, lam)
            except EpsilonTooLargeError:
                continue
            r = constraint_residuals(t1, a)
            assert abs(r.k1) < 1e-12
            assert abs(r.k2) < 1e-12
            assert r.k3 == pytest.approx(-t1**3 * eps, abs=1e-12)
            done += 1

    def test_densities_exact(self):
        rng = np.random.default_rng(22)
        done = 0
        while done < 100:
            t1 = rng.uniform(0.1, 0.85)
            eps = 10 ** rng.uniform(-6, -3)
            lam = rng.uniform(0.05, 0.95)
            try:
                a = reduced_ansatz(t1, eps, lam)
            except EpsilonTooLargeError:
                continue
            h = ansatz_graphon(t1, a)
            assert edge_density(h) == pytest.approx(t1, abs=1e-12)
            assert triangle_density(h) == pytest.approx(t1**3 * (1 - eps), abs=1e-12)
            done += 1

    def test_symmetric_lambda_is_global_graphon(self):
        t1, eps = 0.3, 1e-3
        a = reduced_ansatz(t1, eps, 0.5)
        h = ansatz_graphon(t1, a)
        g = below_line_global_graphon(t1, eps)
        assert np.allclose(h.measures, g.measures, atol=1e-15)
        assert np.allclose(np.sort(h.values.ravel()), np.sort(g.values.ravel()), atol=1e-15)

    def test_small_block_lambda_matches_local_graphon(self):
        # lam = delta reproduces the corner construction termwise to leading order
        t1, eps = 0.7, 1e-6
        y = bregman_quotient_min(t1).x
        delta = (t1 / abs(y)) * eps ** (1 / 3)
        a = reduced_ansatz(t1, eps, delta)
        g = below_line_local_graphon(t1, eps)
        u = eps ** (1 / 3)
        assert a.g11 == pytest.approx(y, rel=3 * u / abs(y))
        assert t1 + a.g11 == pytest.approx(g.values[1, 1], abs=2 * t1 * u)
        assert a.g12 == pytest.approx(g.values[0, 1] - t1, rel=1e-12)
        assert a.g22 == pytest.approx(g.values[0, 0] - t1, rel=3 * u)

    def test_eps_too_large(self):
        with pytest.raises(EpsilonTooLargeError):
            reduced_ansatz(0.8, 0.05, 0.5)  # t1 (1 + eps^(1/3)) > 1


class TestCaseEntropy:
    def test_case1_symmetric_split_kills_eps_term(self):
        t1, eps = 0.3, 1e-4
        val = case_entropy(t1, eps, "I", 0.5)
        expect = bernoulli_entropy(t1) + 0.5 * t1**2 / (2 * t1 * (1 - t1)) * eps ** (2 / 3)
        assert val == pytest.approx(expect, abs=1e-15)

    def test_case2_coefficient_is_block_rate(self):
        t1, eps, c = 0.7, 1e-5, 2.0
        val = case_entropy(t1, eps, "II", c)
        expect = bernoulli_entropy(t1) + block_entropy_rate(t1, c) * eps ** (2 / 3)
        assert val == pytest.approx(expect, abs=1e-15)

    def test_case1_tracks_exact_entropy(self):
        # difference is o(eps) at lam = 1/2, O(eps) otherwise
        t1 = 0.3
        for lam, min_slope in ((0.5, 1.25), (0.3, 0.95)):
            eps_grid = [1e-6, 1e-5, 1e-4, 1e-3]
            diffs = []
            for e in eps_grid:
                exact = entropy_functional(ansatz_graphon(t1, reduced_ansatz(t1, e, lam)))
                diffs.append(abs(exact - case_entropy(t1, e, "I", lam)))
            assert loglog_slope(eps_grid, diffs) > min_slope

    def test_case3_exceeds_winner_both_sides(self):
        eps = 1e-8
        # below 1/2 the winner is the symmetric split
        t1 = 0.3
        assert case_entropy(t1, eps, "III", 0.2) > case_entropy(t1, eps, "I", 0.5)
        # above 1/2 the winner is the shrinking block at its optimal size
        t1 = 0.7
        c_star = t1 / abs(bregman_quotient_min(t1).x)
        assert case_entropy(t1, eps, "III", 0.2) > case_entropy(t1, eps, "II", c_star)

    def test_case2_domain(self):
        with pytest.raises(DomainError):
            case_entropy(0.3, 1e-4, "II", 0.5)  # inner argument below zero

    def test_unknown_case(self):
        with pytest.raises(DomainError):
            case_entropy(0.3, 1e-4, "IV", 0.5)


class TestSolveReduced:
    def test_er_point_zero_perturbation(self):
        rep = solve_microcanonical(0.3, 0.027)
        assert rep.entropy == pytest.approx(bernoulli_entropy(0.3), abs=1e-15)
        assert rep.ansatz.g11 == 0.0
        assert rep.iterations == 0

    def test_below_half_symmetric_optimum(self):
        t1, eps = 0.3, 1e-3
        rep = solve_microcanonical(t1, t1**3 * (1 - eps))
        assert rep.ansatz.lam == pytest.approx(0.5, abs=1e-6)
        assert rep.case_label == "I"
        expect = bernoulli_entropy(t1) + t1 / (4 * (1 - t1)) * eps ** (2 / 3)
        assert rep.entropy == pytest.approx(expect, rel=1e-3)
        assert abs(rep.residuals.k1) < 1e-12

    def test_above_half_small_block_optimum(self):
        t1, eps = 0.7, 1e-6
        rep = solve_microcanonical(t1, t1**3 * (1 - eps))
        assert rep.case_label == "II"
        y = bregman_quotient_min(t1)
        delta = (t1 / abs(y.x)) * eps ** (1 / 3)
        assert rep.ansatz.lam == pytest.approx(delta, rel=0.10)
        expect = bernoulli_entropy(t1) + y.value * eps ** (2 / 3)
        assert rep.entropy == pytest.approx(expect, rel=1e-2)
        # the corner block carries a perturbation near y*
        assert rep.ansatz.g11 == pytest.approx(y.x, rel=0.05)

    def test_quotient_convergence_below(self):
        for t1 in (0.2, 0.3, 0.5):
            rep = solve_microcanonical(t1, t1**3 * (1 - 1e-6))
            q = (rep.entropy - bernoulli_entropy(t1)) / 1e-4
            assert q == pytest.approx(t1 / (4 * (1 - t1)), rel=2e-2)

    def test_quotient_convergence_above_half(self):
        for t1 in (0.6, 0.7, 0.8):
            rep = solve_microcanonical(t1, t1**3 * (1 - 1e-6))
            q = (rep.entropy - bernoulli_entropy(t1)) / 1e-4
            assert q == pytest.approx(bregman_quotient_min(t1).value, rel=2e-2)

    def test_infeasible_above_line(self):
        with pytest.raises(InfeasibleError):
            solve_microcanonical(0.3, 0.06)  # above the cube, reduced family

    def test_inadmissible_target(self):
        with pytest.raises(InfeasibleError):
            solve_microcanonical(0.3, 0.9)

    def test_report_serialization(self):
        rep = solve_microcanonical(0.3, 0.3**3 * (1 - 1e-3))
        text = rep.to_text()
        assert "entropy" in text and "case = I" in text
        row = rep.to_row()
        assert set(rep.ROW_FIELDS) == set(row)


class TestSolveExact:
    def test_agrees_with_reduced_below(self):
        for t1 in (0.3, 0.6, 0.7):
            for eps in (1e-4, 1e-3):
                t2 = t1**3 * (1 - eps)
                red = solve_microcanonical(t1, t2, mode="reduced")
                ex = solve_microcanonical(t1, t2, mode="exact_constraints")
                gap = abs(ex.entropy - red.entropy)
                assert gap <= 1e-8 + 0.2 * eps ** (4 / 3)
                assert ex.entropy <= red.entropy + 1e-12
                r = ex.residuals
                assert abs(r.k1) < 1e-10
                assert abs(r.k2 + r.k3 - (t2 - t1**3)) < 1e-10

    def test_above_line_structure(self):
        t1, eps = 0.3, 1e-4
        t2 = t1**3 + 3 * t1 * eps
        rep = solve_microcanonical(t1, t2, mode="exact_constraints")
        r = rep.residuals
        assert abs(r.k1) < 1e-10
        assert abs(r.k2 + r.k3 - (t2 - t1**3)) < 1e-10
        # vanishing block against a bulk near t1
        assert rep.ansatz.lam < 5e-3
        assert abs(rep.ansatz.g22) < 5e-3

    def test_er_point(self):
        rep = solve_microcanonical(0.4, 0.064, mode="exact_constraints")
        assert rep.entropy == pytest.approx(bernoulli_entropy(0.4), abs=1e-15)


class TestExclusionScan:
    def test_fitted_exponents(self):
        for t1 in (0.3, 0.7):
            rep = exclusion_scan(t1)
            for case in ("1a", "1b", "1c", "2", "3", "4"):
                assert rep.k2_positive[case]
                assert rep.exponents[case] <= 2 / 3 + 0.05
                assert rep.exponents[case] < 1.0  # K2 = omega(eps)

    def test_case_1a_exponent_two_thirds(self):
        rep = exclusion_scan(0.3)
        assert rep.exponents["1a"] == pytest.approx(2 / 3, abs=0.01)

    def test_case_1c_exponent_two_thirds(self):
        rep = exclusion_scan(0.7)
        assert rep.exponents["1c"] == pytest.approx(2 / 3, abs=0.05)

    def test_reduced_branch_attainable(self):
        rep = exclusion_scan(0.3)
        assert rep.reduced_attainable
        # exact entropies track the case expansions at the probed scales
        assert rep.reduced_entropy_gap < 2e-4

    def test_rows_shape(self):
        rep = exclusion_scan(0.55)
        rows = rep.rows()
        assert len(rows) == 6
        assert all(set(r) == {"t1", "case", "k2_exponent", "k2_positive"} for r in rows)

    def test_domain(self):
        with pytest.raises(DomainError):
            exclusion_scan(0.3, eps=0.5)
