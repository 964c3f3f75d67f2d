"""Entropy calculus: closed forms against independent numerical oracles.

Expected values marked "frozen" were computed once with 50-digit sympy
arithmetic from the defining formulas and pasted in as literals.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergraphon import (
    DomainError,
    bernoulli_entropy,
    bernoulli_entropy_deriv,
    block_entropy_rate,
    bregman_quotient,
    bregman_quotient_limit,
    bregman_quotient_min,
    entropy_taylor_gap,
    entropy_taylor_gap_series,
)

# frozen: -log(2)/2 and (3/10 log(3/10) + 7/10 log(7/10))/2
I_HALF = -0.34657359027997264
I_03 = -0.30543215102744679


def central_difference(u: float, k: int, h: float | None = None) -> float:
    """Richardson-extrapolated central difference of the entropy, order k."""

    def stencil(h):
        if k == 1:
            return (bernoulli_entropy(u + h) - bernoulli_entropy(u - h)) / (2 * h)
        if k == 2:
            return (
                bernoulli_entropy(u + h)
                - 2 * bernoulli_entropy(u)
                + bernoulli_entropy(u - h)
            ) / h**2
        return (
            bernoulli_entropy(u + 2 * h)
            - 2 * bernoulli_entropy(u + h)
            + 2 * bernoulli_entropy(u - h)
            - bernoulli_entropy(u - 2 * h)
        ) / (2 * h**3)

    if h is None:
        h = {1: 1e-6, 2: 4e-4, 3: 4e-3}[k]
    # Richardson steps remove the O(h^2) (and O(h^4)) truncation terms
    rich1 = lambda h: (4.0 * stencil(h / 2) - stencil(h)) / 3.0
    if k < 3:
        return rich1(h)
    return (16.0 * rich1(h / 2) - rich1(h)) / 15.0


class TestBernoulliEntropy:
    def test_endpoints_exact_zero(self):
        assert bernoulli_entropy(0.0) == 0.0
        assert bernoulli_entropy(1.0) == 0.0

    def test_half(self):
        assert bernoulli_entropy(0.5) == pytest.approx(I_HALF, rel=1e-15)

    def test_point_three(self):
        assert bernoulli_entropy(0.3) == pytest.approx(I_03, rel=1e-14)

    def test_symmetry_and_sign(self):
        for u in np.linspace(0.01, 0.99, 99):
            assert bernoulli_entropy(u) == pytest.approx(bernoulli_entropy(1 - u), abs=1e-15)
            assert bernoulli_entropy(u) < 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            bernoulli_entropy(-0.1)
        with pytest.raises(DomainError):
            bernoulli_entropy(1.5)


class TestDerivatives:
    def test_first_derivative_value(self):
        # frozen: log(3/7)/2
        assert bernoulli_entropy_deriv(0.3, 1) == pytest.approx(-0.42364893019360184, rel=1e-14)

    def test_second_derivative_value(self):
        assert bernoulli_entropy_deriv(0.3, 2) == pytest.approx(1 / 0.42, rel=1e-14)

    def test_odd_derivative_vanishes_at_half(self):
        assert bernoulli_entropy_deriv(0.5, 3) == 0.0

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_finite_difference_agreement(self, k):
        for u in np.arange(0.05, 0.951, 0.05):
            fd = central_difference(float(u), k)
            exact = bernoulli_entropy_deriv(float(u), k)
            assert fd == pytest.approx(exact, rel=1e-6, abs=1e-9)

    def test_convexity_on_grid(self):
        for u in np.linspace(1e-3, 1 - 1e-3, 1000):
            assert bernoulli_entropy_deriv(float(u), 2) > 0.0

    def test_sign_pattern_high_orders(self):
        grid = np.arange(0.05, 0.951, 0.05)
        for k in (4, 6, 8):
            assert all(bernoulli_entropy_deriv(float(u), k) > 0 for u in grid)
        for k in (3, 5, 7):
            for u in grid:
                v = bernoulli_entropy_deriv(float(u), k)
                if u < 0.5:
                    assert v < 0
                elif u > 0.5:
                    assert v > 0

    def test_domain(self):
        with pytest.raises(DomainError):
            bernoulli_entropy_deriv(0.0, 1)
        with pytest.raises(DomainError):
            bernoulli_entropy_deriv(1.0, 2)
        with pytest.raises(DomainError):
            bernoulli_entropy_deriv(0.3, 0)
        with pytest.raises(DomainError):
            bernoulli_entropy_deriv(0.3, 171)


class TestBregmanQuotient:
    def test_limit_matches_small_x(self):
        # |x| cannot be pushed arbitrarily small (the gap cancels to ~x^2),
        # so check the limit through a modest sequence instead
        for t1 in (0.3, 0.5, 0.7):
            lim = bregman_quotient_limit(t1)
            assert bregman_quotient(t1, -1e-3) == pytest.approx(lim, rel=2e-2)
            assert bregman_quotient(t1, -1e-4) == pytest.approx(lim, rel=2e-3)
            assert lim == pytest.approx(t1 / (4 * (1 - t1)), rel=1e-15)

    def test_value_at_deep_x(self):
        # frozen: direct 30-digit evaluation of the definition at (0.7, -0.35)
        assert bregman_quotient(0.7, -0.35) == pytest.approx(0.51994382831156454, rel=1e-13)

    def test_positive_on_grid(self):
        for t1 in np.arange(0.1, 0.91, 0.1):
            for x in np.linspace(-t1 + 1e-6, -1e-6, 200):
                assert bregman_quotient(float(t1), float(x)) > 0.0

    def test_exceeds_curvature_bound_below_half(self):
        bound = 0.3 / (4 * 0.7)
        for x in np.linspace(-0.3 + 1e-6, -1e-6, 500):
            assert bregman_quotient(0.3, float(x)) > bound

    def test_domain(self):
        with pytest.raises(DomainError):
            bregman_quotient(0.7, 0.0)
        with pytest.raises(DomainError):
            bregman_quotient(0.7, -0.8)

    @given(
        t1=st.floats(0.05, 0.95),
        frac=st.floats(1e-6, 1 - 1e-6),
    )
    @settings(max_examples=200, deadline=None)
    def test_positivity_property(self, t1, frac):
        x = -t1 * frac
        assert bregman_quotient(t1, x) > 0.0


class TestBregmanQuotientMin:
    def test_t1_07_matches_grid_scan(self):
        res = bregman_quotient_min(0.7)
        xs = np.arange(-0.7 + 1e-5, -1e-5, 1e-5)
        vals = [bregman_quotient(0.7, float(x)) for x in xs]
        assert res.value <= min(vals) + 1e-12
        assert res.value < 0.7 / (4 * 0.3)

    def test_closed_form_minimizer(self):
        # the stationarity condition is solved by x = 1 - 2 t1, where the
        # quotient collapses to t1^2 I'(t1) / (2 t1 - 1)
        for t1 in (0.6, 0.7, 0.8):
            res = bregman_quotient_min(t1)
            assert res.x == pytest.approx(1 - 2 * t1, abs=1e-7)
            closed = t1 * t1 * bernoulli_entropy_deriv(t1, 1) / (2 * t1 - 1)
            assert res.value == pytest.approx(closed, rel=1e-12)

    def test_interior_minimum_just_above_half(self):
        res = bregman_quotient_min(0.51)
        assert -0.51 < res.x < 0.0
        assert res.value < bregman_quotient_limit(0.51)

    def test_rejects_at_most_half(self):
        with pytest.raises(DomainError):
            bregman_quotient_min(0.4)
        with pytest.raises(DomainError):
            bregman_quotient_min(0.5)


class TestBlockEntropyRate:
    def test_matches_quotient_under_substitution(self):
        # block_entropy_rate(t1, c) == bregman_quotient(t1, -t1/c) exactly
        for t1 in (0.3, 0.5, 0.7):
            for c in (1.2, 2.0, 5.0, 25.0):
                lhs = block_entropy_rate(t1, c)
                rhs = bregman_quotient(t1, -t1 / c)
                assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    def test_lower_bound_below_half(self):
        bound = 0.5 * 0.09 * bernoulli_entropy_deriv(0.3, 2)
        assert bound == pytest.approx(0.3 / (4 * 0.7), rel=1e-12)
        for c in np.concatenate([np.linspace(1.0, 10, 200), np.geomspace(10, 1e4, 50)]):
            assert block_entropy_rate(0.3, float(c)) > bound

    def test_dip_above_half(self):
        bound = 0.5 * 0.49 * bernoulli_entropy_deriv(0.7, 2)
        vals = [block_entropy_rate(0.7, float(c)) for c in np.linspace(1.01, 6, 400)]
        assert min(vals) < bound

    def test_at_c_equal_one(self):
        for t1 in (0.3, 0.7):
            expect = -bernoulli_entropy(t1) + t1 * bernoulli_entropy_deriv(t1, 1)
            assert block_entropy_rate(t1, 1.0) == pytest.approx(expect, rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            block_entropy_rate(0.3, 0.5)  # inner argument negative


class TestTaylorGap:
    def test_substitution_identity(self):
        # block_entropy_rate(t1, t1/y) - t1^2 I''(t1)/2 == (t1/y)^2 * gap(t1, y)
        for t1 in (0.3, 0.5, 0.7):
            for y in np.linspace(0.05 * t1, 0.9 * t1, 9):
                y = float(y)
                lhs = block_entropy_rate(t1, t1 / y) - 0.5 * t1 * t1 * bernoulli_entropy_deriv(t1, 2)
                rhs = (t1 / y) ** 2 * entropy_taylor_gap(t1, y)
                assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_series_converges(self):
        # inside the radius min(t1, 1-t1) the tail is geometric; 120 terms
        # give 1e-8 everywhere on y in (0, 0.9 t1) for t1 <= 1/2
        for t1 in (0.2, 0.3, 0.4, 0.5):
            for y in np.linspace(0.05 * t1, 0.9 * t1, 12):
                y = float(y)
                target = entropy_taylor_gap(t1, y)
                partial = entropy_taylor_gap_series(t1, y, 120)
                assert partial == pytest.approx(target, abs=1e-8)

    def test_forty_terms_on_inner_range(self):
        for t1 in (0.3, 0.5):
            for y in np.linspace(0.05 * t1, 0.6 * t1, 8):
                y = float(y)
                assert entropy_taylor_gap_series(t1, y, 40) == pytest.approx(
                    entropy_taylor_gap(t1, y), abs=1e-8
                )

    def test_partial_sums_settle(self):
        t1, y = 0.4, 0.3
        s80 = entropy_taylor_gap_series(t1, y, 80)
        s120 = entropy_taylor_gap_series(t1, y, 120)
        assert abs(s120 - s80) < 1e-10
