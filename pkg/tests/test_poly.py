import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from srbounds.poly import (
    Polynomial,
    enumerate_monomials,
    parse_polynomial,
    total_degree,
)


def P(nvars, terms):
    return Polynomial(nvars, terms)


class TestEnumerateMonomials:
    def test_degree_one(self):
        assert enumerate_monomials(3, 1) == [
            (0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]

    def test_constant_only(self):
        assert enumerate_monomials(3, 0) == [(0, 0, 0)]

    def test_count_matches_binomial(self):
        got = enumerate_monomials(3, 12)
        assert len(got) == math.comb(15, 3) == 455
        assert len(set(got)) == len(got)

    @given(st.integers(1, 4), st.integers(0, 6))
    def test_sorted_and_prefix_stable(self, nvars, max_degree):
        seq = enumerate_monomials(nvars, max_degree)
        assert len(seq) == math.comb(max_degree + nvars, nvars)
        degrees = [total_degree(a) for a in seq]
        assert degrees == sorted(degrees)
        if max_degree > 0:
            shorter = enumerate_monomials(nvars, max_degree - 1)
            assert seq[:len(shorter)] == shorter

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            enumerate_monomials(0, 3)
        with pytest.raises(ValueError):
            enumerate_monomials(2, -1)


class TestArithmetic:
    def test_multiply_square(self):
        x = Polynomial.variable(1, 0)
        assert x * x == P(1, {(2,): 1})

    def test_multiply_identity(self):
        q = P(3, {(0, 2, 0): 1, (0, 0, 2): 1})
        assert q * Polynomial.constant(3, 1) == q

    def test_multiply_hand_expansion(self):
        # (x - x^3) * x^2 = x^3 - x^5
        p = P(1, {(1,): 1, (3,): -1})
        assert p * P(1, {(2,): 1}) == P(1, {(3,): 1, (5,): -1})

    def test_multiply_nvars_mismatch(self):
        with pytest.raises(ValueError):
            Polynomial.variable(1, 0) * Polynomial.variable(2, 0)

    def test_differentiate_power_rule(self):
        assert P(1, {(3,): 1}).differentiate(0) == P(1, {(2,): 3})

    def test_differentiate_independent_variable(self):
        assert P(2, {(0, 2): 1}).differentiate(0).is_zero()

    def test_differentiate_hand(self):
        # d/dx (xy - x^3 y) = y - 3 x^2 y
        p = P(2, {(1, 1): 1, (3, 1): -1})
        assert p.differentiate(0) == P(2, {(0, 1): 1, (2, 1): -3})

    def test_differentiate_out_of_range(self):
        with pytest.raises(ValueError):
            Polynomial.variable(2, 0).differentiate(2)

    def test_add_cancels_to_zero(self):
        x = Polynomial.variable(1, 0)
        assert (x + (-x)).is_zero()
        assert (x - x).terms == {}

    def test_scale_by_zero(self):
        assert P(1, {(2,): 1}).scale(0).is_zero()

    def test_evaluate(self):
        p = P(1, {(1,): 1, (3,): -1})
        assert p.evaluate([2]) == Fraction(-6)

    def test_degree_conventions(self):
        assert Polynomial.zero(2).degree() == -1
        assert Polynomial.constant(2, 5).degree() == 0
        assert P(2, {(2, 3): 1}).degree() == 5


# random polynomial strategy: small coefficients and exponents, 2 variables
def polys(nvars=2, max_degree=3):
    coeff = st.fractions(min_value=-4, max_value=4, max_denominator=4)
    expo = st.tuples(*[st.integers(0, max_degree)] * nvars)
    return st.dictionaries(expo, coeff, max_size=5).map(lambda t: Polynomial(nvars, t))


class TestAlgebraicProperties:
    @settings(max_examples=60)
    @given(polys(), polys(), polys())
    def test_distributivity(self, p, q, r):
        assert p * (q + r) == p * q + p * r

    @settings(max_examples=60)
    @given(polys(), polys(), st.integers(0, 1))
    def test_leibniz(self, p, q, i):
        lhs = (p * q).differentiate(i)
        rhs = p.differentiate(i) * q + p * q.differentiate(i)
        assert lhs == rhs

    @settings(max_examples=60)
    @given(polys(), polys(),
           st.tuples(st.fractions(max_denominator=8), st.fractions(max_denominator=8)))
    def test_evaluate_is_ring_homomorphism(self, p, q, point):
        assert (p * q).evaluate(point) == p.evaluate(point) * q.evaluate(point)
        assert (p + q).evaluate(point) == p.evaluate(point) + q.evaluate(point)

    @settings(max_examples=40)
    @given(polys(), polys())
    def test_product_degree(self, p, q):
        if p and q:
            assert (p * q).degree() == p.degree() + q.degree()


class TestRenderParse:
    def test_render_examples(self):
        p = P(2, {(3, 1): 1, (1, 1): -3})
        assert p.render(["x", "y"]) == "-3*x*y + x^3*y"
        assert Polynomial.zero(2).render() == "0"

    def test_parse_round_trip(self):
        text = "x - x^3 + 3/10*y"
        p = parse_polynomial(text, 3)
        assert p == P(3, {(1, 0, 0): 1, (3, 0, 0): -1, (0, 1, 0): Fraction(3, 10)})
        assert parse_polynomial(p.render(), 3) == p

    def test_parse_decimal_is_exact(self):
        p = parse_polynomial("0.3*y", 3)
        assert p.coefficient((0, 1, 0)) == Fraction(3, 10)

    def test_parse_rejects_unknown_variable(self):
        with pytest.raises(ValueError):
            parse_polynomial("w^2", 3)

    @settings(max_examples=40)
    @given(polys())
    def test_parse_render_round_trip_random(self, p):
        assert parse_polynomial(p.render(), p.nvars) == p
