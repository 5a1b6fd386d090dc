"""Parser, printer, evaluators and symbolic differentiation."""

import math

import numpy as np
import pytest

from ars2d import expr as ex
from ars2d.errors import DomainError, ExprSyntaxError, UnknownIdentifierError

from conftest import random_expr_and_point


class TestParsePrint:
    def test_literal_examples(self):
        assert ex.evaluate(ex.parse("x*y+1"), 2, 3) == 7
        assert ex.evaluate(ex.parse("sin(2*pi*x)"), 0.25, 0) == pytest.approx(1.0)

    def test_precedence(self):
        assert ex.evaluate(ex.parse("2+3*4"), 0, 0) == 14
        assert ex.evaluate(ex.parse("(2+3)*4"), 0, 0) == 20
        assert ex.evaluate(ex.parse("2*3^2"), 0, 0) == 18
        assert ex.evaluate(ex.parse("-3^2"), 0, 0) == -9
        assert ex.evaluate(ex.parse("(-3)^2"), 0, 0) == 9
        assert ex.evaluate(ex.parse("2^-1"), 0, 0) == 0.5

    def test_left_associativity(self):
        assert ex.evaluate(ex.parse("8-3-2"), 0, 0) == 3
        assert ex.evaluate(ex.parse("16/4/2"), 0, 0) == 2

    def test_unicode_minus(self):
        assert ex.evaluate(ex.parse("−2"), 0, 0) == -2

    def test_scientific_notation(self):
        assert ex.evaluate(ex.parse("1.5e2 + 2E-1"), 0, 0) == pytest.approx(150.2)

    def test_syntax_error_offset(self):
        with pytest.raises(ExprSyntaxError) as info:
            ex.parse("x + * y")
        assert info.value.offset == 4

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError):
            ex.parse("x + z")
        with pytest.raises(UnknownIdentifierError):
            ex.parse("tan(x)")

    def test_fractional_exponent_rejected(self):
        with pytest.raises(ExprSyntaxError):
            ex.parse("x^1.5")
        with pytest.raises(ExprSyntaxError):
            ex.parse("x^y")

    def test_print_parses_back(self, rng):
        for _ in range(200):
            e, _, _ = random_expr_and_point(rng, depth=3)
            printed = ex.to_string(e)
            again = ex.to_string(ex.parse(printed))
            assert again == printed

    def test_round_trip_preserves_value(self, rng):
        for _ in range(100):
            e, x, y = random_expr_and_point(rng, depth=3)
            v1 = ex.evaluate(e, x, y)
            v2 = ex.evaluate(ex.parse(ex.to_string(e)), x, y)
            assert v2 == pytest.approx(v1, rel=1e-12, abs=1e-12)


class TestEvaluate:
    def test_division_by_zero_reports_subexpression(self):
        with pytest.raises(DomainError) as info:
            ex.evaluate(ex.parse("1/x"), 0, 0)
        assert "x" in str(info.value)

    def test_sqrt_negative(self):
        with pytest.raises(DomainError):
            ex.evaluate(ex.parse("sqrt(x)"), -1, 0)

    def test_zero_to_negative_power(self):
        with pytest.raises(DomainError):
            ex.evaluate(ex.parse("x^-1"), 0, 0)

    def test_compiled_matches_evaluate(self, rng):
        for _ in range(150):
            e, x, y = random_expr_and_point(rng, depth=3)
            f = ex.compile_scalar(e)
            assert f(x, y) == pytest.approx(ex.evaluate(e, x, y), rel=1e-12, abs=1e-12)

    def test_grid_matches_scalar(self, rng):
        for _ in range(40):
            e, x, y = random_expr_and_point(rng, depth=2)
            xs = np.array([x, x + 0.01])
            ys = np.array([y, y - 0.01])
            g = ex.compile_grid(e)(xs, ys)
            f = ex.compile_scalar(e)
            assert g.shape == xs.shape
            for k in range(2):
                got = float(g[k])
                want = f(float(xs[k]), float(ys[k]))
                if math.isfinite(want):
                    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_grid_constant_broadcasts(self):
        g = ex.compile_grid(ex.parse("2*pi"))(np.zeros((3, 4)), np.zeros((3, 4)))
        assert g.shape == (3, 4)
        assert np.allclose(g, 2 * math.pi)


class TestDifferentiate:
    def test_examples(self):
        d = ex.differentiate(ex.parse("x*y"), "x")
        assert ex.evaluate(d, 2.0, 5.0) == 5.0
        d = ex.differentiate(ex.parse("sin(2*pi*x)"), "x")
        assert ex.evaluate(d, 0.0, 0.0) == pytest.approx(2 * math.pi)
        d = ex.differentiate(ex.parse("1"), "y")
        assert ex.evaluate(d, 0.3, 0.7) == 0.0

    def test_chain_and_quotient(self):
        e = ex.parse("sin(x^2)/(1+y^2)")
        dx = ex.differentiate(e, "x")
        x, y = 0.7, -0.4
        want = 2 * x * math.cos(x * x) / (1 + y * y)
        assert ex.evaluate(dx, x, y) == pytest.approx(want, rel=1e-12)

    def test_atan_and_sqrt_rules(self):
        x, y = 1.3, 0.2
        d = ex.differentiate(ex.parse("atan(x)"), "x")
        assert ex.evaluate(d, x, y) == pytest.approx(1 / (1 + x * x), rel=1e-12)
        d = ex.differentiate(ex.parse("sqrt(x)"), "x")
        assert ex.evaluate(d, x, y) == pytest.approx(0.5 / math.sqrt(x), rel=1e-12)

    def test_negative_power_rule(self):
        d = ex.differentiate(ex.parse("x^-2"), "x")
        x = 1.7
        assert ex.evaluate(d, x, 0.0) == pytest.approx(-2 * x ** -3, rel=1e-12)

    def test_against_finite_differences(self, rng):
        step = 1e-5
        for _ in range(300):
            e, x, y = random_expr_and_point(rng, depth=3)
            for var in ("x", "y"):
                d = ex.differentiate(e, var)
                try:
                    got = ex.evaluate(d, x, y)
                    if var == "x":
                        fd = (ex.evaluate(e, x + step, y)
                              - ex.evaluate(e, x - step, y)) / (2 * step)
                    else:
                        fd = (ex.evaluate(e, x, y + step)
                              - ex.evaluate(e, x, y - step)) / (2 * step)
                except DomainError:
                    continue
                if not (math.isfinite(got) and math.isfinite(fd)):
                    continue
                if abs(fd) > 1e3:
                    continue
                assert abs(got - fd) <= 1e-5 * (1 + abs(fd))
