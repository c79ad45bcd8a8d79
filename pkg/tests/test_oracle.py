import math

import numpy as np
import pytest

from errors import InputError, RequestError
from models.graph import Graph, UnaryOp
from models.multi_index import d
from services.oracle import (
    Jet,
    fd,
    jet_compose_univariate,
    jet_const,
    jet_derivatives,
    jet_eval,
    jet_lift,
    monomials_up_to,
)
from services.parser import parse
from tests import closed_forms


def random_jet(rng, variables, order):
    return Jet(tuple(variables), order,
               {key: float(rng.uniform(-1, 1)) for key in monomials_up_to(len(variables), order)})


def assert_jets_close(a: Jet, b: Jet, tol=1e-13):
    keys = set(a.coeffs) | set(b.coeffs)
    for key in keys:
        assert a.coefficient(key) == pytest.approx(b.coefficient(key), rel=tol, abs=tol)


class TestSeeding:

    def test_lift(self):
        jet = jet_lift("x", 3.0, ["x"], 2)
        assert jet.coeffs == {(0,): 3.0, (1,): 1.0, (2,): 0.0}
        assert jet.primal == 3.0

    def test_const(self):
        jet = jet_const(0.5, ["x", "y"], 3)
        assert jet.primal == 0.5
        assert jet.coefficient((1, 0)) == 0.0

    def test_lift_unknown_variable(self):
        with pytest.raises(InputError):
            jet_lift("z", 1.0, ["x"], 2)


class TestArithmetic:

    def test_product_structure(self):
        x = jet_lift("x", 2.0, ["x", "y"], 2)
        y = jet_lift("y", 3.0, ["x", "y"], 2)
        p = x * y
        assert p.primal == 6.0
        assert p.coefficient((1, 0)) == 3.0
        assert p.coefficient((0, 1)) == 2.0
        assert p.coefficient((1, 1)) == 1.0
        assert p.coefficient((2, 0)) == 0.0

    def test_truncation(self):
        x = jet_lift("x", 1.0, ["x"], 2)
        cube = x * x * x
        assert max(sum(key) for key in cube.coeffs) <= 2
        assert cube.coefficient((2,)) == 3.0

    def test_negation(self):
        rng = np.random.default_rng(1)
        a = random_jet(rng, ["x", "y"], 3)
        n = jet_compose_univariate(UnaryOp.NEG, a)
        for key, value in a.coeffs.items():
            assert n.coefficient(key) == -value

    def test_mismatched_jets(self):
        with pytest.raises(ValueError):
            jet_lift("x", 1.0, ["x"], 2) + jet_lift("x", 1.0, ["x"], 3)

    def test_ring_laws(self):
        rng = np.random.default_rng(2024)
        for _ in range(20):
            a, b, c = (random_jet(rng, ["x", "y", "z"], 3) for _ in range(3))
            assert_jets_close(a + b, b + a)
            assert_jets_close(a * b, b * a)
            assert_jets_close(a * (b + c), a * b + a * c)
            assert_jets_close((a * b) * c, a * (b * c))


class TestComposition:

    def test_exp_cos_second_partials(self):
        vars_ = ["x", "y"]
        x, y = jet_lift("x", 1.0, vars_, 2), jet_lift("y", 1.0, vars_, 2)
        r = jet_compose_univariate(UnaryOp.EXP, jet_compose_univariate(UnaryOp.COS, x * y))
        # f = exp(cos(u)), u = xy; f_u = -f sin u, f_uu = f (sin^2 u - cos u)
        u = 1.0
        f = math.exp(math.cos(u))
        f_u = -f * math.sin(u)
        f_uu = f * (math.sin(u) ** 2 - math.cos(u))
        assert r.derivative(d("x")) == pytest.approx(f_u, rel=1e-12)
        assert r.derivative(d("x", 2)) == pytest.approx(f_uu, rel=1e-12)
        assert r.derivative(d("x") * d("y")) == pytest.approx(f_uu + f_u, rel=1e-12)
        assert r.derivative(d("y", 2)) == pytest.approx(f_uu, rel=1e-12)

    def test_derivative_beyond_order(self):
        jet = jet_lift("x", 1.0, ["x"], 2)
        with pytest.raises(RequestError):
            jet.derivative(d("x", 3))


class TestDrivers:

    def test_black_scholes_vega(self, bs_program, bs_inputs):
        price = bs_program.output("price")
        (jet,) = jet_eval(bs_program.graph, bs_inputs, ["V"], 2, [price])
        assert jet.primal == pytest.approx(closed_forms.price(**bs_inputs), rel=1e-12)
        assert jet.coefficient((1,)) == pytest.approx(closed_forms.vega(**bs_inputs), rel=1e-9)
        assert jet.derivative(d("V", 2)) == pytest.approx(closed_forms.volga(**bs_inputs), rel=1e-9)

    def test_fd_against_jet(self, bs_program, bs_inputs):
        price = bs_program.output("price")
        exact = jet_derivatives(bs_program.graph, bs_inputs, price, [d("S")])[d("S")]
        assert fd(bs_program.graph, bs_inputs, d("S"), price, h=1e-4) == pytest.approx(exact, rel=1e-5)

    def test_fd_orders(self):
        program = parse("y = exp(x) * sin(z);")
        inputs = {"x": 0.3, "z": 0.8}
        y = program.output("y")
        expected = {
            d("x", 2): math.exp(0.3) * math.sin(0.8),
            d("x") * d("z"): math.exp(0.3) * math.cos(0.8),
            d("z", 3): -math.exp(0.3) * math.cos(0.8),
        }
        for m, value in expected.items():
            assert fd(program.graph, inputs, m, y) == pytest.approx(value, rel=1e-4)

    def test_fd_order_limit(self):
        program = parse("y = x^5;")
        with pytest.raises(RequestError):
            fd(program.graph, {"x": 1.0}, d("x", 4), program.output("y"))

    def test_constant_graph(self):
        g = Graph()
        c = g.new_constant(4.0)
        (jet,) = jet_eval(g, {}, ["x"], 3, [c])
        assert jet.primal == 4.0
        assert all(value == 0.0 for key, value in jet.coeffs.items() if sum(key))
        assert jet.derivative(d("x", 2)) == 0.0

    def test_missing_inputs(self, bs_program):
        with pytest.raises(InputError):
            jet_eval(bs_program.graph, {"S": 1.0}, ["S"], 1, [bs_program.output("price")])
