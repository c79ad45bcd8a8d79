"""Brute-force referees for the engine: forward jets and finite differences.

Jets carry every monomial up to the truncation order with no pruning, so
the only code they share with the backward engine is the univariate
coefficient table.
"""
from dataclasses import dataclass
from itertools import combinations_with_replacement, product as cartesian
from math import prod
from typing import Mapping

from errors import DomainError, InputError, RequestError
from models.graph import BinaryOp, Graph, NodeKind, NodeRef, UnaryOp
from models.multi_index import MultiIndex
from services.calc_tree import primal_values
from services.taylor_kernels import READS_OUTPUT, primal_unary, univariate_coeffs

Exponents = tuple[int, ...]

FD_STEPS = {1: 1e-4, 2: 1e-3, 3: 5e-3}

# weights of central differences for derivative orders 1..3, as (offset, weight)
STENCILS = {
    1: ((1, 0.5), (-1, -0.5)),
    2: ((1, 1.0), (0, -2.0), (-1, 1.0)),
    3: ((2, 0.5), (1, -1.0), (-1, 1.0), (-2, -0.5)),
}


@dataclass(frozen=True)
class Jet:
    """Truncated multivariate Taylor polynomial over `variables`, degree <= max_order."""
    variables: tuple[str, ...]
    max_order: int
    coeffs: dict[Exponents, float]

    @property
    def zero_key(self) -> Exponents:
        return (0,) * len(self.variables)

    @property
    def primal(self) -> float:
        return self.coeffs.get(self.zero_key, 0.0)

    def coefficient(self, exponents: Exponents) -> float:
        return self.coeffs.get(exponents, 0.0)

    def derivative(self, m: MultiIndex) -> float:
        unknown = m.support - set(self.variables)
        if unknown:
            raise RequestError(f"Jet does not carry variables {sorted(unknown)}")
        key = tuple(m.get(name) for name in self.variables)
        if sum(key) > self.max_order:
            raise RequestError(f"{m} exceeds jet order {self.max_order}")
        return self.coefficient(key) * m.factorial_weight

    def _check(self, other: "Jet"):
        if self.variables != other.variables or self.max_order != other.max_order:
            raise ValueError("Jets over different variables or orders cannot be combined")

    def _like(self, coeffs: dict[Exponents, float]) -> "Jet":
        return Jet(self.variables, self.max_order, coeffs)

    def __add__(self, other: "Jet") -> "Jet":
        return jet_add(self, other)

    def __sub__(self, other: "Jet") -> "Jet":
        return jet_sub(self, other)

    def __mul__(self, other: "Jet") -> "Jet":
        return jet_mul(self, other)

    def __neg__(self) -> "Jet":
        return self._like({k: -v for k, v in self.coeffs.items()})

    def scale(self, factor: float) -> "Jet":
        return self._like({k: factor * v for k, v in self.coeffs.items()})


def monomials_up_to(n: int, max_order: int) -> list[Exponents]:
    keys = []
    for total in range(max_order + 1):
        for picks in combinations_with_replacement(range(n), total):
            key = [0] * n
            for index in picks:
                key[index] += 1
            keys.append(tuple(key))
    return keys


def jet_const(c: float, variables, max_order: int) -> Jet:
    variables = tuple(variables)
    return Jet(variables, max_order, {(0,) * len(variables): float(c)})


def jet_lift(variable: str, value: float, variables, max_order: int) -> Jet:
    variables = tuple(variables)
    if variable not in variables:
        raise InputError(f"{variable!r} is not one of the jet variables {list(variables)}")
    coeffs = {key: 0.0 for key in monomials_up_to(len(variables), max_order)}
    coeffs[(0,) * len(variables)] = float(value)
    if max_order >= 1:
        unit = [0] * len(variables)
        unit[variables.index(variable)] = 1
        coeffs[tuple(unit)] = 1.0
    return Jet(variables, max_order, coeffs)


def jet_add(a: Jet, b: Jet) -> Jet:
    a._check(b)
    coeffs = dict(a.coeffs)
    for key, value in b.coeffs.items():
        coeffs[key] = coeffs.get(key, 0.0) + value
    return a._like(coeffs)


def jet_sub(a: Jet, b: Jet) -> Jet:
    return jet_add(a, -b)


def jet_mul(a: Jet, b: Jet) -> Jet:
    a._check(b)
    by_degree: dict[int, list[tuple[Exponents, float]]] = {}
    for kb, vb in b.coeffs.items():
        by_degree.setdefault(sum(kb), []).append((kb, vb))
    coeffs: dict[Exponents, float] = {}
    for ka, va in a.coeffs.items():
        da = sum(ka)
        for db in range(a.max_order - da + 1):
            for kb, vb in by_degree.get(db, ()):
                key = tuple(x + y for x, y in zip(ka, kb))
                coeffs[key] = coeffs.get(key, 0.0) + va * vb
    return a._like(coeffs)


def jet_compose_univariate(op: UnaryOp, a: Jet, exponent: int | None = None) -> Jet:
    """f(a) = f(a0) + sum_k c_k (a - a0)^k, truncated at the jet order."""
    x0 = a.primal
    value = primal_unary(op, x0, exponent)
    result = jet_const(value, a.variables, a.max_order)
    if a.max_order == 0:
        return result
    point = value if op in READS_OUTPUT else x0
    coeffs = univariate_coeffs(op, point, a.max_order, exponent)
    delta = a - jet_const(x0, a.variables, a.max_order)
    power = delta
    for k, c in enumerate(coeffs, start=1):
        if k > 1:
            power = power * delta
        result = result + power.scale(float(c))
    return result


def jet_eval(graph: Graph, inputs: Mapping[str, float], active, max_order: int,
             roots: list[NodeRef]) -> list[Jet]:
    """Run the graph forward in jet arithmetic; inactive variables enter as constants."""
    active = tuple(active)
    missing = [name for name in graph.variables if name not in inputs
               and any(name in graph.input_support(root) for root in roots)]
    if missing:
        raise InputError(f"Missing input values for: {', '.join(missing)}")
    jets: dict[int, Jet] = {}
    for ref in graph.topo_order(list(roots)):
        node = graph.nodes[ref.id]
        try:
            match node.kind:
                case NodeKind.VAR:
                    value = inputs[node.name]
                    jets[ref.id] = (jet_lift(node.name, value, active, max_order) if node.name in active
                                    else jet_const(value, active, max_order))
                case NodeKind.CONST:
                    jets[ref.id] = jet_const(node.value, active, max_order)
                case NodeKind.UNARY:
                    jets[ref.id] = jet_compose_univariate(node.op, jets[node.children[0]], node.exponent)
                case NodeKind.BINARY:
                    left, right = (jets[child] for child in node.children)
                    match node.op:
                        case BinaryOp.ADD:
                            jets[ref.id] = left + right
                        case BinaryOp.SUB:
                            jets[ref.id] = left - right
                        case BinaryOp.MUL:
                            jets[ref.id] = left * right
        except DomainError as e:
            where = graph.describe(ref)
            raise DomainError(f"Jet evaluation failed at node {where}: {e}", node=where)
    return [jets[root.id] for root in roots]


def fd(graph: Graph, inputs: Mapping[str, float], m: MultiIndex, root: NodeRef,
       h: float | None = None) -> float:
    """Nested central differences for |M| <= 3.

    Each variable steps by h * max(1, |x|); h defaults to 1e-4, 1e-3 and
    5e-3 for total orders 1, 2 and 3.
    """
    if m.total > 3 or any(k > 3 for _, k in m.orders):
        raise RequestError(f"Finite differences support total order <= 3, got {m}")
    base = FD_STEPS[m.total] if h is None else h
    steps = {name: base * max(1.0, abs(inputs[name])) for name, _ in m.orders}

    total = 0.0
    for picks in cartesian(*(STENCILS[k] for _, k in m.orders)):
        shifted = dict(inputs)
        weight = 1.0
        for (name, _), (offset, w) in zip(m.orders, picks):
            shifted[name] = inputs[name] + offset * steps[name]
            weight *= w
        (value,) = primal_values(graph, shifted, [root])
        total += weight * value
    return total / prod(steps[name] ** k for name, k in m.orders)


def jet_derivatives(graph: Graph, inputs: Mapping[str, float], root: NodeRef,
                    requests) -> dict[MultiIndex, float]:
    """Every requested derivative of root, read off one forward jet."""
    requests = list(requests)
    active = sorted(set().union(*(m.support for m in requests)))
    order = max(m.total for m in requests)
    (jet,) = jet_eval(graph, inputs, active, order, [root])
    return {m: jet.derivative(m) for m in requests}


__all__ = [
    "Jet", "jet_const", "jet_lift", "jet_add", "jet_sub", "jet_mul",
    "jet_compose_univariate", "jet_eval", "fd", "jet_derivatives",
]
