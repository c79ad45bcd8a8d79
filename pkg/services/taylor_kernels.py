"""Local truncated Taylor expansions of the primitive operators.

Univariate kernels return c_1..c_N with c_k = f^(k)(x) / k!, the
coefficients of the perturbation series eps_out = sum c_k eps_in^k (no
constant term). Bivariate nodes have exact finite expansions.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from errors import DomainError, RequestError
from models.graph import BinaryOp, Graph, NodeKind, NodeRef, UnaryOp
from models.monomial import Monomial, eps, monomial_mul
from services.settings import get_order_cap

TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)

# kernels evaluated from the node's own value; every other unary reads its input
READS_OUTPUT = frozenset({UnaryOp.EXP, UnaryOp.TAN, UnaryOp.SQRT})
LINEAR_UNARY = frozenset({UnaryOp.NEG})


def primal_unary(op: UnaryOp, x: float, exponent: int | None = None) -> float:
    try:
        match op:
            case UnaryOp.NEG:
                return -x
            case UnaryOp.EXP:
                return math.exp(x)
            case UnaryOp.LOG:
                return math.log(x)
            case UnaryOp.SQRT:
                return math.sqrt(x)
            case UnaryOp.SIN:
                return math.sin(x)
            case UnaryOp.COS:
                return math.cos(x)
            case UnaryOp.TAN:
                return math.tan(x)
            case UnaryOp.ERFC:
                return math.erfc(x)
            case UnaryOp.RECIP:
                return 1.0 / x
            case UnaryOp.POW:
                return float(x ** exponent)
    except (ValueError, ZeroDivisionError, OverflowError) as e:
        raise DomainError(f"{op.value} undefined at {x!r}: {e}")
    raise DomainError(f"Unsupported operator {op!r}")


def primal_binary(op: BinaryOp, a: float, b: float) -> float:
    match op:
        case BinaryOp.ADD:
            return a + b
        case BinaryOp.SUB:
            return a - b
        case BinaryOp.MUL:
            return a * b
    raise DomainError(f"Unsupported operator {op!r}")


@lru_cache(maxsize=None)
def erfc_polynomials(n: int) -> tuple[tuple[int, ...], ...]:
    """Integer coefficient lists (ascending powers) of p_0..p_n.

    p_0 = 1, p_{j+1} = p_j' - 2x p_j, so that
    erfc^(k)(x) = -(2/sqrt(pi)) p_{k-1}(x) exp(-x^2).
    """
    polys = [(1,)]
    for _ in range(n):
        p = polys[-1]
        nxt = [0] * (len(p) + 1)
        for power, coeff in enumerate(p):
            if power:
                nxt[power - 1] += power * coeff
            nxt[power + 1] -= 2 * coeff
        polys.append(tuple(nxt))
    return tuple(polys)


def _horner(coeffs: tuple[int, ...], x: float) -> float:
    acc = 0.0
    for coeff in reversed(coeffs):
        acc = acc * x + coeff
    return acc


def _check_order(order: int):
    cap = get_order_cap()
    if order < 1 or order > cap:
        raise RequestError(f"Expansion order must lie in 1..{cap}, got {order}")


def univariate_coeffs(op: UnaryOp, stored: float, order: int, exponent: int | None = None) -> np.ndarray:
    """Taylor coefficients c_1..c_order of op around a point.

    `stored` is the node's output for exp, tan and sqrt, and its input
    for every other operator.
    """
    _check_order(order)
    c = np.zeros(order)
    ks = range(1, order + 1)

    match op:
        case UnaryOp.NEG:
            c[0] = -1.0
        case UnaryOp.EXP:
            for k in ks:
                c[k - 1] = stored / math.factorial(k)
        case UnaryOp.LOG:
            if not stored > 0:
                raise DomainError(f"log expansion undefined at {stored!r}")
            for k in ks:
                c[k - 1] = (-1) ** (k - 1) / (k * stored ** k)
        case UnaryOp.RECIP:
            if stored == 0:
                raise DomainError("recip expansion undefined at 0")
            for k in ks:
                c[k - 1] = (-1) ** k / stored ** (k + 1)
        case UnaryOp.SQRT:
            if not stored > 0:
                raise DomainError(f"sqrt expansion undefined at output {stored!r}")
            x = stored * stored
            # binom(1/2, k) * y / x^k, built up term by term
            term = stored
            for k in ks:
                term *= (0.5 - (k - 1)) / k / x
                c[k - 1] = term
        case UnaryOp.SIN | UnaryOp.COS:
            s, co = math.sin(stored), math.cos(stored)
            cycle = (s, co, -s, -co) if op is UnaryOp.SIN else (co, -s, -co, s)
            for k in ks:
                c[k - 1] = cycle[k % 4] / math.factorial(k)
        case UnaryOp.TAN:
            # tan' = 1 + tan^2 pushed through the series of tan itself
            tau = [stored, 1.0 + stored * stored]
            for k in range(1, order):
                tau.append(sum(tau[j] * tau[k - j] for j in range(k + 1)) / (k + 1))
            c[:] = tau[1:order + 1]
        case UnaryOp.ERFC:
            polys = erfc_polynomials(order - 1)
            gauss = TWO_OVER_SQRT_PI * math.exp(-stored * stored)
            for k in ks:
                c[k - 1] = -gauss * _horner(polys[k - 1], stored) / math.factorial(k)
        case UnaryOp.POW:
            if isinstance(exponent, bool) or not isinstance(exponent, int):
                raise DomainError(f"pow_const needs an integer exponent, got {exponent!r}")
            binom = 1.0
            for k in ks:
                binom *= (exponent - k + 1) / k
                if binom == 0.0:
                    break
                if stored == 0 and exponent - k < 0:
                    raise DomainError(f"pow_const {exponent} expansion undefined at 0")
                c[k - 1] = binom * stored ** (exponent - k)
        case _:
            raise DomainError(f"No kernel for {op!r}")

    if not np.all(np.isfinite(c)):
        raise DomainError(f"{op.value} expansion is not finite at {stored!r}")
    return c


@dataclass(frozen=True)
class LocalExpansion:
    """eps_node as a polynomial in the perturbations of its operands."""
    terms: tuple[tuple[Monomial, float], ...]

    def as_dict(self) -> dict[Monomial, float]:
        return dict(self.terms)


def expansion_shape(graph: Graph, ref: NodeRef, order: int) -> tuple[Monomial, ...]:
    """Monomial of each expansion term, in the order of expansion_coefficients."""
    node = graph.node(ref)
    if node.kind is NodeKind.BINARY:
        left, right = node.children
        if node.op is BinaryOp.MUL:
            return eps(left), eps(right), monomial_mul(eps(left), eps(right))
        return eps(left), eps(right)
    if node.kind is NodeKind.UNARY:
        (child,) = node.children
        if node.op in LINEAR_UNARY:
            return (eps(child),)
        return tuple(eps(child, k) for k in range(1, order + 1))
    return ()


def expansion_coefficients(graph: Graph, ref: NodeRef, ct, order: int) -> np.ndarray:
    """Numeric coefficient of each expansion term, read from the calc tree's stored values."""
    node = graph.node(ref)
    if node.kind is NodeKind.BINARY:
        left, right = node.children
        match node.op:
            case BinaryOp.ADD:
                return np.array([1.0, 1.0])
            case BinaryOp.SUB:
                return np.array([1.0, -1.0])
            case BinaryOp.MUL:
                return np.array([ct.value(graph.ref(right)), ct.value(graph.ref(left)), 1.0])
    if node.kind is NodeKind.UNARY:
        if node.op in LINEAR_UNARY:
            return np.array([-1.0])
        point = ref if node.op in READS_OUTPUT else graph.ref(node.children[0])
        try:
            return univariate_coeffs(node.op, ct.value(point), order, node.exponent)
        except DomainError as e:
            raise DomainError(f"{e} in node {graph.describe(ref)}", node=graph.describe(ref))
    return np.zeros(0)


def local_expansion(graph: Graph, ref: NodeRef, ct, order: int) -> LocalExpansion:
    _check_order(order)
    merged: dict[Monomial, float] = {}
    shape = expansion_shape(graph, ref, order)
    coefficients = expansion_coefficients(graph, ref, ct, order)
    for monomial, coeff in zip(shape, coefficients):
        merged[monomial] = merged.get(monomial, 0.0) + float(coeff)
    return LocalExpansion(tuple(merged.items()))
