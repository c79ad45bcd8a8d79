from dataclasses import dataclass
import enum
import math
import struct
import uuid

from errors import GraphError
from services.validators import validate_identifier

# 1/sqrt(2) with the sign folded in, and 1/sqrt(2*pi)
M_ONE_OVER_SQRT2 = -0.70710678118654757
ONE_OVER_SQRT_2PI = 0.39894228040143265


class NodeKind(enum.Enum):
    VAR = "var"
    CONST = "const"
    UNARY = "unary"
    BINARY = "binary"


class UnaryOp(enum.Enum):
    NEG = "neg"
    EXP = "exp"
    LOG = "log"
    SQRT = "sqrt"
    SIN = "sin"
    COS = "cos"
    TAN = "tan"
    ERFC = "erfc"
    RECIP = "recip"
    POW = "pow_const"


class BinaryOp(enum.Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"


BINARY_SYMBOLS = {
    BinaryOp.ADD: "+",
    BinaryOp.SUB: "-",
    BinaryOp.MUL: "*",
}


@dataclass(frozen=True, order=True)
class NodeRef:
    """Dense handle into the Graph identified by `owner`."""
    id: int
    owner: str

    def __repr__(self):
        return f"NodeRef({self.id})"


@dataclass(frozen=True)
class Node:
    kind: NodeKind
    name: str | None = None
    value: float | None = None
    op: UnaryOp | BinaryOp | None = None
    children: tuple[int, ...] = ()
    exponent: int | None = None

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "name": self.name,
            "value": self.value,
            "op": self.op.value if self.op else None,
            "children": list(self.children),
            "exponent": self.exponent,
        }


def _const_key(value: float) -> bytes:
    # bit pattern, so -0.0 and 0.0 stay distinct
    return struct.pack("<d", value)


class Graph:
    """Append-only, hash-consed computation DAG.

    Children always precede parents in id order. Once built, a Graph is
    only read, so calc trees, planners and oracles may share it.
    """

    def __init__(self):
        self.token = str(uuid.uuid4())
        self.nodes: list[Node] = []
        self._interned: dict[tuple, int] = {}
        self._variables: dict[str, int] = {}
        self._supports: dict[int, frozenset[str]] = {}

    def __len__(self):
        return len(self.nodes)

    def __repr__(self):
        return f"<Graph {len(self.nodes)} nodes, vars={list(self._variables)}>"

    def _intern(self, key: tuple, node: Node) -> NodeRef:
        existing = self._interned.get(key)
        if existing is not None:
            return NodeRef(existing, self.token)
        node_id = len(self.nodes)
        self.nodes.append(node)
        self._interned[key] = node_id
        return NodeRef(node_id, self.token)

    def _check(self, ref: NodeRef) -> int:
        if not isinstance(ref, NodeRef) or ref.owner != self.token:
            raise GraphError(f"{ref!r} does not belong to this graph")
        if not 0 <= ref.id < len(self.nodes):
            raise GraphError(f"{ref!r} is out of range")
        return ref.id

    def owns(self, ref: NodeRef) -> bool:
        return isinstance(ref, NodeRef) and ref.owner == self.token and 0 <= ref.id < len(self.nodes)

    def ref(self, node_id: int) -> NodeRef:
        return NodeRef(node_id, self.token)

    def node(self, ref: NodeRef) -> Node:
        return self.nodes[self._check(ref)]

    # -- construction -----------------------------------------------------

    def new_variable(self, name: str) -> NodeRef:
        validation = validate_identifier(name)
        if not validation['is_valid']:
            raise GraphError(validation['error'])
        ref = self._intern(("var", name), Node(NodeKind.VAR, name=name))
        self._variables.setdefault(name, ref.id)
        return ref

    def new_constant(self, value: float) -> NodeRef:
        value = float(value)
        if not math.isfinite(value):
            raise GraphError(f"Constant {value!r} is not finite")
        return self._intern(("const", _const_key(value)), Node(NodeKind.CONST, value=value))

    def apply(self, op: UnaryOp | BinaryOp | str, *operands: NodeRef, exponent: int | None = None) -> NodeRef:
        if op == "div":
            if len(operands) != 2:
                raise GraphError("div takes two operands")
            return self.div(*operands)
        if isinstance(op, str):
            try:
                op = UnaryOp(op)
            except ValueError:
                try:
                    op = BinaryOp(op)
                except ValueError:
                    raise GraphError(f"Unknown operator {op!r}")
        ids = tuple(self._check(operand) for operand in operands)

        if isinstance(op, BinaryOp):
            if len(ids) != 2:
                raise GraphError(f"{op.value} takes two operands, got {len(ids)}")
            return self._intern(("binary", op, ids), Node(NodeKind.BINARY, op=op, children=ids))

        if len(ids) != 1:
            raise GraphError(f"{op.value} takes one operand, got {len(ids)}")
        if op is UnaryOp.POW:
            if isinstance(exponent, bool) or not isinstance(exponent, int):
                raise GraphError(f"pow_const needs an integer exponent, got {exponent!r}")
            if exponent == 0:
                return self.new_constant(1.0)
            if exponent == 1:
                return operands[0]
        elif exponent is not None:
            raise GraphError(f"{op.value} takes no exponent")
        return self._intern(("unary", op, ids, exponent),
                            Node(NodeKind.UNARY, op=op, children=ids, exponent=exponent))

    # builders

    def add(self, a: NodeRef, b: NodeRef) -> NodeRef:
        return self.apply(BinaryOp.ADD, a, b)

    def sub(self, a: NodeRef, b: NodeRef) -> NodeRef:
        return self.apply(BinaryOp.SUB, a, b)

    def mul(self, a: NodeRef, b: NodeRef) -> NodeRef:
        return self.apply(BinaryOp.MUL, a, b)

    def div(self, a: NodeRef, b: NodeRef) -> NodeRef:
        return self.mul(a, self.apply(UnaryOp.RECIP, b))

    def neg(self, a: NodeRef) -> NodeRef:
        return self.apply(UnaryOp.NEG, a)

    def pow(self, a: NodeRef, exponent: int) -> NodeRef:
        return self.apply(UnaryOp.POW, a, exponent=exponent)

    def unary(self, name: str, a: NodeRef) -> NodeRef:
        return self.apply(UnaryOp(name), a)

    def cdf_n(self, x: NodeRef) -> NodeRef:
        """Standard normal CDF, expanded as 0.5 * erfc(x * (-1/sqrt(2)))."""
        scaled = self.mul(x, self.new_constant(M_ONE_OVER_SQRT2))
        return self.mul(self.new_constant(0.5), self.apply(UnaryOp.ERFC, scaled))

    def pdf_n(self, x: NodeRef) -> NodeRef:
        """Standard normal density, expanded as (1/sqrt(2 pi)) * exp(-0.5 * x * x)."""
        exponent = self.mul(self.mul(self.new_constant(-0.5), x), x)
        return self.mul(self.new_constant(ONE_OVER_SQRT_2PI), self.apply(UnaryOp.EXP, exponent))

    # -- queries ----------------------------------------------------------

    @property
    def variables(self) -> dict[str, NodeRef]:
        return {name: NodeRef(node_id, self.token) for name, node_id in self._variables.items()}

    def variable(self, name: str) -> NodeRef:
        node_id = self._variables.get(name)
        if node_id is None:
            raise GraphError(f"Unknown variable {name!r}")
        return NodeRef(node_id, self.token)

    def is_variable(self, ref: NodeRef) -> bool:
        return self.node(ref).kind is NodeKind.VAR

    def input_support(self, ref: NodeRef) -> frozenset[str]:
        return self._support_of(self._check(ref))

    def _support_of(self, node_id: int) -> frozenset[str]:
        cached = self._supports.get(node_id)
        if cached is not None:
            return cached
        # children have smaller ids, so filling upwards in id order never recurses
        for pending in range(len(self._supports), node_id + 1):
            node = self.nodes[pending]
            if node.kind is NodeKind.VAR:
                support = frozenset((node.name,))
            elif node.kind is NodeKind.CONST:
                support = frozenset()
            else:
                support = frozenset().union(*(self._supports[child] for child in node.children))
            self._supports[pending] = support
        return self._supports[node_id]

    def topo_order(self, roots: list[NodeRef]) -> list[NodeRef]:
        """Every node reachable from roots, once, children before parents."""
        seen = set()
        stack = [self._check(root) for root in roots]
        while stack:
            node_id = stack.pop()
            if node_id in seen:
                continue
            seen.add(node_id)
            stack.extend(self.nodes[node_id].children)
        return [NodeRef(node_id, self.token) for node_id in sorted(seen)]

    def consumers(self, roots: list[NodeRef]) -> dict[int, list[int]]:
        """Parent ids of each node, restricted to the sub-DAG under roots."""
        parents: dict[int, list[int]] = {}
        for ref in self.topo_order(roots):
            parents.setdefault(ref.id, [])
            for child in self.nodes[ref.id].children:
                parents.setdefault(child, []).append(ref.id)
        return parents

    def describe(self, ref: NodeRef, depth: int = 3) -> str:
        """Short infix rendering of a node, used in error messages."""
        node = self.node(ref)
        if node.kind is NodeKind.VAR:
            return node.name
        if node.kind is NodeKind.CONST:
            return repr(node.value)
        if depth == 0:
            return f"#{ref.id}"
        children = [self.describe(self.ref(child), depth - 1) for child in node.children]
        if node.kind is NodeKind.BINARY:
            return f"({children[0]} {BINARY_SYMBOLS[node.op]} {children[1]})"
        if node.op is UnaryOp.NEG:
            return f"-{children[0]}"
        if node.op is UnaryOp.POW:
            return f"{children[0]}^{node.exponent}"
        return f"{node.op.value}({children[0]})"
