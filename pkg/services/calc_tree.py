"""Forward pass: storage analysis and primal evaluation onto a compact tape."""
from dataclasses import dataclass
import logging
import math
from typing import Iterable, Mapping

import numpy as np

from errors import DomainError, ElidedValueError, InputError, PlanError, StorageError
from models.graph import BinaryOp, Graph, NodeKind, NodeRef, UnaryOp
from services.taylor_kernels import primal_binary, primal_unary

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StorageClass:
    """Which values an operator's derivative kernels read."""
    needs_inputs: tuple[bool, ...]
    needs_output: bool


NOTHING = StorageClass((False,), False)
INPUT_ONLY = StorageClass((True,), False)
OUTPUT_ONLY = StorageClass((False,), True)

STORAGE_CLASSES: dict[UnaryOp | BinaryOp, StorageClass] = {
    BinaryOp.ADD: StorageClass((False, False), False),
    BinaryOp.SUB: StorageClass((False, False), False),
    BinaryOp.MUL: StorageClass((True, True), False),
    UnaryOp.NEG: NOTHING,
    UnaryOp.EXP: OUTPUT_ONLY,
    UnaryOp.TAN: OUTPUT_ONLY,
    UnaryOp.SQRT: OUTPUT_ONLY,
    UnaryOp.ERFC: INPUT_ONLY,
    UnaryOp.LOG: INPUT_ONLY,
    UnaryOp.SIN: INPUT_ONLY,
    UnaryOp.COS: INPUT_ONLY,
    UnaryOp.RECIP: INPUT_ONLY,
    UnaryOp.POW: INPUT_ONLY,
}


@dataclass(frozen=True)
class StoragePlan:
    outputs: tuple[NodeRef, ...]
    slots: dict[int, int]  # stored node id -> slot index

    @property
    def stored(self) -> frozenset[int]:
        return frozenset(self.slots)

    @property
    def slot_count(self) -> int:
        return len(self.slots)

    def __contains__(self, ref: NodeRef) -> bool:
        return ref.id in self.slots


def _derivative_flows(graph: Graph, node_id: int, active: frozenset[str] | None) -> bool:
    support = graph.input_support(graph.ref(node_id))
    return bool(support) if active is None else bool(support & active)


def plan_storage(graph: Graph, outputs: list[NodeRef], max_order: int = 1,
                 active: Iterable[str] | None = None) -> StoragePlan:
    """Decide which node values the tape keeps.

    A node is kept iff it is a declared output, an input variable, read
    by one of its consumers' kernels, or read by its own kernel while a
    derivative over an active variable flows through it. Constants live
    in the graph and get a slot only as declared outputs.
    """
    if not outputs:
        raise PlanError("plan_storage needs at least one output")
    if max_order < 1:
        raise PlanError(f"max_order must be at least 1, got {max_order}")
    active = frozenset(active) if active is not None else None

    order = graph.topo_order(list(outputs))
    declared = {ref.id for ref in outputs}
    keep = set()
    for ref in order:
        node = graph.nodes[ref.id]
        if ref.id in declared or node.kind is NodeKind.VAR:
            keep.add(ref.id)
        if node.kind in (NodeKind.UNARY, NodeKind.BINARY):
            storage = STORAGE_CLASSES[node.op]
            for child, needed in zip(node.children, storage.needs_inputs):
                if needed and graph.nodes[child].kind is not NodeKind.CONST:
                    keep.add(child)
            if storage.needs_output and _derivative_flows(graph, ref.id, active):
                keep.add(ref.id)

    slots = {node_id: slot for slot, node_id in enumerate(sorted(keep))}
    logger.debug("storage plan keeps %d of %d nodes", len(slots), len(order))
    return StoragePlan(tuple(outputs), slots)


def plan_storage_everything(graph: Graph, outputs: list[NodeRef]) -> StoragePlan:
    """Every reachable node on the tape; the reference for elision checks."""
    if not outputs:
        raise PlanError("plan_storage needs at least one output")
    order = graph.topo_order(list(outputs))
    return StoragePlan(tuple(outputs), {ref.id: slot for slot, ref in enumerate(order)})


class CalcTree:
    """Tape of retained primal values for one set of inputs.

    Single writer; several CalcTrees over one Graph may run side by side.
    """

    def __init__(self, graph: Graph, outputs: list[NodeRef], max_order: int = 1,
                 active: Iterable[str] | None = None, plan: StoragePlan | None = None):
        self.graph = graph
        self.outputs = tuple(outputs)
        self.plan = plan or plan_storage(graph, self.outputs, max_order, active)
        self.order = graph.topo_order(list(self.outputs))
        self.values = np.zeros(self.plan.slot_count)
        self.evaluated = False
        self._inputs: dict[str, float] = {}
        self._variables = {ref.id: graph.nodes[ref.id].name
                           for ref in self.order if graph.nodes[ref.id].kind is NodeKind.VAR}

    def __repr__(self):
        return f"<CalcTree slots={self.plan.slot_count} evaluated={self.evaluated}>"

    @property
    def variable_names(self) -> list[str]:
        return list(self._variables.values())

    def set_input(self, variable: str | NodeRef, value: float):
        if isinstance(variable, NodeRef):
            if not self.graph.owns(variable) or not self.graph.is_variable(variable):
                raise InputError(f"{variable!r} is not an input variable of this graph")
            variable = self.graph.nodes[variable.id].name
        if variable not in self.graph.variables:
            raise InputError(f"Unknown input variable {variable!r}")
        self._inputs[variable] = float(value)
        self.evaluated = False

    def set_inputs(self, values: Mapping[str, float]):
        for name, value in values.items():
            self.set_input(name, value)

    def evaluate(self):
        missing = [name for name in self._variables.values() if name not in self._inputs]
        if missing:
            raise InputError(f"Missing input values for: {', '.join(missing)}")

        scratch: dict[int, float] = {}
        slots = self.plan.slots
        for ref in self.order:
            node = self.graph.nodes[ref.id]
            match node.kind:
                case NodeKind.VAR:
                    value = self._inputs[node.name]
                case NodeKind.CONST:
                    value = node.value
                case NodeKind.UNARY:
                    try:
                        value = primal_unary(node.op, scratch[node.children[0]], node.exponent)
                    except DomainError as e:
                        raise self._domain_error(ref, str(e))
                case NodeKind.BINARY:
                    value = primal_binary(node.op, scratch[node.children[0]], scratch[node.children[1]])
            if not math.isfinite(value):
                raise self._domain_error(ref, f"non-finite value {value!r}")
            scratch[ref.id] = value
            slot = slots.get(ref.id)
            if slot is not None:
                self.values[slot] = value
        self.evaluated = True

    def _domain_error(self, ref: NodeRef, reason: str) -> DomainError:
        where = self.graph.describe(ref)
        return DomainError(f"Evaluation failed at node {where}: {reason}", node=where)

    def get(self, ref: NodeRef) -> float:
        if not self.evaluated:
            raise StorageError("CalcTree has not been evaluated")
        if not self.graph.owns(ref):
            raise StorageError(f"{ref!r} does not belong to this calc tree's graph")
        slot = self.plan.slots.get(ref.id)
        if slot is None:
            raise ElidedValueError(f"Value of {self.graph.describe(ref)} elided by storage analysis")
        return float(self.values[slot])

    def value(self, ref: NodeRef) -> float:
        """Stored value, or the constant itself for Const nodes."""
        node = self.graph.nodes[ref.id]
        if node.kind is NodeKind.CONST and ref.id not in self.plan.slots:
            return node.value
        return self.get(ref)


def primal_values(graph: Graph, inputs: Mapping[str, float], roots: list[NodeRef]) -> list[float]:
    """Straight-line evaluation keeping only the roots on the tape."""
    plan = StoragePlan(tuple(roots), {node_id: slot for slot, node_id in enumerate(dict.fromkeys(r.id for r in roots))})
    tree = CalcTree(graph, roots, plan=plan)
    tree.set_inputs({name: value for name, value in inputs.items() if name in graph.variables})
    tree.evaluate()
    return [tree.get(root) for root in roots]
