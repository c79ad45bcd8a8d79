"""Taylor backpropagation: one reverse sweep computing any set of mixed partials.

The sweep starts from eps_out for every output (the identity expansion,
valid to any order) and eliminates nodes in reverse topological order.
Eliminating node n substitutes n's local expansion for eps_n in every
live monomial, multiplies out, and drops every term that can no longer
reach a requested multi-index. What survives at the end is a set of
Taylor coefficients over the input variables; get() rescales them by
factorials.

The plan (which monomials live where, what multiplies what) depends
only on the graph and the requests. Executing it against a CalcTree is
plain array arithmetic over a fixed-size buffer.
"""
from collections import Counter
from dataclasses import dataclass, field
from itertools import product as cartesian
import heapq
import logging
from math import prod
from typing import Mapping

import numpy as np

from errors import InputError, PlanError, RequestError, StorageError
from models.graph import Graph, NodeKind, NodeRef
from models.monomial import Monomial, degree, eps, monomial_mul, split
from models.multi_index import MultiIndex, RequestSet
from services.calc_tree import CalcTree
from services.taylor_kernels import LINEAR_UNARY, expansion_coefficients, expansion_shape

logger = logging.getLogger(__name__)


class ContributionFilter:
    """Decides whether a monomial can still feed some requested multi-index.

    eps_W^a can feed M iff M splits into parts mu_W, one per factor, with
    supp(mu_W) inside support(W) and |mu_W| >= a (== a for input
    variables, whose perturbation expands to nothing but itself).
    """

    def __init__(self, supports: Mapping[int, frozenset[str]], variable_ids: frozenset[int],
                 requests: RequestSet):
        self.supports = supports
        self.variable_ids = variable_ids
        self.requests = [m.orders for m in requests]
        self.max_degree = requests.max_order
        self.active = requests.active_variables
        self.full_tensor = requests.is_full_tensor()
        self._memo: dict[Monomial, bool] = {}

    def __call__(self, m: Monomial) -> bool:
        verdict = self._memo.get(m)
        if verdict is None:
            verdict = self._memo[m] = self._decide(m)
        return verdict

    def _decide(self, m: Monomial) -> bool:
        if not m or degree(m) > self.max_degree:
            return False
        for node_id, _ in m:
            if not self.supports.get(node_id, frozenset()) & self.active:
                return False
        if self.full_tensor:
            return True
        # most constrained factors first
        factors = sorted(m, key=lambda f: (f[0] not in self.variable_ids, len(self.supports[f[0]])))
        return any(self._allocates(factors, request) for request in self.requests)

    def _allocates(self, factors: list[tuple[int, int]], request: tuple[tuple[str, int], ...]) -> bool:
        needed = [a for _, a in factors]
        if sum(needed) > sum(order for _, order in request):
            return False
        tail = [sum(needed[i + 1:]) for i in range(len(needed))]
        names = [name for name, _ in request]
        memo: dict[tuple[int, tuple[int, ...]], bool] = {}

        def search(index: int, remaining: tuple[int, ...]) -> bool:
            if index == len(factors):
                return not any(remaining)
            key = (index, remaining)
            if key in memo:
                return memo[key]
            node_id, power = factors[index]
            support = self.supports[node_id]
            exact = node_id in self.variable_ids
            budget = sum(remaining) - tail[index]
            eligible = [i for i, name in enumerate(names) if remaining[i] and name in support]
            found = False
            for picks in cartesian(*(range(remaining[i] + 1) for i in eligible)):
                size = sum(picks)
                if size < power or size > budget or (exact and size != power):
                    continue
                rest = list(remaining)
                for i, taken in zip(eligible, picks):
                    rest[i] -= taken
                if search(index + 1, tuple(rest)):
                    found = True
                    break
            memo[key] = found
            return found

        return search(0, tuple(order for _, order in request))


def contribution_filter(m: Monomial, supports: Mapping[int, frozenset[str]], requests: RequestSet,
                        variable_ids: frozenset[int] = frozenset()) -> bool:
    return ContributionFilter(supports, variable_ids, requests)(m)


class SlotAllocator:
    """Hands out the lowest free buffer slot first."""

    def __init__(self):
        self._free: list[int] = []
        self.size = 0

    def take(self) -> int:
        if self._free:
            return heapq.heappop(self._free)
        self.size += 1
        return self.size - 1

    def release(self, slot: int):
        heapq.heappush(self._free, slot)


@dataclass(frozen=True, eq=False)
class EliminationStep:
    node: NodeRef
    order: int  # kernel order; 0 when nothing was consumed
    consumed: tuple[Monomial, ...]
    produced: tuple[Monomial, ...]
    pruned: frozenset[Monomial]
    live: frozenset[Monomial]  # active set after the step
    sources: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    factors: np.ndarray  # expansion-term indices per instruction, padded with the sentinel
    released: np.ndarray

    @property
    def instruction_count(self) -> int:
        return len(self.targets)


@dataclass(frozen=True, eq=False)
class BackpropPlan:
    graph: Graph
    outputs: tuple[NodeRef, ...]
    requests: RequestSet
    initial: frozenset[Monomial]
    seed_slots: dict[int, int]
    steps: tuple[EliminationStep, ...]
    result_slots: dict[MultiIndex, int | None]
    buffer_size: int
    variable_ids: dict[str, int] = field(default_factory=dict)

    @property
    def elimination_order(self) -> list[NodeRef]:
        return [step.node for step in self.steps]

    def active_sets(self) -> list[frozenset[Monomial]]:
        return [self.initial] + [step.live for step in self.steps]

    def to_dict(self):
        return {
            "outputs": [self.graph.describe(out) for out in self.outputs],
            "requests": [str(m) for m in self.requests],
            "steps": len(self.steps),
            "instructions": sum(step.instruction_count for step in self.steps),
            "buffer_size": self.buffer_size,
        }


def _power_table(shape: tuple[Monomial, ...], max_power: int, max_degree: int):
    """Symbolic powers of sum_t coef_t * shape[t], truncated at max_degree.

    powers[a] maps (monomial, sorted term indices) -> integer multiplicity,
    built by repeated multiplication with truncation after each step.
    """
    first = {(monomial, (t,)): 1 for t, monomial in enumerate(shape) if degree(monomial) <= max_degree}
    powers = {1: first}
    for a in range(2, max_power + 1):
        nxt: dict[tuple[Monomial, tuple[int, ...]], int] = {}
        for (monomial, spec), weight in powers[a - 1].items():
            for t, term in enumerate(shape):
                merged = monomial_mul(monomial, term)
                if degree(merged) > max_degree:
                    continue
                key = (merged, tuple(sorted(spec + (t,))))
                nxt[key] = nxt.get(key, 0) + weight
        powers[a] = nxt
    return powers


def _required_order(node_kind, op, consumed_splits, max_degree: int) -> int:
    if not consumed_splits:
        return 0
    if node_kind is NodeKind.BINARY or op in LINEAR_UNARY:
        return 1
    # a single eps_child^k in a power a keeps k <= budget - (a - 1)
    return max(1, max(max_degree - degree(rest) - power + 1 for power, rest in consumed_splits))


def make_plan(graph: Graph, outputs: list[NodeRef], requests: RequestSet) -> BackpropPlan:
    if not outputs:
        raise PlanError("make_plan needs at least one output")
    if len({out.id for out in outputs}) != len(outputs):
        raise PlanError("Outputs must be distinct")
    for out in outputs:
        if not graph.owns(out):
            raise PlanError(f"{out!r} does not belong to this graph")
    variables = graph.variables
    unknown = sorted(requests.active_variables - set(variables))
    if unknown:
        raise RequestError(f"Requested derivatives over unknown variables: {', '.join(unknown)}")

    order = graph.topo_order(list(outputs))
    supports = {ref.id: graph.input_support(ref) for ref in order}
    variable_ids = frozenset(ref.id for ref in order if graph.nodes[ref.id].kind is NodeKind.VAR)
    max_degree = requests.max_order
    feasible = ContributionFilter(supports, variable_ids, requests)

    allocator = SlotAllocator()
    live: dict[Monomial, int] = {}
    seed_slots: dict[int, int] = {}
    for out in outputs:
        seed = eps(out.id)
        if feasible(seed):
            live[seed] = seed_slots[out.id] = allocator.take()
    initial = frozenset(live)

    steps = []
    for ref in reversed(order):
        node = graph.nodes[ref.id]
        if node.kind in (NodeKind.VAR, NodeKind.CONST):
            continue
        consumed = sorted(m for m in live if any(f == ref.id for f, _ in m))
        splits = [split(m, ref.id) for m in consumed]
        step_order = _required_order(node.kind, node.op, splits, max_degree)

        sources, targets, weights, specs = [], [], [], []
        pruned = set()
        target_order: dict[Monomial, None] = {}
        shape = expansion_shape(graph, ref, step_order) if consumed else ()
        if consumed:
            powers = _power_table(shape, max(power for power, _ in splits), max_degree)
            for m, (power, rest) in zip(consumed, splits):
                rest_degree = degree(rest)
                for (term, spec), weight in powers[power].items():
                    if degree(term) + rest_degree > max_degree:
                        continue
                    target = monomial_mul(term, rest)
                    if not feasible(target):
                        pruned.add(target)
                        continue
                    sources.append(live[m])
                    targets.append(target)
                    weights.append(float(weight))
                    specs.append(spec)
                    target_order.setdefault(target)

        released = [live.pop(m) for m in consumed]
        for slot in released:
            allocator.release(slot)
        produced = []
        for target in target_order:
            if target not in live:
                live[target] = allocator.take()
                produced.append(target)

        width = max((len(spec) for spec in specs), default=1)
        factors = np.full((len(specs), width), len(shape), dtype=np.intp)
        for row, spec in enumerate(specs):
            factors[row, :len(spec)] = spec

        steps.append(EliminationStep(
            node=ref,
            order=step_order,
            consumed=tuple(consumed),
            produced=tuple(produced),
            pruned=frozenset(pruned),
            live=frozenset(live),
            sources=np.array(sources, dtype=np.intp),
            targets=np.array([live[t] for t in targets], dtype=np.intp),
            weights=np.array(weights, dtype=float),
            factors=factors,
            released=np.array(released, dtype=np.intp),
        ))

    name_to_id = {graph.nodes[i].name: i for i in variable_ids}
    result_slots: dict[MultiIndex, int | None] = {}
    for m in requests:
        if not m.support <= set(name_to_id):
            result_slots[m] = None  # the outputs do not depend on every variable in m
            continue
        monomial = tuple(sorted((name_to_id[name], k) for name, k in m.orders))
        result_slots[m] = live.get(monomial)

    plan = BackpropPlan(
        graph=graph,
        outputs=tuple(outputs),
        requests=requests,
        initial=initial,
        seed_slots=seed_slots,
        steps=tuple(steps),
        result_slots=result_slots,
        buffer_size=allocator.size,
        variable_ids=name_to_id,
    )
    logger.debug("backprop plan: %d steps, %d instructions, buffer %d, %d pruned terms",
                 len(steps), sum(s.instruction_count for s in steps), plan.buffer_size,
                 sum(len(s.pruned) for s in steps))
    return plan


@dataclass
class ExecutionStats:
    eliminations: Counter = field(default_factory=Counter)
    peak_live: int = 0


class BackPropagator:
    """Executes a BackpropPlan against evaluated CalcTrees.

    One instance owns one buffer; run several instances of the same plan
    to backpropagate in parallel.
    """

    def __init__(self, plan: BackpropPlan):
        self.plan = plan
        self.buffer = np.zeros(plan.buffer_size)
        self.seeds: dict[int, float] = {}
        self.stats = ExecutionStats()
        self._done = False

    def set_seed(self, output: NodeRef, value: float):
        if output not in self.plan.outputs:
            raise InputError(f"{self.plan.graph.describe(output)} is not an output of this plan")
        self.seeds[output.id] = float(value)

    def backpropagate(self, ct):
        plan = self.plan
        if ct.graph is not plan.graph:
            raise PlanError("CalcTree and BackpropPlan were built over different graphs")
        if not ct.evaluated:
            raise StorageError("CalcTree must be evaluated before backpropagation")
        missing = [plan.graph.describe(out) for out in plan.outputs if out.id not in self.seeds]
        if missing:
            raise InputError(f"Missing seeds for outputs: {', '.join(missing)}")

        buffer = self.buffer
        buffer[:] = 0.0
        self.stats = ExecutionStats()
        for out_id, slot in plan.seed_slots.items():
            buffer[slot] = self.seeds[out_id]
        live = peak = len(plan.seed_slots)

        for step in plan.steps:
            self.stats.eliminations[step.node.id] += 1
            if not len(step.consumed):
                continue
            values = buffer[step.sources]
            # released slots may be handed out again as targets of this same step
            buffer[step.released] = 0.0
            coefficients = np.append(expansion_coefficients(plan.graph, step.node, ct, step.order), 1.0)
            products = coefficients[step.factors[:, 0]]
            for column in range(1, step.factors.shape[1]):
                products = products * coefficients[step.factors[:, column]]
            np.add.at(buffer, step.targets, values * step.weights * products)
            live += len(step.produced) - len(step.consumed)
            peak = max(peak, live)

        self.stats.peak_live = peak
        self._done = True

    def get(self, m: MultiIndex) -> float:
        if m not in self.plan.result_slots:
            raise RequestError(f"{m} was not requested from this plan")
        if not self._done:
            raise StorageError("backpropagate() has not run")
        slot = self.plan.result_slots[m]
        if slot is None:
            return 0.0
        return float(self.buffer[slot]) * m.factorial_weight

    def results(self) -> dict[MultiIndex, float]:
        return {m: self.get(m) for m in self.plan.requests}


def differentiate(graph: Graph, outputs: list[NodeRef], inputs: Mapping[str, float],
                  requests: RequestSet, seeds: Mapping[NodeRef, float] | None = None,
                  plan: BackpropPlan | None = None) -> dict[MultiIndex, float]:
    """Plan, evaluate and backpropagate in one call; seeds default to 1 for a single output."""
    if seeds is None:
        if len(outputs) != 1:
            raise InputError("Seeds are required when there is more than one output")
        seeds = {outputs[0]: 1.0}
    plan = plan or make_plan(graph, outputs, requests)
    ct = CalcTree(graph, outputs, requests.max_order, requests.active_variables)
    ct.set_inputs(inputs)
    ct.evaluate()
    bp = BackPropagator(plan)
    for out, value in seeds.items():
        bp.set_seed(out, value)
    bp.backpropagate(ct)
    return bp.results()


def taylor_estimate(derivatives: Mapping[MultiIndex, float], primal: float, shifts: Mapping[str, float]) -> float:
    """Re-price from a stored expansion: primal + sum D_M / M! * prod dx^M."""
    total = primal
    for m, value in derivatives.items():
        total += value / m.factorial_weight * prod(shifts.get(name, 0.0) ** k for name, k in m.orders)
    return total
