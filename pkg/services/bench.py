"""Timing harness for full-tensor Taylor backpropagation.

Planning happens once per order, outside the timed region; each timed
repetition evaluates the tape and runs one backward sweep at freshly
drawn inputs. Results are folded into a sink so no repetition is dead.
"""
from dataclasses import dataclass
import logging
import time
from typing import Mapping

import numpy as np

from errors import InputError, RequestError
from models.graph import NodeRef
from models.multi_index import RequestSet, enumerate_full_tensor, full_tensor_size
from models.report import BenchRow, RunReport
from services.backprop import BackPropagator, make_plan
from services.calc_tree import CalcTree
from services.parser import Program
from services.settings import get_bench_seed

logger = logging.getLogger(__name__)

DEFAULT_BATCHES = 10


@dataclass(frozen=True)
class OrderTiming:
    order: int
    outputs: int
    mean_ns: float
    sink: float


def draw_inputs(base: Mapping[str, float], ranges: Mapping[str, tuple[float, float]],
                reps: int, seed: int | None = None) -> list[dict[str, float]]:
    """One input set per repetition; ranged variables are drawn uniformly, the rest stay at base."""
    rng = np.random.default_rng(get_bench_seed() if seed is None else seed)
    draws = {name: rng.uniform(lo, hi, size=reps) for name, (lo, hi) in sorted(ranges.items())}
    return [{**base, **{name: float(values[i]) for name, values in draws.items()}} for i in range(reps)]


def median_of_means(samples_ns: list[int], batches: int = DEFAULT_BATCHES) -> float:
    chunks = np.array_split(np.asarray(samples_ns, dtype=float), min(batches, len(samples_ns)))
    return float(np.median([chunk.mean() for chunk in chunks]))


def time_order(program: Program, output: NodeRef, variables: list[str], order: int,
               input_sets: list[dict[str, float]], batches: int = DEFAULT_BATCHES) -> OrderTiming:
    graph = program.graph
    samples: list[int] = []
    sink = 0.0

    if order == 0:
        ct = CalcTree(graph, [output])
        for inputs in input_sets:
            start = time.perf_counter_ns()
            ct.set_inputs(inputs)
            ct.evaluate()
            sink += ct.get(output)
            samples.append(time.perf_counter_ns() - start)
        return OrderTiming(0, 1, median_of_means(samples, batches), sink)

    requests = RequestSet.of(enumerate_full_tensor(variables, order))
    plan = make_plan(graph, [output], requests)
    ct = CalcTree(graph, [output], order, requests.active_variables)
    bp = BackPropagator(plan)
    bp.set_seed(output, 1.0)
    for inputs in input_sets:
        start = time.perf_counter_ns()
        ct.set_inputs(inputs)
        ct.evaluate()
        bp.backpropagate(ct)
        sink += ct.get(output) + float(bp.buffer.sum())
        samples.append(time.perf_counter_ns() - start)
    return OrderTiming(order, full_tensor_size(len(variables), order), median_of_means(samples, batches), sink)


def run_bench(program: Program, inputs: Mapping[str, float], orders: list[int], reps: int,
              variables: list[str] | None = None, ranges: Mapping[str, tuple[float, float]] | None = None,
              seed: int | None = None, output: str | None = None,
              batches: int = DEFAULT_BATCHES) -> RunReport:
    """Time the primal and each requested full-tensor order; R and RR are ratios of mean times."""
    if reps < 1:
        raise RequestError(f"reps must be at least 1, got {reps}")
    if not orders:
        raise RequestError("No orders to benchmark")
    variables = list(variables) if variables else program.variables
    unknown = [name for name in variables + list(ranges or {}) if name not in program.graph.variables]
    if unknown:
        raise InputError(f"Unknown variables: {', '.join(unknown)}")
    missing = [name for name in program.variables if name not in inputs and name not in (ranges or {})]
    if missing:
        raise InputError(f"Missing input values for: {', '.join(missing)}")

    name = output or program.last_output
    root = program.output(name)
    input_sets = draw_inputs(inputs, ranges or {}, reps, seed)

    timings: dict[int, OrderTiming] = {}
    # every order up to the highest requested one, so RR always has its predecessor
    for order in range(max(orders) + 1):
        timings[order] = time_order(program, root, variables, order, input_sets, batches)
        logger.info("order %d: %d outputs, %.0f ns", order, timings[order].outputs, timings[order].mean_ns)
    logger.debug("bench sink %r", sum(t.sink for t in timings.values()))

    report = RunReport()
    first = CalcTree(program.graph, [root])
    first.set_inputs(input_sets[0])
    first.evaluate()
    report.primal[name] = first.get(root)

    base = timings[0].mean_ns
    for order in sorted(set(orders)):
        timing = timings[order]
        report.bench.append(BenchRow(
            order=order,
            outputs=timing.outputs,
            mean_ns=timing.mean_ns,
            R=1.0 if order == 0 else timing.mean_ns / base,
            RR=None if order == 0 else timing.mean_ns / timings[order - 1].mean_ns,
        ))
    return report
