"""The eval and tensor operations shared by the CLI and the HTTP service."""
from dataclasses import dataclass
import logging
from typing import Iterable, Mapping

from errors import InputError, RequestError
from models.multi_index import MultiIndex, RequestSet, enumerate_full_tensor
from models.report import RunReport
from services.backprop import BackPropagator, BackpropPlan, make_plan, taylor_estimate
from services.calc_tree import CalcTree, primal_values
from services.parser import Program, parse_requests
from services.settings import get_order_cap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Compiled:
    """A parsed program with the plan for one (outputs, requests) pair."""
    program: Program
    outputs: tuple[str, ...]
    requests: RequestSet
    plan: BackpropPlan | None


def seed_map(program: Program, seeds: Mapping[str, float] | None) -> dict[str, float]:
    if not seeds:
        return {program.last_output: 1.0}
    unknown = [name for name in seeds if name not in program.outputs]
    if unknown:
        raise InputError(f"Seeds name unknown outputs: {', '.join(unknown)}")
    return {name: float(value) for name, value in seeds.items()}


def compile_requests(program: Program, outputs: Iterable[str], requests: RequestSet) -> Compiled:
    outputs = tuple(outputs)
    plan = make_plan(program.graph, [program.output(name) for name in outputs], requests)
    return Compiled(program, outputs, requests, plan)


def tensor_requests(program: Program, order: int, variables: list[str] | None) -> list[MultiIndex]:
    cap = get_order_cap()
    if isinstance(order, bool) or not isinstance(order, int) or not 0 <= order <= cap:
        raise RequestError(f"Tensor order must be an integer in 0..{cap}, got {order!r}")
    variables = list(variables) if variables else program.variables
    unknown = [name for name in variables if name not in program.graph.variables]
    if unknown:
        raise RequestError(f"Unknown tensor variables: {', '.join(unknown)}")
    return enumerate_full_tensor(variables, order) if order else []


def _evaluate(compiled: Compiled, inputs: Mapping[str, float], seeds: Mapping[str, float]):
    program = compiled.program
    refs = [program.output(name) for name in compiled.outputs]
    ct = CalcTree(program.graph, refs, compiled.requests.max_order, compiled.requests.active_variables)
    ct.set_inputs(inputs)
    ct.evaluate()
    bp = BackPropagator(compiled.plan)
    for name, ref in zip(compiled.outputs, refs):
        bp.set_seed(ref, seeds[name])
    bp.backpropagate(ct)
    return {name: ct.get(ref) for name, ref in zip(compiled.outputs, refs)}, bp


def run_eval(program: Program, inputs: Mapping[str, float], requests: Iterable[str] | RequestSet,
             seeds: Mapping[str, float] | None = None, compiled: Compiled | None = None) -> RunReport:
    """Evaluate the seeded outputs and every requested derivative in one backward sweep."""
    seeds = seed_map(program, seeds)
    if not isinstance(requests, RequestSet):
        requests = parse_requests(list(requests))
    compiled = compiled or compile_requests(program, seeds, requests)

    primal, bp = _evaluate(compiled, inputs, seeds)
    report = RunReport(primal=primal)
    for m in requests:
        report.add_derivative(str(m), bp.get(m))
    return report


def run_tensor(program: Program, inputs: Mapping[str, float], order: int,
               variables: list[str] | None = None, shifts: Mapping[str, float] | None = None,
               output: str | None = None, compiled: Compiled | None = None) -> RunReport:
    """Full derivative tensor up to `order`; with shifts, also the re-priced and exact values."""
    name = output or program.last_output
    root = program.output(name)
    multi_indices = tensor_requests(program, order, variables)
    tensor_vars = list(variables) if variables else program.variables
    if shifts:
        outside = [var for var in shifts if var not in tensor_vars]
        if outside:
            raise InputError(f"Shifted variables are not tensor variables: {', '.join(outside)}")
        unset = [var for var in shifts if var not in inputs]
        if unset:
            raise InputError(f"Shifted variables have no base value: {', '.join(unset)}")

    if not multi_indices:
        (value,) = primal_values(program.graph, inputs, [root])
        report = RunReport(primal={name: value})
        derivatives = {}
    else:
        requests = RequestSet.of(multi_indices)
        compiled = compiled or compile_requests(program, [name], requests)
        primal, bp = _evaluate(compiled, inputs, {name: 1.0})
        report = RunReport(primal=primal)
        derivatives = bp.results()
        for m in multi_indices:
            report.add_derivative(str(m), derivatives[m])

    if shifts:
        base = report.primal[name]
        moved = {**inputs, **{var: inputs[var] + delta for var, delta in shifts.items()}}
        (exact,) = primal_values(program.graph, moved, [root])
        report.primal[f"{name}@shifted"] = taylor_estimate(derivatives, base, shifts)
        report.primal[f"{name}@exact"] = exact
        logger.debug("taylor re-pricing error %g", report.primal[f"{name}@shifted"] - exact)
    return report
