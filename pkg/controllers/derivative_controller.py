from typing import Any, Dict, List, Optional
import logging

from errors import AdToolError
from models.multi_index import RequestSet
from services.caching import cached_or_build, gen_plan_key
from services.derivatives import compile_requests, run_eval, run_tensor, seed_map, tensor_requests
from services.parser import parse, parse_requests
from services.validators import validate_finite, validate_identifier

logger = logging.getLogger(__name__)


def _error(message: str) -> Dict[str, Any]:
    return {
        "status": "error",
        "data": None,
        "error": message
    }


def _number_map(values: Optional[Dict[str, Any]], label: str) -> Dict[str, float]:
    """Validate a {NAME: number} body field; raises ValueError with the first problem."""
    if values is None:
        return {}
    if not isinstance(values, dict):
        raise ValueError(f"{label} must be an object of NAME: number")
    result = {}
    for name, value in values.items():
        name_validation = validate_identifier(name)
        if not name_validation['is_valid']:
            raise ValueError(f"{label}: {name_validation['error']}")
        value_validation = validate_finite(value)
        if not value_validation['is_valid']:
            raise ValueError(f"{label}.{name}: {value_validation['error']}")
        result[name] = value_validation['data']
    return result


async def _compiled(source: str, outputs: List[str], requests: RequestSet):
    key = gen_plan_key("plan", source, sorted(outputs), sorted(str(m) for m in requests))
    return await cached_or_build(key, lambda: compile_requests(parse(source), outputs, requests))


async def eval_derivatives(
        source: str,
        inputs: Dict[str, Any],
        requests: List[str],
        seeds: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Primal values and the requested derivatives of a source program"""
    try:
        inputs = _number_map(inputs, "inputs")
        seeds = _number_map(seeds, "seeds")
        request_set = parse_requests(requests)
        program = parse(source)
        seeds = seed_map(program, seeds)

        compiled = await _compiled(source, list(seeds), request_set)
        report = run_eval(compiled.program, inputs, request_set, seeds, compiled=compiled)

        return {
            "status": "success",
            "data": report.to_dict(),
            "error": None
        }

    except (AdToolError, ValueError) as e:
        logger.info("eval failed: %s", e)
        return _error(str(e))


async def tensor_derivatives(
        source: str,
        inputs: Dict[str, Any],
        order: int,
        variables: Optional[List[str]] = None,
        shifts: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Full derivative tensor up to the given order"""
    try:
        inputs = _number_map(inputs, "inputs")
        shifts = _number_map(shifts, "shifts")
        program = parse(source)
        multi_indices = tensor_requests(program, order, variables)

        compiled = None
        if multi_indices:
            name = program.last_output
            compiled = await _compiled(source, [name], RequestSet.of(multi_indices))
            program = compiled.program
        report = run_tensor(program, inputs, order, variables, shifts=shifts, compiled=compiled)

        return {
            "status": "success",
            "data": report.to_dict(),
            "error": None
        }

    except (AdToolError, ValueError) as e:
        logger.info("tensor failed: %s", e)
        return _error(str(e))


async def taylor_reprice(
        source: str,
        inputs: Dict[str, Any],
        order: int,
        variables: Optional[List[str]],
        shifts: Dict[str, Any]
) -> Dict[str, Any]:
    """Re-price under input shifts from the order-N expansion, next to the exact revaluation"""
    if not shifts:
        return _error("shifts are required")
    result = await tensor_derivatives(source, inputs, order, variables, shifts)
    if result["status"] != "success":
        return result

    primal = result["data"]["primal"]
    name = next(iter(primal))
    estimate = primal[f"{name}@shifted"]
    exact = primal[f"{name}@exact"]
    return {
        "status": "success",
        "data": {
            "output": name,
            "primal": primal[name],
            "estimate": estimate,
            "exact": exact,
            "error": estimate - exact,
        },
        "error": None
    }
