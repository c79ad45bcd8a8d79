from fastapi import APIRouter, Request, HTTPException
from fastapi.responses import JSONResponse

from controllers import derivative_controller

router = APIRouter(
    prefix="/derivatives",
    tags=["Derivatives"]
)


def _respond(result: dict):
    if result["status"] != "success":
        return JSONResponse(status_code=422, content=result)
    return result


def _required(data: dict, *keys):
    for key in keys:
        if key not in data:
            raise HTTPException(status_code=400, detail=f"{key} is required")
    return [data[key] for key in keys]


async def _body(request: Request) -> dict:
    try:
        data = await request.json()
    except ValueError:
        raise HTTPException(status_code=400, detail="Body must be JSON")
    if not isinstance(data, dict):
        raise HTTPException(status_code=400, detail="Body must be a JSON object")
    return data


@router.post("/eval", response_model=None)
async def eval_derivatives(request: Request):
    """Primal values plus the requested mixed partials, from one backward sweep"""
    data = await _body(request)
    source, inputs, requests = _required(data, 'source', 'inputs', 'requests')
    return _respond(await derivative_controller.eval_derivatives(
        source=source,
        inputs=inputs,
        requests=requests,
        seeds=data.get('seeds')
    ))


@router.post("/tensor", response_model=None)
async def tensor_derivatives(request: Request):
    """Every derivative up to `order` over `vars`"""
    data = await _body(request)
    source, inputs, order = _required(data, 'source', 'inputs', 'order')
    return _respond(await derivative_controller.tensor_derivatives(
        source=source,
        inputs=inputs,
        order=order,
        variables=data.get('vars')
    ))


@router.post("/taylor", response_model=None)
async def taylor_reprice(request: Request):
    """Taylor re-pricing under input shifts, with the exact revaluation alongside"""
    data = await _body(request)
    source, inputs, order, shifts = _required(data, 'source', 'inputs', 'order', 'shifts')
    return _respond(await derivative_controller.taylor_reprice(
        source=source,
        inputs=inputs,
        order=order,
        variables=data.get('vars'),
        shifts=shifts
    ))
