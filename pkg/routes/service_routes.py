import logging

from fastapi import APIRouter, HTTPException

from services.caching import clear_all_cache
from services.settings import get_cache_backend

logger = logging.getLogger(__name__)

router = APIRouter(
    prefix="/services",
    tags=["Services"]
)


@router.post("/clear_cache", response_model=None)
async def clear_cache_endpoint():
    """Drop every cached backpropagation plan; the next request replans."""
    backend = get_cache_backend()
    if not await clear_all_cache():
        raise HTTPException(
            status_code=500,
            detail=f"Failed to clear the {backend} plan cache"
        )

    logger.info("plan cache cleared (%s)", backend)
    return {
        "status": "success",
        "data": {"message": "Plan cache cleared", "backend": backend},
        "error": None
    }
