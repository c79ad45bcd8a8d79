import logging

from fastapi import FastAPI

from routes import derivative_routes, service_routes
from services.settings import get_log_level

logging.basicConfig(level=get_log_level(), format="%(asctime)s %(name)s %(levelname)s %(message)s")

app = FastAPI(title="adtool")

app.include_router(derivative_routes.router)
app.include_router(service_routes.router)


@app.get("/")
def hello():
    return {"message": "Taylor backpropagation service"}
