from fastapi import FastAPI
from app.routers import network, allocation, metrics, experiment
from fastapi.middleware.cors import CORSMiddleware
from app.config import settings

app = FastAPI(title="spinalloc")

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.cors_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


app.include_router(network.router)
app.include_router(allocation.router)
app.include_router(metrics.router)
app.include_router(experiment.router)
