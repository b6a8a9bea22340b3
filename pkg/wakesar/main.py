"""
FastAPI Application Entry Point

Lifecycle:
  - On startup: configures logging and makes sure the output directory exists
  - Registers all API routes
"""
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from wakesar import __version__
from wakesar.api.routes import router
from wakesar.config import configure_logging, settings


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Startup and shutdown lifecycle manager."""
    configure_logging()
    settings.output_dir.mkdir(parents=True, exist_ok=True)
    yield


# ── FastAPI Application ───────────────────────────────────────────────────────
app = FastAPI(
    title="wakesar",
    description=(
        "Simulated SAR sea scenes with Kelvin ship wakes, log-normal speckle, "
        "and wavelet-domain despeckling with Cauchy, L1 and TV regularisation."
    ),
    version=__version__,
    lifespan=lifespan,
)

# ── CORS ─────────────────────────────────────────────────────────────────────
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)

# ── Register Routes ───────────────────────────────────────────────────────────
app.include_router(router)


# ── Entrypoint ────────────────────────────────────────────────────────────────
if __name__ == "__main__":
    import uvicorn
    uvicorn.run("wakesar.main:app", host=settings.api_host, port=settings.api_port)
