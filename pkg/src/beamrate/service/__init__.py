"""HTTP service layer: pydantic wire schemas and the FastAPI app."""

from .app import app

__all__ = ["app"]
