"""Sentence-embedding HTTP microservice."""

from .service import ServiceConfig, create_app

__all__ = ["ServiceConfig", "create_app"]
__version__ = "0.1.0"
