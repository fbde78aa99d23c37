"""JSON-over-HTTP service exposing prediction, explanation, and sensitivity."""

from .app import ServiceState, build_state, create_app

__all__ = ["ServiceState", "build_state", "create_app"]
