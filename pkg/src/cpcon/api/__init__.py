"""Northbound HTTP + SSE interface for the operator console and scripts."""

from cpcon.api.server import ControlPlane, create_app

__all__ = ["ControlPlane", "create_app"]
