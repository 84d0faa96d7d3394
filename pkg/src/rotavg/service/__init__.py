"""HTTP service wrapping the rotation-averaging library."""

from .app import create_app

__all__ = ["create_app"]
