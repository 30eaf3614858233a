"""HTTP service exposing the analysis core."""

from klcluster.service.app import app, create_app

__all__ = ["app", "create_app"]
