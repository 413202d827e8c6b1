from .app import app, create_app
from .client import ServiceClient

__all__ = ["ServiceClient", "app", "create_app"]
