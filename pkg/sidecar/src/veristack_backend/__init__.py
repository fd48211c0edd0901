"""Reference sidecar serving the model-backend wire protocol."""

from .app import build_app
from .real import RealBackend, RealModelRegistry, UnknownModel, load_default_registry

__all__ = [
    "RealBackend",
    "RealModelRegistry",
    "UnknownModel",
    "build_app",
    "load_default_registry",
]
