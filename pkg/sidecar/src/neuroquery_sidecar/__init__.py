"""Model-serving sidecar speaking the neuroquery gateway wire protocol."""

from .app import create_app
from .backends import BackendStartupError, HashBackend, TransformersBackend, make_backend
from .config import SidecarConfig, load_config

__version__ = "0.1.0"

__all__ = ["BackendStartupError", "HashBackend", "SidecarConfig",
           "TransformersBackend", "create_app", "load_config", "make_backend"]
