from .app import build_app
from .assets import ServerConfig, load_assets
from .service import METHODS, InteractionService, ServerAssets, Session

__all__ = ["build_app", "ServerConfig", "load_assets", "METHODS",
           "InteractionService", "ServerAssets", "Session"]
