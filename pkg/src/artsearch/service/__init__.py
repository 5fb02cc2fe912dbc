from .app import build_app, serve
from .config import ServerConfig, load_schema, schema_validator
from .uploads import UploadStore

__all__ = ["build_app", "serve", "ServerConfig", "UploadStore",
           "load_schema", "schema_validator"]
