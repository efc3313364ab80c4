from .flood import flood_segment
from .server import ModelRunner, ServerConfig, create_app

__version__ = "0.1.0"
