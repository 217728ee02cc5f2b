from tailoredbell.handlers.api_handler import BellHandler
from .workbench import Workbench

__version__ = "0.1.0"
