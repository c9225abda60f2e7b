"""Super-expanding measures for expanding Lorenz maps."""

from .errors import LorenzMeasuresError
from .lorenz_map import LEFT, RIGHT, LorenzMap, canonical, load_map

__all__ = ["LEFT", "RIGHT", "LorenzMap", "LorenzMeasuresError", "canonical", "load_map"]

__version__ = "0.1.0"
