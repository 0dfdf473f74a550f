"""Distributed shape reduction on a simulated grid of anonymous nodes."""
from .grid import Shape, load_shape, dump_shape
from .ops import Operation, apply_operations

__version__ = "0.1.0"

__all__ = ["Operation", "Shape", "apply_operations", "dump_shape", "load_shape"]
