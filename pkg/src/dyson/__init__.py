"""Determinantal space-time correlations of noncolliding Brownian motion
(beta = 2) started from finite and infinite configurations."""
from __future__ import annotations

from .config import Configuration, LatticeTail, parse_configuration
from .errors import DysonError
from .kernels import KernelSpec, KernelValue, SpaceTimePoint, evaluate

__all__ = ["Configuration", "LatticeTail", "parse_configuration", "DysonError",
           "KernelSpec", "KernelValue", "SpaceTimePoint", "evaluate"]
__version__ = "0.1.0"
