"""Numerical verification of quartic stability constants for the CKN inequality on the Felli-Schneider curve."""

from .params import FsParams, ParameterError, classify, cylinder_params, fs_params

__all__ = ["FsParams", "ParameterError", "classify", "cylinder_params", "fs_params"]
__version__ = "0.1.0"
