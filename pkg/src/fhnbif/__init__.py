"""Stability and bifurcation analysis of two delay-coupled FitzHugh-Nagumo neurons."""

from fhnbif.model import DEFAULT, Params, RestKind, RestPoint, find_rest_points, jacobian_blocks, rhs

__all__ = ["DEFAULT", "Params", "RestKind", "RestPoint", "find_rest_points", "jacobian_blocks", "rhs"]
__version__ = "0.1.0"
