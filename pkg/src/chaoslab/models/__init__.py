"""Built-in functionals: point count, small-degree vertex count in a
random geometric graph, isolated Γ-component count, and the box-crossing
indicator of the Boolean disk model."""

from .count import CountModel
from .crossing import CrossingModel
from .gamma import GammaModel
from .isomorph import graph_from_edges, is_connected_graph, is_isomorphic
from .kiso import KIsoModel

__all__ = [
    "CountModel",
    "CrossingModel",
    "GammaModel",
    "KIsoModel",
    "graph_from_edges",
    "is_connected_graph",
    "is_isomorphic",
]
