"""Cross-holdings valuation engine."""

from .cross_holdings import CrossHoldings, build_cross_holdings
from .dependency import (
    DependencyMatrix,
    SolverMethod,
    ValueVector,
    dependency_matrix,
    market_values,
    neumann_dependency,
)
from .holdings import BipartiteHoldings, build_holdings, repriced_holdings

__all__ = [
    "CrossHoldings",
    "build_cross_holdings",
    "DependencyMatrix",
    "SolverMethod",
    "ValueVector",
    "dependency_matrix",
    "market_values",
    "neumann_dependency",
    "BipartiteHoldings",
    "build_holdings",
    "repriced_holdings",
]
