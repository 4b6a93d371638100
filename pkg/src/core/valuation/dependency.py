"""Dependency matrix A = C_hat (I - C)^-1 and fund valuation.

A is kept in factored form: the cascade only ever needs products A x, so
the dense n x n matrix is built on request only.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from src.config import settings
from src.core.exceptions import DimensionMismatch, SingularSystem, ValuationError
from src.core.valuation.cross_holdings import CrossHoldings
from src.core.valuation.holdings import BipartiteHoldings
from src.utils import get_logger

logger = get_logger(__name__)


class SolverMethod(str, Enum):
    """How (I - C) systems are solved."""
    AUTO = "auto"
    DIRECT = "direct"          # sparse LU
    ITERATIVE = "iterative"    # fixed point v <- x + C v


class DependencyMatrix:
    """
    Factored dependency matrix of one cross-holdings structure.

    Column sums of A are 1: every unit of primitive value ends up with some
    fund's outside investors.
    """

    def __init__(
        self,
        cross_holdings: CrossHoldings,
        method: SolverMethod = SolverMethod.AUTO,
        tol: Optional[float] = None,
        max_iter: Optional[int] = None,
    ):
        self.cross_holdings = cross_holdings
        self.n = cross_holdings.n
        self.tol = settings.iterative_tolerance if tol is None else tol
        self.max_iter = settings.iterative_max_iterations if max_iter is None else max_iter
        self.logger = get_logger(f"{self.__class__.__name__}")

        method = SolverMethod(method)
        if method == SolverMethod.AUTO:
            method = (
                SolverMethod.DIRECT
                if self.n <= settings.direct_solver_max_funds
                else SolverMethod.ITERATIVE
            )
        self.method = method

        self._c = cross_holdings.matrix.tocsr()
        self._lu = None
        if method == SolverMethod.DIRECT and self.n > 0:
            system = (sp.identity(self.n, format="csc") - cross_holdings.matrix).tocsc()
            try:
                self._lu = splu(system)
            except RuntimeError as e:
                raise SingularSystem(f"(I - C) factorization failed: {e}") from e

        self.logger.debug(f"Dependency matrix ready: n={self.n}, method={self.method.value}")

    @property
    def outside_share(self) -> np.ndarray:
        return self.cross_holdings.outside_share

    def book_values(self, x: np.ndarray) -> np.ndarray:
        """Solve (I - C) v = x (x may be a vector or a matrix of columns)."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise DimensionMismatch("right-hand side", self.n, x.shape[0])
        if self.n == 0:
            return x.copy()
        if self._lu is not None:
            solution = self._lu.solve(x)
        else:
            solution = self._fixed_point(x)
        if not np.all(np.isfinite(solution)):
            raise SingularSystem("non-finite solution of (I - C) v = x")
        return solution

    def _fixed_point(self, x: np.ndarray) -> np.ndarray:
        v = x.copy()
        scale = max(float(np.max(np.abs(x))) if x.size else 0.0, 1.0)
        for _ in range(self.max_iter):
            v = x + self._c @ v
            residual = float(np.max(np.abs(v - self._c @ v - x))) if v.size else 0.0
            if residual < self.tol * scale:
                return v
        raise SingularSystem(
            f"Fixed-point solver did not reach {self.tol:.1e} in {self.max_iter} iterations"
        )

    def apply(self, x: np.ndarray) -> np.ndarray:
        """A x = C_hat (I - C)^-1 x."""
        solution = self.book_values(x)
        if solution.ndim == 1:
            return self.outside_share * solution
        return self.outside_share[:, None] * solution

    def to_dense(self) -> np.ndarray:
        if self.n > 5000:
            self.logger.warning(f"Materializing a dense {self.n}x{self.n} dependency matrix")
        return self.apply(np.eye(self.n))

    def residual(self) -> float:
        """Max entry of |A (I - C) - C_hat|."""
        a = self.to_dense()
        identity_minus_c = np.eye(self.n) - self.cross_holdings.matrix.toarray()
        return float(np.max(np.abs(a @ identity_minus_c - np.diag(self.outside_share)), initial=0.0))


def dependency_matrix(
    ch: CrossHoldings, method: SolverMethod = SolverMethod.AUTO
) -> DependencyMatrix:
    """Factor the dependency matrix of validated cross-holdings."""
    return DependencyMatrix(ch, method=method)


def neumann_dependency(ch: CrossHoldings, tol: float = 1e-14, max_terms: int = 100000) -> np.ndarray:
    """C_hat * sum_k C^k, truncated once the term's max-norm drops below ``tol``."""
    c = ch.matrix.toarray()
    total = np.eye(ch.n)
    term = np.eye(ch.n)
    for _ in range(max_terms):
        term = c @ term
        total += term
        if np.max(np.abs(term), initial=0.0) < tol:
            break
    return ch.outside_share[:, None] * total


@dataclass
class ValueVector:
    """Book values v and outside (market) values v_dot per fund."""
    book: np.ndarray
    market: np.ndarray
    fund_ids: Tuple[str, ...]

    @property
    def total_market(self) -> float:
        return float(self.market.sum())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"fund_id": list(self.fund_ids), "book_value": self.book, "market_value": self.market}
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fund_ids": list(self.fund_ids),
            "book": self.book.tolist(),
            "market": self.market.tolist(),
        }


def market_values(
    dep: DependencyMatrix, bh: BipartiteHoldings, check: bool = True
) -> ValueVector:
    """
    Values of every fund: v = (I - C)^-1 W 1 and v_dot = A W 1.

    Raises:
        DimensionMismatch: holdings and cross-holdings disagree on fund count
        ValuationError: total outside value drifts from total primitive value
    """
    if bh.n_funds != dep.n:
        raise DimensionMismatch("fund count", dep.n, bh.n_funds)

    primitive = bh.fund_asset_values
    book = dep.book_values(primitive)
    market = dep.outside_share * book

    if check:
        total = float(primitive.sum())
        drift = abs(float(market.sum()) - total)
        if drift > 1e-6 * max(abs(total), 1.0):
            raise ValuationError(
                f"Value conservation violated: outside value {market.sum():.6f} vs primitive {total:.6f}"
            )

    return ValueVector(book=book, market=market, fund_ids=bh.fund_ids)
