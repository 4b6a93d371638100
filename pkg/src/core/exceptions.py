"""Exception hierarchy for the fund contagion toolkit.

Each error carries the offending identifiers as attributes so callers (and the
CLI exit-code mapping) can report them without parsing messages.
"""

from typing import Any, Optional, Sequence


class FundNetError(Exception):
    """Root of every toolkit error."""


# Graph substrate

class GraphError(FundNetError, ValueError):
    """Invalid graph construction or query."""


class DuplicateEdge(GraphError):
    def __init__(self, tail: int, head: int):
        self.tail, self.head = tail, head
        super().__init__(f"Duplicate edge ({tail}, {head})")


class SelfLoop(GraphError):
    def __init__(self, node: int):
        self.node = node
        super().__init__(f"Self-loop on node {node}")


class NegativeWeight(GraphError):
    def __init__(self, tail: int, head: int, weight: float):
        self.tail, self.head, self.weight = tail, head, weight
        super().__init__(f"Negative weight {weight} on edge ({tail}, {head})")


class NodeOutOfRange(GraphError):
    def __init__(self, node: int, size: int):
        self.node, self.size = node, size
        super().__init__(f"Node {node} outside 0..{size - 1}")


class DegenerateGraph(GraphError):
    """Graph too small for the requested statistic."""


# Metrics

class MetricsError(FundNetError, ValueError):
    """Invalid metric input."""


class NoConvergence(MetricsError):
    def __init__(self, iterations: int, delta: float):
        self.iterations, self.delta = iterations, delta
        super().__init__(
            f"Power iteration did not converge after {iterations} iterations "
            f"(last step {delta:.3e})"
        )


class UnlabeledNode(MetricsError):
    def __init__(self, node: int):
        self.node = node
        super().__init__(f"Node {node} has no label")


class DegenerateLabels(MetricsError):
    """Assortativity denominator vanishes: a single effective label."""


class InsufficientSnapshots(MetricsError):
    def __init__(self, count: int):
        self.count = count
        super().__init__(f"Need at least 2 snapshots, got {count}")


# Valuation

class ValuationError(FundNetError, ValueError):
    """Invalid valuation input."""


class FullyInternalized(ValuationError):
    def __init__(self, fund: Any, column_sum: float):
        self.fund, self.column_sum = fund, column_sum
        super().__init__(
            f"Fund {fund} is held {column_sum:.6f} by other funds; no outside investors left"
        )


class SelfHolding(ValuationError):
    def __init__(self, fund: Any):
        self.fund = fund
        super().__init__(f"Fund {fund} cannot hold its own quotas")


class FractionOutOfRange(ValuationError):
    def __init__(self, investor: Any, investee: Any, fraction: float):
        self.investor, self.investee, self.fraction = investor, investee, fraction
        super().__init__(
            f"Fraction {fraction} of ({investor}, {investee}) outside [0, 1]"
        )


class DimensionMismatch(ValuationError):
    def __init__(self, what: str, expected: Any, got: Any):
        self.what, self.expected, self.got = what, expected, got
        super().__init__(f"{what}: expected {expected}, got {got}")


class NegativePrice(ValuationError):
    def __init__(self, asset: Any, price: float):
        self.asset, self.price = asset, price
        super().__init__(f"Negative price {price} for asset {asset}")


class SingularSystem(FundNetError, RuntimeError):
    """(I - C) could not be solved; unreachable for validated cross-holdings."""


# Contagion

class ContagionError(FundNetError, ValueError):
    """Invalid cascade input."""


class UnknownAsset(ContagionError):
    def __init__(self, asset: Any):
        self.asset = asset
        super().__init__(f"Unknown asset {asset}")


class AssetUnheld(ContagionError):
    def __init__(self, asset: Any = None):
        self.asset = asset
        super().__init__(f"Asset {asset} has no holders" if asset is not None else "Asset has no holders")


class EquilibriumViolation(ContagionError):
    def __init__(self, funds: Sequence[Any]):
        self.funds = list(funds)
        super().__init__(f"Funds below critical value before any shock: {self.funds[:10]}")


# Ingestion

class IngestError(FundNetError, ValueError):
    """Invalid input data."""


class ParseError(IngestError):
    def __init__(self, path: str, line: int, column: Optional[str], reason: str):
        self.path, self.line, self.column, self.reason = path, line, column, reason
        where = f"{path}:{line}" + (f" [{column}]" if column else "")
        super().__init__(f"{where}: {reason}")


class UnresolvedReference(IngestError):
    def __init__(self, kind: str, identifier: str, path: str = ""):
        self.kind, self.identifier, self.path = kind, identifier, path
        super().__init__(f"Unknown {kind} id '{identifier}'" + (f" in {path}" if path else ""))


class DuplicateRow(IngestError):
    def __init__(self, path: str, key: Any):
        self.path, self.key = path, key
        super().__init__(f"Duplicate row {key} in {path}")


class MarketValidationError(IngestError):
    def __init__(self, invariant: str, detail: str):
        self.invariant, self.detail = invariant, detail
        super().__init__(f"{invariant}: {detail}")


class InfeasibleTargets(IngestError):
    """Generator targets cannot be met with the requested sizes."""


class InconsistentSymbols(IngestError):
    def __init__(self, kind: str, identifiers: Sequence[str]):
        self.kind, self.identifiers = kind, list(identifiers)
        super().__init__(f"Inconsistent {kind} symbols across periods: {self.identifiers[:10]}")


# Sweeps

class SweepError(FundNetError, ValueError):
    """Invalid sweep request."""


class UnknownParameter(SweepError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unknown parameter '{name}'")


class AmbiguousCell(SweepError):
    def __init__(self, x: Any, y: Any, count: int):
        self.x, self.y, self.count = x, y, count
        super().__init__(f"{count} rows map to heatmap cell ({x}, {y})")
