"""Fund contagion toolkit - cross-holdings valuation and cascading failures."""

__version__ = "0.1.0"
