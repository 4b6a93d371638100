"""Core modules: graphs, metrics, valuation, contagion, ingestion and sweeps."""
