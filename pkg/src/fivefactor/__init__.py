"""Five-factor asset-pricing toolkit: panel ingestion, double sorts,
factor construction, OLS/GRS inference and a synthetic data generator."""

__version__ = "0.1.0"
