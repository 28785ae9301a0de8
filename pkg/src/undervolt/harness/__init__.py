"""Model/dataset ingestion, experiment orchestration, reports and the CLI."""

from undervolt.harness.errors import ConfigError, DataError, InvariantError

__all__ = ["ConfigError", "DataError", "InvariantError"]
