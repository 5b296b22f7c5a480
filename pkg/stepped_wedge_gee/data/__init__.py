from .ingest import ingest_cluster_period, ingest_individual, to_cluster_period_csv, validate_design

__all__ = ["ingest_cluster_period", "ingest_individual", "to_cluster_period_csv", "validate_design"]
