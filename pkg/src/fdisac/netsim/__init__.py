from ._accel import backend_name, numba_enabled
from .sim import (DEFAULT_REPS, DEFAULT_SEED, EVENTS, SAMPLE_COLUMNS, GeometryConfig,
                  McEstimate, NetworkRealization, RealizationBatch, SinrSample, cached_batch,
                  estimate, estimate_from_batch, event_indicators, generate_realization,
                  realization_stats, sample_sinrs, simulate_batch, worker_count, write_samples)

__all__ = [
    "DEFAULT_REPS", "DEFAULT_SEED", "EVENTS", "SAMPLE_COLUMNS", "GeometryConfig", "McEstimate",
    "NetworkRealization", "RealizationBatch", "SinrSample", "backend_name", "cached_batch",
    "estimate", "estimate_from_batch", "event_indicators", "generate_realization",
    "numba_enabled", "realization_stats", "sample_sinrs", "simulate_batch", "worker_count",
    "write_samples",
]
