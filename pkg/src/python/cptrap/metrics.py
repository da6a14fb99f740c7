"""
CPTrap - Prometheus Metrics Module

Exports the following metrics:
- cptrap_quadrature_evaluations_total: Integrals evaluated, by part (resonant / principal)
- cptrap_quadrature_error_estimate: Distribution of principal-value error estimates
- cptrap_integrator_steps_total: Fixed RK4 steps taken
- cptrap_stationary_classifications_total: Stationary-set classifications, by kind
- cptrap_run_seconds: Wall time per CLI subcommand
"""

import logging
from functools import wraps

from prometheus_client import (
    Counter,
    Histogram,
    push_to_gateway,
    REGISTRY,
)

logger = logging.getLogger(__name__)

# =============================================================================
# Metric Definitions
# =============================================================================

QUADRATURE_EVALUATIONS = Counter(
    'cptrap_quadrature_evaluations_total',
    'Number of susceptivity integrals evaluated',
    ['part']  # 'resonant', 'principal'
)

QUADRATURE_ERROR = Histogram(
    'cptrap_quadrature_error_estimate',
    'Absolute error estimates reported by principal-value quadrature',
    buckets=(1e-15, 1e-13, 1e-11, 1e-10, 1e-9, 1e-8, 1e-6)
)

INTEGRATOR_STEPS = Counter(
    'cptrap_integrator_steps_total',
    'Total fixed-step RK4 steps taken'
)

STATIONARY_CLASSIFICATIONS = Counter(
    'cptrap_stationary_classifications_total',
    'Stationary-set classifications produced by the nullspace solver',
    ['kind']  # 'unique', 'family', 'oscillatory', 'frozen'
)

RUN_LATENCY = Histogram(
    'cptrap_run_seconds',
    'Time spent per CLI subcommand',
    ['subcommand'],
    buckets=(0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 15.0, 60.0)
)


# =============================================================================
# Metric Recording Functions
# =============================================================================

def record_quadrature(part: str, error_estimate: float = 0.0):
    """Record one evaluated integral and, for principal parts, its error estimate."""
    QUADRATURE_EVALUATIONS.labels(part=part).inc()
    if part == "principal":
        QUADRATURE_ERROR.observe(error_estimate)


def record_integrator_steps(steps: int):
    INTEGRATOR_STEPS.inc(steps)


def record_classification(kind: str):
    STATIONARY_CLASSIFICATIONS.labels(kind=kind).inc()


# =============================================================================
# Decorator for Automatic Latency Tracking
# =============================================================================

def track_latency(subcommand: str):
    """Decorator timing a CLI handler under the given subcommand label."""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            with RUN_LATENCY.labels(subcommand=subcommand).time():
                return func(*args, **kwargs)
        return wrapper
    return decorator


def push_metrics(gateway: str, job: str = "cptrap"):
    """
    Push metrics to a Prometheus PushGateway.

    Args:
        gateway: PushGateway address (e.g., 'localhost:9091')
        job: Job name for grouping metrics
    """
    try:
        push_to_gateway(gateway, job=job, registry=REGISTRY)
        logger.debug(f"Pushed metrics to {gateway}")
    except Exception as e:
        logger.error(f"Failed to push metrics: {e}")


# =============================================================================
# Convenience: Get Current Metrics as Dict (for Testing)
# =============================================================================

def get_current_metrics() -> dict:
    """Current metric values as a plain dict."""
    return {
        "quadrature": {
            part: QUADRATURE_EVALUATIONS.labels(part=part)._value.get()
            for part in ["resonant", "principal"]
        },
        "integrator_steps": INTEGRATOR_STEPS._value.get(),
        "classifications": {
            kind: STATIONARY_CLASSIFICATIONS.labels(kind=kind)._value.get()
            for kind in ["unique", "family", "oscillatory", "frozen"]
        },
    }
