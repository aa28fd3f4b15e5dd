#!/usr/bin/env python3
from prometheus_client import REGISTRY, Counter, Histogram, write_to_textfile

# Métricas básicas del harness
TOOL_REQUESTS_TOTAL = Counter(
    "multipath_tool_requests_total",
    "Total de solicitudes al harness",
    labelnames=["tool"],
)

TOOL_ERRORS_TOTAL = Counter(
    "multipath_tool_errors_total",
    "Total de errores del harness",
    labelnames=["tool"],
)

TOOL_DURATION_MS = Histogram(
    "multipath_tool_duration_ms",
    "Duración de cada herramienta en milisegundos",
    labelnames=["tool"],
    buckets=[5, 10, 25, 50, 100, 250, 500, 1000, 2500, 5000, 10000, 60000, 600000],
)

# Métricas de los muestreadores
SWEEPS_TOTAL = Counter(
    "multipath_sweeps_total",
    "Barridos completos del muestreador",
    labelnames=["model", "variant"],
)

REPETITION_DURATION_MS = Histogram(
    "multipath_repetition_duration_ms",
    "Duración de cada repetición en milisegundos",
    labelnames=["model", "variant"],
    buckets=[10, 100, 1000, 10000, 60000, 600000, 3600000],
)


def export_metrics(path: str) -> None:
    write_to_textfile(path, REGISTRY)
