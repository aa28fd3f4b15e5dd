#!/usr/bin/env python3
"""
Métricas de evaluación: distancia de reconstrucción (disc), distribuciones
anuales de temas, entropía anual, buckets de cuantiles e histogramas ponderados.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from errors import InvalidArgumentError
from hmm_engine import HmmParams, baum_welch, forward_log_likelihood, random_params
from prob_core import SIMPLEX_TOL, Phase, RngStream, entropy

WEIGHTINGS = ("none", "by-topic-weight")


@dataclass
class YearTopicTable:
    years: np.ndarray
    theta_y: np.ndarray

    @property
    def T(self) -> int:
        return int(self.theta_y.shape[1])

    def _check_topic(self, t: int) -> None:
        if not 0 <= int(t) < self.T:
            raise InvalidArgumentError(f"topic {t} out of range [0, {self.T})")


@dataclass
class BucketSet:
    topic: int
    gamma: float
    bucket_lengths: np.ndarray


@dataclass
class BucketHistogram:
    lengths: np.ndarray
    mass: np.ndarray
    total_buckets: int

    @property
    def mean_length(self) -> float:
        return float((self.lengths * self.mass).sum() / self.mass.sum())


def _matrix(topics: Any) -> np.ndarray:
    arr = getattr(topics, "topics", topics)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise InvalidArgumentError("expected a non-empty (T, W) topic matrix")
    return arr


def _l1_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[1]:
        raise InvalidArgumentError(f"vocabulary sizes differ: {a.shape[1]} vs {b.shape[1]}")
    return np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)


def disc(ground: Any, learned: Any) -> float:
    dist = _l1_distances(_matrix(ground), _matrix(learned))
    return float(dist.min(axis=1).mean())


def closest_topics(reference: Any, other: Any) -> Tuple[np.ndarray, np.ndarray]:
    """Para cada tema de referencia: índice y distancia L1 del tema más cercano (empates -> índice menor)."""
    dist = _l1_distances(_matrix(reference), _matrix(other))
    idx = dist.argmin(axis=1)
    return idx, dist[np.arange(dist.shape[0]), idx]


def top_words(topic: Sequence[float], k: int, vocab: Sequence[str]) -> List[Tuple[str, float]]:
    row = np.asarray(topic, dtype=np.float64)
    if row.shape[0] != len(vocab):
        raise InvalidArgumentError(f"topic has {row.shape[0]} entries, vocabulary has {len(vocab)}")
    order = np.argsort(-row, kind="stable")[: int(k)]
    return [(vocab[i], float(row[i])) for i in order]


def yearly_topic_table(doc_thetas: Any, doc_years: Sequence[Optional[int]]) -> YearTopicTable:
    thetas = np.asarray(doc_thetas, dtype=np.float64)
    if thetas.ndim != 2 or thetas.shape[0] != len(doc_years):
        raise InvalidArgumentError(f"got {thetas.shape[0] if thetas.ndim == 2 else '?'} document thetas for {len(doc_years)} years")
    if any(y is None for y in doc_years):
        raise InvalidArgumentError("every document needs a year stamp for yearly metrics")
    if np.any(np.abs(thetas.sum(axis=1) - 1.0) > SIMPLEX_TOL) or np.any(thetas < 0):
        raise InvalidArgumentError("document thetas must be probability vectors")
    years = np.asarray(doc_years, dtype=np.int64)
    uniq, inverse = np.unique(years, return_inverse=True)
    sums = np.zeros((uniq.size, thetas.shape[1]))
    np.add.at(sums, inverse, thetas)
    sizes = np.bincount(inverse, minlength=uniq.size)
    return YearTopicTable(uniq, sums / sizes[:, None])


def yearly_entropy_curve(table: YearTopicTable) -> List[Tuple[int, float]]:
    return [(int(y), entropy(row / row.sum())) for y, row in zip(table.years, table.theta_y)]


def topic_weight_series(table: YearTopicTable, t: int) -> List[Tuple[int, float]]:
    table._check_topic(t)
    return [(int(y), float(v)) for y, v in zip(table.years, table.theta_y[:, int(t)])]


def total_topic_weight(table: YearTopicTable, t: int) -> float:
    table._check_topic(t)
    return float(table.theta_y[:, int(t)].sum())


def ranked_topic_totals(table: YearTopicTable) -> List[Tuple[int, float]]:
    """(tema, w_t) de mayor a menor peso total; empates -> índice menor."""
    totals = table.theta_y.sum(axis=0)
    order = np.argsort(-totals, kind="stable")
    return [(int(t), float(totals[t])) for t in order]


def topic_bucket_sets(table: YearTopicTable, gamma: float) -> List[BucketSet]:
    return [quantile_buckets(topic_weight_series(table, t), gamma, t)
            for t in range(table.T) if total_topic_weight(table, t) > 0]


def bucket_count(gamma: float) -> int:
    return int(math.floor(1.0 / gamma + 1e-9))


def quantile_buckets(series: Iterable[Tuple[int, float]], gamma: float, topic: int = -1) -> BucketSet:
    if not 0 < gamma < 1:
        raise InvalidArgumentError(f"gamma must lie in (0, 1), got {gamma}")
    pairs = sorted((int(y), float(v)) for y, v in series)
    if not pairs:
        raise InvalidArgumentError("weight series is empty")
    years = [y for y, _ in pairs]
    weights = np.asarray([v for _, v in pairs])
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise InvalidArgumentError("weights must be finite and non-negative")
    total = float(weights.sum())
    if not total > 0:
        raise InvalidArgumentError(f"topic {topic} has zero total weight")

    nb = bucket_count(gamma)
    eps = 1e-9 * total
    lengths: List[int] = []
    start: Optional[int] = None
    cum = 0.0
    k = 0
    for year, wt in zip(years, weights):
        if k >= nb:
            break
        if start is None and wt > 0:
            start = year
        cum += wt
        closed = 0
        while k < nb and cum >= (k + 1) * gamma * total - eps:
            if closed == 0:
                first = start if start is not None else year
                lengths.append(year - first + 1)
            else:
                # un año que cruza varias fronteras cierra buckets de longitud 1
                lengths.append(1)
            closed += 1
            k += 1
        if closed:
            start = None
    while k < nb:
        lengths.append(1)
        k += 1
    return BucketSet(int(topic), float(gamma), np.asarray(lengths, dtype=np.int64))


def bucket_histogram(tables: Sequence[YearTopicTable], gamma: float, weighting: str = "none") -> BucketHistogram:
    if weighting not in WEIGHTINGS:
        raise InvalidArgumentError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")
    if isinstance(tables, YearTopicTable):
        tables = [tables]
    lengths: List[np.ndarray] = []
    topic_weights: List[float] = []
    for table in tables:
        for buckets in topic_bucket_sets(table, gamma):
            lengths.append(buckets.bucket_lengths)
            topic_weights.append(total_topic_weight(table, buckets.topic))
    if not lengths:
        raise InvalidArgumentError("no topic carries positive weight")
    flat = np.concatenate(lengths)
    count = flat.size
    if weighting == "none":
        per_bucket = np.ones(count)
    else:
        raw = np.concatenate([np.full(b.size, w) for b, w in zip(lengths, topic_weights)])
        per_bucket = raw * (count / raw.sum())
    mass = np.bincount(flat, weights=per_bucket)[1:]
    return BucketHistogram(np.arange(1, mass.size + 1, dtype=np.int64), mass, int(count))


def disc_table(entries: Iterable[Tuple[int, int, float]]) -> Tuple[List[int], List[int], np.ndarray]:
    """Media de disc por (m, docs); las celdas sin datos quedan en NaN."""
    groups: Dict[Tuple[int, int], List[float]] = {}
    for m, docs, value in entries:
        groups.setdefault((int(m), int(docs)), []).append(float(value))
    ms = sorted({k[0] for k in groups})
    docs = sorted({k[1] for k in groups})
    grid = np.full((len(ms), len(docs)), np.nan)
    for (m, d), values in groups.items():
        grid[ms.index(m), docs.index(d)] = float(np.mean(values))
    return ms, docs, grid


def ground_truth_log_likelihood(params: HmmParams, w: Sequence[int]) -> float:
    """Log-verosimilitud de los datos bajo los parámetros generadores (línea de referencia)."""
    return forward_log_likelihood(params, w)


def baum_welch_baseline(
    w: Sequence[int],
    states: int,
    alphabet: int,
    seed: int,
    restarts: int = 1,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> Tuple[HmmParams, List[float]]:
    """Mejor Baum-Welch entre `restarts` inicializaciones Dir(1); cada reinicio usa su propio stream."""
    if int(restarts) < 1:
        raise InvalidArgumentError(f"restarts must be >= 1, got {restarts}")
    best: Optional[Tuple[HmmParams, List[float]]] = None
    for r in range(int(restarts)):
        init = random_params(states, alphabet, RngStream(seed, (r, 0, Phase.BASELINE)))
        params, trace = baum_welch(w, states, alphabet, init, max_iters=max_iters, tol=tol)
        if best is None or trace[-1] > best[1][-1]:
            best = (params, trace)
    return best
