#!/usr/bin/env python3
"""
LDA: modelo generativo y muestreadores de Gibbs multicamino, parcialmente
colapsado (phi explícito) y colapsado. Contadores: C^TW y C^T suman todos
los caminos, C^DT es por camino.
"""

import logging
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from errors import ConfigError, ConsistencyError, DegenerateConditionalError, InvalidArgumentError
from prob_core import (
    Phase,
    RngLike,
    RngStream,
    _generator,
    as_simplex_rows,
    categorical_from_uniform,
    categorical_many,
    jit,
    log_dirichlet_multinomial,
    sample_dirichlet,
)

logger = logging.getLogger(__name__)

VARIANTS = ("pc", "collapsed")


class Corpus:
    """Flujo de tokens con límites de documento contiguos y años opcionales."""

    def __init__(
        self,
        tokens: Sequence[int],
        doc_of: Sequence[int],
        vocab: Sequence[str],
        doc_years: Optional[Sequence[Optional[int]]] = None,
    ):
        self.tokens = np.asarray(tokens, dtype=np.int64)
        self.doc_of = np.asarray(doc_of, dtype=np.int64)
        self.vocab = [str(v) for v in vocab]
        if self.tokens.ndim != 1 or self.tokens.shape != self.doc_of.shape:
            raise InvalidArgumentError("tokens and doc_of must be vectors of equal length")
        if self.tokens.size == 0:
            raise InvalidArgumentError("corpus has no tokens")
        if not self.vocab:
            raise InvalidArgumentError("vocabulary is empty")
        bad = np.flatnonzero((self.tokens < 0) | (self.tokens >= len(self.vocab)))
        if bad.size:
            raise InvalidArgumentError(f"token id out of range [0, {len(self.vocab)}) at token index {int(bad[0])}")
        steps = np.diff(self.doc_of)
        if self.doc_of[0] != 0 or np.any((steps != 0) & (steps != 1)):
            raise InvalidArgumentError("document ids must be contiguous 0..D-1 with contiguous token blocks")
        self.doc_starts = np.concatenate(([0], np.flatnonzero(steps) + 1, [self.tokens.size])).astype(np.int64)
        if doc_years is not None:
            years = [None if y is None else int(y) for y in doc_years]
            if len(years) != self.doc_count:
                raise InvalidArgumentError(f"doc_years has {len(years)} entries for {self.doc_count} documents")
            self.doc_years: Optional[List[Optional[int]]] = None if all(y is None for y in years) else years
        else:
            self.doc_years = None

    @classmethod
    def from_documents(
        cls,
        documents: Sequence[Sequence[int]],
        vocab: Sequence[str],
        doc_years: Optional[Sequence[Optional[int]]] = None,
    ) -> "Corpus":
        for d, doc in enumerate(documents):
            if len(doc) == 0:
                raise InvalidArgumentError(f"document {d} is empty")
        tokens = np.concatenate([np.asarray(doc, dtype=np.int64) for doc in documents]) if documents else []
        doc_of = np.repeat(np.arange(len(documents), dtype=np.int64), [len(doc) for doc in documents])
        return cls(tokens, doc_of, vocab, doc_years)

    @property
    def N(self) -> int:
        return int(self.tokens.size)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @property
    def doc_count(self) -> int:
        return int(self.doc_of[-1]) + 1

    @property
    def has_years(self) -> bool:
        return self.doc_years is not None and all(y is not None for y in self.doc_years)

    def document(self, d: int) -> np.ndarray:
        return self.tokens[self.doc_starts[d]:self.doc_starts[d + 1]]

    def documents(self) -> Iterator[np.ndarray]:
        for d in range(self.doc_count):
            yield self.document(d)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            np.array_equal(self.tokens, other.tokens)
            and np.array_equal(self.doc_of, other.doc_of)
            and self.vocab == other.vocab
            and self.doc_years == other.doc_years
        )


@dataclass
class TopicMatrix:
    topics: np.ndarray

    def __post_init__(self) -> None:
        self.topics = as_simplex_rows(self.topics, "topics")

    @property
    def T(self) -> int:
        return int(self.topics.shape[0])

    @property
    def W(self) -> int:
        return int(self.topics.shape[1])

    def to_dict(self, eta: Optional[float] = None) -> Dict[str, Any]:
        return {"T": self.T, "W": self.W, "eta": eta, "topics": self.topics.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TopicMatrix":
        try:
            tm = cls(np.asarray(data["topics"], dtype=np.float64))
        except KeyError as e:
            raise InvalidArgumentError(f"topic matrix missing field {e.args[0]}") from e
        if int(data.get("T", tm.T)) != tm.T or int(data.get("W", tm.W)) != tm.W:
            raise InvalidArgumentError("declared T/W disagree with array shape")
        return tm


@dataclass
class LdaPriors:
    eta: float = 0.01
    alpha: float = 1.0

    def __post_init__(self) -> None:
        for name in ("eta", "alpha"):
            v = float(getattr(self, name))
            if not v > 0 or not np.isfinite(v):
                raise InvalidArgumentError(f"{name} must be > 0, got {v}")
            setattr(self, name, v)

    @classmethod
    def corpus_defaults(cls, topics: int) -> "LdaPriors":
        # eta = 0.01 y alpha = 10/T para corpus reales
        return cls(eta=0.01, alpha=10.0 / topics)


@dataclass
class LdaCounters:
    topic_word: np.ndarray
    topic_total: np.ndarray
    doc_topic: np.ndarray
    doc_total: np.ndarray

    @property
    def T(self) -> int:
        return int(self.topic_word.shape[0])

    @property
    def m(self) -> int:
        return int(self.doc_topic.shape[0])

    def equals(self, other: "LdaCounters") -> bool:
        return all(
            np.array_equal(a, b)
            for a, b in (
                (self.topic_word, other.topic_word),
                (self.topic_total, other.topic_total),
                (self.doc_topic, other.doc_topic),
                (self.doc_total, other.doc_total),
            )
        )

    def check_invariants(self, n: int) -> None:
        if not np.array_equal(self.topic_total, self.topic_word.sum(axis=1)):
            raise ConsistencyError("C^T differs from the row sums of C^TW")
        if not np.array_equal(self.doc_topic.sum(axis=2), np.broadcast_to(self.doc_total, self.doc_topic.shape[:2])):
            raise ConsistencyError("C^DT rows do not sum to C^D")
        if int(self.topic_word.sum()) != self.m * n:
            raise ConsistencyError(f"C^TW total {int(self.topic_word.sum())} != m*N = {self.m * n}")


def as_assignments(assignments: Any, n: int, topics: int) -> np.ndarray:
    arr = np.asarray(assignments, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise InvalidArgumentError("assignments must be a non-empty (m, N) array")
    if arr.shape[1] != n:
        raise InvalidArgumentError(f"assignments have length {arr.shape[1]}, corpus has {n} tokens")
    if np.any(arr < 0) or np.any(arr >= topics):
        raise InvalidArgumentError(f"topic ids must lie in [0, {topics})")
    return arr


def lda_counters_from_paths(assignments: Any, corpus: Corpus, topics: int) -> LdaCounters:
    z = as_assignments(assignments, corpus.N, topics)
    m = z.shape[0]
    topic_word = np.zeros((topics, corpus.vocab_size), dtype=np.int64)
    np.add.at(topic_word, (z.ravel(), np.tile(corpus.tokens, m)), 1)
    doc_topic = np.zeros((m, corpus.doc_count, topics), dtype=np.int64)
    np.add.at(doc_topic, (np.repeat(np.arange(m), corpus.N), np.tile(corpus.doc_of, m), z.ravel()), 1)
    doc_total = np.bincount(corpus.doc_of, minlength=corpus.doc_count).astype(np.int64)
    return LdaCounters(topic_word, topic_word.sum(axis=1), doc_topic, doc_total)


# -------- kernels --------

@jit
def _emit_words(topics, z, u, out):
    for n in range(z.shape[0]):
        out[n] = categorical_from_uniform(topics[z[n]], u[n])


@jit
def _pc_weights(topics, doc_topic_row, w, alpha, out):
    for t in range(out.shape[0]):
        out[t] = topics[t, w] * (doc_topic_row[t] + alpha)


@jit
def _collapsed_weights(topic_word, topic_total, doc_topic_row, w, eta, alpha, out):
    w_eta = topic_word.shape[1] * eta
    for t in range(out.shape[0]):
        out[t] = (topic_word[t, w] + eta) / (topic_total[t] + w_eta) * (doc_topic_row[t] + alpha)


@jit
def _collapsed_sweep(assign, tokens, doc_of, topic_word, topic_total, doc_topic, eta, alpha, uniforms, weights):
    m = assign.shape[0]
    n = assign.shape[1]
    for j in range(m):
        for i in range(n):
            w = tokens[i]
            d = doc_of[i]
            s = assign[j, i]
            topic_word[s, w] -= 1
            topic_total[s] -= 1
            doc_topic[j, d, s] -= 1
            _collapsed_weights(topic_word, topic_total, doc_topic[j, d], w, eta, alpha, weights)
            t = categorical_from_uniform(weights, uniforms[j, i])
            if t < 0:
                topic_word[s, w] += 1
                topic_total[s] += 1
                doc_topic[j, d, s] += 1
                return j * n + i
            assign[j, i] = t
            topic_word[t, w] += 1
            topic_total[t] += 1
            doc_topic[j, d, t] += 1
    return -1


@jit
def _pc_sweep_path(assign_row, tokens, doc_of, topics, doc_topic_path, alpha, uniforms, weights):
    for i in range(assign_row.shape[0]):
        w = tokens[i]
        d = doc_of[i]
        s = assign_row[i]
        doc_topic_path[d, s] -= 1
        _pc_weights(topics, doc_topic_path[d], w, alpha, weights)
        t = categorical_from_uniform(weights, uniforms[i])
        if t < 0:
            doc_topic_path[d, s] += 1
            return i
        assign_row[i] = t
        doc_topic_path[d, t] += 1
    return -1


@jit
def _merge_topic_word(old, new, tokens, topic_word, topic_total):
    for j in range(old.shape[0]):
        for i in range(old.shape[1]):
            s = old[j, i]
            t = new[j, i]
            if s != t:
                w = tokens[i]
                topic_word[s, w] -= 1
                topic_total[s] -= 1
                topic_word[t, w] += 1
                topic_total[t] += 1


# -------- operaciones --------

def lda_generate(
    topics: TopicMatrix,
    alpha: float,
    d: int,
    doc_len: int,
    rng: RngLike,
    vocab: Optional[Sequence[str]] = None,
    doc_years: Optional[Sequence[Optional[int]]] = None,
) -> Tuple[Corpus, np.ndarray]:
    if int(d) < 1 or int(doc_len) < 1:
        raise InvalidArgumentError(f"need d >= 1 and doc_len >= 1, got d={d}, doc_len={doc_len}")
    if not float(alpha) > 0:
        raise InvalidArgumentError(f"alpha must be > 0, got {alpha}")
    gen = _generator(rng)
    d, doc_len = int(d), int(doc_len)
    z = np.empty(d * doc_len, dtype=np.int64)
    for doc in range(d):
        theta = sample_dirichlet(np.full(topics.T, float(alpha)), gen)
        categorical_many(theta, gen.random(doc_len), z[doc * doc_len:(doc + 1) * doc_len])
    words = np.empty_like(z)
    _emit_words(topics.topics, z, gen.random(z.size), words)
    if vocab is None:
        width = len(str(topics.W - 1))
        vocab = [f"w{k:0{width}d}" for k in range(topics.W)]
    elif len(vocab) != topics.W:
        raise InvalidArgumentError(f"vocab has {len(vocab)} entries, topics cover {topics.W} words")
    doc_of = np.repeat(np.arange(d, dtype=np.int64), doc_len)
    return Corpus(words, doc_of, vocab, doc_years), z


def lda_sample_topics(counters: LdaCounters, eta: float, rng: RngLike) -> TopicMatrix:
    gen = _generator(rng)
    return TopicMatrix(np.stack([sample_dirichlet(float(eta) + row, gen) for row in counters.topic_word]))


def posterior_mean_topics(counters: LdaCounters, eta: float) -> TopicMatrix:
    tw = counters.topic_word.astype(np.float64) + float(eta)
    return TopicMatrix(tw / tw.sum(axis=1, keepdims=True))


def _check_site(counters: LdaCounters, j: int, d: int, w: int) -> None:
    if not 0 <= j < counters.m:
        raise InvalidArgumentError(f"path {j} out of range [0, {counters.m})")
    if not 0 <= d < counters.doc_topic.shape[1]:
        raise InvalidArgumentError(f"document {d} out of range")
    if not 0 <= w < counters.topic_word.shape[1]:
        raise InvalidArgumentError(f"word id {w} out of range")


def lda_pc_site_weights(topics: TopicMatrix, counters: LdaCounters, j: int, d: int, w: int, alpha: float) -> np.ndarray:
    _check_site(counters, j, d, w)
    out = np.empty(topics.T)
    _pc_weights(topics.topics, counters.doc_topic[j, d], int(w), float(alpha), out)
    if not out.sum() > 0:
        raise DegenerateConditionalError(f"all topics have zero weight for word {w} in document {d}", path=int(j))
    return out


def lda_collapsed_site_weights(counters: LdaCounters, j: int, d: int, w: int, priors: LdaPriors) -> np.ndarray:
    _check_site(counters, j, d, w)
    out = np.empty(counters.T)
    _collapsed_weights(counters.topic_word, counters.topic_total, counters.doc_topic[j, d], int(w), priors.eta, priors.alpha, out)
    if not out.sum() > 0:
        raise DegenerateConditionalError(f"all topics have zero weight for word {w} in document {d}", path=int(j))
    return out


def lda_log_joint_collapsed(pathset: Any, corpus: Corpus, priors: LdaPriors, topics: int) -> float:
    c = lda_counters_from_paths(pathset, corpus, topics)
    return (
        log_dirichlet_multinomial(c.topic_word, priors.eta)
        + log_dirichlet_multinomial(c.doc_topic.reshape(-1, topics), priors.alpha)
    )


def theta_doc(pathset: Any, corpus: Corpus, d: int, path_choice: int = 0, topics: Optional[int] = None) -> np.ndarray:
    """Frecuencia empírica de temas del documento d según el camino elegido (por defecto el primero)."""
    z = np.asarray(pathset, dtype=np.int64)
    if z.ndim == 1:
        z = z[None, :]
    if not 0 <= d < corpus.doc_count:
        raise InvalidArgumentError(f"document {d} out of range [0, {corpus.doc_count})")
    if not 0 <= path_choice < z.shape[0]:
        raise InvalidArgumentError(f"path {path_choice} out of range [0, {z.shape[0]})")
    return theta_matrix(z, corpus, path_choice, topics)[d]


def theta_matrix(pathset: Any, corpus: Corpus, path_choice: int = 0, topics: Optional[int] = None) -> np.ndarray:
    z = np.asarray(pathset, dtype=np.int64)
    if z.ndim == 1:
        z = z[None, :]
    t = int(z.max()) + 1 if topics is None else int(topics)
    row = as_assignments(z, corpus.N, t)[path_choice]
    counts = np.zeros((corpus.doc_count, t), dtype=np.float64)
    np.add.at(counts, (corpus.doc_of, row), 1.0)
    sizes = counts.sum(axis=1, keepdims=True)
    if np.any(sizes == 0):
        raise InvalidArgumentError(f"document {int(np.flatnonzero(sizes[:, 0] == 0)[0])} is empty")
    return counts / sizes


# -------- muestreadores --------

class _LdaSamplerBase:
    def __init__(
        self,
        corpus: Corpus,
        topics: int,
        m: int,
        priors: LdaPriors,
        rng: RngStream,
        stream_ids: Optional[Sequence[int]] = None,
    ):
        if int(m) < 1 or int(topics) < 1:
            raise InvalidArgumentError(f"need m >= 1 and T >= 1, got m={m}, T={topics}")
        self.corpus = corpus
        self.T = int(topics)
        self.m = int(m)
        self.priors = priors
        self.rng = rng
        self.stream_ids = list(range(self.m)) if stream_ids is None else [int(x) for x in stream_ids]
        if len(self.stream_ids) != self.m:
            raise InvalidArgumentError("stream_ids must have one entry per path")
        # asignaciones iniciales uniformes, un flujo INIT por camino
        self.assignments = np.stack([
            rng.derive(path=sid, phase=Phase.INIT).gen.integers(0, self.T, corpus.N, dtype=np.int64)
            for sid in self.stream_ids
        ])
        self._sweep_streams = [rng.derive(path=sid, phase=Phase.SWEEP) for sid in self.stream_ids]
        c = lda_counters_from_paths(self.assignments, corpus, self.T)
        self.topic_word = c.topic_word
        self.topic_total = c.topic_total
        self.doc_topic = c.doc_topic
        self.doc_total = c.doc_total
        self.sweeps = 0

    @property
    def counters(self) -> LdaCounters:
        return LdaCounters(self.topic_word.copy(), self.topic_total.copy(), self.doc_topic.copy(), self.doc_total.copy())

    def rebuilt_counters(self) -> LdaCounters:
        return lda_counters_from_paths(self.assignments, self.corpus, self.T)

    def _uniforms(self) -> np.ndarray:
        return np.stack([stream.uniforms(self.corpus.N) for stream in self._sweep_streams])

    def log_joint(self) -> float:
        return (
            log_dirichlet_multinomial(self.topic_word, self.priors.eta)
            + log_dirichlet_multinomial(self.doc_topic.reshape(-1, self.T), self.priors.alpha)
        )


class LdaPcSampler(_LdaSamplerBase):
    """Muestreo de temas beta_t desde C^TW agregado, luego cada camino dado beta."""

    def __init__(self, *args: Any, executor: Optional[Executor] = None, param_stream: int = 0, **kwargs: Any):
        super().__init__(*args, **kwargs)
        self._param_stream = self.rng.derive(path=param_stream, phase=Phase.PARAMS)
        self.executor = executor
        self.topics: Optional[TopicMatrix] = None

    def _sweep_path(self, j: int, topics: TopicMatrix, uniforms: np.ndarray) -> int:
        weights = np.empty(self.T)
        return int(_pc_sweep_path(
            self.assignments[j], self.corpus.tokens, self.corpus.doc_of, topics.topics,
            self.doc_topic[j], self.priors.alpha, uniforms, weights,
        ))

    def sweep(self) -> None:
        topics = lda_sample_topics(self.counters, self.priors.eta, self._param_stream)
        self.topics = topics
        uniforms = self._uniforms()
        old = self.assignments.copy()
        if self.executor is not None and self.m > 1:
            failures = list(self.executor.map(lambda j: self._sweep_path(j, topics, uniforms[j]), range(self.m)))
        else:
            failures = [self._sweep_path(j, topics, uniforms[j]) for j in range(self.m)]
        for j, site in enumerate(failures):
            if site >= 0:
                raise DegenerateConditionalError(f"all topics have zero weight at site ({j}, {site})", path=j, site=site)
        _merge_topic_word(old, self.assignments, self.corpus.tokens, self.topic_word, self.topic_total)
        self.sweeps += 1

    def point_estimate(self) -> TopicMatrix:
        if self.topics is None:
            return posterior_mean_topics(self.counters, self.priors.eta)
        return self.topics


class LdaCollapsedSampler(_LdaSamplerBase):
    def sweep(self) -> None:
        weights = np.empty(self.T)
        failed = int(_collapsed_sweep(
            self.assignments, self.corpus.tokens, self.corpus.doc_of, self.topic_word, self.topic_total,
            self.doc_topic, self.priors.eta, self.priors.alpha, self._uniforms(), weights,
        ))
        if failed >= 0:
            j, i = divmod(failed, self.corpus.N)
            raise DegenerateConditionalError(f"all topics have zero weight at site ({j}, {i})", path=j, site=i)
        self.sweeps += 1

    def point_estimate(self) -> TopicMatrix:
        return posterior_mean_topics(self.counters, self.priors.eta)


@dataclass
class LdaSamplerConfig:
    variant: str = "collapsed"
    topics: int = 10
    m: int = 1
    iterations: int = 100
    cadence: int = 100
    seed: int = 0
    run: int = 0
    threads: int = 1
    priors: LdaPriors = field(default_factory=LdaPriors)
    path_choice: int = 0

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError("variant", f"must be one of {VARIANTS}, got {self.variant!r}")
        for name in ("topics", "m", "iterations", "cadence", "threads"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(name, f"must be >= 1, got {getattr(self, name)}")
        if not 0 <= self.path_choice < self.m:
            raise ConfigError("path_choice", f"must lie in [0, {self.m})")


@dataclass
class LdaRunResult:
    topics: TopicMatrix
    assignments: np.ndarray
    counters: LdaCounters
    theta: np.ndarray
    trace: List[Tuple[int, float]]


def make_lda_sampler(config: LdaSamplerConfig, corpus: Corpus, executor: Optional[Executor] = None):
    rng = RngStream(config.seed, (config.run, 0, Phase.INIT))
    args = (corpus, config.topics, config.m, config.priors, rng)
    if config.variant == "pc":
        return LdaPcSampler(*args, executor=executor)
    return LdaCollapsedSampler(*args)


def run_lda_sampler(config: LdaSamplerConfig, corpus: Corpus) -> LdaRunResult:
    executor = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 and config.variant == "pc" else None
    try:
        sampler = make_lda_sampler(config, corpus, executor=executor)
        trace = [(0, sampler.log_joint())]
        for it in range(1, config.iterations + 1):
            sampler.sweep()
            if it % config.cadence == 0:
                lj = sampler.log_joint()
                trace.append((it, lj))
                logger.debug(f"lda {config.variant} m={config.m} run={config.run} iter={it} log_joint={lj:.6f}")
    finally:
        if executor is not None:
            executor.shutdown()
    theta = theta_matrix(sampler.assignments, corpus, config.path_choice, config.topics)
    return LdaRunResult(sampler.point_estimate(), sampler.assignments.copy(), sampler.counters, theta, trace)
