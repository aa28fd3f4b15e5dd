#!/usr/bin/env python3
"""
Generadores sintéticos (HMM difícil, temas en bandas) y formatos de archivo:
corpus JSONL + vocabulario, parámetros HMM/temas en JSON, observaciones en
texto o binario, metadatos y digest de datasets.
"""

import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import CorpusFormatError, InvalidArgumentError
from hmm_engine import HmmParams, as_observations, hmm_generate
from lda_engine import Corpus, TopicMatrix, lda_generate
from prob_core import Phase, RngStream, sample_dirichlet

logger = logging.getLogger(__name__)

OBSERVATION_FORMATS = ("text", "binary")
MAX_EMISSION_ATTEMPTS = 100_000


@dataclass
class SynthHmmSpec:
    n: int = 200_000
    seed: int = 0
    states: int = 2
    alphabet: int = 10
    switch_prob: float = 0.45
    l1_min: float = 0.3
    l1_max: float = 0.7

    def __post_init__(self) -> None:
        if int(self.n) < 1:
            raise InvalidArgumentError(f"n must be >= 1, got {self.n}")
        if int(self.states) != 2:
            raise InvalidArgumentError("the hard HMM has exactly 2 states")
        if int(self.alphabet) < 2:
            raise InvalidArgumentError("alphabet must have at least 2 symbols")
        if not 0 < self.switch_prob < 1:
            raise InvalidArgumentError(f"switch_prob must lie in (0, 1), got {self.switch_prob}")
        if not 0 <= self.l1_min < self.l1_max <= 2:
            raise InvalidArgumentError("emission L1 range must satisfy 0 <= l1_min < l1_max <= 2")


@dataclass
class SynthLdaSpec:
    docs: int = 1500
    seed: int = 0
    topics: int = 10
    vocab: int = 100
    doc_len: int = 10
    alpha: float = 1.0
    band_weight: float = 0.95
    year_span: Optional[Tuple[int, int]] = None

    def __post_init__(self) -> None:
        if int(self.docs) < 1 or int(self.doc_len) < 1:
            raise InvalidArgumentError("docs and doc_len must be >= 1")
        if not 0 < self.band_weight < 1:
            raise InvalidArgumentError(f"band_weight must lie in (0, 1), got {self.band_weight}")
        if self.year_span is not None:
            first, last = (int(x) for x in self.year_span)
            if last < first:
                raise InvalidArgumentError(f"year_span must be ascending, got {self.year_span}")
            self.year_span = (first, last)


# -------- generadores --------

def make_band_topics(t: int, w: int, band_weight: float = 0.95) -> TopicMatrix:
    if not 0 < band_weight < 1:
        raise InvalidArgumentError(f"band_weight must lie in (0, 1), got {band_weight}")
    w = int(w)
    rows = []
    for lo, hi in band_support(t, w):
        band = np.zeros(w)
        band[lo:hi + 1] = 1.0 / (hi - lo + 1)
        rows.append(band_weight * band + (1.0 - band_weight) / w)
    return TopicMatrix(np.stack(rows))


def band_support(t: int, w: int) -> List[Tuple[int, int]]:
    if int(t) < 2 or int(w) < int(t):
        raise InvalidArgumentError(f"need t >= 2 and w >= t, got t={t}, w={w}")
    t, w = int(t), int(w)
    # redondeo half-up: centros equiespaciados, semiancho round(w/t)
    half = int(math.floor(w / t + 0.5))
    out = []
    for k in range(t):
        center = int(math.floor((w - 1) * k / (t - 1) + 0.5))
        out.append((max(0, center - half), min(w - 1, center + half)))
    return out


def hard_hmm_emissions(spec: SynthHmmSpec) -> Tuple[np.ndarray, int]:
    """Emisiones Dir(1) por rechazo hasta que la distancia L1 cae en [l1_min, l1_max]."""
    gen = RngStream(spec.seed, (0, 0, Phase.EMISSIONS)).gen
    ones = np.ones(spec.alphabet)
    for attempt in range(1, MAX_EMISSION_ATTEMPTS + 1):
        e = np.stack([sample_dirichlet(ones, gen) for _ in range(spec.states)])
        dist = float(np.abs(e[0] - e[1]).sum())
        if spec.l1_min <= dist <= spec.l1_max:
            return e, attempt
    raise InvalidArgumentError(
        f"no emission pair with L1 distance in [{spec.l1_min}, {spec.l1_max}] after {MAX_EMISSION_ATTEMPTS} draws"
    )


def make_hard_hmm(spec: SynthHmmSpec) -> Tuple[HmmParams, np.ndarray]:
    emissions, _ = hard_hmm_emissions(spec)
    p = spec.switch_prob
    params = HmmParams(
        np.full(2, 0.5),
        np.array([[1.0 - p, p], [p, 1.0 - p]]),
        emissions,
    )
    _, obs = hmm_generate(params, spec.n, RngStream(spec.seed, (0, 0, Phase.GENERATE)))
    return params, obs


def spread_years(docs: int, year_span: Tuple[int, int]) -> List[int]:
    first, last = year_span
    span = last - first + 1
    return [first + (d * span) // docs for d in range(docs)]


def make_lda_dataset(spec: SynthLdaSpec) -> Tuple[TopicMatrix, Corpus, np.ndarray]:
    topics = make_band_topics(spec.topics, spec.vocab, spec.band_weight)
    years = spread_years(spec.docs, spec.year_span) if spec.year_span else None
    corpus, z = lda_generate(
        topics, spec.alpha, spec.docs, spec.doc_len, RngStream(spec.seed, (0, 0, Phase.GENERATE)), doc_years=years,
    )
    return topics, corpus, z


# -------- formatos --------

def _ensure_parent(path: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)


def _dump_json(data: Any, path: str) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def _load_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e


def default_vocab_path(corpus_path: str) -> str:
    return os.path.join(os.path.dirname(corpus_path) or ".", "vocab.txt")


def save_corpus(corpus: Corpus, path: str, vocab_path: Optional[str] = None) -> None:
    vocab_path = vocab_path or default_vocab_path(path)
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        for d, doc in enumerate(corpus.documents()):
            year = corpus.doc_years[d] if corpus.doc_years is not None else None
            f.write(json.dumps({"id": d, "year": year, "tokens": doc.tolist()}) + "\n")
    _ensure_parent(vocab_path)
    with open(vocab_path, "w", encoding="utf-8") as f:
        for word in corpus.vocab:
            f.write(word + "\n")


def load_vocab(path: str) -> List[str]:
    with open(path, "r", encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def load_corpus(path: str, vocab_path: Optional[str] = None) -> Corpus:
    vocab = load_vocab(vocab_path or default_vocab_path(path))
    if not vocab:
        raise CorpusFormatError(f"{vocab_path or default_vocab_path(path)}: vocabulary is empty")
    w = len(vocab)
    documents: List[List[int]] = []
    years: List[Optional[int]] = []
    offset = 0
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusFormatError(f"{path}: malformed JSON ({e.msg})", line=lineno) from e
            if not isinstance(rec, dict) or "tokens" not in rec or "id" not in rec:
                raise CorpusFormatError(f"{path}: record needs 'id' and 'tokens'", line=lineno)
            doc_id = rec["id"]
            if not isinstance(doc_id, int) or doc_id != len(documents):
                raise CorpusFormatError(f"{path}: non-contiguous document id {doc_id!r}, expected {len(documents)}", line=lineno)
            tokens = rec["tokens"]
            if not isinstance(tokens, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in tokens):
                raise CorpusFormatError(f"{path}: tokens must be a list of integers", line=lineno, doc_id=doc_id)
            if not tokens:
                raise CorpusFormatError(f"{path}: empty document", line=lineno, doc_id=doc_id)
            for k, tok in enumerate(tokens):
                if not 0 <= tok < w:
                    raise CorpusFormatError(
                        f"{path}: token id {tok} outside vocabulary of size {w}",
                        line=lineno, doc_id=doc_id, token_index=offset + k,
                    )
            year = rec.get("year")
            if year is not None and (not isinstance(year, int) or isinstance(year, bool)):
                raise CorpusFormatError(f"{path}: year must be an integer or null", line=lineno, doc_id=doc_id)
            documents.append(tokens)
            years.append(year)
            offset += len(tokens)
    if not documents:
        raise CorpusFormatError(f"{path}: corpus has no documents")
    return Corpus.from_documents(documents, vocab, years)


def save_hmm_params(params: HmmParams, path: str) -> None:
    _dump_json(params.to_dict(), path)


def load_hmm_params(path: str) -> HmmParams:
    return HmmParams.from_dict(_load_json(path))


def save_topics(topics: TopicMatrix, path: str, eta: Optional[float] = None) -> None:
    _dump_json(topics.to_dict(eta), path)


def load_topics(path: str) -> TopicMatrix:
    return TopicMatrix.from_dict(_load_json(path))


def observations_filename(fmt: str) -> str:
    if fmt not in OBSERVATION_FORMATS:
        raise InvalidArgumentError(f"observation format must be one of {OBSERVATION_FORMATS}, got {fmt!r}")
    return "observations.bin" if fmt == "binary" else "observations.txt"


def save_observations(w: Sequence[int], path: str, fmt: str = "text") -> None:
    observations_filename(fmt)
    obs = as_observations(w)
    _ensure_parent(path)
    if fmt == "binary":
        obs.astype("<i4").tofile(path)
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(str(int(x)) for x in obs))
        f.write("\n")


def load_observations(path: str, fmt: Optional[str] = None, alphabet: Optional[int] = None) -> np.ndarray:
    fmt = fmt or ("binary" if path.endswith(".bin") else "text")
    observations_filename(fmt)
    if fmt == "binary":
        obs = np.fromfile(path, dtype="<i4").astype(np.int64)
    else:
        values = []
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                text = line.strip()
                if not text:
                    continue
                try:
                    values.append(int(text))
                except ValueError as e:
                    raise InvalidArgumentError(f"{path}: line {lineno}: not an integer: {text!r}") from e
        obs = np.asarray(values, dtype=np.int64)
    return as_observations(obs, alphabet)


def write_metadata(directory: str, metadata: Dict[str, Any]) -> str:
    path = os.path.join(directory, "metadata.json")
    _dump_json(metadata, path)
    return path


def read_metadata(directory: str) -> Dict[str, Any]:
    path = os.path.join(directory, "metadata.json")
    if not os.path.exists(path):
        return {}
    return _load_json(path)


def dataset_digest(directory: str) -> str:
    h = hashlib.sha256()
    for root, _, files in sorted(os.walk(directory)):
        for name in sorted(files):
            full = os.path.join(root, name)
            h.update(os.path.relpath(full, directory).replace(os.sep, "/").encode("utf-8"))
            h.update(b"\0")
            with open(full, "rb") as f:
                h.update(f.read())
            h.update(b"\0")
    return h.hexdigest()


def write_hmm_dataset(spec: SynthHmmSpec, directory: str, fmt: str = "text") -> Dict[str, Any]:
    emissions, attempts = hard_hmm_emissions(spec)
    params, obs = make_hard_hmm(spec)
    save_hmm_params(params, os.path.join(directory, "params.json"))
    save_observations(obs, os.path.join(directory, observations_filename(fmt)), fmt)
    metadata = {
        "model": "hmm",
        "spec": asdict(spec),
        "observations": observations_filename(fmt),
        "emission_draws": attempts,
        "emission_l1": float(np.abs(emissions[0] - emissions[1]).sum()),
    }
    write_metadata(directory, metadata)
    logger.info(f"hmm dataset written to {directory} (N={spec.n}, seed={spec.seed})")
    return metadata


def write_lda_dataset(spec: SynthLdaSpec, directory: str) -> Dict[str, Any]:
    topics, corpus, _ = make_lda_dataset(spec)
    save_topics(topics, os.path.join(directory, "topics.json"))
    save_corpus(corpus, os.path.join(directory, "corpus.jsonl"))
    spec_dict = asdict(spec)
    spec_dict["year_span"] = list(spec.year_span) if spec.year_span else None
    metadata = {"model": "lda", "spec": spec_dict, "tokens": corpus.N, "documents": corpus.doc_count}
    write_metadata(directory, metadata)
    logger.info(f"lda dataset written to {directory} (docs={spec.docs}, tokens={corpus.N}, seed={spec.seed})")
    return metadata
