import json
import os

import numpy as np
import pytest

from data_io import (
    SynthHmmSpec,
    SynthLdaSpec,
    band_support,
    dataset_digest,
    hard_hmm_emissions,
    load_corpus,
    load_hmm_params,
    load_observations,
    load_topics,
    make_band_topics,
    make_hard_hmm,
    make_lda_dataset,
    read_metadata,
    save_corpus,
    save_observations,
    save_topics,
    spread_years,
    write_hmm_dataset,
    write_lda_dataset,
)
from errors import CorpusFormatError, InvalidArgumentError
from lda_engine import Corpus, TopicMatrix


def write_corpus_files(tmp_path, lines, vocab=("a", "b", "c")):
    (tmp_path / "vocab.txt").write_text("".join(f"{w}\n" for w in vocab), encoding="utf-8")
    path = tmp_path / "corpus.jsonl"
    path.write_text("".join(json.dumps(rec) + "\n" for rec in lines), encoding="utf-8")
    return str(path)


# -------- HMM --------

def test_hard_hmm_shape_and_emission_distance():
    spec = SynthHmmSpec(n=1000, seed=3)
    params, obs = make_hard_hmm(spec)
    assert obs.shape == (1000,)
    assert obs.min() >= 0 and obs.max() < 10
    np.testing.assert_allclose(params.transitions, [[0.55, 0.45], [0.45, 0.55]])
    l1 = np.abs(params.emissions[0] - params.emissions[1]).sum()
    assert 0.3 <= l1 <= 0.7


def test_hard_hmm_emissions_are_seeded():
    a, tries_a = hard_hmm_emissions(SynthHmmSpec(n=10, seed=5))
    b, tries_b = hard_hmm_emissions(SynthHmmSpec(n=10, seed=5))
    np.testing.assert_array_equal(a, b)
    assert tries_a == tries_b >= 1


@pytest.mark.parametrize("kwargs", [{"n": 0}, {"states": 3}, {"switch_prob": 1.0}, {"l1_min": 0.8, "l1_max": 0.7}])
def test_hmm_spec_rejects(kwargs):
    with pytest.raises(InvalidArgumentError):
        SynthHmmSpec(**kwargs)


@pytest.mark.parametrize("fmt,name", [("text", "observations.txt"), ("binary", "observations.bin")])
def test_hmm_dataset_round_trip(tmp_path, fmt, name):
    metadata = write_hmm_dataset(SynthHmmSpec(n=1000, seed=1), str(tmp_path), fmt)
    assert metadata["observations"] == name
    obs = load_observations(str(tmp_path / name), fmt, alphabet=10)
    assert obs.shape == (1000,)
    _, expected = make_hard_hmm(SynthHmmSpec(n=1000, seed=1))
    np.testing.assert_array_equal(obs, expected)
    params = load_hmm_params(str(tmp_path / "params.json"))
    assert params.S == 2 and params.W == 10
    assert read_metadata(str(tmp_path))["model"] == "hmm"


def test_same_spec_same_digest(tmp_path):
    write_hmm_dataset(SynthHmmSpec(n=500, seed=2), str(tmp_path / "a"))
    write_hmm_dataset(SynthHmmSpec(n=500, seed=2), str(tmp_path / "b"))
    write_hmm_dataset(SynthHmmSpec(n=500, seed=3), str(tmp_path / "c"))
    assert dataset_digest(str(tmp_path / "a")) == dataset_digest(str(tmp_path / "b"))
    assert dataset_digest(str(tmp_path / "a")) != dataset_digest(str(tmp_path / "c"))


def test_observations_reject_symbol_outside_alphabet(tmp_path):
    path = str(tmp_path / "obs.txt")
    save_observations([0, 1, 4], path)
    with pytest.raises(InvalidArgumentError):
        load_observations(path, alphabet=3)


def test_text_observations_reject_garbage(tmp_path):
    path = tmp_path / "obs.txt"
    path.write_text("1\nx\n", encoding="utf-8")
    with pytest.raises(InvalidArgumentError, match="line 2"):
        load_observations(str(path))


# -------- LDA --------

def test_band_topics_cover_centers():
    topics = make_band_topics(10, 100)
    assert topics.T == 10 and topics.W == 100
    np.testing.assert_allclose(topics.topics.sum(axis=1), 1.0)
    support = band_support(10, 100)
    assert support[0][0] == 0
    assert support[-1][1] == 99
    for k, (lo, hi) in enumerate(support):
        inside = topics.topics[k, lo:hi + 1].sum()
        assert inside > 0.95
    # fuera de la banda solo queda la masa de fondo
    assert topics.topics[0, 99] == pytest.approx(0.05 / 100)


@pytest.mark.parametrize("t,w", [(10, 100), (3, 12), (4, 7), (7, 50)])
def test_band_topics_follow_band_support(t, w):
    topics = make_band_topics(t, w, band_weight=0.9).topics
    for k, (lo, hi) in enumerate(band_support(t, w)):
        expected = np.full(w, 0.1 / w)
        expected[lo:hi + 1] += 0.9 / (hi - lo + 1)
        np.testing.assert_allclose(topics[k], expected)


def test_band_topics_reject():
    with pytest.raises(InvalidArgumentError):
        make_band_topics(1, 10)
    with pytest.raises(InvalidArgumentError):
        make_band_topics(5, 4)
    with pytest.raises(InvalidArgumentError):
        band_support(5, 4)
    with pytest.raises(InvalidArgumentError):
        make_band_topics(3, 12, band_weight=1.0)


def test_lda_dataset_size():
    topics, corpus, z = make_lda_dataset(SynthLdaSpec(docs=1500, seed=0))
    assert corpus.N == 15_000
    assert corpus.doc_count == 1500
    assert z.shape == (15_000,)
    assert topics.T == 10 and corpus.vocab_size == 100
    assert not corpus.has_years


def test_spread_years_covers_span():
    years = spread_years(10, (2000, 2004))
    assert years == [2000, 2000, 2001, 2001, 2002, 2002, 2003, 2003, 2004, 2004]


def test_lda_dataset_round_trip(tmp_path):
    spec = SynthLdaSpec(docs=20, seed=4, topics=3, vocab=12, year_span=(1990, 1999))
    metadata = write_lda_dataset(spec, str(tmp_path))
    assert metadata["tokens"] == 200
    assert metadata["spec"]["year_span"] == [1990, 1999]
    _, expected, _ = make_lda_dataset(spec)
    corpus = load_corpus(str(tmp_path / "corpus.jsonl"))
    assert corpus == expected
    assert corpus.doc_years[0] == 1990 and corpus.doc_years[-1] == 1999
    topics = load_topics(str(tmp_path / "topics.json"))
    np.testing.assert_allclose(topics.topics, make_band_topics(3, 12).topics)


def test_lda_spec_rejects_descending_years():
    with pytest.raises(InvalidArgumentError):
        SynthLdaSpec(year_span=(2000, 1990))


def test_topics_file_round_trip(tmp_path):
    topics = TopicMatrix([[0.25, 0.75], [0.5, 0.5]])
    path = str(tmp_path / "topics.json")
    save_topics(topics, path, eta=0.01)
    np.testing.assert_array_equal(load_topics(path).topics, topics.topics)


def test_save_corpus_writes_vocab_and_nulls(tmp_path):
    corpus = Corpus.from_documents([[0, 1], [1]], ["x", "y"])
    save_corpus(corpus, str(tmp_path / "corpus.jsonl"))
    lines = (tmp_path / "corpus.jsonl").read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[1]) == {"id": 1, "year": None, "tokens": [1]}
    assert (tmp_path / "vocab.txt").read_text(encoding="utf-8") == "x\ny\n"


# -------- errores de formato --------

def test_corpus_reports_token_out_of_vocabulary(tmp_path):
    path = write_corpus_files(tmp_path, [{"id": 0, "tokens": [0, 1]}, {"id": 1, "tokens": [2, 7]}])
    with pytest.raises(CorpusFormatError) as info:
        load_corpus(path)
    assert info.value.line == 2
    assert info.value.doc_id == 1
    assert info.value.token_index == 3


def test_corpus_reports_malformed_json(tmp_path):
    (tmp_path / "vocab.txt").write_text("a\n", encoding="utf-8")
    path = tmp_path / "corpus.jsonl"
    path.write_text('{"id": 0, "tokens": [0]}\n{"id": 1,\n', encoding="utf-8")
    with pytest.raises(CorpusFormatError) as info:
        load_corpus(str(path))
    assert info.value.line == 2


def test_corpus_rejects_noncontiguous_ids(tmp_path):
    path = write_corpus_files(tmp_path, [{"id": 0, "tokens": [0]}, {"id": 2, "tokens": [1]}])
    with pytest.raises(CorpusFormatError, match="non-contiguous"):
        load_corpus(path)


def test_corpus_rejects_empty_document(tmp_path):
    path = write_corpus_files(tmp_path, [{"id": 0, "tokens": []}])
    with pytest.raises(CorpusFormatError) as info:
        load_corpus(path)
    assert info.value.doc_id == 0


def test_corpus_requires_vocabulary(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text('{"id": 0, "tokens": [0]}\n', encoding="utf-8")
    with pytest.raises(OSError):
        load_corpus(str(path))


def test_corpus_format_error_is_invalid_argument(tmp_path):
    path = write_corpus_files(tmp_path, [{"id": 0, "tokens": [0], "year": "1990"}])
    with pytest.raises(InvalidArgumentError):
        load_corpus(path)
    assert os.path.exists(path)
