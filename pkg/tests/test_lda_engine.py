import itertools
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gammaln

from errors import ConfigError, DegenerateConditionalError, InvalidArgumentError
from lda_engine import (
    Corpus,
    LdaCollapsedSampler,
    LdaCounters,
    LdaPcSampler,
    LdaPriors,
    LdaSamplerConfig,
    TopicMatrix,
    lda_collapsed_site_weights,
    lda_counters_from_paths,
    lda_generate,
    lda_log_joint_collapsed,
    lda_pc_site_weights,
    lda_sample_topics,
    posterior_mean_topics,
    run_lda_sampler,
    theta_doc,
    theta_matrix,
)
from prob_core import Phase, RngStream, categorical_from_uniform, log_dirichlet_multinomial, log_sum_exp, sample_dirichlet

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def make_corpus(docs, w_dim):
    vocab = [f"w{k}" for k in range(w_dim)]
    return Corpus.from_documents(docs, vocab)


def random_instance(seed):
    gen = np.random.default_rng(seed)
    t = int(gen.integers(1, 4))
    w_dim = int(gen.integers(1, 4))
    n = int(gen.integers(1, 6))
    d = int(gen.integers(1, min(2, n) + 1))
    m = int(gen.integers(1, 4))
    cut = sorted(gen.choice(np.arange(1, n), size=d - 1, replace=False).tolist()) if d > 1 else []
    tokens = gen.integers(0, w_dim, n).tolist()
    bounds = [0, *cut, n]
    docs = [tokens[bounds[k]:bounds[k + 1]] for k in range(d)]
    corpus = make_corpus(docs, w_dim)
    z = gen.integers(0, t, (m, n))
    priors = LdaPriors(float(gen.uniform(0.05, 2.0)), float(gen.uniform(0.05, 2.0)))
    return t, corpus, z, priors


def collapsed_oracle(z, corpus, priors, t, j, i):
    scores = []
    for k in range(t):
        trial = z.copy()
        trial[j, i] = k
        scores.append(lda_log_joint_collapsed(trial, corpus, priors, t))
    scores = np.asarray(scores)
    return np.exp(scores - log_sum_exp(scores))


def decremented(counters, z, corpus, j, i):
    c = LdaCounters(counters.topic_word.copy(), counters.topic_total.copy(), counters.doc_topic.copy(), counters.doc_total)
    s, w, d = z[j, i], corpus.tokens[i], corpus.doc_of[i]
    c.topic_word[s, w] -= 1
    c.topic_total[s] -= 1
    c.doc_topic[j, d, s] -= 1
    return c


# -------- corpus --------

def test_corpus_rejects_noncontiguous_documents():
    with pytest.raises(InvalidArgumentError):
        Corpus([0, 1, 0], [0, 1, 0], ["a", "b"])


def test_corpus_rejects_out_of_range_token():
    with pytest.raises(InvalidArgumentError):
        Corpus([0, 2], [0, 0], ["a", "b"])


def test_corpus_rejects_empty_document():
    with pytest.raises(InvalidArgumentError):
        Corpus.from_documents([[0], []], ["a"])


def test_corpus_shapes():
    corpus = make_corpus([[0, 1], [1, 1, 0]], 2)
    assert corpus.N == 5
    assert corpus.doc_count == 2
    assert corpus.vocab_size == 2
    np.testing.assert_array_equal(corpus.document(1), [1, 1, 0])
    assert not corpus.has_years


# -------- generación --------

def test_generate_single_topic():
    topics = TopicMatrix([[0.2, 0.3, 0.5]])
    corpus, z = lda_generate(topics, 1.0, 50, 20, RngStream(1))
    assert np.all(z == 0)
    assert corpus.N == 1000


def test_generate_large_alpha_is_near_uniform():
    topics = TopicMatrix(np.full((4, 3), 1 / 3))
    corpus, z = lda_generate(topics, 1e6, 1, 100_000, RngStream(2))
    freq = np.bincount(z, minlength=4) / z.size
    np.testing.assert_allclose(freq, 0.25, atol=0.02)


def test_generate_token_count():
    topics = TopicMatrix(np.full((10, 100), 0.01))
    corpus, z = lda_generate(topics, 1.0, 150, 10, RngStream(3))
    assert corpus.N == 1500
    assert corpus.doc_count == 150
    assert z.shape == (1500,)
    assert corpus.vocab[0] == "w00"


def test_generate_rejects_bad_sizes():
    with pytest.raises(InvalidArgumentError):
        lda_generate(TopicMatrix([[1.0]]), 1.0, 0, 10, RngStream(0))


# -------- topics y contadores --------

def test_sample_topics_zero_counts_is_prior():
    counters = LdaCounters(np.zeros((2, 3), dtype=np.int64), np.zeros(2, dtype=np.int64),
                           np.zeros((1, 1, 2), dtype=np.int64), np.zeros(1, dtype=np.int64))
    got = lda_sample_topics(counters, 0.5, RngStream(4))
    gen = RngStream(4).gen
    np.testing.assert_array_equal(got.topics[0], sample_dirichlet(np.full(3, 0.5), gen))
    np.testing.assert_array_equal(got.topics[1], sample_dirichlet(np.full(3, 0.5), gen))


def test_identical_paths_triple_topic_word():
    corpus = make_corpus([[0, 1, 2], [2, 0]], 3)
    z = np.array([0, 1, 1, 0, 1])
    one = lda_counters_from_paths(z, corpus, 2)
    three = lda_counters_from_paths(np.stack([z, z, z]), corpus, 2)
    np.testing.assert_array_equal(three.topic_word, 3 * one.topic_word)
    np.testing.assert_array_equal(one.topic_word, [[1, 0, 1], [1, 1, 1]])
    np.testing.assert_array_equal(three.doc_topic[2], one.doc_topic[0])
    three.check_invariants(corpus.N)


def test_sample_topics_concentrates():
    tw = np.zeros((1, 10), dtype=np.int64)
    tw[0, 0] = 1000
    counters = LdaCounters(tw, tw.sum(axis=1), np.zeros((1, 1, 1), dtype=np.int64), np.zeros(1, dtype=np.int64))
    assert lda_sample_topics(counters, 0.01, RngStream(5)).topics[0, 0] > 0.99


def test_posterior_mean_topics_formula():
    tw = np.array([[3, 1], [0, 0]])
    counters = LdaCounters(tw, tw.sum(axis=1), np.zeros((1, 1, 2), dtype=np.int64), np.zeros(1, dtype=np.int64))
    est = posterior_mean_topics(counters, 0.5)
    np.testing.assert_allclose(est.topics, [[3.5 / 5, 1.5 / 5], [0.5, 0.5]])


# -------- pesos por sitio --------

def test_pc_weights_uniform():
    counters = lda_counters_from_paths([[0, 1]], make_corpus([[0, 1]], 2), 2)
    counters.doc_topic[:] = 0
    weights = lda_pc_site_weights(TopicMatrix(np.full((2, 2), 0.5)), counters, 0, 0, 1, 0.3)
    np.testing.assert_allclose(weights, [0.15, 0.15])


def test_pc_weights_exclude_zero_topic_and_hand_values():
    counters = lda_counters_from_paths([[0, 1, 1]], make_corpus([[0, 1, 1]], 2), 2)
    topics = TopicMatrix([[1.0, 0.0], [0.4, 0.6]])
    weights = lda_pc_site_weights(topics, counters, 0, 0, 1, 0.5)
    assert weights[0] == 0.0
    assert weights[1] == 0.6 * (2 + 0.5)
    weights = lda_pc_site_weights(topics, counters, 0, 0, 0, 0.5)
    np.testing.assert_array_equal(weights, [1.0 * (1 + 0.5), 0.4 * (2 + 0.5)])


def test_pc_weights_degenerate():
    counters = lda_counters_from_paths([[0]], make_corpus([[0]], 2), 2)
    with pytest.raises(DegenerateConditionalError):
        lda_pc_site_weights(TopicMatrix([[0.0, 1.0], [0.0, 1.0]]), counters, 0, 0, 0, 1.0)


def test_collapsed_weights_zero_counts_uniform():
    counters = LdaCounters(np.zeros((3, 4), dtype=np.int64), np.zeros(3, dtype=np.int64),
                           np.zeros((1, 1, 3), dtype=np.int64), np.ones(1, dtype=np.int64))
    weights = lda_collapsed_site_weights(counters, 0, 0, 2, LdaPriors(0.1, 0.7))
    np.testing.assert_allclose(weights, np.full(3, 0.7 / 4))


@pytest.mark.parametrize("m", [1, 2])
def test_collapsed_weights_match_oracle_fixed(m):
    corpus = make_corpus([[0, 1, 1]], 2)
    z = np.array([[0, 1, 0], [1, 1, 0]])[:m]
    priors = LdaPriors(0.3, 0.8)
    counters = lda_counters_from_paths(z, corpus, 2)
    for j in range(m):
        for i in range(corpus.N):
            c = decremented(counters, z, corpus, j, i)
            weights = lda_collapsed_site_weights(c, j, corpus.doc_of[i], corpus.tokens[i], priors)
            np.testing.assert_allclose(weights / weights.sum(), collapsed_oracle(z, corpus, priors, 2, j, i), atol=1e-10)


@settings(max_examples=150, deadline=None)
@given(seed=seeds)
def test_collapsed_weights_match_oracle(seed):
    t, corpus, z, priors = random_instance(seed)
    gen = np.random.default_rng(seed + 1)
    j = int(gen.integers(0, z.shape[0]))
    i = int(gen.integers(0, corpus.N))
    c = decremented(lda_counters_from_paths(z, corpus, t), z, corpus, j, i)
    weights = lda_collapsed_site_weights(c, j, corpus.doc_of[i], corpus.tokens[i], priors)
    np.testing.assert_allclose(weights / weights.sum(), collapsed_oracle(z, corpus, priors, t, j, i), atol=1e-9)


# -------- log-joint colapsado --------

def test_log_joint_trivial_is_zero():
    assert abs(lda_log_joint_collapsed([[0]], make_corpus([[0]], 1), LdaPriors(), 1)) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=seeds)
def test_log_joint_invariant_under_topic_relabeling(seed):
    t, corpus, z, priors = random_instance(seed)
    perm = np.random.default_rng(seed).permutation(t)
    a = lda_log_joint_collapsed(z, corpus, priors, t)
    b = lda_log_joint_collapsed(perm[z], corpus, priors, t)
    assert abs(a - b) <= 1e-9


def _beta_integral(conc, counts):
    norm = math.exp(gammaln(2 * conc) - 2 * gammaln(conc))
    value, _ = integrate.quad(lambda x: norm * x ** (conc - 1 + counts[0]) * (1 - x) ** (conc - 1 + counts[1]), 0.0, 1.0)
    return value


def test_log_joint_matches_quadrature():
    corpus = make_corpus([[0, 1]], 2)
    z = np.array([[1, 1]])
    priors = LdaPriors(1.5, 1.2)
    c = lda_counters_from_paths(z, corpus, 2)
    total = _beta_integral(priors.alpha, c.doc_topic[0, 0])
    for row in c.topic_word:
        total *= _beta_integral(priors.eta, row)
    assert abs(lda_log_joint_collapsed(z, corpus, priors, 2) - math.log(total)) <= 1e-3


def _path_log_likelihood(topics, z, corpus, alpha, t):
    """log P(z, w | phi) con theta integrado por documento."""
    emit = np.log(topics[z, corpus.tokens]).sum()
    doc_topic = lda_counters_from_paths(z, corpus, t).doc_topic[0]
    return emit + log_dirichlet_multinomial(doc_topic, alpha)


@settings(max_examples=20, deadline=None)
@given(seed=seeds, m=st.integers(min_value=1, max_value=3))
def test_path_sum_factorizes_over_paths(seed, m):
    gen = np.random.default_rng(seed)
    n = int(gen.integers(1, 5))
    corpus = make_corpus([gen.integers(0, 3, n).tolist()], 3)
    topics = np.stack([sample_dirichlet(np.ones(3), gen) for _ in range(2)])
    probs = [math.exp(_path_log_likelihood(topics, np.array(z), corpus, 0.8, 2))
             for z in itertools.product(range(2), repeat=n)]
    joint = sum(math.prod(combo) for combo in itertools.product(probs, repeat=m))
    expected = sum(probs) ** m
    assert abs(joint - expected) <= 1e-9 * expected


# -------- theta --------

def test_theta_point_mass():
    corpus = make_corpus([[0, 1, 1]], 2)
    np.testing.assert_array_equal(theta_doc([[3, 3, 3]], corpus, 0, topics=5), [0, 0, 0, 1, 0])


def test_theta_two_tokens():
    corpus = make_corpus([[0, 1]], 2)
    np.testing.assert_array_equal(theta_doc([[0, 1]], corpus, 0, topics=4), [0.5, 0.5, 0, 0])


def test_theta_ten_tokens():
    corpus = make_corpus([[0] * 10], 1)
    z = [[0, 0, 0, 1, 1, 2, 2, 2, 2, 3]]
    np.testing.assert_allclose(theta_doc(z, corpus, 0, topics=5), [0.3, 0.2, 0.4, 0.1, 0.0])


def test_theta_uses_chosen_path():
    corpus = make_corpus([[0, 1], [1]], 2)
    z = np.array([[0, 0, 1], [1, 1, 0]])
    np.testing.assert_array_equal(theta_matrix(z, corpus, path_choice=1, topics=2), [[0, 1], [1, 0]])


def test_theta_rejects_bad_document():
    corpus = make_corpus([[0]], 1)
    with pytest.raises(InvalidArgumentError):
        theta_doc([[0]], corpus, 1)


# -------- muestreadores --------

@pytest.fixture(scope="module")
def small_corpus():
    gen = np.random.default_rng(31)
    topics = TopicMatrix(np.stack([sample_dirichlet(np.full(20, 0.3), gen) for _ in range(3)]))
    corpus, _ = lda_generate(topics, 0.5, 10, 10, RngStream(31, (0, 0, Phase.GENERATE)))
    return corpus


def _collapsed_reference(corpus, t, priors, seed, sweeps):
    """Gibbs colapsado estándar de un solo camino."""
    base = RngStream(seed, (0, 0, Phase.INIT))
    z = base.derive(path=0, phase=Phase.INIT).gen.integers(0, t, corpus.N, dtype=np.int64)
    sweep_gen = base.derive(path=0, phase=Phase.SWEEP).gen
    w_dim = corpus.vocab_size
    tw = [[0] * w_dim for _ in range(t)]
    tt = [0] * t
    dt = [[0] * t for _ in range(corpus.doc_count)]
    for i in range(corpus.N):
        tw[z[i]][corpus.tokens[i]] += 1
        tt[z[i]] += 1
        dt[corpus.doc_of[i]][z[i]] += 1
    w_eta = w_dim * priors.eta
    weights = np.empty(t)
    history = []
    for _ in range(sweeps):
        u = sweep_gen.random(corpus.N)
        for i in range(corpus.N):
            w, d, s = corpus.tokens[i], corpus.doc_of[i], z[i]
            tw[s][w] -= 1
            tt[s] -= 1
            dt[d][s] -= 1
            for k in range(t):
                weights[k] = (tw[k][w] + priors.eta) / (tt[k] + w_eta) * (dt[d][k] + priors.alpha)
            k = categorical_from_uniform(weights, u[i])
            z[i] = k
            tw[k][w] += 1
            tt[k] += 1
            dt[d][k] += 1
        history.append(z.copy())
    return history


def _pc_reference(corpus, t, priors, seed, sweeps):
    """Un solo camino: temas explícitos, luego cada token dado los temas."""
    base = RngStream(seed, (0, 0, Phase.INIT))
    z = base.derive(path=0, phase=Phase.INIT).gen.integers(0, t, corpus.N, dtype=np.int64)
    param_gen = base.derive(path=0, phase=Phase.PARAMS).gen
    sweep_gen = base.derive(path=0, phase=Phase.SWEEP).gen
    weights = np.empty(t)
    history = []
    for _ in range(sweeps):
        tw = np.zeros((t, corpus.vocab_size), dtype=np.int64)
        dt = np.zeros((corpus.doc_count, t), dtype=np.int64)
        for i in range(corpus.N):
            tw[z[i], corpus.tokens[i]] += 1
            dt[corpus.doc_of[i], z[i]] += 1
        topics = [sample_dirichlet(priors.eta + tw[k], param_gen) for k in range(t)]
        u = sweep_gen.random(corpus.N)
        for i in range(corpus.N):
            w, d = corpus.tokens[i], corpus.doc_of[i]
            dt[d, z[i]] -= 1
            for k in range(t):
                weights[k] = topics[k][w] * (dt[d, k] + priors.alpha)
            z[i] = categorical_from_uniform(weights, u[i])
            dt[d, z[i]] += 1
        history.append(z.copy())
    return history


@pytest.mark.parametrize("cls,reference", [(LdaCollapsedSampler, _collapsed_reference), (LdaPcSampler, _pc_reference)])
def test_single_path_matches_reference(small_corpus, cls, reference):
    priors = LdaPriors(0.1, 0.5)
    expected = reference(small_corpus, 3, priors, 23, 1000)
    sampler = cls(small_corpus, 3, 1, priors, RngStream(23, (0, 0, Phase.INIT)))
    for k in range(1000):
        sampler.sweep()
        np.testing.assert_array_equal(sampler.assignments[0], expected[k])


@pytest.mark.parametrize("cls", [LdaCollapsedSampler, LdaPcSampler])
def test_counters_stay_consistent(small_corpus, cls):
    sampler = cls(small_corpus, 3, 3, LdaPriors(), RngStream(6))
    for _ in range(25):
        sampler.sweep()
        assert sampler.counters.equals(sampler.rebuilt_counters())
        sampler.counters.check_invariants(small_corpus.N)


def test_pc_threaded_sweeps_match_sequential(small_corpus):
    sequential = LdaPcSampler(small_corpus, 3, 4, LdaPriors(), RngStream(8))
    with ThreadPoolExecutor(max_workers=4) as pool:
        threaded = LdaPcSampler(small_corpus, 3, 4, LdaPriors(), RngStream(8), executor=pool)
        for _ in range(20):
            sequential.sweep()
            threaded.sweep()
    np.testing.assert_array_equal(sequential.assignments, threaded.assignments)
    assert sequential.counters.equals(threaded.counters)


def test_pc_paths_exchangeable_under_stream_relabeling(small_corpus):
    a = LdaPcSampler(small_corpus, 3, 3, LdaPriors(), RngStream(12), stream_ids=[0, 1, 2])
    b = LdaPcSampler(small_corpus, 3, 3, LdaPriors(), RngStream(12), stream_ids=[1, 2, 0])
    for _ in range(10):
        a.sweep()
        b.sweep()
    np.testing.assert_array_equal(b.assignments, a.assignments[[1, 2, 0]])
    np.testing.assert_array_equal(a.topic_word, b.topic_word)
    np.testing.assert_array_equal(a.point_estimate().topics, b.point_estimate().topics)


def test_collapsed_chain_matches_enumerated_target():
    corpus = make_corpus([[0, 1, 1]], 2)
    priors = LdaPriors(0.5, 0.8)
    configs = list(itertools.product(range(2), repeat=6))
    scores = np.array([lda_log_joint_collapsed(np.reshape(c, (2, 3)), corpus, priors, 2) for c in configs])
    target = np.exp(scores - log_sum_exp(scores))
    index = {c: k for k, c in enumerate(configs)}

    sampler = LdaCollapsedSampler(corpus, 2, 2, priors, RngStream(77))
    freq = np.zeros(len(configs))
    sweeps = 200_000
    for _ in range(sweeps):
        sampler.sweep()
        freq[index[tuple(sampler.assignments.ravel().tolist())]] += 1
    assert 0.5 * np.abs(freq / sweeps - target).sum() < 0.02


def test_run_produces_theta_and_trace(small_corpus):
    config = LdaSamplerConfig(variant="collapsed", topics=3, m=2, iterations=20, cadence=5, seed=1)
    result = run_lda_sampler(config, small_corpus)
    assert [it for it, _ in result.trace] == [0, 5, 10, 15, 20]
    assert result.theta.shape == (small_corpus.doc_count, 3)
    np.testing.assert_allclose(result.theta.sum(axis=1), 1.0)
    assert result.counters.equals(lda_counters_from_paths(result.assignments, small_corpus, 3))
    again = run_lda_sampler(config, small_corpus)
    assert result.trace == again.trace


def test_run_pc_threads_match_single_thread(small_corpus):
    base = dict(variant="pc", topics=3, m=3, iterations=15, cadence=5, seed=2)
    single = run_lda_sampler(LdaSamplerConfig(**base), small_corpus)
    threaded = run_lda_sampler(LdaSamplerConfig(threads=3, **base), small_corpus)
    np.testing.assert_array_equal(single.assignments, threaded.assignments)
    np.testing.assert_array_equal(single.topics.topics, threaded.topics.topics)


@pytest.mark.parametrize("kwargs", [{"variant": "vb"}, {"topics": 0}, {"m": 2, "path_choice": 2}])
def test_sampler_config_validation(kwargs):
    with pytest.raises(ConfigError):
        LdaSamplerConfig(**kwargs)
