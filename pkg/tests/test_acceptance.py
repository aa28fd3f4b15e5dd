"""Reproducciones de tendencias a escala completa. Lentas: `pytest -m slow`."""

import numpy as np
import pytest

from data_io import SynthHmmSpec, SynthLdaSpec, make_hard_hmm, make_lda_dataset
from eval_metrics import baum_welch_baseline, disc
from hmm_engine import HmmSamplerConfig, run_hmm_sampler
from lda_engine import LdaPriors, LdaSamplerConfig, run_lda_sampler

pytestmark = pytest.mark.slow

HMM_N = 20_000
HMM_ITERATIONS = 20_000
HMM_REPETITIONS = 8


@pytest.fixture(scope="module")
def hard_hmm():
    return make_hard_hmm(SynthHmmSpec(n=HMM_N, seed=2024))


def _hmm_runs(w, m):
    return [
        run_hmm_sampler(
            HmmSamplerConfig(variant="collapsed", states=2, alphabet=10, m=m, iterations=HMM_ITERATIONS,
                             cadence=100, seed=7, run=r),
            w,
        )
        for r in range(HMM_REPETITIONS)
    ]


@pytest.fixture(scope="module")
def single_path_runs(hard_hmm):
    return _hmm_runs(hard_hmm[1], 1)


def test_more_paths_lower_topic_reconstruction_error():
    topics, corpus, _ = make_lda_dataset(SynthLdaSpec(docs=1500, seed=11))
    means = {}
    for m in (1, 2, 3, 5):
        values = []
        for r in range(10):
            config = LdaSamplerConfig(variant="collapsed", topics=10, m=m, iterations=3000, cadence=3000,
                                      seed=13, run=r, priors=LdaPriors.corpus_defaults(10))
            values.append(disc(topics, run_lda_sampler(config, corpus).topics))
        means[m] = float(np.mean(values))
    ordered = [means[m] for m in (1, 2, 3, 5)]
    assert all(a > b for a, b in zip(ordered, ordered[1:])), means
    assert abs(means[1] - 1.12) <= 0.25
    assert abs(means[5] - 0.69) <= 0.25


def test_five_paths_beat_one_and_match_baum_welch(hard_hmm, single_path_runs):
    _, w = hard_hmm
    five = [r.final_log_likelihood for r in _hmm_runs(w, 5)]
    one = [r.final_log_likelihood for r in single_path_runs]
    assert np.median(five) >= np.median(one)
    _, trace = baum_welch_baseline(w, 2, 10, seed=7, restarts=8, max_iters=500)
    bw = trace[-1]
    assert max(five) >= bw - 0.001 * abs(bw)


def test_single_path_traces_plateau_early(single_path_runs):
    plateaued = 0
    for result in single_path_runs:
        final = result.final_log_likelihood
        after = [ll for it, ll in result.trace if it >= HMM_ITERATIONS // 4]
        if abs(after[0] - final) <= 0.005 * abs(final) and all(abs(ll - final) <= 0.002 * abs(final) for ll in after):
            plateaued += 1
    assert plateaued >= 6
