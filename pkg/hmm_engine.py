#!/usr/bin/env python3
"""
HMM de emisiones discretas: modelo generativo, verosimilitud exacta (forward),
Baum-Welch y los muestreadores de Gibbs multicamino (parcialmente colapsado y
colapsado).

Convenciones de arrays:
- parámetros: initial (S,), transitions (S, S), emissions (S, W)
- caminos: int64 (m, N); observaciones: int64 (N,)
"""

import logging
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import ConfigError, ConsistencyError, DegenerateConditionalError, InvalidArgumentError
from prob_core import (
    Phase,
    RngLike,
    RngStream,
    _generator,
    as_simplex,
    as_simplex_rows,
    categorical_from_uniform,
    jit,
    log_dirichlet_multinomial,
    sample_dirichlet,
)

logger = logging.getLogger(__name__)

VARIANTS = ("pc", "collapsed")


@dataclass
class HmmParams:
    initial: np.ndarray
    transitions: np.ndarray
    emissions: np.ndarray

    def __post_init__(self) -> None:
        self.initial = as_simplex(self.initial, "initial")
        self.transitions = as_simplex_rows(self.transitions, "transitions")
        self.emissions = as_simplex_rows(self.emissions, "emissions")
        s = self.initial.shape[0]
        if self.transitions.shape != (s, s):
            raise InvalidArgumentError(f"transitions must be {s}x{s}, got {self.transitions.shape}")
        if self.emissions.shape[0] != s:
            raise InvalidArgumentError(f"emissions must have {s} rows, got {self.emissions.shape[0]}")

    @property
    def S(self) -> int:
        return int(self.initial.shape[0])

    @property
    def W(self) -> int:
        return int(self.emissions.shape[1])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "S": self.S,
            "W": self.W,
            "initial": self.initial.tolist(),
            "transitions": self.transitions.tolist(),
            "emissions": self.emissions.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HmmParams":
        try:
            params = cls(
                np.asarray(data["initial"], dtype=np.float64),
                np.asarray(data["transitions"], dtype=np.float64),
                np.asarray(data["emissions"], dtype=np.float64),
            )
        except KeyError as e:
            raise InvalidArgumentError(f"HMM params missing field {e.args[0]}") from e
        if int(data.get("S", params.S)) != params.S or int(data.get("W", params.W)) != params.W:
            raise InvalidArgumentError("declared S/W disagree with array shapes")
        return params


@dataclass
class HmmPriors:
    init_conc: float = 1.0
    trans_conc: float = 1.0
    emit_conc: float = 1.0

    def __post_init__(self) -> None:
        for name in ("init_conc", "trans_conc", "emit_conc"):
            v = float(getattr(self, name))
            if not v > 0 or not np.isfinite(v):
                raise InvalidArgumentError(f"{name} must be > 0, got {v}")
            setattr(self, name, v)


@dataclass
class HmmCounts:
    init_counts: np.ndarray
    trans_counts: np.ndarray
    emit_counts: np.ndarray

    @property
    def S(self) -> int:
        return int(self.init_counts.shape[0])

    @property
    def W(self) -> int:
        return int(self.emit_counts.shape[1])

    def equals(self, other: "HmmCounts") -> bool:
        return (
            np.array_equal(self.init_counts, other.init_counts)
            and np.array_equal(self.trans_counts, other.trans_counts)
            and np.array_equal(self.emit_counts, other.emit_counts)
        )

    def check_totals(self, m: int, n: int) -> None:
        if int(self.init_counts.sum()) != m:
            raise ConsistencyError(f"init counts total {int(self.init_counts.sum())} != m={m}")
        if int(self.trans_counts.sum()) != m * (n - 1):
            raise ConsistencyError(f"transition counts total {int(self.trans_counts.sum())} != {m * (n - 1)}")
        if int(self.emit_counts.sum()) != m * n:
            raise ConsistencyError(f"emission counts total {int(self.emit_counts.sum())} != {m * n}")


def as_observations(w: Sequence[int], alphabet: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(w, dtype=np.int64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidArgumentError("observation sequence must be a non-empty vector")
    if np.any(arr < 0):
        raise InvalidArgumentError(f"negative symbol at position {int(np.argmax(arr < 0))}")
    if alphabet is not None and np.any(arr >= alphabet):
        raise InvalidArgumentError(f"symbol out of range [0, {alphabet}) at position {int(np.argmax(arr >= alphabet))}")
    return arr


def as_paths(paths: Any, n: int, states: int) -> np.ndarray:
    arr = np.asarray(paths, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise InvalidArgumentError("path set must be a non-empty (m, N) array")
    if arr.shape[1] != n:
        raise InvalidArgumentError(f"paths have length {arr.shape[1]}, observations have {n}")
    if np.any(arr < 0) or np.any(arr >= states):
        raise InvalidArgumentError(f"path entries must lie in [0, {states})")
    return arr


def hmm_counts_from_paths(paths: Any, w: Sequence[int], states: int, alphabet: int) -> HmmCounts:
    obs = as_observations(w, alphabet)
    p = as_paths(paths, obs.shape[0], states)
    init = np.bincount(p[:, 0], minlength=states).astype(np.int64)
    trans = np.zeros((states, states), dtype=np.int64)
    np.add.at(trans, (p[:, :-1].ravel(), p[:, 1:].ravel()), 1)
    emit = np.zeros((states, alphabet), dtype=np.int64)
    np.add.at(emit, (p.ravel(), np.tile(obs, p.shape[0])), 1)
    return HmmCounts(init, trans, emit)


# -------- kernels --------

@jit
def _generate_kernel(initial, transitions, emissions, u, states, symbols):
    for i in range(states.shape[0]):
        if i == 0:
            s = categorical_from_uniform(initial, u[i, 0])
        else:
            s = categorical_from_uniform(transitions[states[i - 1]], u[i, 0])
        states[i] = s
        symbols[i] = categorical_from_uniform(emissions[s], u[i, 1])


@jit
def _forward_scaled(initial, transitions, emissions, w, alpha, scale):
    n = w.shape[0]
    s = initial.shape[0]
    loglik = 0.0
    for i in range(n):
        c = 0.0
        for t in range(s):
            if i == 0:
                a = initial[t]
            else:
                a = 0.0
                for r in range(s):
                    a += alpha[i - 1, r] * transitions[r, t]
            a *= emissions[t, w[i]]
            alpha[i, t] = a
            c += a
        if not c > 0.0:
            return -np.inf
        for t in range(s):
            alpha[i, t] /= c
        scale[i] = c
        loglik += np.log(c)
    return loglik


@jit
def _backward_stats(transitions, emissions, w, alpha, scale, gamma, xi, emit_exp):
    n = w.shape[0]
    s = transitions.shape[0]
    beta = np.ones(s)
    nxt = np.empty(s)
    for t in range(s):
        gamma[n - 1, t] = alpha[n - 1, t]
        emit_exp[t, w[n - 1]] += gamma[n - 1, t]
    for i in range(n - 2, -1, -1):
        for r in range(s):
            acc = 0.0
            for t in range(s):
                f = transitions[r, t] * emissions[t, w[i + 1]] * beta[t] / scale[i + 1]
                xi[r, t] += alpha[i, r] * f
                acc += f
            nxt[r] = acc
        for r in range(s):
            beta[r] = nxt[r]
            gamma[i, r] = alpha[i, r] * beta[r]
            emit_exp[r, w[i]] += gamma[i, r]


@jit
def _pc_site_weights(initial, transitions, emissions, path, i, w, out):
    n = path.shape[0]
    for t in range(out.shape[0]):
        if i == 0:
            left = initial[t]
        else:
            left = transitions[path[i - 1], t]
        if i < n - 1:
            right = transitions[t, path[i + 1]]
        else:
            right = 1.0
        out[t] = left * right * emissions[t, w[i]]


@jit
def _pc_sweep_path(path, w, initial, transitions, emissions, uniforms, init_c, trans_c, emit_c, weights):
    n = path.shape[0]
    for i in range(n):
        _pc_site_weights(initial, transitions, emissions, path, i, w, weights)
        t = categorical_from_uniform(weights, uniforms[i])
        if t < 0:
            return i
        s = path[i]
        if t != s:
            if i == 0:
                init_c[s] -= 1
                init_c[t] += 1
            else:
                trans_c[path[i - 1], s] -= 1
                trans_c[path[i - 1], t] += 1
            if i < n - 1:
                trans_c[s, path[i + 1]] -= 1
                trans_c[t, path[i + 1]] += 1
            emit_c[s, w[i]] -= 1
            emit_c[t, w[i]] += 1
            path[i] = t
    return -1


@jit
def _collapsed_site_weights(init_c, trans_c, trans_row, emit_c, emit_row, prev, nxt, sym, a0, a, b, out):
    s_count = out.shape[0]
    w_count = emit_c.shape[1]
    init_total = 0.0
    for t in range(s_count):
        init_total += init_c[t]
    for t in range(s_count):
        if prev < 0:
            left = (init_c[t] + a0) / (init_total + s_count * a0)
        else:
            left = (trans_c[prev, t] + a) / (trans_row[prev] + s_count * a)
        if nxt >= 0:
            # la transición entrante prev->t ya suma una cuenta a la fila t
            extra_num = 1.0 if (prev == t and t == nxt) else 0.0
            extra_den = 1.0 if prev == t else 0.0
            right = (trans_c[t, nxt] + a + extra_num) / (trans_row[t] + s_count * a + extra_den)
        else:
            right = 1.0
        out[t] = left * right * (emit_c[t, sym] + b) / (emit_row[t] + w_count * b)


@jit
def _collapsed_remove(paths, w, j, i, init_c, trans_c, trans_row, emit_c, emit_row, delta):
    n = paths.shape[1]
    s = paths[j, i]
    if i == 0:
        init_c[s] += delta
    else:
        trans_c[paths[j, i - 1], s] += delta
        trans_row[paths[j, i - 1]] += delta
    if i < n - 1:
        trans_c[s, paths[j, i + 1]] += delta
        trans_row[s] += delta
    emit_c[s, w[i]] += delta
    emit_row[s] += delta


@jit
def _collapsed_sweep(paths, w, init_c, trans_c, trans_row, emit_c, emit_row, a0, a, b, uniforms, weights):
    m = paths.shape[0]
    n = paths.shape[1]
    for j in range(m):
        for i in range(n):
            _collapsed_remove(paths, w, j, i, init_c, trans_c, trans_row, emit_c, emit_row, -1)
            prev = paths[j, i - 1] if i > 0 else -1
            nxt = paths[j, i + 1] if i < n - 1 else -1
            _collapsed_site_weights(init_c, trans_c, trans_row, emit_c, emit_row, prev, nxt, w[i], a0, a, b, weights)
            t = categorical_from_uniform(weights, uniforms[j, i])
            if t < 0:
                _collapsed_remove(paths, w, j, i, init_c, trans_c, trans_row, emit_c, emit_row, 1)
                return j * n + i
            paths[j, i] = t
            _collapsed_remove(paths, w, j, i, init_c, trans_c, trans_row, emit_c, emit_row, 1)
    return -1


# -------- operaciones --------

def hmm_generate(params: HmmParams, n: int, rng: RngLike) -> Tuple[np.ndarray, np.ndarray]:
    if int(n) < 1:
        raise InvalidArgumentError(f"sequence length must be >= 1, got {n}")
    n = int(n)
    u = _generator(rng).random((n, 2))
    states = np.empty(n, dtype=np.int64)
    symbols = np.empty(n, dtype=np.int64)
    _generate_kernel(params.initial, params.transitions, params.emissions, u, states, symbols)
    return states, symbols


def forward_log_likelihood(params: HmmParams, w: Sequence[int]) -> float:
    obs = as_observations(w, params.W)
    alpha = np.empty((obs.shape[0], params.S))
    scale = np.empty(obs.shape[0])
    return float(_forward_scaled(params.initial, params.transitions, params.emissions, obs, alpha, scale))


def path_log_likelihood(params: HmmParams, p: Sequence[int], w: Sequence[int]) -> float:
    obs = as_observations(w, params.W)
    path = np.asarray(p, dtype=np.int64)
    if path.ndim != 1 or path.shape[0] != obs.shape[0]:
        raise InvalidArgumentError(f"path length {path.shape} does not match observations ({obs.shape[0]})")
    if np.any(path < 0) or np.any(path >= params.S):
        raise InvalidArgumentError(f"path entries must lie in [0, {params.S})")
    with np.errstate(divide="ignore"):
        total = np.log(params.initial[path[0]])
        total += np.log(params.transitions[path[:-1], path[1:]]).sum()
        total += np.log(params.emissions[path, obs]).sum()
    return float(total)


def forward_backward(params: HmmParams, w: Sequence[int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Devuelve (gamma (N,S), suma de xi (S,S), emisiones esperadas (S,W), log-verosimilitud)."""
    obs = as_observations(w, params.W)
    n, s = obs.shape[0], params.S
    alpha = np.empty((n, s))
    scale = np.empty(n)
    loglik = float(_forward_scaled(params.initial, params.transitions, params.emissions, obs, alpha, scale))
    if not np.isfinite(loglik):
        raise InvalidArgumentError("observations have zero likelihood under the given parameters")
    gamma = np.empty((n, s))
    xi = np.zeros((s, s))
    emit_exp = np.zeros((s, params.W))
    _backward_stats(params.transitions, params.emissions, obs, alpha, scale, gamma, xi, emit_exp)
    return gamma, xi, emit_exp, loglik


def _normalized_rows(expected: np.ndarray, previous: np.ndarray, what: str) -> np.ndarray:
    out = previous.copy()
    totals = expected.sum(axis=1)
    for r in range(expected.shape[0]):
        if totals[r] > 0:
            out[r] = expected[r] / totals[r]
        else:
            logger.warning(f"baum-welch: state {r} received no {what} mass; row kept")
    return out


def baum_welch(
    w: Sequence[int],
    s: int,
    w_dim: int,
    init: HmmParams,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> Tuple[HmmParams, List[float]]:
    if init.S != s or init.W != w_dim:
        raise InvalidArgumentError(f"init has shape S={init.S}, W={init.W}; expected S={s}, W={w_dim}")
    if int(max_iters) < 1:
        raise InvalidArgumentError("max_iters must be >= 1")
    obs = as_observations(w, w_dim)
    params = init
    gamma, xi, emit_exp, loglik = forward_backward(params, obs)
    trace = [loglik]
    for it in range(int(max_iters)):
        initial = gamma[0] / gamma[0].sum()
        params = HmmParams(
            initial,
            _normalized_rows(xi, params.transitions, "transition"),
            _normalized_rows(emit_exp, params.emissions, "emission"),
        )
        gamma, xi, emit_exp, loglik = forward_backward(params, obs)
        trace.append(loglik)
        logger.debug(f"baum-welch iter={it + 1} loglik={loglik:.6f}")
        if loglik - trace[-2] < tol:
            break
    return params, trace


def random_params(s: int, w_dim: int, rng: RngLike) -> HmmParams:
    gen = _generator(rng)
    return HmmParams(
        sample_dirichlet(np.ones(s), gen),
        np.stack([sample_dirichlet(np.ones(s), gen) for _ in range(s)]),
        np.stack([sample_dirichlet(np.ones(w_dim), gen) for _ in range(s)]),
    )


def hmm_sample_params(counts: HmmCounts, priors: HmmPriors, rng: RngLike) -> HmmParams:
    gen = _generator(rng)
    initial = sample_dirichlet(priors.init_conc + counts.init_counts, gen)
    transitions = np.stack([sample_dirichlet(priors.trans_conc + row, gen) for row in counts.trans_counts])
    emissions = np.stack([sample_dirichlet(priors.emit_conc + row, gen) for row in counts.emit_counts])
    return HmmParams(initial, transitions, emissions)


def posterior_mean_params(counts: HmmCounts, priors: HmmPriors) -> HmmParams:
    def rows(c: np.ndarray, conc: float) -> np.ndarray:
        c = np.atleast_2d(c.astype(np.float64)) + conc
        return c / c.sum(axis=1, keepdims=True)

    return HmmParams(
        rows(counts.init_counts, priors.init_conc)[0],
        rows(counts.trans_counts, priors.trans_conc),
        rows(counts.emit_counts, priors.emit_conc),
    )


def hmm_pc_site_dist(params: HmmParams, path: Sequence[int], i: int, w: Sequence[int]) -> np.ndarray:
    obs = as_observations(w, params.W)
    p = as_paths(path, obs.shape[0], params.S)[0]
    if not 0 <= i < obs.shape[0]:
        raise InvalidArgumentError(f"site {i} out of range [0, {obs.shape[0]})")
    out = np.empty(params.S)
    _pc_site_weights(params.initial, params.transitions, params.emissions, p, int(i), obs, out)
    total = out.sum()
    if not total > 0:
        raise DegenerateConditionalError(f"all candidate states have zero weight at site {i}", site=int(i))
    return out / total


def hmm_collapsed_site_dist(
    counts: HmmCounts,
    pathset: Any,
    j: int,
    i: int,
    w: Sequence[int],
    priors: HmmPriors,
) -> np.ndarray:
    obs = as_observations(w, counts.W)
    paths = as_paths(pathset, obs.shape[0], counts.S)
    m, n = paths.shape
    if not 0 <= j < m or not 0 <= i < n:
        raise InvalidArgumentError(f"site ({j}, {i}) out of range for {m} paths of length {n}")
    if not hmm_counts_from_paths(paths, obs, counts.S, counts.W).equals(counts):
        raise ConsistencyError("HMM counts do not match the path set")
    init_c = counts.init_counts.copy()
    trans_c = counts.trans_counts.copy()
    emit_c = counts.emit_counts.copy()
    trans_row = trans_c.sum(axis=1)
    emit_row = emit_c.sum(axis=1)
    _collapsed_remove(paths, obs, int(j), int(i), init_c, trans_c, trans_row, emit_c, emit_row, -1)
    prev = int(paths[j, i - 1]) if i > 0 else -1
    nxt = int(paths[j, i + 1]) if i < n - 1 else -1
    out = np.empty(counts.S)
    _collapsed_site_weights(
        init_c, trans_c, trans_row, emit_c, emit_row, prev, nxt, int(obs[i]),
        priors.init_conc, priors.trans_conc, priors.emit_conc, out,
    )
    total = out.sum()
    if not total > 0:
        raise DegenerateConditionalError(f"all candidate states have zero weight at site ({j}, {i})", path=int(j), site=int(i))
    return out / total


def hmm_log_joint_collapsed(pathset: Any, w: Sequence[int], priors: HmmPriors, states: int, alphabet: int) -> float:
    counts = hmm_counts_from_paths(pathset, w, states, alphabet)
    return (
        log_dirichlet_multinomial(counts.init_counts, priors.init_conc)
        + log_dirichlet_multinomial(counts.trans_counts, priors.trans_conc)
        + log_dirichlet_multinomial(counts.emit_counts, priors.emit_conc)
    )


# -------- muestreadores --------

def _initial_paths(rng: RngStream, stream_ids: Sequence[int], n: int, states: int) -> np.ndarray:
    # inicialización uniforme al azar, un flujo INIT por camino
    return np.stack([
        rng.derive(path=sid, phase=Phase.INIT).gen.integers(0, states, n, dtype=np.int64)
        for sid in stream_ids
    ])


class _HmmSamplerBase:
    def __init__(
        self,
        w: Sequence[int],
        states: int,
        alphabet: int,
        m: int,
        priors: HmmPriors,
        rng: RngStream,
        stream_ids: Optional[Sequence[int]] = None,
    ):
        if int(m) < 1:
            raise InvalidArgumentError(f"path count must be >= 1, got {m}")
        if int(states) < 1 or int(alphabet) < 1:
            raise InvalidArgumentError("states and alphabet must be >= 1")
        self.w = as_observations(w, alphabet)
        self.S = int(states)
        self.W = int(alphabet)
        self.m = int(m)
        self.priors = priors
        self.stream_ids = list(range(self.m)) if stream_ids is None else [int(x) for x in stream_ids]
        if len(self.stream_ids) != self.m:
            raise InvalidArgumentError("stream_ids must have one entry per path")
        self.paths = _initial_paths(rng, self.stream_ids, self.w.shape[0], self.S)
        self.rng = rng
        self._sweep_streams = [rng.derive(path=sid, phase=Phase.SWEEP) for sid in self.stream_ids]
        self.sweeps = 0

    @property
    def N(self) -> int:
        return int(self.w.shape[0])

    def _uniforms(self) -> np.ndarray:
        return np.stack([stream.uniforms(self.N) for stream in self._sweep_streams])

    def rebuilt_counts(self) -> HmmCounts:
        return hmm_counts_from_paths(self.paths, self.w, self.S, self.W)


class HmmPcSampler(_HmmSamplerBase):
    """Muestreador parcialmente colapsado: phi explícito, luego cada camino dado phi."""

    def __init__(self, *args: Any, executor: Optional[Executor] = None, param_stream: int = 0, **kwargs: Any):
        super().__init__(*args, **kwargs)
        self._param_stream = self.rng.derive(path=param_stream, phase=Phase.PARAMS)
        self.executor = executor
        self.params: Optional[HmmParams] = None
        per_path = [hmm_counts_from_paths(self.paths[j], self.w, self.S, self.W) for j in range(self.m)]
        self.path_init = np.stack([c.init_counts for c in per_path])
        self.path_trans = np.stack([c.trans_counts for c in per_path])
        self.path_emit = np.stack([c.emit_counts for c in per_path])

    @property
    def counts(self) -> HmmCounts:
        return HmmCounts(self.path_init.sum(axis=0), self.path_trans.sum(axis=0), self.path_emit.sum(axis=0))

    def _sweep_path(self, j: int, params: HmmParams, uniforms: np.ndarray) -> int:
        weights = np.empty(self.S)
        return int(_pc_sweep_path(
            self.paths[j], self.w, params.initial, params.transitions, params.emissions, uniforms,
            self.path_init[j], self.path_trans[j], self.path_emit[j], weights,
        ))

    def sweep(self) -> None:
        params = hmm_sample_params(self.counts, self.priors, self._param_stream)
        self.params = params
        uniforms = self._uniforms()
        if self.executor is not None and self.m > 1:
            failures = list(self.executor.map(lambda j: self._sweep_path(j, params, uniforms[j]), range(self.m)))
        else:
            failures = [self._sweep_path(j, params, uniforms[j]) for j in range(self.m)]
        for j, site in enumerate(failures):
            if site >= 0:
                raise DegenerateConditionalError(f"all candidate states have zero weight at site ({j}, {site})", path=j, site=site)
        self.sweeps += 1

    def point_estimate(self) -> HmmParams:
        if self.params is None:
            return posterior_mean_params(self.counts, self.priors)
        return self.params


class HmmCollapsedSampler(_HmmSamplerBase):
    """Muestreador colapsado: phi integrado, cuentas vivas compartidas entre caminos."""

    def __init__(self, *args: Any, **kwargs: Any):
        super().__init__(*args, **kwargs)
        c = self.rebuilt_counts()
        self.init_c = c.init_counts
        self.trans_c = c.trans_counts
        self.emit_c = c.emit_counts
        self.trans_row = self.trans_c.sum(axis=1)
        self.emit_row = self.emit_c.sum(axis=1)

    @property
    def counts(self) -> HmmCounts:
        return HmmCounts(self.init_c.copy(), self.trans_c.copy(), self.emit_c.copy())

    def sweep(self) -> None:
        weights = np.empty(self.S)
        failed = int(_collapsed_sweep(
            self.paths, self.w, self.init_c, self.trans_c, self.trans_row, self.emit_c, self.emit_row,
            self.priors.init_conc, self.priors.trans_conc, self.priors.emit_conc, self._uniforms(), weights,
        ))
        if failed >= 0:
            j, i = divmod(failed, self.N)
            raise DegenerateConditionalError(f"all candidate states have zero weight at site ({j}, {i})", path=j, site=i)
        self.sweeps += 1

    def point_estimate(self) -> HmmParams:
        return posterior_mean_params(self.counts, self.priors)


@dataclass
class HmmSamplerConfig:
    variant: str = "collapsed"
    states: int = 2
    alphabet: int = 10
    m: int = 1
    iterations: int = 100
    cadence: int = 100
    seed: int = 0
    run: int = 0
    threads: int = 1
    priors: HmmPriors = field(default_factory=HmmPriors)

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError("variant", f"must be one of {VARIANTS}, got {self.variant!r}")
        for name in ("states", "alphabet", "m", "iterations", "cadence", "threads"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(name, f"must be >= 1, got {getattr(self, name)}")


@dataclass
class HmmRunResult:
    params: HmmParams
    paths: np.ndarray
    counts: HmmCounts
    trace: List[Tuple[int, float]]

    @property
    def final_log_likelihood(self) -> float:
        return self.trace[-1][1]


def make_hmm_sampler(config: HmmSamplerConfig, w: Sequence[int], executor: Optional[Executor] = None):
    rng = RngStream(config.seed, (config.run, 0, Phase.INIT))
    args = (w, config.states, config.alphabet, config.m, config.priors, rng)
    if config.variant == "pc":
        return HmmPcSampler(*args, executor=executor)
    return HmmCollapsedSampler(*args)


def run_hmm_sampler(config: HmmSamplerConfig, w: Sequence[int]) -> HmmRunResult:
    obs = as_observations(w, config.alphabet)
    executor = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 and config.variant == "pc" else None
    try:
        sampler = make_hmm_sampler(config, obs, executor=executor)
        trace = [(0, forward_log_likelihood(sampler.point_estimate(), obs))]
        for it in range(1, config.iterations + 1):
            sampler.sweep()
            if it % config.cadence == 0:
                ll = forward_log_likelihood(sampler.point_estimate(), obs)
                trace.append((it, ll))
                logger.debug(f"hmm {config.variant} m={config.m} run={config.run} iter={it} loglik={ll:.6f}")
    finally:
        if executor is not None:
            executor.shutdown()
    return HmmRunResult(sampler.point_estimate(), sampler.paths.copy(), sampler.counts, trace)
