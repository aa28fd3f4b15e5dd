#!/usr/bin/env python3
"""
Primitivas de probabilidad deterministas y con semilla, compartidas por los
motores HMM y LDA.

Protocolo de aleatoriedad: cada flujo se identifica por (seed, (run, path, phase))
y usa Philox (generador basado en contador) sembrado vía SeedSequence con
``spawn_key``. Los kernels nunca sacan números aleatorios: reciben uniformes ya
generados, de modo que el resultado es idéntico con o sin numba.
"""

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from errors import InvalidArgumentError

try:
    from numba import njit  # type: ignore
except Exception:
    njit = None  # fallback a Python puro

SIMPLEX_TOL = 1e-9
_MAX_SEED = 2 ** 64


def jit(fn):
    """Compila con numba si está disponible; si no, deja la función intacta."""
    if njit is None:
        return fn
    return njit(cache=True, nogil=True)(fn)


class Phase(IntEnum):
    INIT = 0
    PARAMS = 1
    SWEEP = 2
    GENERATE = 3
    EMISSIONS = 4
    BASELINE = 5


@dataclass
class RngStream:
    seed: int
    stream_id: Tuple[int, int, int] = (0, 0, 0)
    _gen: Optional[np.random.Generator] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= int(self.seed) < _MAX_SEED:
            raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        ids = tuple(int(x) for x in self.stream_id)
        if len(ids) != 3 or any(x < 0 for x in ids):
            raise InvalidArgumentError(f"stream_id must be three non-negative integers, got {self.stream_id!r}")
        self.seed = int(self.seed)
        self.stream_id = ids

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=self.stream_id)
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def derive(self, run: Optional[int] = None, path: Optional[int] = None, phase: Optional[int] = None) -> "RngStream":
        r, p, ph = self.stream_id
        return RngStream(
            self.seed,
            (
                r if run is None else int(run),
                p if path is None else int(path),
                ph if phase is None else int(phase),
            ),
        )

    def uniforms(self, n: int) -> np.ndarray:
        return self.gen.random(n)


RngLike = Union[RngStream, np.random.Generator]


def _generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    raise InvalidArgumentError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def as_simplex(weights: Sequence[float], name: str = "distribution") -> np.ndarray:
    p = np.asarray(weights, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InvalidArgumentError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InvalidArgumentError(f"{name} has negative or non-finite entries")
    if abs(p.sum() - 1.0) > SIMPLEX_TOL:
        raise InvalidArgumentError(f"{name} sums to {p.sum()!r}, not 1")
    return p


def as_simplex_rows(rows: Sequence[Sequence[float]], name: str = "rows") -> np.ndarray:
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidArgumentError(f"{name} must be a non-empty matrix")
    for k in range(arr.shape[0]):
        as_simplex(arr[k], name=f"{name}[{k}]")
    return arr


@jit
def categorical_from_uniform(weights, u):
    # Una uniforme + inversión sobre sumas prefijas en orden de índice.
    # Devuelve -1 si no hay masa positiva.
    total = 0.0
    for k in range(weights.shape[0]):
        total += weights[k]
    if not total > 0.0:
        return -1
    target = u * total
    acc = 0.0
    last = -1
    for k in range(weights.shape[0]):
        wk = weights[k]
        if wk > 0.0:
            acc += wk
            last = k
            if target < acc:
                return k
    return last


@jit
def categorical_many(weights, uniforms, out):
    for n in range(uniforms.shape[0]):
        out[n] = categorical_from_uniform(weights, uniforms[n])


def _check_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise InvalidArgumentError("weights must be a non-empty vector")
    if not np.all(np.isfinite(w)):
        raise InvalidArgumentError("weights must be finite")
    if np.any(w < 0):
        raise InvalidArgumentError("weights must be non-negative")
    if not np.any(w > 0):
        raise InvalidArgumentError("weights are all zero")
    return w


def sample_categorical(weights: Sequence[float], rng: RngLike) -> int:
    w = _check_weights(weights)
    u = _generator(rng).random()
    return int(categorical_from_uniform(w, u))


def sample_categorical_many(weights: Sequence[float], n: int, rng: RngLike) -> np.ndarray:
    w = _check_weights(weights)
    out = np.empty(int(n), dtype=np.int64)
    categorical_many(w, _generator(rng).random(int(n)), out)
    return out


def sample_dirichlet(concentration: Sequence[float], rng: RngLike) -> np.ndarray:
    conc = np.asarray(concentration, dtype=np.float64)
    if conc.ndim != 1 or conc.size == 0:
        raise InvalidArgumentError("concentration must be a non-empty vector")
    if not np.all(np.isfinite(conc)) or np.any(conc <= 0):
        raise InvalidArgumentError("concentration entries must be finite and > 0")
    gen = _generator(rng)
    g = gen.standard_gamma(conc)
    total = g.sum()
    if total > 0 and np.isfinite(total):
        return g / total
    # Concentraciones muy pequeñas: todas las Gamma se van a cero. Se usa
    # G(a) = G(a+1) * U^(1/a) en espacio log.
    log_g = np.log(gen.standard_gamma(conc + 1.0)) + np.log(gen.random(conc.size)) / conc
    p = np.exp(log_g - log_sum_exp(log_g))
    return p / p.sum()


def log_sum_exp(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgumentError("log_sum_exp needs a non-empty vector")
    if np.any(np.isnan(v)) or np.any(v == np.inf):
        raise InvalidArgumentError("log_sum_exp entries must not be NaN or +inf")
    m = v.max()
    if m == -np.inf:
        return -math.inf
    return float(m + math.log(np.exp(v - m).sum()))


def entropy(dist: Sequence[float]) -> float:
    p = as_simplex(dist)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def log_dirichlet_multinomial(counts: np.ndarray, conc: float) -> float:
    """Término log de Dirichlet-multinomial sumado sobre las filas (último eje = categorías)."""
    c = np.asarray(counts, dtype=np.float64)
    if c.ndim == 1:
        c = c[None, :]
    k = c.shape[-1]
    rows = c.reshape(-1, k)
    n = rows.sum(axis=1)
    return float(
        (gammaln(k * conc) - gammaln(k * conc + n)).sum()
        + (gammaln(conc + rows) - gammaln(conc)).sum()
    )
