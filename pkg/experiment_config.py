#!/usr/bin/env python3
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from errors import ConfigError
from hmm_engine import HmmPriors, HmmSamplerConfig
from lda_engine import LdaPriors, LdaSamplerConfig

MODELS = ("hmm", "lda")
VARIANTS = ("pc", "collapsed")
_MAX_SEED = 2 ** 64


def _int_field(data: Dict[str, Any], name: str, default: Optional[int] = None, minimum: int = 1,
               label: Optional[str] = None) -> int:
    label = label or name
    value = data.get(name, default)
    if value is None:
        raise ConfigError(label, "is required")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(label, f"must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(label, f"must be >= {minimum}, got {value}")
    return value


def _positive_float(data: Dict[str, Any], name: str, default: float) -> float:
    value = data.get(name, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigError(f"priors.{name}", f"must be a positive number, got {value!r}")
    return float(value)


@dataclass
class ExperimentConfig:
    model: str
    variant: str
    dataset: str
    m: int = 1
    iterations: int = 1000
    repetitions: int = 1
    seed: int = 0
    cadence: int = 100
    threads: int = 1
    topics: int = 10
    states: int = 2
    path_choice: int = 0
    priors: Dict[str, float] = field(default_factory=dict)
    output: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: str = ".") -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config", "must be a JSON object")
        model = data.get("model")
        if model not in MODELS:
            raise ConfigError("model", f"must be one of {MODELS}, got {model!r}")
        variant = data.get("variant", "collapsed")
        if variant not in VARIANTS:
            raise ConfigError("variant", f"must be one of {VARIANTS}, got {variant!r}")
        dataset = data.get("dataset")
        if not isinstance(dataset, str) or not dataset:
            raise ConfigError("dataset", "must name a dataset directory")
        if not os.path.isabs(dataset):
            dataset = os.path.normpath(os.path.join(base_dir, dataset))
        output = data.get("output")
        if output is not None:
            if not isinstance(output, str) or not output:
                raise ConfigError("output", "must be a directory path")
            if not os.path.isabs(output):
                output = os.path.normpath(os.path.join(base_dir, output))
        seed = _int_field(data, "seed", 0, minimum=0)
        if seed >= _MAX_SEED:
            raise ConfigError("seed", "must fit in 64 unsigned bits")
        topics = _int_field(data, "topics", 10)
        m = _int_field(data, "m", 1)
        path_choice = _int_field(data, "path_choice", 0, minimum=0)
        if path_choice >= m:
            raise ConfigError("path_choice", f"must be < m={m}")
        raw_priors = data.get("priors") or {}
        if not isinstance(raw_priors, dict):
            raise ConfigError("priors", "must be a JSON object")
        if model == "hmm":
            priors = {
                "init_conc": _positive_float(raw_priors, "init_conc", 1.0),
                "trans_conc": _positive_float(raw_priors, "trans_conc", 1.0),
                "emit_conc": _positive_float(raw_priors, "emit_conc", 1.0),
            }
        else:
            priors = {
                "eta": _positive_float(raw_priors, "eta", 0.01),
                "alpha": _positive_float(raw_priors, "alpha", 10.0 / topics),
            }
        return cls(
            model=model,
            variant=variant,
            dataset=dataset,
            m=m,
            iterations=_int_field(data, "iterations", 1000),
            repetitions=_int_field(data, "repetitions", 1),
            seed=seed,
            cadence=_int_field(data, "cadence", 100),
            threads=_int_field(data, "threads", 1),
            topics=topics,
            states=_int_field(data, "states", 2),
            path_choice=path_choice,
            priors=priors,
            output=output,
        )

    @classmethod
    def load(cls, path: str, overrides: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
        if isinstance(data, dict):
            data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def digest(self) -> str:
        # threads y output no cambian resultados: quedan fuera del hash
        payload = {k: v for k, v in self.to_dict().items() if k not in ("threads", "output")}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()

    def hmm_sampler_config(self, repetition: int, alphabet: int) -> HmmSamplerConfig:
        return HmmSamplerConfig(
            variant=self.variant,
            states=self.states,
            alphabet=alphabet,
            m=self.m,
            iterations=self.iterations,
            cadence=self.cadence,
            seed=self.seed,
            run=repetition,
            threads=self.threads,
            priors=HmmPriors(**self.priors),
        )

    def lda_sampler_config(self, repetition: int) -> LdaSamplerConfig:
        return LdaSamplerConfig(
            variant=self.variant,
            topics=self.topics,
            m=self.m,
            iterations=self.iterations,
            cadence=self.cadence,
            seed=self.seed,
            run=repetition,
            threads=self.threads,
            priors=LdaPriors(**self.priors),
            path_choice=self.path_choice,
        )


def _float_field(data: Dict[str, Any], name: str, default: float, label: str,
                 low: float, high: float, low_open: bool = True, high_open: bool = False) -> float:
    value = data.get(name, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(label, f"must be a number, got {value!r}")
    if (value <= low if low_open else value < low) or (value >= high if high_open else value > high):
        lo, hi = ("(" if low_open else "["), (")" if high_open else "]")
        raise ConfigError(label, f"must lie in {lo}{low}, {high}{hi}, got {value}")
    return float(value)


@dataclass
class BaumWelchSpec:
    seed: int = 0
    restarts: int = 1
    max_iters: int = 100
    tol: float = 1e-6


@dataclass
class EvalSpec:
    """Parámetros de `eval` validados contra la config de la corrida."""

    metrics: Optional[List[str]] = None
    gamma: float = 0.05
    top_k: int = 10
    topics: List[int] = field(default_factory=list)
    disc_reference: Optional[str] = None
    disc_table: List[str] = field(default_factory=list)
    baum_welch: BaumWelchSpec = field(default_factory=BaumWelchSpec)
    output: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], run: ExperimentConfig) -> "EvalSpec":
        if not isinstance(data, dict):
            raise ConfigError("config", "must be a JSON object")
        metrics = data.get("metrics")
        if metrics is not None and (not isinstance(metrics, list) or not all(isinstance(n, str) for n in metrics)):
            raise ConfigError("metrics", "must be a list of metric names")

        topics = data.get("topics", list(range(run.topics)))
        if not isinstance(topics, list):
            raise ConfigError("topics", f"must be a list of topic indices, got {topics!r}")
        for t in topics:
            if isinstance(t, bool) or not isinstance(t, int) or not 0 <= t < run.topics:
                raise ConfigError("topics", f"{t!r} is not a topic index in [0, {run.topics})")

        for name in ("disc_reference", "output"):
            value = data.get(name)
            if value is not None and (not isinstance(value, str) or not value):
                raise ConfigError(name, "must be a path")
        disc_table = data.get("disc_table") or []
        if not isinstance(disc_table, list) or not all(isinstance(d, str) and d for d in disc_table):
            raise ConfigError("disc_table", "must be a list of run directories")

        raw_bw = data.get("baum_welch") or {}
        if not isinstance(raw_bw, dict):
            raise ConfigError("baum_welch", "must be a JSON object")
        bw_seed = _int_field(raw_bw, "seed", run.seed, minimum=0, label="baum_welch.seed")
        if bw_seed >= _MAX_SEED:
            raise ConfigError("baum_welch.seed", "must fit in 64 unsigned bits")
        baum_welch = BaumWelchSpec(
            seed=bw_seed,
            restarts=_int_field(raw_bw, "restarts", 1, label="baum_welch.restarts"),
            max_iters=_int_field(raw_bw, "max_iters", 100, label="baum_welch.max_iters"),
            tol=_float_field(raw_bw, "tol", 1e-6, "baum_welch.tol", 0.0, math.inf, low_open=False),
        )

        return cls(
            metrics=metrics,
            gamma=_float_field(data, "gamma", 0.05, "gamma", 0.0, 1.0, high_open=True),
            top_k=_int_field(data, "top_k", 10),
            topics=topics,
            disc_reference=data.get("disc_reference"),
            disc_table=disc_table,
            baum_welch=baum_welch,
            output=data.get("output"),
        )
