#!/usr/bin/env python3
"""
Multipath Gibbs - harness de experimentos
Genera datasets sintéticos, ejecuta repeticiones de los muestreadores y calcula métricas
"""

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields, replace
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv

from data_io import (
    OBSERVATION_FORMATS,
    SynthHmmSpec,
    SynthLdaSpec,
    dataset_digest,
    load_corpus,
    load_hmm_params,
    load_observations,
    load_topics,
    read_metadata,
    save_hmm_params,
    save_topics,
    write_hmm_dataset,
    write_lda_dataset,
)
from errors import ConfigError, InvalidArgumentError, MultipathError, RepetitionError
from eval_metrics import (
    WEIGHTINGS,
    baum_welch_baseline,
    bucket_histogram,
    closest_topics,
    disc,
    disc_table,
    ground_truth_log_likelihood,
    ranked_topic_totals,
    top_words,
    topic_bucket_sets,
    topic_weight_series,
    yearly_entropy_curve,
    yearly_topic_table,
)
from experiment_config import EvalSpec, ExperimentConfig
from hmm_engine import HmmParams, forward_log_likelihood, run_hmm_sampler
from lda_engine import Corpus, TopicMatrix, run_lda_sampler
from metrics import (
    REPETITION_DURATION_MS,
    SWEEPS_TOTAL,
    TOOL_DURATION_MS,
    TOOL_ERRORS_TOTAL,
    TOOL_REQUESTS_TOTAL,
    export_metrics,
)
from run_storage import finish_run, latest_run, list_repetitions, record_repetition, record_run

logger = logging.getLogger(__name__)

HMM_METRICS = ("log_likelihood", "ground_truth", "baum_welch")
LDA_METRICS = ("disc", "entropy", "buckets", "topic_weights", "top_words", "closest_topics")
YEAR_METRICS = ("entropy", "buckets", "topic_weights")
# sin spec de evaluación solo se calcula lo que no requiere verdad de terreno ni años
DEFAULT_METRICS = {"hmm": ["log_likelihood"], "lda": ["top_words"]}


# -------- utilidades de E/S --------

def _fmt(value: Any) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _read_json(source: Any, what: str) -> Dict[str, Any]:
    if isinstance(source, dict):
        return dict(source)
    if not isinstance(source, str) or not source:
        raise ConfigError(what, "must be a JSON file path")
    try:
        with open(source, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(what, f"{source}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(what, f"{source}: must be a JSON object")
    return data


def _rep_dir(run_dir: str, repetition: int) -> str:
    return os.path.join(run_dir, f"rep_{repetition:03d}")


def _load_hmm_dataset(dataset: str) -> Tuple[np.ndarray, int, Optional[HmmParams]]:
    meta = read_metadata(dataset)
    name = meta.get("observations")
    if name is None:
        candidates = [n for n in ("observations.txt", "observations.bin") if os.path.exists(os.path.join(dataset, n))]
        if not candidates:
            raise InvalidArgumentError(f"{dataset}: no observations file found")
        name = candidates[0]
    params_path = os.path.join(dataset, "params.json")
    truth = load_hmm_params(params_path) if os.path.exists(params_path) else None
    if truth is not None:
        alphabet = truth.W
    elif "alphabet" in meta.get("spec", {}):
        alphabet = int(meta["spec"]["alphabet"])
    else:
        alphabet = None
    obs = load_observations(os.path.join(dataset, name), alphabet=alphabet)
    return obs, alphabet if alphabet is not None else int(obs.max()) + 1, truth


def _load_lda_dataset(dataset: str) -> Tuple[Corpus, Optional[TopicMatrix]]:
    corpus = load_corpus(os.path.join(dataset, "corpus.jsonl"))
    topics_path = os.path.join(dataset, "topics.json")
    truth = load_topics(topics_path) if os.path.exists(topics_path) else None
    return corpus, truth


def _read_theta(rep_dir: str) -> np.ndarray:
    theta = np.loadtxt(os.path.join(rep_dir, "theta.csv"), delimiter=",", skiprows=1, ndmin=2)[:, 1:]
    # el CSV guarda 9 dígitos significativos
    return theta / theta.sum(axis=1, keepdims=True)


# -------- repeticiones (se ejecutan en procesos hijos cuando hay paralelismo) --------

def _run_repetition(config_dict: Dict[str, Any], repetition: int, run_dir: str, threads: int) -> Dict[str, Any]:
    config = ExperimentConfig(**config_dict)
    rep_dir = _rep_dir(run_dir, repetition)
    start = time.perf_counter()
    try:
        os.makedirs(rep_dir, exist_ok=True)
        if config.model == "hmm":
            obs, alphabet, _ = _load_hmm_dataset(config.dataset)
            sampler_config = replace(config.hmm_sampler_config(repetition, alphabet), threads=threads)
            result = run_hmm_sampler(sampler_config, obs)
            _write_csv(os.path.join(rep_dir, "trace.csv"), ["iteration", "log_likelihood"], result.trace)
            save_hmm_params(result.params, os.path.join(rep_dir, "params.json"))
            metric, value = "final_log_likelihood", result.final_log_likelihood
        else:
            corpus, truth = _load_lda_dataset(config.dataset)
            sampler_config = replace(config.lda_sampler_config(repetition), threads=threads)
            result = run_lda_sampler(sampler_config, corpus)
            _write_csv(os.path.join(rep_dir, "trace.csv"), ["iteration", "log_joint"], result.trace)
            save_topics(result.topics, os.path.join(rep_dir, "topics.json"), eta=config.priors["eta"])
            m, n = result.assignments.shape
            _write_csv(os.path.join(rep_dir, "assignments.csv"), ["token", "path", "topic"],
                       [[i, j, int(result.assignments[j, i])] for j in range(m) for i in range(n)])
            header = ["doc"] + [f"topic_{t}" for t in range(result.theta.shape[1])]
            _write_csv(os.path.join(rep_dir, "theta.csv"), header,
                       [[d, *row.tolist()] for d, row in enumerate(result.theta)])
            if truth is not None:
                metric, value = "disc", disc(truth, result.topics)
            else:
                metric, value = "log_joint", result.trace[-1][1]
        return {
            "repetition": repetition,
            "metric": metric,
            "value": float(value),
            "duration_ms": (time.perf_counter() - start) * 1000.0,
            "trace_points": len(result.trace),
        }
    except Exception as e:
        # las excepciones propias no siempre sobreviven el pickling entre procesos
        return {
            "repetition": repetition,
            "error": str(e),
            "error_type": type(e).__name__,
            "invalid": isinstance(e, InvalidArgumentError),
        }


class ExperimentHarness:
    def __init__(self):
        self.tools = {
            "generate": self._generate,
            "run": self._run,
            "eval": self._eval,
        }
        self.stats = {
            "requests": 0,
            "errors": 0,
            "start_time": datetime.now().isoformat(),
            "tool_metrics": {}
        }

    def get_tools(self) -> List[str]:
        return list(self.tools.keys())

    def handle_request(self, request: Dict[str, Any]) -> Dict[str, Any]:
        tool = request.get("tool", "")
        try:
            self.stats["requests"] += 1
            params = request.get("params", {})

            if tool not in self.tools:
                return {"success": False, "error": f"Tool not found: {tool}", "available_tools": self.get_tools(), "invalid": True}

            start = time.perf_counter()
            result = self.tools[tool](params)
            duration_ms = (time.perf_counter() - start) * 1000.0

            TOOL_REQUESTS_TOTAL.labels(tool=tool).inc()
            TOOL_DURATION_MS.labels(tool=tool).observe(duration_ms)

            tm = self.stats["tool_metrics"].setdefault(tool, {"calls": 0, "total_ms": 0.0, "avg_ms": 0.0, "last_ms": 0.0})
            tm["calls"] += 1
            tm["total_ms"] += duration_ms
            tm["last_ms"] = duration_ms
            tm["avg_ms"] = tm["total_ms"] / max(1, tm["calls"])

            return {
                "success": True,
                "result": result,
                "tool": tool,
                "duration_ms": round(duration_ms, 2),
                "timestamp": datetime.now().isoformat(),
            }
        except (MultipathError, OSError) as e:
            self.stats["errors"] += 1
            TOOL_ERRORS_TOTAL.labels(tool=tool or "unknown").inc()
            logger.error(f"Error in {tool}: {e}")
            return {
                "success": False,
                "error": str(e),
                "error_type": type(e).__name__,
                "invalid": _is_invalid(e),
                "tool": tool,
            }
        except Exception as e:
            self.stats["errors"] += 1
            TOOL_ERRORS_TOTAL.labels(tool=tool or "unknown").inc()
            logger.exception(f"Unexpected error in {tool}: {e}")
            return {
                "success": False,
                "error": str(e),
                "error_type": type(e).__name__,
                "invalid": False,
                "tool": tool,
            }

    # -------- generate --------

    def _generate(self, params: Dict[str, Any]) -> Dict[str, Any]:
        spec = _read_json(params.get("config"), "config")
        out = params.get("out") or spec.pop("output", None)
        spec.pop("output", None)
        if not out:
            raise ConfigError("out", "an output directory is required")
        model = spec.pop("model", None)
        if model == "hmm":
            fmt = spec.pop("format", "text")
            if fmt not in OBSERVATION_FORMATS:
                raise ConfigError("format", f"must be one of {OBSERVATION_FORMATS}, got {fmt!r}")
            metadata = write_hmm_dataset(_build_spec(SynthHmmSpec, spec), out, fmt)
        elif model == "lda":
            if spec.get("year_span") is not None:
                span = spec["year_span"]
                if not isinstance(span, list) or len(span) != 2:
                    raise ConfigError("year_span", "must be a [first, last] pair")
                spec["year_span"] = tuple(span)
            metadata = write_lda_dataset(_build_spec(SynthLdaSpec, spec), out)
        else:
            raise ConfigError("model", f"must be 'hmm' or 'lda', got {model!r}")
        digest = dataset_digest(out)
        logger.info(f"dataset {out} digest={digest}")
        return {"dataset": os.path.abspath(out), "digest": digest, "metadata": metadata}

    # -------- run --------

    def _run(self, params: Dict[str, Any]) -> Dict[str, Any]:
        config_path = params.get("config")
        if not isinstance(config_path, str):
            raise ConfigError("config", "a run config file is required")
        overrides = {"seed": params.get("seed"), "threads": _resolve_threads(params.get("threads"))}
        config = ExperimentConfig.load(config_path, overrides)
        run_dir = params.get("out") or config.output
        if not run_dir:
            raise ConfigError("out", "an output directory is required")
        run_dir = os.path.abspath(run_dir)
        if not os.path.isdir(config.dataset):
            raise ConfigError("dataset", f"{config.dataset} does not exist")
        os.makedirs(run_dir, exist_ok=True)
        for stale in ("FAILED.txt", "summary.csv"):
            if os.path.exists(os.path.join(run_dir, stale)):
                os.remove(os.path.join(run_dir, stale))

        resolved = config.to_dict()
        resolved["output"] = run_dir
        with open(os.path.join(run_dir, "config.json"), "w", encoding="utf-8") as f:
            json.dump(resolved, f, indent=2, sort_keys=True)
            f.write("\n")

        data_digest = dataset_digest(config.dataset)
        run_id = record_run(run_dir, resolved, config.digest(), data_digest)
        logger.info(f"run {run_id}: {config.model}/{config.variant} m={config.m} "
                    f"iterations={config.iterations} repetitions={config.repetitions} -> {run_dir}")

        config_dict = asdict(config)
        reps = list(range(config.repetitions))
        if config.threads > 1 and config.repetitions > 1:
            workers = min(config.threads, config.repetitions)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_run_repetition, [config_dict] * len(reps), reps,
                                         [run_dir] * len(reps), [1] * len(reps)))
        else:
            outcomes = [_run_repetition(config_dict, r, run_dir, config.threads) for r in reps]

        failures = [o for o in outcomes if "error" in o]
        for o in outcomes:
            if "error" in o:
                logger.error(f"repetition {o['repetition']} failed: {o['error_type']}: {o['error']}")
                continue
            SWEEPS_TOTAL.labels(model=config.model, variant=config.variant).inc(config.iterations)
            REPETITION_DURATION_MS.labels(model=config.model, variant=config.variant).observe(o["duration_ms"])
            record_repetition(run_dir, run_id, o["repetition"], o["metric"], o["value"], o["duration_ms"])
            logger.info(f"repetition {o['repetition']}: {o['metric']}={o['value']:.9g} ({o['duration_ms']:.0f} ms)")

        export_metrics(_metrics_path(run_dir))
        if failures:
            with open(os.path.join(run_dir, "FAILED.txt"), "w", encoding="utf-8") as f:
                for o in failures:
                    f.write(f"repetition {o['repetition']}: {o['error_type']}: {o['error']}\n")
            finish_run(run_dir, run_id, "failed")
            first = failures[0]
            cause = InvalidArgumentError(first["error"]) if first["invalid"] else MultipathError(f"{first['error_type']}: {first['error']}")
            raise RepetitionError(first["repetition"], cause)

        metric = outcomes[0]["metric"]
        ordered = sorted(outcomes, key=lambda o: (o["value"], o["repetition"]))
        _write_csv(os.path.join(run_dir, "summary.csv"), ["repetition", metric],
                   [[o["repetition"], o["value"]] for o in ordered])
        finish_run(run_dir, run_id, "done")
        return {
            "run_dir": run_dir,
            "run_id": run_id,
            "metric": metric,
            "values": [o["value"] for o in ordered],
            "trace_points": outcomes[0]["trace_points"],
        }

    # -------- eval --------

    def _eval(self, params: Dict[str, Any]) -> Dict[str, Any]:
        run_dir = params.get("run")
        if not isinstance(run_dir, str) or not os.path.isdir(run_dir):
            raise ConfigError("run", f"run directory {run_dir!r} does not exist")
        run_dir = os.path.abspath(run_dir)
        raw = _read_json(params["config"], "config") if params.get("config") else {}
        config = ExperimentConfig.from_dict(_read_json(os.path.join(run_dir, "config.json"), "config.json"))
        spec = EvalSpec.from_dict(raw, config)
        out = os.path.abspath(params.get("out") or spec.output or os.path.join(run_dir, "eval"))
        allowed = HMM_METRICS if config.model == "hmm" else LDA_METRICS
        requested = spec.metrics if spec.metrics is not None else DEFAULT_METRICS[config.model]
        for name in requested:
            if name not in allowed:
                raise ConfigError("metrics", f"{name!r} is not available for {config.model}; choose from {allowed}")
        reps = _repetitions(run_dir)
        if not reps and requested:
            raise InvalidArgumentError(f"{run_dir}: no completed repetitions")

        results: List[Dict[str, Any]] = []
        if config.model == "hmm":
            self._eval_hmm(config, spec, requested, run_dir, reps, out, results)
        else:
            self._eval_lda(config, spec, requested, run_dir, reps, out, results)
        if spec.disc_table:
            self._eval_disc_table(spec.disc_table, out, results)

        os.makedirs(out, exist_ok=True)
        _write_csv(os.path.join(out, "results.csv"), ["name", "value"], [[r["name"], r["value"]] for r in results])
        with open(os.path.join(out, "results.json"), "w", encoding="utf-8") as f:
            json.dump(results, f, indent=2)
            f.write("\n")
        logger.info(f"eval of {run_dir}: {len(results)} values written to {out}")
        return {"out": out, "results": results}

    def _eval_hmm(self, config, spec, requested, run_dir, reps, out, results) -> None:
        obs, alphabet, truth = _load_hmm_dataset(config.dataset)
        if "log_likelihood" in requested:
            rows = []
            for r in reps:
                ll = forward_log_likelihood(load_hmm_params(os.path.join(_rep_dir(run_dir, r), "params.json")), obs)
                rows.append([r, ll])
                results.append({"name": f"log_likelihood.rep_{r:03d}", "value": ll})
            _write_csv(os.path.join(out, "log_likelihood.csv"), ["repetition", "log_likelihood"], rows)
        if "ground_truth" in requested:
            if truth is None:
                raise InvalidArgumentError(f"{config.dataset}: no ground-truth params.json")
            results.append({"name": "ground_truth_log_likelihood", "value": ground_truth_log_likelihood(truth, obs)})
        if "baum_welch" in requested:
            bw = spec.baum_welch
            _, trace = baum_welch_baseline(
                obs, config.states, alphabet,
                seed=bw.seed, restarts=bw.restarts, max_iters=bw.max_iters, tol=bw.tol,
            )
            _write_csv(os.path.join(out, "baum_welch.csv"), ["iteration", "log_likelihood"], list(enumerate(trace)))
            results.append({"name": "baum_welch_log_likelihood", "value": trace[-1]})

    def _eval_lda(self, config, spec, requested, run_dir, reps, out, results) -> None:
        corpus, truth = _load_lda_dataset(config.dataset)
        learned = {r: load_topics(os.path.join(_rep_dir(run_dir, r), "topics.json")) for r in reps}
        reference = truth
        if spec.disc_reference:
            reference = load_topics(spec.disc_reference)

        if any(name in YEAR_METRICS for name in requested) and not corpus.has_years:
            raise InvalidArgumentError(f"{config.dataset}: corpus has no year stamps; yearly metrics need them")
        tables = {r: yearly_topic_table(_read_theta(_rep_dir(run_dir, r)), corpus.doc_years) for r in reps} \
            if corpus.has_years else {}

        if "disc" in requested:
            if reference is None:
                raise InvalidArgumentError(f"{config.dataset}: no ground-truth topics.json and no disc_reference")
            rows = [[r, disc(reference, learned[r])] for r in reps]
            _write_csv(os.path.join(out, "disc.csv"), ["repetition", "disc"], rows)
            results.append({"name": "disc_mean", "value": float(np.mean([v for _, v in rows]))})
        if "entropy" in requested:
            rows = [[r, y, h] for r in reps for y, h in yearly_entropy_curve(tables[r])]
            _write_csv(os.path.join(out, "entropy.csv"), ["repetition", "year", "entropy"], rows)
        if "buckets" in requested:
            rows = []
            for weighting in WEIGHTINGS:
                hist = bucket_histogram([tables[r] for r in reps], spec.gamma, weighting)
                rows.extend([weighting, int(n), m] for n, m in zip(hist.lengths, hist.mass))
                results.append({"name": f"bucket_mean_length.{weighting}", "value": hist.mean_length})
            _write_csv(os.path.join(out, "buckets.csv"), ["weighting", "length", "mass"], rows)
            rows = [[r, b.topic, i, int(n)]
                    for r in reps for b in topic_bucket_sets(tables[r], spec.gamma)
                    for i, n in enumerate(b.bucket_lengths)]
            _write_csv(os.path.join(out, "bucket_lengths.csv"), ["repetition", "topic", "bucket_index", "length"], rows)
        if "topic_weights" in requested:
            rows = [[r, t, y, v] for r in reps for t in spec.topics for y, v in topic_weight_series(tables[r], t)]
            _write_csv(os.path.join(out, "topic_weights.csv"), ["repetition", "topic", "year", "weight"], rows)
        if "buckets" in requested or "topic_weights" in requested:
            rows = [[r, rank, t, w]
                    for r in reps for rank, (t, w) in enumerate(ranked_topic_totals(tables[r]))]
            _write_csv(os.path.join(out, "topic_totals.csv"), ["repetition", "rank", "topic", "total_weight"], rows)
        if "top_words" in requested:
            rows = [[r, t, rank, word, p]
                    for r in reps for t in range(config.topics)
                    for rank, (word, p) in enumerate(top_words(learned[r].topics[t], spec.top_k, corpus.vocab))]
            _write_csv(os.path.join(out, "top_words.csv"), ["repetition", "topic", "rank", "word", "probability"], rows)
        if "closest_topics" in requested:
            base = reference if reference is not None else learned[reps[0]]
            rows = []
            for r in reps:
                idx, dist = closest_topics(base, learned[r])
                rows.extend([r, t, int(i), float(dv)] for t, (i, dv) in enumerate(zip(idx, dist)))
            _write_csv(os.path.join(out, "closest_topics.csv"), ["repetition", "topic", "closest", "distance"], rows)

    def _eval_disc_table(self, run_dirs: Any, out: str, results: List[Dict[str, Any]]) -> None:
        if not isinstance(run_dirs, list):
            raise ConfigError("disc_table", "must be a list of run directories")
        entries = []
        for run_dir in run_dirs:
            config = ExperimentConfig.from_dict(_read_json(os.path.join(run_dir, "config.json"), "config.json"))
            if config.model != "lda":
                raise ConfigError("disc_table", f"{run_dir} is not an lda run")
            truth_path = os.path.join(config.dataset, "topics.json")
            if not os.path.exists(truth_path):
                raise InvalidArgumentError(f"{config.dataset}: disc_table needs ground-truth topics.json")
            truth = load_topics(truth_path)
            docs = read_metadata(config.dataset).get("documents")
            if docs is None:
                docs = load_corpus(os.path.join(config.dataset, "corpus.jsonl")).doc_count
            for r in _repetitions(run_dir):
                learned = load_topics(os.path.join(_rep_dir(run_dir, r), "topics.json"))
                entries.append((config.m, int(docs), disc(truth, learned)))
        ms, docs_axis, grid = disc_table(entries)
        _write_csv(os.path.join(out, "disc_table.csv"), ["m"] + [f"docs_{d}" for d in docs_axis],
                   [[m, *grid[i].tolist()] for i, m in enumerate(ms)])
        for i, m in enumerate(ms):
            for k, d in enumerate(docs_axis):
                results.append({"name": f"disc_table.m_{m}.docs_{d}", "value": float(grid[i, k])})


def _is_invalid(e: BaseException) -> bool:
    # un fallo de repetición hereda la clase de su causa
    return isinstance(e, InvalidArgumentError) or isinstance(getattr(e, "cause", None), InvalidArgumentError)


def _build_spec(cls, data: Dict[str, Any]):
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(key, f"unknown field for {cls.__name__}")
    return cls(**data)


def _resolve_threads(flag: Optional[int]) -> Optional[int]:
    if flag is not None:
        return flag
    env = os.getenv("MULTIPATH_THREADS")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError as e:
        raise ConfigError("MULTIPATH_THREADS", f"must be an integer, got {env!r}") from e


def _metrics_path(run_dir: str) -> str:
    name = os.getenv("MULTIPATH_METRICS_FILE", "metrics.prom")
    return name if os.path.isabs(name) else os.path.join(run_dir, name)


def _repetitions(run_dir: str) -> List[int]:
    run = latest_run(run_dir)
    if run is not None:
        reps = sorted({r["repetition"] for r in list_repetitions(run_dir, run["id"])})
        if reps:
            return reps
    # ledger externo o ausente: se recorre el directorio
    return sorted(int(n[4:]) for n in os.listdir(run_dir) if n.startswith("rep_") and n[4:].isdigit())


experiment_harness = ExperimentHarness()


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Multipath Gibbs: datasets, runs y métricas")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Generar un dataset sintético desde un spec JSON")
    gen.add_argument("--config", required=True, help="Spec JSON del dataset")
    gen.add_argument("--out", help="Directorio de salida")

    run = sub.add_parser("run", help="Ejecutar las repeticiones de un experimento")
    run.add_argument("--config", required=True, help="Config JSON del experimento")
    run.add_argument("--out", help="Directorio de la corrida")
    run.add_argument("--threads", type=int, help="Procesos/hilos de trabajo")
    run.add_argument("--seed", type=_u64, help="Semilla base (sobrescribe el config)")

    ev = sub.add_parser("eval", help="Calcular métricas sobre una corrida")
    ev.add_argument("--run", required=True, help="Directorio de la corrida")
    ev.add_argument("--config", help="Spec JSON de evaluación")
    ev.add_argument("--out", help="Directorio de salida de métricas")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    level = os.getenv("MULTIPATH_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO))

    args = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k != "command"}
    response = experiment_harness.handle_request({"tool": args.command, "params": params})
    if not response["success"]:
        print(f"error: {response['error']}", file=sys.stderr)
        return 2 if response.get("invalid") else 1

    result = response["result"]
    if args.command == "generate":
        print(result["digest"])
    elif args.command == "run":
        print(os.path.join(result["run_dir"], "summary.csv"))
    else:
        print(result["out"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
