"""Config-driven experiment runner behind the command line.

A config is a JSON object::

    {"instance": "banach_half" | {...inline...},
     "sampling": {"seed": 0, "count": 10000},
     "tasks": [{"kind": "classify", "epsilons": [0.1]}, ...],
     "output": {"format": "json", "path": "report.json"}}

Reports carry ``schema_version``, the echoed config, per-task results and a
separate ``timing`` block. Everything except ``timing`` is a pure function of
the config.
"""

from __future__ import annotations

import copy
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    invariance_index_constructive,
    invariance_index_empirical,
    retract_bound,
    verify_retract_bound,
    verify_uniform_convergence,
)
from .contraction import (
    check_banach,
    check_boyd_wong,
    check_kirk_asymptotic,
    check_nonexpansive,
    maps_into_domain,
    search_leader_params,
    search_meir_keeler_params,
    search_mk_leader_params,
)
from .control import ControlSequence, check_subcontractive, right_usc_probe
from .errors import ConfigError, LeaderFPError, VacuousSampleError
from .gallery import CLASSES, Instance, get_instance, instance_from_dict
from .metric import SampleSpec, check_metric_axioms
from .picard import DEFAULT_CAUCHY_TOL, DEFAULT_MAX_ITER, iterate, uniform_entry_profile

SCHEMA_VERSION = 1

# allowed parameters per task kind
TASK_PARAMS = {
    "axioms": {"count"},
    "classify": {"epsilons", "delta_ladder", "r_max", "n_max", "classes"},
    "iterate": {"x0", "max_iter", "tol", "csv_path"},
    "certify": {"epsilon", "K", "control", "n_max", "cap"},
    "profile": {"epsilon", "K", "cap"},
}
OUTPUT_FORMATS = ("json", "csv")


# --------------------------------------------------------------------------
# serialization


def to_jsonable(obj):
    """Recursively convert results to plain JSON values; non-finite floats become strings."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(to_jsonable(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# config


@dataclass
class ExperimentConfig:
    instance: Instance
    tasks: list[dict]
    sampling: SampleSpec
    output_format: str
    output_path: str | None
    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {"instance", "tasks", "sampling", "output"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "instance" not in data:
            raise ConfigError("config needs an 'instance'")
        inst = data["instance"]
        instance = get_instance(inst) if isinstance(inst, str) else instance_from_dict(inst)
        tasks = data.get("tasks")
        if not isinstance(tasks, list) or not tasks:
            raise ConfigError("config needs at least one task")
        for i, task in enumerate(tasks):
            if not isinstance(task, dict) or task.get("kind") not in TASK_PARAMS:
                raise ConfigError(f"task {i}: kind must be one of {sorted(TASK_PARAMS)}")
            extra = set(task) - TASK_PARAMS[task["kind"]] - {"kind"}
            if extra:
                raise ConfigError(f"task {i} ({task['kind']}): unknown parameters {sorted(extra)}")
            _validate_task(i, task, instance)
        samp = data.get("sampling", {})
        try:
            spec = instance.sample_spec(int(samp.get("seed", 0)), int(samp.get("count", 10_000)))
        except (LeaderFPError, TypeError, ValueError) as exc:
            raise ConfigError(f"sampling: {exc}") from exc
        out = data.get("output", {})
        fmt = out.get("format", "json")
        if fmt not in OUTPUT_FORMATS:
            raise ConfigError(f"output format must be one of {OUTPUT_FORMATS}")
        return cls(instance, tasks, spec, fmt, out.get("path"), copy.deepcopy(data))


def _positive(i, task, key, integer=False):
    if key not in task:
        return
    v = task[key]
    ok = isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0
    if integer:
        ok = ok and float(v).is_integer()
    if not ok:
        raise ConfigError(f"task {i} ({task['kind']}): {key} must be a positive {'integer' if integer else 'number'}")


def _validate_task(i: int, task: dict, instance: Instance) -> None:
    kind = task["kind"]
    for key in ("epsilon", "K", "tol"):
        _positive(i, task, key)
    for key in ("r_max", "n_max", "cap", "max_iter", "count"):
        _positive(i, task, key, integer=True)
    for key in ("epsilons", "delta_ladder"):
        if key in task:
            v = task[key]
            if not isinstance(v, list) or not v or not all(
                    isinstance(e, (int, float)) and not isinstance(e, bool) and e > 0 for e in v):
                raise ConfigError(f"task {i} ({kind}): {key} must be a non-empty list of positive numbers")
    if "classes" in task and not set(task["classes"]) <= set(CLASSES):
        raise ConfigError(f"task {i} ({kind}): classes must be drawn from {list(CLASSES)}")
    if kind == "certify" and task.get("control", "auto") not in ("auto", "phi", "family"):
        raise ConfigError(f"task {i} (certify): control must be auto, phi or family")
    if kind == "iterate" and "x0" in task:
        try:
            _starts(task["x0"], instance.space.dimension)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"task {i} (iterate): bad x0: {exc}") from exc


def _starts(x0, dim: int) -> list[list[float]]:
    arr = np.asarray(x0, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"start points must have {dim} coordinates")
    return arr.tolist()


# --------------------------------------------------------------------------
# tasks


def kirk_hypotheses(instance: Instance, spec: SampleSpec, n_max: int = 20) -> dict:
    """Kirk check plus subcontractivity and right-usc probes of the limit.

    Probes run at the instance breakpoints and on a grid of 32 points in
    ``(0, b]`` with ``b = min(8, diameter)``.
    """
    if instance.phi_seq is None:
        return {"holds": False, "reason": "no control family"}
    kirk = check_kirk_asymptotic(instance.map, instance.phi_seq, spec, n_max=n_max)
    phi = instance.phi_seq.limit
    b = min(8.0, instance.space.diameter())
    sub = check_subcontractive(phi, b)
    ts = sorted(set(instance.breakpoints) | set(np.linspace(0, b, 33)[1:].tolist()))
    bad_usc = [t for t in ts if not right_usc_probe(phi, t).consistent]
    holds = kirk.passed and sub.passed and not bad_usc
    return {"holds": holds, "kirk": kirk, "subcontractive": sub,
            "right_usc_failures": bad_usc, "probe_points": len(ts)}


def _class_verdict(instance: Instance, cls: str, spec: SampleSpec, eps_grid, ladder, r_max, n_max) -> dict:
    T = instance.map
    if cls == "Banach":
        res = check_banach(T, instance.banach_q, spec)
        return {"verdict": "certificate" if res.passed else "witness", "check": res}
    if cls == "BoydWong":
        res = check_boyd_wong(T, instance.phi, spec)
        return {"verdict": "certificate" if res.passed else "witness", "check": res}
    if cls == "Kirk":
        res = check_kirk_asymptotic(T, instance.phi_seq, spec, n_max=n_max)
        return {"verdict": "certificate" if res.passed else "witness", "check": res}
    per_eps = []
    for eps in eps_grid:
        try:
            if cls == "Leader":
                out = search_leader_params(T, eps, spec, ladder, r_max)
            elif cls == "MKLeader":
                out = search_mk_leader_params(T, eps, spec, ladder, r_max)
            else:
                out = search_meir_keeler_params(T, eps, spec, ladder)
            per_eps.append(out.to_dict())
        except VacuousSampleError as exc:
            per_eps.append({"outcome": "vacuous", "epsilon": eps, "message": str(exc)})
    outcomes = {r["outcome"] for r in per_eps}
    if "witness" in outcomes:
        verdict = "witness"
    elif outcomes == {"certificate"}:
        verdict = "certificate"
    else:
        verdict = "inconclusive"
    return {"verdict": verdict, "per_epsilon": per_eps}


def task_classify(instance: Instance, spec: SampleSpec, params: dict) -> tuple[dict, list[str]]:
    eps_grid = [float(e) for e in params.get("epsilons", instance.epsilon_grid())]
    ladder = params.get("delta_ladder")
    r_max = int(params.get("r_max", 64))
    n_max = int(params.get("n_max", 20))
    wanted = params.get("classes", CLASSES)
    truth = instance.ground_truth
    results, problems = {}, []
    for cls in CLASSES:
        if cls not in wanted or not instance.testable(cls):
            continue
        res = _class_verdict(instance, cls, spec, eps_grid, ladder, r_max, n_max)
        if cls in truth.expected_classes and res["verdict"] == "witness":
            problems.append(f"{cls}: falsified but expected to hold")
        if cls in truth.expected_non_classes and res["verdict"] == "certificate":
            problems.append(f"{cls}: certified but expected to fail")
        results[cls] = res
    nonexp = check_nonexpansive(instance.map, spec)
    if truth.nonexpansive is not None and nonexp.passed != truth.nonexpansive:
        problems.append(f"nonexpansive: got {nonexp.passed}, expected {truth.nonexpansive}")
    return {"epsilons": eps_grid, "classes": results, "nonexpansive": nonexp}, problems


def task_axioms(instance: Instance, spec: SampleSpec, params: dict) -> tuple[dict, list[str]]:
    if "count" in params:
        spec = spec.with_count(int(params["count"]))
    rep = check_metric_axioms(instance.space, spec)
    inside, escapee = maps_into_domain(instance.map, spec)
    problems = [] if rep.all_passed else ["metric axioms violated"]
    if not inside:
        problems.append("map leaves its domain")
    return {"axioms": rep, "maps_into_domain": inside, "escapee": escapee}, problems


def task_iterate(instance: Instance, spec: SampleSpec, params: dict) -> tuple[dict, list[str]]:
    starts = _starts(params.get("x0", list(instance.x0)), instance.space.dimension)
    max_iter = int(params.get("max_iter", DEFAULT_MAX_ITER))
    tol = float(params.get("tol", DEFAULT_CAUCHY_TOL))
    z = instance.ground_truth.fixed_point
    runs = []
    for k, x0 in enumerate(starts):
        orbit, rep = iterate(instance.map, x0, max_iter=max_iter, cauchy_tol=tol)
        entry = {"x0": x0, "report": rep, "orbit_length": orbit.length}
        if params.get("csv_path"):
            path = Path(params["csv_path"])
            if len(starts) > 1:
                path = path.with_name(f"{path.stem}_{k}{path.suffix}")
            orbit.to_csv(path, z)
            entry["csv"] = str(path)
        runs.append(entry)
    return {"runs": runs}, []


def _fixed_point(instance: Instance):
    z = instance.ground_truth.fixed_point
    if z is None:
        raise ConfigError(f"instance {instance.name!r} has no fixed point to certify against")
    return list(z)


def task_certify(instance: Instance, spec: SampleSpec, params: dict) -> tuple[dict, list[str]]:
    eps = float(params.get("epsilon", instance.epsilon))
    K = float(params.get("K", instance.K))
    control = params.get("control", "auto")
    if control == "auto":
        control = "phi" if instance.phi is not None else "family"
    if control == "phi":
        if instance.phi is None:
            raise ConfigError("instance has no phi")
        seq = ControlSequence.constant(instance.phi)
    else:
        if instance.phi_seq is None:
            raise ConfigError("instance has no control family")
        seq = instance.phi_seq
    phi = seq.limit
    z = _fixed_point(instance)
    T = instance.map
    kirk = check_kirk_asymptotic(T, seq, spec)
    n_max = int(params.get("n_max", 10_000))
    bound = retract_bound(phi, seq, eps, K, n_max=n_max)
    ball_spec = spec.with_count(min(spec.count, 1000))
    verify = verify_retract_bound(T, z, bound, ball_spec, cap=params.get("cap"))
    inv_emp = invariance_index_empirical(T, z, eps, ball_spec)
    inv_con = invariance_index_constructive(phi, seq, eps, K, n_max=n_max)
    uniform = verify_uniform_convergence(T, z, eps, K, bound, inv_emp, ball_spec)
    problems = []
    if not kirk.passed:
        problems.append("control family does not dominate T (Kirk check failed)")
    if not verify.passed:
        problems.append("retract bound falsified")
    if not uniform.passed:
        problems.append("uniform convergence bound falsified")
    return {"control": control, "kirk_precondition": kirk, "bound": bound, "verify": verify,
            "invariance_empirical": inv_emp, "invariance_constructive": inv_con,
            "uniform": uniform}, problems


def task_profile(instance: Instance, spec: SampleSpec, params: dict) -> tuple[dict, list[str]]:
    eps = float(params.get("epsilon", instance.epsilon))
    K = float(params.get("K", instance.K))
    gt = instance.ground_truth
    z = gt.fixed_point if gt.fixed_point is not None else gt.picard_limit
    if z is None:
        raise ConfigError(f"instance {instance.name!r} has no known limit point")
    ball_spec = spec.with_count(min(spec.count, 1000))
    prof = uniform_entry_profile(instance.map, list(z), K, eps, ball_spec,
                                 cap=int(params.get("cap", 10_000)))
    return {"center": list(z), "profile": prof}, []


TASKS = {
    "axioms": task_axioms,
    "classify": task_classify,
    "iterate": task_iterate,
    "certify": task_certify,
    "profile": task_profile,
}


# --------------------------------------------------------------------------
# run


@dataclass
class RunReport:
    payload: dict
    timing: dict

    @property
    def ok(self) -> bool:
        return all(t["status"] == "ok" for t in self.payload["tasks"])

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def payload_json(self) -> str:
        return dumps(self.payload)

    def to_dict(self) -> dict:
        return {**self.payload, "timing": self.timing}


def run(config: ExperimentConfig | dict) -> RunReport:
    """Execute every task in order; a failing task is recorded and the run continues."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    results, timing = [], {}
    for i, task in enumerate(config.tasks):
        kind = task["kind"]
        params = {k: v for k, v in task.items() if k != "kind"}
        t0 = time.perf_counter()
        try:
            result, problems = TASKS[kind](config.instance, config.sampling, params)
            status = "regression" if problems else "ok"
            entry = {"kind": kind, "status": status, "problems": problems, "result": result}
        except (LeaderFPError, ValueError) as exc:
            entry = {"kind": kind, "status": "error", "error": f"{type(exc).__name__}: {exc}"}
        timing[f"{i}:{kind}"] = time.perf_counter() - t0
        results.append(to_jsonable(entry))
    payload = {
        "schema_version": SCHEMA_VERSION,
        "toolkit_version": __version__,
        "seed": int(config.sampling.seed),
        "config": to_jsonable(config.raw),
        "instance": to_jsonable(config.instance),
        "tasks": results,
    }
    return RunReport(payload, timing)
