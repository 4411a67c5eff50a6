"""Run configuration: JSON schema, validation, and CLI overrides.

A run is described by one JSON object with a ``task`` field selecting the
pipeline and task-specific sections. Unknown keys are rejected everywhere so
typos fail loudly. See the README for the full schema.
"""

import json
from dataclasses import dataclass, field

from .checks import CheckOptions
from .energies import REGULARIZER_KINDS, Regularizer
from .errors import ConfigError
from .solver import SolverConfig

TASKS = ("toy1d", "register", "lift-solve", "check")


def _reject_unknown(data, allowed, path):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(
            "%s: unknown keys %s (allowed: %s)"
            % (path, sorted(unknown), sorted(allowed))
        )


def _get(data, key, types, path, default=None, required=False):
    if key not in data:
        if required:
            raise ConfigError("%s: missing required key '%s'" % (path, key))
        return default
    value = data[key]
    if bool in _astuple(types):
        ok = isinstance(value, bool) or isinstance(value, _astuple(types))
    else:
        ok = not isinstance(value, bool) and isinstance(value, _astuple(types))
    if not ok:
        raise ConfigError(
            "%s.%s: expected %s, got %r" % (path, key, types, type(value).__name__)
        )
    return value


def _astuple(types):
    return types if isinstance(types, tuple) else (types,)


def _parse_regularizer(data, path):
    if not isinstance(data, dict):
        raise ConfigError("%s must be an object" % path)
    _reject_unknown(data, {"kind", "weight"}, path)
    kind = _get(data, "kind", str, path, required=True)
    if kind not in REGULARIZER_KINDS:
        raise ConfigError(
            "%s.kind: %r is not one of %s" % (path, kind, REGULARIZER_KINDS)
        )
    weight = float(_get(data, "weight", (int, float), path, required=True))
    if weight < 0:
        raise ConfigError("%s.weight must be >= 0" % path)
    return Regularizer(kind, weight)


def _parse_labels(data, path):
    if not isinstance(data, dict):
        raise ConfigError("%s must be an object" % path)
    kind = _get(data, "kind", str, path, required=True)
    if kind == "interval":
        _reject_unknown(data, {"kind", "a", "b", "count"}, path)
        return {
            "kind": "interval",
            "a": float(_get(data, "a", (int, float), path, required=True)),
            "b": float(_get(data, "b", (int, float), path, required=True)),
            "count": _get(data, "count", int, path, required=True),
        }
    if kind == "disk":
        _reject_unknown(data, {"kind", "radius", "rings"}, path)
        rings = _get(data, "rings", list, path, default=[8, 16])
        if not all(isinstance(r, int) and not isinstance(r, bool) for r in rings):
            raise ConfigError("%s.rings must be a list of integers" % path)
        return {
            "kind": "disk",
            "radius": float(_get(data, "radius", (int, float), path, required=True)),
            "rings": tuple(rings),
        }
    raise ConfigError("%s.kind: %r is not 'interval' or 'disk'" % (path, kind))


def _parse_solver(data, path, seed):
    if data is None:
        return SolverConfig(seed=seed)
    if not isinstance(data, dict):
        raise ConfigError("%s must be an object" % path)
    allowed = {"tau0", "sigma0", "max_iter", "tol", "check_every", "adapt"}
    _reject_unknown(data, allowed, path)
    kwargs = {"seed": seed}
    for key, types in [
        ("tau0", (int, float)),
        ("sigma0", (int, float)),
        ("max_iter", int),
        ("tol", (int, float)),
        ("check_every", int),
    ]:
        if key in data:
            kwargs[key] = _get(data, key, types, path)
    adapt = data.get("adapt")
    if adapt is not None:
        _reject_unknown(adapt, {"enabled", "alpha0", "eta", "delta"}, path + ".adapt")
        if "enabled" in adapt:
            kwargs["adapt_enabled"] = _get(adapt, "enabled", bool, path + ".adapt")
        if "alpha0" in adapt:
            kwargs["adapt_alpha0"] = float(_get(adapt, "alpha0", (int, float), path + ".adapt"))
        if "eta" in adapt:
            kwargs["adapt_eta"] = float(_get(adapt, "eta", (int, float), path + ".adapt"))
        if "delta" in adapt:
            kwargs["adapt_delta"] = float(_get(adapt, "delta", (int, float), path + ".adapt"))
    try:
        return SolverConfig(**kwargs).validate()
    except ValueError as exc:
        raise ConfigError("%s: %s" % (path, exc)) from None


@dataclass
class RunConfig:
    task: str
    output_dir: str
    seed: int = 0
    deterministic: bool = True
    workers: int = 1
    figures: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)
    task_config: dict = field(default_factory=dict)
    progress_path: str = None


_COMMON_KEYS = {
    "task", "output_dir", "seed", "deterministic", "workers", "figures", "solver",
}

_TASK_KEYS = {
    "toy1d": {"grid", "domain", "labels", "regularizer", "threshold", "mass_tol",
              "max_modes"},
    "register": {"reference", "template", "labels", "regularizer", "ground_truth"},
    "lift-solve": {"grid", "labels", "data", "regularizer"},
    "check": {"suites", "inject_fault"},
}


def load_config_file(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config %s is not valid JSON: %s" % (path, exc)) from None


def parse_config(data, overrides=None):
    """Validate a config dict and return a RunConfig; overrides win."""
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a JSON object")
    data = dict(data)
    overrides = dict(overrides or {})
    for key in ("output_dir", "seed", "workers", "deterministic"):
        if overrides.get(key) is not None:
            data[key] = overrides[key]
    if overrides.get("max_iter") is not None:
        data.setdefault("solver", {})
        data["solver"] = dict(data["solver"])
        data["solver"]["max_iter"] = overrides["max_iter"]

    task = _get(data, "task", str, "config", required=True)
    if task not in TASKS:
        raise ConfigError("config.task: %r is not one of %s" % (task, TASKS))
    _reject_unknown(data, _COMMON_KEYS | _TASK_KEYS[task], "config")

    seed = _get(data, "seed", int, "config", default=0)
    cfg = RunConfig(
        task=task,
        output_dir=_get(data, "output_dir", str, "config", required=True),
        seed=seed,
        deterministic=_get(data, "deterministic", bool, "config", default=True),
        workers=_get(data, "workers", int, "config", default=1),
        figures=_get(data, "figures", bool, "config", default=True),
        solver=_parse_solver(data.get("solver"), "config.solver", seed),
        progress_path=overrides.get("log_progress"),
    )
    if cfg.workers < 1:
        raise ConfigError("config.workers must be >= 1")

    parser = {
        "toy1d": _parse_toy,
        "register": _parse_register,
        "lift-solve": _parse_lift_solve,
        "check": _parse_check,
    }[task]
    cfg.task_config = parser(data)
    return cfg


def _parse_toy(data):
    out = {}
    grid = data.get("grid", {})
    _reject_unknown(grid, {"n"}, "config.grid")
    out["n_grid"] = _get(grid, "n", int, "config.grid", default=20)
    domain = data.get("domain", [-1.0, 1.0])
    if not (isinstance(domain, list) and len(domain) == 2):
        raise ConfigError("config.domain must be [a, b]")
    out["domain"] = (float(domain[0]), float(domain[1]))
    labels = data.get("labels", {"kind": "interval", "a": -1.0, "b": 1.0, "count": 20})
    labels = _parse_labels(labels, "config.labels")
    if labels["kind"] != "interval":
        raise ConfigError("config.labels: the toy task needs interval labels")
    out["labels"] = labels
    out["regularizer"] = _parse_regularizer(
        data.get("regularizer", {"kind": "squared-euclid", "weight": 1.0}),
        "config.regularizer",
    )
    out["threshold"] = float(_get(data, "threshold", (int, float), "config", default=0.5))
    out["mass_tol"] = float(_get(data, "mass_tol", (int, float), "config", default=0.1))
    out["max_modes"] = _get(data, "max_modes", int, "config", default=4)
    return out


def _parse_register(data):
    out = {
        "reference": _get(data, "reference", str, "config", required=True),
        "template": _get(data, "template", str, "config", required=True),
    }
    labels = _parse_labels(
        data.get("labels", {"kind": "disk", "radius": 8.0, "rings": [8, 16]}),
        "config.labels",
    )
    if labels["kind"] != "disk":
        raise ConfigError("config.labels: registration needs disk labels")
    out["labels"] = labels
    out["regularizer"] = _parse_regularizer(
        data.get("regularizer", {"kind": "squared-euclid", "weight": 0.05}),
        "config.regularizer",
    )
    gt = data.get("ground_truth")
    if gt is not None:
        _reject_unknown(gt, {"kind", "degrees"}, "config.ground_truth")
        kind = _get(gt, "kind", str, "config.ground_truth", required=True)
        if kind != "rotation":
            raise ConfigError("config.ground_truth.kind: only 'rotation' is supported")
        out["ground_truth"] = {
            "kind": "rotation",
            "degrees": float(
                _get(gt, "degrees", (int, float), "config.ground_truth", required=True)
            ),
        }
    else:
        out["ground_truth"] = None
    return out


def _parse_lift_solve(data):
    grid = _get(data, "grid", dict, "config", required=True)
    _reject_unknown(grid, {"shape"}, "config.grid")
    shape = _get(grid, "shape", list, "config.grid", required=True)
    if not 1 <= len(shape) <= 2 or not all(
        isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in shape
    ):
        raise ConfigError("config.grid.shape must be 1 or 2 positive integers")
    out = {"grid_shape": tuple(shape)}
    out["labels"] = _parse_labels(
        _get(data, "labels", dict, "config", required=True), "config.labels"
    )
    out["regularizer"] = _parse_regularizer(
        _get(data, "regularizer", dict, "config", required=True), "config.regularizer"
    )
    term = _get(data, "data", dict, "config", required=True)
    kind = _get(term, "kind", str, "config.data", required=True)
    if kind == "absdiff-squared":
        _reject_unknown(term, {"kind", "domain"}, "config.data")
        domain = term.get("domain", [-1.0, 1.0])
        out["data"] = {"kind": kind, "domain": (float(domain[0]), float(domain[1]))}
    elif kind == "file":
        _reject_unknown(term, {"kind", "path"}, "config.data")
        out["data"] = {
            "kind": kind,
            "path": _get(term, "path", str, "config.data", required=True),
        }
    elif kind == "registration":
        _reject_unknown(term, {"kind", "reference", "template"}, "config.data")
        out["data"] = {
            "kind": kind,
            "reference": _get(term, "reference", str, "config.data", required=True),
            "template": _get(term, "template", str, "config.data", required=True),
        }
    else:
        raise ConfigError("config.data.kind: unsupported data term %r" % kind)
    return out


def _parse_check(data):
    suites = data.get("suites", {})
    allowed = {
        "duality_instances", "certificate_count", "kset_functions", "kset_trials",
        "projection_points",
    }
    _reject_unknown(suites, allowed, "config.suites")
    kwargs = {}
    for key in allowed:
        if key in suites:
            kwargs[key] = _get(suites, key, int, "config.suites")
    fault = data.get("inject_fault")
    if fault is not None and not isinstance(fault, str):
        raise ConfigError("config.inject_fault must be a suite name")
    try:
        options = CheckOptions(inject_fault=fault, **kwargs).validate()
    except ValueError as exc:
        raise ConfigError("config.suites: %s" % exc) from None
    return {"options": options}
