"""Experiment configuration: a TOML file with ``[flow]``, ``[generator.*]``, ``[potential]``, ``[run]`` blocks.

Unknown keys are errors.  ``--set section.key=value`` overrides are parsed as
TOML values, falling back to plain strings.
"""
from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .baseflow import BasePoint, FlowSpec, SampleSet, sample_measure
from .errors import InvalidInputError
from .kinetic import (CLASS_TAGS, ConstantField, KineticGenerator, TrigPolynomial,
                      constant_generator, load_grid_csv)

OPERATIONS = ("integrate", "spectrum", "classify", "perturb", "mix", "sweep", "verify")
CLASSIFIERS = ("sample", "frictionless", "dissipative")

FLOW_KEYS = {"kind", "dimension", "frequencies", "period", "sample_count", "seed"}
FIELD_KEYS = {"kind", "value", "constant", "terms", "grid_file"}
GENERATOR_KEYS = {"class", "alpha", "beta"}
RUN_DEFAULTS = {
    "step": 1e-3,
    "horizon": 200.0,
    "renorm": 1.0,
    "m": 5.0,
    "tau": 200.0,
    "epsilon": 0.2,
    "t": 10.0,
    "output_dt": 1.0,
    "omega": None,
    "energies": None,
    "energy_min": -4.0,
    "energy_max": 4.0,
    "energy_count": 50,
    "classifier": "sample",
    "n_max": 50,
    "u": [1.0, 0.0],
    "v": None,
    "angle": 0.01,
    "swap_m": 2,
    "out": "out/run",
    "threads": None,
}
TOP_KEYS = {"flow", "generator", "potential", "run"}

BUNDLED = ("default", "demo_mix", "demo_sweep", "demo_dissipative")


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    source: str

    # -- blocks -------------------------------------------------------------
    @property
    def run(self) -> dict:
        out = dict(RUN_DEFAULTS)
        out.update(self.raw.get("run", {}))
        return out

    def knob(self, name):
        return self.run[name]

    def flow(self) -> FlowSpec:
        f = self.raw.get("flow", {})
        kw = {k: f[k] for k in ("kind", "dimension", "period") if k in f}
        if "frequencies" in f:
            kw["frequencies"] = tuple(float(x) for x in f["frequencies"])
        return FlowSpec(**kw)

    def sample(self) -> SampleSet:
        f = self.raw.get("flow", {})
        return sample_measure(self.flow(), int(f.get("sample_count", 20)), int(f.get("seed", 0)))

    def omega(self) -> BasePoint:
        w = self.run["omega"]
        if w is None:
            return self.sample().points[0]
        return BasePoint.wrap([float(x) for x in w])

    def generator(self) -> KineticGenerator:
        g = self.raw.get("generator", {})
        alpha = _field(g.get("alpha", {"kind": "constant", "value": 0.0}), "generator.alpha",
                       self.source)
        beta = _field(g.get("beta", {"kind": "constant", "value": 0.0}), "generator.beta", self.source)
        tag = g.get("class")
        if tag is None:
            if isinstance(alpha, ConstantField) and isinstance(beta, ConstantField):
                return constant_generator(alpha.value, beta.value)
            tag = "frictionless" if alpha.is_zero() else (
                "dissipative" if alpha.lower_bound() > 0 else "general")
        return KineticGenerator(alpha, beta, tag)

    def potential(self):
        p = self.raw.get("potential", {"kind": "constant", "value": 0.0})
        return _field(p, "potential", self.source)

    def energies(self):
        r = self.run
        if r["energies"] is not None:
            return [float(e) for e in r["energies"]]
        n = int(r["energy_count"])
        lo, hi = float(r["energy_min"]), float(r["energy_max"])
        if n == 1:
            return [lo]
        return [lo + (hi - lo) * i / (n - 1) for i in range(n)]

    def resolved(self) -> dict:
        """Every knob that can influence an artifact, defaults filled in."""
        out = copy.deepcopy(self.raw)
        out["run"] = self.run
        out["run"].pop("threads", None)
        f = out.setdefault("flow", {})
        f.setdefault("sample_count", 20)
        f.setdefault("seed", 0)
        return _drop_none(out)


def _drop_none(d):
    if isinstance(d, dict):
        return {k: _drop_none(v) for k, v in d.items() if v is not None}
    return d


def _field(node, where, source):
    if not isinstance(node, dict):
        return ConstantField(float(node))
    unknown = set(node) - FIELD_KEYS
    if unknown:
        raise InvalidInputError(f"unknown keys in [{where}]: {sorted(unknown)}")
    kind = node.get("kind", "constant")
    if kind == "constant":
        return ConstantField(float(node.get("value", 0.0)))
    if kind == "trig":
        terms = []
        for t in node.get("terms", []):
            if not isinstance(t, dict) or set(t) - {"k", "cos", "sin"} or "k" not in t:
                raise InvalidInputError(f"[{where}] terms need k and cos/sin entries")
            terms.append((tuple(int(x) for x in t["k"]), float(t.get("cos", 0.0)),
                          float(t.get("sin", 0.0))))
        return TrigPolynomial(float(node.get("constant", 0.0)), tuple(terms))
    if kind == "grid":
        if "grid_file" not in node:
            raise InvalidInputError(f"[{where}] kind = 'grid' needs grid_file")
        path = Path(node["grid_file"])
        if not path.is_absolute() and source:
            path = Path(source).parent / path
        return load_grid_csv(path)
    raise InvalidInputError(f"[{where}] unknown field kind {kind!r}")


def _check_positive(run, name, strict=True):
    x = run[name]
    if not isinstance(x, (int, float)) or isinstance(x, bool) or not math.isfinite(x):
        raise InvalidInputError(f"run.{name} must be a finite number")
    if (strict and not x > 0) or (not strict and x < 0):
        raise InvalidInputError(f"run.{name} must be positive, got {x!r}")


def validate(cfg: ExperimentConfig, operation: str) -> None:
    raw = cfg.raw
    if operation not in OPERATIONS:
        raise InvalidInputError(f"unknown operation {operation!r}")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise InvalidInputError(f"unknown top-level blocks: {sorted(unknown)}")
    bad = set(raw.get("flow", {})) - FLOW_KEYS
    if bad:
        raise InvalidInputError(f"unknown keys in [flow]: {sorted(bad)}")
    bad = set(raw.get("generator", {})) - GENERATOR_KEYS
    if bad:
        raise InvalidInputError(f"unknown keys in [generator]: {sorted(bad)}")
    bad = set(raw.get("run", {})) - set(RUN_DEFAULTS)
    if bad:
        raise InvalidInputError(f"unknown keys in [run]: {sorted(bad)}")
    tag = raw.get("generator", {}).get("class")
    if tag is not None and tag not in CLASS_TAGS:
        raise InvalidInputError(f"generator.class must be one of {CLASS_TAGS}")
    run = cfg.run
    for name in ("step", "horizon", "renorm", "tau", "t", "output_dt", "m", "epsilon"):
        _check_positive(run, name)
    if run["step"] > 0.1:
        raise InvalidInputError("run.step above 0.1 is outside the integrator's validity range")
    if run["renorm"] > run["horizon"]:
        raise InvalidInputError("run.renorm must not exceed run.horizon")
    if operation == "perturb" and not run["epsilon"] < 0.5:
        raise InvalidInputError("run.epsilon must lie in (0, 1/2)")
    if run["classifier"] not in CLASSIFIERS:
        raise InvalidInputError(f"run.classifier must be one of {CLASSIFIERS}")
    for name in ("n_max", "swap_m", "energy_count"):
        v = run[name]
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise InvalidInputError(f"run.{name} must be a positive integer")
    if run["n_max"] < 2:
        raise InvalidInputError("run.n_max must be >= 2")
    f = raw.get("flow", {})
    sc = f.get("sample_count", 20)
    if isinstance(sc, bool) or not isinstance(sc, int) or sc < 1:
        raise InvalidInputError("flow.sample_count must be a positive integer")
    if run["threads"] is not None and (not isinstance(run["threads"], int) or run["threads"] < 0):
        raise InvalidInputError("run.threads must be an integer >= 0")
    # building the objects runs their own validation
    cfg.flow()
    cfg.generator()
    if operation == "sweep":
        cfg.potential()
        es = cfg.energies()
        if any(b <= a for a, b in zip(es, es[1:])):
            raise InvalidInputError("energies must be strictly increasing")
    if run["omega"] is not None:
        if len(run["omega"]) != cfg.flow().dimension:
            raise InvalidInputError("run.omega has the wrong dimension")


def _parse_value(text: str):
    try:
        return tomllib.loads(f"x = {text}")["x"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(raw: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise InvalidInputError(f"--set expects KEY=VALUE, got {assignment!r}")
    key, text = assignment.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise InvalidInputError("--set key is empty")
    if len(parts) == 1:
        parts = ["run"] + parts
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise InvalidInputError(f"--set {key}: {p} is not a block")
    node[parts[-1]] = _parse_value(text.strip())


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("cocycle_lab") / "data" / f"{name}.toml"))


def load_config(path, overrides=()) -> ExperimentConfig:
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_path(str(path))
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidInputError(f"config {path} is not valid TOML: {exc}") from exc
    for o in overrides:
        apply_override(raw, o)
    return ExperimentConfig(raw, str(p))
