"""Experiment configuration: a single YAML document per run.

Schema (matrices are row-major arrays-of-arrays):

    model:
      fitness:            # m rows (genotypes) x n columns (environments)
        - [1.0, 1.0]
        - [0.7, 1.1]
      generator:
        kind: constant            # or state_dependent
        q: [[-1.0, 1.0], [1.0, -1.0]]
        # state_dependent instead takes
        # basis: one n x n matrix per genotype
    experiment:
      kind: simulate              # validate | simulate | ensemble | certify | partition
      ...kind-specific keys (see ExperimentConfig)
    seed: 12345
    output:
      directory: out
      formats: [csv, summary]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .ensemble import StartRegion, fixed_start, interior_start, vertex_ball
from .model import (ConstantGenerator, FitnessLandscape, ModelSpec,
                    StateDependentGenerator)

KINDS = ("validate", "simulate", "ensemble", "certify", "partition")
FORMATS = ("csv", "summary")


class ConfigError(ValueError):
    """The configuration file is structurally or semantically invalid."""


@dataclass
class ExperimentConfig:
    kind: str
    spec: ModelSpec
    seed: int = 0
    out_dir: str = "out"
    formats: tuple = ("csv", "summary")
    # simulate
    p0: Optional[np.ndarray] = None
    alpha0: Optional[int] = None
    t_end: float = 100.0
    dt: float = 0.01
    # ensemble
    mode: str = "fixation"
    n_runs: int = 100
    epsilon: float = 1e-3
    alpha0_policy: str = "uniform"
    start: Optional[StartRegion] = None
    target: Optional[int] = None
    delta: Optional[float] = None
    escape_radius: Optional[float] = None
    # certify
    annulus: tuple = (1e-4, 0.05)
    verify_samples: int = 10000
    # partition
    resolution: int = 1000


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _positive(value, name):
    _require(isinstance(value, (int, float)) and value > 0, f"{name} must be positive")
    return float(value)


def _matrix(node, name):
    try:
        arr = np.array(node, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a numeric array") from None
    _require(arr.ndim == 2, f"{name} must be a matrix (array of rows)")
    return arr


def _build_model(node) -> ModelSpec:
    _require(isinstance(node, dict), "model section missing or not a mapping")
    _require("fitness" in node, "model.fitness is required")
    fitness = _matrix(node["fitness"], "model.fitness")
    gen_node = node.get("generator")
    _require(isinstance(gen_node, dict), "model.generator section is required")
    kind = gen_node.get("kind", "constant")
    if kind == "constant":
        _require("q" in gen_node, "model.generator.q is required for kind constant")
        q = _matrix(gen_node["q"], "model.generator.q")
        _require(q.shape[0] == q.shape[1], "model.generator.q must be square")
        generator = ConstantGenerator(q)
    elif kind == "state_dependent":
        _require("basis" in gen_node,
                 "model.generator.basis is required for kind state_dependent")
        try:
            basis = np.array(gen_node["basis"], dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("model.generator.basis must be numeric") from None
        _require(basis.ndim == 3 and basis.shape[1] == basis.shape[2],
                 "model.generator.basis must be a list of square matrices")
        generator = StateDependentGenerator(basis)
    else:
        raise ConfigError(f"unknown generator kind {kind!r}")
    return ModelSpec(landscape=FitnessLandscape(fitness), generator=generator)


def _build_start(node, m) -> StartRegion:
    _require(isinstance(node, dict) and "kind" in node,
             "experiment.start must be a mapping with a kind")
    kind = node["kind"]
    if kind == "interior":
        return interior_start()
    if kind == "fixed":
        _require("p0" in node, "start kind fixed needs p0")
        return fixed_start(np.asarray(node["p0"], dtype=float))
    if kind == "vertex_ball":
        _require("vertex" in node and "delta" in node,
                 "start kind vertex_ball needs vertex and delta")
        return vertex_ball(int(node["vertex"]), float(node["delta"]))
    raise ConfigError(f"unknown start kind {kind!r}")


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML experiment file.

    OSError propagates for unreadable files; yaml.YAMLError for syntax
    errors; ConfigError for schema problems.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    _require(isinstance(doc, dict), "configuration must be a YAML mapping")
    spec = _build_model(doc.get("model"))

    exp = doc.get("experiment") or {}
    _require(isinstance(exp, dict), "experiment section must be a mapping")
    kind = exp.get("kind", "validate")
    _require(kind in KINDS, f"experiment.kind must be one of {KINDS}")

    cfg = ExperimentConfig(kind=kind, spec=spec)
    cfg.seed = int(doc.get("seed", 0))
    out = doc.get("output") or {}
    _require(isinstance(out, dict), "output section must be a mapping")
    cfg.out_dir = str(out.get("directory", "out"))
    fmts = out.get("formats", list(FORMATS))
    _require(isinstance(fmts, list) and fmts and all(f in FORMATS for f in fmts),
             f"output.formats must be a non-empty subset of {FORMATS}")
    cfg.formats = tuple(dict.fromkeys(fmts))

    if "dt" in exp:
        cfg.dt = _positive(exp["dt"], "experiment.dt")
    if "t_end" in exp:
        cfg.t_end = _positive(exp["t_end"], "experiment.t_end")
    if "epsilon" in exp:
        cfg.epsilon = _positive(exp["epsilon"], "experiment.epsilon")

    if kind == "simulate":
        _require("p0" in exp, "simulate needs experiment.p0")
        cfg.p0 = np.asarray(exp["p0"], dtype=float)
        cfg.alpha0 = int(exp.get("alpha0", 1))
    elif kind == "ensemble":
        cfg.mode = exp.get("mode", "fixation")
        _require(cfg.mode in ("fixation", "escape"),
                 "experiment.mode must be fixation or escape")
        cfg.n_runs = int(exp.get("n_runs", 100))
        _require(cfg.n_runs >= 1, "experiment.n_runs must be >= 1")
        cfg.alpha0_policy = exp.get("alpha0_policy", "uniform")
        if "alpha0" in exp:
            cfg.alpha0 = int(exp["alpha0"])
        if cfg.mode == "fixation":
            _require("start" in exp, "fixation ensembles need experiment.start")
            cfg.start = _build_start(exp["start"], spec.m)
        else:
            for key in ("target", "delta", "escape_radius"):
                _require(key in exp, f"escape ensembles need experiment.{key}")
            cfg.target = int(exp["target"])
            cfg.delta = _positive(exp["delta"], "experiment.delta")
            cfg.escape_radius = _positive(exp["escape_radius"],
                                          "experiment.escape_radius")
            _require(cfg.delta < cfg.escape_radius,
                     "experiment.delta must be below experiment.escape_radius")
    elif kind == "certify":
        ann = exp.get("annulus", list(ExperimentConfig.annulus))
        _require(isinstance(ann, (list, tuple)) and len(ann) == 2,
                 "experiment.annulus must be [rho, r]")
        rho, r = float(ann[0]), float(ann[1])
        _require(0.0 < rho < r, "experiment.annulus needs 0 < rho < r")
        cfg.annulus = (rho, r)
        cfg.verify_samples = int(exp.get("verify_samples", 10000))
        _require(cfg.verify_samples >= 1, "experiment.verify_samples must be >= 1")
    elif kind == "partition":
        cfg.resolution = int(exp.get("resolution", 1000))
        _require(cfg.resolution >= 1, "experiment.resolution must be >= 1")
    return cfg
