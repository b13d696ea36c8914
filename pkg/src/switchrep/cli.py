"""Command-line front end.

Exit codes: 0 success, 1 I/O (unreadable or unparseable file), 2 model or
config validation failure, 3 runtime failure (integration, numerics,
failed certificate verification), 4 degeneracy (tied leader, reducible
generator).

Every output file embeds the tool version, the model fingerprint and the
master seed; reruns with identical config and seed are byte-identical.
Floats are written with 12 significant digits, UTF-8, LF line endings.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .ensemble import estimate_escape, estimate_fixation
from .errors import (DegenerateLeaderError, ModelValidationError,
                     NonFiniteStateError, NumericalError,
                     ReducibleGeneratorError, ResidualTooLargeError,
                     StepTooLargeError, SwitchrepError)
from .hybrid import classify_outcome, simulate
from .model import validate_model
from .regimes import stationary_distribution
from .stability import (build_instability_certificate,
                        build_stability_certificate, local_leader_heuristic,
                        mean_fitness, mean_fitness_report, partition_sweep,
                        verify_certificate)

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_DEGENERATE = 4


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _round12(obj):
    """Apply the 12-significant-digit contract to every float in a tree."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, np.floating):
        return float(_fmt(float(obj)))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round12(obj.tolist())
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def _write_json(path: Path, doc: dict):
    body = json.dumps(_round12(doc), indent=2, sort_keys=True) + "\n"
    path.write_text(body, encoding="utf-8")


def _csv_head(cfg: ExperimentConfig, extra=()):
    lines = [f"# switchrep {__version__}",
             f"# fingerprint: {cfg.spec.fingerprint()}",
             f"# seed: {cfg.seed}"]
    lines.extend(extra)
    return lines


def _meta(cfg: ExperimentConfig) -> dict:
    return {"version": __version__, "fingerprint": cfg.spec.fingerprint(),
            "seed": cfg.seed}


def _winner_label(w) -> str:
    return str(w) if isinstance(w, int) else "0"


def cmd_validate(cfg: ExperimentConfig) -> int:
    report = validate_model(cfg.spec)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_simulate(cfg: ExperimentConfig) -> int:
    traj = simulate(cfg.spec, cfg.p0, cfg.alpha0, cfg.t_end, cfg.dt, cfg.seed)
    outcome = classify_outcome(traj, cfg.epsilon)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if "csv" in cfg.formats:
        m = traj.states.shape[1]
        lines = _csv_head(cfg)
        cols = ",".join(f"P_{i + 1}" for i in range(m))
        lines.append(f"t,regime,{cols},jump")
        prev = None
        for t, row, reg in zip(traj.times, traj.states, traj.regimes):
            jump = 1 if prev is not None and reg != prev else 0
            prev = reg
            ps = ",".join(_fmt(x) for x in row)
            lines.append(f"{_fmt(t)},{int(reg)},{ps},{jump}")
        (out / "trajectory.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    if "summary" in cfg.formats:
        doc = _meta(cfg)
        doc.update({
            "command": "simulate",
            "params": {"p0": list(cfg.p0), "alpha0": cfg.alpha0,
                       "t_end": cfg.t_end, "dt": cfg.dt,
                       "epsilon": cfg.epsilon},
            "outcome": {"kind": outcome.kind, "vertex": outcome.vertex,
                        "final_dist": outcome.final_dist},
            "jump_count": traj.jump_count,
            "final_time": float(traj.times[-1]),
            "final_state": list(traj.final_state()),
        })
        _write_json(out / "run_summary.json", doc)

    v = f" at vertex {outcome.vertex}" if outcome.vertex else ""
    print(f"simulate: outcome {outcome.kind}{v}, {traj.jump_count} jumps, "
          f"final distance {_fmt(outcome.final_dist)}")
    return EXIT_OK


def cmd_ensemble(cfg: ExperimentConfig) -> int:
    if cfg.mode == "fixation":
        rep = estimate_fixation(cfg.spec, cfg.start, cfg.n_runs, cfg.t_end,
                                cfg.dt, cfg.epsilon, seed=cfg.seed,
                                alpha0_policy=cfg.alpha0_policy,
                                alpha0=cfg.alpha0)
    else:
        rep = estimate_escape(cfg.spec, cfg.target, cfg.delta,
                              cfg.escape_radius, cfg.n_runs, cfg.t_end,
                              cfg.dt, cfg.epsilon, seed=cfg.seed,
                              alpha0_policy=cfg.alpha0_policy,
                              alpha0=cfg.alpha0)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if "csv" in cfg.formats:
        lines = _csv_head(cfg)
        lines.append("run,seed,outcome,final_dist,jumps")
        for r in rep.runs:
            label = f"fixation_{r.vertex}" if r.outcome == "fixation" else r.outcome
            lines.append(f"{r.index},{r.seed_word},{label},{_fmt(r.final_dist)},{r.jumps}")
        (out / "runs.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    if "summary" in cfg.formats:
        freqs = {k: {"frequency": f, "standard_error": se}
                 for k, (f, se) in rep.frequencies().items()}
        doc = _meta(cfg)
        doc.update({
            "command": "ensemble",
            "params": rep.params,
            "counts": {"fixation": list(rep.fixation_counts),
                       "polymorphic": rep.polymorphic_count,
                       "undecided": rep.undecided_count,
                       "escape": rep.escape_count},
            "frequencies": freqs,
            "failures": [{"run": r.index, "error": r.error}
                         for r in rep.runs if r.error],
        })
        if rep.note:
            doc["note"] = rep.note
        _write_json(out / "ensemble_summary.json", doc)

    tops = max(range(1, rep.m + 1), key=rep.fixation_frequency)
    msg = (f"ensemble: {rep.n_runs} runs, top fixation vertex {tops} "
           f"({_fmt(rep.fixation_frequency(tops))})")
    if rep.escape_count is not None:
        msg += f", escape frequency {_fmt(rep.escape_frequency)}"
    print(msg)
    return EXIT_OK


def _cert_doc(cert, ver) -> dict:
    return {
        "kind": cert.kind,
        "target_vertex": cert.target,
        "leader": cert.leader,
        "genotypes": list(cert.genotypes),
        "beta": list(cert.beta),
        "c": [list(row) for row in cert.c],
        "gamma": cert.gamma,
        "gamma_bound": cert.gamma_bound,
        "residuals": list(cert.residuals),
        "coeff_positive": [[bool(b) for b in row] for row in cert.coeff_positive],
        "verification": {
            "passed": ver.passed,
            "max_lie_derivative": ver.max_lie,
            "argmax_point": list(ver.argmax_point),
            "argmax_regime": ver.argmax_regime,
            "samples": ver.samples,
            "annulus": [ver.rho, ver.r],
            "seed": ver.seed,
            "pole_diverges": ver.pole_diverges,
        },
    }


def cmd_certify(cfg: ExperimentConfig) -> int:
    spec = cfg.spec
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if spec.generator.is_state_dependent:
        # no universal stationary distribution: report the per-vertex local
        # analysis and label it heuristic
        reports = local_leader_heuristic(spec)
        doc = _meta(cfg)
        doc.update({
            "command": "certify",
            "heuristic": True,
            "note": ("state-dependent generator: per-vertex analysis uses the "
                     "stationary distribution of Q frozen at each vertex"),
            "vertices": [{
                "vertex": r.vertex,
                "pi": list(r.pi),
                "unique": r.unique,
                "leader": r.leader if isinstance(r.leader, int) else str(r.leader),
                "locally_stable": r.locally_stable,
            } for r in reports],
        })
        _write_json(out / "local_analysis.json", doc)
        for r in reports:
            print(f"vertex {r.vertex}: pi(Q(e_{r.vertex})) = "
                  f"({', '.join(_fmt(x) for x in r.pi)}), leader {r.leader}, "
                  f"locally stable (heuristic): {r.locally_stable}")
        return EXIT_OK

    Q = spec.generator.q
    sd = stationary_distribution(Q)
    mf = mean_fitness_report(sd, spec.landscape)
    stab = build_stability_certificate(spec.landscape, Q)
    certs = [stab]
    for g in stab.genotypes:
        certs.append(build_instability_certificate(spec.landscape, Q, g))

    entries = []
    all_passed = True
    for idx, cert in enumerate(certs):
        child = int(np.random.SeedSequence([cfg.seed, idx]).generate_state(1, np.uint64)[0])
        ver = verify_certificate(cert, spec.landscape, Q, cfg.annulus,
                                 cfg.verify_samples, seed=child)
        all_passed &= ver.passed
        entries.append(_cert_doc(cert, ver))
        status = "PASS" if ver.passed else "FAIL"
        print(f"{cert.kind} certificate for e_{cert.target}: {status} "
              f"(max lie derivative {_fmt(ver.max_lie)}, gamma {_fmt(cert.gamma)})")

    doc = _meta(cfg)
    doc.update({
        "command": "certify",
        "format_version": 1,
        "pi": list(sd.pi),
        "mean_fitness": list(mf.means),
        "leader": stab.leader,
        "annulus": list(cfg.annulus),
        "verify_samples": cfg.verify_samples,
        "certificates": entries,
        "all_passed": all_passed,
    })
    _write_json(out / "certificates.json", doc)
    return EXIT_OK if all_passed else EXIT_RUNTIME


def cmd_partition(cfg: ExperimentConfig) -> int:
    L = cfg.spec.landscape
    pm = partition_sweep(L, cfg.resolution)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    boundaries = pm.boundaries_q if pm.boundaries_q is not None else [
        list(p) for p in pm.boundary_points]
    if "csv" in cfg.formats:
        extra = ["# winner: leading genotype index; 0 marks a tie"]
        if pm.boundaries_q is not None:
            extra += [f"# boundary_q: {_fmt(b)}" for b in pm.boundaries_q]
        lines = _csv_head(cfg, extra)
        mcols = ",".join(f"mean_{i + 1}" for i in range(L.m))
        if L.n == 2:
            lines.append(f"q,{mcols},winner")
            for p, w in zip(pm.points, pm.winners):
                means = mean_fitness(p, L)
                ms = ",".join(_fmt(x) for x in means)
                lines.append(f"{_fmt(p[0])},{ms},{_winner_label(w)}")
        else:
            pcols = ",".join(f"pi_{k + 1}" for k in range(L.n))
            lines.append(f"{pcols},{mcols},winner")
            for p, w in zip(pm.points, pm.winners):
                means = mean_fitness(p, L)
                ps = ",".join(_fmt(x) for x in p)
                ms = ",".join(_fmt(x) for x in means)
                lines.append(f"{ps},{ms},{_winner_label(w)}")
        (out / "partition.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    if "summary" in cfg.formats:
        doc = _meta(cfg)
        doc.update({
            "command": "partition",
            "resolution": cfg.resolution,
            "boundaries": boundaries,
            "grid_points": len(pm.winners),
        })
        _write_json(out / "partition_summary.json", doc)

    if pm.boundaries_q is not None:
        print("partition boundaries q:",
              ", ".join(_fmt(b) for b in pm.boundaries_q) or "(none)")
    else:
        print(f"partition: {len(pm.boundary_points)} boundary points on the grid")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="switchrep",
        description="Replicator dynamics in Markov-switching environments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (("validate", "validate a model file"),
                      ("simulate", "run one hybrid trajectory"),
                      ("ensemble", "run a Monte Carlo ensemble"),
                      ("certify", "build and audit Lyapunov certificates"),
                      ("partition", "sweep the stationary-distribution simplex")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="YAML experiment file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--format", choices=("csv", "summary", "both"),
                       default=None, help="override the output formats")
    return parser


_COMMANDS = {"validate": cmd_validate, "simulate": cmd_simulate,
             "ensemble": cmd_ensemble, "certify": cmd_certify,
             "partition": cmd_partition}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"cannot read {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except yaml.YAMLError as exc:
        print(f"cannot read {args.config}: invalid YAML ({exc})", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    if args.format is not None:
        cfg.formats = ("csv", "summary") if args.format == "both" else (args.format,)

    if args.command != "validate" and cfg.kind != args.command:
        print(f"config declares experiment kind {cfg.kind!r}, "
              f"but the {args.command} command was invoked", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command != "validate":
        report = validate_model(cfg.spec)
        if not report.ok:
            for line in report.lines():
                print(line, file=sys.stderr)
            return EXIT_VALIDATION

    try:
        return _COMMANDS[args.command](cfg)
    except (DegenerateLeaderError, ReducibleGeneratorError,
            ResidualTooLargeError) as exc:
        print(f"degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (NonFiniteStateError, StepTooLargeError, NumericalError,
            ModelValidationError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SwitchrepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, IndexError) as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
