"""Command-line front end: ``cocycle-lab <operation> --config PATH [--set K=V] [--out P] [--threads N]``.

Exit status: 0 success, 1 invalid input, 2 numerical failure, 3 infeasible
construction.  Diagnostics go to stderr; stdout only carries the summary table.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .errors import (ClassViolationError, CocycleLabError, ConstructionFailureError,
                     DegenerateFrameError, InvalidInputError, RotationInfeasibleError,
                     SwapInfeasibleError)
from .io import emit_plotdata, write_csv, write_manifest
from .parallel import resolve_threads
from .propagator import block_matrices, error_constant

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 1, 2, 3


class _Run:
    def __init__(self, cfg, operation, prefix, threads):
        self.cfg = cfg
        self.op = operation
        self.prefix = prefix
        self.threads = threads
        self.run = cfg.run
        self.artifacts = []
        self.summary = {}

    def path(self, suffix):
        return Path(f"{self.prefix}_{suffix}")

    def csv(self, header, rows, suffix=None):
        p = write_csv(self.path(suffix or f"{self.op}.csv"), header, rows)
        self.artifacts.append(p)
        return p

    def plot(self, report, suffix):
        self.artifacts.append(emit_plotdata(report, self.path(suffix)))

    def text(self, suffix, body):
        p = self.path(suffix)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(body, encoding="utf-8")
        self.artifacts.append(p)


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def op_integrate(r: _Run):
    A, flow, w = r.cfg.generator(), r.cfg.flow(), r.cfg.omega()
    T, dt, step = float(r.run["t"]), float(r.run["output_dt"]), float(r.run["step"])
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    times = np.minimum(np.arange(n + 1) * dt, T)
    times[-1] = T
    mats = block_matrices(A, flow, w, times, step)
    P = np.eye(2)
    C = error_constant(A) * step ** 4
    rows = [(0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0)]
    for t, M in zip(times[1:], mats):
        P = M @ P
        rows.append((float(t), P[0, 0], P[0, 1], P[1, 0], P[1, 1], float(np.linalg.det(P)), C * float(t)))
    r.csv(["t", "phi11", "phi12", "phi21", "phi22", "det", "error_bound"], rows)
    r.summary.update(t=T, det=rows[-1][5], norm=float(np.linalg.norm(P, 2)))


def op_spectrum(r: _Run):
    from .parallel import ordered_map
    from .spectrum import full_spectrum

    A, flow = r.cfg.generator(), r.cfg.flow()
    pts = [r.cfg.omega()] if r.run["omega"] is not None else list(r.cfg.sample().points)
    h, ren, step = float(r.run["horizon"]), float(r.run["renorm"]), float(r.run["step"])
    ests = ordered_map(lambda p: full_spectrum(A, flow, p, h, ren, step), pts, r.threads)
    d = flow.dimension
    hdr = [f"omega{i + 1}" for i in range(d)] + ["lambda1", "lambda2", "mean_alpha",
                                                "liouville_defect", "converged"]
    rows = [(*p.coords, e.lambda1, e.lambda2, e.mean_alpha, e.liouville_defect, e.converged)
            for p, e in zip(pts, ests)]
    r.csv(hdr, rows)
    r.plot(ests[0], "spectrum_history.dat")
    r.summary.update(mean_lambda1=float(np.mean([e.lambda1 for e in ests])),
                     mean_lambda2=float(np.mean([e.lambda2 for e in ests])),
                     points=len(pts))


def op_classify(r: _Run):
    from . import splitting

    A, flow, sample = r.cfg.generator(), r.cfg.flow(), r.cfg.sample()
    fn = {"sample": splitting.classify_sample, "frictionless": splitting.classify_frictionless,
          "dissipative": splitting.classify_dissipative}[r.run["classifier"]]
    rep = fn(A, flow, sample, float(r.run["m"]), float(r.run["horizon"]), float(r.run["step"]),
             threads=r.threads)
    r.csv(rep.header(), rep.rows())
    r.summary.update({f"fraction_{k}": v for k, v in rep.fractions.items()})


def op_perturb(r: _Run):
    from .kinetic import metric_distance
    from .toolbox import rotate_direction, rotate_vec

    A, flow, w = r.cfg.generator(), r.cfg.flow(), r.cfg.omega()
    u = np.asarray(r.run["u"], dtype=float)
    v = np.asarray(r.run["v"], dtype=float) if r.run["v"] is not None else rotate_vec(u, float(r.run["angle"]))
    B, plan, theta = rotate_direction(A, flow, w, u, v, float(r.run["epsilon"]), float(r.run["step"]))
    rows = [(i, s.start, s.duration, s.xi) for i, s in enumerate(plan.shears)]
    r.csv(["segment", "start", "duration", "xi"], rows)
    r.text("plan.txt", plan.to_text())
    r.summary.update(size=plan.size, distance=metric_distance(A, B), theta_budget=theta,
                     line_identity_rad=plan.residuals["line_identity_rad"])


def op_mix(r: _Run):
    from .parallel import ordered_map
    from .toolbox import mixing_perturbation

    A, flow = r.cfg.generator(), r.cfg.flow()
    pts = [r.cfg.omega()] if r.run["omega"] is not None else list(r.cfg.sample().points)
    tau, eps, step = float(r.run["tau"]), float(r.run["epsilon"]), float(r.run["step"])
    res = ordered_map(lambda p: mixing_perturbation(A, flow, p, tau, eps, step, int(r.run["swap_m"])),
                      pts, r.threads)
    d = flow.dimension
    hdr = [f"omega{i + 1}" for i in range(d)] + ["lambda1", "lambda2", "target", "before", "after",
                                                "swaps", "size", "converged"]
    rows = []
    for p, m in zip(pts, res):
        a = m.plan.audit
        rows.append((*p.coords, a["lambda1"], a["lambda2"], a["target"], m.control, m.exponent,
                     a["swaps"], m.plan.size, m.converged))
    r.csv(hdr, rows)
    r.text("plan.txt", res[0].plan.to_text())
    r.summary.update(mean_before=float(np.mean([m.control for m in res])),
                     mean_after=float(np.mean([m.exponent for m in res])),
                     mean_target=float(np.mean([m.plan.audit["target"] for m in res])))


def op_sweep(r: _Run):
    from .schrodinger import energy_sweep

    sw = energy_sweep(r.cfg.potential(), r.cfg.flow(), r.cfg.energies(), r.cfg.sample(),
                      float(r.run["horizon"]), float(r.run["m"]), float(r.run["step"]), r.threads)
    r.csv(sw.header(), sw.rows())
    r.plot(sw, "sweep_plot.dat")
    r.summary.update(energies=len(sw.energies),
                     flips=";".join(f"{a!r}..{b!r}" for a, b, _, _ in sw.flip_energies()))


def op_verify(r: _Run):
    from .verify import run_checks

    checks = run_checks(r.cfg.generator(), r.cfg.flow(), float(r.run["step"]))
    r.csv(["check", "passed", "value", "tolerance"],
          [(c.name, c.passed, c.value, c.tolerance) for c in checks])
    r.summary.update(passed=sum(c.passed for c in checks), total=len(checks))
    r.checks = checks


OPS = {"integrate": op_integrate, "spectrum": op_spectrum, "classify": op_classify,
       "perturb": op_perturb, "mix": op_mix, "sweep": op_sweep, "verify": op_verify}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="cocycle-lab", description=__doc__.splitlines()[0])
    p.add_argument("operation", choices=sorted(OPS))
    p.add_argument("--config", required=True, help="TOML config file or a bundled name")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (section.key, default section run)")
    p.add_argument("--out", default=None, help="artifact path prefix")
    p.add_argument("--threads", type=int, default=None, help="worker threads, 0 = auto")
    return p


def _print_table(pairs):
    width = max(len(k) for k, _ in pairs)
    for k, v in pairs:
        print(f"{k.ljust(width)}  {v}")


def run(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = cfgmod.load_config(args.config, args.overrides)
        cfgmod.validate(cfg, args.operation)
        threads = resolve_threads(args.threads if args.threads is not None else cfg.run["threads"])
    except (InvalidInputError, ClassViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    prefix = args.out or cfg.run["out"]
    r = _Run(cfg, args.operation, prefix, threads)
    try:
        OPS[args.operation](r)
    except (InvalidInputError, ClassViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SwapInfeasibleError, RotationInfeasibleError, ConstructionFailureError,
            DegenerateFrameError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CocycleLabError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    man = write_manifest(r.path("manifest.json"), args.operation, cfg.resolved(), r.artifacts, r.summary)
    if args.operation == "verify":
        _print_table([(c.name, "pass" if c.passed else "FAIL") for c in r.checks])
    _print_table([(k, repr(v) if isinstance(v, float) else str(v)) for k, v in r.summary.items()]
                 + [("artifacts", ", ".join(str(a) for a in r.artifacts + [man]))])
    if args.operation == "verify" and not all(c.passed for c in r.checks):
        print("error: some checks failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
