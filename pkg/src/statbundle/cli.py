"""Batch front-end: run a JSON-described experiment and write a CSV trajectory.

Usage::

    statbundle {gradcheck,flow,meanfield,schrodinger,vb} --config CFG [--out CSV]

Exit codes: 0 success, 1 malformed config or usage, 2 numerical failure.
Random draws use numpy's PCG64 generator seeded from the config's ``seed``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .errors import GeometryError, NonPositiveError, NumericalError
from .flows import Trajectory, integrate
from .gradients import (
    fd_natural_grad,
    grad_cross_entropy_total,
    grad_entropy,
    grad_expect,
    grad_js,
    grad_kl_total,
    grad_phi_mixture_center,
    max_rel_error,
)
from .oracles import sinkhorn_oracle
from .product import (
    JointProb,
    SchrodingerProblem,
    constrained_schrodinger_flow,
    grad_kl_meanfield_fwd,
    grad_kl_meanfield_rev,
    mean_field,
    mutual_information,
    schrodinger_grad,
    schrodinger_objective,
)
from .simplex import Prob, cross_entropy, entropy, exp_chart, expect, js, kl, mix_chart
from .vb import (
    ExpModel,
    VBProblem,
    elbo,
    elbo_natural_grad,
    theta_bar,
    vb_flow,
    whitened_indicator_stats,
)

PROBLEM_TYPES = ("klflow", "meanfield", "schrodinger", "vb", "gradcheck")
SUBCOMMANDS = {
    "gradcheck": "gradcheck",
    "flow": "klflow",
    "meanfield": "meanfield",
    "schrodinger": "schrodinger",
    "vb": "vb",
}
GRADCHECK_TOL = 1e-5
DIRICHLET_CONCENTRATION = 2.0


class ConfigError(ValueError):
    """The experiment description is malformed."""


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str
    dt: float
    steps: int
    tol: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    problem: dict[str, Any]
    integrator: IntegratorConfig
    output: str | None

    @property
    def kind(self) -> str:
        return self.problem["type"]


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing key {where}{key!r}")
    return d[key]


def _int(value, name: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name!r} must be an integer >= {minimum}")
    return value


def parse_config(raw: Any) -> ExperimentConfig:
    """Validate a decoded JSON document."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    seed = _int(_require(raw, "seed", ""), "seed", 0)
    problem = _require(raw, "problem", "")
    if not isinstance(problem, dict):
        raise ConfigError("'problem' must be an object")
    kind = _require(problem, "type", "problem.")
    if kind not in PROBLEM_TYPES:
        raise ConfigError(f"unknown problem type {kind!r}; expected one of {PROBLEM_TYPES}")
    integ = _require(raw, "integrator", "")
    if not isinstance(integ, dict):
        raise ConfigError("'integrator' must be an object")
    scheme = _require(integ, "scheme", "integrator.")
    if scheme not in ("exp-euler", "rk4"):
        raise ConfigError("'integrator.scheme' must be 'exp-euler' or 'rk4'")
    dt = _require(integ, "dt", "integrator.")
    if isinstance(dt, bool) or not isinstance(dt, (int, float)) or not dt > 0:
        raise ConfigError("'integrator.dt' must be a positive number")
    steps = _int(_require(integ, "steps", "integrator."), "integrator.steps", 1)
    tol = integ.get("tol")
    if tol is not None and (not isinstance(tol, (int, float)) or tol < 0):
        raise ConfigError("'integrator.tol' must be a non-negative number")
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("'output' must be a path string")

    for key in ("n", "n1", "n2"):
        if key in problem:
            _int(problem[key], f"problem.{key}", 2)
    return ExperimentConfig(seed, problem, IntegratorConfig(scheme, float(dt), steps, tol), output)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw)


def _prob(problem: dict, key: str, n: int, rng: np.random.Generator) -> Prob:
    if key not in problem:
        return Prob(rng.dirichlet(np.full(n, DIRICHLET_CONCENTRATION)))
    value = np.asarray(problem[key], dtype=float)
    if value.shape != (n,):
        raise ConfigError(f"'problem.{key}' must have {n} entries")
    try:
        return Prob(value)
    except NonPositiveError as exc:
        raise ConfigError(f"'problem.{key}': {exc}") from exc


def _joint(problem: dict, key: str, n1: int, n2: int, rng: np.random.Generator) -> JointProb:
    if key not in problem:
        return JointProb(rng.dirichlet(np.full(n1 * n2, DIRICHLET_CONCENTRATION)).reshape(n1, n2))
    value = np.asarray(problem[key], dtype=float)
    if value.shape != (n1, n2):
        raise ConfigError(f"'problem.{key}' must be a {n1}x{n2} table")
    try:
        return JointProb(value)
    except NonPositiveError as exc:
        raise ConfigError(f"'problem.{key}': {exc}") from exc


def _dims(problem: dict, *keys: str) -> tuple[int, ...]:
    return tuple(_int(_require(problem, k, "problem."), f"problem.{k}", 2) for k in keys)


@dataclass
class Outcome:
    """Rows for the CSV plus extra summary fields."""

    rows: list[tuple[int, float, float, float, np.ndarray]]
    summary: dict[str, float]
    failed: str | None = None


def _rows_from(traj: Trajectory) -> list:
    return [
        (k, t, f, g, np.asarray(s, dtype=float).reshape(-1))
        for k, (t, s, f, g) in enumerate(zip(traj.times, traj.states, traj.objective, traj.grad_norm))
    ]


def _run_klflow(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    p = cfg.problem
    (n,) = _dims(p, "n")
    target = _prob(p, "target", n, rng)
    q0 = _prob(p, "q0", n, rng)
    direction = p.get("direction", "fwd")
    if direction == "fwd":
        field = lambda q: exp_chart(q, target)  # noqa: E731
        objective = lambda q: kl(q, target)  # noqa: E731
    elif direction == "rev":
        field = lambda r: mix_chart(r, target)  # noqa: E731
        objective = lambda r: kl(target, r)  # noqa: E731
    else:
        raise ConfigError("'problem.direction' must be 'fwd' or 'rev'")
    integ = cfg.integrator
    stop = 0.0 if integ.tol is None else integ.tol
    traj = integrate(q0, field, integ.dt, integ.steps, integ.scheme, objective, stop_tol=stop)
    return Outcome(_rows_from(traj), {})


def _run_meanfield(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    p = cfg.problem
    n1, n2 = _dims(p, "n1", "n2")
    r0 = _joint(p, "joint", n1, n2, rng)
    direction = p.get("direction", "rev")
    if direction == "rev":
        field = lambda r: -grad_kl_meanfield_rev(r)  # noqa: E731
        objective = mutual_information
    elif direction == "fwd":
        field = lambda r: -grad_kl_meanfield_fwd(r)  # noqa: E731
        objective = lambda r: kl(mean_field(r), r)  # noqa: E731
    else:
        raise ConfigError("'problem.direction' must be 'fwd' or 'rev'")
    integ = cfg.integrator
    traj = integrate(r0, field, integ.dt, integ.steps, integ.scheme, objective, stop_tol=integ.tol)
    return Outcome(_rows_from(traj), {})


def _run_schrodinger(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    p = cfg.problem
    n1, n2 = _dims(p, "n1", "n2")
    eps = _require(p, "epsilon", "problem.")
    if isinstance(eps, bool) or not isinstance(eps, (int, float)) or not eps > 0:
        raise ConfigError("'problem.epsilon' must be a positive number")
    if "cost" in p:
        cost = np.asarray(p["cost"], dtype=float)
        if cost.shape != (n1, n2) or not np.all(np.isfinite(cost)):
            raise ConfigError(f"'problem.cost' must be a finite {n1}x{n2} table")
    else:
        cost = rng.standard_normal((n1, n2))
    if "margins" in p:
        m = p["margins"]
        if not isinstance(m, list) or len(m) != 2:
            raise ConfigError("'problem.margins' must be a list of two distributions")
        q1 = _prob({"margins[0]": m[0]}, "margins[0]", n1, rng)
        q2 = _prob({"margins[1]": m[1]}, "margins[1]", n2, rng)
    else:
        q1 = _prob({}, "q1", n1, rng)
        q2 = _prob({}, "q2", n2, rng)
    if cfg.integrator.scheme != "exp-euler":
        raise ConfigError("'integrator.scheme' must be 'exp-euler' for the constrained flow")
    prob = SchrodingerProblem.create(cost, float(eps), q1, q2)
    integ = cfg.integrator
    traj = constrained_schrodinger_flow(prob, None, integ.dt, integ.steps, stop_tol=integ.tol)
    oracle = sinkhorn_oracle(cost, float(eps), q1, q2, tol=1e-13)
    tv = 0.5 * float(np.sum(np.abs(traj.final.weights - oracle.plan.weights)))
    return Outcome(_rows_from(traj), {"tv_to_sinkhorn": tv})


def _run_vb(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    p = cfg.problem
    n1, n2 = _dims(p, "n1", "n2")
    joint = _joint(p, "joint", n1, n2, rng)
    x = _int(_require(p, "x", "problem."), "problem.x", 0)
    if x >= n1:
        raise ConfigError(f"'problem.x' must be below n1={n1}")
    d = _int(_require(p, "suffstat_dim", "problem."), "problem.suffstat_dim", 1)
    if d > n2 - 1:
        raise ConfigError(f"'problem.suffstat_dim' must be at most n2-1={n2 - 1}")
    if cfg.integrator.scheme != "rk4":
        raise ConfigError("'integrator.scheme' must be 'rk4' for the variational flow")
    problem = VBProblem(joint, x)
    model = ExpModel(problem.prior, whitened_indicator_stats(problem.prior, d), np.zeros(d))
    integ = cfg.integrator
    traj = vb_flow(problem, model, integ.dt, integ.steps, stop_tol=integ.tol)
    summary: dict[str, float] = {}
    if d == n2 - 1:
        summary["theta_error"] = float(np.linalg.norm(traj.final - theta_bar(problem, model)))
    return Outcome(_rows_from(traj), summary)


def _gradcheck_case(which: str, rng: np.random.Generator, problem: dict):
    """Return ``(state, [(analytic, fd), ...])`` for one random instance."""

    def dirichlet(n):
        return Prob(rng.dirichlet(np.full(n, DIRICHLET_CONCENTRATION)))

    def joint(n1, n2):
        return JointProb(rng.dirichlet(np.full(n1 * n2, DIRICHLET_CONCENTRATION)).reshape(n1, n2))

    simple = {"expect", "kl_total", "cross_entropy_total", "entropy", "js", "phi_midpoint"}
    if which in simple:
        (n,) = _dims(problem, "n")
        q, r = dirichlet(n), dirichlet(n)
        if which == "expect":
            u = rng.standard_normal(n)
            return q, [(grad_expect(q, u), fd_natural_grad(lambda a: expect(a, u), q))]
        if which == "kl_total":
            g = grad_kl_total(q, r)
            return q, [
                (g.first, fd_natural_grad(lambda a: kl(a, r), q)),
                (g.second, fd_natural_grad(lambda b: kl(q, b), r)),
            ]
        if which == "cross_entropy_total":
            g = grad_cross_entropy_total(q, r)
            return q, [
                (g.first, fd_natural_grad(lambda a: cross_entropy(a, r), q)),
                (g.second, fd_natural_grad(lambda b: cross_entropy(q, b), r)),
            ]
        if which == "entropy":
            return q, [(grad_entropy(q), fd_natural_grad(entropy, q))]
        if which == "js":
            return q, [(grad_js(q, r), fd_natural_grad(lambda a: js(a, r), q))]
        c = dirichlet(n)
        phi: Callable[[Prob], float] = lambda a: 0.5 * (kl(r, a) + kl(c, a))  # noqa: E731
        return q, [(grad_phi_mixture_center(q, r, c), fd_natural_grad(phi, q))]

    n1, n2 = _dims(problem, "n1", "n2")
    if which == "meanfield_fwd":
        s = joint(n1, n2)
        return s, [(grad_kl_meanfield_fwd(s), fd_natural_grad(lambda a: kl(mean_field(a), a), s))]
    if which == "meanfield_rev":
        s = joint(n1, n2)
        return s, [(grad_kl_meanfield_rev(s), fd_natural_grad(mutual_information, s))]
    if which == "schrodinger":
        prob = SchrodingerProblem.create(
            rng.standard_normal((n1, n2)), float(problem.get("epsilon", 1.0)), dirichlet(n1), dirichlet(n2)
        )
        s = joint(n1, n2)
        return s, [(schrodinger_grad(prob, s), fd_natural_grad(lambda a: schrodinger_objective(prob, a), s))]
    if which == "elbo":
        vb = VBProblem(joint(n1, n2), int(rng.integers(n1)))
        r = Prob(rng.dirichlet(np.full(n2, DIRICHLET_CONCENTRATION)), vb.prior.space)
        return r, [(elbo_natural_grad(vb, r), fd_natural_grad(lambda a: elbo(vb, a), r))]
    raise ConfigError(f"unknown gradient {which!r} in 'problem.which'")


GRADCHECK_NAMES = (
    "expect",
    "kl_total",
    "cross_entropy_total",
    "entropy",
    "js",
    "phi_midpoint",
    "meanfield_fwd",
    "meanfield_rev",
    "schrodinger",
    "elbo",
)


def _run_gradcheck(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    p = cfg.problem
    which = _require(p, "which", "problem.")
    if which not in GRADCHECK_NAMES:
        raise ConfigError(f"unknown gradient {which!r}; expected one of {GRADCHECK_NAMES}")
    trials = _int(_require(p, "trials", "problem."), "problem.trials", 1)
    children = np.random.SeedSequence(cfg.seed).spawn(trials)
    rows = []
    worst = 0.0
    for k, child in enumerate(children):
        trial_rng = np.random.Generator(np.random.PCG64(child))
        state, pairs = _gradcheck_case(which, trial_rng, p)
        err = max(max_rel_error(a, b) for a, b in pairs)
        norm = max(a.norm() for a, _ in pairs)
        worst = max(worst, err)
        rows.append((k, 0.0, err, norm, np.asarray(state.weights)))
    failed = None
    if worst > GRADCHECK_TOL:
        failed = f"gradient check failed: max relative error {worst:.3e} > {GRADCHECK_TOL:g}"
    return Outcome(rows, {"max_rel_error": worst}, failed)


RUNNERS = {
    "klflow": _run_klflow,
    "meanfield": _run_meanfield,
    "schrodinger": _run_schrodinger,
    "vb": _run_vb,
    "gradcheck": _run_gradcheck,
}


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: str | Path, rows: list) -> None:
    width = max(len(r[4]) for r in rows)
    header = ["step", "t", "objective", "grad_norm"] + [f"state_{i}" for i in range(width)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for step, t, f, g, state in rows:
            w.writerow([str(step), _fmt(t), _fmt(f), _fmt(g)] + [_fmt(s) for s in state])


def run(config_path: str | Path, out: str | Path | None = None, expect_type: str | None = None) -> int:
    """Run one experiment; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        if expect_type is not None and cfg.kind != expect_type:
            raise ConfigError(f"config describes a {cfg.kind!r} problem, not {expect_type!r}")
        target = out if out is not None else cfg.output
        if target is None:
            raise ConfigError("missing key 'output' (or pass --out)")
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
        outcome = RUNNERS[cfg.kind](cfg, rng)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, NonPositiveError) as exc:
        # positivity problems in the config itself were reported as ConfigError
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    write_csv(target, outcome.rows)
    last = outcome.rows[-1]
    parts = [f"final objective={_fmt(last[2])}", f"final grad_norm={_fmt(last[3])}"]
    parts += [f"{k}={_fmt(v)}" for k, v in outcome.summary.items()]
    print(" ".join(parts))
    if outcome.failed:
        print(outcome.failed, file=sys.stderr)
        return 2
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="statbundle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name, kind in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=f"run a {kind} experiment")
        sp.add_argument("--config", required=True, help="path to the JSON experiment config")
        sp.add_argument("--out", help="CSV path, overrides the config's 'output'")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(args.config, args.out, SUBCOMMANDS[args.command])


if __name__ == "__main__":
    sys.exit(main())
