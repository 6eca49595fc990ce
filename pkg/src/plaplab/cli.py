"""Command-line front end.

Commands: ``solve``, ``rate-sweep``, ``verify-exact``, ``rate-table``,
``check-c1``. Experiment configuration is a versioned JSON document that is
validated in full (unknown keys rejected) before any computation. Exit codes:
0 success, 1 numerical failure, 2 configuration or validation error. The
``PLAP_LOG`` environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import PlapError
from .evolve import Problem, SolverControls, solve
from .exact import ExactSolution, SolutionId, residual
from .grid import Boundary, GridSpec, save_field
from .harness import (
    HarnessError,
    SweepPlan,
    compare_theory,
    run_sweep,
    write_fit_summary,
    write_rate_table,
)
from .operators import (
    C1Params,
    Family,
    OperatorSpec,
    PerturbationAxis,
    c1_certify,
    hamiltonian_for,
    perturb_spec,
)
from .rates import FamilyCase, family_rate

logger = logging.getLogger("plaplab")

SCHEMA_VERSION = 1
_FMT = "%.17g"


class ConfigError(ValueError):
    pass


# -- config validation ---------------------------------------------------------


def _check_keys(node: dict, allowed: set, where: str):
    unknown = set(node) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _load_config(path: Path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    _check_keys(cfg, {"schema_version", "problem", "sweep"}, "config root")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    if "problem" not in cfg:
        raise ConfigError("config needs a 'problem' section")
    return cfg


_FAMILIES = {
    "normalized": Family.NORMALIZED,
    "variational": Family.VARIATIONAL,
    "general_pq": Family.GENERAL_PQ,
    "regularized_pq": Family.REGULARIZED_PQ,
    "biased_infinity": Family.BIASED_INFINITY,
    "biased_infinity_regularized": Family.BIASED_INFINITY_REGULARIZED,
}


def _build_operator(node: dict) -> OperatorSpec:
    _check_keys(node, {"family", "p", "p_prime", "eps", "eps1", "eps2", "a", "grad_floor"},
                "problem.operator")
    fam = node.get("family")
    if fam not in _FAMILIES:
        raise ConfigError(f"unknown operator family {fam!r}")
    kwargs = {k: float(v) for k, v in node.items() if k != "family"}
    if _FAMILIES[fam] is Family.VARIATIONAL and "p" in kwargs:
        kwargs.setdefault("p_prime", kwargs["p"])
    return OperatorSpec(_FAMILIES[fam], **kwargs)


def _build_grid(node: dict) -> GridSpec:
    _check_keys(node, {"dim", "extent", "resolution", "boundary"}, "problem.grid")
    try:
        boundary = Boundary(node["boundary"])
    except (KeyError, ValueError) as err:
        raise ConfigError(f"bad boundary: {err}") from err
    return GridSpec(int(node["dim"]), tuple(tuple(e) for e in node["extent"]),
                    tuple(node["resolution"]), boundary)


def _build_data(node: dict, spec: OperatorSpec, grid: GridSpec):
    """Return (initial, dirichlet, rebuild) where rebuild(spec) re-derives the
    pair for a perturbed operator (used by parameter-tracking data)."""
    kind = node.get("kind")
    if kind == "constant":
        _check_keys(node, {"kind", "value"}, "problem.data")
        v = float(node["value"])

        def initial(*coords):
            return np.full_like(np.asarray(coords[0], float), v)

        def dirichlet(*coords_t):
            return np.full_like(np.asarray(coords_t[0], float), v)

        return initial, dirichlet, None

    if kind == "sinusoid":
        _check_keys(node, {"kind", "amplitude", "wavenumber", "phase", "offset"},
                    "problem.data")
        amp = float(node.get("amplitude", 1.0))
        phase = float(node.get("phase", 0.0))
        off = float(node.get("offset", 0.0))
        wn = node.get("wavenumber", 1.0)
        ks = [float(w) for w in (wn if isinstance(wn, list) else [wn] * grid.dim)]

        def profile(*coords):
            out = amp * np.sin(ks[0] * np.asarray(coords[0], float) + phase)
            for k, c in zip(ks[1:], coords[1:]):
                out = out * np.sin(k * np.asarray(c, float))
            return off + out

        def dirichlet(*coords_t):
            return profile(*coords_t[:-1])

        return profile, dirichlet, None

    if kind == "barenblatt":
        _check_keys(node, {"kind", "A", "time_offset", "track_parameter", "p"},
                    "problem.data")
        A = float(node.get("A", 1.0))
        t0 = float(node.get("time_offset", 1.0))
        track = bool(node.get("track_parameter", True))

        def make(for_spec: OperatorSpec):
            p = for_spec.p if track else float(node.get("p", for_spec.p))
            sol = ExactSolution(SolutionId.BARENBLATT, p=p, n=grid.dim, A=A)

            def initial(*coords):
                r = _radius(coords)
                return sol.eval_radial(r, t0)

            def dirichlet(*coords_t):
                r = _radius(coords_t[:-1])
                return sol.eval_radial(r, t0 + coords_t[-1])

            return initial, dirichlet

        initial, dirichlet = make(spec)
        return initial, dirichlet, make

    raise ConfigError(f"unknown data kind {kind!r}")


def _radius(coords) -> np.ndarray:
    r2 = np.asarray(coords[0], float) ** 2
    for c in coords[1:]:
        r2 = r2 + np.asarray(c, float) ** 2
    return np.sqrt(r2)


def _build_controls(node: dict) -> SolverControls:
    _check_keys(node, {"cfl_sigma", "grad_clamp", "snapshot_times", "eps_num", "max_steps"},
                "problem.controls")
    kwargs = {}
    if "cfl_sigma" in node:
        kwargs["cfl_sigma"] = float(node["cfl_sigma"])
    if node.get("grad_clamp") is not None:
        kwargs["grad_clamp"] = float(node["grad_clamp"])
    if "snapshot_times" in node:
        kwargs["snapshot_times"] = tuple(float(t) for t in node["snapshot_times"])
    if node.get("eps_num") is not None:
        kwargs["eps_num"] = float(node["eps_num"])
    if "max_steps" in node:
        kwargs["max_steps"] = int(node["max_steps"])
    return SolverControls(**kwargs)


def _build_problem(node: dict):
    _check_keys(node, {"operator", "hamiltonian", "grid", "data", "horizon", "controls"},
                "problem")
    for req in ("operator", "grid", "data", "horizon"):
        if req not in node:
            raise ConfigError(f"problem needs '{req}'")
    spec = _build_operator(node["operator"])
    grid = _build_grid(node["grid"])
    initial, dirichlet, rebuild = _build_data(node["data"], spec, grid)
    source = None
    if "hamiltonian" in node:
        _check_keys(node["hamiltonian"], {"a", "eps2"}, "problem.hamiltonian")
        # a and eps2 live on the operator spec; reject contradictions
        for key in ("a", "eps2"):
            if key in node["hamiltonian"] and float(node["hamiltonian"][key]) != getattr(spec, key):
                raise ConfigError(f"hamiltonian.{key} must match operator.{key}")
    ham = hamiltonian_for(spec, source)
    controls = _build_controls(node.get("controls", {}))
    problem = Problem(
        spec=spec, grid=grid, initial=initial, T=float(node["horizon"]),
        ham=ham, dirichlet=dirichlet if grid.boundary is Boundary.DIRICHLET else None,
        controls=controls,
    )
    return problem, rebuild


_AXES = {a.value: a for a in PerturbationAxis}
_CASES = {c.value.replace("_", "-"): c for c in FamilyCase}


def _build_sweep(cfg: dict, problem: Problem, rebuild):
    node = cfg.get("sweep")
    if node is None:
        raise ConfigError("config needs a 'sweep' section for rate-sweep")
    _check_keys(node, {"axis", "values", "gap_times", "shared_dt", "theory", "margin"},
                "sweep")
    axis = _AXES.get(node.get("axis"))
    if axis is None:
        raise ConfigError(f"unknown sweep axis {node.get('axis')!r}")
    values = tuple(float(v) for v in node.get("values", ()))
    if len(values) < 4:
        raise ConfigError("need >= 4 perturbations")
    theory = None
    if "theory" in node:
        tnode = node["theory"]
        _check_keys(tnode, {"case", "theta", "p", "q", "p_prime", "q_prime", "m"},
                    "sweep.theory")
        case = _CASES.get(tnode.get("case"))
        if case is None:
            raise ConfigError(f"unknown theory case {tnode.get('case')!r}")
        theory = family_rate(
            case,
            theta=float(tnode["theta"]),
            p=tnode.get("p"), q=tnode.get("q"),
            p_prime=tnode.get("p_prime"), q_prime=tnode.get("q_prime"),
            m=tnode.get("m"),
        )
    data_for_value = None
    if rebuild is not None:
        def data_for_value(value):
            return rebuild(perturb_spec(problem.spec, axis, value))

    plan = SweepPlan(
        base=problem,
        axis=axis,
        values=values,
        gap_times=tuple(float(t) for t in node.get("gap_times", ())),
        shared_dt=bool(node.get("shared_dt", True)),
        theory=theory,
        data_for_value=data_for_value,
    )
    return plan, float(node.get("margin", 0.1))


# -- commands -------------------------------------------------------------------


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    cfg = _load_config(Path(args.config))
    problem, _ = _build_problem(cfg["problem"])
    out = _out_dir(args)
    run_id = Path(args.config).stem
    result = solve(problem)
    for snap in result.snapshots:
        save_field(snap, out / f"{run_id}_t{snap.time:g}.csv")
    stats = {
        "steps": result.stats.steps,
        "min_dt": result.stats.min_dt,
        "overshoot": result.stats.overshoot,
        "final_time": result.stats.final_time,
        "snapshots": [snap.time for snap in result.snapshots],
    }
    with open(out / f"{run_id}_stats.json", "w") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(result.snapshots)} snapshot(s) to {out}")
    return 0


def cmd_rate_sweep(args) -> int:
    cfg = _load_config(Path(args.config))
    problem, rebuild = _build_problem(cfg["problem"])
    plan, margin = _build_sweep(cfg, problem, rebuild)
    out = _out_dir(args)
    run_id = Path(args.config).stem
    fit = run_sweep(plan, jobs=args.jobs)
    consistent = None
    if fit.theory_nu is not None:
        consistent = compare_theory(fit, margin).consistent
    write_rate_table(fit, out / f"{run_id}_rates.csv")
    write_fit_summary(fit, out / f"{run_id}_fit.json", consistent=consistent)
    print(f"slope = {fit.slope:.6g}  r^2 = {fit.r_squared:.6g}  "
          f"floor = {fit.error_floor:.3g}  consistent = {consistent}")
    return 0


_SOLUTIONS = {
    "heat-mode": SolutionId.HEAT_MODE,
    "barenblatt": SolutionId.BARENBLATT,
    "radial-elliptic": SolutionId.RADIAL_ELLIPTIC,
    "torsion": SolutionId.TORSION_RADIAL,
    "fundamental": SolutionId.FUNDAMENTAL,
}


def cmd_verify_exact(args) -> int:
    sid = _SOLUTIONS[args.solution]
    try:
        sol = ExactSolution(sid, p=args.p, n=args.n, A=args.A, c=args.c)
    except ValueError as err:
        print(f"parameter outside validity: {err}", file=sys.stderr)
        return 2
    rng = np.random.default_rng(args.seed)
    radii = args.r_min + (args.r_max - args.r_min) * rng.random(args.radii)
    t = args.t
    worst = 0.0
    for r in radii:
        worst = max(worst, abs(residual(sol, r, t=t, mode="analytic",
                                        clearance=min(args.clearance, args.r_min / 2))))
    print(f"max |residual| over {args.radii} radii in ({args.r_min:g}, {args.r_max:g}): "
          f"{worst:.3e}")
    if args.out:
        out = _out_dir(args)
        with open(out / f"verify_{args.solution}.json", "w") as fh:
            json.dump({"solution": args.solution, "p": args.p, "n": args.n,
                       "max_residual": worst, "tol": args.tol}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0 if worst <= args.tol else 1


def cmd_rate_table(args) -> int:
    case = _CASES[args.case]
    rows = []
    for theta in args.theta:
        for pp in args.p_prime or [None]:
            try:
                pred = family_rate(case, theta=theta, p=args.p, q=args.q,
                                   p_prime=pp, q_prime=args.q_prime, m=args.m)
            except PlapError as err:
                print(f"case not applicable: {err}", file=sys.stderr)
                return 2
            rows.append((theta, pp, pred))
    print(f"{'theta':>8} {'p_prime':>8} {'nu':>12} {'kind':>9}")
    for theta, pp, pred in rows:
        kind = "attained" if pred.attained else "open sup"
        pp_s = f"{pp:g}" if pp is not None else "-"
        print(f"{theta:8g} {pp_s:>8} {pred.nu_sup:12.9g} {kind:>9}")
    return 0


def cmd_check_c1(args) -> int:
    if args.family == "normalized":
        base = OperatorSpec.normalized(args.q)
    elif args.family == "variational":
        base = OperatorSpec.variational(args.q)
    elif args.family == "general_pq":
        base = OperatorSpec.general_pq(args.q, args.q_prime)
    elif args.family == "regularized_pq":
        base = OperatorSpec.regularized_pq(args.q, args.q_prime, 0.0)
    else:
        base = OperatorSpec.biased_infinity_regularized(args.a, 0.0, 0.0)
    axis = _AXES[args.axis]
    mags = np.geomspace(args.xi_min, args.xi_max, args.xi_count)
    candidate = C1Params(alpha=args.alpha, beta=args.beta, c_A=args.c_A, k=args.k)
    report = c1_certify(base, axis, args.eps, mags, candidate, dim=args.dim)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict}: max ratio {report.max_ratio:.6g} (c_A = {candidate.c_A:g}) "
          f"at |xi| = {np.linalg.norm(report.worst_xi):.3g}, eps = {report.worst_eps:g}")
    return 0 if report.passed else 1


# -- entry point ------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="plaplab",
                                  description="p-Laplace stability laboratory")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="integrate one problem, write snapshots")
    ps.add_argument("--config", required=True)
    ps.add_argument("--out", default="out")
    ps.set_defaults(fn=cmd_solve)

    pr = sub.add_parser("rate-sweep", help="run a perturbation sweep and fit the exponent")
    pr.add_argument("--config", required=True)
    pr.add_argument("--out", default="out")
    pr.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    pr.set_defaults(fn=cmd_rate_sweep)

    pv = sub.add_parser("verify-exact", help="residual check of a closed-form solution")
    pv.add_argument("--solution", required=True, choices=sorted(_SOLUTIONS))
    pv.add_argument("--p", type=float, required=True)
    pv.add_argument("--n", type=int, default=1)
    pv.add_argument("--A", type=float, default=1.0)
    pv.add_argument("--c", type=float, default=1.0)
    pv.add_argument("--t", type=float, default=1.0)
    pv.add_argument("--radii", type=int, default=100)
    pv.add_argument("--r-min", type=float, default=0.01)
    pv.add_argument("--r-max", type=float, default=1.0)
    pv.add_argument("--clearance", type=float, default=1e-3)
    pv.add_argument("--tol", type=float, default=1e-10)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--out", default=None)
    pv.set_defaults(fn=cmd_verify_exact)

    pt = sub.add_parser("rate-table", help="print theoretical exponents for a case")
    pt.add_argument("--case", required=True, choices=sorted(_CASES))
    pt.add_argument("--theta", type=float, nargs="+", required=True)
    pt.add_argument("--p", type=float, default=None)
    pt.add_argument("--q", type=float, default=None)
    pt.add_argument("--p-prime", dest="p_prime", type=float, nargs="*", default=None)
    pt.add_argument("--q-prime", dest="q_prime", type=float, default=None)
    pt.add_argument("--m", type=float, default=None)
    pt.set_defaults(fn=cmd_rate_table)

    pc = sub.add_parser("check-c1", help="certify a closeness envelope over a xi grid")
    pc.add_argument("--family", required=True,
                    choices=["normalized", "variational", "general_pq",
                             "regularized_pq", "biased"])
    pc.add_argument("--q", type=float, default=2.0)
    pc.add_argument("--q-prime", dest="q_prime", type=float, default=2.0)
    pc.add_argument("--a", type=float, default=0.0)
    pc.add_argument("--axis", required=True, choices=sorted(_AXES))
    pc.add_argument("--eps", type=float, nargs="+", required=True)
    pc.add_argument("--xi-min", type=float, default=1e-3)
    pc.add_argument("--xi-max", type=float, default=1e3)
    pc.add_argument("--xi-count", type=int, default=25)
    pc.add_argument("--alpha", type=float, required=True)
    pc.add_argument("--beta", type=float, required=True)
    pc.add_argument("--c-A", dest="c_A", type=float, required=True)
    pc.add_argument("--k", type=float, default=4.0)
    pc.add_argument("--dim", type=int, default=2)
    pc.set_defaults(fn=cmd_check_c1)
    return top


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("PLAP_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (PlapError, HarnessError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
