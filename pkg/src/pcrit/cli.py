"""Command-line front end.

Every command reads one graph source (a JSON file or a family generator),
runs one computation and writes a JSON report, or its CSV projection, to
``--out`` or standard output. Exit status is 0 on success, 1 on a
verdict-level refusal or solver failure and 2 on bad input.

Examples
--------
    pcrit classify --family z --p 2 --radii 4,8,16,32 --out verdict.json
    pcrit verify --suite picone --p 1.5 --trials 100000 --seed 7
    pcrit eigen --graph g.json --interior K.json --p 2.5 --restarts 5
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import jsonio
from .certificates import EQUALITY_TOL, ads_finite_gap, barta_bounds, pointwise_picone_terms
from .dirichlet import SolverConfig, minimize_j, sandwich_solve
from .eigen import EigenConfig, principal_eigenvalue
from .exceptions import CoercivityError, ConvergenceError, GraphValidationError, PcritError, Refusal
from .graph import ExhaustionSpec, SubsetSpec, build_family, validate
from .operators import OperatorParams, gateaux_residual, greens_formula_residual
from .potential import (PotentialConfig, capacity, capacity_sequence, classify, green_function,
                        local_green, superharmonic_witness)
from .reports import SCHEMA, to_jsonable

__all__ = ["main", "build_parser", "emit_series", "series"]

COMMANDS = ("validate", "eigen", "dirichlet", "capacity", "green", "classify", "witness", "verify")
SUITES = ("picone", "ads", "green-formula", "gateaux", "barta")

EXIT_OK, EXIT_REFUSAL, EXIT_INPUT = 0, 1, 2


class InputError(PcritError):
    """Bad command-line input detected after parsing."""


def _p_value(text):
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"p must be a number, got {text!r}") from None
    if not p > 1 or not math.isfinite(p):
        raise argparse.ArgumentTypeError(f"p must satisfy p > 1, got {text}")
    return p


def _radii(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"radii must be comma-separated integers, got {text!r}") from None


def _potential(text):
    """``V``, ``const:V`` or ``root:V`` (``V`` at the root, 0 elsewhere)."""
    kind, _, val = text.rpartition(":")
    try:
        v = float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad potential {text!r}") from None
    if kind in ("", "const"):
        return v
    if kind == "root":
        return _RootPotential(v)
    raise argparse.ArgumentTypeError(f"potential kind must be const or root, got {kind!r}")


class _RootPotential:
    def __init__(self, value):
        self.value = value

    def __call__(self, dist):
        return self.value if dist == 0 else 0.0

    def __repr__(self):
        return f"root:{self.value!r}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcrit", description="Discrete p-potential theory on weighted graphs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        src = sp.add_mutually_exclusive_group(required=name not in ("verify",))
        src.add_argument("--graph", help="graph JSON file")
        src.add_argument("--family", help="z, cycle, star, tree or lattice")
        sp.add_argument("--degree", type=int, default=3, help="tree degree")
        sp.add_argument("--dim", type=int, default=2, help="lattice dimension")
        sp.add_argument("--length", type=int, default=8, help="cycle length")
        sp.add_argument("--c", type=_potential, default=0.0, dest="potential",
                        help="family potential: V, const:V or root:V")
        sp.add_argument("--radii", type=_radii, default=[1, 3, 7, 15], help="comma-separated radii")
        sp.add_argument("--p", type=_p_value, default=None if name == "validate" else 2.0,
                        required=name != "validate")
        sp.add_argument("--anchor", type=int, default=0, help="anchor vertex o")
        sp.add_argument("--interior", help="JSON list of interior vertex ids (or {\"K\": [...]})")
        sp.add_argument("--restarts", type=int, default=4)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-10, help="solver residual tolerance")
        sp.add_argument("--out", help="output path (default: standard output)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        if name == "dirichlet":
            sp.add_argument("--problem", required=True, help='JSON {"K": [...], "g": {...}, "f": {...}}')
            sp.add_argument("--method", choices=("direct-minimize", "sandwich"), default="direct-minimize")
        if name == "verify":
            sp.add_argument("--suite", choices=SUITES, required=True)
            sp.add_argument("--trials", type=int, default=1000)
    return parser


def _child_seeds(seed, k):
    """Independent integer seeds for ``k`` subtasks derived from one seed."""
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(k)]


def _family_spec(args):
    params = {"degree": args.degree, "dim": args.dim, "length": args.length}
    try:
        return ExhaustionSpec(args.family, args.radii, params, potential=args.potential)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from None


def _file_graph(args):
    return jsonio.graph_from_dict(_read_json(args.graph))


def _interior(args, g):
    if args.interior is None:
        return SubsetSpec(g, np.arange(g.n))
    return jsonio.subset_from_json(g, _read_json(args.interior))


def _check_anchor(args, K):
    if args.anchor not in K:
        raise InputError(f"anchor {args.anchor} is not an interior vertex")


def _run_validate(args, seeds):
    if args.graph:
        try:
            g = _file_graph(args)
            violations = []
            size = {"vertices": g.n, "edges": g.num_edges}
        except GraphValidationError as exc:
            violations, size = exc.violations, {}
        rep = {"kind": "validation", "valid": not violations, "violations": violations, **size}
    else:
        spec = _family_spec(args)
        rows = []
        for n, (g, _) in enumerate(spec.truncations()):
            rows.append({"radius": spec.radii[n], "vertices": g.n, "edges": g.num_edges,
                         "violations": validate(g)})
        rep = {"kind": "validation", "valid": all(not r["violations"] for r in rows), "truncations": rows}
    return rep, EXIT_OK if rep["valid"] else EXIT_INPUT


def _eigen_cfg(args, seeds):
    return EigenConfig(restarts=args.restarts, seed=seeds[0], tol=args.tol)


def _run_eigen(args, seeds):
    cfg = _eigen_cfg(args, seeds)
    if args.graph:
        g = _file_graph(args)
        return principal_eigenvalue(OperatorParams(g, args.p), _interior(args, g), cfg).to_dict(), EXIT_OK
    spec = _family_spec(args)
    lams, res = [], []
    for g, K in spec.truncations():
        r = principal_eigenvalue(OperatorParams(g, args.p), K, cfg)
        lams.append(r.lambda0)
        res.append(r.residual_sup)
    return {"kind": "eigen-sequence", "radii": list(spec.radii), "lambda0": lams,
            "residual_sup": res}, EXIT_OK


def _solver_cfg(args, seeds, method="direct-minimize"):
    return SolverConfig(method=method, tol_residual=args.tol, seed=seeds[1])


def _run_dirichlet(args, seeds):
    data = _read_json(args.problem)
    if not isinstance(data, dict) or "K" not in data:
        raise InputError("problem file needs a 'K' list")
    if args.graph:
        g = _file_graph(args)
    else:
        g, _ = build_family(_family_spec(args), len(args.radii) - 1)
    prob = jsonio.problem_from_dict(g, data)
    P = OperatorParams(g, args.p)
    cfg = _solver_cfg(args, seeds, args.method)
    rep = sandwich_solve(P, prob, cfg=cfg) if args.method == "sandwich" else minimize_j(P, prob, cfg)
    return rep.to_dict(), EXIT_OK


def _pot_cfg(args, seeds):
    return PotentialConfig(seed=seeds[2], solver=_solver_cfg(args, seeds), eigen=_eigen_cfg(args, seeds))


def _run_capacity(args, seeds):
    if args.graph:
        g = _file_graph(args)
        K = _interior(args, g)
        _check_anchor(args, K)
        cap, u = capacity(OperatorParams(g, args.p), args.anchor, K, _solver_cfg(args, seeds))
        return {"kind": "capacity-local", "anchor": args.anchor, "value": cap, "minimizer": u}, EXIT_OK
    rep = capacity_sequence(args.p, _family_spec(args), args.anchor, _pot_cfg(args, seeds))
    return rep.to_dict(), EXIT_OK


def _run_green(args, seeds):
    if args.graph:
        g = _file_graph(args)
        K = _interior(args, g)
        _check_anchor(args, K)
        return local_green(OperatorParams(g, args.p), args.anchor, K, _solver_cfg(args, seeds)).to_dict(), EXIT_OK
    return green_function(args.p, _family_spec(args), args.anchor, _pot_cfg(args, seeds)).to_dict(), EXIT_OK


def _need_family(args, what):
    if args.graph:
        raise InputError(f"{what} works along an exhaustion and needs --family")


def _run_classify(args, seeds):
    _need_family(args, "classify")
    return classify(args.p, _family_spec(args), args.anchor, _pot_cfg(args, seeds)).to_dict(), EXIT_OK


def _run_witness(args, seeds):
    _need_family(args, "witness")
    rep = superharmonic_witness(args.p, _family_spec(args), args.anchor, _pot_cfg(args, seeds))
    return rep.to_dict(), EXIT_OK if rep.success else EXIT_REFUSAL


def _verify_graph(args):
    if args.graph:
        g = _file_graph(args)
        return g, _interior(args, g)
    if args.family:
        return build_family(_family_spec(args), len(args.radii) - 1)
    return build_family(ExhaustionSpec("tree", [2], {"degree": 3}), 0)


def _run_verify(args, seeds):
    rng = np.random.default_rng(seeds[3])
    p, T = args.p, args.trials
    if T < 1:
        raise InputError("--trials must be positive")
    out = {"kind": "verify", "suite": args.suite, "p": p, "trials": T}
    if args.suite == "picone":
        a = rng.exponential(1.0, T)
        c = np.exp(rng.normal(0.0, 1.5, T))
        b = np.where(rng.random(T) < 0.1, a * c, rng.exponential(1.0, T))
        gaps, scale = pointwise_picone_terms(a, b, c, p)
        rel = gaps / scale
        eq = np.abs(b - a * c) <= EQUALITY_TOL * np.maximum(1.0, np.maximum(b, a * c))
        detected = eq & (np.abs(rel) <= EQUALITY_TOL)
        out.update({"equality_cases": int(eq.sum()), "equality_detected": int(detected.sum()),
                    "equality_gap_max": float(np.abs(rel[eq]).max(initial=0.0))})
    else:
        g, K = _verify_graph(args)
        P = OperatorParams(g, p)
        idx = K.interior
        rel = np.empty(T)
        if args.suite == "barta":
            lam = principal_eigenvalue(P, K, EigenConfig(restarts=0, seed=seeds[0])).lambda0
        for t in range(T):
            if args.suite in ("ads", "barta"):
                phi = np.zeros(g.n)
                phi[idx] = rng.uniform(0.1, 2.0, idx.size)
                if args.suite == "ads":
                    psi = np.zeros(g.n)
                    psi[idx] = rng.uniform(0.1, 2.0, idx.size)
                    rel[t] = ads_finite_gap(P, phi, psi, K).gap
                else:
                    lo, hi = barta_bounds(P, phi, K)
                    rel[t] = min(lam - lo, hi - lam)
            elif args.suite == "green-formula":
                f, phi = rng.standard_normal(g.n), rng.standard_normal(g.n)
                res, scale = greens_formula_residual(P, K, f, phi, return_scale=True)
                rel[t] = -res / (1 + scale)
            else:
                phi, psi = rng.standard_normal(g.n), rng.standard_normal(g.n)
                rel[t] = -gateaux_residual(P, phi, psi, relative=True)
        out["graph"] = {"vertices": g.n, "edges": g.num_edges, "interior": int(idx.size)}
    tol = {"picone": 1e-12, "ads": 1e-11, "green-formula": 1e-10, "gateaux": 1e-6 if p >= 2 else 1e-3,
           "barta": 1e-9}[args.suite]
    worst = np.sort(rel)[: min(16, rel.size)]
    ok = bool(rel.min() >= -tol)
    out.update({"min_gap": float(rel.min()), "threshold": -tol, "all_gaps_nonnegative": ok,
                "worst_gaps": worst})
    return out, EXIT_OK if ok else EXIT_REFUSAL


RUNNERS = {
    "validate": _run_validate,
    "eigen": _run_eigen,
    "dirichlet": _run_dirichlet,
    "capacity": _run_capacity,
    "green": _run_green,
    "classify": _run_classify,
    "witness": _run_witness,
    "verify": _run_verify,
}


def _run_config(args):
    keys = ("command", "graph", "family", "degree", "dim", "length", "radii", "p", "anchor",
            "interior", "restarts", "seed", "tol")
    out = {k: getattr(args, k) for k in keys}
    out["potential"] = repr(args.potential) if callable(args.potential) else args.potential
    for extra in ("suite", "trials", "method", "problem"):
        if hasattr(args, extra):
            out[extra] = getattr(args, extra)
    return out


def series(report: dict):
    """Rows ``(n, radius, value)`` of the main sequence carried by a report.

    ``radius`` is ``None`` when the sequence is not indexed by truncations.
    """
    kind = report.get("kind")
    radii = report.get("radii") or []

    def along(values):
        return [(i, radii[i] if i < len(radii) else None, v) for i, v in enumerate(values)]

    if kind in ("capacity",):
        return along(report["values"])
    if kind == "capacity-local":
        return [(0, None, report["value"])]
    if kind == "eigen":
        return [(i, None, v) for i, v in enumerate(report["restart_values"])]
    if kind == "eigen-sequence":
        return along(report["lambda0"])
    if kind in ("green", "witness"):
        return along(report["C"])
    if kind == "dirichlet":
        return [(i, None, v) for i, v in enumerate(report["solution"])]
    if kind == "verify":
        return [(i, None, v) for i, v in enumerate(report["worst_gaps"])]
    if kind == "verdict":
        ev = report["evidence"]
        radii = ev.get("radii") or []
        if "capacity" in ev:
            return along(ev["capacity"]["values"])
        return along([v for v in ev.get("lambda0") or [] if v is not None])
    return []


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return "%.17g" % x


def render(report: dict, fmt: str) -> str:
    """Text of a report in ``json`` or ``csv`` form.

    Raises
    ------
    PcritError
        For ``csv`` when the report holds no sequence.
    """
    report = to_jsonable(report)
    if fmt == "json":
        return jsonio.dumps(report)
    rows = series(report)
    if not rows:
        raise PcritError(f"report of kind {report.get('kind')!r} holds no sequence to emit")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "radius", "value"])
    for n, r, v in rows:
        w.writerow([n, "" if r is None else r, _fmt(v)])
    return buf.getvalue()


def emit_series(report, fmt="csv", path=None) -> str:
    """Write the plot-ready form of ``report`` to ``path`` (or return it).

    The text is rendered before the file is opened, so a report without a
    sequence raises and leaves no file behind.

    >>> emit_series({"kind": "capacity", "radii": [1, 3], "values": [1.0, 0.5]})
    'n,radius,value\\n0,1,1\\n1,3,0.5\\n'
    """
    text = render(report, fmt)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _error_report(kind, message, **extra):
    return {"schema": SCHEMA, "kind": kind, "message": message, **extra}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    seeds = _child_seeds(args.seed, 4)
    status = EXIT_OK
    try:
        report, status = RUNNERS[args.command](args, seeds)
    except GraphValidationError as exc:
        sys.stderr.write(jsonio.dumps(_error_report("graph-validation", str(exc), violations=exc.violations)))
        return EXIT_INPUT
    except (Refusal, CoercivityError, ConvergenceError) as exc:
        evidence = getattr(exc, "evidence", None)
        report = _error_report("refusal", str(exc), evidence=evidence)
        status = EXIT_REFUSAL
    except (InputError, PcritError, ValueError, OSError) as exc:
        sys.stderr.write(f"pcrit: error: {exc}\n")
        return EXIT_INPUT
    report = to_jsonable({**report, "schema": SCHEMA, "run": _run_config(args)})
    try:
        fmt = "json" if report["kind"] == "refusal" else args.format
        text = render(report, fmt)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except (PcritError, OSError) as exc:
        sys.stderr.write(f"pcrit: error: {exc}\n")
        return EXIT_INPUT
    if status == EXIT_REFUSAL and report["kind"] == "refusal":
        sys.stderr.write(f"pcrit: refused: {report['message']}\n")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
