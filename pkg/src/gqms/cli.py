"""Command-line entry point: ``gqms <subcommand> ...``.

Exit codes: 0 success/pass, 1 semantic failure, 2 usage or input error.
All JSON goes through the canonical writer so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass


from . import jsonio, sdp
from .graphs import (commutant_basis, commutant_dimension_spectral, connected_components,
                     cycle_commutant_dim_formula, is_k_regular, parse_graph)
from .magic import (BlockMatrix, classify, cyclic_group, dihedral_group, graph_commutation_residual,
                    group_average, random_qms, verify_magic)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    tol: float


def default_tol() -> float:
    raw = os.environ.get("GQMS_TOL")
    if raw is None:
        return 1e-9
    try:
        tol = float(raw)
    except ValueError as exc:
        raise UsageError(f"GQMS_TOL={raw!r} is not a number") from exc
    if not tol > 0:
        raise UsageError("GQMS_TOL must be positive")
    return tol


def _emit(obj, out=None):
    text = jsonio.dumps(obj)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_square(path) -> BlockMatrix:
    try:
        return BlockMatrix.from_json(jsonio.load(path))
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise UsageError(f"cannot read block matrix from {path}: {exc}") from exc


def _graph(spec):
    try:
        return parse_graph(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_verify(args, cfg: RunConfig) -> int:
    X = _load_square(args.input)
    rep = verify_magic(X, cfg.tol)
    out = {"magic": rep.to_json(), "classes": classify(X, cfg.tol).to_json()}
    ok = rep.overall
    if args.graph:
        G = _graph(args.graph)
        if G.n != X.n:
            raise UsageError(f"graph has {G.n} vertices but the square has n={X.n}")
        res = graph_commutation_residual(X, G)
        out["graph"] = {"name": G.name, "commutation_residual": res, "commutes": res <= cfg.tol}
        ok = ok and res <= cfg.tol
    out["overall"] = ok
    _emit(out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_commutant(args, cfg: RunConfig) -> int:
    from .pencil import ParametrizationError, gqms_affine
    G = _graph(args.graph)
    spectral = commutant_dimension_spectral(G)
    basis = commutant_basis(G)
    formula = None
    if G.name.startswith("cycle:"):
        formula = cycle_commutant_dim_formula(G.n)
    N = connected_components(G).count
    params = measured_removed = None
    if is_k_regular(G) is not None:
        try:
            par = gqms_affine(G, 1)
            params, measured_removed = par.n_params, par.measured_removed
        except ParametrizationError as exc:
            print(f"parametrization failed: {exc}", file=sys.stderr)
            return EXIT_FAIL
    _emit({
        "graph": G.name,
        "spectral_dimension": spectral,
        "nullspace_dimension": basis.dimension,
        "formula_dimension": formula,
        "components": N,
        "independent_parameters": params,
        "predicted_parameters": spectral - N,
        "removed_by_magic": measured_removed,
    })
    agree = spectral == basis.dimension and (formula is None or formula == spectral)
    return EXIT_OK if agree else EXIT_FAIL


def cmd_pencil(args, cfg: RunConfig) -> int:
    from .pencil import export_json, export_sdpa, monic_gqms_pencil, monic_identity_exact, monic_qms_pencil
    if args.graph:
        P = monic_gqms_pencil(_graph(args.graph), args.s)
    elif args.n:
        P = monic_qms_pencil(args.n, args.s)
    else:
        raise UsageError("pencil needs --graph or --n")
    if args.out:
        (export_sdpa if args.format == "sdpa" else export_json)(P, args.out)
    identity = monic_identity_exact(P)
    _emit({"n": P.n, "s": P.s, "graph": P.graph, "variables": P.n_vars, "outer": P.outer,
           "monic_identity_exact": identity, "monic_at_zero": P.monic_check(), "out": args.out})
    return EXIT_OK if identity else EXIT_FAIL


def cmd_counterexample(args, cfg: RunConfig) -> int:
    from .separation import SearchConfig, Variant, counterexample_search, save_certificate, search_report_json
    if args.budget < 1:
        raise UsageError("--budget must be >= 1")
    scfg = SearchConfig(budget=args.budget, seed=args.seed, variant=Variant(args.variant),
                        refine_steps=args.refine, jobs=args.jobs, time_limit=args.time_limit)
    rep = counterexample_search(scfg)
    summary = search_report_json(rep, scfg)
    if rep.found:
        save_certificate(args.out, rep.B, rep.certificate, rep.seed, rep.index)
        summary["certificate"] = args.out
        summary["objective"] = rep.certificate.objective
    elif args.report:
        jsonio.dump(summary, args.report)
    if not rep.found:
        # the seeds list can be long; stdout carries the summary only
        summary = {k: v for k, v in summary.items() if k != "seeds"}
        summary["seeds_written_to"] = args.report
    _emit(summary)
    return EXIT_OK if rep.found else EXIT_FAIL


def cmd_certify(args, cfg: RunConfig) -> int:
    from .separation import check_certificate_json
    try:
        obj = jsonio.load(args.check)
        rep = check_certificate_json(obj)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise UsageError(f"cannot read certificate {args.check}: {exc}") from exc
    _emit({"valid": rep.ok, "objective": rep.objective, "min_eig": rep.min_eig, "trace": rep.trace,
           "max_orthogonality_residual": rep.residual, "problems": rep.reasons})
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_average(args, cfg: RunConfig) -> int:
    X = _load_square(args.input)
    groups = {"c4": cyclic_group, "d4": dihedral_group}
    if args.group not in groups:
        raise UsageError(f"unknown group {args.group!r}")
    if X.n != 4:
        raise UsageError("the c4/d4 groups act on n = 4")
    Y = group_average(X, groups[args.group](4))
    G = _graph("cycle:4")
    _emit(Y.to_json(), args.out)
    info = {"pre_commutation_residual": graph_commutation_residual(X, G),
            "post_commutation_residual": graph_commutation_residual(Y, G),
            "pre_magic_residual": verify_magic(X).magic_residual,
            "post_magic_residual": verify_magic(Y).magic_residual}
    print(jsonio.dumps(info), file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_random(args, cfg: RunConfig) -> int:
    if args.n < 1 or args.s < 1:
        raise UsageError("need n >= 1 and s >= 1")
    _emit(random_qms(args.n, args.s, args.seed).to_json(), args.out)
    return EXIT_OK


def cmd_sdp(args, cfg: RunConfig) -> int:
    try:
        P = sdp.read_sdpa_problem(args.file)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read SDPA file {args.file}: {exc}") from exc
    sol = sdp.feasibility(P) if args.feasibility else sdp.solve(P)
    out = {"status": sol.status.value, "objective": sol.objective, "dual_objective": sol.dual_objective,
           "residual": sol.residual, "min_eig": sol.min_eig, "iterations": sol.iterations,
           "message": sol.message, "valid": sdp.validate(P, sol)}
    if args.feasibility:
        out["depth"] = sol.depth
    if args.out:
        out["X"] = sol.X.tolist()
        _emit(out, args.out)
    _emit({k: v for k, v in out.items() if k != "X"})
    return EXIT_OK if sol.optimal else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gqms", description=__doc__.splitlines()[0])
    p.add_argument("--tol", type=float, default=None, help="membership tolerance (default 1e-9 or $GQMS_TOL)")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check magic relations, classes and graph commutation")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--graph")
    v.add_argument("--tol", type=float, default=None)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("commutant", help="commutant dimensions and parameter counts")
    c.add_argument("--graph", required=True)
    c.set_defaults(func=cmd_commutant)

    pe = sub.add_parser("pencil", help="export a monic pencil")
    pe.add_argument("--graph")
    pe.add_argument("--n", type=int)
    pe.add_argument("--s", type=int, default=1)
    pe.add_argument("--format", choices=["sdpa", "json"], default="json")
    pe.add_argument("--out")
    pe.set_defaults(func=cmd_pencil)

    ce = sub.add_parser("counterexample", help="search for a separated 4-cycle square")
    ce.add_argument("--budget", type=int, default=2000)
    ce.add_argument("--seed", type=int, default=42)
    ce.add_argument("--out", default="cert.json")
    ce.add_argument("--report", help="where to write the full report (with seeds) on exhaustion")
    ce.add_argument("--variant", choices=["row_only", "row_and_col"], default="row_only")
    ce.add_argument("--refine", type=int, default=0, help="local refinement steps per candidate")
    ce.add_argument("--jobs", type=int, default=1)
    ce.add_argument("--time-limit", type=float, default=None)
    ce.set_defaults(func=cmd_counterexample)

    ct = sub.add_parser("certify", help="re-validate a certificate without a solver")
    ct.add_argument("--check", required=True)
    ct.set_defaults(func=cmd_certify)

    av = sub.add_parser("average", help="average a 4 x 4 square over the c4 or d4 action")
    av.add_argument("--in", dest="input", required=True)
    av.add_argument("--group", default="c4")
    av.add_argument("--out")
    av.set_defaults(func=cmd_average)

    ra = sub.add_parser("random", help="random magic square by operator Sinkhorn")
    ra.add_argument("--n", type=int, required=True)
    ra.add_argument("--s", type=int, required=True)
    ra.add_argument("--seed", type=int, default=0)
    ra.add_argument("--out")
    ra.set_defaults(func=cmd_random)

    sd = sub.add_parser("sdp", help="standalone SDP engine")
    sds = sd.add_subparsers(dest="sdp_command", required=True)
    so = sds.add_parser("solve", help="solve an SDPA (.dat-s) problem")
    so.add_argument("file")
    so.add_argument("--feasibility", action="store_true", help="ignore the objective; find a deepest point")
    so.add_argument("--out")
    so.set_defaults(func=cmd_sdp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        tol = args.tol if args.tol is not None else default_tol()
        return args.func(args, RunConfig(args.command, tol))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
