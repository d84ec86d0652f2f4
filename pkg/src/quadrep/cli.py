"""Command-line surface: fitting, evaluation, convergence sweeps, noisy-data
generation, and denoising, with plot-ready CSV/JSON outputs.

Every command writes a ``manifest.json`` beside its outputs; ``quadrep replay
--manifest <path> --out <dir>`` regenerates the outputs byte-identically
(the fresh manifest itself carries a new timestamp).

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .denoise import (
    NOISE_PRESETS,
    ALL_CONSTRAINTS,
    MomentSystemError,
    SingularConstraintError,
    clamped_reconstruct,
    denoise_case3,
    denoise_iterative,
    fit_manifold_ls,
    generate_noisy,
    knn_vote_index,
    nearest_root_signs,
    read_dataset,
    step_ground_truth,
    write_dataset,
)
from .dictionary import DataError, build_grid, tabulated_grid
from .functions import BUILTINS, get_builtin
from .linalg import RankDeficiencyError
from .representation import (
    ComplexRootError,
    Degree2Rep,
    EvaluationError,
    PoleError,
    eval_rep,
    fit_degree0,
    fit_degree1,
    fit_degree2_uniform,
    load_rep,
    relative_l2,
    rep_to_dict,
    roots_at,
    save_rep,
)
from .selection import SelectionConfig, greedy_select, rrqr_select

NUMERICAL_ERRORS = (
    ArithmeticError,
    np.linalg.LinAlgError,
    RankDeficiencyError,
    ComplexRootError,
    PoleError,
    EvaluationError,
    MomentSystemError,
    SingularConstraintError,
)

METHODS = ("deg0", "deg1", "deg2-uniform", "deg2-greedy", "deg2-rrqr")


def _thread_count() -> int:
    raw = os.environ.get("QUADREP_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _write_manifest(out: Path, command: str, argv: list[str], seed) -> None:
    doc = {
        "command": command,
        "argv": argv,
        "seed": seed,
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _grid_for_function(name: str, order: int):
    fn = get_builtin(name)
    return build_grid(fn.fn, fn.domain, order), fn


def _fit_with_method(grid, args):
    method = args.method
    if method == "deg0":
        rep = fit_degree0(grid, args.n if args.n is not None else args.n0)
        return rep, rep.coeffs.coeffs.size, None
    if method == "deg1":
        rep = fit_degree1(grid, args.n0, args.n1)
        return rep, args.n0 + args.n1 + 1, None
    if method == "deg2-uniform":
        rep = fit_degree2_uniform(grid, args.n0, args.n1, args.n2)
        return rep, args.n0 + args.n1 + args.n2 + 2, None
    if method == "deg2-greedy":
        config = SelectionConfig(
            batch_size=args.batch,
            target_residual=args.target_residual,
            max_terms=args.max_terms,
            stream_cap=args.cap,
            rng_seed=args.seed,
        )
        rep, trace = greedy_select(grid, config)
        k = sum(len(s.chosen_tags) for s in trace.steps)
        return rep, k, trace
    if method == "deg2-rrqr":
        rep, report = rrqr_select(grid, stream_cap=args.cap,
                                  truncate_tol=args.tol, max_terms=args.max_terms)
        return rep, report.rank, None
    raise ValueError(f"unknown method {method}")


def cmd_fit(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.fn is not None:
        grid, _ = _grid_for_function(args.fn, args.order)
    else:
        data = read_dataset(args.input)
        grid = tabulated_grid(data.positions, data.observed)
    rep, k, trace = _fit_with_method(grid, args)
    save_rep(rep, out / "rep.json")
    if trace is not None and args.trace:
        with open(out / "trace.json", "w") as fh:
            fh.write(trace.to_json())
            fh.write("\n")
    _write_manifest(out, "fit", argv, args.seed)
    print(f"K={k} residual={rep.fit_residual:.6e}")
    if args.method in ("deg2-greedy", "deg2-rrqr") and k - 1 < grid.size:
        baseline = fit_degree0(grid, k - 1)
        print(f"deg0 residual at K={k}: {baseline.fit_residual:.6e}")
    return 0


def cmd_eval(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rep = load_rep(args.rep)
    except (ValueError, KeyError) as exc:
        print(f"numerical failure in eval: bad representation document: {exc}",
              file=sys.stderr)
        return 3
    if args.points is not None:
        with open(args.points, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        if rows and rows[0][0].strip().lower() in ("x",):
            rows = rows[1:]
        xs = np.array([float(r[0]) for r in rows])
    else:
        lo, hi = rep_to_dict(rep)["domain"]
        xs = np.linspace(lo, hi, args.grid)
    complex_count = 0
    with open(out / "eval.csv", "w", newline="") as fh:
        writer = _csv_writer(fh)
        writer.writerow(["x", "value"])
        for x in xs:
            try:
                writer.writerow([repr(float(x)), repr(float(eval_rep(rep, x)))])
            except (ComplexRootError, PoleError, EvaluationError):
                complex_count += 1
                writer.writerow([repr(float(x)), ""])
    if args.branches:
        if not isinstance(rep, Degree2Rep):
            print("branch table requires a degree-2 representation", file=sys.stderr)
            return 2
        with open(out / "branches.csv", "w", newline="") as fh:
            writer = _csv_writer(fh)
            writer.writerow(["x", "root_lo", "root_hi"])
            for x in xs:
                try:
                    r = roots_at(rep, x)
                    writer.writerow([repr(float(x)), repr(r.lo), repr(r.hi)])
                except (ComplexRootError, EvaluationError):
                    complex_count += 1
                    writer.writerow([repr(float(x)), "", ""])
    _write_manifest(out, "eval", argv, None)
    if complex_count:
        print(f"warning: {complex_count} points had no real value", file=sys.stderr)
    print(f"evaluated {xs.size} points")
    return 0


def _achievable_k(method: str, kmin: int, kmax: int):
    ks = []
    for k in range(max(kmin, 1), kmax + 1):
        if method == "deg0":
            ks.append(k)
        elif method == "deg1":
            if k % 2 == 1:
                ks.append(k)
        elif method == "deg2-uniform":
            if (k - 2) % 3 == 0 and k >= 2:
                ks.append(k)
        else:
            ks.append(k)
    return ks


def _convergence_cell(grid, fn, method: str, k: int, seed: int, cap: int):
    if method == "deg0":
        rep = fit_degree0(grid, k - 1)
    elif method == "deg1":
        n = (k - 1) // 2
        rep = fit_degree1(grid, n, n)
    elif method == "deg2-uniform":
        n = (k - 2) // 3
        rep = fit_degree2_uniform(grid, n, n, n)
    elif method == "deg2-greedy":
        rep, _ = greedy_select(grid, SelectionConfig(max_terms=k, rng_seed=seed,
                                                     stream_cap=cap))
    elif method == "deg2-rrqr":
        rep, _ = rrqr_select(grid, stream_cap=cap, max_terms=k)
    else:
        raise ValueError(f"unknown method {method}")
    return relative_l2(rep, grid)


def cmd_convergence(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid, fn = _grid_for_function(args.fn, args.order)
    methods = [m.strip() for m in args.methods.split(",")]
    for m in methods:
        if m not in METHODS:
            print(f"unknown method {m!r}; choices: {', '.join(METHODS)}", file=sys.stderr)
            return 2
    cells = [(m, k) for m in methods for k in _achievable_k(m, args.kmin, args.kmax)]

    def run_cell(cell):
        m, k = cell
        try:
            return _convergence_cell(grid, fn, m, k, args.seed, args.cap)
        except NUMERICAL_ERRORS as exc:
            print(f"cell ({m}, K={k}) failed: {exc}", file=sys.stderr)
            return float("nan")
        except ValueError as exc:
            print(f"cell ({m}, K={k}) skipped: {exc}", file=sys.stderr)
            return float("nan")

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        errors = list(pool.map(run_cell, cells))
    with open(out / "convergence.csv", "w", newline="") as fh:
        fh.write("# error = relative L2 against the sampled reference"
                 " (absolute when the reference norm is 0);"
                 " K counts fitted coefficients\n")
        writer = _csv_writer(fh)
        writer.writerow(["method", "K", "error"])
        for (m, k), err in zip(cells, errors):
            writer.writerow([m, k, repr(float(err))])
    _write_manifest(out, "convergence", argv, args.seed)
    print(f"wrote {len(cells)} cells for {args.fn}")
    return 0


def cmd_generate(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.preset is not None:
        model, sigma = NOISE_PRESETS[args.preset]
    else:
        if args.target is None or args.sigma is None:
            print("need --preset or both --target and --sigma", file=sys.stderr)
            return 2
        model, sigma = args.target, args.sigma
    positions = np.arange(0.0, 401.0)
    truth = step_ground_truth(positions)
    data = generate_noisy(positions, truth, model, sigma, args.seed)
    write_dataset(out / "data.csv", data)
    _write_manifest(out, "generate", argv, args.seed)
    print(f"wrote {data.size} samples (model={model}, sigma={sigma})")
    return 0


def _truth_signs(positions):
    return np.where(step_ground_truth(positions) > 140.0, 1, -1)


def cmd_denoise(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = read_dataset(args.input)
    converged = None
    iterations = None
    vote_rounds = None
    constraint_residual = None
    if args.mode == "ls" or args.mode == "ls+vote":
        fit = fit_manifold_ls(data)
        rep = fit.as_rep(data.domain)
        signs = nearest_root_signs(rep, data.positions, data.observed)
        if args.mode == "ls+vote":
            index, vote_rounds, _ = knn_vote_index(signs, data.positions, k=args.k)
        else:
            from .representation import IndexFunction

            index = IndexFunction.from_dense(data.positions, signs)
        values, _ = clamped_reconstruct(rep, data.positions, index)
    elif args.mode == "debias+vote":
        if args.sigma2 is None:
            print("--mode debias+vote requires --sigma2", file=sys.stderr)
            return 2
        res = denoise_case3(data, args.sigma2, k=args.k)
        fit, index, values = res.fit, res.index, res.reconstructed
        vote_rounds = res.vote_rounds
    elif args.mode == "iterative":
        names = ALL_CONSTRAINTS if args.constraints == "all8" else tuple(
            c.strip() for c in args.constraints.split(","))
        res = denoise_iterative(data, constraint_names=names, init=args.init,
                                sigma2_0=args.sigma2, k=args.k,
                                max_iter=args.max_iter, tol=args.tol)
        fit, index, values = res.fit, res.index, res.reconstructed
        converged, iterations = res.converged, res.iterations
        constraint_residual = res.max_constraint_residual
    else:
        print(f"unknown mode {args.mode!r}", file=sys.stderr)
        return 2

    eps_hat = data.observed - values
    with open(out / "reconstruction.csv", "w", newline="") as fh:
        writer = _csv_writer(fh)
        writer.writerow(["x", "f_obs", "f_hat", "eps_hat"])
        for x, fo, fh_, eh in zip(data.positions, data.observed, values, eps_hat):
            writer.writerow([repr(float(x)), repr(float(fo)), repr(float(fh_)), repr(float(eh))])
    doc = {
        "b0": fit.b0, "b1": fit.b1, "c0": fit.c0, "c1": fit.c1,
        "method": fit.method, "residual": fit.residual, "condition": fit.condition,
        "rep": rep_to_dict(fit.as_rep(data.domain)),
    }
    with open(out / "fit.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    x = data.positions
    xc = x - x.mean()
    denom = float(np.linalg.norm(xc) * np.linalg.norm(eps_hat - eps_hat.mean()))
    report = {
        "noise_mean": float(eps_hat.mean()),
        "noise_x_correlation": float((xc @ (eps_hat - eps_hat.mean())) / denom) if denom > 0 else 0.0,
        "converged": converged,
        "iterations": iterations,
        "vote_rounds": vote_rounds,
        "max_constraint_residual": constraint_residual,
    }
    if args.truth is not None:
        if args.truth == "step":
            tsigns = _truth_signs(data.positions)
        else:
            tdata = read_dataset(args.truth)
            tsigns = np.where(tdata.observed > 140.0, 1, -1)
        report["mislabel_count"] = int(np.sum(index.dense(data.positions) != tsigns))
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    _write_manifest(out, "denoise", argv, None)
    print(f"mode={args.mode} b0={fit.b0:.4f} c0={fit.c0:.4f}")
    return 0


def cmd_replay(args, argv) -> int:
    with open(args.manifest) as fh:
        doc = json.load(fh)
    stored = list(doc["argv"])
    if "--out" in stored:
        i = stored.index("--out")
        stored[i + 1] = args.out
    else:
        stored += ["--out", args.out]
    return main(stored)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadrep",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a representation to a builtin function or CSV data")
    src = p_fit.add_mutually_exclusive_group(required=True)
    src.add_argument("--fn", choices=sorted(BUILTINS))
    src.add_argument("--input", help="CSV with x,f columns (tabulated grid)")
    p_fit.add_argument("--method", choices=METHODS, required=True)
    p_fit.add_argument("--n", type=int, default=None, help="degree for deg0")
    p_fit.add_argument("--n0", type=int, default=0)
    p_fit.add_argument("--n1", type=int, default=0)
    p_fit.add_argument("--n2", type=int, default=0)
    p_fit.add_argument("--max-terms", type=int, default=None)
    p_fit.add_argument("--target-residual", type=float, default=None)
    p_fit.add_argument("--batch", type=int, choices=(1, 3, 5), default=1)
    p_fit.add_argument("--cap", type=int, default=60)
    p_fit.add_argument("--tol", type=float, default=1e-12)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--order", type=int, default=1000)
    p_fit.add_argument("--trace", action="store_true")
    p_fit.add_argument("--out", default=".")

    p_eval = sub.add_parser("eval", help="evaluate a stored representation")
    p_eval.add_argument("--rep", required=True)
    p_eval.add_argument("--grid", type=int, default=101)
    p_eval.add_argument("--points", default=None)
    p_eval.add_argument("--branches", action="store_true",
                        help="also write both quadratic roots per point")
    p_eval.add_argument("--out", default=".")

    p_conv = sub.add_parser("convergence", help="error-vs-K table per method")
    p_conv.add_argument("--fn", choices=sorted(BUILTINS), required=True)
    p_conv.add_argument("--methods", default=",".join(METHODS))
    p_conv.add_argument("--kmin", type=int, default=2)
    p_conv.add_argument("--kmax", type=int, default=30)
    p_conv.add_argument("--order", type=int, default=1000)
    p_conv.add_argument("--cap", type=int, default=60)
    p_conv.add_argument("--seed", type=int, default=0)
    p_conv.add_argument("--out", default=".")

    p_gen = sub.add_parser("generate", help="synthesize noisy step data")
    p_gen.add_argument("--preset", choices=sorted(NOISE_PRESETS), default=None)
    p_gen.add_argument("--target", choices=("function", "manifold"), default=None)
    p_gen.add_argument("--sigma", type=float, default=None)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", default=".")

    p_den = sub.add_parser("denoise", help="reconstruct step data from noisy samples")
    p_den.add_argument("--input", required=True)
    p_den.add_argument("--mode", choices=("ls", "ls+vote", "debias+vote", "iterative"),
                       required=True)
    p_den.add_argument("--sigma2", type=float, default=None)
    p_den.add_argument("--k", type=int, default=10)
    p_den.add_argument("--constraints", default="all8")
    p_den.add_argument("--init", choices=("case1", "case2", "case3"), default="case1")
    p_den.add_argument("--max-iter", type=int, default=50)
    p_den.add_argument("--tol", type=float, default=1e-6)
    p_den.add_argument("--truth", default=None,
                       help="'step' or a CSV of ground-truth values, for mislabel counts")
    p_den.add_argument("--out", default=".")

    p_rep = sub.add_parser("replay", help="re-run a recorded manifest")
    p_rep.add_argument("--manifest", required=True)
    p_rep.add_argument("--out", required=True)
    return parser


_HANDLERS = {
    "fit": cmd_fit,
    "eval": cmd_eval,
    "convergence": cmd_convergence,
    "generate": cmd_generate,
    "denoise": cmd_denoise,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = _HANDLERS[args.command]
    try:
        return handler(args, argv)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure in {args.command}: {exc}", file=sys.stderr)
        return 3
    except (DataError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
