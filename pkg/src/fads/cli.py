"""Command-line front end.

Subcommands: fit, select, simulate, benchmark, gof, preprocess.  Every
run writes numeric outputs as CSV, a one-line JSON summary, and a
manifest (command, configuration echo, seed, versions, wall time,
output paths) sufficient to reproduce the run.  Exit codes: 0 success,
2 parse/usage error, 3 non-convergence.
"""

import json
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .backend import BACKEND
from .data import (
    l2_normalize,
    read_dense_csv,
    read_sparse_triplets,
    sqrt_composition,
    tfidf_weight,
    write_dense_csv,
)
from .estep import estep_r
from .exceptions import ConvergenceError, DomainError, NumericError
from .fitters import DESK_STARTS, FitConfig, multistart
from .gof import mc_gof_test
from .inference import factor_scores, relative_frobenius_metrics
from .rotation import rotate
from .selection import fit_path
from .simulate import simulate_dataset

EXIT_PARSE = 2
EXIT_NOCONV = 3


def _threads_default():
    env = os.environ.get("FADS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise click.UsageError(f"FADS_THREADS={env!r} is not an integer")
    return os.cpu_count() or 1


def _parse_starts(text):
    try:
        m, j, l = (int(t) for t in text.split(","))
        return (m, j, l)
    except ValueError:
        raise click.UsageError(f"--starts must be M,J,L integers, got {text!r}")


def _load_dataset(path, sparse=False):
    try:
        if sparse:
            matrix = read_sparse_triplets(path)
            names = None
        else:
            matrix, names = read_dense_csv(path)
        ds = l2_normalize(matrix)
        ds.column_names = names
        return ds
    except DomainError as exc:
        raise click.UsageError(str(exc))


def _manifest(out_dir, command, config, seed, t0, outputs):
    man = {
        "command": command,
        "argv": sys.argv[1:],
        "config": config,
        "seed": seed,
        "versions": {
            "fads": __version__,
            "numpy": np.__version__,
            "kernel_backend": BACKEND,
            "python": sys.version.split()[0],
        },
        "wallclock_s": round(time.perf_counter() - t0, 4),
        "outputs": sorted(str(p) for p in outputs),
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return path


def _common(f):
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--threads", type=int, default=None,
                     help="worker processes; FADS_THREADS mirrors this")(f)
    f = click.option("--out-dir", type=click.Path(), default=".", show_default=True)(f)
    return f


def _fit_options(f):
    f = click.option("--algorithm", type=click.Choice(["fads-p", "fads-d"]),
                     default="fads-p", show_default=True)(f)
    f = click.option("--starts", default=",".join(map(str, DESK_STARTS)),
                     show_default=True, help="multistart M,J,L")(f)
    f = click.option("--tol-loglik", type=float, default=1e-4, show_default=True)(f)
    f = click.option("--tol-grad", type=float,
                     default=float(np.sqrt(np.finfo(float).eps)), show_default=True)(f)
    f = click.option("--max-iter", type=int, default=10_000, show_default=True)(f)
    f = click.option("--squarem/--no-squarem", default=True, show_default=True)(f)
    return f


def _make_cfg(q, starts, tol_loglik, tol_grad, max_iter, squarem, seed):
    try:
        return FitConfig(q=q, tol_loglik=tol_loglik, tol_grad=tol_grad,
                         max_iter=max_iter, starts=_parse_starts(starts),
                         squarem=squarem, seed=seed)
    except DomainError as exc:
        raise click.UsageError(str(exc))


@click.group()
@click.version_option(__version__)
def main():
    """Factor analysis for data on the unit sphere."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--q", type=int, required=True)
@click.option("--rotation", type=click.Choice(["none", "varimax", "quartimax", "oblimin"]),
              default="none", show_default=True)
@click.option("--sparse", is_flag=True, help="input is (row,col,value) triplets")
@_fit_options
@_common
def fit(input_path, q, rotation, sparse, algorithm, starts, tol_loglik, tol_grad,
        max_iter, squarem, seed, threads, out_dir):
    """Fit the PN factor model at a fixed number of factors."""
    t0 = time.perf_counter()
    threads = threads or _threads_default()
    data = _load_dataset(input_path, sparse)
    if q >= min(data.n, data.p):
        raise click.UsageError(f"--q must be below min(n, p) = {min(data.n, data.p)}")
    cfg = _make_cfg(q, starts, tol_loglik, tol_grad, max_iter, squarem, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rep = multistart(data, cfg, algorithm, threads=threads)
    except (NumericError, ConvergenceError) as exc:
        click.echo(f"fit failed: {exc}", err=True)
        sys.exit(EXIT_NOCONV)
    outputs = _write_fit_outputs(out, data, rep, rotation)
    _manifest(out, "fit", {
        "q": q, "algorithm": algorithm, "starts": cfg.starts, "rotation": rotation,
        "tol_loglik": tol_loglik, "tol_grad": tol_grad, "max_iter": max_iter,
        "squarem": squarem, "input": str(input_path), "threads": threads,
    }, seed, t0, outputs)
    click.echo(json.dumps({
        "loglik": rep.loglik, "ebic": rep.ebic, "converged": rep.converged,
        "iterations": rep.iterations, "q": q, "algorithm": algorithm,
    }, sort_keys=True))
    if not rep.converged:
        sys.exit(EXIT_NOCONV)


def _write_fit_outputs(out, data, rep, rotation):
    params = rep.params
    outputs = []

    def save(name, arr, names=None):
        path = out / name
        write_dense_csv(path, np.atleast_2d(arr), names)
        outputs.append(path)

    save("mu.csv", params.mu)
    save("psi.csv", params.psi)
    if params.q:
        save("lambda.csv", params.lam)
        if rotation != "none":
            save("lambda_rotated.csv", rotate(params.lam, rotation).lambda_rot)
        cache = estep_r(data, params)
        save("scores.csv", factor_scores(data, params, cache).scores)
    save("loglik_trace.csv", rep.loglik_trace[:, None])
    summary = {
        "loglik": rep.loglik, "ebic": rep.ebic, "converged": rep.converged,
        "iterations": rep.iterations, "algorithm": rep.algorithm,
        "grad_inf": rep.grad_inf,
        "gamma_diag": np.diag(rep.gamma_matrix).tolist(),
    }
    path = out / "summary.json"
    path.write_text(json.dumps(summary, sort_keys=True) + "\n")
    outputs.append(path)
    return outputs


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--q-max", type=int, required=True)
@click.option("--sparse", is_flag=True)
@_fit_options
@_common
def select(input_path, q_max, sparse, algorithm, starts, tol_loglik, tol_grad,
           max_iter, squarem, seed, threads, out_dir):
    """Fit q = 0..q_max and choose the factor count by eBIC."""
    t0 = time.perf_counter()
    threads = threads or _threads_default()
    data = _load_dataset(input_path, sparse)
    if q_max >= min(data.n, data.p):
        raise click.UsageError(f"--q-max must be below min(n, p) = {min(data.n, data.p)}")
    cfg = _make_cfg(0, starts, tol_loglik, tol_grad, max_iter, squarem, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path_obj = fit_path(data, cfg, q_max, algorithm, threads=threads)
    table_path = out / "selection.csv"
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write("q,loglik,ebic,converged,iterations\n")
        for qq, rep in enumerate(path_obj.reports):
            fh.write(f"{qq},{rep.loglik!r},{rep.ebic!r},{int(rep.converged)},"
                     f"{rep.iterations}\n")
    _manifest(out, "select", {
        "q_max": q_max, "algorithm": algorithm, "starts": cfg.starts,
        "input": str(input_path), "threads": threads,
    }, seed, t0, [table_path])
    click.echo(json.dumps({
        "chosen_q": path_obj.chosen_q, "gamma_ebic": path_obj.gamma_ebic,
        "ebic": [r.ebic for r in path_obj.reports],
    }, sort_keys=True))
    if not all(r.converged for r in path_obj.reports):
        sys.exit(EXIT_NOCONV)


@main.command()
@click.option("--n", type=int, required=True)
@click.option("--p", type=int, required=True)
@click.option("--q", type=int, required=True)
@click.option("--mode", type=click.Choice(["random"]), default="random",
              show_default=True, help="truth recipe")
@_common
def simulate(n, p, q, mode, seed, threads, out_dir):
    """Draw a random truth and a PN sample from it."""
    t0 = time.perf_counter()
    if min(n, p) < 1 or q < 0 or q >= p:
        raise click.UsageError("need n, p >= 1 and 0 <= q < p")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data, truth = simulate_dataset(n, p, q, seed)
    outputs = []
    for name, arr in [("data.csv", data.rows), ("true_mu.csv", truth.mu),
                      ("true_lambda.csv", truth.lam), ("true_psi.csv", truth.psi)]:
        write_dense_csv(out / name, np.atleast_2d(arr))
        outputs.append(out / name)
    outputs.append(_manifest(out, "simulate", {"n": n, "p": p, "q": q, "mode": mode},
                             seed, t0, outputs))
    click.echo(json.dumps({"n": n, "p": p, "q": q, "out": str(out)}, sort_keys=True))


@main.command()
@click.option("--settings", required=True,
              help="semicolon-separated n,p,q triples, e.g. '300,30,3;300,30,5'")
@click.option("--replicates", type=int, default=10, show_default=True)
@click.option("--algorithms", default="fads-p,fads-d", show_default=True)
@_fit_options
@_common
def benchmark(settings, replicates, algorithms, algorithm, starts, tol_loglik,
              tol_grad, max_iter, squarem, seed, threads, out_dir):
    """Simulate, fit, select and score both algorithms against the truth."""
    t0 = time.perf_counter()
    threads = threads or _threads_default()
    algos = [a.strip() for a in algorithms.split(",") if a.strip()]
    for a in algos:
        if a not in ("fads-p", "fads-d"):
            raise click.UsageError(f"unknown algorithm {a!r}")
    try:
        triples = [tuple(int(x) for x in chunk.split(","))
                   for chunk in settings.split(";") if chunk]
        assert all(len(t) == 3 for t in triples)
    except (ValueError, AssertionError):
        raise click.UsageError(f"--settings must be 'n,p,q;n,p,q;...', got {settings!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    metric_names = ["d_r", "d_gamma", "d_upsilon", "d_psi", "d_mu", "d_sigma"]
    for n, p, q in triples:
        for rep_i in range(replicates):
            data, truth = simulate_dataset(n, p, q, seed=seed + 1000 * rep_i)
            for algo in algos:
                if q == 0 and algo == "fads-d":
                    continue
                cfg = _make_cfg(q, starts, tol_loglik, tol_grad, max_iter, squarem,
                                seed + rep_i)
                path_obj = fit_path(data, cfg, 2 * q, algo, threads=threads)
                best = path_obj.reports[path_obj.chosen_q]
                row = {
                    "n": n, "p": p, "q_true": q, "replicate": rep_i,
                    "algorithm": algo, "chosen_q": path_obj.chosen_q,
                    "loglik": best.loglik, "converged": bool(best.converged),
                    "iterations": best.iterations, "wallclock_s": best.wallclock,
                }
                if path_obj.chosen_q == q:
                    mets = relative_frobenius_metrics(best.params, truth)
                    for name in metric_names:
                        row[name] = getattr(mets, name)
                rows.append(row)
    table_path = out / "benchmark.csv"
    cols = ["n", "p", "q_true", "replicate", "algorithm", "chosen_q", "loglik",
            "converged", "iterations", "wallclock_s"] + metric_names
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(repr(row[c]) if c in row else "" for c in cols) + "\n")
    agg = {}
    for n, p, q in triples:
        for algo in algos:
            sel = [r for r in rows
                   if (r["n"], r["p"], r["q_true"], r["algorithm"]) == (n, p, q, algo)
                   and "d_r" in r]
            if sel:
                agg[f"{n},{p},{q},{algo}"] = {
                    m: float(np.mean([r[m] for r in sel])) for m in metric_names
                }
    agg_path = out / "benchmark_means.json"
    agg_path.write_text(json.dumps(agg, indent=2, sort_keys=True) + "\n")
    _manifest(out, "benchmark", {
        "settings": settings, "replicates": replicates, "algorithms": algos,
        "starts": _parse_starts(starts), "threads": threads,
    }, seed, t0, [table_path, agg_path])
    click.echo(json.dumps({"rows": len(rows), "means": agg}, sort_keys=True))


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--q-max", type=int, required=True)
@click.option("--mc-samples", type=int, default=99, show_default=True)
@click.option("--reuse-q", is_flag=True,
              help="refit replicates at the observed data's chosen q")
@click.option("--sparse", is_flag=True)
@_fit_options
@_common
def gof(input_path, q_max, mc_samples, reuse_q, sparse, algorithm, starts,
        tol_loglik, tol_grad, max_iter, squarem, seed, threads, out_dir):
    """Monte Carlo Langevin-vs-PN goodness-of-fit test."""
    t0 = time.perf_counter()
    threads = threads or _threads_default()
    data = _load_dataset(input_path, sparse)
    if mc_samples < 19:
        raise click.UsageError("--mc-samples must be at least 19")
    cfg = _make_cfg(0, starts, tol_loglik, tol_grad, max_iter, squarem, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = mc_gof_test(data, q_max, mc_samples, seed, cfg, algorithm=algorithm,
                      reuse_q=reuse_q, threads=threads)
    v_path = out / "gof_samples.csv"
    write_dense_csv(v_path, res.v_samples[:, None])
    record = {
        "v0": res.v0, "p_value": float(res.p_value),
        "p_value_rank": f"{res.p_value.numerator}/{res.p_value.denominator}",
        "m": res.m, "chosen_q": res.chosen_q,
        "kappa_null": res.null_params.kappa,
        "nonconverged": res.nonconverged,
    }
    rec_path = out / "gof_result.json"
    rec_path.write_text(json.dumps(record, sort_keys=True) + "\n")
    _manifest(out, "gof", {
        "q_max": q_max, "mc_samples": mc_samples, "reuse_q": reuse_q,
        "algorithm": algorithm, "input": str(input_path), "threads": threads,
    }, seed, t0, [v_path, rec_path])
    click.echo(json.dumps(record, sort_keys=True))


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--recipe", type=click.Choice(["l2", "tfidf-l2", "sqrt-composition"]),
              required=True)
@click.option("--sparse", is_flag=True, help="input is (row,col,value) triplets")
@_common
def preprocess(input_path, recipe, sparse, seed, threads, out_dir):
    """Apply a normalization recipe, writing unit-sphere data."""
    t0 = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if sparse:
            matrix, names = read_sparse_triplets(input_path), None
        else:
            matrix, names = read_dense_csv(input_path)
        if recipe == "l2":
            ds = l2_normalize(matrix)
        elif recipe == "tfidf-l2":
            ds = l2_normalize(tfidf_weight(matrix), provenance="tfidf-l2")
        else:
            ds = sqrt_composition(matrix)
    except DomainError as exc:
        raise click.UsageError(str(exc))
    out_path = out / "spherical.csv"
    write_dense_csv(out_path, ds.rows, names)
    _manifest(out, "preprocess", {"recipe": recipe, "input": str(input_path)},
              seed, t0, [out_path])
    click.echo(json.dumps({"n": ds.n, "p": ds.p, "provenance": ds.provenance},
                          sort_keys=True))


if __name__ == "__main__":
    main()
