"""Command-line front end: ``chaostail analyze | mc | compare | catalog``."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import click
import numpy as np

from . import __version__, catalog
from .asymptotics import (
    ChartError,
    DegenerateHessianError,
    QuadratureError,
    analyze,
    density_leading,
    load_charts,
    log_density_leading,
    log_tail_leading,
    tail_leading,
    whiten,
)
from .exprlang import DomainError, ExprError
from .function import HomogeneousFn, NotC2Error
from .maximize import NoPositiveMaximumError
from .montecarlo import conditional_density, conditional_tail, plain_tail

EXIT_DEGENERATE = 2
EXIT_NO_POSITIVE_MAX = 3
EXIT_INPUT = 4
LOG10E = math.log10(math.e)


class InputError(ValueError):
    """Malformed flags, covariance or chart files."""


@dataclass
class Problem:
    h: HomogeneousFn
    alpha: float
    d: int
    cov: np.ndarray | None
    charts: list
    catalog_name: str | None
    source: str
    chart_file: str | None


# -- helpers ------------------------------------------------------------------------------------
def _clean(obj):
    """Make ``obj`` strict-JSON serialisable (non-finite floats become null)."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _emit(payload, fmt: str, rows=None, columns=None):
    if fmt == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow(["" if r.get(c) is None else r.get(c) for c in columns])
        click.echo(buf.getvalue(), nl=False)
    else:
        click.echo(json.dumps(_clean(payload), indent=2))


def _parse_x(text: str) -> list[float]:
    try:
        xs = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"--x must be a comma-separated list of numbers: {exc}") from exc
    if not xs or any(not x > 0 for x in xs):
        raise InputError("--x needs positive values")
    return xs


def read_covariance(path: str, d: int | None = None) -> np.ndarray:
    """Plain ``d x d`` comma-separated matrix; symmetry enforced at 1e-10."""
    try:
        B = np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float, comments="#"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read covariance {path}: {exc}") from exc
    if B.shape[0] != B.shape[1]:
        raise InputError(f"covariance must be square, got {B.shape}")
    if d is not None and B.shape[0] != d:
        raise InputError(f"covariance is {B.shape[0]}x{B.shape[0]} but d = {d}")
    if np.max(np.abs(B - B.T)) > 1e-10:
        raise InputError("covariance is not symmetric (tolerance 1e-10)")
    if np.min(np.linalg.eigvalsh(0.5 * (B + B.T))) < -1e-10 * max(1.0, np.trace(B)):
        raise InputError("covariance is not positive semidefinite")
    return 0.5 * (B + B.T)


def digest(B) -> str | None:
    if B is None:
        return None
    return hashlib.sha256(np.ascontiguousarray(B, dtype=float).tobytes()).hexdigest()[:16]


def resolve(function: str, alpha: float | None, dim: int | None, cov: str | None,
            chart: str | None) -> Problem:
    """Build a :class:`Problem` from a catalog name or an expression."""
    if catalog.is_known(function):
        e = catalog.get(function)
        if alpha is not None and abs(alpha - e.alpha) > 1e-12:
            raise InputError(f"{function} has alpha = {e.alpha}, not {alpha}")
        if dim is not None and dim != e.d:
            raise InputError(f"{function} has d = {e.d}, not {dim}")
        B = read_covariance(cov, e.d) if cov else e.covariance
        charts = load_charts(chart) if chart else list(e.charts)
        if cov and not chart:
            charts = []  # built-in charts describe the unwhitened problem
        return Problem(e.g, e.alpha, e.d, B, charts, e.name, e.g.source or e.name, chart)
    if alpha is None or dim is None:
        raise InputError(f"{function!r} is not a catalog name; expressions need --alpha and --dim")
    h = HomogeneousFn.from_expr(function, alpha, dim)
    report = h.homogeneity()
    if not report.passed:
        raise InputError(f"expression is not homogeneous of order {alpha} "
                         f"(max relative violation {report.max_violation:.3g})")
    B = read_covariance(cov, dim) if cov else None
    charts = load_charts(chart) if chart else []
    return Problem(h, float(alpha), int(dim), B, charts, None, function, chart)


def _input_echo(p: Problem, xs, seed, starts) -> dict:
    return {
        "function": p.source,
        "catalog": p.catalog_name,
        "alpha": p.alpha,
        "d": p.d,
        "cov_digest": digest(p.cov),
        "chart": p.chart_file or ([c.name for c in p.charts] or None),
        "x": xs,
        "seed": seed,
        "starts": starts,
    }


def _error_block(exc: Exception, code: int) -> dict:
    kinds = {EXIT_DEGENERATE: "degenerate_hessian", EXIT_NO_POSITIVE_MAX: "no_positive_maximum", EXIT_INPUT: "input"}
    block = {"type": type(exc).__name__, "kind": kinds.get(code, "error"), "message": str(exc), "exit_code": code}
    for attr in ("point", "eigenvalues", "g_hat", "m", "g_max", "position"):
        if getattr(exc, attr, None) is not None:
            block[attr] = getattr(exc, attr)
    return block


def _fail(exc: Exception, code: int, echo: dict | None = None):
    payload = {"tool": "chaostail", "version": __version__, "input": echo, "error": _error_block(exc, code)}
    click.echo(json.dumps(_clean(payload), indent=2))
    sys.exit(code)


def _exit_code(exc: Exception) -> int | None:
    if isinstance(exc, (DegenerateHessianError, NotC2Error)):
        return EXIT_DEGENERATE
    if isinstance(exc, NoPositiveMaximumError):
        return EXIT_NO_POSITIVE_MAX
    if isinstance(exc, (ExprError, DomainError, InputError, ChartError, json.JSONDecodeError)):
        return EXIT_INPUT
    return None


def _seed(seed: int) -> int:
    env = os.environ.get("CHAOS_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise InputError(f"CHAOS_SEED must be an integer, got {env!r}") from None
    return seed


def _run(action, echo_fn):
    """Call ``action`` and translate known failures into structured exits."""
    try:
        return action()
    except Exception as exc:  # noqa: BLE001 - classified below
        code = _exit_code(exc)
        if code is None:
            raise
        _fail(exc, code, echo_fn())


# -- report building --------------------------------------------------------------------------
def _evaluations(res, xs):
    out = []
    for x in xs:
        tail, valid = tail_leading(res, x)
        dens, _ = density_leading(res, x)
        lt = log_tail_leading(res, x)
        ld = log_density_leading(res, x)
        out.append({"x": x, "tail": tail, "log10_tail": lt * LOG10E, "density": dens,
                    "log10_density": ld * LOG10E, "valid": bool(valid)})
    return out


def _mc_block(g, alpha, d, xs, n, seed, threads, evaluations):
    if n <= 0:
        return None
    ests = conditional_tail(g, alpha, d, xs, n, seed, threads)
    rows = []
    for est, ev in zip(ests, evaluations):
        ratio = math.exp(est.log_mean - ev["log10_tail"] / LOG10E) if est.log_mean > -math.inf else None
        rows.append({"x": est.x, "mean": est.mean, "log10_mean": est.log_mean * LOG10E,
                     "std_error": est.std_error, "log10_std_error": est.log_std_error * LOG10E,
                     "ratio_to_asymptotic": ratio})
    return {"estimator": "conditional_tail", "n": n, "seed": seed, "threads": threads, "results": rows}


def build_report(p: Problem, xs, seed, starts, threads=1, mc_n=0) -> dict:
    t0 = time.perf_counter()
    a = analyze(p.h, p.cov, p.charts or None, starts=starts, seed=seed)
    t1 = time.perf_counter()
    res = a.result
    ms = a.maxset
    evaluations = _evaluations(res, xs)
    mc = _mc_block(a.g, res.alpha, res.d, xs, mc_n, seed, threads, evaluations)
    t2 = time.perf_counter()
    report = {
        "tool": "chaostail",
        "version": __version__,
        "input": _input_echo(p, xs, seed, starts),
        "g_hat": res.g_hat,
        "log10_g_hat": math.log10(res.g_hat),
        "m": res.m,
        "kind": ms.kind,
        "h0": res.h0,
        "log10_h0": math.log10(res.h0),
        "maximizers": None if ms.kind == "manifold" else ms.points.tolist(),
        "chart_ids": [c.name for c in a.charts] or None,
        "hessians": [{"point": t.base.tolist(), "eigenvalues": t.eigenvalues.tolist()} for t in a.hessians],
        "evaluations": evaluations,
        "mc": mc,
        "notes": ms.multiplicity_notes,
        "seed": seed,
        "timing": {"analysis_s": t1 - t0, "mc_s": t2 - t1, "total_s": t2 - t0},
    }
    return report


# -- commands ---------------------------------------------------------------------------------
def problem_options(f):
    opts = [
        click.option("--function", "function", required=True, help="catalog name or expression in u1..ud"),
        click.option("--alpha", type=float, default=None, help="homogeneity order (expressions only)"),
        click.option("--dim", type=int, default=None, help="dimension d (expressions only)"),
        click.option("--cov", type=click.Path(dir_okay=False), default=None, help="CSV covariance matrix"),
        click.option("--chart", type=click.Path(dir_okay=False), default=None, help="JSON chart or atlas"),
        click.option("--x", "x", required=True, help="comma-separated thresholds"),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--starts", type=int, default=None, help="multi-start count (default max(200, 50d))"),
        click.option("--threads", type=int, default=1, show_default=True),
        click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


@click.group()
@click.version_option(__version__, prog_name="chaostail")
def main_group():
    """Tail asymptotics for Gaussian and polar chaos."""


@main_group.command("analyze")
@problem_options
@click.option("--mc-n", type=int, default=100_000, show_default=True,
              help="conditional MC samples for the cross-check block (0 disables)")
def cmd_analyze(function, alpha, dim, cov, chart, x, seed, starts, threads, fmt, mc_n):
    """Locate maximizers, compute h0 and evaluate the leading tail and density."""
    state = {}

    def echo():
        return state.get("echo") or {"function": function, "alpha": alpha, "d": dim, "x": x}

    def action():
        s = _seed(seed)
        xs = _parse_x(x)
        p = resolve(function, alpha, dim, cov, chart)
        state["echo"] = _input_echo(p, xs, s, starts)
        return build_report(p, xs, s, starts, threads, mc_n)

    report = _run(action, echo)
    cols = ["x", "tail", "log10_tail", "density", "log10_density", "valid"]
    _emit(report, fmt, report["evaluations"], cols)


@main_group.command("mc")
@problem_options
@click.option("--estimator", type=click.Choice(["conditional", "plain", "density"]), default="conditional",
              show_default=True)
@click.option("--n", "n", type=int, default=1_000_000, show_default=True)
def cmd_mc(function, alpha, dim, cov, chart, x, seed, starts, threads, fmt, estimator, n):
    """Monte Carlo estimates of the tail (or density) at each x."""
    def action():
        s = _seed(seed)
        xs = _parse_x(x)
        p = resolve(function, alpha, dim, cov, chart)
        if n < 1000:
            raise InputError("--n must be at least 1000")
        if estimator == "plain":
            return plain_tail(p.h, p.cov, xs, n, s, threads)
        g = whiten(p.h, p.cov) if p.cov is not None else p.h
        fn = conditional_tail if estimator == "conditional" else conditional_density
        return fn(g, p.alpha, g.dim, xs, n, s, threads)

    ests = _run(action, lambda: {"function": function, "x": x})
    records = [json.loads(e.to_json()) for e in ests]
    for r, e in zip(records, ests):
        r["log10_mean"] = e.log_mean * LOG10E
        r["log10_std_error"] = e.log_std_error * LOG10E
        r["threads"] = e.threads
    _emit(records, fmt, records, ["estimator", "x", "mean", "log_mean", "std_error", "n", "seed"])


def fit_remainder_slope(xs, ratios) -> float | None:
    """Least-squares slope of ``log|ratio - 1|`` against ``log x``."""
    pts = [(math.log(x), math.log(abs(r - 1))) for x, r in zip(xs, ratios)
           if r is not None and math.isfinite(r) and r != 1]
    if len(pts) < 2:
        return None
    lx, ly = np.array(pts).T
    return float(np.polyfit(lx, ly, 1)[0])


def build_comparison(p: Problem, xs, seed, starts, n, threads) -> dict:
    a = analyze(p.h, p.cov, p.charts or None, starts=starts, seed=seed)
    res = a.result
    ests = conditional_tail(a.g, res.alpha, res.d, xs, n, seed, threads)
    rows = []
    for x, est in zip(xs, ests):
        lt = log_tail_leading(res, x)
        ratio = math.exp(est.log_mean - lt)
        rows.append({"x": x, "asymptotic": math.exp(lt), "log10_asymptotic": lt * LOG10E,
                     "mc_mean": est.mean, "log10_mc_mean": est.log_mean * LOG10E, "ratio": ratio,
                     "std_error": est.std_error, "rel_std_error": est.rel_error})
    ratios = [r["ratio"] for r in rows]
    dist = [abs(r - 1) for r in ratios]
    return {
        "tool": "chaostail",
        "version": __version__,
        "input": _input_echo(p, xs, seed, starts),
        "g_hat": res.g_hat,
        "m": res.m,
        "h0": res.h0,
        "n": n,
        "rows": rows,
        "slope": fit_remainder_slope(xs, ratios),
        "expected_slope": -2.0 / res.alpha,
        "monotone": all(b < a_ for a_, b in zip(dist, dist[1:])),
    }


@main_group.command("compare")
@problem_options
@click.option("--n", "n", type=int, default=1_000_000, show_default=True)
def cmd_compare(function, alpha, dim, cov, chart, x, seed, starts, threads, fmt, n):
    """Asymptotic vs conditional MC over an x ladder, with the fitted remainder slope."""
    def action():
        s = _seed(seed)
        xs = _parse_x(x)
        p = resolve(function, alpha, dim, cov, chart)
        if n < 1000:
            raise InputError("--n must be at least 1000")
        return build_comparison(p, xs, s, starts, n, threads)

    table = _run(action, lambda: {"function": function, "x": x})
    if fmt == "csv":
        _emit(table, fmt, table["rows"], ["x", "asymptotic", "mc_mean", "ratio", "std_error"])
        click.echo(f"# slope,{table['slope']},expected,{table['expected_slope']}")
    else:
        _emit(table, fmt)


@main_group.group("catalog")
def cmd_catalog():
    """Built-in chaos instances."""


@cmd_catalog.command("list")
def catalog_list():
    out = []
    for name in catalog.names():
        e = catalog.get(name)
        out.append({"name": name, "alpha": e.alpha, "d": e.d, "description": e.reference.description})
    click.echo(json.dumps(_clean(out), indent=2))


@cmd_catalog.command("show")
@click.argument("name")
def catalog_show(name):
    try:
        e = catalog.get(name)
    except (KeyError, ValueError, TypeError) as exc:
        _fail(InputError(str(exc)), EXIT_INPUT)
    click.echo(json.dumps(_clean(e.summary()), indent=2))


def main(argv=None):
    """Entry point; usage errors exit with code 4 so that 2 stays reserved for degeneracy."""
    try:
        rv = main_group.main(args=argv, prog_name="chaostail", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.exceptions.ClickException as exc:
        exc.show()
        sys.exit(EXIT_INPUT)
    except QuadratureError as exc:
        click.echo(json.dumps({"error": {"type": "QuadratureError", "message": str(exc)}}))
        sys.exit(1)
    sys.exit(rv if isinstance(rv, int) else 0)


if __name__ == "__main__":
    main()
