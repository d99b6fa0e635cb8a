"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 unreachable target or forbidden
exclusion, 4 disagreement between methods (or simulation outside the
z-score limit).
"""

from __future__ import annotations

import csv
import functools
import io
import json
import sys
from dataclasses import dataclass
from importlib import resources

import click
import numpy as np

from . import scalar
from .direct import green_matrix, solve_moments
from .errors import ReachabilityError, SmpError, TruncationExceeded, ValidationError
from .extensions import (
    indicator_moments,
    load_bivariate,
    load_time_dependent,
    merge_targets,
    mixed_moments,
    place_dependent_moments,
    time_dependent_moments,
)
from .mc import DistributionSpec, simulate_hitting, verify_consistency, z_score
from .model import load_model, read_document, require_reachable
from .reduction import hitting_moments, reduce_sequence

EXIT_VALIDATION = 2
EXIT_REACHABILITY = 3
EXIT_DISAGREEMENT = 4


class Disagreement(Exception):
    pass


class _Inconsistent(ValidationError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mode: str
    tolerance: float
    output: str
    seed: int


_DEFAULTS = {"mode": scalar.RATIONAL, "tolerance": scalar.DEFAULT_TOLERANCE, "output": "table", "seed": 0}


def _global_options(func):
    func = click.option("--seed", type=int, default=None, help="Random seed for simulation.")(func)
    func = click.option("--output", type=click.Choice(["table", "json", "csv"]), default=None, help="Output format.")(func)
    func = click.option("--tolerance", type=float, default=None, help="Relative tolerance in float mode.")(func)
    func = click.option("--scalar", "mode", type=click.Choice(scalar.MODES), default=None, help="Arithmetic mode.")(func)
    return func


def _config(ctx, mode, tolerance, output, seed) -> RunConfig:
    parent = (ctx.obj or {}) if ctx is not None else {}
    given = {"mode": mode, "tolerance": tolerance, "output": output, "seed": seed}
    merged = {k: given[k] if given[k] is not None else parent.get(k, _DEFAULTS[k]) for k in _DEFAULTS}
    if merged["tolerance"] is None or merged["tolerance"] <= 0:
        raise click.BadParameter("tolerance must be positive", param_hint="--tolerance")
    return RunConfig(**merged)


def command(name=None):
    """Subcommand with the global options and the exit-code contract."""

    def wrap(func):
        @functools.wraps(func)
        def run(mode, tolerance, output, seed, **kwargs):
            ctx = click.get_current_context()
            cfg = _config(ctx.parent, mode, tolerance, output, seed)
            try:
                func(cfg, **kwargs)
            except ValidationError as exc:
                _fail(exc, EXIT_VALIDATION)
            except (ReachabilityError, TruncationExceeded) as exc:
                _fail(exc, EXIT_REACHABILITY)
            except Disagreement as exc:
                _fail(exc, EXIT_DISAGREEMENT)
            except SmpError as exc:
                _fail(exc, EXIT_VALIDATION)

        return main.command(name)(_global_options(run))

    return wrap


def _fail(exc, code):
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    sys.exit(code)


@click.group()
@_global_options
@click.pass_context
def main(ctx, mode, tolerance, output, seed):
    """Moments of hitting times and accumulated rewards of semi-Markov processes."""
    ctx.obj = {k: v for k, v in {"mode": mode, "tolerance": tolerance, "output": output, "seed": seed}.items() if v is not None}


# ---------------------------------------------------------------- rendering


def _fmt(value) -> str:
    if isinstance(value, (str, int)) and not isinstance(value, bool):
        return str(value)
    return scalar.format_scalar(value)


def _json_value(value):
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, str):
        return value
    return scalar.jsonable(value)


def emit(cfg: RunConfig, sections, payload) -> None:
    """Render ``sections`` (title, headers, rows) as table or csv, or ``payload`` as json."""
    if cfg.output == "json":
        click.echo(json.dumps(payload, indent=2))
        return
    out = []
    for k, (title, headers, rows) in enumerate(sections):
        cells = [[_fmt(v) for v in row] for row in rows]
        if cfg.output == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["section"] + list(headers))
            for row in cells:
                writer.writerow([title] + row)
            out.append(buf.getvalue().rstrip("\n"))
            continue
        widths = [len(h) for h in headers]
        for row in cells:
            widths = [max(w, len(c)) for w, c in zip(widths, row)]
        lines = [title, "  ".join(h.rjust(w) for h, w in zip(headers, widths))]
        lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
        out.append("\n".join(lines))
    click.echo(("\n" if cfg.output == "csv" else "\n\n").join(out))


def _states(text, name):
    if text is None:
        return None
    text = text.strip()
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated state numbers, got {text!r}", param_hint=name)


def _model(path, cfg):
    return load_model(path, cfg.mode, cfg.tolerance)


def _starts(starts, model):
    return list(model.states) if not starts else list(starts)


def _target(text, name="--target"):
    states = _states(text, name)
    if not states:
        raise click.BadParameter("target must name at least one state", param_hint=name)
    return states


# ---------------------------------------------------------------- commands


@command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
def validate(cfg, model_path):
    """Check a model document and its sojourn laws."""
    model = _model(model_path, cfg)
    dist = "absent"
    if model.distributions is not None:
        report = verify_consistency(DistributionSpec.from_model(model), model)
        if not report.ok:
            bad = "; ".join(
                f"e^({x.r})[{x.i},{x.j}] = {_fmt(x.model_value)} but the law gives {_fmt(x.law_value)}" for x in report.mismatches
            )
            raise _Inconsistent(f"distributions disagree with the moments: {bad}")
        dist = "consistent"
    rows = [["m", model.m], ["d", model.d], ["reward_kind", model.reward_kind], ["scalar", model.mode], ["distributions", dist]]
    payload = {"valid": True, "m": model.m, "d": model.d, "reward_kind": model.reward_kind, "scalar": model.mode, "distributions": dist}
    emit(cfg, [("model is valid", ["field", "value"], rows)], payload)


def _moment_rows(starts, values, d):
    return [[i] + [values[r, s] for r in range(1, d + 1)] for s, i in enumerate(starts)]


@command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--target", default="0", show_default=True, help="Target state.")
@click.option("--d", "order_d", type=int, default=None, help="Highest moment order (default: all).")
@click.option("--start", "starts", type=int, multiple=True, help="Start state (repeatable; default: all).")
@click.option("--method", type=click.Choice(["reduce", "direct", "both"]), default="reduce", show_default=True)
@click.option("--order", default=None, help="Exclusion order, e.g. 3,2,1 (default: start state last).")
def moments(cfg, model_path, target, order_d, starts, method, order):
    """Hitting-time moments E_i[W^r] of a single target state."""
    model = _model(model_path, cfg)
    t = _target(target)
    if len(t) != 1:
        raise click.BadParameter("use the indicator command for target sets", param_hint="--target")
    t = t[0]
    d = model.d if order_d is None else order_d
    starts = _starts(starts, model)
    results = {}
    if method in ("reduce", "both"):
        results["reduce"] = hitting_moments(model, t, starts, d, order=_states(order, "--order")).values
    if method in ("direct", "both"):
        full = solve_moments(model, t, d)
        results["direct"] = np.stack([full.column(i) for i in starts], axis=1)
    sections = [
        (f"{name}: E_i[W^r] to target {t}", ["start"] + [f"r={r}" for r in range(1, d + 1)], _moment_rows(starts, vals, d))
        for name, vals in results.items()
    ]
    payload = {
        "target": t,
        "d": d,
        "scalar": model.mode,
        "starts": starts,
        "moments": {name: {str(r): [_json_value(v) for v in vals[r]] for r in range(d + 1)} for name, vals in results.items()},
    }
    disagree = False
    if method == "both":
        gap = scalar.rel_discrepancy(results["reduce"], results["direct"])
        limit = 0.0 if model.mode == scalar.RATIONAL else cfg.tolerance
        disagree = gap > limit
        payload["discrepancy"] = gap
        sections.append(("max relative discrepancy", ["value"], [[gap]]))
    emit(cfg, sections, payload)
    if disagree:
        raise Disagreement(f"methods differ by {gap:.3e} (limit {limit:g})")


@command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--order", default="", help="States to exclude, in order, e.g. 3,2.")
@click.option("--target", default="0", show_default=True, help="Protected target state(s).")
def trace(cfg, model_path, order, target):
    """Matrices after each state exclusion."""
    model = _model(model_path, cfg)
    tr = reduce_sequence(model, _states(order, "--order"), _target(target))
    doc = tr.to_json()
    stages = [("initial", doc["initial"])] + [(f"after excluding {s['excluded']}", s) for s in doc["steps"]]
    sections = []
    for label, snap in stages:
        mats = [("p", snap["p"])] + [(f"e^({r})", m) for r, m in enumerate(snap["e"], start=1)]
        for name, mat in mats:
            rows = [[i] + list(vals) for i, vals in zip(snap["rows"], mat)]
            sections.append((f"{label}: {name}", ["i\\j"] + [str(j) for j in snap["active"]], rows))
    emit(cfg, sections, doc)


@command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--targets", required=True, help="Target set, e.g. 0,2.")
@click.option("--d", "order_d", type=int, default=None)
@click.option("--start", "starts", type=int, multiple=True)
def indicator(cfg, model_path, targets, order_d, starts):
    """Moments of the hitting time of a set, split by the state entered."""
    model = _model(model_path, cfg)
    table = indicator_moments(model, _target(targets, "--targets"), order_d, _starts(starts, model))
    d = table.d
    rows = [
        [i, j] + [table.values[r, s, c] for r in range(d + 1)]
        for s, i in enumerate(table.starts)
        for c, j in enumerate(table.targets)
    ]
    marg = table.marginal()
    sections = [
        ("E_i[W^r; entered j] (r=0 is the hitting probability)", ["start", "entered"] + [f"r={r}" for r in range(d + 1)], rows),
        ("E_i[W^r] over the whole set", ["start"] + [f"r={r}" for r in range(1, d + 1)], _moment_rows(table.starts, marg, d)),
    ]
    payload = {
        "targets": list(table.targets),
        "starts": list(table.starts),
        "d": d,
        "indicator": {
            str(j): {str(r): [_json_value(table.values[r, s, c]) for s in range(len(table.starts))] for r in range(d + 1)}
            for c, j in enumerate(table.targets)
        },
        "marginal": {str(r): [_json_value(v) for v in marg[r]] for r in range(d + 1)},
    }
    emit(cfg, sections, payload)


@command()
@click.argument("doc_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--target", type=int, default=0, show_default=True)
@click.option("--d", "order_d", type=int, default=None)
def mixed(cfg, doc_path, target, order_d):
    """Mixed moments E_i[W1^q W2^s] of a bivariate reward."""
    bi = load_bivariate(doc_path, cfg.mode, cfg.tolerance)
    res = mixed_moments(bi, target, order_d)
    keys = sorted(k for k in res if k[1] > 0)
    labels = [f"q={q},s={r - q}" for q, r in keys]
    rows = [[i] + [res[k][i] for k in keys] for i in range(bi.n)]
    payload = {
        "target": target,
        "mixed": {f"{q},{r - q}": [_json_value(v) for v in res[(q, r)]] for q, r in keys},
    }
    emit(cfg, [(f"E_i[W1^q W2^s] to target {target}", ["start"] + labels, rows)], payload)


@command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--pairs", default=None, help='Transition set as JSON, e.g. "[[1,0]]".')
@click.option("--into", default=None, help="Shorthand: every transition into these states.")
@click.option("--initial-prev", type=int, default=None, help="Fictitious previous state (default: the start).")
@click.option("--d", "order_d", type=int, default=None)
def place(cfg, model_path, pairs, into, initial_prev, order_d):
    """Moments of the reward accumulated until a transition from a given set."""
    model = _model(model_path, cfg)
    if (pairs is None) == (into is None):
        raise click.UsageError("give exactly one of --pairs and --into")
    if pairs is not None:
        try:
            domain = [tuple(int(x) for x in pr) for pr in json.loads(pairs)]
        except (ValueError, TypeError) as exc:
            raise click.BadParameter(f"not a JSON array of [i, j] pairs: {exc}", param_hint="--pairs")
    else:
        domain = [(i, j) for i in model.states for j in _target(into, "--into")]
    vals = place_dependent_moments(model, domain, order_d, initial_prev)
    d = vals.shape[0] - 1
    payload = {"pairs": [list(pr) for pr in domain], "moments": {str(r): [_json_value(v) for v in vals[r]] for r in range(d + 1)}}
    emit(cfg, [("E_i[Y^r]", ["start"] + [f"r={r}" for r in range(1, d + 1)], _moment_rows(list(model.states), vals, d))], payload)


@command()
@click.argument("doc_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--horizon", type=int, default=None, help="With a plain model: number of stationary steps.")
@click.option("--target", default=None, help="With a plain model: target set before the horizon.")
@click.option("--d", "order_d", type=int, default=None)
def timedep(cfg, doc_path, horizon, target, order_d):
    """Moments of a hitting reward over a finite horizon of steps."""
    raw = read_document(doc_path)
    if "steps" in raw:
        if horizon is not None or target is not None:
            raise click.UsageError("--horizon and --target apply only to a plain model document")
        steps, sets = load_time_dependent(raw, cfg.mode, cfg.tolerance)
    else:
        if horizon is None or target is None or horizon < 1:
            raise click.UsageError("a plain model needs --horizon >= 1 and --target")
        model = _model(raw, cfg)
        steps = [model] * horizon
        sets = [_target(target)] * (horizon - 1) + [list(model.states)]
    vals = time_dependent_moments(steps, sets, order_d)
    d = vals.shape[0] - 1
    payload = {"horizon": len(steps), "moments": {str(r): [_json_value(v) for v in vals[r]] for r in range(d + 1)}}
    title = f"E_i[Z^r] over horizon {len(steps)}"
    emit(cfg, [(title, ["start"] + [f"r={r}" for r in range(1, d + 1)], _moment_rows(list(range(steps[0].n)), vals, d))], payload)


def _spec(model):
    spec = DistributionSpec.from_model(model)
    report = verify_consistency(spec, model)
    if not report.ok:
        x = report.mismatches[0]
        raise _Inconsistent(
            f"{len(report.mismatches)} moment(s) disagree with the laws, "
            f"first e^({x.r})[{x.i},{x.j}] = {_fmt(x.model_value)} vs {_fmt(x.law_value)}"
        )
    return spec


@command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--start", type=int, required=True)
@click.option("--target", default="0", show_default=True, help="Target state(s).")
@click.option("--paths", "n_paths", type=int, default=100000, show_default=True)
@click.option("--max-steps", type=int, default=10**6, show_default=True)
@click.option("--d", "order_d", type=int, default=None)
def simulate(cfg, model_path, start, target, n_paths, max_steps, order_d):
    """Monte Carlo estimate of hitting moments."""
    model = _model(model_path, cfg)
    spec = _spec(model)
    tset = sorted(require_reachable(model, _target(target)))
    d = model.d if order_d is None else order_d
    if n_paths < 2:
        raise click.BadParameter("at least two paths are needed", param_hint="--paths")
    res = simulate_hitting(spec, start, tset, n_paths, cfg.seed, d, max_steps)
    sections = [
        ("E[W^r]", ["r", "estimate", "se"], [[r, res.moments[r], res.moments_se[r]] for r in range(1, d + 1)]),
        (
            "E[W^r; entered j]",
            ["entered", "r", "estimate", "se"],
            [[j, r, res.indicator[r, c], res.indicator_se[r, c]] for c, j in enumerate(res.targets) for r in range(d + 1)],
        ),
        (
            "paths",
            ["paths", "truncated", "mean steps", "se"],
            [[res.n_paths, res.n_truncated, res.mean_steps, res.steps_se]],
        ),
    ]
    emit(cfg, sections, {"seed": cfg.seed, **res.to_json()})


@command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--target", default="0", show_default=True, help="Target state(s).")
@click.option("--start", "starts", type=int, multiple=True, help="Start state (repeatable; default: all).")
@click.option("--paths", "n_paths", type=int, default=100000, show_default=True)
@click.option("--max-steps", type=int, default=10**6, show_default=True)
@click.option("--z-limit", type=float, default=3.0, show_default=True)
def compare(cfg, model_path, target, starts, n_paths, max_steps, z_limit):
    """Analytic moments against simulation, as z-scores."""
    model = _model(model_path, cfg)
    spec = _spec(model)
    tset = sorted(require_reachable(model, _target(target)))
    starts = _starts(starts, model)
    table = indicator_moments(model, tset, start_states=starts)
    merged, _ = merge_targets(model, tset)
    steps = green_matrix(merged, merged.m).expected_steps(merged)
    d = model.d
    rows = []
    for s, i in enumerate(starts):
        res = simulate_hitting(spec, i, tset, n_paths, cfg.seed, d, max_steps)
        checks = [(f"E[W^{r}]", table.marginal()[r, s], res.moments[r], res.moments_se[r]) for r in range(1, d + 1)]
        checks.append(("steps", steps[i], res.mean_steps, res.steps_se))
        for c, j in enumerate(tset):
            for r in range(d + 1):
                label = f"P(enter {j})" if r == 0 else f"E[W^{r}; enter {j}]"
                checks.append((label, table.values[r, s, c], res.indicator[r, c], res.indicator_se[r, c]))
        for label, exact, est, se in checks:
            rows.append([i, label, float(exact), est, se, z_score(est, se, exact)])
    worst = max(abs(row[-1]) for row in rows)
    payload = {
        "target": tset,
        "paths": n_paths,
        "seed": cfg.seed,
        "z_limit": z_limit,
        "max_abs_z": worst,
        "checks": [dict(zip(["start", "quantity", "analytic", "estimate", "se", "z"], row)) for row in rows],
    }
    emit(cfg, [(f"analytic vs simulation ({n_paths} paths)", ["start", "quantity", "analytic", "estimate", "se", "z"], rows)], payload)
    if worst > z_limit:
        raise Disagreement(f"largest |z| = {worst:.2f} exceeds {z_limit:g}")


@main.command()
def example():
    """Print the bundled example model."""
    click.echo(resources.files("smpmoments").joinpath("data/four_state.json").read_text(encoding="utf-8"), nl=False)


if __name__ == "__main__":
    main()
