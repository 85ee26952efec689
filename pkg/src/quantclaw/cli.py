"""Operator command line: serve, profile build, fit, simulate, detect, bench.

Exit codes: 0 success, 2 validation/config error, 3 insufficient data,
4 runtime failure.
"""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path

import click

from .config import load_config
from .detection import RuleSet, evaluate_detector, hybrid_detect, load_corpus
from .errors import (
    ConfigError,
    InsufficientDataError,
    QuantClawError,
    ValidationError,
)
from .profiles import (
    DegradationPoint,
    build_profiles_from_results,
    fit_power_law,
    load_profiles,
    profiles_to_json,
)
from .routing import RoutingMode
from .simulate import load_workload, simulate

EXIT_VALIDATION = 2
EXIT_INSUFFICIENT = 3
EXIT_RUNTIME = 4


def _default_rules() -> RuleSet:
    data = json.loads(
        resources.files("quantclaw.data").joinpath("default_rules.json").read_text()
    )
    return RuleSet.from_json(data)


def _emit(ctx, payload: dict, text_lines: list[str]) -> None:
    if ctx.obj["quiet"]:
        return
    if ctx.obj["output"] == "json":
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            click.echo(line)


def _run(ctx, fn):
    try:
        return fn()
    except InsufficientDataError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_INSUFFICIENT)
    except (ValidationError, ConfigError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_VALIDATION)
    except QuantClawError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_RUNTIME)


@click.group()
@click.option("--output", type=click.Choice(["text", "json"]), default="text")
@click.option("--quiet", is_flag=True, default=False)
@click.pass_context
def main(ctx, output, quiet):
    """quantclaw: task-aware precision routing for model pools."""
    ctx.ensure_object(dict)
    ctx.obj["output"] = output
    ctx.obj["quiet"] = quiet


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.pass_context
def serve(ctx, config_path):
    """Boot the gateway and serve until interrupted."""
    import uvicorn

    from .gateway import create_app

    def boot():
        cfg = load_config(config_path)
        return cfg, create_app(cfg)

    cfg, app = _run(ctx, boot)
    try:
        uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
    except KeyboardInterrupt:
        pass


@main.group()
def profile():
    """Profile dataset operations."""


@profile.command("build")
@click.argument("results_file", type=click.Path(exists=True))
@click.option("-o", "--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def profile_build(ctx, results_file, out_path):
    """Aggregate benchmark trials into a gateway-loadable profiles file."""

    def run():
        data = json.loads(Path(results_file).read_text())
        pset, best = build_profiles_from_results(data, where=results_file)
        doc = profiles_to_json(pset)
        doc["best"] = best
        if out_path:
            Path(out_path).write_text(json.dumps(doc, indent=2))
        return pset, doc

    pset, doc = _run(ctx, run)
    lines = [f"{'category':<24}{'rel_degradation':>16}  group"]
    for p in pset.profiles.values():
        lines.append(
            f"{p.task_category:<24}{p.rel_degradation:>15.4%}  {p.group.value}"
        )
    _emit(ctx, doc, lines)


@main.command()
@click.argument("points_file", type=click.Path(exists=True))
@click.pass_context
def fit(ctx, points_file):
    """Fit the power law delta = a * N**b over a degradation points file."""

    def run():
        data = json.loads(Path(points_file).read_text())
        raw = data["points"] if isinstance(data, dict) else data
        points = [
            DegradationPoint(
                model_id=p.get("model_id", f"point-{i}"),
                n_params_b=float(p["n_params_b"]),
                delta=float(p["delta"]),
            )
            for i, p in enumerate(raw)
        ]
        return fit_power_law(points)

    result = _run(ctx, run)
    payload = {
        "a": result.a,
        "b": result.b,
        "r_squared": result.r_squared,
        "points_used": result.points_used,
        "points_excluded": result.points_excluded,
    }
    _emit(
        ctx,
        payload,
        [
            f"a = {result.a:.6g}",
            f"b = {result.b:.6g}",
            f"r^2 = {result.r_squared:.6f}",
            f"points used = {result.points_used}, excluded = {result.points_excluded}",
        ],
    )


@main.command("simulate")
@click.argument("workload_file", type=click.Path(exists=True))
@click.option("--profiles", "profiles_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["latency", "cost"]), default="cost")
@click.pass_context
def simulate_cmd(ctx, workload_file, profiles_path, mode):
    """Compare all-high / all-low / adaptive policies over a workload."""

    def run():
        workload = load_workload(workload_file)
        pset = load_profiles(profiles_path)
        return simulate(workload, pset, RoutingMode.parse(mode))

    report = _run(ctx, run)
    lines = [f"{'policy':<12}{'avg score':>12}{'total cost':>14}{'total time':>14}"]
    for name, totals in (
        ("all-high", report.all_high),
        ("all-low", report.all_low),
        ("adaptive", report.adaptive),
    ):
        lines.append(
            f"{name:<12}{totals.avg_score:>12.4f}{totals.cost_usd:>14.6f}"
            f"{totals.latency_s:>14.2f}"
        )
    for w in report.warnings:
        lines.append(f"warning: {w}")
    _emit(ctx, report.to_json(), lines)



@main.command()
@click.argument("query")
@click.option("--rules", "rules_path", type=click.Path(exists=True), default=None)
@click.pass_context
def detect(ctx, query, rules_path):
    """Label one query with the hybrid detector (rules + fallback)."""

    def run():
        rules = RuleSet.load(rules_path) if rules_path else _default_rules()
        return hybrid_detect(query, rules, None)

    result = _run(ctx, run)
    payload = {
        "category": result.category,
        "confidence": result.confidence,
        "stage": result.stage.value,
        "rule_id": result.rule_id,
    }
    _emit(
        ctx,
        payload,
        [f"category = {result.category} (stage={result.stage.value}, "
         f"confidence={result.confidence:.2f})"],
    )


@main.command("bench-detectors")
@click.argument("corpus_file", type=click.Path(exists=True))
@click.option("--rules", "rules_path", type=click.Path(exists=True), default=None)
@click.pass_context
def bench_detectors(ctx, corpus_file, rules_path):
    """Evaluate the hybrid detector against a labeled corpus."""

    def run():
        rules = RuleSet.load(rules_path) if rules_path else _default_rules()
        corpus = load_corpus(corpus_file)
        detector = lambda q: hybrid_detect(q, rules, None)
        return evaluate_detector(detector, corpus)

    report = _run(ctx, run)
    lines = [
        f"accuracy  = {report.accuracy:.4f}",
        f"macro F1  = {report.macro_f1:.4f}",
        f"avg time  = {report.avg_time_s * 1000:.3f} ms/query",
        f"queries   = {report.total}",
        "",
        f"{'class':<22}{'prec':>8}{'recall':>8}{'f1':>8}{'support':>9}",
    ]
    for cls, s in sorted(report.per_class.items()):
        lines.append(
            f"{cls:<22}{s.precision:>8.3f}{s.recall:>8.3f}{s.f1:>8.3f}{s.support:>9}"
        )
    _emit(ctx, report.to_json(), lines)


if __name__ == "__main__":
    main()
