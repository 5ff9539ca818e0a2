"""Command line pipeline: synth, preprocess, infer, evaluate, report."""
from __future__ import annotations

import functools
import json
import os
import sys
import time
from pathlib import Path

import click

from . import __version__
from .baselines import compute_direct_counts, infer_chain, infer_newman_vanilla, \
    infer_saito, infer_star
from .constraints import build_constraints, dump_constraints, reduce_constraints
from .em import EMConfig, compute_w, run_em, threshold_graph, write_history, \
    write_params
from .errors import ParseError, SolverError, TraceGraphError, ValidationError
from .evaluation import feasibility_rate, graph_metrics, write_ccdf, \
    write_feasibility, write_metrics
from .graph import read_edges, write_edges, write_pair_table
from .lp import LPProblem, compute_lambda, write_lp
from .synth import SynthConfig, generate_graph, generate_trace, \
    write_ground_truth
from .trace import build_episodes, count_ordered_pairs, parse_trace, \
    preprocess, serialize, summary

_DELIMITERS = {"auto": None, "tab": "\t", "comma": ","}


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ParseError, ValidationError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except (SolverError, TraceGraphError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
    return wrapper


def _outdir(path, seed) -> Path:
    if path is None:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        path = f"run-{stamp}-seed{seed if seed is not None else 'none'}"
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(outdir: Path, command: str, inputs: dict, outputs: list,
                    config: dict, started: float) -> None:
    payload = {"command": command, "inputs": inputs,
               "outputs": sorted(str(o) for o in outputs), "config": config,
               "version": __version__,
               "duration_seconds": round(time.time() - started, 3)}
    tmp = outdir / "manifest.json.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, outdir / "manifest.json")


def _load_trace(path, delimiter="auto"):
    with open(path, encoding="utf-8") as fh:
        trace = parse_trace(fh, delimiter=_DELIMITERS[delimiter])
    return preprocess(trace)


@click.group(context_settings={"auto_envvar_prefix": "TRACEGRAPH"})
@click.version_option(version=__version__)
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Worker cap; computation is deterministic either way.")
@click.pass_context
def cli(ctx, threads):
    """Infer hidden follow graphs from post/repost traces."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


@cli.command("preprocess")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False, writable=True))
@click.option("--delimiter", type=click.Choice(sorted(_DELIMITERS)),
              default="auto", show_default=True)
@click.option("--summary-path", type=click.Path(dir_okay=False), default=None,
              help="Also write the summary JSON to this file.")
@_guard
def cmd_preprocess(input_path, output_path, delimiter, summary_path):
    """Clean a raw trace and report its size statistics."""
    trace, removed = _load_trace(input_path, delimiter)
    Path(output_path).write_text("\n".join(serialize(trace)) + "\n",
                                 encoding="utf-8")
    episodes = build_episodes(trace)
    pairs = count_ordered_pairs(episodes)
    stats = summary(trace, pairs, removed)
    text = json.dumps(stats, indent=2)
    click.echo(text)
    if summary_path:
        Path(summary_path).write_text(text + "\n", encoding="utf-8")


@cli.command("infer")
@click.argument("method", type=click.Choice(
    ["constrained-em", "newman", "saito", "star", "chain"]))
@click.argument("trace_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--epsilon", type=click.FloatRange(min=0, min_open=True),
              default=0.001, show_default=True)
@click.option("--max-iters", type=click.IntRange(min=1), default=500,
              show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--threshold", type=click.FloatRange(0.0, 1.0), default=0.5,
              show_default=True)
@click.option("--outdir", type=click.Path(file_okay=False), default=None,
              help="Output directory; default run-<timestamp>-seed<seed>.")
@click.option("--dump-constraints", "dump_cs", is_flag=True,
              help="Also write constraints.jsonl and reduction.json.")
@click.option("--dump-lp", is_flag=True,
              help="Also write the final LP in text form.")
@_guard
def cmd_infer(method, trace_path, epsilon, max_iters, seed, threshold,
              outdir, dump_cs, dump_lp):
    """Infer a follow graph from a trace with the chosen method."""
    started = time.time()
    out = _outdir(outdir, seed)
    trace, _ = _load_trace(trace_path)
    episodes = build_episodes(trace)
    pairs = count_ordered_pairs(episodes)
    config = EMConfig(epsilon=epsilon, max_iterations=max_iters, seed=seed)
    users = trace.users

    outputs = [out / "edges.tsv", out / "graph.tsv", out / "manifest.json"]
    extra = {}
    if method == "star":
        graph = infer_star(episodes)
        write_pair = dict(sigma=None, q=None)
    elif method == "chain":
        graph = infer_chain(episodes)
        write_pair = dict(sigma=None, q=None)
    elif method == "newman":
        direct = compute_direct_counts(episodes)
        q, graph = infer_newman_vanilla(pairs, direct, config, threshold)
        ii, jj = pairs.pairs()
        sigma = [direct.get((int(i), int(j)), 0) / int(m)
                 for i, j, m in zip(ii, jj, pairs.counts)]
        write_pair = dict(sigma=sigma, q=q.values)
    elif method == "saito":
        influence, graph = infer_saito(episodes, config, threshold)
        write_pair = dict(sigma=influence.values, q=influence.values)
    else:
        cs = build_constraints(episodes, pairs)
        fixed, reduced, report = reduce_constraints(cs)
        result = run_em(episodes, pairs, reduced, fixed, config,
                        full_constraints=cs)
        graph = threshold_graph(result.q, threshold)
        write_pair = dict(sigma=result.sigma.values, q=result.q.values)
        extra["constraint_reduction"] = report
        extra["min_constraint_margin"] = result.min_constraint_margin
        with open(out / "params.json", "w", encoding="utf-8") as fh:
            write_params(fh, result, config)
        with open(out / "history.csv", "w", encoding="utf-8") as fh:
            write_history(fh, result.history)
        outputs += [out / "params.json", out / "history.csv"]
        if dump_cs:
            with open(out / "constraints.jsonl", "w", encoding="utf-8") as fh:
                dump_constraints(reduced, fh, users=users)
            (out / "reduction.json").write_text(
                json.dumps(report, indent=2) + "\n", encoding="utf-8")
            outputs += [out / "constraints.jsonl", out / "reduction.json"]
        if dump_lp:
            w = compute_w(pairs, result.q, result.params)
            prob = LPProblem(w - compute_lambda(w), reduced, fixed)
            with open(out / "lp.txt", "w", encoding="utf-8") as fh:
                write_lp(prob, fh)
            outputs.append(out / "lp.txt")

    write_pair_table(out / "edges.tsv", pairs, users, method=method,
                     **write_pair)
    write_edges(out / "graph.tsv", graph, users, pair_stats=pairs,
                method=method, **write_pair)
    _write_manifest(out, f"infer {method}", {"trace": str(trace_path)},
                    outputs,
                    {"epsilon": epsilon, "max_iters": max_iters, "seed": seed,
                     "threshold": threshold, **extra}, started)
    click.echo(json.dumps({"method": method, "edges": graph.n_edges,
                           "outdir": str(out)}))


@cli.command("evaluate")
@click.argument("graph_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("trace_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--outdir", type=click.Path(file_okay=False), default=None)
@click.option("--per-episode", is_flag=True,
              help="Include per-episode booleans in the feasibility JSON.")
@click.option("--skip-unknown", is_flag=True,
              help="Drop edges whose endpoints never appear in the trace.")
@_guard
def cmd_evaluate(graph_path, trace_path, outdir, per_episode, skip_unknown):
    """Score an inferred graph against a trace."""
    started = time.time()
    out = _outdir(outdir, None)
    trace, _ = _load_trace(trace_path)
    episodes = build_episodes(trace)
    with open(graph_path, encoding="utf-8") as fh:
        graph = read_edges(fh, trace.user_index, skip_unknown=skip_unknown)

    report = feasibility_rate(graph, episodes)
    metrics = graph_metrics(graph)
    with open(out / "feasibility.json", "w", encoding="utf-8") as fh:
        write_feasibility(fh, report, per_episode=per_episode)
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        write_metrics(fh, metrics)
    with open(out / "ccdf_out.csv", "w", encoding="utf-8") as fh:
        write_ccdf(fh, metrics.out_ccdf)
    with open(out / "ccdf_in.csv", "w", encoding="utf-8") as fh:
        write_ccdf(fh, metrics.in_ccdf)
    _write_manifest(out, "evaluate",
                    {"graph": str(graph_path), "trace": str(trace_path)},
                    [out / "feasibility.json", out / "metrics.json",
                     out / "ccdf_out.csv", out / "ccdf_in.csv",
                     out / "manifest.json"],
                    {"per_episode": per_episode,
                     "skip_unknown": skip_unknown}, started)
    click.echo(json.dumps({"feasibility_rate": report.rate,
                           "edges": graph.n_edges, "outdir": str(out)}))


@cli.command("synth")
@click.option("--n", type=click.IntRange(min=2), required=True)
@click.option("--density", type=click.FloatRange(0.0, 1.0), required=True)
@click.option("--cascades", type=click.IntRange(min=1), required=True)
@click.option("--prob", type=click.FloatRange(0.0, 1.0), required=True)
@click.option("--steps", type=click.IntRange(min=1), default=8,
              show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--outdir", type=click.Path(file_okay=False), default=None)
@_guard
def cmd_synth(n, density, cascades, prob, steps, seed, outdir):
    """Generate a ground-truth graph and an SI cascade trace over it."""
    started = time.time()
    out = _outdir(outdir, seed)
    config = SynthConfig(n=n, edge_density=density, cascades=cascades,
                         activation_prob=prob, max_steps=steps, seed=seed)
    graph = generate_graph(config)
    trace = generate_trace(graph, config)
    (out / "trace.tsv").write_text("\n".join(serialize(trace)) + "\n",
                                   encoding="utf-8")
    write_ground_truth(out / "ground_truth.tsv", graph)
    _write_manifest(out, "synth", {},
                    [out / "trace.tsv", out / "ground_truth.tsv",
                     out / "manifest.json"],
                    {"n": n, "density": density, "cascades": cascades,
                     "prob": prob, "steps": steps, "seed": seed}, started)
    click.echo(json.dumps({"records": trace.T, "gt_edges": graph.n_edges,
                           "outdir": str(out)}))


@cli.command("report")
@click.argument("run_dirs", nargs=-1, required=True,
                type=click.Path(exists=True, file_okay=False))
@_guard
def cmd_report(run_dirs):
    """Summarize one or more run directories as a JSON array."""
    rows = []
    for d in run_dirs:
        row = {"dir": str(d)}
        for name in ("manifest", "params", "feasibility", "metrics"):
            path = Path(d) / f"{name}.json"
            if path.exists():
                data = json.loads(path.read_text(encoding="utf-8"))
                if name == "manifest":
                    row["command"] = data.get("command")
                    row["duration_seconds"] = data.get("duration_seconds")
                else:
                    row[name] = data
        rows.append(row)
    click.echo(json.dumps(rows, indent=2))


def main():
    cli(obj={})


if __name__ == "__main__":
    main()
