"""Ground-truth graphs and SI-model cascade traces for validation runs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import AdjacencyGraph
from .trace import PostRecord, Trace, _index_users


@dataclass
class SynthConfig:
    n: int
    edge_density: float
    cascades: int
    activation_prob: float
    max_steps: int = 8
    seed: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("need at least 2 nodes")
        if self.cascades < 1:
            raise ValidationError("need at least 1 cascade")
        for name in ("edge_density", "activation_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={v} is not a probability")
        if self.max_steps < 1:
            raise ValidationError("max_steps must be at least 1")


def _seed_seq(seed, salt: int) -> np.random.SeedSequence:
    if seed is None:
        return np.random.SeedSequence()
    return np.random.SeedSequence([int(seed), salt])


def generate_graph(config: SynthConfig) -> AdjacencyGraph:
    """Each ordered pair gets an edge independently with edge_density."""
    rng = np.random.default_rng(_seed_seq(config.seed, 0))
    draws = rng.random((config.n, config.n)) < config.edge_density
    np.fill_diagonal(draws, False)
    src, dst = np.nonzero(draws)
    return AdjacencyGraph(config.n, np.sort(src * config.n + dst))


def generate_trace(graph: AdjacencyGraph, config: SynthConfig) -> Trace:
    """SI cascades over the graph, one original post each.

    Every infected node keeps trying each uninfected out-neighbor once per
    step, so a node with c infected in-neighbors is hit with probability
    1 - (1 - p)^c.  Infections within a step share a timestamp and are
    emitted in node order; cascades occupy disjoint time ranges.
    """
    n = graph.n
    adj = np.zeros((n, n), dtype=bool)
    edges = graph.edges()
    adj[edges[:, 0], edges[:, 1]] = True

    stride = config.max_steps + 2
    records = []
    pid = 0
    children = _seed_seq(config.seed, 1).spawn(config.cascades)
    for c, child in enumerate(children):
        rng = np.random.default_rng(child)
        root = int(rng.integers(n))
        t0 = c * stride
        pid += 1
        root_pid = str(pid)
        records.append(PostRecord(pid=root_pid, t=t0, uid=f"u{root}",
                                  rid=None))
        infected = np.zeros(n, dtype=bool)
        infected[root] = True
        for step in range(1, config.max_steps + 1):
            exposures = infected @ adj
            miss = (1.0 - config.activation_prob) ** exposures
            hit = (rng.random(n) < 1.0 - miss) & ~infected & (exposures > 0)
            if not hit.any():
                break
            for j in np.nonzero(hit)[0]:
                pid += 1
                records.append(PostRecord(pid=str(pid), t=t0 + step,
                                          uid=f"u{int(j)}", rid=root_pid))
            infected |= hit
    return Trace(records=records, user_index=_index_users(records))


def relabel_graph(graph: AdjacencyGraph, trace: Trace) -> AdjacencyGraph:
    """Ground-truth edges mapped into the trace's dense user index.

    Edges touching users that never appear in the trace are dropped; they
    cannot participate in any episode-derived statistic.
    """
    pairs = []
    for i, j in graph.edges():
        a = trace.user_index.get(f"u{i}")
        b = trace.user_index.get(f"u{j}")
        if a is not None and b is not None:
            pairs.append((a, b))
    return AdjacencyGraph.from_pairs(trace.N, pairs)


def write_ground_truth(path, graph: AdjacencyGraph) -> None:
    """Edge TSV with the same u<node> ids the generated trace uses."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i\tj\n")
        for i, j in graph.edges():
            fh.write(f"u{i}\tu{j}\n")
