"""Episode feasibility and the summary graph statistics."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from ._kernels import reach_episodes
from .graph import AdjacencyGraph
from .trace import Episode, EpisodeSet


@dataclass
class FeasibilityReport:
    per_episode: dict
    rate: float
    unexplained: dict = field(default_factory=dict)


@dataclass
class MetricsReport:
    edge_count: int
    avg_out_degree: float
    max_out_degree: int
    max_in_degree: int
    diameter: int
    avg_shortest_path: float
    scc_count: int
    wcc_coverage: float
    out_ccdf: list
    in_ccdf: list


def check_episode_feasibility(graph: AdjacencyGraph,
                              episode: Episode) -> tuple[bool, set]:
    """Whether every member is reachable from the root along edges that
    respect the repost order, and who is not."""
    offs = np.asarray([0, len(episode)], dtype=np.int64)
    feasible, bad, _ = reach_episodes(episode.members, offs,
                                      graph.edge_keys, graph.n)
    return bool(feasible[0]), {int(u) for u in bad}


def feasibility_rate(graph: AdjacencyGraph,
                     episodes: EpisodeSet) -> FeasibilityReport:
    flat, offs = episodes.member_arrays()
    feasible, bad, bad_offs = reach_episodes(flat, offs, graph.edge_keys,
                                             graph.n)
    per_episode = {e: bool(feasible[e]) for e in range(episodes.S)}
    unexplained = {}
    for e in range(episodes.S):
        lo, hi = bad_offs[e], bad_offs[e + 1]
        if hi > lo:
            unexplained[e] = {int(u) for u in bad[lo:hi]}
    rate = float(feasible.sum()) / episodes.S if episodes.S else 1.0
    return FeasibilityReport(per_episode=per_episode, rate=rate,
                             unexplained=unexplained)


def degree_ccdf(graph: AdjacencyGraph) -> tuple[list, list]:
    """Fraction of nodes with degree >= d, for d = 0 .. max degree."""
    out = []
    for deg in (graph.out_degrees(), graph.in_degrees()):
        hist = np.bincount(deg, minlength=1)
        at_least = np.cumsum(hist[::-1])[::-1] / max(graph.n, 1)
        out.append([(int(d), float(at_least[d])) for d in range(hist.size)])
    return out[0], out[1]


def graph_metrics(graph: AdjacencyGraph) -> MetricsReport:
    """Degree and distance statistics as reported for each method.

    Distances are directed, taken within the largest weakly connected
    component, averaging finite distances only; singleton strongly
    connected components are not counted.
    """
    out_ccdf, in_ccdf = degree_ccdf(graph)
    if graph.n_edges == 0:
        return MetricsReport(edge_count=0, avg_out_degree=0.0,
                             max_out_degree=0, max_in_degree=0, diameter=0,
                             avg_shortest_path=0.0, scc_count=0,
                             wcc_coverage=0.0,
                             out_ccdf=out_ccdf, in_ccdf=in_ccdf)

    g = graph.to_networkx()
    wcc = max(nx.weakly_connected_components(g), key=len)
    sub = g.subgraph(wcc)
    diameter = 0
    total = 0.0
    pairs = 0
    for _, dists in nx.all_pairs_shortest_path_length(sub):
        for dist in dists.values():
            if dist > 0:
                total += dist
                pairs += 1
                diameter = max(diameter, dist)
    scc_count = sum(1 for c in nx.strongly_connected_components(g)
                    if len(c) >= 2)
    return MetricsReport(
        edge_count=graph.n_edges,
        avg_out_degree=graph.n_edges / graph.n,
        max_out_degree=int(graph.out_degrees().max()),
        max_in_degree=int(graph.in_degrees().max()),
        diameter=diameter,
        avg_shortest_path=total / pairs if pairs else 0.0,
        scc_count=scc_count,
        wcc_coverage=len(wcc) / graph.n,
        out_ccdf=out_ccdf, in_ccdf=in_ccdf)


def precision_recall(inferred: AdjacencyGraph, truth: AdjacencyGraph,
                     restrict_keys=None) -> tuple[float, float]:
    """Edge precision and recall, optionally restricted to a key subset."""
    inf_keys = inferred.edge_keys
    true_keys = truth.edge_keys
    if restrict_keys is not None:
        restrict_keys = np.asarray(restrict_keys, dtype=np.int64)
        inf_keys = inf_keys[np.isin(inf_keys, restrict_keys)]
        true_keys = true_keys[np.isin(true_keys, restrict_keys)]
    hits = np.intersect1d(inf_keys, true_keys).size
    precision = hits / inf_keys.size if inf_keys.size else 0.0
    recall = hits / true_keys.size if true_keys.size else 0.0
    return float(precision), float(recall)


def write_metrics(fh, metrics: MetricsReport) -> None:
    json.dump({"edge_count": metrics.edge_count,
               "avg_out_degree": metrics.avg_out_degree,
               "max_out_degree": metrics.max_out_degree,
               "max_in_degree": metrics.max_in_degree,
               "diameter": metrics.diameter,
               "avg_shortest_path": metrics.avg_shortest_path,
               "scc_count": metrics.scc_count,
               "wcc_coverage": metrics.wcc_coverage},
              fh, indent=2)
    fh.write("\n")


def write_ccdf(fh, ccdf) -> None:
    fh.write("degree,fraction\n")
    for degree, fraction in ccdf:
        fh.write(f"{degree},{fraction:.6g}\n")


def write_feasibility(fh, report: FeasibilityReport,
                      per_episode: bool = False) -> None:
    payload = {"rate": report.rate,
               "feasible": sum(report.per_episode.values()),
               "episodes": len(report.per_episode)}
    if per_episode:
        payload["per_episode"] = {str(k): v
                                  for k, v in report.per_episode.items()}
        payload["unexplained"] = {str(k): sorted(v)
                                  for k, v in report.unexplained.items()}
    json.dump(payload, fh, indent=2)
    fh.write("\n")
