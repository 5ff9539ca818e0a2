"""Synthetic graph and cascade generation."""

import networkx as nx
import numpy as np
import pytest

from tracegraph import (
    AdjacencyGraph,
    SynthConfig,
    ValidationError,
    build_episodes,
    count_ordered_pairs,
    feasibility_rate,
    generate_graph,
    generate_trace,
    preprocess,
    relabel_graph,
    serialize,
    write_ground_truth,
)


def test_config_validation():
    with pytest.raises(ValidationError):
        SynthConfig(n=1, edge_density=0.1, cascades=5, activation_prob=0.5)
    with pytest.raises(ValidationError):
        SynthConfig(n=5, edge_density=1.5, cascades=5, activation_prob=0.5)
    with pytest.raises(ValidationError):
        SynthConfig(n=5, edge_density=0.1, cascades=0, activation_prob=0.5)
    with pytest.raises(ValidationError):
        SynthConfig(n=5, edge_density=0.1, cascades=5, activation_prob=-0.1)
    with pytest.raises(ValidationError):
        SynthConfig(n=5, edge_density=0.1, cascades=5, activation_prob=0.5,
                    max_steps=0)


def test_density_extremes():
    empty = generate_graph(SynthConfig(n=10, edge_density=0.0, cascades=1,
                                       activation_prob=0.5, seed=0))
    assert empty.n_edges == 0
    full = generate_graph(SynthConfig(n=10, edge_density=1.0, cascades=1,
                                      activation_prob=0.5, seed=0))
    assert full.n_edges == 10 * 9
    assert not any(i == j for i, j in full.edges())


def test_edge_count_near_binomial_mean():
    g = generate_graph(SynthConfig(n=100, edge_density=0.05, cascades=1,
                                   activation_prob=0.5, seed=42))
    mean = 100 * 99 * 0.05
    sd = (mean * 0.95) ** 0.5
    assert abs(g.n_edges - mean) < 3.5 * sd


def test_same_seed_reproduces_everything():
    cfg = SynthConfig(n=30, edge_density=0.1, cascades=20,
                      activation_prob=0.4, seed=7)
    g1, g2 = generate_graph(cfg), generate_graph(cfg)
    np.testing.assert_array_equal(g1.edge_keys, g2.edge_keys)
    t1 = generate_trace(g1, cfg)
    t2 = generate_trace(g2, cfg)
    assert serialize(t1) == serialize(t2)


def test_different_seeds_differ():
    cfg1 = SynthConfig(n=30, edge_density=0.1, cascades=20,
                       activation_prob=0.4, seed=1)
    cfg2 = SynthConfig(n=30, edge_density=0.1, cascades=20,
                       activation_prob=0.4, seed=2)
    t1 = generate_trace(generate_graph(cfg1), cfg1)
    t2 = generate_trace(generate_graph(cfg2), cfg2)
    assert serialize(t1) != serialize(t2)


def test_ground_truth_explains_every_episode():
    for seed in (0, 1, 2, 3):
        cfg = SynthConfig(n=40, edge_density=0.08, cascades=30,
                          activation_prob=0.35, seed=seed)
        truth = generate_graph(cfg)
        trace, _ = preprocess(generate_trace(truth, cfg))
        if trace.S == 0:
            continue
        episodes = build_episodes(trace)
        report = feasibility_rate(relabel_graph(truth, trace), episodes)
        assert report.rate == 1.0


def test_zero_activation_never_spreads():
    cfg = SynthConfig(n=10, edge_density=0.5, cascades=5,
                      activation_prob=0.0, seed=3)
    trace = generate_trace(generate_graph(cfg), cfg)
    assert trace.T == 5  # the originals only
    cleaned, removed = preprocess(trace)
    assert cleaned.T == 0
    assert removed["originals_without_reposts"] == 5


def test_full_activation_reaches_all_descendants():
    # path 0 -> 1 -> 2 -> 3 plus an unreachable node 4
    graph = AdjacencyGraph.from_pairs(5, [(0, 1), (1, 2), (2, 3)])
    cfg = SynthConfig(n=5, edge_density=0.1, cascades=6,
                      activation_prob=1.0, max_steps=6, seed=11)
    trace = generate_trace(graph, cfg)
    episodes = build_episodes(trace)
    nxg = graph.to_networkx()
    by_pid = {e.s: e for e in episodes.episodes}
    for rec in trace.records:
        if not rec.is_original():
            continue
        root = int(rec.uid[1:])
        want = {f"u{v}" for v in nx.descendants(nxg, root)} | {rec.uid}
        got = {trace.users[u] for u in by_pid[rec.pid].members}
        assert got == want


def test_members_unique_and_times_ordered():
    cfg = SynthConfig(n=25, edge_density=0.15, cascades=15,
                      activation_prob=0.5, seed=5)
    trace = generate_trace(generate_graph(cfg), cfg)
    episodes = build_episodes(trace)
    for ep in episodes.episodes:
        assert len(set(ep.members)) == len(ep.members)
        assert ep.times == sorted(ep.times)
    # cascades never interleave in time
    m = count_ordered_pairs(episodes)
    assert m.counts.max() <= episodes.S


def test_pids_unique_across_cascades():
    cfg = SynthConfig(n=20, edge_density=0.2, cascades=10,
                      activation_prob=0.6, seed=9)
    trace = generate_trace(generate_graph(cfg), cfg)
    pids = [r.pid for r in trace.records]
    assert len(pids) == len(set(pids))


def test_relabel_drops_users_missing_from_trace():
    graph = AdjacencyGraph.from_pairs(4, [(0, 1), (2, 3)])
    cfg = SynthConfig(n=4, edge_density=0.1, cascades=3,
                      activation_prob=1.0, seed=2)
    trace = generate_trace(AdjacencyGraph.from_pairs(4, [(0, 1)]), cfg)
    seen = set(trace.user_index)
    mapped = relabel_graph(graph, trace)
    expected = sum(1 for i, j in graph.edges()
                   if f"u{i}" in seen and f"u{j}" in seen)
    assert mapped.n_edges == expected


def test_write_ground_truth_format(tmp_path):
    graph = AdjacencyGraph.from_pairs(3, [(0, 2)])
    path = tmp_path / "gt.tsv"
    write_ground_truth(path, graph)
    assert path.read_text() == "i\tj\nu0\tu2\n"
