"""Comparison inference methods: Star, Chain, plain EM, and IC-EM."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import build_constraints
from .em import EMConfig, EMParams, QMatrix, _init_params, compute_q, \
    threshold_graph, update_alpha, update_beta, update_rho
from .errors import ValidationError
from .graph import AdjacencyGraph
from .trace import EpisodeSet, PairStats, count_ordered_pairs

_K_FLOOR = 1e-6


@dataclass
class InfluenceMatrix:
    """Per-pair influence probabilities, defined only on active pairs."""

    n_users: int
    pair_keys: np.ndarray
    values: np.ndarray

    def get(self, i: int, j: int) -> float:
        key = i * self.n_users + j
        pos = int(np.searchsorted(self.pair_keys, key))
        if pos >= self.pair_keys.size or self.pair_keys[pos] != key:
            return 0.0
        return float(self.values[pos])

    def as_dict(self) -> dict:
        n = self.n_users
        return {(int(k) // n, int(k) % n): float(v)
                for k, v in zip(self.pair_keys, self.values)}


def infer_star(episodes: EpisodeSet) -> AdjacencyGraph:
    """Edge from each episode root to every other member."""
    flat, offs = episodes.member_arrays()
    n = episodes.n_users
    chunks = []
    for e in range(episodes.S):
        m = flat[offs[e]:offs[e + 1]]
        if m.size > 1:
            chunks.append(m[0] * n + m[1:])
    keys = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    return AdjacencyGraph.from_keys(n, keys)


def infer_chain(episodes: EpisodeSet) -> AdjacencyGraph:
    """Edge between consecutive members of each episode."""
    flat, offs = episodes.member_arrays()
    n = episodes.n_users
    chunks = []
    for e in range(episodes.S):
        m = flat[offs[e]:offs[e + 1]]
        if m.size > 1:
            chunks.append(m[:-1] * n + m[1:])
    keys = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    return AdjacencyGraph.from_keys(n, keys)


def compute_direct_counts(episodes: EpisodeSet) -> dict:
    """Episodes where j reposted i's original post, keyed (i, j).

    The trace attributes each repost to the original author only, so the
    root pairs are the only directly observed propagation.
    """
    flat, offs = episodes.member_arrays()
    counts: dict = {}
    for e in range(episodes.S):
        m = flat[offs[e]:offs[e + 1]]
        root = int(m[0])
        for j in m[1:]:
            pair = (root, int(j))
            counts[pair] = counts.get(pair, 0) + 1
    return counts


def infer_newman_vanilla(m: PairStats, direct_counts: dict, config: EMConfig,
                         threshold: float = 0.5
                         ) -> tuple[QMatrix, AdjacencyGraph]:
    """Same EM as the constrained run but sigma is pinned to the fraction
    of directly attributed reposts; no LP, no feasibility constraints."""
    sigma = np.zeros(m.L)
    for (i, j), c in direct_counts.items():
        idx = m.index_of(i, j)
        if idx < 0 or c > m.counts[idx]:
            raise ValidationError(f"direct count {c} for pair ({i}, {j}) "
                                  "exceeds its episode count")
        sigma[idx] = c / m.counts[idx]

    params = _init_params(config.seed)
    q = QMatrix(m.n_users, m.keys, np.full(m.L, params.rho), params.rho)
    q_prev = None
    for _ in range(config.max_iterations):
        q = compute_q(m, sigma, params)
        params = EMParams(alpha=update_alpha(m, sigma, q, prev=params.alpha),
                          beta=update_beta(m, sigma, q, prev=params.beta),
                          rho=update_rho(q, m.n_users))
        if q_prev is not None and \
                float(np.linalg.norm(q.values - q_prev)) < config.epsilon:
            q_prev = q.values
            break
        q_prev = q.values
    return q, threshold_graph(q, threshold)


def infer_saito(episodes: EpisodeSet, config: EMConfig,
                threshold: float = 0.5
                ) -> tuple[InfluenceMatrix, AdjacencyGraph]:
    """EM for the independent cascade model on the time-ordered episodes.

    Per episode and non-root member j: P_j = 1 - prod_{i before j}(1 - k_ij);
    responsibilities gamma = k / P are shared among the possible parents.
    The update denominator counts both the episodes where i preceded j and
    the failures, episodes containing i but never j, so uninformative pairs
    decay instead of saturating.
    """
    m = count_ordered_pairs(episodes)
    n = episodes.n_users
    if m.L == 0:
        return (InfluenceMatrix(n, m.keys, np.empty(0)),
                AdjacencyGraph(n, np.empty(0, dtype=np.int64)))

    cs = build_constraints(episodes, m)
    slots = cs.var_cols
    group_sizes = (cs.var_offsets[1:] - cs.var_offsets[:-1]).astype(np.int64)
    slot_group = np.repeat(np.arange(len(cs), dtype=np.int64), group_sizes)

    flat, _ = episodes.member_arrays()
    present = np.bincount(flat, minlength=n).astype(np.int64)
    src = (m.keys // n).astype(np.int64)
    rev = (m.keys % n) * n + src
    rev_pos = np.searchsorted(m.keys, rev)
    rev_pos_c = np.minimum(rev_pos, m.L - 1)
    m_rev = np.where(m.keys[rev_pos_c] == rev, m.counts[rev_pos_c], 0)
    failures = present[src] - m.counts - m_rev
    denom = (m.counts + failures).astype(float)

    k = np.full(m.L, 0.5)
    for _ in range(config.max_iterations):
        with np.errstate(divide="ignore"):
            log_miss = np.log1p(-k)
        group_log = np.add.reduceat(log_miss[slots], cs.var_offsets[:-1])
        p_group = -np.expm1(group_log)
        gamma = k[slots] / p_group[slot_group]
        k_new = np.bincount(slots, weights=gamma, minlength=m.L) / denom
        k_new = np.clip(k_new, _K_FLOOR, 1.0)
        delta = float(np.linalg.norm(k_new - k))
        k = k_new
        if delta < config.epsilon:
            break

    graph = AdjacencyGraph(n, np.asarray(m.keys[k > threshold],
                                         dtype=np.int64))
    return InfluenceMatrix(n, m.keys, k), graph
