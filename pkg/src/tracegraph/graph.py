"""Directed graphs over the dense user index, stored as sorted pair keys."""
from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class AdjacencyGraph:
    """Edge set of a directed graph on ``n`` users.

    ``edge_keys`` holds i * n + j for every edge (i, j), sorted ascending.
    Sortedness is the lookup invariant; constructors enforce it.
    """

    n: int
    edge_keys: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "AdjacencyGraph":
        keys = np.asarray([int(i) * n + int(j) for i, j in pairs], dtype=np.int64)
        return cls(n, np.unique(keys))

    @classmethod
    def from_keys(cls, n: int, keys) -> "AdjacencyGraph":
        return cls(n, np.unique(np.asarray(keys, dtype=np.int64)))

    @property
    def n_edges(self) -> int:
        return int(self.edge_keys.size)

    def has_edge(self, i: int, j: int) -> bool:
        key = i * self.n + j
        pos = np.searchsorted(self.edge_keys, key)
        return pos < self.edge_keys.size and self.edge_keys[pos] == key

    def edges(self) -> np.ndarray:
        """(n_edges, 2) int64 array of (i, j)."""
        out = np.empty((self.edge_keys.size, 2), dtype=np.int64)
        out[:, 0] = self.edge_keys // self.n
        out[:, 1] = self.edge_keys % self.n
        return out

    def out_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        src = self.edge_keys // self.n
        np.add.at(deg, src, 1)
        return deg

    def in_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        dst = self.edge_keys % self.n
        np.add.at(deg, dst, 1)
        return deg

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(map(tuple, self.edges()))
        return g


def write_edges(path, graph: AdjacencyGraph, users, pair_stats=None,
                sigma=None, q=None, method=None) -> None:
    """Edge list TSV: user ids plus per-pair stats when available.

    Columns are i, j, M_ij, sigma_ij, Q_ij.  M defaults to 0 and the two
    weights to 1.0 for edges that never co-occurred in an episode (baselines
    can emit those).
    """
    with open(path, "w", encoding="utf-8") as fh:
        if method is not None:
            fh.write(f"# method: {method}\n")
        fh.write("i\tj\tM_ij\tsigma_ij\tQ_ij\n")
        for i, j in graph.edges():
            m_ij = 0
            s_ij = 1.0
            q_ij = 1.0
            if pair_stats is not None:
                idx = pair_stats.index_of(int(i), int(j))
                if idx >= 0:
                    m_ij = int(pair_stats.counts[idx])
                    if sigma is not None:
                        s_ij = float(sigma[idx])
                    if q is not None:
                        q_ij = float(q[idx])
            fh.write(f"{users[i]}\t{users[j]}\t{m_ij}\t{s_ij:.6f}\t{q_ij:.6f}\n")


def write_pair_table(path, pair_stats, users, sigma=None, q=None,
                     method=None) -> None:
    """Same schema as write_edges but one row per active pair."""
    n = pair_stats.n_users
    with open(path, "w", encoding="utf-8") as fh:
        if method is not None:
            fh.write(f"# method: {method}\n")
        fh.write("i\tj\tM_ij\tsigma_ij\tQ_ij\n")
        for idx, key in enumerate(pair_stats.keys):
            i, j = int(key) // n, int(key) % n
            s_ij = float(sigma[idx]) if sigma is not None else 1.0
            q_ij = float(q[idx]) if q is not None else 1.0
            fh.write(f"{users[i]}\t{users[j]}\t{int(pair_stats.counts[idx])}"
                     f"\t{s_ij:.6f}\t{q_ij:.6f}\n")


def read_edges(lines, user_index: dict,
               skip_unknown: bool = False) -> AdjacencyGraph:
    """Parse an edge TSV (as written by write_edges) back into a graph.

    Unknown user ids either fail with the full offending list or, with
    skip_unknown, drop their edges (useful when scoring a ground-truth
    graph against a trace that never mentions some nodes).
    """
    n = len(user_index)
    pairs = []
    unknown = set()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if parts[0] == "i":
            continue
        if len(parts) < 2:
            raise ParseError("expected at least 2 columns", line_number=lineno)
        missing = [p for p in parts[:2] if p not in user_index]
        if missing:
            unknown.update(missing)
            continue
        pairs.append((user_index[parts[0]], user_index[parts[1]]))
    if unknown and not skip_unknown:
        raise ValidationError("unknown user ids in edge list: "
                              + ", ".join(sorted(unknown)[:20]))
    return AdjacencyGraph.from_pairs(n, pairs)
