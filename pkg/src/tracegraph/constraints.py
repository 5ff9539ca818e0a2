"""Covering constraints over sigma variables, plus the two reduction rules."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._kernels import ordered_pair_keys
from .trace import EpisodeSet, PairStats, count_ordered_pairs


@dataclass(frozen=True)
class Constraint:
    """One covering constraint: sum of sigma over ``cols`` >= 1.

    All vars share the target user; cols index the sorted active-pair array.
    """

    episode: int
    target: int
    cols: np.ndarray

    def vars(self, pair_keys: np.ndarray, n_users: int):
        keys = pair_keys[self.cols]
        return [(int(k) // n_users, int(k) % n_users) for k in keys]


@dataclass
class ConstraintSet:
    """Constraints in CSR layout; LP columns are positions in pair_keys."""

    n_users: int
    pair_keys: np.ndarray
    episode_ids: np.ndarray
    targets: np.ndarray
    var_offsets: np.ndarray
    var_cols: np.ndarray

    def __len__(self) -> int:
        return len(self.episode_ids)

    @property
    def n_vars(self) -> int:
        return int(self.pair_keys.size)

    def __getitem__(self, c: int) -> Constraint:
        lo, hi = self.var_offsets[c], self.var_offsets[c + 1]
        return Constraint(int(self.episode_ids[c]), int(self.targets[c]),
                          self.var_cols[lo:hi])

    def __iter__(self):
        return (self[c] for c in range(len(self)))

    def var_index(self, i: int, j: int) -> int:
        key = i * self.n_users + j
        pos = int(np.searchsorted(self.pair_keys, key))
        if pos >= self.pair_keys.size or self.pair_keys[pos] != key:
            return -1
        return pos

    def take(self, keep: np.ndarray) -> "ConstraintSet":
        """Subset by constraint index, preserving order."""
        keep = np.asarray(keep, dtype=np.int64)
        sizes = (self.var_offsets[keep + 1] - self.var_offsets[keep])
        new_offsets = np.zeros(keep.size + 1, dtype=np.int64)
        np.cumsum(sizes, out=new_offsets[1:])
        new_cols = np.empty(int(new_offsets[-1]), dtype=np.int64)
        for w, c in enumerate(keep):
            lo, hi = self.var_offsets[c], self.var_offsets[c + 1]
            new_cols[new_offsets[w]:new_offsets[w + 1]] = self.var_cols[lo:hi]
        return ConstraintSet(self.n_users, self.pair_keys,
                             self.episode_ids[keep], self.targets[keep],
                             new_offsets, new_cols)


@dataclass
class FixedAssignments:
    """Pairs pinned to sigma = 1 by singleton constraints.

    Pairs never seen in any episode are implicitly 0 and not stored.
    """

    n_users: int
    pair_keys: np.ndarray
    cols: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.cols.size)

    def as_dict(self) -> dict:
        out = {}
        for c in self.cols:
            key = int(self.pair_keys[c])
            out[(key // self.n_users, key % self.n_users)] = 1.0
        return out


def build_constraints(episodes: EpisodeSet,
                      pair_stats: PairStats | None = None) -> ConstraintSet:
    """One covering constraint per (episode, non-root member).

    The vars of constraint (s, j) are all pairs (i, j) with i preceding j
    in episode s; the total count is T - S.
    """
    if pair_stats is None:
        pair_stats = count_ordered_pairs(episodes)
    flat, offs = episodes.member_arrays()
    keys = ordered_pair_keys(flat, offs, episodes.n_users)
    cols = np.searchsorted(pair_stats.keys, keys).astype(np.int64)

    episode_ids = []
    targets = []
    group_sizes = []
    for e in range(episodes.S):
        m = flat[offs[e]:offs[e + 1]]
        k = m.size
        if k < 2:
            continue
        episode_ids.append(np.full(k - 1, e, dtype=np.int64))
        targets.append(m[1:])
        group_sizes.append(np.arange(1, k, dtype=np.int64))

    if episode_ids:
        episode_ids = np.concatenate(episode_ids)
        targets = np.concatenate(targets)
        sizes = np.concatenate(group_sizes)
    else:
        episode_ids = np.empty(0, dtype=np.int64)
        targets = np.empty(0, dtype=np.int64)
        sizes = np.empty(0, dtype=np.int64)
    var_offsets = np.zeros(episode_ids.size + 1, dtype=np.int64)
    np.cumsum(sizes, out=var_offsets[1:])
    return ConstraintSet(episodes.n_users, pair_stats.keys,
                         episode_ids, targets, var_offsets, cols)


def fix_singletons(cs: ConstraintSet) -> tuple[FixedAssignments, ConstraintSet]:
    """Pin every singleton constraint's var to 1, drop satisfied constraints.

    Removal never shrinks a surviving constraint, so one collection pass
    reaches the fixpoint; the loop below just asserts that.
    """
    fixed_cols: set[int] = set()
    alive = np.ones(len(cs), dtype=bool)
    while True:
        sizes = cs.var_offsets[1:] - cs.var_offsets[:-1]
        new = False
        for c in np.nonzero(alive)[0]:
            if sizes[c] == 1:
                col = int(cs.var_cols[cs.var_offsets[c]])
                if col not in fixed_cols:
                    fixed_cols.add(col)
                    new = True
        if not new:
            break
        fixed_arr = np.fromiter(fixed_cols, dtype=np.int64)
        for c in np.nonzero(alive)[0]:
            lo, hi = cs.var_offsets[c], cs.var_offsets[c + 1]
            if np.isin(cs.var_cols[lo:hi], fixed_arr).any():
                alive[c] = False
    fixed = FixedAssignments(cs.n_users, cs.pair_keys,
                             np.sort(np.fromiter(fixed_cols, dtype=np.int64))
                             if fixed_cols else np.empty(0, dtype=np.int64))
    return fixed, cs.take(np.nonzero(alive)[0])


def remove_dominated(cs: ConstraintSet) -> ConstraintSet:
    """Drop every constraint whose vars are a superset of another's.

    Constraints for different targets have disjoint vars by construction, so
    dominance is tested per target bucket.  Within a bucket, processing by
    (size, episode id) keeps the minimal sets and, for identical vars, the
    first constraint in key order, independent of input order.
    """
    sizes = cs.var_offsets[1:] - cs.var_offsets[:-1]
    keep: list[int] = []
    order = np.lexsort((cs.episode_ids, sizes, cs.targets))
    b = 0
    while b < order.size:
        e = b
        while e < order.size and cs.targets[order[e]] == cs.targets[order[b]]:
            e += 1
        kept_sets: list[frozenset] = []
        for idx in order[b:e]:
            lo, hi = cs.var_offsets[idx], cs.var_offsets[idx + 1]
            s = frozenset(cs.var_cols[lo:hi].tolist())
            if any(k <= s for k in kept_sets):
                continue
            kept_sets.append(s)
            keep.append(int(idx))
        b = e
    keep_arr = np.sort(np.asarray(keep, dtype=np.int64))
    return cs.take(keep_arr)


def reduce_constraints(cs: ConstraintSet):
    """Both reduction rules in order; returns (fixed, reduced set, report)."""
    before = len(cs)
    fixed, after_fix = fix_singletons(cs)
    reduced = remove_dominated(after_fix)
    report = {"before": before,
              "after_singleton": len(after_fix),
              "after_dominance": len(reduced)}
    return fixed, reduced, report


def dump_constraints(cs: ConstraintSet, fh, users=None) -> None:
    """One JSON object per line: {episode, target, vars: [[i, j], ...]}."""
    n = cs.n_users
    for c in cs:
        pairs = c.vars(cs.pair_keys, n)
        if users is not None:
            target = users[c.target]
            pairs = [[users[i], users[j]] for i, j in pairs]
        else:
            target = c.target
            pairs = [[i, j] for i, j in pairs]
        fh.write(json.dumps({"episode": c.episode, "target": target,
                             "vars": pairs}) + "\n")
