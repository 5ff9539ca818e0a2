"""Trace ingestion: parsing, preprocessing, episodes and ordered-pair counts.

A trace is a time-ordered log of posts and reposts, one record per line:
``pid  t  uid  rid`` where ``rid`` is ``-1`` for an original post and the pid
of the original otherwise.  Parsing keeps user/post ids as opaque strings;
everything downstream works on dense integer user indices.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from ._kernels import ordered_pair_keys

logger = logging.getLogger(__name__)

DEFAULT_FIELDS = ("pid", "t", "uid", "rid")


@dataclass(frozen=True)
class PostRecord:
    """One log line: a post (rid is None) or a repost of an original post."""

    pid: str
    t: int
    uid: str
    rid: Optional[str] = None

    def is_original(self):
        return self.rid is None


@dataclass
class Trace:
    """Parsed, time-ordered log.

    Attributes
    ----------
    records : list of PostRecord, sorted by timestamp (stable).
    user_index : dict mapping uid -> dense integer in [0, N).
    """

    records: list = field(default_factory=list)
    user_index: dict = field(default_factory=dict)

    @property
    def T(self):
        return len(self.records)

    @property
    def S(self):
        return sum(1 for r in self.records if r.is_original())

    @property
    def N(self):
        return len(self.user_index)

    @property
    def users(self):
        """Dense index -> uid, inverse of user_index."""
        out = [None] * len(self.user_index)
        for uid, i in self.user_index.items():
            out[i] = uid
        return out


@dataclass
class Episode:
    """One original post plus its reposters, in chronological order.

    ``members`` holds dense user indices; the root (original author) is always
    ``members[0]``.  ``times`` is aligned with ``members``.
    """

    s: str
    members: list
    times: list

    @property
    def root(self):
        return self.members[0]

    def __len__(self):
        return len(self.members)


@dataclass
class EpisodeSet:
    """All episodes of a trace plus the user index they were built against."""

    episodes: list
    users: list  # dense index -> uid

    @property
    def S(self):
        return len(self.episodes)

    @property
    def n_users(self):
        return len(self.users)

    def member_arrays(self):
        """Flat int64 member array + offsets, the layout the kernels consume."""
        flat = np.concatenate(
            [np.asarray(e.members, dtype=np.int64) for e in self.episodes]
        ) if self.episodes else np.empty(0, dtype=np.int64)
        offsets = np.zeros(len(self.episodes) + 1, dtype=np.int64)
        np.cumsum([len(e) for e in self.episodes], out=offsets[1:])
        return flat, offsets


class PairStats:
    """Sparse ordered-pair counts M_ij over active pairs.

    Stored as a sorted array of int64 keys ``i * n_users + j`` with aligned
    counts; all per-pair vectors downstream (sigma, Q, W) use this order.
    """

    def __init__(self, n_users, keys, counts):
        self.n_users = int(n_users)
        self.keys = np.asarray(keys, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.keys.size and np.any(np.diff(self.keys) <= 0):
            raise ValueError("pair keys must be strictly increasing")

    @property
    def L(self):
        return int(self.keys.size)

    def __len__(self):
        return self.L

    def key_of(self, i, j):
        return int(i) * self.n_users + int(j)

    def index_of(self, i, j):
        """Position of pair (i, j) in the key array, or -1 if inactive."""
        k = self.key_of(i, j)
        pos = int(np.searchsorted(self.keys, k))
        if pos < self.L and self.keys[pos] == k:
            return pos
        return -1

    def get(self, i, j):
        pos = self.index_of(i, j)
        return int(self.counts[pos]) if pos >= 0 else 0

    def pairs(self):
        """Decode keys back to (i, j) index arrays."""
        return self.keys // self.n_users, self.keys % self.n_users

    def as_dict(self):
        ii, jj = self.pairs()
        return {(int(i), int(j)): int(c) for i, j, c in zip(ii, jj, self.counts)}


def _split_line(line, delimiter):
    if delimiter is None:
        return line.split()
    return [f.strip() for f in line.split(delimiter)]


def parse_trace(lines: Iterable[str], fields: Sequence[str] = DEFAULT_FIELDS,
                delimiter: Optional[str] = None, detect_header: bool = True) -> Trace:
    """Parse raw text lines into a Trace.

    Parameters
    ----------
    lines : iterable of str
        One record per line; blank lines are skipped.
    fields : field-order descriptor, a permutation of ("pid", "t", "uid", "rid").
    delimiter : None splits on any whitespace (covers tab); "," for CSV.
    detect_header : skip a first line whose timestamp field is not an integer.

    Raises
    ------
    ParseError for wrong arity or an unparsable timestamp (carries the line
    number); ValidationError for a duplicate pid or rid == pid.
    """
    if sorted(fields) != sorted(DEFAULT_FIELDS):
        raise ValueError(f"fields must be a permutation of {DEFAULT_FIELDS}")
    pos = {name: k for k, name in enumerate(fields)}

    records = []
    seen_pids = set()
    first_content_line = True
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        parts = _split_line(line, delimiter)
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", lineno)
        t_raw = parts[pos["t"]]
        try:
            t = int(t_raw)
        except ValueError:
            if first_content_line and detect_header:
                first_content_line = False
                continue
            raise ParseError(f"bad timestamp {t_raw!r}", lineno) from None
        first_content_line = False
        pid = parts[pos["pid"]]
        uid = parts[pos["uid"]]
        rid = parts[pos["rid"]]
        rid = None if rid == "-1" else rid
        if pid in seen_pids:
            raise ValidationError(f"duplicate pid {pid!r} at line {lineno}")
        if rid == pid:
            raise ValidationError(f"pid {pid!r} reposts itself at line {lineno}")
        seen_pids.add(pid)
        records.append(PostRecord(pid=pid, t=t, uid=uid, rid=rid))

    records.sort(key=lambda r: r.t)  # stable: ties keep input order
    return Trace(records=records, user_index=_index_users(records))


def _index_users(records):
    index = {}
    for r in records:
        if r.uid not in index:
            index[r.uid] = len(index)
    return index


def serialize(trace: Trace) -> list:
    """Inverse of parse_trace for the default field order (tab separated)."""
    return [
        f"{r.pid}\t{r.t}\t{r.uid}\t{r.rid if r.rid is not None else '-1'}"
        for r in trace.records
    ]


def preprocess(trace: Trace):
    """Apply the standard cleaning rules and recompute the trace statistics.

    Removes, in order: duplicate (uid, rid) reposts keeping the earliest;
    reposts whose rid does not resolve to an original record in the trace;
    reposts by the original author themselves; originals left with no reposts.

    Returns
    -------
    (Trace, dict) : the cleaned trace and a removed-record count summary.
    """
    removed = {
        "duplicate_reposts": 0,
        "orphan_reposts": 0,
        "self_reposts": 0,
        "originals_without_reposts": 0,
    }

    original_author = {r.pid: r.uid for r in trace.records if r.is_original()}

    kept_reposts = []
    seen_user_post = set()
    for r in trace.records:  # time order: first seen is earliest
        if r.is_original():
            continue
        if r.rid not in original_author:
            removed["orphan_reposts"] += 1
            continue
        if r.uid == original_author[r.rid]:
            removed["self_reposts"] += 1
            continue
        key = (r.uid, r.rid)
        if key in seen_user_post:
            removed["duplicate_reposts"] += 1
            continue
        seen_user_post.add(key)
        kept_reposts.append(r)

    reposted_pids = {r.rid for r in kept_reposts}
    kept_repost_pids = {r.pid for r in kept_reposts}
    records = []
    for r in trace.records:
        if r.is_original():
            if r.pid in reposted_pids:
                records.append(r)
            else:
                removed["originals_without_reposts"] += 1
        elif r.pid in kept_repost_pids:
            records.append(r)

    cleaned = Trace(records=records, user_index=_index_users(records))
    total_removed = sum(removed.values())
    if total_removed:
        logger.info("preprocess: removed %d records (%s)", total_removed, removed)
    return cleaned, removed


def build_episodes(trace: Trace) -> EpisodeSet:
    """Group a preprocessed trace into per-original-post episodes.

    Members are ordered by repost timestamp (input order on ties) with the
    original author first.  A repost timestamped before its original is a
    ValidationError.
    """
    idx = trace.user_index
    episodes = {}
    order = []
    for r in trace.records:
        if r.is_original():
            episodes[r.pid] = Episode(s=r.pid, members=[idx[r.uid]], times=[r.t])
            order.append(r.pid)
    for r in trace.records:
        if r.is_original():
            continue
        ep = episodes.get(r.rid)
        if ep is None:
            raise ValidationError(f"repost {r.pid!r} references missing original {r.rid!r}")
        if r.t < ep.times[0]:
            raise ValidationError(
                f"repost {r.pid!r} at t={r.t} precedes original {r.rid!r} at t={ep.times[0]}"
            )
        ep.members.append(idx[r.uid])
        ep.times.append(r.t)
    return EpisodeSet(episodes=[episodes[pid] for pid in order], users=trace.users)


def count_ordered_pairs(episodes: EpisodeSet) -> PairStats:
    """Count M_ij = number of episodes in which i precedes j.

    Every ordered pair within an episode counts once, so a single episode of
    k users contributes k(k-1)/2 pairs.
    """
    n = episodes.n_users
    flat, offsets = episodes.member_arrays()
    all_keys = ordered_pair_keys(flat, offsets, n)
    if all_keys.size == 0:
        return PairStats(n, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
    keys, counts = np.unique(all_keys, return_counts=True)
    return PairStats(n, keys, counts.astype(np.int64))


def summary(trace: Trace, pair_stats: Optional[PairStats] = None,
            removed: Optional[dict] = None) -> dict:
    """Preprocessing summary: {T, S, N, L, removed_counts}."""
    out = {"T": trace.T, "S": trace.S, "N": trace.N}
    if pair_stats is not None:
        out["L"] = pair_stats.L
    if removed is not None:
        out["removed_counts"] = removed
    return out
