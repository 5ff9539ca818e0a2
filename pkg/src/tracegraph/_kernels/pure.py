"""Numpy implementations of the hot kernels (fallback backend)."""
import numpy as np


def ordered_pair_keys(flat_members, offsets, n_users):
    """All time-ordered pair keys of every episode, concatenated.

    ``flat_members``/``offsets`` are the EpisodeSet layout: episode e occupies
    ``flat_members[offsets[e]:offsets[e+1]]`` in chronological order.  For an
    episode (m_0 .. m_{k-1}) the output holds, for each target position
    p = 1..k-1, the keys ``m_q * n_users + m_p`` for q = 0..p-1, in that
    order.  Grouping pairs by target position is what lets the constraint
    builder slice this array directly.
    """
    flat_members = np.asarray(flat_members, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    n = int(n_users)
    chunks = []
    for e in range(len(offsets) - 1):
        m = flat_members[offsets[e]:offsets[e + 1]]
        k = m.size
        if k < 2:
            continue
        sizes = np.arange(1, k)
        p_idx = np.repeat(np.arange(1, k), sizes)
        starts = np.cumsum(sizes) - sizes
        q_idx = np.arange(int(sizes.sum())) - np.repeat(starts, sizes)
        chunks.append(m[q_idx] * n + m[p_idx])
    if not chunks:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(chunks)


def reach_episodes(flat_members, offsets, edge_keys, n_users):
    """Time-respecting reachability from each episode root.

    ``edge_keys`` is the sorted int64 key array of a graph (i * n_users + j).
    A member is reachable when some earlier reachable member has an edge to
    it.  Returns (feasible uint8 per episode, flat unreachable member ids,
    offsets into that flat array, one slice per episode).
    """
    flat_members = np.asarray(flat_members, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    edge_keys = np.asarray(edge_keys, dtype=np.int64)
    n = int(n_users)
    n_episodes = len(offsets) - 1

    feasible = np.zeros(n_episodes, dtype=np.uint8)
    unreach_chunks = []
    unreach_offsets = np.zeros(n_episodes + 1, dtype=np.int64)

    for e in range(n_episodes):
        m = flat_members[offsets[e]:offsets[e + 1]]
        k = m.size
        reach = np.zeros(k, dtype=bool)
        if k:
            reach[0] = True
        for p in range(1, k):
            src = m[:p][reach[:p]]
            if src.size == 0:
                continue
            keys = src * n + m[p]
            pos = np.searchsorted(edge_keys, keys)
            pos_c = np.minimum(pos, max(edge_keys.size - 1, 0))
            if edge_keys.size and np.any(edge_keys[pos_c] == keys):
                reach[p] = True
        bad = m[~reach]
        feasible[e] = 1 if bad.size == 0 else 0
        if bad.size:
            unreach_chunks.append(bad)
        unreach_offsets[e + 1] = unreach_offsets[e] + bad.size

    flat_bad = (np.concatenate(unreach_chunks) if unreach_chunks
                else np.empty(0, dtype=np.int64))
    return feasible, flat_bad, unreach_offsets
