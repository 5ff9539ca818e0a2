# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see pure.py for the contract."""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def ordered_pair_keys(flat_members, offsets, n_users):
    cdef cnp.int64_t[::1] members = np.ascontiguousarray(flat_members, dtype=np.int64)
    cdef cnp.int64_t[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef cnp.int64_t n = n_users
    cdef Py_ssize_t n_episodes = offs.shape[0] - 1
    cdef Py_ssize_t e, p, q, k, start
    cdef cnp.int64_t total = 0

    for e in range(n_episodes):
        k = offs[e + 1] - offs[e]
        total += k * (k - 1) // 2

    out_arr = np.empty(total, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef cnp.int64_t w = 0
    cdef cnp.int64_t tgt

    for e in range(n_episodes):
        start = offs[e]
        k = offs[e + 1] - offs[e]
        for p in range(1, k):
            tgt = members[start + p]
            for q in range(p):
                out[w] = members[start + q] * n + tgt
                w += 1
    return out_arr


cdef inline bint _has_key(const cnp.int64_t[::1] keys, cnp.int64_t key) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = keys.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo < keys.shape[0] and keys[lo] == key


def reach_episodes(flat_members, offsets, edge_keys, n_users):
    cdef cnp.int64_t[::1] members = np.ascontiguousarray(flat_members, dtype=np.int64)
    cdef cnp.int64_t[::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef cnp.int64_t[::1] edges = np.ascontiguousarray(edge_keys, dtype=np.int64)
    cdef cnp.int64_t n = n_users
    cdef Py_ssize_t n_episodes = offs.shape[0] - 1
    cdef Py_ssize_t e, p, q, k, start, max_k = 0

    feasible_arr = np.zeros(n_episodes, dtype=np.uint8)
    unreach_offsets_arr = np.zeros(n_episodes + 1, dtype=np.int64)
    cdef cnp.uint8_t[::1] feasible = feasible_arr
    cdef cnp.int64_t[::1] unreach_offsets = unreach_offsets_arr

    for e in range(n_episodes):
        k = offs[e + 1] - offs[e]
        if k > max_k:
            max_k = k

    reach_buf = np.zeros(max(max_k, 1), dtype=np.uint8)
    cdef cnp.uint8_t[::1] reach = reach_buf
    bad_chunks = []
    cdef cnp.int64_t tgt, n_bad_total = 0
    cdef bint ok

    for e in range(n_episodes):
        start = offs[e]
        k = offs[e + 1] - offs[e]
        if k:
            reach[0] = 1
        for p in range(1, k):
            tgt = members[start + p]
            ok = 0
            for q in range(p):
                if reach[q] and _has_key(edges, members[start + q] * n + tgt):
                    ok = 1
                    break
            reach[p] = ok
        bad = [members[start + p] for p in range(k) if not reach[p]]
        if bad:
            bad_chunks.append(np.asarray(bad, dtype=np.int64))
            n_bad_total += len(bad)
        else:
            feasible[e] = 1
        unreach_offsets[e + 1] = n_bad_total

    flat_bad = (np.concatenate(bad_chunks) if bad_chunks
                else np.empty(0, dtype=np.int64))
    return feasible_arr, flat_bad, unreach_offsets_arr
