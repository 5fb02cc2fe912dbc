"""Numba kernels for the navigable-small-world graph index.

Everything here operates on preallocated flat arrays owned by the Python
wrapper (see ``hnsw.py``):

* ``vectors``      float32 (capacity, dim), unit rows
* ``levels``       int32, per-node top layer
* ``links0``       int32 (capacity, M0), layer-0 adjacency
* ``links0_cnt``   int32 per-node layer-0 degree
* ``upper_links``  int32 (rows, M); node ``i`` with level L >= 1 owns rows
  ``upper_start[i] .. upper_start[i]+L-1`` for layers 1..L
* ``alive``        uint8; 0 marks a tombstoned node (still traversed,
  never returned)

Distances are negated inner products of unit vectors (monotone in cosine
distance), accumulated in float32 with fastmath so the inner loop fuses to
FMA/SIMD; ``neg_dot_strict`` is the IEEE-ordered scalar fallback used for
differential testing of that kernel.
"""

from __future__ import annotations

import numpy as np
from numba import njit

F32 = np.float32
I32 = np.int32


@njit(inline="always")
def _neg_dot(vectors, i, q):
    s = F32(0.0)
    for d in range(q.shape[0]):
        s += vectors[i, d] * q[d]
    return -s


@njit(cache=True, nogil=True, fastmath=True)
def neg_dot_fast(vectors, i, q):
    """Hot-path distance: fused-multiply-add float32 loop (vectorizable)."""
    return _neg_dot(vectors, i, q)


@njit(cache=True, nogil=True)
def neg_dot_strict(vectors, i, q):
    """IEEE-ordered scalar fallback for differential tests of the fast kernel."""
    s = F32(0.0)
    for d in range(q.shape[0]):
        s += vectors[i, d] * q[d]
    return -s


# -- array-backed binary heaps ------------------------------------------
# Min-heaps order candidates by distance; max-heaps cap the result set.


@njit(inline="always")
def _push_min(hd, hi, size, d, i):
    hd[size] = d
    hi[size] = i
    pos = size
    while pos > 0:
        parent = (pos - 1) >> 1
        if hd[parent] <= hd[pos]:
            break
        hd[parent], hd[pos] = hd[pos], hd[parent]
        hi[parent], hi[pos] = hi[pos], hi[parent]
        pos = parent
    return size + 1


@njit(inline="always")
def _pop_min(hd, hi, size):
    size -= 1
    hd[0] = hd[size]
    hi[0] = hi[size]
    pos = 0
    while True:
        left = 2 * pos + 1
        if left >= size:
            break
        child = left
        right = left + 1
        if right < size and hd[right] < hd[left]:
            child = right
        if hd[pos] <= hd[child]:
            break
        hd[pos], hd[child] = hd[child], hd[pos]
        hi[pos], hi[child] = hi[child], hi[pos]
        pos = child
    return size


@njit(inline="always")
def _push_max(hd, hi, size, d, i):
    hd[size] = d
    hi[size] = i
    pos = size
    while pos > 0:
        parent = (pos - 1) >> 1
        if hd[parent] >= hd[pos]:
            break
        hd[parent], hd[pos] = hd[pos], hd[parent]
        hi[parent], hi[pos] = hi[pos], hi[parent]
        pos = parent
    return size + 1


@njit(inline="always")
def _pop_max(hd, hi, size):
    size -= 1
    hd[0] = hd[size]
    hi[0] = hi[size]
    pos = 0
    while True:
        left = 2 * pos + 1
        if left >= size:
            break
        child = left
        right = left + 1
        if right < size and hd[right] > hd[left]:
            child = right
        if hd[pos] >= hd[child]:
            break
        hd[pos], hd[child] = hd[child], hd[pos]
        hi[pos], hi[child] = hi[child], hi[pos]
        pos = child
    return size


# -- graph traversal -----------------------------------------------------


@njit(inline="always")
def _greedy_descend(vectors, upper_links, upper_cnt, upper_start, q, cur, cur_d,
                    from_layer, to_layer):
    """Greedy hill-climb from ``from_layer`` down to ``to_layer`` (exclusive)."""
    for layer in range(from_layer, to_layer, -1):
        moved = True
        while moved:
            moved = False
            row = upper_start[cur] + layer - 1
            cnt = upper_cnt[row]
            for s in range(cnt):
                j = upper_links[row, s]
                d = _neg_dot(vectors, j, q)
                if d < cur_d:
                    cur_d = d
                    cur = j
                    moved = True
    return cur, cur_d


@njit(inline="always")
def _beam_search(vectors, links0, links0_cnt, upper_links, upper_cnt, upper_start,
                 alive, gate_results, q, enter, enter_d, ef, layer,
                 tags, tag, cand_d, cand_i, res_d, res_i):
    """Best-first beam search at one layer.

    Returns the result-heap size. With ``gate_results`` set, tombstoned
    nodes are traversed but never enter the result heap. Visited marking
    uses an epoch tag so the scratch array needs no per-call reset.
    """
    csize = 0
    rsize = 0
    tags[enter] = tag
    csize = _push_min(cand_d, cand_i, csize, enter_d, enter)
    if not gate_results or alive[enter] != 0:
        rsize = _push_max(res_d, res_i, rsize, enter_d, enter)
    while csize > 0:
        cd = cand_d[0]
        ci = cand_i[0]
        csize = _pop_min(cand_d, cand_i, csize)
        if rsize >= ef and cd > res_d[0]:
            break
        if layer == 0:
            cnt = links0_cnt[ci]
        else:
            cnt = upper_cnt[upper_start[ci] + layer - 1]
        for s in range(cnt):
            if layer == 0:
                j = links0[ci, s]
            else:
                j = upper_links[upper_start[ci] + layer - 1, s]
            if tags[j] == tag:
                continue
            tags[j] = tag
            d = _neg_dot(vectors, j, q)
            if rsize < ef or d < res_d[0]:
                csize = _push_min(cand_d, cand_i, csize, d, j)
                if not gate_results or alive[j] != 0:
                    rsize = _push_max(res_d, res_i, rsize, d, j)
                    if rsize > ef:
                        rsize = _pop_max(res_d, res_i, rsize)
    return rsize


@njit(cache=True, nogil=True, fastmath=True)
def search_graph(vectors, levels, links0, links0_cnt, upper_links, upper_cnt,
                 upper_start, alive, entry, max_level, q, ef,
                 tags, tag, cand_d, cand_i):
    """Full query: greedy descent to layer 1, beam search at layer 0.

    Returns (ids, dists, count): up to ``ef`` live nodes, unsorted heap order.
    """
    res_d = np.empty(ef + 1, dtype=F32)
    res_i = np.empty(ef + 1, dtype=I32)
    if entry < 0:
        return res_i, res_d, 0
    cur = entry
    cur_d = _neg_dot(vectors, cur, q)
    cur, cur_d = _greedy_descend(vectors, upper_links, upper_cnt, upper_start,
                                 q, cur, cur_d, max_level, 0)
    rsize = _beam_search(vectors, links0, links0_cnt, upper_links, upper_cnt,
                         upper_start, alive, True, q, cur, cur_d, ef, 0,
                         tags, tag, cand_d, cand_i, res_d, res_i)
    return res_i, res_d, rsize


@njit(inline="always")
def _select_heuristic(vectors, asc_d, asc_i, n, target, sel_i, disc_i):
    """Diversity-aware neighbor selection (keep-pruned variant).

    Scans candidates in ascending distance order and keeps one when it is
    closer to the query point than to every already-selected neighbor;
    pruned candidates backfill remaining slots in distance order.
    """
    sel_cnt = 0
    disc_cnt = 0
    for t in range(n):
        if sel_cnt >= target:
            break
        e = asc_i[t]
        d_e = asc_d[t]
        good = True
        for s in range(sel_cnt):
            d_es = _neg_dot(vectors, e, vectors[sel_i[s]])
            if d_es < d_e:
                good = False
                break
        if good:
            sel_i[sel_cnt] = e
            sel_cnt += 1
        else:
            disc_i[disc_cnt] = e
            disc_cnt += 1
    t = 0
    while sel_cnt < target and t < disc_cnt:
        sel_i[sel_cnt] = disc_i[t]
        sel_cnt += 1
        t += 1
    return sel_cnt


@njit(inline="always")
def _prune_links(vectors, node, row_links, row_cnt, cap, work_d, work_i, sel_i, disc_i):
    """Re-select a node's adjacency row after it grew past ``cap``."""
    n = row_cnt
    for s in range(n):
        j = row_links[s]
        work_d[s] = _neg_dot(vectors, j, vectors[node])
        work_i[s] = j
    # insertion sort ascending by distance (n <= M0 + 1)
    for a in range(1, n):
        d = work_d[a]
        i = work_i[a]
        b = a - 1
        while b >= 0 and work_d[b] > d:
            work_d[b + 1] = work_d[b]
            work_i[b + 1] = work_i[b]
            b -= 1
        work_d[b + 1] = d
        work_i[b + 1] = i
    cnt = _select_heuristic(vectors, work_d, work_i, n, cap, sel_i, disc_i)
    for s in range(cnt):
        row_links[s] = sel_i[s]
    return cnt


@njit(cache=True, nogil=True, fastmath=True)
def insert_graph(vectors, levels, links0, links0_cnt, upper_links, upper_cnt,
                 upper_start, alive, new_id, entry, max_level,
                 ef_construction, M, M0, tags, tag_start, cand_d, cand_i):
    """Link a new node into the graph; the node's vector and level are
    already stored. Returns the consumed epoch-tag counter.
    """
    q = vectors[new_id]
    new_level = levels[new_id]
    tag = tag_start
    if entry < 0:
        return tag
    cur = entry
    cur_d = _neg_dot(vectors, cur, q)
    if max_level > new_level:
        cur, cur_d = _greedy_descend(vectors, upper_links, upper_cnt, upper_start,
                                     q, cur, cur_d, max_level, new_level)
    top = min(new_level, max_level)
    efc = ef_construction
    res_d = np.empty(efc + 1, dtype=F32)
    res_i = np.empty(efc + 1, dtype=I32)
    asc_d = np.empty(efc + 1, dtype=F32)
    asc_i = np.empty(efc + 1, dtype=I32)
    sel_i = np.empty(M0 + 1, dtype=I32)
    disc_i = np.empty(efc + 1, dtype=I32)
    work_d = np.empty(M0 + 2, dtype=F32)
    work_i = np.empty(M0 + 2, dtype=I32)
    psel_i = np.empty(M0 + 1, dtype=I32)
    pdisc_i = np.empty(M0 + 2, dtype=I32)
    for layer in range(top, -1, -1):
        tag += 1
        rsize = _beam_search(vectors, links0, links0_cnt, upper_links, upper_cnt,
                             upper_start, alive, False, q, cur, cur_d, efc, layer,
                             tags, tag, cand_d, cand_i, res_d, res_i)
        # drain the max-heap into ascending order
        n = rsize
        while rsize > 0:
            asc_d[rsize - 1] = res_d[0]
            asc_i[rsize - 1] = res_i[0]
            rsize = _pop_max(res_d, res_i, rsize)
        sel_cnt = _select_heuristic(vectors, asc_d, asc_i, n, M, sel_i, disc_i)
        cap = M0 if layer == 0 else M
        # forward links: new node -> selected
        if layer == 0:
            for s in range(sel_cnt):
                links0[new_id, s] = sel_i[s]
            links0_cnt[new_id] = sel_cnt
        else:
            row = upper_start[new_id] + layer - 1
            for s in range(sel_cnt):
                upper_links[row, s] = sel_i[s]
            upper_cnt[row] = sel_cnt
        # reverse links with overflow pruning
        for s in range(sel_cnt):
            nb = sel_i[s]
            if layer == 0:
                cnt = links0_cnt[nb]
                if cnt < M0:
                    links0[nb, cnt] = new_id
                    links0_cnt[nb] = cnt + 1
                else:
                    links0[nb, cnt] = new_id  # row has M0 + 1 slots
                    links0_cnt[nb] = _prune_links(
                        vectors, nb, links0[nb], cnt + 1, M0,
                        work_d, work_i, psel_i, pdisc_i)
            else:
                nrow = upper_start[nb] + layer - 1
                cnt = upper_cnt[nrow]
                if cnt < M:
                    upper_links[nrow, cnt] = new_id
                    upper_cnt[nrow] = cnt + 1
                else:
                    upper_links[nrow, cnt] = new_id
                    upper_cnt[nrow] = _prune_links(
                        vectors, nb, upper_links[nrow], cnt + 1, M,
                        work_d, work_i, psel_i, pdisc_i)
        if n > 0:
            cur = asc_i[0]
            cur_d = asc_d[0]
    return tag
