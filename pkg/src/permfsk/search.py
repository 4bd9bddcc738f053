"""Exact search for maximum permutation codes.

The code graph has one vertex per permutation of ``1..M`` (ranked
lexicographically) and an edge between two permutations at Hamming
distance >= d; a code is a clique.  The search is a bitset branch-and-bound
with a greedy-colouring bound.

Symmetry breaking.  Left multiplication and conjugation preserve Hamming
distance, and the distance class of a pair {x, y} is the cycle type of
x^-1 y.  Order the cycle types t_1, t_2, ... and let t_j be the smallest
type occurring among the pairs of some maximum clique.  Translating and
conjugating that clique gives one that contains the identity and a fixed
representative of t_j, and in which every pair has type >= t_j.  So the
search runs once per type, on the subgraph keeping only edges of type
>= t_j, seeded with {identity, representative of t_j}.  Each sub-search
inherits the incumbent of the previous ones.
"""

from __future__ import annotations

import functools
import itertools
import time
from dataclasses import dataclass

import numba as nb
import numpy as np

from permfsk.permcode import CodeBook, cardinality_bound

MAX_EXACT_M = 7

_COMPLETE = 0
_EXHAUSTED = 1


class CapacityError(ValueError):
    """The requested search is beyond the exact-mode size limit."""


@dataclass(frozen=True)
class SearchReport:
    best_code: CodeBook
    proven_optimal: bool
    nodes_explored: int
    time_spent: float
    M: int
    d: int
    bound: int

    @property
    def size(self) -> int:
        return len(self.best_code)


# -- bitset kernel ---------------------------------------------------------


@nb.njit(cache=True)
def _lowbit_index(x):
    b = 0
    while (x & np.uint64(1)) == 0:
        x >>= np.uint64(1)
        b += 1
    return b


@nb.njit(cache=True)
def _color_sort(P, adj, order, cols, off):
    """Greedy sequential colouring of the vertex set ``P`` (bitset).

    Writes vertices to ``order[off:]`` grouped by colour class and the
    colour number of each to ``cols[off:]``.  Returns the vertex count.
    """
    W = P.shape[0]
    Q = P.copy()
    Qk = np.empty(W, np.uint64)
    cnt = 0
    k = 0
    start = 0
    while True:
        while start < W and Q[start] == 0:
            start += 1
        if start == W:
            break
        k += 1
        for w in range(start, W):
            Qk[w] = Q[w]
        for w in range(start, W):
            while Qk[w] != 0:
                x = Qk[w]
                low = x & (~x + np.uint64(1))
                v = w * 64 + _lowbit_index(low)
                Qk[w] ^= low
                Q[w] ^= low
                for u in range(w, W):
                    Qk[u] &= ~adj[v, u]
                order[off + cnt] = v
                cols[off + cnt] = k
                cnt += 1
    return cnt


@nb.njit(cache=True)
def _grow(buf, need):
    size = buf.shape[0]
    while size < need:
        size *= 2
    out = np.empty(size, buf.dtype)
    out[: buf.shape[0]] = buf
    return out


@nb.njit(cache=True)
def _max_clique(adj, P0, seed, incumbent, target, max_nodes, deadline, best_out):
    """Largest clique containing ``seed`` inside candidate set ``P0``.

    Only cliques larger than ``incumbent`` are recorded (into ``best_out``).
    Stops early once ``target`` vertices are reached.  Returns
    ``(best_size, nodes, status)``.
    """
    n = adj.shape[0]
    W = adj.shape[1]
    maxd = min(n, target) + 2
    P = np.zeros((maxd, W), np.uint64)
    pos = np.zeros(maxd, np.int64)
    base = np.zeros(maxd + 1, np.int64)
    order = np.empty(4 * n, np.int64)
    cols = np.empty(4 * n, np.int64)
    R = np.zeros(n + 1, np.int64)
    rsize = seed.shape[0]
    for i in range(rsize):
        R[i] = seed[i]
    best = incumbent
    if rsize > best:
        best = rsize
        for i in range(rsize):
            best_out[i] = R[i]

    nodes = 1
    depth = 0
    P[0, :] = P0
    cnt = _color_sort(P[0], adj, order, cols, 0)
    base[1] = cnt
    pos[0] = cnt - 1
    if cnt > 0 and cols[cnt - 1] == cnt:
        # candidate set is itself a clique
        if rsize + cnt > best:
            best = rsize + cnt
            for i in range(rsize):
                best_out[i] = R[i]
            for i in range(cnt):
                best_out[rsize + i] = order[i]
        pos[0] = -1

    while True:
        if pos[depth] < 0:
            if depth == 0:
                break
            depth -= 1
            rsize -= 1
            v = order[base[depth] + pos[depth]]
            P[depth, v >> 6] &= ~(np.uint64(1) << np.uint64(v & 63))
            pos[depth] -= 1
            continue
        i = base[depth] + pos[depth]
        if best >= target or rsize + cols[i] <= best:
            pos[depth] = -1
            continue
        v = order[i]
        R[rsize] = v
        rsize += 1
        empty = True
        for w in range(W):
            x = P[depth, w] & adj[v, w]
            P[depth + 1, w] = x
            if x != 0:
                empty = False
        if empty:
            if rsize > best:
                best = rsize
                for j in range(rsize):
                    best_out[j] = R[j]
            rsize -= 1
            P[depth, v >> 6] &= ~(np.uint64(1) << np.uint64(v & 63))
            pos[depth] -= 1
            continue
        if nodes >= max_nodes:
            return best, nodes, _EXHAUSTED
        if (nodes & 4095) == 0:
            with nb.objmode(now="float64"):
                now = time.monotonic()
            if now > deadline:
                return best, nodes, _EXHAUSTED
        nodes += 1
        depth += 1
        need = base[depth] + n
        if need > order.shape[0]:
            order = _grow(order, need)
            cols = _grow(cols, need)
        cnt = _color_sort(P[depth], adj, order, cols, base[depth])
        base[depth + 1] = base[depth] + cnt
        pos[depth] = cnt - 1
        if cols[base[depth] + cnt - 1] == cnt:
            if rsize + cnt > best:
                best = rsize + cnt
                for j in range(rsize):
                    best_out[j] = R[j]
                for j in range(cnt):
                    best_out[rsize + j] = order[base[depth] + j]
            pos[depth] = -1
    return best, nodes, _COMPLETE


# -- permutation group bookkeeping ----------------------------------------


@nb.njit(cache=True)
def _type_key(perm, M):
    """Integer key of the cycle type: sum of (M+1)**(len-1) over cycles."""
    seen = np.zeros(M, np.bool_)
    key = 0
    for i in range(M):
        if not seen[i]:
            length = 0
            j = i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            key += (M + 1) ** (length - 1)
    return key


@nb.njit(cache=True)
def _perm_type_keys(perms):
    n, M = perms.shape
    out = np.empty(n, np.int64)
    for j in range(n):
        out[j] = _type_key(perms[j], M)
    return out


@nb.njit(cache=True)
def _relation_types(perms, inverses, lut):
    """``T[i, j]`` = type id of ``perms[i]^-1 o perms[j]``."""
    n, M = perms.shape
    T = np.empty((n, n), np.int8)
    comp = np.empty(M, np.int64)
    for i in range(n):
        inv = inverses[i]
        for j in range(n):
            pj = perms[j]
            for x in range(M):
                comp[x] = inv[pj[x]]
            T[i, j] = lut[_type_key(comp, M)]
    return T


def _pack_rows(mask: np.ndarray) -> np.ndarray:
    n = mask.shape[0]
    words = (n + 63) // 64
    padded = np.zeros((n, words * 64), dtype=bool)
    padded[:, :n] = mask
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64).copy()


def _cycle_type(key: int, M: int) -> tuple[int, ...]:
    parts = []
    for length in range(M, 0, -1):
        count = key // (M + 1) ** (length - 1)
        key -= count * (M + 1) ** (length - 1)
        parts += [length] * count
    return tuple(parts)


@functools.lru_cache(maxsize=2)
def _search_space(M: int):
    perms = np.array(list(itertools.permutations(range(M))), dtype=np.int64)
    inverses = np.argsort(perms, axis=1)
    keys = _perm_type_keys(perms)
    uniq = np.unique(keys)
    lut = np.full((M + 1) ** M + 1, -1, dtype=np.int8)
    lut[uniq] = np.arange(len(uniq), dtype=np.int8)
    T = _relation_types(perms, inverses, lut)
    fixed_points = np.array([_cycle_type(int(k), M).count(1) for k in uniq])
    return perms, T, uniq, fixed_points


# -- public API ------------------------------------------------------------


def search_max_code(
    M: int,
    d: int,
    max_nodes: int | None = None,
    time_limit: float | None = None,
) -> SearchReport:
    """Largest permutation code of length ``M`` and minimum distance ``d``.

    Exact branch-and-bound maximum-clique search.  With no budget the
    result is optimal; if ``max_nodes`` or ``time_limit`` (seconds) runs
    out first, the best code found so far is returned with
    ``proven_optimal=False``.  Reaching the M!/(d-1)! bound proves
    optimality immediately.
    """
    bound = cardinality_bound(M, d)
    if M > MAX_EXACT_M:
        raise CapacityError(f"exact search supports M <= {MAX_EXACT_M}, got M={M}")
    start = time.monotonic()
    deadline = start + time_limit if time_limit is not None else np.inf
    node_cap = max_nodes if max_nodes is not None else np.iinfo(np.int64).max

    perms, T, type_keys, fixed_points = _search_space(M)
    n = len(perms)
    # pairs at distance >= d are those whose relation type has <= M-d fixed points
    edge_type_ok = (M - fixed_points) >= d
    neighbour_types = [int(t) for t in np.unique(T[0]) if edge_type_ok[t]]
    counts = {t: int(np.count_nonzero(T[0] == t)) for t in neighbour_types}
    type_order = sorted(neighbour_types, key=lambda t: (-counts[t], int(type_keys[t])))

    best_ids = np.zeros(n + 1, dtype=np.int64)
    best = 1
    nodes = 0
    finished = True
    for k, t in enumerate(type_order):
        if best >= bound:
            break
        allowed = np.isin(T, type_order[k:])
        adj = _pack_rows(allowed)
        rep = int(np.flatnonzero(T[0] == t)[0])
        cand = adj[0] & adj[rep]
        out = np.zeros(n + 1, dtype=np.int64)
        found, used, status = _max_clique(
            adj, cand, np.array([0, rep]), best, bound,
            max(node_cap - nodes, 1), deadline, out,
        )
        nodes += used
        if found > best:
            best = found
            best_ids = out
        if status == _EXHAUSTED:
            finished = False
            break

    ids = best_ids[:best] if best > 1 else np.array([0])
    words = [tuple(int(s) + 1 for s in perms[i]) for i in ids]
    code = CodeBook.from_words(words, sort=True)
    return SearchReport(
        best_code=code,
        proven_optimal=finished or best >= bound,
        nodes_explored=nodes,
        time_spent=time.monotonic() - start,
        M=M,
        d=d,
        bound=bound,
    )
