"""Exact enumeration of weighted walks from the root of a sealed ball.

The hot loop is an iterative depth-first search compiled with numba.  One
pass records every table: endpoint heights, bridges, half-space walks,
reverse descents, a (height, distance) histogram and optionally the
two-point function.  Work is split by path prefixes of fixed depth; each
prefix is enumerated independently and the integer accumulators are summed
in prefix order, so results do not depend on the number of workers.

``reference_enumerate`` is a slow pure-Python search driven by the weight
contract.  It is the cross-check for the kernel and handles weights that
have no kernel mode.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .graphs import EndFixedTree, GraphModel, OrientedTree112, ProductTreeZd, SealedBall
from .tables import (
    BridgeTables,
    HeightResolvedTable,
    TwoPointTable,
    as_exact,
    bin_weight_matrix,
    half_space_from_counts,
)
from .weights import WeightFunction


class EnumerationError(Exception):
    pass


@numba.njit(cache=True)
def _addr_try(mode, c, lattice_slot):
    """Tag increment for stepping onto a vertex visited ``c`` times, or -1 if the weight vanishes."""
    if mode == 0:
        return -1 if c > 0 else 0
    if mode == 1:
        return c
    if mode == 2:
        return -1 if c > 0 else lattice_slot
    return -1 if c >= 2 else 0


@numba.njit(cache=True)
def _record(n, h, t, dval, v, mxn, mnn, mnposn, N, A, D, H, R, JD, G, want_g, off):
    N[n, h + off, t] += 1
    JD[n, h + off, dval, t] += 1
    if want_g:
        G[v, n, t] += 1
    if mnn >= 0 and h >= mxn:
        A[n, h, t] += 1
    if mxn <= 0 and h <= mnn:
        D[n, -h, t] += 1
    if n == 0 or mnposn >= 1:
        H[n, h, t] += 1
    if n == 0 or mnposn >= 0:
        R[n, h, t] += 1


@numba.njit(cache=True)
def _alloc(n_max, tags, nv, want_g):
    N = np.zeros((n_max + 1, 2 * n_max + 1, tags), np.int64)
    A = np.zeros((n_max + 1, n_max + 1, tags), np.int64)
    D = np.zeros((n_max + 1, n_max + 1, tags), np.int64)
    H = np.zeros((n_max + 1, n_max + 1, tags), np.int64)
    R = np.zeros((n_max + 1, n_max + 1, tags), np.int64)
    JD = np.zeros((n_max + 1, 2 * n_max + 1, n_max + 1, tags), np.int64)
    if want_g:
        G = np.zeros((nv, n_max + 1, tags), np.int64)
    else:
        G = np.zeros((1, 1, 1), np.int64)
    return N, A, D, H, R, JD, G


@numba.njit(cache=True)
def _dfs_kernel(nbr, height, dist, lattice, mode, n_max, prefix, record_from, tags, want_g):
    """Depth-first search over a sealed ball given as a neighbor array."""
    nv, deg = nbr.shape
    N, A, D, H, R, JD, G = _alloc(n_max, tags, nv, want_g)

    visits = np.zeros(nv, np.int32)
    path = np.zeros(n_max + 1, np.int64)
    slot = np.zeros(n_max + 1, np.int64)
    hgt = np.zeros(n_max + 1, np.int64)
    tag = np.zeros(n_max + 1, np.int64)
    mx = np.zeros(n_max + 1, np.int64)  # max height over all times
    mn = np.zeros(n_max + 1, np.int64)  # min height over all times
    mnpos = np.zeros(n_max + 1, np.int64)  # min height over positive times

    path[0] = 0
    visits[0] = 1
    mnpos[0] = np.int64(1) << 40
    depth = 0
    # replay the prefix; it is assumed valid for the weight
    for i in range(1, prefix.shape[0]):
        s = prefix[i]
        w = nbr[path[depth], s]
        dt = _addr_try(mode, visits[w], lattice[s])
        if w < 0 or dt < 0:
            return N, A, D, H, R, JD, G
        depth += 1
        path[depth] = w
        visits[w] += 1
        hgt[depth] = height[w]
        tag[depth] = tag[depth - 1] + dt
        mx[depth] = max(mx[depth - 1], hgt[depth])
        mn[depth] = min(mn[depth - 1], hgt[depth])
        mnpos[depth] = min(mnpos[depth - 1], hgt[depth])
    base = depth
    entering = True
    while depth >= base:
        if entering:
            entering = False
            if depth >= record_from:
                v = path[depth]
                _record(depth, hgt[depth], tag[depth], dist[v], v, mx[depth], mn[depth], mnpos[depth],
                        N, A, D, H, R, JD, G, want_g, n_max)
            if depth == n_max:
                visits[path[depth]] -= 1
                depth -= 1
                continue
            slot[depth] = 0
        s = slot[depth]
        if s == deg:
            visits[path[depth]] -= 1
            depth -= 1
            continue
        slot[depth] = s + 1
        w = nbr[path[depth], s]
        if w < 0:
            continue
        dt = _addr_try(mode, visits[w], lattice[s])
        if dt < 0:
            continue
        d1 = depth + 1
        path[d1] = w
        visits[w] += 1
        hgt[d1] = height[w]
        tag[d1] = tag[depth] + dt
        mx[d1] = max(mx[depth], hgt[d1])
        mn[d1] = min(mn[depth], hgt[d1])
        mnpos[d1] = min(mnpos[depth], hgt[d1])
        depth = d1
        entering = True
    return N, A, D, H, R, JD, G


# address kinds for the implicit-ball kernel
KIND_END_FIXED = 0
KIND_ORIENTED = 1
KIND_PRODUCT = 2

_OR_BACK = np.array([1, 0, 0, 3], np.int64)
_OR_INC = np.array([1, -1, -1, 0], np.int64)


@numba.njit(cache=True)
def _addr_step(kind, k, src, s, dst, or_back, or_inc):
    """Write the address reached from ``src`` through slot ``s`` into ``dst``."""
    for i in range(src.shape[0]):
        dst[i] = src[i]
    if kind == KIND_ORIENTED:
        length = src[0]
        code = src[1]
        if length > 0 and or_back[code & 3] == s:
            dst[0] = length - 1
            dst[1] = code >> 2
            dst[2] = src[2] - or_inc[code & 3]
        else:
            dst[0] = length + 1
            dst[1] = (code << 2) | s
            dst[2] = src[2] + or_inc[s]
        return
    if s >= k:
        j = (s - k) // 2
        dst[3 + j] += -1 if (s - k) % 2 else 1
        return
    b = k - 1
    u = src[0]
    length = src[1]
    code = src[2]
    if s == 0:
        if length > 0:
            dst[1] = length - 1
            dst[2] = code // b
        else:
            dst[0] = u + 1
    else:
        c = s - 1
        if length == 0 and u > 0 and c == 0:
            dst[0] = u - 1
        else:
            dst[1] = length + 1
            dst[2] = code * b + c


@numba.njit(cache=True)
def _addr_height(kind, a):
    if kind == KIND_ORIENTED:
        return a[2]
    return a[0] - a[1]


@numba.njit(cache=True)
def _addr_dist(kind, a):
    if kind == KIND_ORIENTED:
        return a[0]
    d = a[0] + a[1]
    for i in range(3, a.shape[0]):
        d += abs(a[i])
    return d


@numba.njit(cache=True)
def _addr_visits(paddr, depth, width):
    """Number of times the address in row ``depth`` occurs in rows ``0..depth-1``."""
    c = 0
    for i in range(depth):
        same = True
        for j in range(width):
            if paddr[i, j] != paddr[depth, j]:
                same = False
                break
        if same:
            c += 1
    return c


@numba.njit(cache=True)
def _addr_kernel(kind, k, width, deg, lattice, mode, n_max, prefix, record_from, tags, or_back, or_inc):
    """Depth-first search on the implicit ball, stepping by address arithmetic.

    Visits are counted by scanning the current path, which is cheap at the
    path lengths exact enumeration can reach.
    """
    N, A, D, H, R, JD, G = _alloc(n_max, tags, 1, False)
    paddr = np.zeros((n_max + 2, width), np.int64)
    slot = np.zeros(n_max + 1, np.int64)
    hgt = np.zeros(n_max + 1, np.int64)
    tag = np.zeros(n_max + 1, np.int64)
    mx = np.zeros(n_max + 1, np.int64)
    mn = np.zeros(n_max + 1, np.int64)
    mnpos = np.zeros(n_max + 1, np.int64)
    mnpos[0] = np.int64(1) << 40
    depth = 0
    for i in range(1, prefix.shape[0]):
        s = prefix[i]
        _addr_step(kind, k, paddr[depth], s, paddr[depth + 1], or_back, or_inc)
        dt = _addr_try(mode, _addr_visits(paddr, depth + 1, width), lattice[s])
        if dt < 0:
            return N, A, D, H, R, JD, G
        depth += 1
        hgt[depth] = _addr_height(kind, paddr[depth])
        tag[depth] = tag[depth - 1] + dt
        mx[depth] = max(mx[depth - 1], hgt[depth])
        mn[depth] = min(mn[depth - 1], hgt[depth])
        mnpos[depth] = min(mnpos[depth - 1], hgt[depth])
    base = depth
    entering = True
    while depth >= base:
        if entering:
            entering = False
            if depth >= record_from:
                _record(depth, hgt[depth], tag[depth], _addr_dist(kind, paddr[depth]), 0, mx[depth], mn[depth],
                        mnpos[depth], N, A, D, H, R, JD, G, False, n_max)
            if depth == n_max:
                depth -= 1
                continue
            slot[depth] = 0
        s = slot[depth]
        if s == deg:
            depth -= 1
            continue
        slot[depth] = s + 1
        d1 = depth + 1
        _addr_step(kind, k, paddr[depth], s, paddr[d1], or_back, or_inc)
        dt = _addr_try(mode, _addr_visits(paddr, d1, width), lattice[s])
        if dt < 0:
            continue
        hgt[d1] = _addr_height(kind, paddr[d1])
        tag[d1] = tag[depth] + dt
        mx[d1] = max(mx[depth], hgt[d1])
        mn[d1] = min(mn[depth], hgt[d1])
        mnpos[d1] = min(mnpos[depth], hgt[d1])
        depth = d1
        entering = True
    return N, A, D, H, R, JD, G


@dataclass
class EnumerationResult:
    """All tables from one enumeration pass."""

    table: HeightResolvedTable
    bridges: BridgeTables
    joint: np.ndarray  # [n, m + offset, dist, tag] exact counts
    two_point: TwoPointTable | None
    workers: int


def _prefixes(model: GraphModel, w: WeightFunction, depth: int) -> list[np.ndarray]:
    """Slot sequences of all nonzero-weight paths of exactly ``depth`` steps, in slot order."""
    out = []
    labels = [s.label for s in model.slots]

    def rec(state, slots):
        if len(slots) == depth:
            out.append(np.array([-1] + slots, dtype=np.int64))
            return
        for s, (u, _, _) in enumerate(model.neighbors(state.last)):
            new = state.copy()
            if w.advance(new, u, labels[s]) == 0:
                continue
            rec(new, slots + [s])

    rec(w.init_state(0), [])
    return out


def _address_kind(model: GraphModel) -> tuple[int, int, int]:
    if isinstance(model, ProductTreeZd):
        return KIND_PRODUCT, model.k, 3 + model.d
    if isinstance(model, EndFixedTree):
        return KIND_END_FIXED, model.k, 3
    if isinstance(model, OrientedTree112):
        return KIND_ORIENTED, 4, 3
    raise EnumerationError(f"no address kernel for {model.descriptor()}")


def _run_chunk(args):
    backend, fixed, prefixes, record_from = args
    acc = None
    for p in prefixes:
        if backend == "ball":
            nbr, height, dist, lattice, mode, n_max, tags, want_g = fixed
            res = _dfs_kernel(nbr, height, dist, lattice, mode, n_max, p, record_from, tags, want_g)
        else:
            kind, k, width, deg, lattice, mode, n_max, tags = fixed
            res = _addr_kernel(kind, k, width, deg, lattice, mode, n_max, p, record_from, tags, _OR_BACK, _OR_INC)
        if acc is None:
            acc = [r.copy() for r in res]
        else:
            for x, r in zip(acc, res):
                x += r
    return acc


def _check_overflow(deg: int, n_max: int) -> None:
    if n_max * math.log2(max(deg, 2)) >= 62:
        raise EnumerationError(
            f"deg**n_max = {deg}**{n_max} may overflow 64-bit accumulators; lower n_max"
        )


def enumerate_walks(
    model_or_ball,
    w: WeightFunction,
    n_max: int,
    *,
    two_point: bool = False,
    workers: int = 1,
    split_depth: int = 3,
    backend: str = "auto",
) -> EnumerationResult:
    """Enumerate all walks of length ``<= n_max`` from the root and fill every table.

    ``backend="address"`` steps by address arithmetic and never interns the
    ball; ``"ball"`` runs on a sealed ball (sealed here to radius ``n_max``
    when a bare model is given) and is required for two-point tables.
    ``"auto"`` uses a given sealed ball, otherwise the address kernel unless
    two-point tables are requested.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if backend not in ("auto", "ball", "address"):
        raise ValueError(f"unknown backend {backend!r}")
    given_ball = isinstance(model_or_ball, SealedBall)
    if given_ball and model_or_ball.radius < n_max:
        raise EnumerationError(f"sealed ball radius {model_or_ball.radius} is smaller than n_max = {n_max}")
    model = model_or_ball.model if given_ball else model_or_ball
    if not isinstance(model, GraphModel):
        raise TypeError("expected a GraphModel or SealedBall")
    if backend == "auto":
        backend = "ball" if (given_ball or two_point) else "address"
    if two_point and backend != "ball":
        raise EnumerationError("two-point tables need the sealed-ball backend")
    if w.kernel_mode is None:
        return reference_enumerate(model_or_ball, w, n_max, two_point=two_point)
    if model.lattice.t0_units != 1:
        raise EnumerationError("the kernels assume unit height increments")
    deg = model.degree
    _check_overflow(deg, n_max)
    tags = w.tag_bins(n_max)
    if two_point and tags > n_max + 1:
        raise EnumerationError(f"two-point tables are not supported for {w.descriptor()}")
    lattice = model.lattice_slot_mask
    mode = w.kernel_mode

    ball = None
    if backend == "ball":
        ball = model_or_ball if given_ball else model.seal(n_max)
        nbr = np.ascontiguousarray(ball.nbr, dtype=np.int64)
        nv = nbr.shape[0]

        def fixed(depth):
            return (nbr, np.ascontiguousarray(ball.height, dtype=np.int64),
                    np.ascontiguousarray(np.maximum(ball.dist, 0), dtype=np.int64),
                    lattice, mode, depth, tags, two_point)
    else:
        kind, k, width = _address_kind(model)
        nv = 1

        def fixed(depth):
            return (kind, k, width, deg, lattice, mode, depth, tags)

    split = min(split_depth, n_max)
    root = [np.array([-1], np.int64)]
    parts = []
    if split > 0:
        # all paths shorter than the split depth in one pass
        shallow = _run_chunk((backend, fixed(split - 1), root, 0))
        parts.append(_embed(shallow, n_max, tags, two_point, nv))
    prefixes = _prefixes(model, w, split)
    tasks = [(backend, fixed(n_max), prefixes[i::workers], split) for i in range(max(workers, 1))]
    tasks = [t for t in tasks if t[2]]
    if workers <= 1 or len(tasks) < 2:
        parts += [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts += list(pool.map(_run_chunk, tasks))
    parts = [p for p in parts if p is not None]
    acc = [p.copy() for p in parts[0]]
    for p in parts[1:]:
        for x, r in zip(acc, p):
            x += r
    N, A, D, H, R, JD, G = acc
    return _assemble(model, w, n_max, N, A, D, H, R, JD, G if two_point else None, ball, workers)


def _embed(res, n_max, tags, want_g, nv):
    """Pad the tables of a shallower run to ``n_max``."""
    N, A, D, H, R, JD, G = res
    s = N.shape[0] - 1
    N2 = np.zeros((n_max + 1, 2 * n_max + 1, tags), np.int64)
    N2[: s + 1, n_max - s : n_max + s + 1] = N
    out = [N2]
    for X in (A, D, H, R):
        Y = np.zeros((n_max + 1, n_max + 1, tags), np.int64)
        Y[: s + 1, : s + 1] = X
        out.append(Y)
    JD2 = np.zeros((n_max + 1, 2 * n_max + 1, n_max + 1, tags), np.int64)
    JD2[: s + 1, n_max - s : n_max + s + 1, : s + 1] = JD
    out.append(JD2)
    if want_g:
        G2 = np.zeros((nv, n_max + 1, tags), np.int64)
        G2[:, : s + 1] = G
    else:
        G2 = G
    out.append(G2)
    return out


def _assemble(model, w, n_max, N, A, D, H, R, JD, G, ball, workers) -> EnumerationResult:
    tags = N.shape[2]
    desc_w = w.descriptor()
    bw = bin_weight_matrix(desc_w, n_max, tags)
    indicator = w.value_class == "indicator"
    common = dict(model=model.descriptor(), weight=desc_w, n_max=n_max, base=model.lattice.base,
                  t0_units=model.lattice.t0_units, indicator=indicator, bin_weights=bw)
    Nx = as_exact(N)
    table = HeightResolvedTable(counts=Nx, **common)
    bridges = BridgeTables(a=as_exact(A), d=as_exact(D), h=as_exact(H), r=as_exact(R),
                           b=half_space_from_counts(Nx, n_max, model.lattice.t0_units), **common)
    tp = None
    if G is not None:
        weighted = np.einsum("vnt,nt->vn", G.astype(float), bw)
        keep = np.nonzero(weighted.any(axis=1))[0]
        tp = TwoPointTable(
            model=model.descriptor(), weight=desc_w, n_max=n_max, base=model.lattice.base,
            mult=np.ones(len(keep)), height=np.asarray(ball.height)[keep].astype(np.int64),
            dist=np.asarray(ball.dist)[keep].astype(np.int64), parts=weighted[keep],
        )
    return EnumerationResult(table, bridges, JD.copy(), tp, workers)


def partition_table(model_or_ball, w: WeightFunction, n_max: int, **kw) -> HeightResolvedTable:
    return enumerate_walks(model_or_ball, w, n_max, **kw).table


def bridge_tables(model_or_ball, w: WeightFunction, n_max: int, **kw) -> BridgeTables:
    return enumerate_walks(model_or_ball, w, n_max, **kw).bridges


def two_point_table(model_or_ball, w: WeightFunction, n_max: int, **kw) -> TwoPointTable:
    return enumerate_walks(model_or_ball, w, n_max, two_point=True, **kw).two_point


def reference_enumerate(model_or_ball, w: WeightFunction, n_max: int, *, two_point: bool = False) -> EnumerationResult:
    """Pure-Python enumeration through ``WeightFunction.advance``; slow, for checks."""
    if isinstance(model_or_ball, SealedBall):
        if model_or_ball.radius < n_max:
            raise EnumerationError(f"sealed ball radius {model_or_ball.radius} is smaller than n_max = {n_max}")
        ball = model_or_ball
    else:
        ball = model_or_ball.seal(n_max)
    model = ball.model
    tags = w.tag_bins(n_max)
    off = n_max
    N = np.zeros((n_max + 1, 2 * n_max + 1, tags), np.int64)
    A = np.zeros((n_max + 1, n_max + 1, tags), np.int64)
    D = np.zeros_like(A)
    H = np.zeros_like(A)
    R = np.zeros_like(A)
    JD = np.zeros((n_max + 1, 2 * n_max + 1, n_max + 1, tags), np.int64)
    G = {} if two_point else None
    nbr = ball.nbr
    hts = ball.height
    labels = [s.label for s in model.slots]

    def visit(state, hs):
        n = state.n
        h = hs[-1]
        t = state.tag
        v = state.last
        N[n, h + off, t] += 1
        JD[n, h + off, ball.dist[v], t] += 1
        if G is not None:
            G.setdefault(v, np.zeros((n_max + 1, tags), np.int64))[n, t] += 1
        if min(hs) >= 0 and h >= max(hs):
            A[n, h, t] += 1
        if max(hs) <= 0 and h <= min(hs):
            D[n, -h, t] += 1
        if n == 0 or min(hs[1:]) >= 1:
            H[n, h, t] += 1
        if n == 0 or min(hs[1:]) >= 0:
            R[n, h, t] += 1
        if n == n_max:
            return
        for s, u in enumerate(nbr[v]):
            u = int(u)
            if u < 0:
                continue
            new = state.copy()
            if w.advance(new, u, labels[s]) == 0:
                continue
            visit(new, hs + [int(hts[u])])

    visit(w.init_state(0), [0])
    Gm = None
    if G is not None:
        Gm = np.zeros((nbr.shape[0], n_max + 1, tags), np.int64)
        for v, arr in G.items():
            Gm[v] = arr
    return _assemble(model, w, n_max, N, A, D, H, R, JD, Gm, ball, 1)
