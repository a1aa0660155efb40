"""Transfer-matrix tables for self-avoiding walks on the tree models.

On a tree a self-avoiding walk is a non-backtracking path, so the number of
admissible next moves depends only on the class of the previous move.  Each
model is a small automaton whose transitions carry (height increment,
multiplicity, next class); walks are counted by a dynamic program over
(class, height), restricted to a height window for bridges and half-space
walks.  Counts are exact Python integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .graphs import EndFixedTree, GraphModel, OrientedTree112
from .tables import BridgeTables, HeightResolvedTable, TwoPointTable, _zeros, half_space_from_counts
from .weights import SAW, WeightFunction


class TransferError(Exception):
    pass


@dataclass(frozen=True)
class MoveAutomaton:
    """``start`` and ``moves[c]`` list ``(increment, multiplicity, next_class)``."""

    classes: tuple[str, ...]
    start: tuple[tuple[int, int, int], ...]
    moves: tuple[tuple[tuple[int, int, int], ...], ...]


def automaton(model: GraphModel) -> MoveAutomaton:
    if isinstance(model, EndFixedTree):
        k = model.k
        up, down = 0, 1
        return MoveAutomaton(
            classes=("up", "down"),
            start=((1, 1, up), (-1, k - 1, down)),
            moves=(
                ((1, 1, up), (-1, k - 2, down)),
                ((-1, k - 1, down),),
            ),
        )
    if isinstance(model, OrientedTree112):
        out, inn, flat = 0, 1, 2
        return MoveAutomaton(
            classes=("out", "in", "flat"),
            start=((1, 1, out), (-1, 2, inn), (0, 1, flat)),
            moves=(
                ((1, 1, out), (-1, 1, inn), (0, 1, flat)),
                ((-1, 2, inn), (0, 1, flat)),
                ((1, 1, out), (-1, 2, inn)),
            ),
        )
    raise TransferError(f"no transfer automaton for {model.descriptor()}")


def _check(model: GraphModel, w: WeightFunction | None) -> MoveAutomaton:
    if w is not None and not isinstance(w, SAW):
        raise TransferError("the transfer path supports the self-avoiding walk weight only")
    return automaton(model)


def window_rows(model: GraphModel, n_max: int, lo: int | None = None, hi: int | None = None) -> Iterator[np.ndarray]:
    """Yield, for ``n = 0..n_max``, the count of length-``n`` walks ending at each height.

    Heights at positive times are confined to ``[lo, hi]`` (``None`` means
    unbounded).  Row ``n`` is an object array indexed by ``height - L`` with
    ``L = min(lo, 0)`` (or ``-n_max``) and length covering ``[L, max(hi, 0)]``.
    """
    auto = _check(model, None)
    L = -n_max if lo is None else min(lo, 0)
    U = n_max if hi is None else max(hi, 0)
    lo_eff = L if lo is None else lo
    hi_eff = U if hi is None else hi
    size = U - L + 1
    row = _zeros(size)
    row[-L] = 1
    yield row
    if n_max == 0:
        return
    mask = np.zeros(size, dtype=bool)
    mask[lo_eff - L : hi_eff - L + 1] = True

    def shifted(vec, inc, mult):
        out = _zeros(size)
        if inc > 0:
            out[inc:] = vec[:-inc] * mult
        elif inc < 0:
            out[:inc] = vec[-inc:] * mult
        else:
            out[:] = vec * mult
        out[~mask] = 0
        return out

    state = [_zeros(size) for _ in auto.classes]
    start = _zeros(size)
    start[-L] = 1
    for inc, mult, nxt in auto.start:
        state[nxt] = state[nxt] + shifted(start, inc, mult)
    yield sum(state)
    for _ in range(2, n_max + 1):
        new = [_zeros(size) for _ in auto.classes]
        for c, moves in enumerate(auto.moves):
            if not state[c].any():
                continue
            for inc, mult, nxt in moves:
                new[nxt] = new[nxt] + shifted(state[c], inc, mult)
        state = new
        yield sum(state)


def iter_transfer_rows(model: GraphModel, n_max: int) -> Iterator[tuple[int, dict[int, int]]]:
    """Stream ``(n, {height: count})`` without keeping earlier rows."""
    for n, row in enumerate(window_rows(model, n_max)):
        yield n, {m - n_max: int(x) for m, x in enumerate(row) if x != 0}


def transfer_totals(model: GraphModel, n_max: int) -> list[int]:
    """Exact ``sum_m N[n][m]`` for ``n = 0..n_max`` via the streamed recursion."""
    return [int(sum(row.tolist())) for row in window_rows(model, n_max)]


def _meta(model: GraphModel, n_max: int) -> dict:
    return dict(model=model.descriptor(), weight="saw", n_max=n_max, base=model.lattice.base,
                t0_units=model.lattice.t0_units, indicator=True, bin_weights=np.ones((n_max + 1, 1)))


def tree_transfer_tables(model: GraphModel, n_max: int, w: WeightFunction | None = None) -> tuple[HeightResolvedTable, BridgeTables]:
    """Tables identical to DFS enumeration of self-avoiding walks on a tree model."""
    _check(model, w)
    N = _zeros((n_max + 1, 2 * n_max + 1, 1))
    for n, row in enumerate(window_rows(model, n_max)):
        N[n, :, 0] = row
    lv = n_max + 1
    a = _zeros((n_max + 1, lv, 1))
    d = _zeros((n_max + 1, lv, 1))
    for m in range(lv):
        # up-bridges to height m stay in [0, m]; down-bridges to -m stay in [-m, 0]
        for n, row in enumerate(window_rows(model, n_max, 0, m)):
            a[n, m, 0] = row[m]
        for n, row in enumerate(window_rows(model, n_max, -m, 0)):
            d[n, m, 0] = row[0]
    h = _zeros((n_max + 1, lv, 1))
    r = _zeros((n_max + 1, lv, 1))
    for n, row in enumerate(window_rows(model, n_max, 1, None)):
        h[n, :, 0] = row[: lv]
    for n, row in enumerate(window_rows(model, n_max, 0, None)):
        r[n, :, 0] = row[: lv]
    meta = _meta(model, n_max)
    table = HeightResolvedTable(counts=N, **meta)
    bridges = BridgeTables(a=a, d=d, h=h, r=r, b=half_space_from_counts(N, n_max, model.lattice.t0_units), **meta)
    return table, bridges


def tree_two_point(model: GraphModel, n_max: int) -> TwoPointTable:
    """Two-point classes on a tree: the only self-avoiding walk to ``x`` is the geodesic.

    Vertices at distance ``n`` and height ``m`` number ``N[n][m]`` and each has
    ``G(z; x) = z**n``.
    """
    _check(model, None)
    mult, height, dist, parts = [], [], [], []
    for n, row in iter_transfer_rows(model, n_max):
        for m, c in sorted(row.items()):
            mult.append(float(c))
            height.append(m)
            dist.append(n)
            e = np.zeros(n_max + 1)
            e[n] = 1.0
            parts.append(e)
    return TwoPointTable(model=model.descriptor(), weight="saw", n_max=n_max, base=model.lattice.base,
                         mult=np.array(mult), height=np.array(height, dtype=np.int64),
                         dist=np.array(dist, dtype=np.int64), parts=np.array(parts))
