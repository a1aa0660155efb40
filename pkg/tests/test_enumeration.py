import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltwalk.enumeration import (
    EnumerationError,
    bridge_tables,
    enumerate_walks,
    partition_table,
    reference_enumerate,
    two_point_table,
)
from tiltwalk.graphs import EndFixedTree, OrientedTree112, ProductTreeZd, seal_ball
from tiltwalk.tables import mtp_violations, tilted_Z
from tiltwalk.weights import SAW, Anisotropic, AtMostTwice, PrimeGap, TreeSpan, WeaklySAW

MODELS = [EndFixedTree(3), EndFixedTree(4), OrientedTree112(), ProductTreeZd(3, 1), ProductTreeZd(3, 2)]
KERNEL_WEIGHTS = [SAW(), WeaklySAW(0.5), Anisotropic(1.0, 0.0), AtMostTwice()]


def same_counts(x, y):
    return x.shape == y.shape and all(int(a) == int(b) for a, b in zip(x.ravel(), y.ravel()))


def test_end_fixed_small_rows():
    t = partition_table(EndFixedTree(3), SAW(), 2)
    assert t.row(0) == {0: 1}
    assert t.row(1) == {1: 1, -1: 2}
    assert t.row(2) == {2: 1, 0: 1, -2: 4}
    assert t.totals() == [1, 3, 6]


def test_end_fixed_four_totals():
    t = partition_table(EndFixedTree(4), SAW(), 12)
    assert t.totals() == [1] + [4 * 3 ** (n - 1) for n in range(1, 13)]


def test_bridge_examples():
    b = bridge_tables(EndFixedTree(3), SAW(), 2)
    assert b.collapsed("a")[1][1] == 1
    assert b.collapsed("d")[1][1] == 2
    assert b.collapsed("h")[2][2] == 1
    assert b.collapsed("b")[0][0] == 1
    t = partition_table(EndFixedTree(3), SAW(), 2)
    for n in range(3):
        assert b.collapsed("b")[n][0] == sum(c for m, c in t.row(n).items() if m >= 0)


def test_reverse_descents_definition():
    # r[n][m]: min over positive times >= 0; n=2 walks ending at 0 or 2 that never go below 0
    b = bridge_tables(EndFixedTree(3), SAW(), 2)
    r = b.collapsed("r")
    assert r[2][2] == 1  # up, up
    assert r[2][0] == 1  # up, then down to the other child of the parent


def test_tilted_Z_examples():
    t = partition_table(EndFixedTree(3), SAW(), 2)
    for lam in (0.0, 0.3, 0.5, 1.0):
        assert tilted_Z(t, lam)[1] == pytest.approx(2**lam + 2 ** (1 - lam))
    assert tilted_Z(t, 0.5)[2] == pytest.approx(5.0)
    assert list(tilted_Z(t, 0.0)) == [1, 3, 6]


def test_two_point_examples():
    tp = two_point_table(EndFixedTree(3), SAW(), 6)
    z = 0.37
    G = tp.values(z)
    for g, d in zip(G, tp.dist):
        assert g == pytest.approx(z**d, rel=1e-14)
    tp = two_point_table(ProductTreeZd(3, 1), SAW(), 4)
    root = np.nonzero(tp.dist == 0)[0]
    assert len(root) == 1 and tp.parts[root[0], 0] == 1
    up = np.nonzero((tp.dist == 1) & (tp.height == 1))[0]
    assert len(up) == 1 and tp.parts[up[0], 1] == 1


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.descriptor())
@pytest.mark.parametrize("w", KERNEL_WEIGHTS, ids=lambda w: w.descriptor())
def test_backends_agree_with_reference(model, w):
    n = 5
    ref = reference_enumerate(model, w, n)
    addr = enumerate_walks(model, w, n, backend="address")
    ball = enumerate_walks(seal_ball(model, n), w, n, backend="ball")
    for res in (addr, ball):
        assert same_counts(res.table.counts, ref.table.counts)
        for name in ("a", "d", "h", "r", "b"):
            assert same_counts(getattr(res.bridges, name), getattr(ref.bridges, name)), name
        assert same_counts(res.joint, ref.joint)


@pytest.mark.parametrize("w", [PrimeGap(), TreeSpan()], ids=lambda w: w.descriptor())
def test_kernel_less_weights_use_reference(w):
    res = enumerate_walks(EndFixedTree(3), w, 5)
    ref = reference_enumerate(EndFixedTree(3), w, 5)
    assert same_counts(res.table.counts, ref.table.counts)


def test_workers_identical():
    one = enumerate_walks(ProductTreeZd(3, 1), SAW(), 8, workers=1)
    two = enumerate_walks(ProductTreeZd(3, 1), SAW(), 8, workers=2, split_depth=2)
    assert same_counts(one.table.counts, two.table.counts)
    assert same_counts(one.bridges.a, two.bridges.a)
    assert same_counts(one.joint, two.joint)


@settings(max_examples=8, deadline=None)
@given(depth=st.integers(1, 4))
def test_split_depth_invariance(depth):
    base = enumerate_walks(OrientedTree112(), WeaklySAW(0.5), 7, split_depth=1)
    res = enumerate_walks(OrientedTree112(), WeaklySAW(0.5), 7, split_depth=depth)
    assert same_counts(base.table.counts, res.table.counts)


def test_weakly_saw_bins_exact():
    t = partition_table(ProductTreeZd(3, 1), WeaklySAW(0.5), 4)
    assert t.tags > 1
    # the g-independent tag-summed counts are all nearest-neighbour walks
    assert [int(t.counts[n].sum()) for n in range(5)] == [5**n for n in range(5)]
    Z = tilted_Z(t, 0.0)
    assert Z[1] == pytest.approx(5.0)
    assert Z[2] == pytest.approx(20 + 5 * math.exp(-0.5))


def test_overflow_guard():
    with pytest.raises(EnumerationError):
        enumerate_walks(ProductTreeZd(3, 2), SAW(), 40)


def test_bubble_degree_limit():
    tp = two_point_table(EndFixedTree(3), SAW(), 3)
    with pytest.raises(ValueError):
        tp.bubble_coefficients(7)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.descriptor())
@pytest.mark.parametrize("w", KERNEL_WEIGHTS, ids=lambda w: w.descriptor())
def test_mtp_exact_on_every_table(model, w):
    res = enumerate_walks(model, w, 7)
    assert mtp_violations(res.table) == []
    assert res.bridges.reversal_violations() == []
