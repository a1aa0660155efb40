import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltwalk.graphs import (
    BallSizeError,
    EndFixedTree,
    OrientedTree112,
    ProductTreeZd,
    UnknownVertexError,
    is_tree,
    parse_model,
    seal_ball,
)

MODELS = [EndFixedTree(3), EndFixedTree(4), OrientedTree112(), ProductTreeZd(3, 1), ProductTreeZd(3, 2)]


def random_vertex(model, slots):
    v = 0
    for s in slots:
        v = model.neighbors(v)[s % model.degree][0]
    return v


def test_end_fixed_root_neighbors():
    m = EndFixedTree(3)
    nb = m.neighbors(0)
    assert [(inc, lab) for _, inc, lab in nb] == [(1, "up"), (-1, "down-0"), (-1, "down-1")]
    assert len({v for v, _, _ in nb}) == 3


def test_oriented_root_increments():
    assert sorted(inc for _, inc, _ in OrientedTree112().neighbors(0)) == [-1, -1, 0, 1]


def test_product_root_neighbors():
    nb = ProductTreeZd(3, 1).neighbors(0)
    assert len(nb) == 5
    assert sorted(inc for _, inc, _ in nb) == [-1, -1, 0, 0, 1]


def test_modular_ratio_examples():
    m = EndFixedTree(3)
    parent = m.neighbors(0)[0][0]
    assert m.modular_ratio(0, 0) == 1
    assert m.modular_ratio(0, parent) == pytest.approx(2.0)
    o = OrientedTree112()
    head = next(v for v, inc, _ in o.neighbors(0) if inc == 1)
    assert o.modular_ratio(0, head) == pytest.approx(2.0)


def test_graph_distance_examples():
    m = EndFixedTree(3)
    child = m.neighbors(0)[1][0]
    grandchild = m.neighbors(child)[1][0]
    assert m.graph_distance(0, 0) == 0
    for v, _, _ in m.neighbors(0):
        assert m.graph_distance(0, v) == 1
    assert m.graph_distance(0, grandchild) == 2


def test_ball_sizes():
    assert seal_ball(EndFixedTree(3), 2).num_vertices == 10
    assert seal_ball(EndFixedTree(3), 0).num_vertices == 1
    assert seal_ball(ProductTreeZd(3, 1), 1).num_vertices == 6


def test_ball_size_guard():
    with pytest.raises(BallSizeError):
        seal_ball(EndFixedTree(4), 20, max_vertices=1000)


def test_unknown_vertex():
    with pytest.raises(UnknownVertexError):
        EndFixedTree(3).neighbors(10**9)


@pytest.mark.parametrize("text,kind", [
    ("end-fixed-tree:k=4", EndFixedTree),
    ("oriented-tree-112", OrientedTree112),
    ("product-tree-zd:k=3,d=2", ProductTreeZd),
])
def test_parse_model_roundtrip(text, kind):
    m = parse_model(text)
    assert isinstance(m, kind)
    assert parse_model(m.descriptor()).descriptor() == m.descriptor()


@pytest.mark.parametrize("bad", ["", "torus", "end-fixed-tree:q=3", "end-fixed-tree:k=x", "end-fixed-tree:k"])
def test_parse_model_rejects(bad):
    with pytest.raises(ValueError):
        parse_model(bad)


def test_is_tree():
    assert is_tree(EndFixedTree(3)) and is_tree(OrientedTree112())
    assert not is_tree(ProductTreeZd(3, 1))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.descriptor())
@settings(max_examples=60, deadline=None)
@given(path=st.lists(st.integers(0, 10), max_size=8))
def test_neighbor_symmetry(model, path):
    v = random_vertex(model, path)
    for u, inc, _ in model.neighbors(v):
        back = [(x, i) for x, i, _ in model.neighbors(u) if x == v]
        assert back and back[0][1] == -inc


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.descriptor())
@settings(max_examples=60, deadline=None)
@given(a=st.lists(st.integers(0, 10), max_size=6), b=st.lists(st.integers(0, 10), max_size=6),
       c=st.lists(st.integers(0, 10), max_size=6))
def test_modular_cocycle(model, a, b, c):
    x, y, z = (random_vertex(model, p) for p in (a, b, c))
    assert model.modular_ratio_units(x, y) + model.modular_ratio_units(y, z) == model.modular_ratio_units(x, z)
    assert model.modular_ratio(x, z) == pytest.approx(model.modular_ratio(x, y) * model.modular_ratio(y, z))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.descriptor())
@settings(max_examples=40, deadline=None)
@given(path=st.lists(st.integers(0, 10), max_size=8))
def test_distance_consistent_with_addresses(model, path):
    v = random_vertex(model, path)
    d = model.graph_distance(0, v)
    assert d == model.address_distance(model.address(v))
    assert d <= len(path)
    assert abs(model.height(v)) <= d


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.descriptor())
def test_sealed_ball_matches_model(model):
    ball = seal_ball(model, 3)
    members = [v for v in range(len(ball.dist)) if ball.dist[v] >= 0]
    assert len(members) == ball.num_vertices
    for v in members:
        if ball.dist[v] < 3:
            got = sorted(u for u, _, _ in ball.neighbors(v))
            assert len(got) == model.degree
        assert ball.height[v] == model.height(v)
        assert ball.dist[v] == model.graph_distance(0, v)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.descriptor())
def test_neighbors_deterministic(model):
    v = random_vertex(model, [1, 2, 0, 1])
    assert model.neighbors(v) == model.neighbors(v)
    fresh = parse_model(model.descriptor())
    w = random_vertex(fresh, [1, 2, 0, 1])
    assert fresh.address(w) == model.address(v)
