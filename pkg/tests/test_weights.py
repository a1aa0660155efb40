import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltwalk.graphs import EndFixedTree, OrientedTree112, ProductTreeZd
from tiltwalk.weights import (
    SAW,
    Anisotropic,
    AtMostTwice,
    PlantedSupermultiplicative,
    PrimeGap,
    TreeSpan,
    WeaklySAW,
    WeightUsageError,
    check_good_properties,
    incremental_weight,
    parse_weight,
    reverse_labels,
)

CATALOG = [SAW(), WeaklySAW(0.5), WeaklySAW(1.0), Anisotropic(1.0, 0.0), Anisotropic(0.0, 1.0), AtMostTwice(),
           PrimeGap(), TreeSpan()]


def walk(model, slots):
    """Vertices and labels of the walk following the given slot choices from the root."""
    vs, labs = [0], []
    for s in slots:
        v, _, lab = model.neighbors(vs[-1])[s % model.degree]
        vs.append(v)
        labs.append(lab)
    return vs, labs


@pytest.mark.parametrize("w", [SAW(), WeaklySAW(1.0), Anisotropic(2.0, 0.0)], ids=lambda w: w.descriptor())
def test_trivial_path_weight_one(w):
    state = w.init_state(0)
    assert w.weight(state) == 1
    assert w.evaluate([0], []) == 1


def test_saw_factors():
    m = EndFixedTree(3)
    w = SAW()
    up = m.neighbors(0)[0]
    st_, f = w.extend(w.init_state(0, m), (up[0], up[2]))
    assert f == 1
    _, f = w.extend(st_, (0, "down-0"))
    assert f == 0


def test_weakly_saw_factor_counts_previous_visits():
    m = EndFixedTree(3)
    w = WeaklySAW(0.7)
    up = m.neighbors(0)[0][0]
    s = w.init_state(0, m)
    s, f1 = w.extend(s, (up, "up"))
    s, f2 = w.extend(s, (0, "down-0"))
    s, f3 = w.extend(s, (up, "up"))
    s, f4 = w.extend(s, (0, "down-0"))
    assert f1 == 1
    assert f2 == pytest.approx(math.exp(-0.7))
    assert f3 == pytest.approx(math.exp(-0.7))
    assert f4 == pytest.approx(math.exp(-1.4))


def test_anisotropic_factors():
    m = ProductTreeZd(3, 1)
    w = Anisotropic(0.3, 0.2)
    s = w.init_state(0, m)
    by_label = {lab: v for v, _, lab in m.neighbors(0)}
    s1, f = w.extend(s, (by_label["lattice+e0"], "lattice+e0"))
    assert f == pytest.approx(math.exp(0.3))
    s2, f = w.extend(s, (by_label["up"], "up"))
    assert f == pytest.approx(math.exp(0.2))
    back = next(lab for v, _, lab in m.neighbors(by_label["up"]) if v == 0)
    _, f = w.extend(s2, (0, back))
    assert f == 0


def test_extend_checks_incidence():
    m = EndFixedTree(3)
    w = SAW()
    far = m.neighbors(m.neighbors(0)[1][0])[1][0]
    with pytest.raises(WeightUsageError):
        w.extend(w.init_state(0, m), (far, "down-1"))


def test_extend_does_not_mutate():
    m = EndFixedTree(3)
    w = WeaklySAW(1.0)
    s = w.init_state(0, m)
    up = m.neighbors(0)[0][0]
    s2, _ = w.extend(s, (up, "up"))
    assert s.n == 0 and s2.n == 1


@pytest.mark.parametrize("text", ["saw", "weakly-saw:g=0.5", "anisotropic:a=1,b=0", "at-most-twice", "prime-gap",
                                  "tree-span"])
def test_parse_weight_roundtrip(text):
    w = parse_weight(text)
    assert parse_weight(w.descriptor()).descriptor() == w.descriptor()


@pytest.mark.parametrize("bad", ["", "bogus", "saw:g=1", "weakly-saw:g=x", "anisotropic:c=1"])
def test_parse_weight_rejects(bad):
    with pytest.raises(ValueError):
        parse_weight(bad)


@pytest.mark.parametrize("model", [EndFixedTree(3), OrientedTree112(), ProductTreeZd(3, 1)],
                         ids=lambda m: m.descriptor())
@pytest.mark.parametrize("w", CATALOG, ids=lambda w: w.descriptor())
@settings(max_examples=40, deadline=None)
@given(slots=st.lists(st.integers(0, 9), max_size=10))
def test_incremental_matches_direct(model, w, slots):
    vs, labs = walk(model, slots)
    direct = w.evaluate(vs, labs)
    inc = incremental_weight(w, vs, labs)
    if w.value_class == "indicator":
        assert inc == direct
    else:
        assert inc == pytest.approx(direct, rel=1e-12, abs=0)


@pytest.mark.parametrize("w", CATALOG, ids=lambda w: w.descriptor())
@settings(max_examples=40, deadline=None)
@given(slots=st.lists(st.integers(0, 9), max_size=10))
def test_reversal_symmetry(w, slots):
    m = ProductTreeZd(3, 1)
    vs, labs = walk(m, slots)
    rv = vs[::-1]
    assert w.evaluate(rv, reverse_labels(m, vs)) == pytest.approx(w.evaluate(vs, labs), rel=1e-12, abs=0)


def test_weakly_saw_matches_double_sum():
    m = ProductTreeZd(3, 1)
    rng = random.Random(3)
    w = WeaklySAW(0.4)
    for _ in range(200):
        vs, labs = walk(m, [rng.randrange(5) for _ in range(rng.randrange(12))])
        pairs = sum(vs[i] == vs[j] for i in range(len(vs)) for j in range(i + 1, len(vs)))
        assert w.evaluate(vs, labs) == pytest.approx(math.exp(-0.4 * pairs), rel=1e-12)


@pytest.mark.parametrize("w", [SAW(), WeaklySAW(1.0)], ids=lambda w: w.descriptor())
def test_property_suite_passes(w):
    rep = check_good_properties(w, ProductTreeZd(3, 1), trials=2000, seed=5)
    assert rep.passed, rep.summary()
    assert rep.results["zero_range"].tested > 100


def test_planted_violation_caught():
    rep = check_good_properties(PlantedSupermultiplicative(), EndFixedTree(3), trials=500, seed=1)
    assert not rep.passed
    assert rep.results["repulsive"].violations > 0
    assert rep.results["repulsive"].counterexamples


def test_property_suite_deterministic():
    a = check_good_properties(WeaklySAW(0.5), EndFixedTree(3), trials=300, seed=9).summary()
    b = check_good_properties(WeaklySAW(0.5), EndFixedTree(3), trials=300, seed=9).summary()
    assert a == b


def test_tree_span_zero_range_verdict():
    """Zero range holds for the spanned-tree indicator on every model in the catalog."""
    for m in (EndFixedTree(3), OrientedTree112(), ProductTreeZd(3, 1), ProductTreeZd(3, 2)):
        rep = check_good_properties(TreeSpan(), m, trials=2000, seed=2)
        assert rep.results["zero_range"].passed


def test_anisotropic_rejects_negative():
    with pytest.raises(ValueError):
        Anisotropic(-0.1, 0.0)
