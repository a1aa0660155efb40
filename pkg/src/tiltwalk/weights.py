"""Good path-weight functions with an incremental evaluation contract.

A weight is evaluated along a path by ``init_state`` followed by one
``extend``/``advance`` per step; the product of the returned factors equals
the weight of the whole path.  Every catalog weight can also be written as
``bin_weight(length, tag)`` for an integer ``tag`` read from the state
(intersection count, lattice-edge count, ...).  Enumeration bins exact
integer counts by tag and applies the real-valued factor late.

Weights only read the visit pattern of the path and the kind of each edge
label, which keeps them invariant under the tree automorphisms.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field

from .graphs import GraphModel

# DFS kernel modes
MODE_SAW = 0
MODE_WEAKLY = 1
MODE_ANISOTROPIC = 2
MODE_AT_MOST_TWICE = 3


class WeightUsageError(Exception):
    pass


@dataclass
class WeightState:
    """Incremental state of a path; single owner, use ``copy`` to branch."""

    vertices: list[int]
    visits: dict[int, int]
    tag: int = 0
    alive: bool = True
    edges: set | None = None
    positions: dict | None = None
    graph: GraphModel | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.vertices) - 1

    @property
    def last(self) -> int:
        return self.vertices[-1]

    def copy(self) -> WeightState:
        return WeightState(
            vertices=list(self.vertices),
            visits=dict(self.visits),
            tag=self.tag,
            alive=self.alive,
            edges=set(self.edges) if self.edges is not None else None,
            positions={k: list(v) for k, v in self.positions.items()} if self.positions is not None else None,
            graph=self.graph,
        )


def _is_lattice(label: str) -> bool:
    return label.startswith("lattice")


class WeightFunction:
    name = ""
    value_class = "indicator"
    kernel_mode: int | None = None
    isotropic = True

    def descriptor(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"<weight {self.descriptor()}>"

    # -- incremental contract ---------------------------------------------
    def init_state(self, start: int, graph: GraphModel | None = None) -> WeightState:
        return WeightState(vertices=[start], visits={start: 1}, graph=graph)

    def step_factor(self, state: WeightState, vertex: int, label: str) -> float:
        """Factor for extending ``state`` by one step, without mutating it."""
        raise NotImplementedError

    def _update(self, state: WeightState, vertex: int, label: str) -> None:
        pass

    def advance(self, state: WeightState, vertex: int, label: str) -> float:
        """Extend ``state`` in place and return the step factor."""
        factor = self.step_factor(state, vertex, label)
        if factor == 0:
            state.alive = False
        self._update(state, vertex, label)
        state.vertices.append(vertex)
        state.visits[vertex] = state.visits.get(vertex, 0) + 1
        return factor

    def extend(self, state: WeightState, step: tuple[int, str]) -> tuple[WeightState, float]:
        vertex, label = step
        graph = state.graph
        if graph is not None and (vertex, label) not in {
            (w, lab) for w, _, lab in graph.neighbors(state.last)
        }:
            raise WeightUsageError(f"step {step} is not incident to vertex {state.last}")
        new = state.copy()
        return new, self.advance(new, vertex, label)

    # -- exact binning ------------------------------------------------------
    def tag_bins(self, n_max: int) -> int:
        return 1

    def bin_weight(self, n: int, tag: int) -> float:
        return 1.0

    def weight(self, state: WeightState) -> float:
        return self.bin_weight(state.n, state.tag) if state.alive else 0.0

    # -- from-scratch definition -------------------------------------------
    def evaluate(self, vertices: list[int], labels: list[str]) -> float:
        raise NotImplementedError


class SAW(WeightFunction):
    name = "saw"
    kernel_mode = MODE_SAW

    def step_factor(self, state, vertex, label):
        return 0 if vertex in state.visits else 1

    def evaluate(self, vertices, labels):
        return 1 if len(set(vertices)) == len(vertices) else 0


class WeaklySAW(WeightFunction):
    """Domb-Joyce weight ``exp(-g * #{i < j : w(i) = w(j)})``."""

    value_class = "positive-real"
    kernel_mode = MODE_WEAKLY

    def __init__(self, g: float) -> None:
        if g < 0:
            raise ValueError("weakly self-avoiding walk needs g >= 0")
        self.g = float(g)
        self.name = "weakly-saw"

    def descriptor(self):
        return f"weakly-saw:g={self.g!r}"

    def step_factor(self, state, vertex, label):
        return math.exp(-self.g * state.visits.get(vertex, 0))

    def _update(self, state, vertex, label):
        state.tag += state.visits.get(vertex, 0)

    def tag_bins(self, n_max):
        return n_max * (n_max + 1) // 2 + 1

    def bin_weight(self, n, tag):
        return math.exp(-self.g * tag)

    def intersections(self, state: WeightState) -> int:
        return state.tag

    def evaluate(self, vertices, labels):
        pairs = 0
        for i in range(len(vertices)):
            for j in range(i + 1, len(vertices)):
                pairs += vertices[i] == vertices[j]
        return math.exp(-self.g * pairs)


class Anisotropic(WeightFunction):
    """Self-avoiding walk on ``T x Z^d`` with ``e^a`` per lattice edge and ``e^b`` per tree edge."""

    value_class = "positive-real"
    kernel_mode = MODE_ANISOTROPIC
    isotropic = True  # reads only the tree/lattice kind, not child labels

    def __init__(self, a: float, b: float) -> None:
        if a < 0 or b < 0:
            raise ValueError("anisotropic weights need a, b >= 0")
        self.a = float(a)
        self.b = float(b)
        self.name = "anisotropic"

    def descriptor(self):
        return f"anisotropic:a={self.a!r},b={self.b!r}"

    def step_factor(self, state, vertex, label):
        if vertex in state.visits:
            return 0.0
        return math.exp(self.a if _is_lattice(label) else self.b)

    def _update(self, state, vertex, label):
        state.tag += _is_lattice(label)

    def tag_bins(self, n_max):
        return n_max + 1

    def bin_weight(self, n, tag):
        return math.exp(self.a * tag + self.b * (n - tag))

    def evaluate(self, vertices, labels):
        if len(set(vertices)) != len(vertices):
            return 0.0
        lattice = sum(_is_lattice(lab) for lab in labels)
        return math.exp(self.a * lattice + self.b * (len(labels) - lattice))


class AtMostTwice(WeightFunction):
    name = "at-most-twice"
    kernel_mode = MODE_AT_MOST_TWICE

    def step_factor(self, state, vertex, label):
        return 0 if state.visits.get(vertex, 0) >= 2 else 1

    def evaluate(self, vertices, labels):
        counts: dict[int, int] = {}
        for v in vertices:
            counts[v] = counts.get(v, 0) + 1
        return 1 if max(counts.values()) <= 2 else 0


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class PrimeGap(WeightFunction):
    """Indicator that repeated visits are separated by a prime number of steps."""

    name = "prime-gap"

    def init_state(self, start, graph=None):
        state = super().init_state(start, graph)
        state.positions = {start: [0]}
        return state

    def step_factor(self, state, vertex, label):
        n = state.n + 1
        for i in state.positions.get(vertex, ()):
            if not _is_prime(n - i):
                return 0
        return 1

    def _update(self, state, vertex, label):
        state.positions.setdefault(vertex, []).append(state.n + 1)

    def evaluate(self, vertices, labels):
        for i in range(len(vertices)):
            for j in range(i + 1, len(vertices)):
                if vertices[i] == vertices[j] and not _is_prime(j - i):
                    return 0
        return 1


class TreeSpan(WeightFunction):
    """Indicator that the edges traversed span a tree."""

    name = "tree-span"

    def init_state(self, start, graph=None):
        state = super().init_state(start, graph)
        state.edges = set()
        return state

    def step_factor(self, state, vertex, label):
        edge = frozenset((state.last, vertex))
        if edge in state.edges:
            return 1
        return 0 if vertex in state.visits else 1

    def _update(self, state, vertex, label):
        state.edges.add(frozenset((state.last, vertex)))

    def evaluate(self, vertices, labels):
        edges = {frozenset((vertices[i], vertices[i + 1])) for i in range(len(vertices) - 1)}
        return 1 if len(set(vertices)) == len(edges) + 1 else 0


class PlantedSupermultiplicative(WeightFunction):
    """Deliberately broken: ``2**(n*n)``, so length-1 paths weigh 2 and concatenation gains weight."""

    name = "planted-supermultiplicative"
    value_class = "positive-real"

    def step_factor(self, state, vertex, label):
        return 2.0 ** (2 * state.n + 1)

    def _update(self, state, vertex, label):
        state.tag += 1

    def tag_bins(self, n_max):
        return n_max + 1

    def bin_weight(self, n, tag):
        return 2.0 ** (n * n)

    def evaluate(self, vertices, labels):
        n = len(vertices) - 1
        return 2.0 ** (n * n)


CATALOG = ("saw", "weakly-saw", "anisotropic", "at-most-twice", "prime-gap", "tree-span")

_WEIGHT_RE = re.compile(r"^\s*([a-z\-]+)\s*(?::(.*))?$")


def parse_weight(descriptor: str) -> WeightFunction:
    """Build a weight from e.g. ``saw``, ``weakly-saw:g=0.5``, ``anisotropic:a=1,b=0``."""
    from .graphs import _parse_params

    m = _WEIGHT_RE.match(descriptor or "")
    if not m:
        raise ValueError(f"malformed weight descriptor {descriptor!r}")
    name, params = m.group(1), _parse_params(m.group(2))

    def only(*keys):
        extra = set(params) - set(keys)
        if extra:
            raise ValueError(f"weight {name!r} does not take {sorted(extra)}")

    try:
        if name == "saw":
            only()
            return SAW()
        if name == "weakly-saw":
            only("g")
            return WeaklySAW(float(params.get("g", 1.0)))
        if name == "anisotropic":
            only("a", "b")
            return Anisotropic(float(params.get("a", 0.0)), float(params.get("b", 0.0)))
        if name == "at-most-twice":
            only()
            return AtMostTwice()
        if name == "prime-gap":
            only()
            return PrimeGap()
        if name == "tree-span":
            only()
            return TreeSpan()
        if name == "planted-supermultiplicative":
            only()
            return PlantedSupermultiplicative()
    except ValueError as exc:
        raise ValueError(f"bad weight descriptor {descriptor!r}: {exc}") from None
    raise ValueError(f"unknown weight {name!r}")


# -- property suite ---------------------------------------------------------


@dataclass
class PropertyResult:
    name: str
    tested: int = 0
    violations: int = 0
    counterexamples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass
class PropertyReport:
    weight: str
    model: str
    trials: int
    seed: int
    results: dict[str, PropertyResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def summary(self) -> dict:
        return {
            "weight": self.weight,
            "model": self.model,
            "trials": self.trials,
            "seed": self.seed,
            "passed": self.passed,
            "properties": {
                name: {
                    "tested": r.tested,
                    "violations": r.violations,
                    "counterexamples": r.counterexamples[:5],
                }
                for name, r in self.results.items()
            },
        }


def incremental_weight(w: WeightFunction, vertices: list[int], labels: list[str]) -> float:
    state = w.init_state(vertices[0])
    total = 1.0
    for v, lab in zip(vertices[1:], labels):
        total *= w.advance(state, v, lab)
    return total


def _random_path(model: GraphModel, start: int, length: int, rng: random.Random, avoid: set | None):
    """Random path; with ``avoid`` it prefers vertices outside that set."""
    vertices = [start]
    labels = []
    for _ in range(length):
        options = model.neighbors(vertices[-1])
        if avoid is not None:
            fresh = [o for o in options if o[0] not in avoid]
            if fresh:
                options = fresh
        v, _, lab = options[rng.randrange(len(options))]
        vertices.append(v)
        labels.append(lab)
        if avoid is not None:
            avoid.add(v)
    return vertices, labels


def reverse_labels(model: GraphModel, vertices: list[int]) -> list[str]:
    """Edge labels of the reversed path, read at each edge's new tail."""
    out = []
    for i in range(len(vertices) - 1, 0, -1):
        a, b = vertices[i], vertices[i - 1]
        for w, _, lab in model.neighbors(a):
            if w == b:
                out.append(lab)
                break
        else:
            raise WeightUsageError("path uses a non-edge")
    return out


def _close(x: float, y: float, exact: bool, rel: float) -> bool:
    if exact:
        return x == y
    return abs(x - y) <= rel * max(abs(x), abs(y), 1e-300)


def check_good_properties(
    w: WeightFunction,
    model: GraphModel,
    trials: int = 10_000,
    max_len: int = 8,
    seed: int = 0,
    rel_tol: float = 1e-12,
) -> PropertyReport:
    """Randomized check of the good-weight axioms on contiguous path pairs.

    Each trial draws a contiguous pair ``(p, q)``; half the trials grow the
    pair while avoiding earlier vertices so that disjoint pairs are common.
    Checked: repulsivity, zero-range on disjoint pairs, reversibility of the
    concatenation, agreement of the incremental product with the direct
    definition, non-degeneracy, and invariance under relabelling children.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    exact = w.value_class == "indicator"
    res = {
        name: PropertyResult(name)
        for name in ("non_degenerate", "repulsive", "zero_range", "reversible", "incremental", "label_isotropy")
    }

    root = 0
    r = res["non_degenerate"]
    trivial = w.evaluate([root], [])
    r.tested += 1
    if trivial != 1:
        r.violations += 1
        r.counterexamples.append({"path": [root], "weight": trivial})
    for v, _, lab in model.neighbors(root):
        r.tested += 1
        val = w.evaluate([root, v], [lab])
        if not val >= 1:
            r.violations += 1
            r.counterexamples.append({"path": [root, v], "labels": [lab], "weight": val})

    for t in range(trials):
        avoid = {root} if t % 2 == 0 else None
        n1 = rng.randint(0, max_len)
        n2 = rng.randint(0, max_len)
        p_v, p_l = _random_path(model, root, n1, rng, avoid)
        q_v, q_l = _random_path(model, p_v[-1], n2, rng, avoid)
        pq_v = p_v + q_v[1:]
        pq_l = p_l + q_l
        wp = w.evaluate(p_v, p_l)
        wq = w.evaluate(q_v, q_l)
        wpq = w.evaluate(pq_v, pq_l)

        def note(name, **info):
            rr = res[name]
            rr.violations += 1
            if len(rr.counterexamples) < 20:
                rr.counterexamples.append(
                    {"first": [model.address(v) for v in p_v], "first_labels": p_l,
                     "second": [model.address(v) for v in q_v], "second_labels": q_l, **info}
                )

        res["repulsive"].tested += 1
        if wpq > wp * wq and not _close(wpq, wp * wq, exact, rel_tol):
            note("repulsive", w_concat=wpq, w_first=wp, w_second=wq)

        disjoint = not (set(p_v[:-1]) & set(q_v[1:]))
        if disjoint:
            res["zero_range"].tested += 1
            if not _close(wpq, wp * wq, exact, rel_tol):
                note("zero_range", w_concat=wpq, w_first=wp, w_second=wq)

        res["reversible"].tested += 1
        rev_v = pq_v[::-1]
        rev_l = reverse_labels(model, pq_v)
        wrev = w.evaluate(rev_v, rev_l)
        if not _close(wrev, wpq, exact, rel_tol):
            note("reversible", w_concat=wpq, w_reversed=wrev)

        res["incremental"].tested += 1
        inc = incremental_weight(w, pq_v, pq_l)
        if not _close(inc, wpq, exact, rel_tol):
            note("incremental", w_direct=wpq, w_incremental=inc)

        if w.isotropic:
            res["label_isotropy"].tested += 1
            perm_l = [_permute_child_label(lab, rng_shift=t) for lab in pq_l]
            wperm = w.evaluate(pq_v, perm_l)
            if not _close(wperm, wpq, exact, rel_tol):
                note("label_isotropy", w_concat=wpq, w_permuted=wperm)

    return PropertyReport(w.descriptor(), model.descriptor(), trials, seed, res)


_CHILD_RE = re.compile(r"^(down|in)-(\d+)$")


def _permute_child_label(label: str, rng_shift: int) -> str:
    m = _CHILD_RE.match(label)
    if not m:
        return label
    return f"{m.group(1)}-{(int(m.group(2)) + 1 + rng_shift) % 2}"
