"""Transitive graphs with a distinguished nonunimodular automorphism group.

Each model is a locally finite graph whose vertices carry canonical addresses.
Vertices are interned lazily into dense integer ids (root is id 0), and every
vertex has the same fixed-arity list of neighbor slots, each with a height
increment (in units of ``tau``) and an edge label.  The modular function is
``Delta(u, v) = exp(tau * (h(v) - h(u)))`` with integer heights, so the cocycle
identity holds exactly in height units.

Supported models:

* ``EndFixedTree(k)``: the k-regular tree with the group fixing one end.
  Address ``(u, length, code)``: go up ``u`` steps from the root, then down a
  word of ``length`` child labels (base ``k-1`` digits of ``code``).  The root's
  ancestors are reached through child label 0, so a canonical word never starts
  with 0 when ``u > 0``.
* ``OrientedTree112``: the 4-regular tree with a (1,1,2)-orientation.  Address
  ``(length, code, height)``: a reduced word over the four slots in base 4.
* ``ProductTreeZd(k, d)``: ``EndFixedTree(k)`` times ``Z^d``.  Address is the
  tree address followed by the lattice vector.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field

import numpy as np


class GraphError(Exception):
    """Base class for graph-model errors."""


class UnknownVertexError(GraphError, KeyError):
    pass


class BallTooSmallError(GraphError):
    pass


class BallSizeError(GraphError):
    pass


@dataclass(frozen=True)
class HeightLattice:
    """Heights live on ``{m * tau}``; ``base = e^tau`` is an integer."""

    base: int
    t0_units: int = 1

    @property
    def tau(self) -> float:
        return math.log(self.base)

    @property
    def t0(self) -> float:
        return self.t0_units * self.tau


@dataclass(frozen=True)
class Slot:
    increment: int
    label: str
    kind: str  # "tree", "lattice", "oriented", "flat"


class GraphModel:
    """Lazily grown, canonically interned ball around the root."""

    kind: str = ""
    lattice: HeightLattice
    slots: tuple[Slot, ...]

    def __init__(self) -> None:
        root = self.root_address()
        self._ids: dict = {root: 0}
        self._addresses: list = [root]
        self._heights: list[int] = [0]

    # -- address arithmetic, implemented per model -------------------------
    def root_address(self):
        raise NotImplementedError

    def step(self, address, slot: int):
        """Address of the neighbor through ``slot``."""
        raise NotImplementedError

    def address_height(self, address) -> int:
        raise NotImplementedError

    def address_distance(self, address) -> int:
        """Graph distance from the root, computed from the address."""
        raise NotImplementedError

    def reverse_slot(self, address, slot: int) -> int:
        """Slot at ``step(address, slot)`` that leads back to ``address``."""
        target = self.step(address, slot)
        for s in range(self.degree):
            if self.step(target, s) == address:
                return s
        raise GraphError("neighbor relation is not symmetric")

    def descriptor(self) -> str:
        raise NotImplementedError

    # -- interning ---------------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.slots)

    @property
    def num_interned(self) -> int:
        return len(self._addresses)

    def intern(self, address) -> int:
        vid = self._ids.get(address)
        if vid is None:
            vid = len(self._addresses)
            self._ids[address] = vid
            self._addresses.append(address)
            self._heights.append(self.address_height(address))
        return vid

    def lookup(self, address) -> int | None:
        return self._ids.get(address)

    def _check(self, v: int) -> None:
        if not (0 <= v < len(self._addresses)):
            raise UnknownVertexError(f"vertex id {v} has not been interned")

    def address(self, v: int):
        self._check(v)
        return self._addresses[v]

    def height(self, v: int) -> int:
        self._check(v)
        return self._heights[v]

    def neighbors(self, v: int) -> list[tuple[int, int, str]]:
        """All ``(neighbor id, height increment, edge label)`` in slot order."""
        self._check(v)
        addr = self._addresses[v]
        return [
            (self.intern(self.step(addr, s)), slot.increment, slot.label)
            for s, slot in enumerate(self.slots)
        ]

    def modular_ratio_units(self, u: int, v: int) -> int:
        return self.height(v) - self.height(u)

    def modular_ratio(self, u: int, v: int) -> float:
        return math.exp(self.lattice.tau * self.modular_ratio_units(u, v))

    def graph_distance(self, u: int, v: int) -> int:
        """Breadth-first distance using only vertices interned so far."""
        self._check(u)
        self._check(v)
        if u == v:
            return 0
        seen = {u: 0}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            addr = self._addresses[x]
            for s in range(self.degree):
                y = self._ids.get(self.step(addr, s))
                if y is None or y in seen:
                    continue
                seen[y] = seen[x] + 1
                if y == v:
                    return seen[y]
                queue.append(y)
        raise BallTooSmallError(
            f"vertex {v} unreachable from {u} within the explored ball "
            f"({len(self._addresses)} vertices); grow the ball first"
        )

    def seal(self, radius: int, max_vertices: int = 5_000_000) -> SealedBall:
        """Intern everything within ``radius`` of the root and freeze a view."""
        if radius < 0:
            raise ValueError("radius must be non-negative")
        deg = self.degree
        dist = {0: 0}
        queue = deque([0])
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            if dist[v] == radius:
                continue
            addr = self._addresses[v]
            for s in range(deg):
                w = self.intern(self.step(addr, s))
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
            if len(self._addresses) > max_vertices:
                raise BallSizeError(
                    f"ball of radius {radius} exceeds {max_vertices} vertices "
                    f"(interned {len(self._addresses)}, reached distance {dist[v] + 1})"
                )
        nv = len(self._addresses)
        nbr = np.full((nv, deg), -1, dtype=np.int32)
        dist_arr = np.full(nv, -1, dtype=np.int32)
        ids = self._ids
        addresses = self._addresses
        step = self.step
        for v in order:
            dist_arr[v] = dist[v]
            addr = addresses[v]
            nbr[v] = [ids.get(step(addr, s), -1) for s in range(deg)]
        height = np.asarray(self._heights, dtype=np.int64)
        for arr in (nbr, dist_arr, height):
            arr.setflags(write=False)
        return SealedBall(self, radius, nbr, height, dist_arr)

    @property
    def increments(self) -> np.ndarray:
        return np.array([s.increment for s in self.slots], dtype=np.int64)

    @property
    def lattice_slot_mask(self) -> np.ndarray:
        return np.array([1 if s.kind == "lattice" else 0 for s in self.slots], dtype=np.int64)

    def __repr__(self) -> str:
        return f"<{self.descriptor()} interned={self.num_interned}>"


@dataclass(frozen=True)
class SealedBall:
    """Immutable snapshot of the interned ball; safe to share between readers."""

    model: GraphModel
    radius: int
    nbr: np.ndarray
    height: np.ndarray
    dist: np.ndarray
    _bfs_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_vertices(self) -> int:
        """Vertices within ``radius`` of the root."""
        return int(np.count_nonzero(self.dist >= 0))

    def neighbors(self, v: int) -> list[tuple[int, int, str]]:
        if not (0 <= v < len(self.dist)) or self.dist[v] < 0:
            raise UnknownVertexError(f"vertex id {v} is not in the sealed ball")
        out = []
        for s, slot in enumerate(self.model.slots):
            w = int(self.nbr[v, s])
            if w < 0:
                raise BallTooSmallError(f"neighbor of {v} through slot {s} lies outside radius {self.radius}")
            out.append((w, slot.increment, slot.label))
        return out

    def modular_ratio(self, u: int, v: int) -> float:
        return math.exp(self.model.lattice.tau * int(self.height[v] - self.height[u]))

    def graph_distance(self, u: int, v: int) -> int:
        if u == 0:
            d = int(self.dist[v]) if 0 <= v < len(self.dist) else -1
            if d >= 0:
                return d
        if u == v:
            return 0
        seen = {u: 0}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            for w in self.nbr[x]:
                w = int(w)
                if w < 0 or w in seen or self.dist[w] < 0:
                    continue
                seen[w] = seen[x] + 1
                if w == v:
                    return seen[w]
                queue.append(w)
        raise BallTooSmallError(f"vertex {v} unreachable from {u} inside the sealed ball of radius {self.radius}")


class EndFixedTree(GraphModel):
    kind = "end-fixed-tree"

    def __init__(self, k: int) -> None:
        if k < 3:
            raise ValueError("EndFixedTree needs k >= 3")
        self.k = k
        self.lattice = HeightLattice(base=k - 1, t0_units=1)
        self.slots = (Slot(1, "up", "tree"),) + tuple(
            Slot(-1, f"down-{c}", "tree") for c in range(k - 1)
        )
        super().__init__()

    def descriptor(self) -> str:
        return f"end-fixed-tree:k={self.k}"

    def root_address(self):
        return (0, 0, 0)

    def step(self, address, slot):
        u, length, code = address
        b = self.k - 1
        if slot == 0:
            if length:
                return (u, length - 1, code // b)
            return (u + 1, 0, 0)
        c = slot - 1
        if length == 0 and u > 0 and c == 0:
            return (u - 1, 0, 0)
        return (u, length + 1, code * b + c)

    def address_height(self, address):
        return address[0] - address[1]

    def address_distance(self, address):
        return address[0] + address[1]


class OrientedTree112(GraphModel):
    """4-regular tree; slots are out (+1), in-0 and in-1 (-1), flat (0)."""

    kind = "oriented-tree-112"
    _BACK = (1, 0, 0, 3)  # back slot after arriving through slot s
    _INC = (1, -1, -1, 0)

    def __init__(self) -> None:
        self.lattice = HeightLattice(base=2, t0_units=1)
        self.slots = (
            Slot(1, "out", "oriented"),
            Slot(-1, "in-0", "oriented"),
            Slot(-1, "in-1", "oriented"),
            Slot(0, "flat", "flat"),
        )
        super().__init__()

    def descriptor(self) -> str:
        return "oriented-tree-112"

    def root_address(self):
        return (0, 0, 0)

    def step(self, address, slot):
        length, code, h = address
        if length and self._BACK[code & 3] == slot:
            last = code & 3
            return (length - 1, code >> 2, h - self._INC[last])
        return (length + 1, (code << 2) | slot, h + self._INC[slot])

    def address_height(self, address):
        return address[2]

    def address_distance(self, address):
        return address[0]


class ProductTreeZd(GraphModel):
    """``T_k x Z^d``; tree slots first, then ``+e_j``/``-e_j`` lattice slots."""

    kind = "product-tree-zd"

    def __init__(self, k: int, d: int) -> None:
        if k < 3 or d < 1:
            raise ValueError("ProductTreeZd needs k >= 3 and d >= 1")
        self.k = k
        self.d = d
        self._tree = EndFixedTree(k)
        self.lattice = HeightLattice(base=k - 1, t0_units=1)
        lattice_slots = []
        for j in range(d):
            lattice_slots.append(Slot(0, f"lattice+e{j}", "lattice"))
            lattice_slots.append(Slot(0, f"lattice-e{j}", "lattice"))
        self.slots = self._tree.slots + tuple(lattice_slots)
        super().__init__()

    def descriptor(self) -> str:
        return f"product-tree-zd:k={self.k},d={self.d}"

    def root_address(self):
        return (0, 0, 0) + (0,) * self.d

    def step(self, address, slot):
        k = self.k
        if slot < k:
            return self._tree.step(address[:3], slot) + address[3:]
        j, sign = divmod(slot - k, 2)
        x = list(address)
        x[3 + j] += -1 if sign else 1
        return tuple(x)

    def address_height(self, address):
        return address[0] - address[1]

    def address_distance(self, address):
        return address[0] + address[1] + sum(abs(c) for c in address[3:])


_MODEL_RE = re.compile(r"^\s*([a-z0-9\-]+)\s*(?::(.*))?$")


def _parse_params(text: str | None) -> dict[str, str]:
    params: dict[str, str] = {}
    if not text:
        return params
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ValueError(f"malformed parameter {item!r}")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def parse_model(descriptor: str) -> GraphModel:
    """Build a model from e.g. ``end-fixed-tree:k=4`` or ``product-tree-zd:k=3,d=1``."""
    m = _MODEL_RE.match(descriptor or "")
    if not m:
        raise ValueError(f"malformed model descriptor {descriptor!r}")
    name, params = m.group(1), _parse_params(m.group(2))
    try:
        if name == "end-fixed-tree":
            _only(params, {"k"})
            return EndFixedTree(int(params.get("k", 3)))
        if name == "oriented-tree-112":
            _only(params, set())
            return OrientedTree112()
        if name == "product-tree-zd":
            _only(params, {"k", "d"})
            return ProductTreeZd(int(params.get("k", 3)), int(params.get("d", 1)))
    except ValueError as exc:
        raise ValueError(f"bad model descriptor {descriptor!r}: {exc}") from None
    raise ValueError(f"unknown model kind {name!r}")


def _only(params: dict, allowed: set) -> None:
    extra = set(params) - allowed
    if extra:
        raise ValueError(f"unexpected parameters {sorted(extra)}")


def is_tree(model: GraphModel) -> bool:
    return isinstance(model, (EndFixedTree, OrientedTree112))


def seal_ball(model: GraphModel, radius: int, max_vertices: int = 5_000_000) -> SealedBall:
    """Freeze the ball of ``radius`` around the root into flat arrays."""
    return model.seal(radius, max_vertices)
