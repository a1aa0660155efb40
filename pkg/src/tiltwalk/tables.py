"""Exact height-resolved tables and the series derived from them.

Counts are object arrays of Python ints indexed ``[n, height, tag]``; the
tag axis bins walks by an integer statistic of the weight (see
``WeightFunction.tag``).  Real weights enter only through ``bin_weights``,
so every identity between tables can be checked on integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .weights import parse_weight


def _zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(0)
    return out


def as_exact(arr: np.ndarray) -> np.ndarray:
    """Convert an integer array to an object array of Python ints."""
    out = _zeros(arr.shape)
    flat = out.reshape(-1)
    for i, x in enumerate(np.asarray(arr).reshape(-1).tolist()):
        flat[i] = int(x)
    return out


def bin_weight_matrix(weight_descriptor: str, n_max: int, tags: int) -> np.ndarray:
    w = parse_weight(weight_descriptor)
    out = np.empty((n_max + 1, tags))
    for n in range(n_max + 1):
        for t in range(tags):
            out[n, t] = w.bin_weight(n, t)
    return out


def _to_float(x) -> float:
    try:
        return float(x)
    except OverflowError:
        return math.inf


@dataclass
class _TableBase:
    model: str
    weight: str
    n_max: int
    base: int
    t0_units: int
    indicator: bool
    bin_weights: np.ndarray = field(repr=False)

    @property
    def tau(self) -> float:
        return math.log(self.base)

    @property
    def t0(self) -> float:
        return self.t0_units * self.tau

    @property
    def tags(self) -> int:
        return self.bin_weights.shape[1]

    def _collapse(self, counts: np.ndarray) -> np.ndarray:
        """Apply bin weights along the tag axis; exact ints for indicator weights."""
        if self.indicator and self.tags == 1:
            return counts[..., 0]
        out = np.zeros(counts.shape[:-1])
        for n in range(counts.shape[0]):
            for t in range(self.tags):
                wt = self.bin_weights[n, t]
                if wt == 0:
                    continue
                col = counts[n, ..., t]
                out[n] += np.array([_to_float(c) for c in col.reshape(-1)]).reshape(col.shape) * wt
        return out


@dataclass
class HeightResolvedTable(_TableBase):
    """``counts[n, m + offset, tag]``: weighted number of length-``n`` walks ending at height ``m``."""

    counts: np.ndarray = field(default=None, repr=False)

    @property
    def offset(self) -> int:
        return self.n_max * self.t0_units

    @property
    def heights(self) -> np.ndarray:
        return np.arange(-self.offset, self.offset + 1)

    def coefficients(self) -> np.ndarray:
        """Weighted ``N[n][m]`` with tags collapsed, shape ``(n_max+1, 2*offset+1)``."""
        return self._collapse(self.counts)

    def count(self, n: int, m: int):
        if abs(m) > self.offset:
            return 0
        return self.coefficients()[n, m + self.offset]

    def totals(self) -> list:
        c = self.coefficients()
        return [sum(c[n].tolist()) for n in range(self.n_max + 1)]

    def row(self, n: int) -> dict[int, object]:
        c = self.coefficients()[n]
        return {int(m): c[i] for i, m in enumerate(self.heights) if c[i] != 0}


def tilted_Z(table: HeightResolvedTable, lam: float) -> np.ndarray:
    """``Z(lam; n) = sum_m N[n][m] exp(lam * tau * m)`` for ``n <= n_max``."""
    c = table.coefficients()
    heights = table.heights
    factors = [math.exp(lam * table.tau * int(m)) for m in heights]
    out = np.empty(table.n_max + 1)
    for n in range(table.n_max + 1):
        out[n] = math.fsum(_to_float(c[n, i]) * factors[i] for i in range(len(heights)) if c[n, i] != 0)
    return out


def mtp_violations(table: HeightResolvedTable) -> list[tuple[int, int, int]]:
    """Cells breaking ``N[n][-m] = W**m * N[n][m]``, compared on exact per-tag counts."""
    W = table.base
    off = table.offset
    bad = []
    for n in range(table.n_max + 1):
        for m in range(1, off + 1):
            for t in range(table.tags):
                if table.counts[n, off - m, t] != W**m * table.counts[n, off + m, t]:
                    bad.append((n, m, t))
    return bad


@dataclass
class BridgeTables(_TableBase):
    """Bridge and half-space tables, each indexed ``[n, level >= 0, tag]``.

    ``a``: up-bridges ending at height ``m``; ``d``: down-bridges ending at
    ``-m``; ``h``: upper half-space walks; ``r``: reverse descents; ``b``:
    walks ending in the half-space ``H_j^+``; ``A``: up-bridges ending in the
    slab ``S_{j t0}``.
    """

    a: np.ndarray = field(default=None, repr=False)
    d: np.ndarray = field(default=None, repr=False)
    h: np.ndarray = field(default=None, repr=False)
    r: np.ndarray = field(default=None, repr=False)
    b: np.ndarray = field(default=None, repr=False)

    @property
    def levels(self) -> int:
        return self.a.shape[1]

    @property
    def A(self) -> np.ndarray:
        t = self.t0_units
        J = (self.levels - 1) // t + 1
        out = _zeros((self.n_max + 1, J, self.tags))
        for j in range(J):
            for m in range(j * t, min((j + 1) * t, self.levels)):
                out[:, j, :] += self.a[:, m, :]
        return out

    def collapsed(self, name: str) -> np.ndarray:
        return self._collapse(getattr(self, name))

    def series(self, name: str, z: float) -> np.ndarray:
        """Truncated generating function ``sum_n z**n X[n][j]`` for each level ``j``."""
        c = self.collapsed(name)
        zp = np.array([z**n for n in range(self.n_max + 1)])
        out = np.zeros(c.shape[1])
        for n in range(self.n_max + 1):
            if zp[n] == 0:
                continue
            out += np.array([_to_float(x) for x in c[n]]) * zp[n]
        return out

    def reversal_violations(self) -> list[tuple[int, int, int]]:
        """Cells breaking ``d[n][m] = W**m * a[n][m]`` on exact per-tag counts."""
        W = self.base
        bad = []
        for n in range(self.n_max + 1):
            for m in range(self.levels):
                for t in range(self.tags):
                    if self.d[n, m, t] != W**m * self.a[n, m, t]:
                        bad.append((n, m, t))
        return bad


def half_space_from_counts(counts: np.ndarray, offset: int, t0_units: int) -> np.ndarray:
    """``b[n][j] = sum_{m >= j t0} N[n][m]`` from a height-resolved count array."""
    n1, _, tags = counts.shape
    J = offset // t0_units + 1
    out = _zeros((n1, J, tags))
    for j in range(J):
        out[:, j, :] = counts[:, offset + j * t0_units :, :].sum(axis=1)
    return out


@dataclass
class TwoPointTable:
    """Two-point function grouped in classes of vertices sharing ``G(z; x)``.

    Class ``c`` has ``mult[c]`` vertices at height ``height[c]`` and distance
    ``dist[c]`` from the root; ``parts[c, n]`` is the weight of length-``n``
    walks from the root to one such vertex.
    """

    model: str
    weight: str
    n_max: int
    base: int
    mult: np.ndarray
    height: np.ndarray
    dist: np.ndarray
    parts: np.ndarray

    def values(self, z: float, degree: int | None = None) -> np.ndarray:
        deg = self.n_max if degree is None else min(degree, self.n_max)
        zp = np.array([z**n for n in range(deg + 1)])
        return self.parts[:, : deg + 1] @ zp

    def bubble_coefficients(self, degree: int) -> np.ndarray:
        """Coefficients of ``B(z) = sum_x G(z;x)**2`` up to total degree ``degree``."""
        if degree > 2 * self.n_max:
            raise ValueError(f"degree {degree} exceeds 2*n_max = {2 * self.n_max}")
        out = np.zeros(degree + 1)
        p = self.parts
        for i in range(self.n_max + 1):
            for j in range(self.n_max + 1):
                if i + j > degree:
                    break
                out[i + j] += float(np.dot(self.mult, p[:, i] * p[:, j]))
        return out
