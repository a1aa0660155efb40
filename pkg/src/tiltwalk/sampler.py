"""Sampling from the tilted walk measures.

``P_{lam,n}(w) ∝ weight(w) * W**(lam * height(endpoint))`` over length-``n``
walks from the root.

Exact methods:

* ``exact-suffix`` (trees, self-avoiding weight) grows the walk one move
  class at a time with probabilities proportional to exact tilted suffix
  sums of the move automaton.
* ``exact-enumerated`` draws the endpoint (height, distance) pair directly
  from its enumerated joint law.

``rosenbluth`` is sequential importance sampling through the weight
contract: every step picks among admissible extensions with probability
proportional to ``factor * W**(lam * increment)``, and the sample weight is
the product of the local normalisers.

Every sample ``i`` uses its own PCG64 stream spawned from
``SeedSequence(seed, spawn_key=(i,))``, so runs are reproducible and can be
split over sample indices in any way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .enumeration import enumerate_walks
from .graphs import GraphModel, is_tree
from .transfer import automaton
from .weights import SAW, WeightFunction

RNG_NAME = "numpy PCG64, SeedSequence(seed, spawn_key=(sample_idx,))"


class SamplerError(Exception):
    pass


class OutOfExactReach(SamplerError):
    """Exact sampling is not available at this size; use ``sample_rosenbluth``."""


EXACT_TREE_MAX = 1000
EXACT_ENUM_MAX = 14


def sample_rng(seed: int, idx: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(idx,))))


@dataclass
class SampleRun:
    model: str
    weight: str
    lam: float
    n: int
    method: str
    seed: int
    num_samples: int
    heights: np.ndarray
    distances: np.ndarray
    log_weights: np.ndarray | None = None
    discarded: int = 0
    attempts: int = 0
    exact_law: dict | None = field(default=None, repr=False)
    indices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.indices is None:
            self.indices = np.arange(len(self.heights), dtype=np.int64)

    @property
    def weights(self) -> np.ndarray:
        if self.log_weights is None:
            return np.ones(len(self.heights))
        if len(self.log_weights) == 0:
            return np.zeros(0)
        lw = self.log_weights - self.log_weights.max()
        return np.exp(lw)

    @property
    def ess(self) -> float:
        w = self.weights
        if len(w) == 0:
            return 0.0
        return float(w.sum() ** 2 / (w**2).sum())

    @property
    def discard_rate(self) -> float:
        return self.discarded / self.attempts if self.attempts else 0.0

    def weighted_mean(self, values) -> tuple[float, float]:
        """Estimate and standard error; the error uses the effective sample size."""
        v = np.asarray(values, dtype=float)
        w = self.weights
        if len(v) == 0:
            return math.nan, math.nan
        mean = float(np.average(v, weights=w))
        var = float(np.average((v - mean) ** 2, weights=w))
        return mean, math.sqrt(var / max(self.ess, 1.0))

    def height_frequencies(self) -> dict[int, float]:
        w = self.weights
        tot = w.sum()
        out: dict[int, float] = {}
        for h, wi in zip(self.heights.tolist(), w):
            out[h] = out.get(h, 0.0) + wi / tot
        return out


def _tilts(base: int, lam: float, incs) -> dict[int, float]:
    return {i: float(base) ** (lam * i) for i in set(incs)}


def exact_height_law(model: GraphModel, w: WeightFunction, lam: float, n: int) -> dict[int, float]:
    """Endpoint height law under ``P_{lam,n}`` from exact tables."""
    law = _joint_law(model, w, lam, n)
    out: dict[int, float] = {}
    for (m, _), p in law.items():
        out[m] = out.get(m, 0.0) + p
    return out


def _joint_laws(model: GraphModel, w: WeightFunction, lam: float, n_max: int,
                n_min: int | None = None) -> dict[int, dict[tuple[int, int], float]]:
    """Joint (height, distance) laws under ``P_{lam,n}`` for ``n_min <= n <= n_max``, from one enumeration."""
    if n_max > EXACT_ENUM_MAX:
        raise OutOfExactReach(f"n = {n_max} exceeds exact enumeration reach {EXACT_ENUM_MAX}; use rosenbluth")
    res = enumerate_walks(model, w, n_max)
    base = model.lattice.base
    out = {}
    for n in range(n_max if n_min is None else n_min, n_max + 1):
        JD = res.joint[n]  # [m + n_max, dist, tag]
        bw = res.table.bin_weights[n]
        mass: dict[tuple[int, int], float] = {}
        for i in range(JD.shape[0]):
            m = i - n_max
            tilt = float(base) ** (lam * m)
            for d in range(JD.shape[1]):
                x = float(np.dot(JD[i, d].astype(float), bw))
                if x > 0:
                    mass[(m, d)] = x * tilt
        tot = math.fsum(mass.values())
        out[n] = {k: v / tot for k, v in mass.items()}
    return out


def _joint_law(model: GraphModel, w: WeightFunction, lam: float, n: int) -> dict[tuple[int, int], float]:
    return _joint_laws(model, w, lam, n)[n]


def _suffix_logs(auto, base: int, lam: float, n: int) -> list[np.ndarray]:
    """``L[r][c] = log`` of the tilted weight of all ``r``-step continuations from class ``c``."""
    L = [np.zeros(len(auto.classes))]
    for r in range(1, n + 1):
        prev = L[-1]
        cur = np.empty(len(auto.classes))
        for c, moves in enumerate(auto.moves):
            terms = [math.log(mult) + lam * inc * math.log(base) + prev[nxt] for inc, mult, nxt in moves]
            mx = max(terms)
            cur[c] = mx + math.log(math.fsum(math.exp(t - mx) for t in terms))
        L.append(cur)
    return L


def sample_exact(model: GraphModel, w: WeightFunction, lam: float, n: int, count: int, seed: int = 0) -> SampleRun:
    """Unweighted samples of the endpoint under ``P_{lam,n}``."""
    if n < 0 or count < 0:
        raise ValueError("n and count must be non-negative")
    base = model.lattice.base
    if is_tree(model) and isinstance(w, SAW):
        if n > EXACT_TREE_MAX:
            raise OutOfExactReach(f"n = {n} exceeds exact reach {EXACT_TREE_MAX} on trees; use rosenbluth")
        auto = automaton(model)
        L = _suffix_logs(auto, base, lam, n)
        lb = math.log(base)
        move_sets = (auto.start,) + auto.moves  # index 0 is the start, c + 1 is class c

        def cdf(moves, r):
            logs = np.array([math.log(mult) + lam * inc * lb + L[r - 1][nxt] for inc, mult, nxt in moves])
            p = np.exp(logs - logs.max())
            c = np.cumsum(p / p.sum())
            c[-1] = 1.0
            return c

        cdfs = {(k, r): cdf(ms, r) for k, ms in enumerate(move_sets) for r in range(1, n + 1)}
        heights = np.zeros(count, dtype=np.int64)
        for i in range(count):
            rng = sample_rng(seed, i)
            u = rng.random(n)
            h = 0
            k = 0
            for t, r in enumerate(range(n, 0, -1)):
                j = int(np.searchsorted(cdfs[(k, r)], u[t], side="right"))
                inc, _, nxt = move_sets[k][j]
                h += inc
                k = nxt + 1
            heights[i] = h
        # the geodesic to the endpoint is the walk itself
        return SampleRun(model.descriptor(), w.descriptor(), lam, n, "exact-suffix", seed, count,
                         heights, np.full(count, n, dtype=np.int64), attempts=count)
    law = _joint_law(model, w, lam, n)
    keys = sorted(law)
    cdf = np.cumsum([law[k] for k in keys])
    cdf[-1] = 1.0
    heights = np.zeros(count, dtype=np.int64)
    dists = np.zeros(count, dtype=np.int64)
    for i in range(count):
        j = int(np.searchsorted(cdf, sample_rng(seed, i).random(), side="right"))
        heights[i], dists[i] = keys[min(j, len(keys) - 1)]
    return SampleRun(model.descriptor(), w.descriptor(), lam, n, "exact-enumerated", seed, count,
                     heights, dists, attempts=count, exact_law={f"{m},{d}": p for (m, d), p in law.items()})


def sample_rosenbluth(model: GraphModel, w: WeightFunction, lam: float, n: int, count: int, seed: int = 0) -> SampleRun:
    """Sequential importance sampling on addresses; trapped walks are discarded and counted."""
    if n < 1:
        raise ValueError("rosenbluth sampling needs n >= 1")
    if count < 0:
        raise ValueError("count must be non-negative")
    slots = model.slots
    tilt = _tilts(model.lattice.base, lam, [s.increment for s in slots])
    step = model.step
    heights, dists, logw, kept = [], [], [], []
    discarded = 0
    for i in range(count):
        rng = sample_rng(seed, i)
        addr = model.root_address()
        state = w.init_state(addr)
        lw = 0.0
        trapped = False
        for _ in range(n):
            cands = []
            gs = []
            for s, slot in enumerate(slots):
                nxt = step(addr, s)
                f = w.step_factor(state, nxt, slot.label)
                if f > 0:
                    cands.append((nxt, slot.label))
                    gs.append(f * tilt[slot.increment])
            if not cands:
                trapped = True
                break
            total = math.fsum(gs)
            u = rng.random() * total
            acc = 0.0
            k = len(gs) - 1
            for j, g in enumerate(gs):
                acc += g
                if u < acc:
                    k = j
                    break
            addr, label = cands[k]
            w.advance(state, addr, label)
            lw += math.log(total)
        if trapped:
            discarded += 1
            continue
        heights.append(model.address_height(addr))
        dists.append(model.address_distance(addr))
        logw.append(lw)
        kept.append(i)
    return SampleRun(model.descriptor(), w.descriptor(), lam, n, "rosenbluth", seed, len(heights),
                     np.array(heights, dtype=np.int64), np.array(dists, dtype=np.int64),
                     np.array(logw), discarded, count, indices=np.array(kept, dtype=np.int64))


def sample(model: GraphModel, w: WeightFunction, lam: float, n: int, count: int, seed: int = 0,
           method: str = "auto") -> SampleRun:
    if method == "auto":
        method = "exact" if (is_tree(model) and isinstance(w, SAW) and n <= EXACT_TREE_MAX) or n <= 12 else "rosenbluth"
    if method in ("exact", "exact-suffix", "exact-enumerated"):
        return sample_exact(model, w, lam, n, count, seed)
    if method == "rosenbluth":
        return sample_rosenbluth(model, w, lam, n, count, seed)
    raise ValueError(f"unknown sampling method {method!r}")


@dataclass
class DriftReport:
    n: int
    lam: float
    method: str
    samples: int
    ess: float
    discard_rate: float
    distance_ratio: float
    distance_ratio_se: float
    height_ratio: float
    height_ratio_se: float
    signed_height_ratio: float
    tail: dict[float, float]

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def drift_report(run: SampleRun, cs=(0.1, 0.25, 0.5, 0.75)) -> DriftReport:
    """Displacement summaries per unit length, with ``sgn(lam - 1/2)`` applied to the height."""
    n = run.n
    sgn = (run.lam > 0.5) - (run.lam < 0.5)
    if n == 0 or run.num_samples == 0:
        zero = 0.0 if n == 0 else math.nan
        return DriftReport(n, run.lam, run.method, run.num_samples, run.ess, run.discard_rate,
                           zero, 0.0, zero, 0.0, zero, {c: (0.0 if n else math.nan) for c in cs})
    d, dse = run.weighted_mean(run.distances / n)
    h, hse = run.weighted_mean(run.heights / n)
    w = run.weights
    tail = {c: float(w[run.distances < c * n].sum() / w.sum()) for c in cs}
    return DriftReport(n, run.lam, run.method, run.num_samples, run.ess, run.discard_rate,
                       d, dse, h, hse, sgn * h, tail)


def exact_distance_ratios(model: GraphModel, w: WeightFunction, lam: float, n_max: int = 12) -> dict[int, float]:
    """``E[d(root, X_n)] / n`` under ``P_{lam,n}`` for ``1 <= n <= n_max``, from exact enumeration."""
    laws = _joint_laws(model, w, lam, n_max, n_min=1)
    return {n: math.fsum(p * d for (_, d), p in law.items()) / n for n, law in laws.items()}


def calibrated_threshold(model: GraphModel, w: WeightFunction, lam: float, n_max: int = 12, factor: float = 0.5) -> float:
    """Half the smallest exact distance ratio over ``n_max/2 <= n <= n_max``."""
    ratios = exact_distance_ratios(model, w, lam, n_max)
    return factor * min(r for n, r in ratios.items() if n >= n_max // 2)


@dataclass
class ExponentReport:
    lam: float
    ns: tuple[int, ...]
    mean_abs_height: tuple[float, ...]
    exponent: float
    samples: int
    method: str

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def displacement_exponent(model: GraphModel, w: WeightFunction, lam: float = 0.5, ns=(25, 50, 100, 200),
                          count: int = 2000, seed: int = 0) -> ExponentReport:
    """Least-squares slope of ``log E|height(X_n)|`` against ``log n``; reported, not asserted."""
    means = []
    method = ""
    for n in ns:
        run = sample(model, w, lam, n, count, seed)
        method = run.method
        means.append(run.weighted_mean(np.abs(run.heights))[0])
    ok = [(n, m) for n, m in zip(ns, means) if m > 0]
    slope = float(np.polyfit(np.log([n for n, _ in ok]), np.log([m for _, m in ok]), 1)[0]) if len(ok) >= 2 else math.nan
    return ExponentReport(lam, tuple(ns), tuple(means), slope, count, method)
