"""Growth bounds, critical brackets and inequality checks on exact tables.

Truncated tables give one-sided information.  A truncated slab-bridge sum
never exceeds the full one, so ``alpha_upper`` stays a valid upper bound
for ``alpha`` and certifies the upper edge of a bracket.  A truncated
half-space sum undercounts, so ``beta_lower`` computed from it can exceed
the true ``beta``; the lower edge therefore uses a half-space bound with a
rigorous tail, or the submultiplicative bound on ``Z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import closed_forms as cf
from .enumeration import enumerate_walks
from .graphs import EndFixedTree, GraphModel, OrientedTree112, is_tree
from .tables import BridgeTables, HeightResolvedTable, TwoPointTable, tilted_Z
from .transfer import tree_transfer_tables
from .weights import SAW, WeightFunction

SLACK = 1e-9


def _float_levels(bridges: BridgeTables, name: str) -> np.ndarray:
    c = bridges.collapsed(name)
    return np.array([[float(x) for x in row] for row in c])


class SeriesEvaluator:
    """Cached float views of ``A`` and ``b`` for repeated evaluation in ``z``."""

    def __init__(self, bridges: BridgeTables) -> None:
        self.bridges = bridges
        self.t0 = bridges.t0
        self.n_max = bridges.n_max
        self._A = _float_levels(bridges, "A")
        self._b = _float_levels(bridges, "b")

    def _powers(self, z: float) -> np.ndarray:
        return z ** np.arange(self.n_max + 1)

    def A(self, z: float) -> np.ndarray:
        return self._powers(z) @ self._A

    def b(self, z: float) -> np.ndarray:
        return self._powers(z) @ self._b

    def alpha_upper(self, z: float, j: int) -> float:
        A = self.A(z)[j]
        if A <= 0:
            return math.inf
        return -math.log(z * z * A) / (self.t0 * (j + 2))

    def beta_lower(self, z: float, j: int) -> float:
        b = self.b(z)[j]
        if b <= 0:
            return math.inf
        return -math.log(b) / (self.t0 * (j + 1))

    def best_alpha(self, z: float) -> tuple[float, int]:
        A = self.A(z)
        vals = [(-math.log(z * z * a) / (self.t0 * (j + 2)), j) for j, a in enumerate(A) if a > 0]
        return min(vals) if vals else (math.inf, -1)

    def best_beta(self, z: float) -> tuple[float, int]:
        b = self.b(z)
        vals = [(-math.log(x) / (self.t0 * (j + 1)), j) for j, x in enumerate(b) if j >= 1 and x > 0]
        return max(vals) if vals else (-math.inf, -1)


def alpha_upper(bridges: BridgeTables, z: float, n: int) -> float:
    """``-log(z^2 A(z;n)) / (t0 (n+2))``; ``+inf`` when the slab sum vanishes."""
    if not 0 < z <= 1:
        raise ValueError("z must lie in (0, 1]")
    return SeriesEvaluator(bridges).alpha_upper(z, n)


def beta_lower(bridges: BridgeTables, z: float, n: int) -> float:
    """``-log b(z;n) / (t0 (n+1))`` from the truncated half-space sum."""
    if not 0 < z <= 1:
        raise ValueError("z must lie in (0, 1]")
    return SeriesEvaluator(bridges).beta_lower(z, n)


@dataclass
class GrowthBound:
    z: float
    alpha_upper: float
    beta_lower: float
    n: int
    alpha_level: int = -1
    beta_level: int = -1

    @property
    def crossed(self) -> bool:
        """``alpha_upper < beta_lower`` can only come from truncation."""
        return self.alpha_upper < self.beta_lower


def growth_bound(bridges: BridgeTables, z: float) -> GrowthBound:
    ev = SeriesEvaluator(bridges)
    a, ja = ev.best_alpha(z)
    b, jb = ev.best_beta(z)
    return GrowthBound(z, a, b, bridges.n_max, ja, jb)


@dataclass
class CriticalBracket:
    """Interval ``[z_lo, z_hi]`` for ``z_{c,lam}`` with the certificates behind each edge.

    ``lower_certificate`` names the rigorous bound that produced ``z_lo``:
    ``"beta-tail-bounded"`` (half-space bound with a submultiplicative tail)
    or ``"submultiplicative"`` (``z_c >= Z(lam;n)^(-1/n)``).  The value of
    ``beta_lower`` from the bare truncated tables is reported in
    ``beta_truncated_at_lo`` and ``z_lo_truncated_beta`` but never used as a
    certificate.
    """

    lam: float
    z_lo: float
    z_hi: float
    n_used: int
    alpha_at_hi: float
    beta_at_lo: float
    alpha_level: int
    beta_level: int
    tol: float
    lower_certificate: str = ""
    beta_truncated_at_lo: float = math.nan
    z_lo_truncated_beta: float = math.nan
    flags: list[str] = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.z_hi - self.z_lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.z_lo + self.z_hi)

    def contains(self, z: float) -> bool:
        return self.z_lo <= z <= self.z_hi

    def overlaps(self, other: CriticalBracket) -> bool:
        return self.z_lo <= other.z_hi and other.z_lo <= self.z_hi

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam, "z_lo": self.z_lo, "z_hi": self.z_hi, "width": self.width,
            "n_used": self.n_used, "alpha_at_hi": self.alpha_at_hi, "beta_at_lo": self.beta_at_lo,
            "alpha_level": self.alpha_level, "beta_level": self.beta_level,
            "lower_certificate": self.lower_certificate, "beta_truncated_at_lo": self.beta_truncated_at_lo,
            "z_lo_truncated_beta": self.z_lo_truncated_beta, "flags": list(self.flags),
        }


def _bisect(pred, lo: float, hi: float, tol: float, iters: int = 60) -> tuple[float, float]:
    """``pred`` true at ``lo`` and false at ``hi``; shrink the interval keeping that."""
    for _ in range(iters):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


TAIL_LAMBDAS = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


class TailBound:
    """Upper bounds for the part of ``b(z;j)`` coming from walks longer than ``n_max``.

    A walk ending at height ``>= j`` carries weight at most ``W^{-lam' j}``
    times its tilted weight for any ``lam' >= 0``, and submultiplicativity
    gives ``Z(lam'; aq + r) <= Z(lam'; q)^a Z(lam'; r)``.  Summing over
    lengths above ``n_max`` is then a geometric series in
    ``rho = z^q Z(lam'; q)``.
    """

    def __init__(self, table: HeightResolvedTable, lambdas=TAIL_LAMBDAS) -> None:
        self.n_max = table.n_max
        self.W = table.base
        self.Z = {lp: tilted_Z(table, lp) for lp in lambdas}

    def tail(self, z: float, lp: float) -> float:
        Z = self.Z[lp]
        n_max = self.n_max
        if n_max == 0:
            return math.inf
        # best block length: smallest growth Z(q)^(1/q)
        q = min(range(1, n_max + 1), key=lambda k: math.log(Z[k]) / k)
        rho = z**q * Z[q]
        if rho >= 1:
            return math.inf

        def f(n):
            a, r = divmod(n, q)
            return z**n * Z[q] ** a * Z[r]

        first = math.fsum(f(n) for n in range(n_max + 1, n_max + q + 1))
        return first / (1 - rho)

    def beta(self, ev: SeriesEvaluator, z: float) -> tuple[float, int]:
        """Best rigorous lower bound for ``beta(z)`` over levels and tilts."""
        b = ev.b(z)
        best = (-math.inf, -1)
        tails = {lp: self.tail(z, lp) for lp in self.Z}
        for j in range(1, len(b)):
            up = min(b[j] + self.W ** (-lp * j) * t for lp, t in tails.items())
            if 0 < up < math.inf:
                best = max(best, (-math.log(up) / (ev.t0 * (j + 1)), j))
        return best


def submultiplicative_lower(table: HeightResolvedTable, lam: float) -> tuple[float, int]:
    """``z_{c,lam} >= max_n Z(lam;n)^(-1/n)``, with the maximising ``n``."""
    Z = tilted_Z(table, lam)
    best = (0.0, 0)
    for n in range(1, table.n_max + 1):
        if Z[n] > 0:
            best = max(best, (math.exp(-math.log(Z[n]) / n), n))
    return best


def bracket_from_tables(table: HeightResolvedTable, bridges: BridgeTables, lam: float,
                        tol: float = 1e-3) -> CriticalBracket:
    """Bracket ``z_{c,lam}`` by bisection on rigorous lower certificates and ``alpha_upper``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = max(lam, 1 - lam)
    ev = SeriesEvaluator(bridges)
    tb = TailBound(table)
    flags = []
    z_min = 1e-12
    step = tol / 8

    # lower edge: rigorous beta certificate, bisected (beta decreases in z)
    def beta_ok(z):
        return tb.beta(ev, z)[0] > M

    z_beta = _bisect(beta_ok, z_min, 1.0, step)[0] if beta_ok(z_min) else 0.0
    z_sub, _ = submultiplicative_lower(table, lam)
    if z_beta >= z_sub:
        z_lo, cert = z_beta, "beta-tail-bounded"
    else:
        z_lo, cert = z_sub, "submultiplicative"

    # the bare truncated beta, reported for comparison only
    def beta_trunc_ok(z):
        return ev.best_beta(z)[0] > M

    z_trunc = _bisect(beta_trunc_ok, z_min, 1.0, step)[0] if beta_trunc_ok(z_min) else 0.0

    # upper edge: alpha decreases in z; smallest z with alpha < M certifies z > z_c
    def alpha_high(z):
        return ev.best_alpha(z)[0] >= M

    if alpha_high(1.0):
        z_hi = 1.0
        flags.append("alpha-uncertified")
    else:
        z_hi = _bisect(alpha_high, z_min, 1.0, step)[1]

    beta_val, jb = tb.beta(ev, z_lo) if z_lo > 0 else (math.inf, -1)
    alpha_val, ja = ev.best_alpha(z_hi)
    lo = max(z_lo - SLACK, 0.0)
    hi = 1.0 if "alpha-uncertified" in flags else min(z_hi + SLACK, 1.0)
    if lo > hi:
        flags.append("contradictory")
    if z_trunc > z_hi:
        flags.append("truncated-beta-overshoots")
    br = CriticalBracket(lam, lo, hi, bridges.n_max, alpha_val, beta_val, ja, jb, tol, cert,
                         ev.best_beta(z_lo)[0] if z_lo > 0 else math.inf, z_trunc, flags)
    if br.width > tol:
        flags.append("truncation-limited")
    return br


def tables_for(model: GraphModel, w: WeightFunction, n_max: int, **kw) -> tuple[HeightResolvedTable, BridgeTables]:
    """Tree models with the self-avoiding weight use the transfer path; others enumerate."""
    if is_tree(model) and isinstance(w, SAW):
        return tree_transfer_tables(model, n_max)
    res = enumerate_walks(model, w, n_max, **kw)
    return res.table, res.bridges


def zc_bracket(model: GraphModel, w: WeightFunction, lam: float, n_max: int, tol: float = 1e-3, **kw) -> CriticalBracket:
    table, bridges = tables_for(model, w, n_max, **kw)
    return bracket_from_tables(table, bridges, lam, tol)


# -- identities and coefficient inequalities ---------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    checked: int
    violations: list = field(default_factory=list)
    max_slack: float | None = None
    note: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checked": self.checked,
                "violations": self.violations[:20], "max_slack": self.max_slack, "note": self.note}


@dataclass
class IdentityReport:
    model: str
    weight: str
    n_max: int
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def get(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"model": self.model, "weight": self.weight, "n_max": self.n_max, "passed": self.passed,
                "checks": [c.as_dict() for c in self.checks]}


def differential_inequality(table: HeightResolvedTable, lam: float, rel: float = 1e-12) -> CheckResult:
    """``(n+1) Z(lam;n) <= sum_j Z(lam;j) Z(lam;n-j)`` for every ``n <= n_max``."""
    Z = tilted_Z(table, lam)
    bad = []
    slack = math.inf
    for n in range(table.n_max + 1):
        lhs = (n + 1) * Z[n]
        rhs = math.fsum(Z[j] * Z[n - j] for j in range(n + 1))
        slack = min(slack, (rhs - lhs) / max(rhs, 1e-300))
        if lhs > rhs * (1 + rel):
            bad.append({"n": n, "lhs": lhs, "rhs": rhs})
    return CheckResult(f"differential-inequality[lambda={lam:g}]", not bad, table.n_max + 1, bad, slack)


def _poly_mul(p: np.ndarray, q: np.ndarray, deg: int) -> np.ndarray:
    return np.convolve(p, q)[: deg + 1]


def submultiplicativity(table: HeightResolvedTable, lam: float, rel: float = 1e-12) -> CheckResult:
    Z = tilted_Z(table, lam)
    bad = []
    count = 0
    for n in range(table.n_max + 1):
        for m in range(table.n_max + 1 - n):
            count += 1
            if Z[n + m] > Z[n] * Z[m] * (1 + rel):
                bad.append({"n": n, "m": m, "lhs": Z[n + m], "rhs": Z[n] * Z[m]})
    return CheckResult(f"submultiplicativity[lambda={lam:g}]", not bad, count, bad)


def slab_supermultiplicativity(bridges: BridgeTables, rel: float = 1e-12) -> CheckResult:
    """``A(.;n+m+2) >= z^2 A(.;n) A(.;m)`` coefficient-wise up to degree ``n_max``."""
    A = _float_levels(bridges, "A")
    deg = bridges.n_max
    J = A.shape[1]
    bad = []
    count = 0
    for n in range(J):
        for m in range(J):
            if n + m + 2 >= J:
                continue
            rhs = np.concatenate([[0.0, 0.0], _poly_mul(A[:, n], A[:, m], deg)])[: deg + 1]
            lhs = A[:, n + m + 2]
            count += 1
            idx = np.nonzero(lhs < rhs * (1 - rel))[0]
            if len(idx):
                bad.append({"n": n, "m": m, "degree": int(idx[0]), "lhs": lhs[idx[0]], "rhs": rhs[idx[0]]})
    return CheckResult("slab-supermultiplicativity", not bad, count, bad, note="coefficient-wise in z")


def half_space_submultiplicativity(bridges: BridgeTables, rel: float = 1e-12) -> CheckResult:
    """``b(.;n+m+1) <= b(.;n) b(.;m)`` coefficient-wise up to degree ``n_max``."""
    b = _float_levels(bridges, "b")
    deg = bridges.n_max
    J = b.shape[1]
    bad = []
    count = 0
    for n in range(J):
        for m in range(J):
            if n + m + 1 >= J:
                continue
            # coefficient L of the product needs b up to degree L, which the table has for L <= n_max
            rhs = _poly_mul(b[:, n], b[:, m], deg)
            lhs = b[:, n + m + 1]
            count += 1
            idx = np.nonzero(lhs > rhs * (1 + rel))[0]
            if len(idx):
                bad.append({"n": n, "m": m, "degree": int(idx[0]), "lhs": lhs[idx[0]], "rhs": rhs[idx[0]]})
    return CheckResult("half-space-submultiplicativity", not bad, count, bad, note="coefficient-wise in z")


def verify_identities(
    table: HeightResolvedTable,
    bridges: BridgeTables | None = None,
    lambdas=(0.0, 0.25, 0.5),
    sub_lambdas=(0.0, 0.25, 0.5, 0.75, 1.0),
) -> IdentityReport:
    """Tilted mass transport and bridge reversal exactly on integers; inequalities in floating point."""
    from .tables import mtp_violations

    checks = []
    bad = mtp_violations(table)
    checks.append(CheckResult("tilted-mass-transport", not bad, (table.n_max + 1) * table.offset * table.tags,
                              [{"n": n, "m": m, "tag": t} for n, m, t in bad], note="exact"))
    if bridges is not None:
        bad = bridges.reversal_violations()
        checks.append(CheckResult("bridge-reversal", not bad, (bridges.n_max + 1) * bridges.levels * bridges.tags,
                                  [{"n": n, "m": m, "tag": t} for n, m, t in bad], note="exact"))
    for lam in lambdas:
        checks.append(differential_inequality(table, lam))
    for lam in sub_lambdas:
        checks.append(submultiplicativity(table, lam))
    if bridges is not None:
        checks.append(slab_supermultiplicativity(bridges))
        checks.append(half_space_submultiplicativity(bridges))
    return IdentityReport(table.model, table.weight, table.n_max, checks)


# -- bubble diagram ---------------------------------------------------------


def chi_coefficients(table: HeightResolvedTable, lam: float) -> np.ndarray:
    return tilted_Z(table, lam)


def bubble(two_point: TwoPointTable, z: float, degree: int) -> float:
    """Bubble diagram truncated to total degree ``degree`` in ``z``."""
    if z < 0:
        raise ValueError("z must be non-negative")
    c = two_point.bubble_coefficients(degree)
    return float(np.polyval(c[::-1], z))


@dataclass
class BubbleCheck:
    z: float
    degree: int
    bubble: float
    chi_squared: float
    coefficientwise: bool
    passed: bool


def bubble_domination(two_point: TwoPointTable, table: HeightResolvedTable, z: float, degree: int) -> BubbleCheck:
    """Compare ``B`` with ``chi(., 1/2)^2``, both truncated to the same total degree."""
    B = two_point.bubble_coefficients(degree)
    chi = chi_coefficients(table, 0.5)
    sq = np.convolve(chi, chi)
    if len(sq) < degree + 1:
        sq = np.concatenate([sq, np.zeros(degree + 1 - len(sq))])
    sq = sq[: degree + 1]
    coef = bool(np.all(B <= sq * (1 + 1e-12)))
    b_val = float(np.polyval(B[::-1], z))
    c_val = float(np.polyval(sq[::-1], z))
    return BubbleCheck(z, degree, b_val, c_val, coef, coef and b_val <= c_val)


# -- tilted Madras-Slade -----------------------------------------------------


class AboveThresholdError(ValueError):
    """The requested check is only meaningful strictly below the tiltability threshold."""


@dataclass
class MadrasSladeResult:
    z: float
    lhs: float
    rhs: float
    passed: bool
    rhs_kind: str


def madras_slade_check(table: HeightResolvedTable, bridges: BridgeTables, z: float, zt_bracket: CriticalBracket,
                       model: GraphModel | None = None) -> MadrasSladeResult:
    """``chi(z,1/2) <= z^{-1} exp[2 sum_{m>=1} a(z;m) W^{m/2}]``.

    The left side is the truncated series.  On end-fixed trees the right side
    uses the closed-form bridge series ``a(z;m) = z^m``; elsewhere it is
    truncated and labelled heuristic.
    """
    if not 0 < z < zt_bracket.z_lo:
        raise AboveThresholdError(f"z = {z} is not below the threshold bracket [{zt_bracket.z_lo}, {zt_bracket.z_hi}]")
    Z = tilted_Z(table, 0.5)
    lhs = math.fsum(Z[n] * z**n for n in range(table.n_max + 1))
    W = table.base
    if isinstance(model, EndFixedTree):
        q = math.sqrt(W) * z
        rhs = math.exp(2 * q / (1 - q)) / z
        kind = "closed-form"
    else:
        a = _float_levels(bridges, "a")
        s = math.fsum(float(np.dot(a[:, m], z ** np.arange(bridges.n_max + 1))) * W ** (m / 2)
                      for m in range(1, a.shape[1]))
        rhs = math.exp(2 * s) / z
        kind = "heuristic-truncated"
    return MadrasSladeResult(z, lhs, rhs, lhs <= rhs, kind)


# -- susceptibility to partition function --------------------------------------


@dataclass
class ChiToZ:
    n: int
    x: float
    y: float
    phi_y: float
    bound: float
    actual: float | None
    flags: list[str]

    @property
    def ratio(self) -> float | None:
        if self.actual in (None, 0):
            return None
        return self.bound / self.actual

    @property
    def passed(self) -> bool:
        return self.actual is None or self.actual <= self.bound * (1 + 1e-12)


def chito_z_bound(series_values, x: float, y: float, n: int, phi=None) -> ChiToZ:
    """``x^n c_n <= [Phi(y)/(n+1)]^2 (x/y)^{2n}`` for a submultiplicative sequence ``c``.

    ``Phi(y)`` comes from ``phi`` (a number or callable) when given,
    otherwise from the truncated series, which is flagged.
    """
    if not 0 < y <= x:
        raise ValueError("need 0 < y <= x")
    c = list(series_values) if series_values is not None else []
    flags = []
    if phi is None:
        phi_y = math.fsum(float(ck) * y**k for k, ck in enumerate(c))
        flags.append("phi-truncated")
        if len(c) >= 2 and float(c[-1]) * y ** (len(c) - 1) > 1e-3 * phi_y:
            flags.append("phi-not-converged")
    else:
        phi_y = float(phi(y)) if callable(phi) else float(phi)
    if not math.isfinite(phi_y):
        flags.append("phi-diverged")
    bound = (phi_y / (n + 1)) ** 2 * (x / y) ** (2 * n)
    actual = x**n * float(c[n]) if n < len(c) else None
    return ChiToZ(n, x, y, phi_y, bound, actual, flags)


@dataclass
class HWDiagnostic:
    lam: float
    mu: float
    ns: list[int]
    log_excess: list[float]
    sqrt_coefficient: float
    log_coefficient: float


def hammersley_welsh_diagnostic(table: HeightResolvedTable, mu: float, lam: float = 0.5, n_min: int = 1) -> HWDiagnostic:
    """Fit ``log(Z(lam;n)/mu^n)`` against ``sqrt(n)`` and ``log(n)``."""
    Z = tilted_Z(table, lam)
    ns = list(range(n_min, table.n_max + 1))
    ex = [math.log(Z[n]) - n * math.log(mu) for n in ns]
    x = np.array(ns, float)
    s_coef = float(np.linalg.lstsq(np.c_[np.sqrt(x), np.ones_like(x)], ex, rcond=None)[0][0])
    l_coef = float(np.linalg.lstsq(np.c_[np.log(x), np.ones_like(x)], ex, rcond=None)[0][0])
    return HWDiagnostic(lam, mu, ns, ex, s_coef, l_coef)


# -- explicit constants --------------------------------------------------------


@dataclass
class QuantReport:
    mu_c: float
    t0: float
    chi_exponent: float
    chi_coefficient: float
    Z_exponent: float
    Z_coefficient: float
    checks: list[dict]

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def quant_constants(mu: float, t0: float) -> tuple[float, float]:
    """Exponents of the explicit untilted susceptibility and partition-function constants."""
    denom = math.exp(1.5 * t0) - math.exp(t0)
    return 4 * mu * mu / denom, 8 * mu * mu / denom + 2


def quant_constants_report(table: HeightResolvedTable, bracket0: CriticalBracket, zs=(0.1, 0.3)) -> QuantReport:
    """Evaluate the explicit constants at the bracket midpoint and test the truncated susceptibility."""
    mu = 1 / bracket0.midpoint
    zc = bracket0.midpoint
    t0 = table.t0
    ce, ze = quant_constants(mu, t0)
    chi_c = mu * mu * math.exp(ce)
    z_c = mu**4 * math.exp(ze)
    Z = tilted_Z(table, 0.0)
    checks = []
    for z in zs:
        if z >= zc:
            checks.append({"z": z, "passed": False, "note": "z not below the critical point"})
            continue
        lhs = math.fsum(Z[n] * z**n for n in range(table.n_max + 1))
        rhs = chi_c * zc / (zc - z) + chi_c
        checks.append({"z": z, "chi_truncated": lhs, "bound": rhs, "passed": lhs <= rhs})
    return QuantReport(mu, t0, ce, chi_c, ze, z_c, checks)


# -- two-point decay -------------------------------------------------------------


@dataclass
class DecayReport:
    z: float
    chi_half: float
    chi_kind: str
    checked: int
    violations: list
    rate: float

    @property
    def passed(self) -> bool:
        return not self.violations


def two_point_decay_check(two_point: TwoPointTable, table: HeightResolvedTable, z: float,
                          zt_bracket: CriticalBracket, model: GraphModel | None = None) -> DecayReport:
    """``G(z;x) <= chi(z,1/2) W^{-|m|/2}`` on every class, plus a fitted decay rate in distance."""
    if not 0 < z < zt_bracket.z_lo:
        raise AboveThresholdError(f"z = {z} is not below the threshold bracket [{zt_bracket.z_lo}, {zt_bracket.z_hi}]")
    if isinstance(model, EndFixedTree):
        chi = cf.end_fixed_chi(model.k, z, 0.5)
        kind = "closed-form"
    elif isinstance(model, OrientedTree112):
        chi = cf.oriented_chi_candidates(z, 0.5)["1-z^2"]
        kind = "closed-form"
    else:
        Z = tilted_Z(table, 0.5)
        chi = math.fsum(Z[n] * z**n for n in range(table.n_max + 1))
        kind = "heuristic-truncated"
    G = two_point.values(z)
    W = two_point.base
    caps = chi * float(W) ** (-np.abs(two_point.height) / 2)
    bad = [{"class": int(i), "height": int(two_point.height[i]), "dist": int(two_point.dist[i]),
            "G": float(G[i]), "cap": float(caps[i])}
           for i in np.nonzero(G > caps * (1 + 1e-12))[0]]
    # decay rate from the largest G at each distance, restricted to distances
    # below n_max where walks of every relevant length are present
    ds = sorted(set(int(d) for d in two_point.dist))
    pts = []
    for d in ds:
        if d == 0 or d > two_point.n_max // 2:
            continue
        g = G[two_point.dist == d].max()
        if g > 0:
            pts.append((d, math.log(g)))
    rate = float("nan")
    if len(pts) >= 2:
        x, y = np.array(pts).T
        rate = float(-np.polyfit(x, y, 1)[0])
    return DecayReport(z, chi, kind, len(G), bad, rate)
