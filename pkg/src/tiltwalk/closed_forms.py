"""Closed forms for the tilted susceptibility on the two tree models.

Coefficients are produced as exact Laurent polynomials in ``u = W**lam``
(``W = k - 1`` or 2), represented as ``{exponent: int}``.  The exponent is
the endpoint height, so a coefficient polynomial can be compared
cell-by-cell with an enumerated row ``N[n][m]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .tables import HeightResolvedTable

Laurent = dict[int, int]


class ClosedFormDomainError(ValueError):
    """Raised when a series is evaluated at or beyond its radius of convergence."""


def _add(p: Laurent, q: Laurent, scale: int = 1, shift: int = 0) -> Laurent:
    out = dict(p)
    for e, c in q.items():
        out[e + shift] = out.get(e + shift, 0) + scale * c
    return {e: c for e, c in out.items() if c != 0}


def laurent_eval(p: Laurent, u: float) -> float:
    return math.fsum(c * u**e for e, c in p.items())


def _recurrence(n_max: int, denom: list[tuple[int, Laurent]], numer: dict[int, int]) -> list[Laurent]:
    """Coefficients of ``numer(z) / (1 - sum_j denom_j(u) z**j)``."""
    out: list[Laurent] = []
    for n in range(n_max + 1):
        c: Laurent = {0: numer[n]} if numer.get(n) else {}
        for j, poly in denom:
            if n - j < 0:
                continue
            for e, a in poly.items():
                c = _add(c, out[n - j], scale=a, shift=e)
        out.append(c)
    return out


# -- end-fixed tree ---------------------------------------------------------


def end_fixed_zc(k: int, lam: float) -> float:
    return (k - 1) ** (-max(lam, 1 - lam))


def end_fixed_alpha(k: int, z: float) -> float:
    if not 0 < z <= 1:
        raise ClosedFormDomainError("alpha needs 0 < z <= 1")
    return -math.log(z) / math.log(k - 1)


def end_fixed_chi(k: int, z: float, lam: float) -> float:
    """``(1 - z^2) / ((1 - (k-1)^(1-lam) z)(1 - (k-1)^lam z))`` below the singularity."""
    if z < 0:
        raise ClosedFormDomainError("z must be non-negative")
    if z >= end_fixed_zc(k, lam):
        raise ClosedFormDomainError(f"chi diverges at z = {z} >= z_c = {end_fixed_zc(k, lam)}")
    W = k - 1
    return (1 - z * z) / ((1 - W ** (1 - lam) * z) * (1 - W**lam * z))


def end_fixed_coefficients(k: int, n_max: int) -> list[Laurent]:
    """Taylor coefficients of the end-fixed ``chi`` as Laurent polynomials in ``u = (k-1)**lam``."""
    W = k - 1
    return _recurrence(n_max, [(1, {1: 1, -1: W}), (2, {0: -W})], {0: 1, 2: -1})


# -- (1,1,2)-oriented tree ----------------------------------------------------


def _s(lam: float) -> float:
    return 2**lam + 2 ** (1 - lam) + 1


def oriented_zc(lam: float) -> float:
    s = _s(lam)
    return (s - math.sqrt(s * s - 12)) / 6


def oriented_alpha(z: float) -> float:
    """Closed form below the tiltability threshold, ``-inf`` above it."""
    if not 0 < z <= 1:
        raise ClosedFormDomainError("alpha needs 0 < z <= 1")
    zt = oriented_zc(0.5)
    if z > zt:
        return -math.inf
    # 9z^4 - 6z^3 - z^2 - 2z + 1 factors as
    # (3z^2 - (1+2r2)z + 1)(3z^2 - (1-2r2)z + 1); the first factor vanishes
    # at z_t, so write it through its roots to avoid cancellation there
    r2 = math.sqrt(2.0)
    near = 3 * (zt - z) * (1 / (3 * zt) - z)
    far = 3 * z * z - (1 - 2 * r2) * z + 1
    disc = max(near * far, 0.0)
    return math.log2((3 * z * z - z + 1 + math.sqrt(disc)) / (2 * z))


ORIENTED_NUMERATORS = {"1-z^2": {0: 1, 2: -1}, "1-3z^2": {0: 1, 2: -3}}


def oriented_chi_candidates(z: float, lam: float) -> dict[str, float]:
    """Both numerator candidates over the common quadratic denominator."""
    if z < 0:
        raise ClosedFormDomainError("z must be non-negative")
    if z >= oriented_zc(lam):
        raise ClosedFormDomainError(f"chi diverges at z = {z} >= z_c = {oriented_zc(lam)}")
    den = 1 - _s(lam) * z + 3 * z * z
    return {name: sum(c * z**e for e, c in num.items()) / den for name, num in ORIENTED_NUMERATORS.items()}


def oriented_coefficients(n_max: int, numerator: str = "1-z^2") -> list[Laurent]:
    """Taylor coefficients as Laurent polynomials in ``u = 2**lam``."""
    num = ORIENTED_NUMERATORS[numerator]
    return _recurrence(n_max, [(1, {1: 1, -1: 2, 0: 1}), (2, {0: -3})], num)


# -- comparison with enumeration ---------------------------------------------


def table_as_laurent(table: HeightResolvedTable) -> list[Laurent]:
    c = table.coefficients()
    return [{int(m): int(x) for m, x in zip(table.heights, c[n]) if x != 0} for n in range(table.n_max + 1)]


def first_mismatch(coeffs: list[Laurent], table: HeightResolvedTable) -> int | None:
    """Smallest ``n`` where the polynomials differ from the enumerated rows, or ``None``."""
    rows = table_as_laurent(table)
    for n in range(min(len(coeffs), len(rows))):
        if coeffs[n] != rows[n]:
            return n
    return None


@dataclass
class OrientedVerdict:
    n_max: int
    lambdas: tuple[float, ...]
    matches: dict[str, bool]
    exact_matches: dict[str, bool]
    max_rel_error: dict[str, float] = field(default_factory=dict)

    @property
    def selected(self) -> str | None:
        good = [k for k, ok in self.matches.items() if ok]
        return good[0] if len(good) == 1 else None

    def as_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "lambdas": list(self.lambdas),
            "matches": self.matches,
            "exact_matches": self.exact_matches,
            "max_rel_error": self.max_rel_error,
            "selected": self.selected,
        }


def resolve_oriented_chi(table: HeightResolvedTable, lambdas=(0.0, 0.5), rel_tol: float = 1e-10) -> OrientedVerdict:
    """Decide which numerator reproduces the enumerated tilted coefficients."""
    rows = table_as_laurent(table)
    matches, exact, errs = {}, {}, {}
    for name in ORIENTED_NUMERATORS:
        coeffs = oriented_coefficients(table.n_max, name)
        exact[name] = coeffs == rows
        worst = 0.0
        for lam in lambdas:
            u = 2.0**lam
            for n in range(table.n_max + 1):
                a = laurent_eval(coeffs[n], u)
                b = laurent_eval(rows[n], u)
                worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
        errs[name] = worst
        matches[name] = worst <= rel_tol
    return OrientedVerdict(table.n_max, tuple(lambdas), matches, exact, errs)
