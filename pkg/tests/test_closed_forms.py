import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltwalk.closed_forms import (
    ClosedFormDomainError,
    end_fixed_alpha,
    end_fixed_chi,
    end_fixed_coefficients,
    end_fixed_zc,
    first_mismatch,
    laurent_eval,
    oriented_alpha,
    oriented_chi_candidates,
    oriented_coefficients,
    oriented_zc,
    resolve_oriented_chi,
)
from tiltwalk.graphs import EndFixedTree, OrientedTree112
from tiltwalk.tables import tilted_Z
from tiltwalk.transfer import tree_transfer_tables


def test_end_fixed_coefficients_untilted():
    c = end_fixed_coefficients(4, 6)
    assert [laurent_eval(p, 1.0) for p in c] == [1, 4, 12, 36, 108, 324, 972]


def test_end_fixed_zc_values():
    assert end_fixed_zc(4, 0.0) == pytest.approx(1 / 3)
    assert end_fixed_zc(4, 0.5) == pytest.approx(0.5773502692, abs=1e-10)
    assert end_fixed_zc(4, 1.0) == pytest.approx(1 / 3)


def test_end_fixed_chi_zero():
    for k in (3, 4, 7):
        assert end_fixed_chi(k, 0.0, 0.3) == 1


def test_end_fixed_chi_domain():
    with pytest.raises(ClosedFormDomainError):
        end_fixed_chi(4, end_fixed_zc(4, 0.5), 0.5)


def test_end_fixed_double_root_asymptotics():
    # relative distance to the double root: z = z_c (1 - eps)
    zc = end_fixed_zc(4, 0.5)
    for eps in (1e-3, 1e-4):
        chi = end_fixed_chi(4, zc * (1 - eps), 0.5)
        assert chi * eps**2 == pytest.approx(2 / 3, rel=5 * eps)


def test_end_fixed_chi_half_at_half():
    # (1 - z^2)/(1 - sqrt(2) z)^2 on the binary case
    z = 0.5
    assert end_fixed_chi(3, z, 0.5) == pytest.approx((1 - z * z) / (1 - math.sqrt(2) * z) ** 2)
    assert end_fixed_chi(3, z, 0.5) ** 2 == pytest.approx(76.4, abs=0.05)


@pytest.mark.parametrize("lam", [0.0, 0.1, 0.25, 0.5, 0.75, 1.0, -0.5, 1.7])
def test_end_fixed_alpha_at_zc(lam):
    assert end_fixed_alpha(4, end_fixed_zc(4, lam)) == pytest.approx(max(lam, 1 - lam), abs=1e-13)


def test_oriented_zc_values():
    assert oriented_zc(0.0) == pytest.approx(1 / 3, abs=1e-15)
    assert oriented_zc(0.5) == pytest.approx(0.366406859, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(-1.0, 2.0))
def test_oriented_zc_symmetric_and_below_threshold(lam):
    assert oriented_zc(lam) == pytest.approx(oriented_zc(1 - lam), rel=1e-12)
    assert oriented_zc(lam) <= oriented_zc(0.5) + 1e-15


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(-1.0, 2.0))
def test_oriented_alpha_at_zc(lam):
    assert oriented_alpha(oriented_zc(lam)) == pytest.approx(max(lam, 1 - lam), abs=1e-12)


def test_oriented_alpha_above_threshold():
    assert oriented_alpha(0.4) == -math.inf


def test_oriented_candidates_differ():
    c = oriented_chi_candidates(0.2, 0.0)
    assert c["1-z^2"] != c["1-3z^2"]
    assert c["1-z^2"] == pytest.approx((1 + 0.2) / (1 - 3 * 0.2))


def test_oriented_verdict_selects_one_candidate():
    table, _ = tree_transfer_tables(OrientedTree112(), 12)
    v = resolve_oriented_chi(table)
    assert v.selected == "1-z^2"
    assert v.exact_matches == {"1-z^2": True, "1-3z^2": False}


@pytest.mark.parametrize("lam", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_end_fixed_series_matches_enumeration(lam):
    table, _ = tree_transfer_tables(EndFixedTree(4), 14)
    coeffs = end_fixed_coefficients(4, 14)
    assert first_mismatch(coeffs, table) is None
    Z = tilted_Z(table, lam)
    u = 3.0**lam
    for n in range(15):
        assert laurent_eval(coeffs[n], u) == pytest.approx(Z[n], rel=1e-10)


def test_oriented_coefficients_match_enumeration():
    table, _ = tree_transfer_tables(OrientedTree112(), 12)
    assert first_mismatch(oriented_coefficients(12, "1-z^2"), table) is None
    assert first_mismatch(oriented_coefficients(12, "1-3z^2"), table) == 2
