import math
from fractions import Fraction

import pytest

from orbital_stability.characters import character_from_spec, dual_char_sum_G, kronecker_character, ramanujan_sum
from orbital_stability.cyclotomic import CyclotomicSum
from orbital_stability.errors import InvalidArgument
from orbital_stability.geometric_global import (
    LATTICE,
    SHARP,
    dual_kernel_eval,
    dual_support_check,
    dual_support_consistent,
    element_value,
    global_dual_kernel,
    global_small_cell,
    local_orbital,
    ramification_profile,
    regular_orbital_finite,
    relevant_primes,
    small_cell_bruteforce,
    small_cell_local_eval,
    stability_threshold_scan,
    support_set,
)
from orbital_stability.padic_core import prime_factors, valuation, vol_K_bar
from tests.conftest import primitive_place

KRONECKER = {3: -3, 4: -4, 5: 5, 7: -7, 8: 8}


def oracle_support(M, q, U=1):
    """Rationals j / q^2 in [-U, U] \\ {0, 1} meeting the local lower bounds of the support."""
    m_at = prime_factors(M) if M > 1 else {}
    n_at = prime_factors(q)
    out = []
    for j in range(-q * q * U, q * q * U + 1):
        u = Fraction(j, q * q)
        if u in (0, 1):
            continue
        ok = True
        for p, m in m_at.items():
            if p not in n_at and valuation(u, p) < m:
                ok = False
        for p, n in n_at.items():
            m = m_at.get(p, 0)
            floor = m - n if m >= n else -2 * (n - m)
            if valuation(u, p) < floor:
                ok = False
        if ok:
            out.append(u)
    return out


def test_profile_partitions_ramified_primes():
    chi = kronecker_character(5)
    assert ramification_profile(1, chi).sigma_minus == {5}
    assert ramification_profile(25, chi).sigma_plus == {5}
    setup = ramification_profile(6, kronecker_character(-3))
    assert setup.sigma_plus == {3}
    assert setup.m_at(2) == 1
    trivial = ramification_profile(6, character_from_spec("trivial"))
    assert not trivial.sigma_plus and not trivial.sigma_minus


@pytest.mark.parametrize("kwargs", [
    {"M": 0},
    {"M": 1, "U_max": 0},
    {"M": 1, "sigma_plus_rule": "bogus"},
])
def test_profile_rejects_bad_input(kwargs):
    M = kwargs.pop("M")
    with pytest.raises(InvalidArgument):
        ramification_profile(M, kronecker_character(5), **kwargs)


def test_profile_rejects_imprimitive_character():
    with pytest.raises(InvalidArgument):
        ramification_profile(1, character_from_spec("p:3,n:2,g:3"))


def test_support_lattice_size():
    setup = ramification_profile(1, kronecker_character(5))
    assert setup.lattice_step == Fraction(1, 25)
    assert len(support_set(setup)) == 49


@pytest.mark.parametrize("M, q, U", [(2 ** 20, 5, 1), (1, 1, Fraction(1, 2))])
def test_support_empty(M, q, U):
    chi = kronecker_character(KRONECKER[q]) if q > 1 else character_from_spec("trivial")
    setup = ramification_profile(M, chi, U)
    assert support_set(setup) == []
    result = regular_orbital_finite(setup)
    assert result.total.is_exact_zero()
    assert result.row["empty"]


@pytest.mark.parametrize("q", [3, 4, 5, 7, 8])
def test_support_matches_local_bounds(q):
    chi = kronecker_character(KRONECKER[q])
    for M in range(1, 4 * q * q + 1):
        setup = ramification_profile(M, chi)
        got = [e.u for e in support_set(setup)]
        assert got == oracle_support(M, q), M
        if M > q * q * math.gcd(M, q):
            assert got == []


def test_sigma_plus_rules_differ():
    chi = kronecker_character(5)
    assert support_set(ramification_profile(25, chi, sigma_plus_rule=SHARP)) == []
    lattice = support_set(ramification_profile(25, chi, sigma_plus_rule=LATTICE))
    assert [e.u for e in lattice] == [Fraction(-1)]


def test_unramified_places_contribute_one():
    setup = ramification_profile(1, kronecker_character(5))
    for element in support_set(setup)[:10]:
        assert max(relevant_primes(setup, element.t)) < 101
        for p in (101, 103, 107):
            assert local_orbital(setup, p, element.t).value.equals(CyclotomicSum.one())


def test_finite_part_is_sum_of_element_products():
    setup = ramification_profile(2, kronecker_character(-3))
    result = regular_orbital_finite(setup)
    expected = sum((element_value(e).to_complex() for e in result.support), 0j)
    assert abs(result.total_complex - expected) < 1e-9
    assert result.row["support_size"] == len(result.support)


def test_stability_scan_thresholds():
    report = stability_threshold_scan(kronecker_character(-3), range(1, 31))
    assert len(report.rows) == 30
    classes = report.summary["classes"]
    assert classes["1"]["empirical_threshold"] == 8
    assert classes["3"]["empirical_threshold"] == 3
    for info in classes.values():
        assert info["monotone"]
        assert info["bound_holds"]
    for row in report.rows:
        if row["empty"]:
            assert row["nonzero_terms"] == 0
            assert row["finite_part_re"] == 0 and row["finite_part_im"] == 0


def test_stability_scan_independent_of_workers():
    chi = kronecker_character(-4)
    serial = stability_threshold_scan(chi, range(1, 9), workers=1)
    parallel = stability_threshold_scan(chi, range(1, 9), workers=8)
    assert serial.rows == parallel.rows
    assert serial.summary == parallel.summary


@pytest.mark.slow
def test_stability_scan_q5_to_200():
    report = stability_threshold_scan(kronecker_character(5), range(1, 201))
    classes = report.summary["classes"]
    assert classes["1"]["empirical_threshold"] == 24
    assert all(info["monotone"] and info["bound_holds"] for info in classes.values())


SMALL_CELL_PLACES = [(3, 0, 0), (3, 0, 2), (5, 0, 1), (2, 0, 3), (3, 1, 0), (3, 1, 2), (5, 1, 1), (2, 2, 0), (2, 2, 2)]


@pytest.mark.parametrize("p, n, m", SMALL_CELL_PLACES)
@pytest.mark.parametrize("e_x", [-2, -1, 0, 1, 2])
def test_small_cell_closed_form(p, n, m, e_x):
    place = primitive_place(p, n, m)
    s = Fraction(1, 2)
    assert small_cell_local_eval(place, e_x, s).equals(small_cell_bruteforce(place, e_x, s))


@pytest.mark.slow
@pytest.mark.parametrize("p, n, m", [(7, 1, 0), (7, 1, 3), (5, 2, 1), (3, 2, 3), (7, 2, 0)])
@pytest.mark.parametrize("e_x", [-4, -1, 0, 2, 4])
@pytest.mark.parametrize("s", [Fraction(1, 4), Fraction(1, 2), Fraction(1)])
def test_small_cell_closed_form_grid(p, n, m, e_x, s):
    place = primitive_place(p, n, m)
    assert small_cell_local_eval(place, e_x, s).equals(small_cell_bruteforce(place, e_x, s))


def test_small_cell_unramified_value():
    value = small_cell_local_eval(primitive_place(3, 0, 1), 2, Fraction(1, 2))
    assert abs(value.to_complex() - 4 / 81) < 1e-15


def test_small_cell_rejects_non_positive_s():
    with pytest.raises(InvalidArgument):
        small_cell_local_eval(primitive_place(3, 1, 0), 0, 0)


def dual_direct(place, e_x, upto):
    p, n, m_v = place.p, place.n, place.m
    total = 0j
    for m in range(m_v, upto + 1):
        r = ramanujan_sum(p, m, e_x)
        if r:
            total += float(r) * p ** -m * dual_char_sum_G(place, m).to_complex()
    chi_minus_one = 1 if place.chi.unit_turn(-1) == 0 else -1
    return total * chi_minus_one * (1 - 1 / p) / (p ** n * float(vol_K_bar(p, m_v)))


@pytest.mark.parametrize("p, n, m", [(3, 1, 0), (3, 1, 1), (3, 1, 3), (5, 1, 2), (3, 2, 1), (2, 2, 0), (2, 2, 3)])
@pytest.mark.parametrize("e_x", [-5, -2, -1, 0, 1, 3])
def test_dual_kernel_matches_direct_sum(p, n, m, e_x):
    place = primitive_place(p, n, m)
    closed = dual_kernel_eval(place, e_x)
    direct = dual_direct(place, e_x, 60 if p == 2 else 40)
    assert abs(closed.to_complex() - direct) < 2 ** -40
    assert abs(closed) <= (m + 2 * n) / vol_K_bar(p, m)


@pytest.mark.parametrize("p, n, m, e_x", [(3, 1, 0, -2), (3, 1, 2, 0), (5, 1, 1, 1), (3, 2, 0, -3)])
def test_dual_kernel_cutoff_is_exact(p, n, m, e_x):
    place = primitive_place(p, n, m)
    assert dual_kernel_eval(place, e_x, cutoff=10).equals(dual_kernel_eval(place, e_x, cutoff=20))


def test_dual_kernel_cancels_far_from_the_lattice():
    # m_v >= 2n and e_x <= -m_v - 2: the last direct term cancels the tail
    place = primitive_place(3, 1, 2)
    assert dual_kernel_eval(place, -4).is_exact_zero()


def test_dual_kernel_needs_ramified_place():
    with pytest.raises(InvalidArgument):
        dual_kernel_eval(primitive_place(3, 0, 1), 0)


@pytest.mark.parametrize("p, n, m", [(3, 1, 0), (3, 1, 1), (5, 1, 1), (3, 1, 2), (2, 2, 2), (3, 2, 2)])
def test_dual_support_on_the_diagonal_strip(p, n, m):
    place = primitive_place(p, n, m)
    grid = [(e_y, e_b) for e_y in (-1, 0, 1) for e_b in range(m - 2, m + 2)]
    table = dual_support_check(place, grid)
    assert dual_support_consistent(place, table)
    if m >= n and p != 2:
        assert table[(0, m)]


def test_global_small_cell_product():
    setup = ramification_profile(1, kronecker_character(5))
    factors, product = global_small_cell(setup, 2, Fraction(1, 2))
    assert sorted(factors) == [2, 5]
    assert abs(product - 0.25) < 1e-12


def test_global_dual_kernel_factors():
    setup = ramification_profile(1, kronecker_character(-4))
    factors, product = global_dual_kernel(setup, Fraction(1, 3))
    assert sorted(factors) == [2]
    assert abs(product - factors[2].to_complex()) < 1e-15
