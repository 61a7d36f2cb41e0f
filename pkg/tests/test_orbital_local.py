from fractions import Fraction

import pytest

from orbital_stability.characters import LocalCharacter, build_unit_character
from orbital_stability.cyclotomic import CyclotomicSum
from orbital_stability.errors import DomainError, InvalidArgument, RedirectError
from orbital_stability.orbital_local import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    UNRAMIFIED,
    LocalPlaceData,
    charsum_J1,
    charsum_J2,
    charsum_S,
    derived_t_grid,
    eval_orbital_bruteforce,
    eval_orbital_cases,
    eval_orbital_unramified,
    make_place,
    orbit_matrix,
    vanishing_predicted,
)
from orbital_stability.padic_core import in_K_m, projective_K_m_shift, units_mod, valuation
from tests.conftest import primitive_place

PLACES = [(2, 2, 0), (2, 2, 2), (3, 1, 0), (3, 1, 1), (3, 1, 2), (5, 1, 0), (5, 1, 1), (3, 2, 0), (3, 2, 1), (3, 2, 2)]
FULL_GRID = [(p, n, m) for p in (2, 3, 5, 7) for n in (1, 2) for m in range(4) if (p, n) != (2, 1)] + [(2, 3, 0), (2, 3, 3)]


def sample(grid, size):
    return grid[:: max(1, len(grid) // size)]


def shell_oracle(place, r1, r2, k, t):
    """Direct membership sum over alpha, beta for one shell, weights chi(alpha) conj(chi)(beta)."""
    p, n, m = place.p, place.n, place.m
    turns = []
    for alpha in units_mod(p, n):
        for beta in units_mod(p, n):
            Y = orbit_matrix(p, n, alpha, beta, r1, r2, t)
            if projective_K_m_shift(Y, p, m) == k:
                turns.append(place.chi.unit_turn(alpha) - place.chi.unit_turn(beta))
    return CyclotomicSum.from_turns(turns)


def test_place_classification(place_factory):
    assert place_factory(3, 1, 0).classification == SIGMA_MINUS
    assert place_factory(3, 1, 1).classification == SIGMA_PLUS
    assert place_factory(3, 0, 2).classification == UNRAMIFIED
    assert place_factory(3, 1, 2).prefactor == Fraction(4)


def test_place_requires_primitive_character():
    chi = LocalCharacter(build_unit_character(3, 2, [3]))
    with pytest.raises(InvalidArgument):
        LocalPlaceData(3, 0, 2, chi)


@pytest.mark.parametrize("t", [0, 1, "1"])
def test_orbital_rejects_degenerate_t(t):
    with pytest.raises(DomainError):
        eval_orbital_cases(primitive_place(3, 1, 0), t)


def test_ramified_evaluators_redirect_unramified_places():
    with pytest.raises(RedirectError):
        eval_orbital_cases(make_place(7, 0), 2)
    with pytest.raises(RedirectError):
        eval_orbital_bruteforce(make_place(7, 0), 2)
    with pytest.raises(RedirectError):
        eval_orbital_unramified(primitive_place(3, 1, 0), 2)


@pytest.mark.parametrize("p, n, m", PLACES)
def test_cases_match_bruteforce(p, n, m):
    place = primitive_place(p, n, m)
    for t in sample(derived_t_grid(p, n), 20):
        brute = eval_orbital_bruteforce(place, t).value
        cases = eval_orbital_cases(place, t).value
        assert cases.equals(brute), f"p={p} n={n} m={m} t={t}"


@pytest.mark.slow
@pytest.mark.parametrize("p, n, m", FULL_GRID)
def test_cases_match_bruteforce_full_grid(p, n, m):
    place = primitive_place(p, n, m)
    for t in derived_t_grid(p, n):
        assert eval_orbital_cases(place, t).value.equals(eval_orbital_bruteforce(place, t).value), t


@pytest.mark.parametrize("t", [Fraction(5), Fraction(10, 9), Fraction(-1, 3), Fraction(1, 2)])
def test_cases_match_bruteforce_on_sigma_plus(t):
    place = primitive_place(5, 1, 1)
    assert eval_orbital_cases(place, t).value.equals(eval_orbital_bruteforce(place, t).value)


def test_boundary_shell_value():
    # k = -n boundary: e(1 - t) = 2n with m = 0; the single pair alpha = beta = -1 survives
    place = primitive_place(3, 1, 0)
    t = Fraction(-1, 8)
    assert not vanishing_predicted(place, t)
    expected = CyclotomicSum.constant(Fraction(1, 3))
    assert eval_orbital_cases(place, t).value.equals(expected)
    assert eval_orbital_bruteforce(place, t).value.equals(expected)


@pytest.mark.parametrize("p, n, m", PLACES)
def test_predicted_vanishing_is_exact(p, n, m):
    place = primitive_place(p, n, m)
    for t in sample(derived_t_grid(p, n), 20):
        if vanishing_predicted(place, t):
            assert eval_orbital_cases(place, t).value.is_exact_zero()
            assert eval_orbital_bruteforce(place, t).value.equals(CyclotomicSum.zero())


@pytest.mark.slow
@pytest.mark.parametrize("p, n, m", FULL_GRID)
def test_predicted_vanishing_is_exact_full_grid(p, n, m):
    place = primitive_place(p, n, m)
    for t in derived_t_grid(p, n):
        if vanishing_predicted(place, t):
            assert eval_orbital_cases(place, t).value.is_exact_zero(), t
            assert eval_orbital_bruteforce(place, t).value.equals(CyclotomicSum.zero()), t


def case_bound(place, t):
    """Sum of the case-wise size bounds for a ramified place; 0 where every case is excluded."""
    p, n, m = place.p, place.n, place.m
    e_t, e_1t = valuation(t, p), valuation(1 - t, p)
    P = Fraction(p)
    bound = Fraction(0)
    if m < n:
        for k in range(m - n, 0):
            if e_1t == -2 * k:
                bound += P ** (m + k)
        if e_t - e_1t >= 0:
            bound += (e_t - e_1t + 1) * P ** m
        if e_t <= -1:
            bound += (1 - e_t) ** 2 * P ** m
    else:
        if e_t <= -1 and m == n:
            bound += (1 - e_t) ** 2 * P ** m
        if e_t >= m - n:
            bound += max(e_t - e_1t + 1 + m - n, 0) * P ** m
    return bound


def fitted_size_constant(places, size):
    worst = 0.0
    for p, n, m in places:
        place = primitive_place(p, n, m)
        for t in sample(derived_t_grid(p, n), size):
            value = abs(eval_orbital_cases(place, t).value)
            bound = case_bound(place, t)
            if bound == 0:
                assert value < 1e-9, f"p={p} n={n} m={m} t={t}"
            else:
                worst = max(worst, value / float(bound))
    return worst


def test_size_within_case_bounds():
    assert fitted_size_constant(PLACES, 20) <= 4


@pytest.mark.slow
def test_size_within_case_bounds_full_grid():
    assert fitted_size_constant(FULL_GRID, 60) <= 4


def test_window_padding_does_not_change_value():
    place = primitive_place(3, 1, 0)
    for t in (Fraction(10, 9), Fraction(-1, 8), Fraction(4), Fraction(1, 3)):
        a = eval_orbital_bruteforce(place, t, window_pad=2).value
        b = eval_orbital_bruteforce(place, t, window_pad=4).value
        assert a.equals(b)


@pytest.mark.parametrize("p, n, t", [(3, 2, Fraction(19)), (5, 2, Fraction(51)), (5, 2, Fraction(-24))])
def test_charsum_S_matches_shell(p, n, t):
    place = primitive_place(p, n, 0)
    assert charsum_S(place, -1, t).equals(shell_oracle(place, n, 0, -1, t))


def test_charsum_S_rejects_wrong_valuation():
    place = primitive_place(3, 2, 0)
    with pytest.raises(InvalidArgument):
        charsum_S(place, -1, Fraction(4))
    with pytest.raises(InvalidArgument):
        charsum_S(place, 0, Fraction(19))


@pytest.mark.parametrize("p, n, m, t", [
    (5, 1, 1, Fraction(5)),
    (5, 1, 0, Fraction(25)),
    (3, 2, 1, Fraction(27)),
    (3, 1, 1, Fraction(9, 4)),
])
def test_charsum_J1_matches_shell(p, n, m, t):
    place = primitive_place(p, n, m)
    e, f = valuation(t, p), valuation(1 - t, p)
    for r1 in range(max(n, m) + f, e + n + 1):
        j1 = charsum_J1(place, r1, t)
        assert j1.equals(shell_oracle(place, r1, -f, 0, t)), r1
        assert abs(j1) <= p ** n + 1e-9


@pytest.mark.parametrize("p, n, m, t", [
    (3, 1, 0, Fraction(-1, 3)),
    (3, 1, 1, Fraction(-1, 3)),
    (3, 2, 0, Fraction(2, 9)),
    (5, 1, 0, Fraction(3, 25)),
])
def test_charsum_J2_matches_shell(p, n, m, t):
    place = primitive_place(p, n, m)
    e, f = valuation(t, p), valuation(1 - t, p)
    for k in range(1, -f + 1):
        r2 = -2 * k - f
        r1 = n + k + e
        if k + r2 < 0:
            continue
        j2 = charsum_J2(place, r1, r2, k, t)
        assert j2.equals(shell_oracle(place, r1, r2, k, t)), k
        assert abs(j2) <= p ** n + 1e-9


@pytest.mark.parametrize("p", [7, 11, 13])
@pytest.mark.parametrize("t", [Fraction(2), Fraction(-1), Fraction(3, 2)])
def test_unramified_unit_point_is_one(p, t):
    value = eval_orbital_unramified(make_place(p, 0), t).value
    assert value.equals(CyclotomicSum.one())


@pytest.mark.parametrize("p, t, expected", [(7, Fraction(7), 2), (7, Fraction(49), 3), (11, Fraction(22), 2)])
def test_unramified_counts_shells(p, t, expected):
    value = eval_orbital_unramified(make_place(p, 0), t).value
    assert value.equals(CyclotomicSum.constant(expected))


@pytest.mark.parametrize("m, t", [(1, Fraction(2)), (0, Fraction(8)), (0, Fraction(50))])
def test_unramified_vanishing(m, t):
    # e(t) - e(1 - t) < m, or e(1 - t) > 0
    place = make_place(7, m)
    assert vanishing_predicted(place, t)
    assert eval_orbital_unramified(place, t).value.is_exact_zero()


def test_derived_grid_membership():
    grid = derived_t_grid(3, 1, size=50)
    H = 3 ** 4
    assert grid == sorted(set(grid))
    assert len(grid) >= 50
    for t in grid:
        assert t not in (0, 1)
        assert abs(t.numerator) <= H and H % t.denominator == 0


def test_orbit_matrix_shell_is_in_K_for_identity_data():
    Y = orbit_matrix(3, 1, 0, 0, 0, 0, Fraction(0))
    assert in_K_m(Y, 3, 0)


@pytest.mark.parametrize("p", [7, 11, 13])
@pytest.mark.parametrize("m", [0, 1, 2])
def test_unramified_vanishing_on_grid(p, m):
    place = make_place(p, m)
    for t in sample(derived_t_grid(p, 1), 30):
        value = eval_orbital_unramified(place, t).value
        if vanishing_predicted(place, t):
            assert value.is_exact_zero(), t
        elif m == 0 and valuation(t, p) == 0 and valuation(1 - t, p) == 0:
            assert value.equals(CyclotomicSum.one()), t
