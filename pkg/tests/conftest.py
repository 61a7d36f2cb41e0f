from fractions import Fraction

import pytest

from orbital_stability.characters import LocalCharacter, build_unit_character, kronecker_character
from orbital_stability.newforms import newform_from_eta
from orbital_stability.orbital_local import make_place


def primitive_exponents(p, n):
    if p == 2 and n >= 3:
        return [1, 1]
    return [1]


def primitive_place(p, n, m, uniformizer_turn=Fraction(0)):
    """Place with a primitive character mod p^n (n = 0 gives an unramified place)."""
    exps = primitive_exponents(p, n) if n else []
    chi = LocalCharacter(build_unit_character(p, n, exps), uniformizer_turn)
    return make_place(p, m, chi)


@pytest.fixture
def place_factory():
    return primitive_place


@pytest.fixture(scope="session")
def delta_form():
    return newform_from_eta("1.12.a", 400)


@pytest.fixture(scope="session")
def level11_form():
    return newform_from_eta("11.2.a", 400)


@pytest.fixture(scope="session")
def chi_minus4():
    return kronecker_character(-4)


@pytest.fixture(scope="session")
def chi_5():
    return kronecker_character(5)
