from fractions import Fraction as F

import pytest

import fairvote as fv

TRIAD_TEXT = "3 3\n1 2 3\n2 1 3\n1 3 2\n"


@pytest.fixture(scope="session")
def triad():
    """Three agents, three alternatives: a1>a2>a3, a2>a1>a3, a1>a3>a2."""
    return fv.parse_profile(TRIAD_TEXT)


@pytest.fixture(scope="session")
def x_half():
    return fv.Distribution((F(1, 2), F(1, 4), F(1, 4)))


@pytest.fixture(scope="session")
def x_half_float():
    return fv.Distribution((0.5, 0.25, 0.25))


@pytest.fixture(scope="session")
def u1(triad):
    """First consistent unit-sum utility profile (by alternative index)."""
    u = fv.UtilityProfile(
        utils=((F(1, 2), F(1, 3), F(1, 6)),
               (F(1, 2), F(1, 2), F(0)),
               (F(1, 3), F(1, 3), F(1, 3))),
        class_tag=fv.UtilityClass.UNIT_SUM, weights=(1, 1, 1))
    assert fv.check_consistency(u, triad)[0]
    return u


@pytest.fixture(scope="session")
def u2(triad):
    """Second consistent unit-sum utility profile; the unit-sum worst case."""
    u = fv.UtilityProfile(
        utils=((F(1, 2), F(1, 2), F(0)),
               (F(0), F(1), F(0)),
               (F(1, 3), F(1, 3), F(1, 3))),
        class_tag=fv.UtilityClass.UNIT_SUM, weights=(1, 1, 1))
    assert fv.check_consistency(u, triad)[0]
    return u
