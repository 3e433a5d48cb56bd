import math

import pytest

from oppenheim_lab.domain.entities import ExpansionFamily
from oppenheim_lab.domain.exceptions import DomainViolationError, InputError
from oppenheim_lab.domain.services.model_service import (
    conditional_digit_mass,
    delta,
    digit_mass,
    digit_masses,
    index_above,
    phi_of,
)
from oppenheim_lab.domain.services.sampler_service import next_digit


def test_index_and_phi_delegate_to_the_sequence(integers, evens):
    assert index_above(2.5, integers) == 3
    assert index_above(6.0, evens) == 4
    assert phi_of(5.0, integers) == pytest.approx(25.0 / 12.0)


@pytest.mark.parametrize(
    ("s", "dist", "expected"),
    [
        (2, "identity", 0.5),
        (1, "identity", 0.0),
        (2, "quadratic", 5.0 / 8.0),
    ],
)
def test_digit_mass(s, dist, expected, integers, request):
    assert digit_mass(s, request.getfixturevalue(dist), integers) == pytest.approx(expected)


def test_digit_mass_rejects_s_below_one(identity, integers):
    with pytest.raises(InputError):
        digit_mass(0, identity, integers)


def test_digit_masses_sum_to_one_minus_tail(quadratic, evens):
    masses = digit_masses(500, quadratic, evens)
    assert masses.min() >= 0.0
    assert masses.sum() == pytest.approx(1.0 - quadratic.cdf(1.0 / evens.value(500)))
    assert masses[1] == pytest.approx(digit_mass(2, quadratic, evens))


@pytest.mark.parametrize(
    ("phi_val", "k", "y", "expected"),
    [
        (2, 2, 0.0, 1.0),
        (2, 3, 0.0, 2.0 / 3.0),
        (2, 4, 1.0, 4.0 / 6.0),
    ],
)
def test_delta(phi_val, k, y, expected):
    assert delta(0, k, y, phi_val) == pytest.approx(expected)


def test_delta_below_kernel_is_a_domain_violation():
    with pytest.raises(DomainViolationError):
        delta(0, 1, 0.0, 2)


@pytest.mark.parametrize(("phi_val", "y"), [(0, 0.0), (2, -0.5)])
def test_delta_rejects_bad_arguments(phi_val, y):
    with pytest.raises(InputError):
        delta(0, 3, y, phi_val)


def test_conditional_digit_mass_examples(engel, luroth, identity):
    assert conditional_digit_mass(2, 3, 1, engel, identity) == pytest.approx(1.0 / 6.0)
    assert conditional_digit_mass(2, 2, 1, luroth, identity) == pytest.approx(1.0 / 3.0)


def test_conditional_digit_mass_telescopes(engel, identity):
    last = 10_000
    total = sum(conditional_digit_mass(2, h, 1, engel, identity) for h in range(2, last + 1))
    assert total == pytest.approx(1.0 - 2.0 / (last + 1))


def test_conditional_digit_mass_rejects_inadmissible_digit(engel, identity):
    with pytest.raises(DomainViolationError):
        conditional_digit_mass(5, 4, 1, engel, identity)


def test_half_integer_kernel_keeps_total_mass_one(identity):
    # φ(2) = 2.5: digits start at 3, which also takes the mass of [2.5, 3)
    family = ExpansionFamily(lambda n, h: h + 0.5)
    last = 99_999
    masses = [conditional_digit_mass(2, h, 1, family, identity) for h in range(3, last + 1)]
    assert masses[0] == pytest.approx(1.0 - 2.5 / 4.0)
    assert masses[1] == pytest.approx(2.5 / 4.0 - 2.5 / 5.0)
    assert math.fsum(masses) == pytest.approx(1.0 - 2.5 / (last + 1), abs=1e-9)


@pytest.mark.parametrize(("u", "expected"), [(0.9, 3), (0.63, 3), (0.6, 4), (0.45, 5)])
def test_sampler_agrees_with_the_half_integer_law(identity, u, expected):
    family = ExpansionFamily(lambda n, h: h + 0.5)
    assert next_digit(2, 1, family, identity, u) == expected
    # P(next = h) is the u-interval [F(δ(h + 1)), F(δ(h)))
    mass = conditional_digit_mass(2, expected, 1, family, identity)
    upper = 1.0 if expected == 3 else 2.5 / expected
    assert mass == pytest.approx(upper - 2.5 / (expected + 1))
