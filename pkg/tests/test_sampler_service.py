import math

import numpy as np
import pytest

from oppenheim_lab.domain.entities import RngStream
from oppenheim_lab.domain.exceptions import ConfigError, ResampleSignal
from oppenheim_lab.domain.services.sampler_service import (
    first_digit,
    next_digit,
    sample_chain,
    sample_iid_x,
    x_from_uniforms,
)
from oppenheim_lab.domain.services.trimstats_service import exact_a


@pytest.mark.parametrize(
    ("family", "b", "u", "expected"),
    [
        ("engel", 2, 0.5, 3),
        ("engel", 2, 1.0 - 1e-12, 2),
        ("engel", 2, 0.1, 19),
        ("luroth", 2, 0.45, 4),
        ("luroth", 3, 0.99, 6),
    ],
)
def test_next_digit(family, b, u, expected, identity, request):
    assert next_digit(b, 1, request.getfixturevalue(family), identity, u) == expected


def test_next_digit_is_the_tail_quantile(engel, quadratic):
    # smallest admissible h with P(B > h | b) <= u
    for u in np.linspace(0.01, 0.99, 50):
        h = next_digit(7, 1, engel, quadratic, float(u))
        assert quadratic.cdf(7 / (h + 1)) <= u
        assert h == 7 or quadratic.cdf(7 / h) > u


def test_next_digit_handles_huge_digits(engel, identity):
    b = 3**200
    h = next_digit(b, 1, engel, identity, 0.5)
    assert abs(h - 2 * b) <= 2


@pytest.mark.parametrize("u", [0.0, 1.0])
def test_next_digit_resamples_on_endpoints(engel, identity, u):
    with pytest.raises(ResampleSignal):
        next_digit(2, 1, engel, identity, u)


def test_first_digit(engel, luroth, identity):
    assert first_digit(engel, identity, 0.3) == 3
    assert first_digit(luroth, identity, 0.5) == 3
    assert first_digit(luroth, identity, 0.999) == 2


def test_engel_chain_invariants(engel, identity, integers):
    chain = sample_chain(engel, identity, integers, 5, RngStream(3, 9))
    assert len(chain.digits) == 6
    assert chain.length == 5
    for k in range(5):
        assert chain.digits[k + 1] >= chain.digits[k]
        assert chain.ratios[k] == chain.digits[k + 1] / chain.digits[k]
    assert chain.xs.tolist() == integers.values(integers.indices_above(chain.ratios)).tolist()


@pytest.mark.parametrize("family", ["engel", "luroth"])
def test_bracket_gaps_within_the_sequence_gap(family, quadratic, evens, request):
    chain = sample_chain(request.getfixturevalue(family), quadratic, evens, 10, RngStream(5, 1))
    gaps = chain.bracket_gaps()
    assert np.all(gaps > 0)
    assert np.all(gaps <= evens.ell)


def test_chain_is_reproducible(engel, identity, integers):
    first = sample_chain(engel, identity, integers, 30, RngStream(1, 2))
    again = sample_chain(engel, identity, integers, 30, RngStream(1, 2))
    assert first.digits == again.digits


def test_chain_length_cap(engel, identity, integers):
    with pytest.raises(ConfigError, match="cap"):
        sample_chain(engel, identity, integers, 11, RngStream(0, 0), max_length=10)


def test_digit_size_cap(luroth, identity, integers):
    with pytest.raises(ConfigError, match="bits"):
        sample_chain(luroth, identity, integers, 3, RngStream(0, 0), max_digit_bits=1)


def test_x_from_uniforms(identity, integers):
    assert x_from_uniforms(np.array([0.3, 0.999]), identity, integers).tolist() == [4.0, 2.0]


def test_iid_exceedance_frequency(quadratic, integers):
    n, t = 100_000, 10.0
    values = sample_iid_x(quadratic, integers, n, RngStream(2024, 0))
    p = exact_a(n, t, quadratic, integers) / n
    standard_error = math.sqrt(p * (1.0 - p) / n)
    assert abs(np.mean(values > t) - p) <= 4.0 * standard_error


def test_iid_values_lie_on_the_sequence(evens, identity):
    values = sample_iid_x(identity, evens, 1000, RngStream(0, 1))
    assert np.all(values % 2 == 0)
    assert values.min() >= evens.value(1)


def test_iid_rejects_empty_sample(identity, integers):
    with pytest.raises(ConfigError):
        sample_iid_x(identity, integers, 0, RngStream(0, 0))
