"""Exact (non-random) quantities of the model: index map, φ, digit laws."""

from collections.abc import Sequence

import numpy as np

from oppenheim_lab.domain.entities.distribution import DistributionSpec
from oppenheim_lab.domain.entities.expansion_family import ExpansionFamily
from oppenheim_lab.domain.entities.good_sequence import GoodSequence
from oppenheim_lab.domain.exceptions import DomainViolationError, InputError


def index_above(u: float, seq: GoodSequence) -> int:
    return seq.index_above(u)


def phi_of(u: float, seq: GoodSequence) -> float:
    return seq.phi(u)


def digit_mass(s: int, dist: DistributionSpec, seq: GoodSequence) -> float:
    """P(X = λ_s) = F(1/λ_{s-1}) - F(1/λ_s)."""
    if s < 1:
        raise InputError(f"s must be >= 1, got {s}")
    return dist.tail_at(seq.value(s - 1)) - dist.tail_at(seq.value(s))


def digit_masses(count: int, dist: DistributionSpec, seq: GoodSequence) -> np.ndarray:
    """Vector (p_1, ..., p_count)."""
    tails = dist.tail_at(seq.values(np.arange(count + 1)))
    return tails[:-1] - tails[1:]


def delta(h: int, k: float, y: float, phi_val: float) -> float:
    """δ(h, k, y) = φ(h)(1 + y) / (k + φ(h)·y), for k >= φ(h)."""
    if not phi_val > 0:
        raise InputError(f"phi_val must be positive, got {phi_val}")
    if y < 0:
        raise InputError(f"y must be nonnegative, got {y}")
    if k < phi_val:
        raise DomainViolationError(f"k = {k} lies below φ = {phi_val}")
    # k / φ is formed first so arbitrarily large integer digits stay exact
    return (1.0 + y) / (k / phi_val + y)


def conditional_digit_mass(
    b: int,
    h: int,
    n: int,
    fam: ExpansionFamily,
    dist: DistributionSpec,
    history: Sequence[int] | None = None,
) -> float:
    """P(B_{n+1} = h | B_n = b, ...) = F(δ(b, h, y)) - F(δ(b, h + 1, y)).

    The smallest admissible digit ⌈φ_n(b)⌉ also carries the mass of
    [φ_n(b), ⌈φ_n(b)⌉), so it gets 1 - F(δ(b, h + 1, y)) and the law sums to 1
    for non-integer φ too.
    """
    lowest = fam.first_admissible(n, b)
    if h < lowest:
        raise DomainViolationError(f"digit {h} is inadmissible after {b} (minimum {lowest})")
    phi_val = fam.phi_n(n, b)
    y = fam.y_n(n, history if history is not None else (b,))
    upper = 1.0 if h == lowest else dist.cdf(delta(b, h, y, phi_val))
    lower = dist.cdf(delta(b, h + 1, y, phi_val))
    return float(upper - lower)
