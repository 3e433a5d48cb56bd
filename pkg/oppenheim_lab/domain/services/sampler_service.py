import logging
import math
from collections.abc import Sequence
from fractions import Fraction

import numpy as np

from oppenheim_lab.domain.entities.chain_path import ChainPath
from oppenheim_lab.domain.entities.distribution import DistributionSpec
from oppenheim_lab.domain.entities.expansion_family import ExpansionFamily
from oppenheim_lab.domain.entities.good_sequence import GoodSequence
from oppenheim_lab.domain.entities.rng_stream import RngStream, open_uniforms
from oppenheim_lab.domain.exceptions import ConfigError, ResampleSignal
from oppenheim_lab.domain.services.model_service import delta

logger = logging.getLogger(__name__)

DEFAULT_MAX_CHAIN_LENGTH = 1000
DEFAULT_MAX_DIGIT_BITS = 1 << 20
_FLOAT_SAFE_BITS = 52


def _tail(phi_val, y: float, h: int, dist: DistributionSpec) -> float:
    """P(B > h | previous digit) = F(δ(h + 1))."""
    return float(dist.cdf(delta(0, h + 1, y, phi_val)))


def _lowest(phi_val) -> int:
    if isinstance(phi_val, int):
        return phi_val
    return math.ceil(Fraction(phi_val))


def _invert_tail(phi_val, y: float, u: float, dist: DistributionSpec) -> int:
    """Smallest admissible h with F(δ(h + 1)) <= u, in closed form.

    δ(h + 1) <= v with v = F_inv(u) means h + 1 >= φ(1 + y)/v - φ·y; the
    candidate is corrected by at most one step against the exact tail.
    """
    if not (0.0 < u < 1.0):
        raise ResampleSignal(f"uniform variate {u} is not in (0, 1)")
    v = dist.inverse(u)
    if v <= 0.0:
        raise ResampleSignal(f"F_inv({u}) = 0")

    if (isinstance(phi_val, int) and phi_val.bit_length() > _FLOAT_SAFE_BITS):
        q = Fraction(phi_val) * (Fraction(1.0 + y) / Fraction(v) - Fraction(y))
        h = math.ceil(q) - 1
    else:
        h = math.ceil(phi_val * ((1.0 + y) / v - y)) - 1

    lowest = _lowest(phi_val)
    if h < lowest:
        return lowest
    if _tail(phi_val, y, h, dist) > u:
        h += 1
    elif h > lowest and _tail(phi_val, y, h - 1, dist) <= u:
        h -= 1
    return h


def next_digit(
    b: int,
    n: int,
    fam: ExpansionFamily,
    dist: DistributionSpec,
    u: float,
    history: Sequence[int] | None = None,
) -> int:
    """Draw B_{n+1} given B_n = ``b`` by tail inversion of the conditional law."""
    phi_val = fam.phi_n(n, b)
    y = fam.y_n(n, history if history is not None else (b,))
    return _invert_tail(phi_val, y, u, dist)


def first_digit(fam: ExpansionFamily, dist: DistributionSpec, u: float) -> int:
    """Draw B_1 from P(B_1 > h) = F(m / (h + 1)), m the family's minimal first digit."""
    return _invert_tail(fam.min_first_digit, 0.0, u, dist)


def ratio(next_b: int, phi_val, y: float) -> float:
    """R = (B_{n+1} + φ·Y) / (φ·(1 + Y)) = 1 / δ."""
    return (next_b / phi_val + y) / (1.0 + y)


def sample_chain(
    fam: ExpansionFamily,
    dist: DistributionSpec,
    seq: GoodSequence,
    n: int,
    rng: RngStream,
    max_length: int = DEFAULT_MAX_CHAIN_LENGTH,
    max_digit_bits: int = DEFAULT_MAX_DIGIT_BITS,
) -> ChainPath:
    if n < 1:
        raise ConfigError(f"chain length must be >= 1, got {n}")
    if n > max_length:
        raise ConfigError(f"chain length {n} exceeds the cap {max_length}")

    uniforms = open_uniforms(rng.generator(), n + 1)
    digits = [first_digit(fam, dist, float(uniforms[0]))]
    ratios = np.empty(n, dtype=np.float64)
    ys = []
    for step in range(1, n + 1):
        b = digits[-1]
        history = tuple(digits)
        phi_val = fam.phi_n(step, b)
        y = fam.y_n(step, history)
        following = _invert_tail(phi_val, y, float(uniforms[step]), dist)
        if following.bit_length() > max_digit_bits:
            raise ConfigError(
                f"digit at step {step + 1} needs {following.bit_length()} bits, "
                f"over the cap of {max_digit_bits}"
            )
        digits.append(following)
        ys.append(y)
        ratios[step - 1] = ratio(following, phi_val, y)

    xs = seq.values(seq.indices_above(ratios))
    return ChainPath(digits=tuple(digits), ratios=ratios, xs=xs, ys=tuple(ys))


def x_from_uniforms(u: np.ndarray, dist: DistributionSpec, seq: GoodSequence) -> np.ndarray:
    """X = λ_{j_R} with R = 1 / F_inv(u)."""
    return seq.values(seq.indices_above(1.0 / dist.inverse(u)))


def sample_iid_x(dist: DistributionSpec, seq: GoodSequence, n: int, rng: RngStream) -> np.ndarray:
    """``n`` independent draws with P(X = λ_s) = F(1/λ_{s-1}) - F(1/λ_s)."""
    if n < 1:
        raise ConfigError(f"sample size must be >= 1, got {n}")
    return x_from_uniforms(open_uniforms(rng.generator(), n), dist, seq)
