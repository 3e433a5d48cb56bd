import math
from collections.abc import Callable, Sequence
from fractions import Fraction

import numpy as np

from oppenheim_lab.domain.entities.good_sequence import GoodSequence
from oppenheim_lab.domain.exceptions import ModelError


def engel_phi(n: int, h: int) -> int:
    return h


def luroth_type_phi(n: int, h: int) -> int:
    return h * (h - 1)


def zero_y(n: int, history: Sequence[int]) -> float:
    return 0.0


class ExpansionFamily:
    """Kernels φ_n and y_n driving the digit chain B_n.

    ``phi(n, h)`` must be positive on admissible digits; ``y(n, history)``
    receives the digits B_1..B_n seen so far.
    """

    def __init__(
        self,
        phi: Callable[[int, int], float],
        y: Callable[[int, Sequence[int]], float] = zero_y,
        min_first_digit: int = 1,
        kind: str = "custom",
        integer_valued: bool = False,
    ):
        if int(min_first_digit) != min_first_digit or min_first_digit < 1:
            raise ModelError(f"min_first_digit must be an integer >= 1, got {min_first_digit}")
        self._phi = phi
        self._y = y
        self.min_first_digit = int(min_first_digit)
        self.kind = kind
        self.integer_valued = integer_valued

    @classmethod
    def engel(cls) -> "ExpansionFamily":
        return cls(engel_phi, zero_y, min_first_digit=1, kind="engel", integer_valued=True)

    @classmethod
    def luroth_type(cls) -> "ExpansionFamily":
        return cls(luroth_type_phi, zero_y, min_first_digit=2, kind="luroth-type",
                   integer_valued=True)

    @property
    def y_is_zero(self) -> bool:
        return self._y is zero_y

    def phi_n(self, n: int, h: int):
        value = self._phi(n, h)
        if not value > 0:
            raise ModelError(f"φ_{n}({h}) = {value} is not positive")
        return value

    def y_n(self, n: int, history: Sequence[int]) -> float:
        value = float(self._y(n, history))
        if not (math.isfinite(value) and value >= 0):
            raise ModelError(f"y_{n} = {value} must be finite and nonnegative")
        return value

    def first_admissible(self, n: int, b: int) -> int:
        """Smallest digit allowed after ``b`` at step ``n``: ⌈φ_n(b)⌉."""
        value = self.phi_n(n, b)
        if isinstance(value, int):
            return value
        return math.ceil(Fraction(value))

    def satisfies_integrality(self, seq: GoodSequence, digits: Sequence[int] | None = None,
                              prefix: int = 50, steps: Sequence[int] = (1, 2, 3)) -> bool:
        """Check that x·φ_n(h) + (x-1)·y·φ_n(h) is an integer on a finite prefix of Λ.

        Exact for integer φ and y ≡ 0; numerical otherwise.
        """
        if digits is None:
            digits = range(self.min_first_digit, self.min_first_digit + 50)
        lam = seq.values(np.arange(1, prefix + 1))
        for n in steps:
            for h in digits:
                phi = self.phi_n(n, h)
                y = self.y_n(n, (h,))
                for x in lam:
                    if self.integer_valued and self.y_is_zero and float(x).is_integer():
                        value = Fraction(int(x)) * phi
                        if value.denominator != 1:
                            return False
                        continue
                    value = x * phi + (x - 1.0) * y * phi
                    if abs(value - round(value)) > 1e-9 * max(1.0, abs(value)):
                        return False
        return True

    def describe(self) -> dict:
        return {"kind": self.kind, "min_first_digit": self.min_first_digit}
