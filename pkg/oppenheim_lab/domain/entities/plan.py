import math
from collections.abc import Sequence
from dataclasses import dataclass

from oppenheim_lab.domain.exceptions import ConfigError


@dataclass(frozen=True)
class TrimTruncPlan:
    """Truncation levels t_n = n^γ and trimming counts r_n = ⌈β·n^(1-γ)⌉."""

    gamma: float
    beta: float

    def __post_init__(self):
        if not (0 < self.gamma < 0.5):
            raise ConfigError(f"gamma must lie in (0, 1/2), got {self.gamma}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ConfigError(f"beta must be positive, got {self.beta}")

    def t(self, n: int) -> float:
        return float(n) ** self.gamma

    def r(self, n: int) -> int:
        return math.ceil(self.beta * float(n) ** (1.0 - self.gamma))

    def check_grid(self, n_grid: Sequence[int]) -> None:
        for n in n_grid:
            if self.r(n) >= n:
                raise ConfigError(
                    f"r({n}) = {self.r(n)} is not below n; start the grid at a larger n"
                )
        if len(n_grid) >= 2:
            first, last = n_grid[0], n_grid[-1]
            if self.r(last) < self.r(first) or self.r(last) / last > self.r(first) / first:
                raise ConfigError("r_n must grow while r_n / n shrinks along the grid")
