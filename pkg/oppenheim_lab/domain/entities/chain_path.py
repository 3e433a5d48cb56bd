from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChainPath:
    """One sampled digit chain.

    ``digits`` holds B_1..B_{n+1} as Python integers, ``ratios`` R_1..R_n and
    ``xs`` the discretized X_j = λ_{j_{R_j}}; ``ys`` are the Y_j used at each step.
    """

    digits: tuple[int, ...]
    ratios: np.ndarray
    xs: np.ndarray
    ys: tuple[float, ...]

    @property
    def length(self) -> int:
        return len(self.ratios)

    def bracket_gaps(self) -> np.ndarray:
        """X_j - R_j; in (0, ℓ] for every step of a well-formed path."""
        return self.xs - self.ratios
