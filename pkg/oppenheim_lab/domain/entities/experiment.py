from dataclasses import dataclass, field

from oppenheim_lab.domain.entities.distribution import DistributionSpec
from oppenheim_lab.domain.entities.expansion_family import ExpansionFamily
from oppenheim_lab.domain.entities.good_sequence import GoodSequence
from oppenheim_lab.domain.entities.plan import TrimTruncPlan
from oppenheim_lab.domain.exceptions import ConfigError

MAX_GRID_N = 10**8
MODES = ("iid_X", "chain", "both")


@dataclass(frozen=True)
class ExperimentConfig:
    distribution: DistributionSpec
    sequence: GoodSequence
    family: ExpansionFamily
    plan: TrimTruncPlan
    n_grid: tuple[int, ...]
    paths: int
    seed: int
    mode: str = "iid_X"
    max_chain_length: int = 1000
    max_digit_bits: int = 1 << 20
    chain_paths: int = 200_000
    chain_step: int = 5
    eps: float = 0.5
    eps0: float = 0.1
    summability_c: float = 0.01
    echo: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if not grid:
            raise ConfigError("n_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:], strict=False)):
            raise ConfigError(f"n_grid must be strictly increasing, got {grid}")
        if grid[0] < 2:
            raise ConfigError("n_grid must start at n >= 2 (n log n normalizer)")
        if grid[-1] > MAX_GRID_N:
            raise ConfigError(f"n_grid max {grid[-1]} exceeds {MAX_GRID_N}")
        if self.paths < 1:
            raise ConfigError(f"paths must be >= 1, got {self.paths}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.includes_chain and grid[-1] > self.max_chain_length:
            raise ConfigError(
                f"chain mode needs n_grid max <= {self.max_chain_length}, got {grid[-1]}"
            )
        if self.eps <= 0 or self.eps0 <= 0:
            raise ConfigError("eps and eps0 must be positive")
        self.plan.check_grid(grid)

    @property
    def includes_chain(self) -> bool:
        return self.mode in ("chain", "both")

    @property
    def includes_iid(self) -> bool:
        return self.mode in ("iid_X", "both")

    @property
    def n_max(self) -> int:
        return self.n_grid[-1]
