from dataclasses import dataclass

import numpy as np

from oppenheim_lab.domain.exceptions import InputError

U64_LIMIT = 1 << 64
_RESOLUTION_BITS = 52
_SCALE = float(1 << _RESOLUTION_BITS)


@dataclass(frozen=True)
class RngStream:
    """One reproducible random stream, keyed by ``(seed, stream_id)``.

    Backed by numpy's counter-based Philox generator; the stream id enters the
    seed sequence's spawn key, so streams are independent of each other and of
    the order in which workers consume them.
    """

    seed: int
    stream_id: int

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not (0 <= value < U64_LIMIT):
                raise InputError(f"{name} must be an unsigned 64-bit integer, got {value}")

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(sequence))


def open_uniforms(generator: np.random.Generator, size: int) -> np.ndarray:
    """Uniform variates on the open interval (0, 1); 0 and 1 are never produced."""
    k = generator.integers(0, 1 << _RESOLUTION_BITS, size=size, dtype=np.int64)
    return (k.astype(np.float64) + 0.5) / _SCALE
