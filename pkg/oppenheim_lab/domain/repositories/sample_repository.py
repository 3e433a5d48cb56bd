from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np

from oppenheim_lab.domain.entities import ChainPath


class SampleRepository(ABC):
    @abstractmethod
    def add_iid(self, path_id: int, values: np.ndarray) -> None:
        """
        Write one path of independent X draws.

        Args:
            path_id (int): Index of the path (its RNG stream id).
            values (np.ndarray): X_1..X_n.
        """
        pass

    @abstractmethod
    def add_chain(self, path_id: int, chain: ChainPath) -> None:
        """
        Write one sampled digit chain.

        Args:
            path_id (int): Index of the path.
            chain (ChainPath): The sampled chain.
        """
        pass

    @abstractmethod
    def flush(self) -> list[Path]:
        """
        Finish every open sample file.

        Returns:
            list[Path]: The files written, iid samples first.
        """
        pass

    @abstractmethod
    def close(self) -> None:
        """Release open files without reporting them; safe to call twice."""
        pass
