from abc import ABC, abstractmethod
from collections.abc import Callable, Iterable, Iterator
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


class PathExecutor(ABC):
    @abstractmethod
    def map(self, fn: Callable[[T], R], tasks: Iterable[T]) -> list[R]:
        """
        Run ``fn`` over independent path tasks.

        Args:
            fn (Callable): A picklable module-level function.
            tasks (Iterable): One task per path.

        Returns:
            list: Results in task order, whatever order the work finished in.
        """
        pass

    @abstractmethod
    def imap(self, fn: Callable[[T], R], tasks: Iterable[T]) -> Iterator[R]:
        """
        Like ``map`` but yields results one at a time, in task order.

        Only a bounded window of results is alive at once, so callers can
        stream large per-path outputs.
        """
        pass
