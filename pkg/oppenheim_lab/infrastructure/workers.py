import itertools
import logging
import os
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import ProcessPoolExecutor

from oppenheim_lab.domain.repositories import PathExecutor

logger = logging.getLogger(__name__)


def default_workers() -> int:
    return os.cpu_count() or 1


class SerialPathExecutor(PathExecutor):
    def map(self, fn: Callable, tasks: Iterable) -> list:
        return [fn(task) for task in tasks]

    def imap(self, fn: Callable, tasks: Iterable) -> Iterator:
        for task in tasks:
            yield fn(task)


class ProcessPoolPathExecutor(PathExecutor):
    """Runs path tasks on a process pool; ``Executor.map`` keeps results in task order."""

    def __init__(self, workers: int):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.workers = workers

    def map(self, fn: Callable, tasks: Iterable) -> list:
        tasks = list(tasks)
        if not tasks:
            return []
        chunksize = max(1, len(tasks) // (4 * self.workers))
        logger.debug("dispatching %d tasks to %d workers", len(tasks), self.workers)
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, tasks, chunksize=chunksize))

    def imap(self, fn: Callable, tasks: Iterable) -> Iterator:
        # at most one window of results is held by the parent
        window = 2 * self.workers
        tasks = iter(tasks)
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            while batch := list(itertools.islice(tasks, window)):
                yield from pool.map(fn, batch)


def make_executor(workers: int | None) -> PathExecutor:
    workers = default_workers() if workers is None else workers
    if workers <= 1:
        return SerialPathExecutor()
    return ProcessPoolPathExecutor(workers)
