"""Deterministic process-pool execution for exhaustive searches.

This module provides the ParallelRunner class. Work is split into tasks
whose results are collected as they complete and then returned in task order,
so callers see the same result for any worker count.
"""

from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar
import logging
import time

from src.utils import format_duration

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class ParallelRunner:
    """Run independent tasks sequentially or on a process pool.

    Task functions must be module-level (picklable). Results are always
    returned in task order regardless of completion order.

    Example:
        >>> runner = ParallelRunner(threads=4)
        >>> runner.map(pow, [(2, 3), (3, 2)], star=True)
        [8, 9]
    """

    def __init__(self, threads: int = 1, label: str = "tasks"):
        """Initialize runner.

        Args:
            threads: Worker processes; 1 runs in the calling process.
            label: Name used in progress log messages.
        """
        self.threads = max(1, int(threads))
        self.label = label

    def map(self, func: Callable[..., R], tasks: Sequence[Any], star: bool = False) -> List[R]:
        """Apply func to every task and return results in task order.

        Args:
            func: Picklable callable.
            tasks: Task arguments.
            star: Unpack each task as positional arguments.

        Returns:
            List of results aligned with tasks.

        Raises:
            Exception: The first (lowest-index) exception raised by a task.
        """
        start = time.time()
        results: List[Optional[R]] = [None] * len(tasks)
        errors = {}

        if self.threads == 1 or len(tasks) <= 1:
            logger.debug(f"Running {len(tasks)} {self.label} sequentially")
            for i, task in enumerate(tasks):
                results[i] = func(*task) if star else func(task)
        else:
            logger.debug(f"Running {len(tasks)} {self.label} on {self.threads} workers")
            with ProcessPoolExecutor(max_workers=self.threads) as executor:
                futures = {
                    (executor.submit(func, *task) if star else executor.submit(func, task)): i
                    for i, task in enumerate(tasks)
                }
                for future in as_completed(futures):
                    index = futures[future]
                    try:
                        results[index] = future.result()
                    except Exception as e:
                        errors[index] = e

        if errors:
            first = min(errors)
            logger.error(f"{len(errors)} of {len(tasks)} {self.label} failed; first failure at task {first}")
            raise errors[first]

        logger.debug(f"Completed {len(tasks)} {self.label} in {format_duration(time.time() - start)}")
        return results  # type: ignore[return-value]


def chunk_ranges(total: int, chunk_size: int) -> List[Tuple[int, int]]:
    """Split ``range(total)`` into consecutive half-open index ranges.

    Example:
        >>> chunk_ranges(5, 2)
        [(0, 2), (2, 4), (4, 5)]
    """
    chunk_size = max(1, int(chunk_size))
    return [(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def flatten(batches: Iterable[Iterable[T]]) -> List[T]:
    """Concatenate per-task result lists in task order."""
    return [item for batch in batches for item in batch]
