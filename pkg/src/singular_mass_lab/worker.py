"""Process pool for independent ladder points."""

import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor
from typing import Any, Callable, Iterable, List, Optional, Sequence

logger = logging.getLogger(__name__)


def available_parallelism() -> int:
    """CPUs this process may run on."""
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # not on Linux
        return os.cpu_count() or 1


class LadderWorkerPool:
    """Runs campaign jobs in worker processes and returns results in submission order.

    ``jobs == 1`` runs everything in the calling process, ``jobs == 0``
    means one worker per available CPU. The pool is a context manager and is
    also the ``mapper`` the campaign functions accept.
    """

    def __init__(self, jobs: int = 0) -> None:
        if jobs < 0:
            raise ValueError(f"jobs must be non-negative, got {jobs}")
        self.jobs = jobs or available_parallelism()
        self._executor: Optional[Executor] = None
        logger.debug(f"Worker pool initialized with jobs={self.jobs}")

    def __enter__(self) -> "LadderWorkerPool":
        if self.jobs > 1:
            self._executor = ProcessPoolExecutor(max_workers=self.jobs)
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self.shutdown(cancel=exc_info[0] is not None)

    def __call__(self, fn: Callable[..., Any], items: Iterable[Sequence[Any]]) -> List[Any]:
        return self.starmap(fn, items)

    def starmap(self, fn: Callable[..., Any], items: Iterable[Sequence[Any]]) -> List[Any]:
        """[fn(*args) for args in items], possibly in parallel, always in order."""
        items = list(items)
        if self._executor is None or len(items) < 2:
            return [fn(*args) for args in items]
        logger.debug(f"Dispatching {len(items)} {getattr(fn, '__name__', 'job')} jobs to {self.jobs} workers")
        futures = [self._executor.submit(fn, *args) for args in items]
        try:
            return [future.result() for future in futures]
        except BaseException:
            for future in futures:
                future.cancel()
            raise

    def shutdown(self, cancel: bool = False) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True, cancel_futures=cancel)
            self._executor = None
