"""Process pool for independent oracle calls.

Tasks must be picklable and the worker function must live at module level.
Results come back in task order, so callers apply their decision rules as if
the batch had run sequentially.
"""

import multiprocessing as mp
from collections.abc import Sequence
from multiprocessing.pool import Pool
from types import TracebackType
from typing import Callable, Optional, TypeVar

from .errors import InvalidParameterError

TaskT = TypeVar("TaskT")
ResultT = TypeVar("ResultT")


class Dispatcher:
    """Runs batches of tasks on up to ``workers`` processes.

    With one worker every task runs inline in the calling process and no pool
    is started. Use as a context manager so the pool is torn down.
    """

    def __init__(self, workers: int = 1) -> None:
        if workers < 1:
            raise InvalidParameterError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        self._pool: Optional[Pool] = None

    def __enter__(self) -> "Dispatcher":
        if self.workers > 1:
            self._pool = mp.Pool(self.workers)
        return self

    def __exit__(
        self,
        exc_type: Optional[type[BaseException]],
        exc: Optional[BaseException],
        tb: Optional[TracebackType],
    ) -> None:
        if self._pool is not None:
            self._pool.terminate()
            self._pool.join()
            self._pool = None

    @property
    def batch_size(self) -> int:
        """Tasks worth submitting at once."""
        return self.workers

    def map(self, fn: Callable[[TaskT], ResultT], tasks: Sequence[TaskT]) -> list[ResultT]:
        """Apply ``fn`` to every task; results are in task order."""
        if self._pool is None or len(tasks) < 2:
            return [fn(task) for task in tasks]
        return self._pool.map(fn, tasks)
