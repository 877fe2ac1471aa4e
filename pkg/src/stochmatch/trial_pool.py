"""Worker pool for independent Monte Carlo trials."""

import logging
from concurrent.futures import Executor, ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Tuple

from .config import get_settings
from .errors import InvalidParameterError

logger = logging.getLogger(__name__)


class TrialPool:
    """Fans contiguous chunks of trial indices out to worker processes.

    Chunk boundaries depend only on the trial count and the chunk size, and
    results come back in chunk order, so the combined output is the same for
    any number of workers.
    """

    def __init__(self, workers: Optional[int] = None, chunk_size: Optional[int] = None):
        """Initialize the pool.

        Args:
            workers: Number of worker processes; 1 runs everything in-process.
                If None, uses the configured default.
            chunk_size: Trials per task. If None, uses the configured default.
        """
        settings = get_settings()
        self.workers = settings.workers if workers is None else workers
        self.chunk_size = settings.chunk_size if chunk_size is None else chunk_size
        if self.workers < 1:
            raise InvalidParameterError(f"workers must be at least 1, got {self.workers}")
        if self.chunk_size < 1:
            raise InvalidParameterError(f"chunk_size must be at least 1, got {self.chunk_size}")
        self._executor: Optional[Executor] = None

    def chunks(self, trials: int) -> List[Tuple[int, int]]:
        """Split range(trials) into [start, stop) blocks."""
        return [(start, min(start + self.chunk_size, trials)) for start in range(0, trials, self.chunk_size)]

    def map_chunks(self, fn: Callable[..., Any], trials: int, *args: Any) -> List[Any]:
        """Run ``fn(*args, start, stop)`` for every chunk.

        Args:
            fn: Module-level function (it must pickle for worker processes)
            trials: Total number of trials
            *args: Leading arguments shared by all chunks

        Returns:
            One result per chunk, in chunk order
        """
        blocks = self.chunks(trials)
        if self.workers == 1 or len(blocks) == 1:
            return [fn(*args, start, stop) for start, stop in blocks]

        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
            logger.debug(f"Started {self.workers} trial workers")
        futures = [self._executor.submit(fn, *args, start, stop) for start, stop in blocks]
        return [future.result() for future in futures]

    def close(self) -> None:
        """Shut down worker processes, if any were started."""
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
            logger.debug("Stopped trial workers")

    def __enter__(self):
        """Enter context manager."""
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Exit context manager."""
        self.close()
