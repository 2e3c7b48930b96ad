"""Bounded concurrent execution of independent numerical jobs."""

import asyncio
import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, Hashable, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

Job = Tuple[Hashable, Callable[[], Any]]


@dataclass
class JobStatus:
    """Status of a single job."""

    job_key: Hashable
    status: str  # 'pending', 'running', 'done', 'error'
    duration: Optional[float] = None
    error_message: Optional[str] = None


class WorkerPool:
    """Runs jobs in worker threads, at most max_workers at a time.

    Results come back in submission order whatever the scheduling, so any
    reduction over them is deterministic.
    """

    def __init__(self, max_workers: int = 1):
        """Initialize worker pool.

        Args:
            max_workers: Upper bound on concurrently running jobs.
        """
        self.max_workers = max(1, int(max_workers))
        self.job_status: Dict[Hashable, JobStatus] = {}
        self.logger = logging.getLogger(__name__)

    async def run(self, jobs: Sequence[Job]) -> List[Any]:
        """Run every job and return their results in order.

        Raises:
            Exception: The first failure in job order, after all jobs settle.
        """
        semaphore = asyncio.Semaphore(self.max_workers)
        for key, _ in jobs:
            self.job_status[key] = JobStatus(job_key=key, status="pending")

        tasks = [asyncio.create_task(self._run_job(key, fn, semaphore)) for key, fn in jobs]
        results = await asyncio.gather(*tasks, return_exceptions=True)

        failures = [(key, r) for (key, _), r in zip(jobs, results) if isinstance(r, Exception)]
        if failures:
            self.logger.error(f"{len(failures)} of {len(jobs)} job(s) failed")
            raise failures[0][1]
        self.logger.debug(f"Completed {len(jobs)} job(s) with {self.max_workers} worker(s)")
        return list(results)

    async def _run_job(
        self, key: Hashable, fn: Callable[[], Any], semaphore: asyncio.Semaphore
    ) -> Any:
        async with semaphore:
            status = self.job_status[key]
            status.status = "running"
            start = time.perf_counter()
            try:
                result = await asyncio.to_thread(fn)
            except Exception as e:
                status.status = "error"
                status.error_message = str(e)
                self.logger.warning(f"Job {key} failed: {e}")
                raise
            finally:
                status.duration = time.perf_counter() - start
            status.status = "done"
            return result

    def get_job_status(self, key: Hashable) -> Optional[JobStatus]:
        return self.job_status.get(key)


def run_jobs(jobs: Sequence[Job], max_workers: int = 1) -> List[Any]:
    """Synchronous entry point: run jobs and return results in job order.

    A single worker, or a caller already inside an event loop, runs the jobs
    inline in order.
    """
    if max_workers <= 1 or len(jobs) <= 1:
        return [fn() for _, fn in jobs]
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        return asyncio.run(WorkerPool(max_workers).run(jobs))
    logger.debug("Event loop already running, executing jobs inline")
    return [fn() for _, fn in jobs]
