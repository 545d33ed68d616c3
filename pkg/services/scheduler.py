#!/usr/bin/env python3
"""
Job scheduler service

Runs independent evaluations (per-kappa determinants, sweep samples,
lattice profile rows) on a thread pool and returns results in input order.
"""

import asyncio
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional

from config import PROGRESS_BARS, THREADS

try:
    from tqdm import tqdm
except ImportError:  # progress bars are optional
    tqdm = None

logger = logging.getLogger(__name__)


class SchedulerService:
    """Service for running finite batches of jobs"""

    def __init__(self, threads: int = 1):
        self.threads = 1
        self.executor: Optional[ThreadPoolExecutor] = None
        self.jobs = {}  # {job_id: {'items': int, 'last_run': float, 'duration': float}}
        self.configure(threads)

    def configure(self, threads: int):
        """
        Resize the worker pool

        Args:
            threads: Number of worker threads (>= 1)
        """
        threads = int(threads)
        if threads < 1:
            raise ValueError(f"Thread count must be positive, got {threads}")
        if self.executor is not None and threads != self.threads:
            self.stop()
        self.threads = threads
        logger.debug(f"Scheduler configured with {threads} thread(s)")

    def start(self):
        if self.executor is None and self.threads > 1:
            self.executor = ThreadPoolExecutor(max_workers=self.threads, thread_name_prefix="lab")
            logger.info(f"Scheduler service started ({self.threads} threads)")

    def stop(self):
        if self.executor is None:
            return
        self.executor.shutdown(wait=True)
        self.executor = None
        logger.info("Scheduler service stopped")

    def map(self, func: Callable, items: Iterable, job_id: str = "batch") -> List:
        """
        Apply func to every item

        Args:
            func: Callable of one argument, must not share mutable state
            items: Inputs
            job_id: Name used in logs and job statistics

        Returns:
            Results in input order; the first failure is re-raised
        """
        items = list(items)
        started = time.perf_counter()
        logger.debug(f"Executing job: {job_id} ({len(items)} items)")

        try:
            if self.threads == 1 or len(items) <= 1:
                iterator = items
                if PROGRESS_BARS and tqdm is not None:
                    iterator = tqdm(items, desc=job_id, leave=False)
                results = [func(item) for item in iterator]
            else:
                self.start()
                results = asyncio.run(self._gather(func, items))
        except Exception as e:
            logger.error(f"Job {job_id} failed: {e}", exc_info=True)
            raise

        duration = time.perf_counter() - started
        self.jobs[job_id] = {'items': len(items), 'last_run': started, 'duration': duration}
        logger.debug(f"Job {job_id} completed in {duration:.3f}s")
        return results

    async def _gather(self, func: Callable, items: list) -> list:
        loop = asyncio.get_running_loop()
        futures = [loop.run_in_executor(self.executor, func, item) for item in items]
        return list(await asyncio.gather(*futures))

    def get_job_status(self, job_id: str) -> Optional[dict]:
        """Statistics of the last run of a job, None if it never ran"""
        if job_id not in self.jobs:
            return None
        return {'job_id': job_id, **self.jobs[job_id]}

    def get_all_jobs(self) -> dict:
        return {job_id: dict(job) for job_id, job in self.jobs.items()}


# Global instance
scheduler_service = SchedulerService(THREADS)
