"""In-memory job store with worker threads, progress events, cancellation."""

from __future__ import annotations

import itertools
import threading
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..solver import CancelToken

MAX_JOBS = 64


@dataclass
class Event:
    kind: str       # "cost" | "rule-applied" | "counterexample" | "done"
    payload: object
    at: float = field(default_factory=time.time)


@dataclass
class JobRecord:
    job_id: str
    kind: str       # "verify" | "synthesize"
    target: str
    status: str = "queued"   # queued | running | done | cancelled
    result: Optional[dict] = None
    events: list[Event] = field(default_factory=list)
    cancel: CancelToken = field(default_factory=CancelToken)
    _cond: threading.Condition = field(default_factory=threading.Condition)

    def emit(self, kind: str, payload) -> None:
        with self._cond:
            self.events.append(Event(kind, payload))
            self._cond.notify_all()

    def finish(self, status: str, result: dict) -> None:
        with self._cond:
            self.status = status
            self.result = result
            self.events.append(Event("done", {"status": status}))
            self._cond.notify_all()

    def stream(self, poll: float = 0.2):
        """Yields events as they arrive until the job finishes."""
        i = 0
        while True:
            with self._cond:
                while i >= len(self.events):
                    if self.status in ("done", "cancelled"):
                        return
                    self._cond.wait(timeout=poll)
                batch = self.events[i:]
                i = len(self.events)
            for e in batch:
                yield e
                if e.kind == "done":
                    return


class JobStore:
    def __init__(self, workers: Optional[int] = None):
        self._jobs: OrderedDict[str, JobRecord] = OrderedDict()
        self._lock = threading.Lock()
        self._counter = itertools.count(1)
        self._pool = ThreadPoolExecutor(max_workers=workers or 4)

    def submit(self, kind: str, target: str,
               work: Callable[[JobRecord], dict]) -> JobRecord:
        with self._lock:
            job_id = f"job{next(self._counter)}"
            job = JobRecord(job_id, kind, target)
            self._jobs[job_id] = job
            while len(self._jobs) > MAX_JOBS:
                self._jobs.popitem(last=False)

        def run() -> None:
            job.status = "running"
            try:
                result = work(job)
            except Exception as e:  # surfaced via the record, never crashes a worker
                job.finish("done", {"error": str(e)})
                return
            status = "cancelled" if job.cancel.is_set() else "done"
            job.finish(status, result)

        self._pool.submit(run)
        return job

    def get(self, job_id: str) -> Optional[JobRecord]:
        with self._lock:
            return self._jobs.get(job_id)

    def cancel(self, job_id: str) -> Optional[str]:
        """None = unknown id; "late" = already finished; "ok" otherwise."""
        job = self.get(job_id)
        if job is None:
            return None
        if job.status in ("done", "cancelled"):
            return "late"
        job.cancel.set()
        return "ok"
