"""Background propagation jobs with progress streaming and cancellation.

One worker thread per job. Cancellation is cooperative at slice
granularity and discards partial results; the session only changes at
commit. Every job publishes per-slice progress events and exactly one
terminal event.
"""

from __future__ import annotations

import logging
import threading
import uuid
from dataclasses import dataclass, field
from typing import Callable, Iterator

from ..errors import EngineError, SessionBusy, UnknownJob

log = logging.getLogger("sliceseg.jobs")

TERMINAL_STATES = ("done", "cancelled", "failed")


@dataclass
class PropagationJob:
    job_id: str
    session_id: str
    mode: str                      # all | left | right
    from_slice: int | None
    state: str = "pending"         # pending -> running -> done|cancelled|failed
    slices_done: int = 0
    slices_total: int = 0
    error: str | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id, "session_id": self.session_id,
            "mode": self.mode, "from_slice": self.from_slice,
            "state": self.state, "slices_done": self.slices_done,
            "slices_total": self.slices_total, "error": self.error,
            "warnings": list(self.warnings),
        }


class JobEvents:
    """Replayable event history; late subscribers see everything."""

    def __init__(self):
        self._history: list[dict] = []
        self._cond = threading.Condition()
        self._terminal = False

    def publish(self, event: dict, terminal: bool = False):
        with self._cond:
            self._history.append(event)
            if terminal:
                self._terminal = True
            self._cond.notify_all()

    def subscribe(self) -> Iterator[dict]:
        index = 0
        while True:
            with self._cond:
                while index >= len(self._history) and not self._terminal:
                    self._cond.wait()
                if index < len(self._history):
                    event = self._history[index]
                    index += 1
                else:
                    return
            yield event


# work(job_api) -> "done" | "cancelled"; raises EngineError on failure
Work = Callable[["JobHandle"], str]


class JobHandle:
    """What a propagation runner sees of its job."""

    def __init__(self, manager: "JobManager", job: PropagationJob,
                 cancel: threading.Event, events: JobEvents):
        self._manager = manager
        self.job = job
        self._cancel = cancel
        self._events = events

    def cancelled(self) -> bool:
        return self._cancel.is_set()

    def progress(self, slice_index: int):
        with self._manager._lock:
            self.job.slices_done += 1
            event = {
                "job": self.job.job_id, "slice": slice_index,
                "done": self.job.slices_done, "total": self.job.slices_total,
            }
        self._events.publish(event)

    def warn(self, message: str):
        with self._manager._lock:
            self.job.warnings.append(message)
        log.warning("job %s: %s", self.job.job_id, message)


class JobManager:
    def __init__(self):
        self._lock = threading.RLock()
        self._jobs: dict[str, PropagationJob] = {}
        self._events: dict[str, JobEvents] = {}
        self._cancels: dict[str, threading.Event] = {}
        self._active_by_session: dict[str, str] = {}
        self._threads: dict[str, threading.Thread] = {}

    def submit(self, session_id: str, mode: str, from_slice: int | None,
               slices_total: int, work: Work) -> PropagationJob:
        with self._lock:
            if session_id in self._active_by_session:
                raise SessionBusy(
                    f"session {session_id} already has job "
                    f"{self._active_by_session[session_id]} in flight"
                )
            job = PropagationJob(
                job_id=uuid.uuid4().hex[:12], session_id=session_id,
                mode=mode, from_slice=from_slice, slices_total=slices_total,
            )
            self._jobs[job.job_id] = job
            self._events[job.job_id] = JobEvents()
            self._cancels[job.job_id] = threading.Event()
            self._active_by_session[session_id] = job.job_id
            thread = threading.Thread(
                target=self._run, args=(job, work), daemon=True,
                name=f"propagate-{job.job_id}",
            )
            self._threads[job.job_id] = thread
            thread.start()
            return job

    def _run(self, job: PropagationJob, work: Work):
        events = self._events[job.job_id]
        cancel = self._cancels[job.job_id]
        with self._lock:
            if cancel.is_set() or job.state == "cancelled":
                job.state = "cancelled"
                self._active_by_session.pop(job.session_id, None)
                events.publish({"job": job.job_id, "state": "cancelled"}, terminal=True)
                return
            job.state = "running"
        handle = JobHandle(self, job, cancel, events)
        try:
            outcome = work(handle)
        except EngineError as exc:
            outcome = "failed"
            with self._lock:
                job.error = f"{exc.code}: {exc.message}"
        except Exception as exc:  # unexpected bug: fail the job, keep serving
            log.exception("job %s crashed", job.job_id)
            outcome = "failed"
            with self._lock:
                job.error = f"INTERNAL: {exc}"
        with self._lock:
            job.state = outcome
            self._active_by_session.pop(job.session_id, None)
        events.publish({"job": job.job_id, "state": outcome}, terminal=True)

    def _get(self, job_id: str) -> PropagationJob:
        try:
            return self._jobs[job_id]
        except KeyError:
            raise UnknownJob(f"no job {job_id!r}") from None

    def status(self, job_id: str) -> PropagationJob:
        with self._lock:
            return self._get(job_id)

    def cancel(self, job_id: str) -> PropagationJob:
        with self._lock:
            job = self._get(job_id)
            if job.state in TERMINAL_STATES:
                return job  # no-op after completion
            self._cancels[job_id].set()
            if job.state == "pending":
                job.state = "cancelled"  # worker publishes the terminal event
            return job

    def subscribe(self, job_id: str) -> Iterator[dict]:
        with self._lock:
            self._get(job_id)
            events = self._events[job_id]
        return events.subscribe()

    def wait(self, job_id: str, timeout: float | None = None) -> PropagationJob:
        """Block until the job's worker finishes (batch/test convenience)."""
        with self._lock:
            thread = self._threads.get(job_id)
        if thread is not None:
            thread.join(timeout)
        return self.status(job_id)
