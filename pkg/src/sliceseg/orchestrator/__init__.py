from .jobs import JobHandle, JobManager, PropagationJob, TERMINAL_STATES
from .propagation import run_all, run_directional

__all__ = [
    "JobHandle",
    "JobManager",
    "PropagationJob",
    "TERMINAL_STATES",
    "run_all",
    "run_directional",
]
