"""Parallel branch and prune: workers, routing, scheduling and transport."""

from .messages import BLACK, WHITE, BoxBatch, LoadReport, Message, Terminate, Token
from .runtime import WorkerCrashed, run_parallel
from .scheduler import DeterministicScheduler, ParallelResult, SafetyViolation
from .topology import inverse_neighbors, neighbors, preprocess_plan
from .worker import ParallelConfig, ProtocolError, WorkerRuntime, balance_round, split_queue

__all__ = [
    "BLACK",
    "WHITE",
    "BoxBatch",
    "LoadReport",
    "Message",
    "Terminate",
    "Token",
    "DeterministicScheduler",
    "ParallelResult",
    "SafetyViolation",
    "inverse_neighbors",
    "neighbors",
    "preprocess_plan",
    "ParallelConfig",
    "ProtocolError",
    "WorkerRuntime",
    "balance_round",
    "split_queue",
    "run_parallel",
    "WorkerCrashed",
]
