"""pulse-sim: deterministic discrete-event simulator of a replicated-log write path.

Models a broker tier fanning writes out to an ensemble of storage nodes whose
journal fdatasync gates every acknowledgment, including the kernel writeback
contention that couples devices sharing a block layer, stop-the-world GC pause
injection, and a key-range federation/routing layer for horizontal scaling.
"""

__version__ = "0.1.0"

from .engine import Engine, Event, RngState, SimulationError, InternalInvariantError
from .metrics import LatencyHistogram, SimReport, ComponentBreakdown

__all__ = [
    "Engine",
    "Event",
    "RngState",
    "SimulationError",
    "InternalInvariantError",
    "LatencyHistogram",
    "SimReport",
    "ComponentBreakdown",
]
