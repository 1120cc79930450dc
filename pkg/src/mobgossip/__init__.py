"""Multi-message gossip over velocity-constrained mobile wireless networks."""

from .core import ConfigError, Injection, MessageId, NodeState, SimConfig, derive_seed, derive_stream, validate
from .engine import MetricsSeries, SlotOutcome, StopCondition, World, init_world, run, run_slot, strip_profile

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "Injection", "MessageId", "NodeState", "SimConfig", "derive_seed", "derive_stream",
    "validate", "MetricsSeries", "SlotOutcome", "StopCondition", "World", "init_world", "run", "run_slot",
    "strip_profile",
]
