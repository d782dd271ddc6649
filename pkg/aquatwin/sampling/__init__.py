from aquatwin.sampling.policies import (
    SamplingPolicy,
    budget_from_fraction,
    precompute_static_set,
    select_nodes,
)
from aquatwin.sampling.twin import TwinTrajectory, fuse_state, run_digital_twin

__all__ = [
    "SamplingPolicy",
    "TwinTrajectory",
    "budget_from_fraction",
    "fuse_state",
    "precompute_static_set",
    "run_digital_twin",
    "select_nodes",
]
