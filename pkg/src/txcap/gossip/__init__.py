from .network import (DesyncEvent, INSTRUMENTED_FLOOR, NodePolicy,
                      PropagationReport, SimNetwork, SimNode)
from .scenario import build_network, load_scenario, run_scenario

__all__ = [
    "DesyncEvent", "INSTRUMENTED_FLOOR", "NodePolicy", "PropagationReport",
    "SimNetwork", "SimNode", "build_network", "load_scenario", "run_scenario",
]
