from aquatwin.scenarios.archive import read_scenario_set, write_scenario_set
from aquatwin.scenarios.generator import (
    DemandScenario,
    ScenarioSet,
    generate_scenarios,
    inject_noise,
    split_scenarios,
)

__all__ = [
    "DemandScenario",
    "ScenarioSet",
    "generate_scenarios",
    "inject_noise",
    "read_scenario_set",
    "split_scenarios",
    "write_scenario_set",
]
