"""SFC deployment over space-air-ground integrated networks.

Build a reconfigurable time-expanded graph from a scenario, deploy task
chains with the matching-game heuristic or a baseline, check feasibility and
compare against an exact reference on tiny instances.
"""

from .scenario import Scenario, load_scenario, save_scenario
from .rteg import build_rteg, shortest_path, snapshot
from .deploy import Deployment, check_feasibility, objective_q
from .matchgame import MG_RTEG, Policy, run, run_mg_rteg
from .baselines import AASO, FCFS, run_aaso, run_fcfs

__version__ = "0.1.0"

__all__ = [
    "Scenario", "load_scenario", "save_scenario", "build_rteg", "shortest_path", "snapshot",
    "Deployment", "check_feasibility", "objective_q", "MG_RTEG", "Policy", "run", "run_mg_rteg",
    "AASO", "FCFS", "run_aaso", "run_fcfs",
]
