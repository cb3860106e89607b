"""Desk-scale multi-objective evolution of quadruped gait and leg morphology."""
from .genome import GaitParams, decode, encode, is_feasible, speed_product
from .kinematics import LegGeometry
from .simbench import EvalConfig, EvaluationResult, evaluate, simulate_pass

__version__ = "0.1.0"
