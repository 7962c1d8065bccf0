"""Belief-space task and motion planning with particle-based message passing.

A symbolic planner proposes plan skeletons; each skeleton becomes a hybrid
constraint network whose continuous action parameters (configurations, poses,
grasps, trajectories) are resolved by max-product belief propagation over
weighted particle sets.  A simulated kitchen closes the loop with noisy
observations and replanning.
"""

from .constraints import ConstraintSpec, EvalContext
from .context import WorldModel, load_world
from .executive import RunConfig, RunMetrics, run_benchmark, run_trial
from .inference import InferenceConfig, max_product_assignment, run_inference
from .network import ConstraintNetwork, build_network, initialize_network
from .particles import ParticleSet
from .simulation import Belief, Observation, WorldState
from .symbolic import Planner, PlanSkeleton, UnsolvableError

__all__ = [
    "Belief", "ConstraintNetwork", "ConstraintSpec", "EvalContext",
    "InferenceConfig", "Observation", "ParticleSet", "Planner",
    "PlanSkeleton", "RunConfig", "RunMetrics", "UnsolvableError",
    "WorldModel", "WorldState", "build_network", "initialize_network",
    "load_world", "max_product_assignment", "run_benchmark", "run_inference",
    "run_trial",
]

__version__ = "0.1.0"
