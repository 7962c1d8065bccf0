"""Deterministic work accounting for planning-time metrics.

Wall-clock timings are not reproducible across runs, so benchmark planning
times are reported in calibrated work-model seconds: a weighted count of the
dominant operations (constraint evaluations, RRT extensions, IK solves).  The
weights approximate measured per-operation cost on a laptop-class CPU, and the
resulting "seconds" are deterministic for a fixed seed and configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

COST_SIGMA_EVAL = 4.0e-6     # one constraint-function sample evaluation
COST_RRT_STEP = 4.0e-5       # one RRT extension / collision-checked segment
COST_IK_CALL = 6.0e-6        # one analytic IK solve
COST_CYCLE = 0.05            # fixed overhead per inference cycle


@dataclass
class WorkMeter:
    sigma_evals: int = 0
    rrt_steps: int = 0
    ik_calls: int = 0
    cycles: int = 0

    def add_sigma(self, n: int):
        self.sigma_evals += int(n)

    def add_rrt(self, n: int):
        self.rrt_steps += int(n)

    def add_ik(self, n: int):
        self.ik_calls += int(n)

    def add_cycle(self):
        self.cycles += 1

    @property
    def seconds(self) -> float:
        return (self.sigma_evals * COST_SIGMA_EVAL
                + self.rrt_steps * COST_RRT_STEP
                + self.ik_calls * COST_IK_CALL
                + self.cycles * COST_CYCLE)
