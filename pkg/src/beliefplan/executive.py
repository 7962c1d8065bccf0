"""Closed-loop plan/execute/observe driver and the benchmark harness.

A trial plans a symbolic skeleton from the current belief, grounds its
continuous parameters with belief propagation over the skeleton's constraint
network, executes action by action, and replans whenever an action's effects
are detectably missed or a fresh observation moves an object estimate.  The
``shycobra`` mode folds whole observation clouds into the belief; the ``mlo``
baseline determinizes each observation to its single most-likely sample.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, asdict
from importlib import resources

import numpy as np

from . import schema as sch
from . import simulation as sim
from .constraints import EvalContext
from .context import WorldModel, load_world
from .inference import InferenceConfig, max_product_assignment, run_inference
from .metering import WorkMeter
from .network import build_network, initialize_network
from .samplers import GeneratorError, NoiseModel
from .symbolic import Planner, UnsolvableError

ALGORITHMS = ("shycobra", "mlo")
REPLAN_BUDGET = 10
SURPRISE_THRESHOLD = 0.02      # m the point estimate may move without replanning

CSV_COLUMNS = ("alg", "task", "trial", "seed", "planning_time_s",
               "num_errors", "replans", "success")


@dataclass
class RunConfig:
    task: str = "retrieve"
    alg: str = "shycobra"
    seed: int = 0
    samples: int = 100
    iterations: int = 10
    noise_pose: float = 0.10
    noise_config: float = 0.25
    world: object = None          # WorldModel, path, or None for the default
    replan_budget: int = REPLAN_BUDGET
    depth_bound: int = 40

    def __post_init__(self):
        if self.alg not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.alg!r}")
        if self.task not in sim.TASK_GOALS:
            raise ValueError(f"unknown task {self.task!r}")


@dataclass
class RunMetrics:
    alg: str
    task: str
    trial: int
    seed: int
    planning_time_s: float
    num_errors: int
    replans: int
    success: bool


def load_domain():
    text = resources.files("beliefplan.data").joinpath(
        "kitchen_domain.pddl").read_text()
    return sch.parse_domain(text)


def _domain_objects(model: WorldModel) -> list:
    names = set(model.object_radii) | set(model.standing) \
        | set(model.container_location)
    names.update(a[1] for a in model.static_atoms if a[0] == "appliance")
    return sorted(names)


def make_planner(model: WorldModel, depth_bound: int = 40) -> Planner:
    return Planner(load_domain(), _domain_objects(model), model.static_atoms,
                   depth_bound=depth_bound)


def _resolve_actions(skeleton, assignment, model=None):
    for action in skeleton:
        action.resolved = {name: np.asarray(assignment[ref.id])
                           for name, ref in action.params.items()}
        if model is not None:
            _refine_manipulation_config(action, model)


def _refine_manipulation_config(action, model):
    """Snap a pick/place configuration onto its assigned pose and grasp.

    The argmax configuration carries particle-resolution error of a few
    centimetres in position and heading; re-solving the kinematics for the
    exact target pose removes it.  The base is moved the minimum distance that
    puts the wrist in reach with the end effector at the target heading.  The
    snap is skipped when the exact configuration would collide.  Applied
    identically to every algorithm, so comparisons are unaffected.
    """
    res = action.resolved
    if not {"phi", "p", "g"} <= set(res):
        return
    import math

    from .samplers import (SAFETY_MARGIN, compose_pose_grasp, config_clearance,
                           wrap_angle)
    target = compose_pose_grasp(res["p"], res["g"])
    arm = model.arm
    l1, l2 = arm.link_lengths
    heading = float(target[2])
    wrist = np.array([target[0] - l2 * math.cos(heading),
                      target[1] - l2 * math.sin(heading)])
    toward = np.asarray(res["phi"][:2], float) - wrist
    norm = float(np.linalg.norm(toward))
    if norm < 1e-9:
        q1 = float(res["phi"][2])
        toward, norm = -np.array([math.cos(q1), math.sin(q1)]), 1.0
    base = wrist + l1 * toward / norm
    q1 = math.atan2(wrist[1] - base[1], wrist[0] - base[0])
    q2 = float(wrap_angle(heading - q1))
    if abs(q1) > arm.joint_limit or abs(q2) > arm.joint_limit:
        return
    refined = np.array([base[0], base[1], q1, q2])
    if config_clearance(refined, model.scene, arm) > SAFETY_MARGIN:
        res["phi"] = refined


def ground_skeleton(skeleton, belief, model, cfg: RunConfig, meter: WorkMeter,
                    seed: int, traj_cache: dict | None = None):
    """Solve the skeleton's constraint network and bind continuous values."""
    net = build_network(skeleton, belief, model)
    initialize_network(net, belief, model, cfg.samples, seed, meter=meter,
                       traj_cache=traj_cache)
    ctx = EvalContext(scene=model.scene, arm=model.arm,
                      object_radii=model.object_radii,
                      noise=NoiseModel(belief.pose_std, belief.config_std),
                      meter=meter)
    run_inference(net, ctx, InferenceConfig(iterations=cfg.iterations, seed=seed))
    _resolve_actions(skeleton, max_product_assignment(net), model=model)
    return net


def run_trial(cfg: RunConfig, trial: int = 0, model: WorldModel | None = None,
              planner: Planner | None = None,
              traj_cache: dict | None = None) -> RunMetrics:
    if model is None:
        model = cfg.world if isinstance(cfg.world, WorldModel) \
            else load_world(cfg.world)
    if planner is None:
        planner = make_planner(model, cfg.depth_bound)
    noise = NoiseModel(cfg.noise_pose, cfg.noise_config)
    mode = "full" if cfg.alg == "shycobra" else "mlo"
    goal = sim.TASK_GOALS[cfg.task]
    meter = WorkMeter()
    rng = np.random.default_rng([int(cfg.seed) & 0xFFFFFFFF, trial, 0xE0])

    world, belief = sim.make_world(model, noise, cfg.seed)
    obs = sim.observe(world, model, noise, rng, cloud_size=cfg.samples)
    belief = sim.update_belief(belief, obs, model, mode)

    num_errors = 0
    replans = 0
    attempt = 0
    if traj_cache is None:
        traj_cache = {}
    while True:
        init = sim.belief_state(belief, model) | planner.static_atoms
        try:
            skeleton = planner.plan(init, goal)
        except UnsolvableError:
            break
        if len(skeleton) == 0:
            break
        try:
            ground_skeleton(skeleton, belief, model, cfg, meter,
                            seed=cfg.seed * 1000 + attempt,
                            traj_cache=traj_cache)
        except GeneratorError:
            if replans >= cfg.replan_budget:
                break
            replans += 1
            attempt += 1
            continue

        interrupted = False
        for action in skeleton:
            error = sim.execute_action(world, action, model, noise, rng)
            prev_est = {o: belief.point_estimate(o)
                        for o in belief.pose_mixture}
            obs = sim.observe(world, model, noise, rng, cloud_size=cfg.samples)
            belief = sim.update_belief(belief, obs, model, mode)
            if error:
                num_errors += 1
                interrupted = True
                break
            if action.name == "inspect":
                obj = action.bindings["o"]
                moved = float(np.linalg.norm(
                    belief.point_estimate(obj) - prev_est[obj]))
                if moved > SURPRISE_THRESHOLD:
                    interrupted = True
                    break
        if not interrupted:
            break
        if replans >= cfg.replan_budget:
            break
        replans += 1
        attempt += 1

    return RunMetrics(alg=cfg.alg, task=cfg.task, trial=trial, seed=cfg.seed,
                      planning_time_s=meter.seconds, num_errors=num_errors,
                      replans=replans,
                      success=sim.goal_satisfied(world, goal))


def run_benchmark(tasks, algs, trials: int, base_seed: int = 0,
                  samples: int = 100, iterations: int = 10,
                  noise_pose: float = 0.10, noise_config: float = 0.25,
                  world=None, model: WorldModel | None = None) -> list:
    """All (task, alg, trial) combinations with matched seeds per trial."""
    if model is None:
        model = world if isinstance(world, WorldModel) else load_world(world)
    planner = make_planner(model)
    out = []
    # found trajectory shapes depend only on the static obstacles, so the
    # template hint cache is shared across trials (every reuse is re-validated)
    traj_cache: dict = {}
    for task in tasks:
        for alg in algs:
            for trial in range(trials):
                cfg = RunConfig(task=task, alg=alg, seed=base_seed + trial,
                                samples=samples, iterations=iterations,
                                noise_pose=noise_pose, noise_config=noise_config)
                out.append(run_trial(cfg, trial=trial, model=model,
                                     planner=planner, traj_cache=traj_cache))
    return out


def metrics_rows(metrics) -> list:
    rows = []
    for m in metrics:
        rows.append([m.alg, m.task, str(m.trial), str(m.seed),
                     f"{m.planning_time_s:.6f}", str(m.num_errors),
                     str(m.replans), str(int(m.success))])
    return rows


def write_metrics_csv(metrics, path):
    """Deterministic CSV: fixed column order, fixed float formatting, LF."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(metrics_rows(metrics))
    data = buf.getvalue()
    if hasattr(path, "write"):
        path.write(data)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(data)
    return data


def aggregate(metrics) -> dict:
    """Per (task, alg): mean planning time, mean error count, success rate."""
    groups: dict = {}
    for m in metrics:
        groups.setdefault((m.task, m.alg), []).append(m)
    out = {}
    for key, ms in sorted(groups.items()):
        out[key] = {
            "trials": len(ms),
            "mean_planning_time_s": float(np.mean([m.planning_time_s for m in ms])),
            "mean_num_errors": float(np.mean([m.num_errors for m in ms])),
            "mean_replans": float(np.mean([m.replans for m in ms])),
            "success_rate": float(np.mean([m.success for m in ms])),
        }
    return out


def format_aggregate(agg: dict) -> str:
    lines = [f"{'task':<12}{'alg':<10}{'time_s':>10}{'N.E':>8}"
             f"{'replans':>9}{'success':>9}"]
    for (task, alg), row in agg.items():
        lines.append(f"{task:<12}{alg:<10}"
                     f"{row['mean_planning_time_s']:>10.3f}"
                     f"{row['mean_num_errors']:>8.2f}"
                     f"{row['mean_replans']:>9.2f}"
                     f"{row['success_rate']:>9.2f}")
    return "\n".join(lines)
