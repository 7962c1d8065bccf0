"""Simulated kitchen: ground-truth state, noisy observations, belief updates.

The simulator owns the true world state; the planner only ever sees
observations.  An observation of a visible object is a particle cloud around
its true position.  The full belief update summarizes a cloud by its mean,
a maximum-likelihood determinization keeps a single cloud sample instead,
which is the only difference between the two execution modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .context import WorldModel
from .geometry import rect_signed_distance, wrap_angle
from .samplers import NoiseModel, forward_kinematics

OBSERVATION_CLOUD = 100        # samples per observed object
PICK_RADIAL_TOL = 0.02         # m, gripper ring tolerance around the rim
PICK_ANGLE_TOL = 0.35          # rad, pointing tolerance toward the center
ACTUATION_SCALE = 0.05         # arm actuation noise as a fraction of the
                               # configuration estimation noise

# epistemic predicates are about the belief, not the world
EPISTEMIC_PREDICATES = frozenset({"located", "maybe-in"})

TASK_GOALS = {
    "retrieve": frozenset({("holding", "pear")}),
    "wash": frozenset({("clean", "pear")}),
    "cook": frozenset({("cooked", "pear")}),
    "serve-meal": frozenset({("served", "pear")}),
}


class SimulationError(RuntimeError):
    pass


@dataclass
class WorldState:
    """Ground truth, hidden from the planner."""

    object_poses: dict            # obj -> (2,) position
    object_containers: dict       # obj -> container name, or None while held
    robot_config: np.ndarray      # [bx, by, q1, q2]
    robot_location: str
    open_containers: set
    flags: set                    # remaining fluent atoms (on/clean/cooked/...)
    held: tuple | None = None     # (obj, offset in the gripper frame (2,))


@dataclass
class Belief:
    """The planner's estimate of the world."""

    pose_mixture: dict            # obj -> [(container, mass, mean (2,)), ...]
    pose_std: float
    config_mean: np.ndarray
    config_std: float
    flags: frozenset              # believed fluent atoms

    def point_estimate(self, obj: str) -> np.ndarray:
        best = max(self.pose_mixture[obj], key=lambda c: c[1])
        return np.asarray(best[2], float)


@dataclass
class Observation:
    clouds: dict                  # obj -> (K, 2) samples around the true pose
    containers: dict              # obj -> container it was seen in
    searched: tuple               # containers whose interior was visible
    config: np.ndarray            # noisy configuration reading
    flags: frozenset              # directly observable fluent atoms


def true_atoms(world: WorldState) -> frozenset:
    atoms = set(world.flags)
    atoms.add(("robot-at", world.robot_location))
    atoms.update(("open", c) for c in world.open_containers)
    for obj, cont in world.object_containers.items():
        if cont is not None:
            atoms.add(("at", obj, cont))
    if world.held is not None:
        atoms.add(("holding", world.held[0]))
    else:
        atoms.add(("handempty",))
    return frozenset(atoms)


def goal_satisfied(world: WorldState, goal) -> bool:
    return frozenset(goal) <= true_atoms(world)


def make_world(model: WorldModel, noise: NoiseModel, seed: int):
    """Sample a ground-truth world and the matching initial belief.

    Hidden-object container choices are a deterministic function of the seed;
    true positions sit near the container centroid with the pose noise,
    truncated so the footprint stays inside the container.
    """
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, 0x5EED])
    poses, containers, mixture = {}, {}, {}
    for obj in sorted(model.object_radii):
        prior = model.object_prior[obj]
        start = model.object_start[obj]
        cont = start if start is not None else prior[int(rng.integers(len(prior)))]
        region = model.scene.region(cont).shrunk(model.object_radii[obj])
        center = region.center
        pos = center.copy()
        for _ in range(50):
            cand = center + rng.normal(0.0, noise.pose_std, 2)
            if region.contains(cand)[0]:
                pos = cand
                break
        else:
            pos = np.clip(center + rng.normal(0.0, noise.pose_std, 2),
                          [region.x0, region.y0], [region.x1, region.y1])
        poses[obj] = pos
        containers[obj] = cont
        mass = 1.0 / len(prior)
        mixture[obj] = [(c, mass, tuple(model.scene.region(c).center))
                        for c in prior]

    standing = model.standing_pose(model.start_location)
    config_mean = np.array([standing[0], standing[1],
                            model.arm.tuck[0], model.arm.tuck[1]])
    true_config = config_mean.copy()
    true_config[2:] += rng.normal(0.0, noise.config_std, 2)

    world = WorldState(
        object_poses=poses,
        object_containers=containers,
        robot_config=true_config,
        robot_location=model.start_location,
        open_containers={c for c in model.container_location
                         if c not in model.drawers},
        flags={a for a in model.init_flags
               if a[0] not in ("robot-at", "handempty", "open", "at", "located")},
        held=None,
    )
    belief = Belief(
        pose_mixture=mixture,
        pose_std=noise.pose_std,
        config_mean=config_mean,
        config_std=noise.config_std,
        flags=frozenset(model.init_flags),
    )
    return world, belief


def observe(world: WorldState, model: WorldModel, noise: NoiseModel,
            rng: np.random.Generator, cloud_size: int = OBSERVATION_CLOUD) -> Observation:
    """Noisy sensing: particle clouds for objects in open containers at the
    robot's current location, plus a noisy configuration reading."""
    searched = tuple(sorted(
        c for c in world.open_containers
        if model.container_location.get(c) == world.robot_location))
    clouds, containers = {}, {}
    for obj in sorted(world.object_poses):
        cont = world.object_containers[obj]
        if cont in searched:
            clouds[obj] = (world.object_poses[obj]
                           + rng.normal(0.0, noise.pose_std, (cloud_size, 2)))
            containers[obj] = cont
    config = world.robot_config.copy()
    config[2:] += rng.normal(0.0, noise.config_std, 2)
    flags = set(true_atoms(world))
    flags -= {a for a in flags if a[0] == "at" and a[1] not in clouds}
    flags.update(("located", o) for o in clouds)
    return Observation(clouds=clouds, containers=containers, searched=searched,
                       config=config, flags=frozenset(flags))


def update_belief(belief: Belief, obs: Observation, model: WorldModel,
                  mode: str = "full") -> Belief:
    """Fold an observation into the belief.

    ``mode='full'`` keeps the whole observation cloud (summarized by its
    mean); ``mode='mlo'`` determinizes to a single sample of the cloud.
    Containers searched without finding an object lose that object's mass.
    """
    if mode not in ("full", "mlo"):
        raise ValueError(f"unknown belief-update mode {mode!r}")
    mixture = {}
    for obj, comps in belief.pose_mixture.items():
        if obj in obs.clouds:
            cloud = obs.clouds[obj]
            est = cloud.mean(axis=0) if mode == "full" else np.asarray(cloud[0])
            mixture[obj] = [(obs.containers[obj], 1.0, tuple(est))]
        else:
            kept = [(c, m, mean) for c, m, mean in comps
                    if c not in obs.searched or ("holding", obj) in obs.flags]
            total = sum(m for _, m, _ in kept)
            if kept and total > 0:
                mixture[obj] = [(c, m / total, mean) for c, m, mean in kept]
            else:
                mixture[obj] = [(c, 0.0, mean) for c, m, mean in comps]

    located = {a for a in belief.flags if a[0] == "located"}
    at_atoms = set()
    for obj, comps in mixture.items():
        if (("located", obj) in located or ("located", obj) in obs.flags):
            best = max(comps, key=lambda c: c[1])
            if best[1] > 0.999 and ("holding", obj) not in obs.flags:
                at_atoms.add(("at", obj, best[0]))
    flags = (set(obs.flags) - {a for a in obs.flags if a[0] == "at"}) \
        | located | at_atoms
    return Belief(pose_mixture=mixture, pose_std=belief.pose_std,
                  config_mean=np.asarray(obs.config, float),
                  config_std=belief.config_std, flags=frozenset(flags))


def belief_state(belief: Belief, model: WorldModel) -> frozenset:
    """Symbolic planning state: believed fluents plus candidate-container
    literals for objects that are not yet located."""
    atoms = set(belief.flags)
    threshold = 1.0 / max(len(model.drawers), 1)
    for obj, comps in belief.pose_mixture.items():
        if ("located", obj) in atoms:
            continue
        for cont, mass, _ in comps:
            if mass >= threshold - 1e-9:
                atoms.add(("maybe-in", obj, cont))
    return frozenset(atoms)


# ---------------------------------------------------------------------------
# action execution


def _preconditions_hold(action, world: WorldState, model: WorldModel) -> bool:
    truth = true_atoms(world) | model.static_atoms
    for lit in action.ground_preconditions():
        if lit.atom[0] in EPISTEMIC_PREDICATES:
            continue
        if lit.positive != (lit.atom in truth):
            return False
    return True


def _achieved_config(target, noise: NoiseModel, rng) -> np.ndarray:
    achieved = np.asarray(target, float).copy()
    achieved[2:] += rng.normal(0.0, ACTUATION_SCALE * noise.config_std, 2)
    return achieved


def execute_action(world: WorldState, action, model: WorldModel,
                   noise: NoiseModel, rng: np.random.Generator) -> bool:
    """Execute one ground action on the true world.  Returns True when the
    action's effects were detectably missed; a failed action changes nothing."""
    if not _preconditions_hold(action, world, model):
        return True
    name = action.name
    b = action.bindings

    if name == "move":
        target = np.asarray(action.resolved["phi"], float)
        achieved = target.copy()
        achieved[2:] = _achieved_config(target, noise, rng)[2:]
        world.robot_config = achieved
        world.robot_location = b["to"]
        return False

    if name == "open":
        world.open_containers.add(b["d"])
        return False

    if name == "inspect":
        # absence of the object from the inspected drawer is an effect miss
        return world.object_containers[b["o"]] != b["d"]

    if name == "pick":
        obj = b["o"]
        achieved = _achieved_config(action.resolved["phi"], noise, rng)
        ee = forward_kinematics(achieved, model.arm)
        vec = world.object_poses[obj] - ee[:2]
        dist = float(np.linalg.norm(vec))
        radius = model.object_radii[obj]
        ring_ok = abs(dist - radius) <= PICK_RADIAL_TOL
        point_ok = abs(float(wrap_angle(np.arctan2(vec[1], vec[0]) - ee[2]))) \
            <= PICK_ANGLE_TOL
        if not (ring_ok and point_ok):
            return True
        heading = float(ee[2])
        rot = np.array([[np.cos(-heading), -np.sin(-heading)],
                        [np.sin(-heading), np.cos(-heading)]])
        world.held = (obj, rot @ vec)
        world.object_containers[obj] = None
        world.robot_config = achieved
        return False

    if name == "place":
        obj = b["o"]
        if world.held is None or world.held[0] != obj:
            return True
        achieved = _achieved_config(action.resolved["phi"], noise, rng)
        ee = forward_kinematics(achieved, model.arm)
        heading = float(ee[2])
        rot = np.array([[np.cos(heading), -np.sin(heading)],
                        [np.sin(heading), np.cos(heading)]])
        new_pos = ee[:2] + rot @ world.held[1]
        region = model.scene.region(b["c"])
        radius = model.object_radii[obj]
        if float(rect_signed_distance(new_pos, region)) > -radius:
            return True
        world.object_poses[obj] = new_pos
        world.object_containers[obj] = b["c"]
        world.held = None
        world.robot_config = achieved
        return False

    if name == "turn-on":
        world.flags.add(("on", b["a"]))
        return False
    if name == "wash":
        world.flags.add(("clean", b["o"]))
        return False
    if name == "fill":
        world.flags.add(("filled", b["o"]))
        return False
    if name == "pour":
        world.flags.add(("water-in", "saucepan"))
        world.flags.discard(("filled", b["o"]))
        return False
    if name == "cook":
        world.flags.add(("cooked", b["o"]))
        return False
    if name == "serve":
        world.flags.add(("served", b["o"]))
        return False
    raise SimulationError(f"unknown action {name!r}")
