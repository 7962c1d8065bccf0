"""Constraint functions mapping candidate samples to non-negative weights.

Each constraint type weights samples of one target variable given the
highest-weighted samples of the other variables in its scope.  All functions
are vectorized over the leading (particle) axis and pure over the immutable
scene geometry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Rect, Scene, bounds_clearance, rect_signed_distance, wrap_angle
from .samplers import (ArmModel, NoiseModel, compose_pose_grasp, config_clearance,
                       config_distance, forward_kinematics, trajectory_length,
                       within_joint_limits)

# kernel scales (the source material gives no functional forms beyond the
# collision-free example, so these are artifact constants)
KIN_POS_SCALE = 0.02        # m
KIN_ANG_SCALE = 0.1         # rad
MOTION_LENGTH_SCALE = 1.0   # rad (excess-length decay)
MOTION_ENDPOINT_SCALE = 0.05
STABLE_SCALE = 0.01         # m penetration decay
GRASP_OFFSET_SCALE = 0.005  # m
GRASP_ALIGN_SCALE = 0.3     # rad
CFREE_EPS_FLOOR = 1e-4      # m, keeps the goal term finite
CFREE_CLEARANCE_CAP = 1.0   # m per-waypoint clearance cap
SUBSAMPLE_COUNT = 10        # Gaussian configuration sub-samples per mean

SCOPE_KINDS = {
    "CFree": ("trajectory", "grasp"),
    "CFreeH": ("trajectory", "grasp"),
    "Motion": ("config", "config", "trajectory"),
    "Kin": ("config", "pose", "grasp"),
    "GraspH": ("grasp",),
    "Grasp": ("config", "pose", "grasp", "config", "pose"),
    "Stable": ("pose",),
    "InBasin": ("pose",),
    "InSaucepan": ("pose",),
}


@dataclass
class EvalContext:
    """Everything a constraint function needs besides its samples."""

    scene: Scene
    arm: ArmModel
    object_radii: dict
    noise: NoiseModel
    meter: object = None

    def count(self, n: int):
        if self.meter is not None:
            self.meter.add_sigma(n)


@dataclass(frozen=True)
class ConstraintSpec:
    """A grounded constraint: name, variable scope and static context."""

    name: str
    scope: tuple                 # variable ids, ordered per SCOPE_KINDS
    object_id: str | None = None
    region: str | None = None    # support region for Stable/InBasin/InSaucepan
    context_pose: tuple | None = None  # build-time pose estimate for CFree's goal term
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if self.name not in SCOPE_KINDS:
            raise ValueError(f"unknown constraint {self.name!r}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("constraint constants must be positive")

    def weights(self, ctx: EvalContext, target_pos: int, target_values,
                fixed: dict, rng=None) -> np.ndarray:
        """Unnormalized non-negative weights for the target samples.

        ``fixed`` maps the other scope positions to their single best sample.
        For Kin/Grasp messages to configuration variables the weight of each
        sample is the density-weighted sum over Gaussian sub-samples of the
        configuration noise.
        """
        w = _dispatch(self, ctx, target_pos, np.asarray(target_values, float),
                      fixed, rng)
        return np.clip(np.nan_to_num(w, nan=0.0, posinf=0.0, neginf=0.0), 0.0, None)


# ---------------------------------------------------------------------------
# individual constraint functions (scalar-or-batched on any one argument)


def sigma_kin(config, pose, grasp, ctx: EvalContext) -> np.ndarray:
    """Kinematic feasibility of reaching grasp ``g`` of an object at ``p``."""
    config = np.asarray(config, float)
    pose = np.asarray(pose, float)
    grasp = np.asarray(grasp, float)
    target = compose_pose_grasp(pose, grasp)
    fk = forward_kinematics(config, ctx.arm)
    dpos2 = np.sum((fk[..., :2] - target[..., :2]) ** 2, axis=-1)
    dang = wrap_angle(fk[..., 2] - target[..., 2])
    w = np.exp(-(dpos2 / (2 * KIN_POS_SCALE ** 2)
                 + dang ** 2 / (2 * KIN_ANG_SCALE ** 2)))
    return np.where(within_joint_limits(config, ctx.arm), w, 0.0)


def sigma_grasp(config0, pose0, grasp, config1, pose1, ctx: EvalContext) -> np.ndarray:
    """Joint feasibility of the same grasp at pick and at place."""
    return sigma_kin(config0, pose0, grasp, ctx) * sigma_kin(config1, pose1, grasp, ctx)


def sigma_motion(config_a, config_b, traj, ctx: EvalContext) -> np.ndarray:
    """Shortness and endpoint consistency of a trajectory between configs."""
    config_a = np.asarray(config_a, float)
    config_b = np.asarray(config_b, float)
    traj = np.asarray(traj, float)
    length = trajectory_length(traj)
    direct = config_distance(config_a, config_b)
    excess = np.maximum(length - direct, 0.0)
    d0 = config_distance(traj[..., 0, :], config_a)
    d1 = config_distance(traj[..., -1, :], config_b)
    endpoint = np.exp(-(d0 ** 2 + d1 ** 2) / (2 * MOTION_ENDPOINT_SCALE ** 2))
    return np.exp(-excess / MOTION_LENGTH_SCALE) * endpoint


def sigma_stable(pose, region: Rect, radius: float, ctx: EvalContext) -> np.ndarray:
    """1 when the disc footprint lies inside the support region, decaying
    exponentially with the distance it protrudes; 0 outside the world."""
    pose = np.asarray(pose, float)
    pen = np.maximum(rect_signed_distance(pose, region.shrunk(radius)), 0.0)
    w = np.exp(-pen / STABLE_SCALE)
    in_world = bounds_clearance(pose, ctx.scene.bounds) >= 0.0
    return np.where(in_world, w, 0.0)


def sigma_grasph(grasp, radius: float, ctx: EvalContext) -> np.ndarray:
    """Grasp stability for a disc: rim-offset kernel times approach alignment."""
    grasp = np.asarray(grasp, float)
    off = grasp[..., 0] - radius
    beta = wrap_angle(grasp[..., 2])
    return (np.exp(-off ** 2 / (2 * GRASP_OFFSET_SCALE ** 2))
            * np.exp(-beta ** 2 / (2 * GRASP_ALIGN_SCALE ** 2)))


def sigma_cfree(traj, grasp, ctx: EvalContext, attached_radius: float = 0.0,
                attached_offset: float = 0.0, context_pose=None,
                c1: float = 1.0, c2: float = 1.0) -> np.ndarray:
    """Collision-free trajectory weight: cumulative clearance along the path
    plus attraction to the (composed) grasp target at the final waypoint."""
    traj = np.asarray(traj, float)
    single = traj.ndim == 2
    t = traj[None] if single else traj
    m, w_count, _ = t.shape
    flat = t.reshape(m * w_count, 4)
    clear = config_clearance(flat, ctx.scene, ctx.arm,
                             attached_radius, attached_offset).reshape(m, w_count)
    eps1 = np.clip(clear, 0.0, CFREE_CLEARANCE_CAP).sum(axis=1)
    base_inside = np.all(bounds_clearance(t[..., :2], ctx.scene.bounds) >= 0.0, axis=1)
    w = c1 * eps1
    if grasp is not None and context_pose is not None:
        ee_end = forward_kinematics(t[:, -1, :], ctx.arm)
        target = compose_pose_grasp(np.asarray(context_pose, float),
                                    np.asarray(grasp, float))
        eps2 = np.linalg.norm(ee_end[:, :2] - target[..., :2], axis=-1)
        w = w + c2 / np.maximum(eps2, CFREE_EPS_FLOOR)
    w = np.where(base_inside, w, 0.0)
    return w[0] if single else w


def sigma_cfreeh(traj, grasp, obj_radius: float, ctx: EvalContext,
                 context_pose=None, c1: float = 1.0, c2: float = 1.0) -> np.ndarray:
    """As sigma_cfree, with the carried disc swept along at the grasp offset."""
    grasp = np.asarray(grasp, float)
    offset = float(np.atleast_1d(grasp[..., 0])[0]) if grasp is not None else 0.0
    return sigma_cfree(traj, grasp, ctx, attached_radius=obj_radius,
                       attached_offset=offset, context_pose=context_pose,
                       c1=c1, c2=c2)


# ---------------------------------------------------------------------------
# dispatch


def _broadcast_args(spec, target_pos, target_values, fixed):
    args = []
    for pos in range(len(spec.scope)):
        args.append(target_values if pos == target_pos else fixed[pos])
    return args


def _config_subsample_weights(fn, configs, ctx: EvalContext, rng) -> np.ndarray:
    """Expected-feasibility weighting: each config mean is perturbed by the
    configuration noise and scored as sum_j p(sub_j) * sigma(sub_j)."""
    std = ctx.noise.config_std
    if std <= 0.0 or rng is None:
        return fn(configs)
    m = configs.shape[0]
    j = SUBSAMPLE_COUNT
    dev = rng.normal(0.0, std, (m, j, 2))
    subs = np.repeat(configs[:, None, :], j, axis=1).copy()
    subs[..., 2:] += dev
    density = np.exp(-np.sum(dev ** 2, axis=-1) / (2 * std ** 2))
    sig = fn(subs.reshape(m * j, 4)).reshape(m, j)
    ctx.count(m * (j - 1))
    return np.sum(density * sig, axis=1)


def _dispatch(spec: ConstraintSpec, ctx: EvalContext, target_pos, target_values,
              fixed, rng) -> np.ndarray:
    name = spec.name
    n = len(np.atleast_1d(target_values[..., 0])) if target_values.ndim > 1 else 1
    ctx.count(max(n, 1))
    radius = ctx.object_radii.get(spec.object_id, 0.0) if spec.object_id else 0.0

    if name in ("Stable", "InBasin", "InSaucepan"):
        region_name = {"InBasin": "basin", "InSaucepan": "saucepan"}.get(name, spec.region)
        region = ctx.scene.region(region_name)
        return sigma_stable(target_values, region, radius, ctx)

    if name == "GraspH":
        return sigma_grasph(target_values, radius, ctx)

    if name == "Kin":
        args = _broadcast_args(spec, target_pos, target_values, fixed)
        if target_pos == 0:
            return _config_subsample_weights(
                lambda cfgs: sigma_kin(cfgs, args[1], args[2], ctx),
                target_values, ctx, rng)
        return sigma_kin(*args, ctx)

    if name == "Grasp":
        args = _broadcast_args(spec, target_pos, target_values, fixed)
        if target_pos in (0, 3):
            others = [a for i, a in enumerate(args) if i != target_pos]

            def fn(cfgs):
                if target_pos == 0:
                    return sigma_grasp(cfgs, args[1], args[2], args[3], args[4], ctx)
                return sigma_grasp(args[0], args[1], args[2], cfgs, args[4], ctx)

            return _config_subsample_weights(fn, target_values, ctx, rng)
        return sigma_grasp(*args, ctx)

    if name == "Motion":
        args = _broadcast_args(spec, target_pos, target_values, fixed)
        return sigma_motion(*args, ctx)

    if name in ("CFree", "CFreeH"):
        has_grasp = len(spec.scope) > 1
        if target_pos == 0:
            traj = target_values
            grasp = fixed.get(1) if has_grasp else None
        else:
            # message to the grasp variable: weight grasps against the single
            # best trajectory
            traj = fixed[0]
            grasp = target_values
        if name == "CFreeH":
            w = sigma_cfreeh(traj, grasp, radius, ctx,
                             context_pose=spec.context_pose, c1=spec.c1, c2=spec.c2)
        else:
            w = sigma_cfree(traj, grasp, ctx, context_pose=spec.context_pose,
                            c1=spec.c1, c2=spec.c2)
        if target_pos != 0:
            w = np.broadcast_to(np.atleast_1d(w), (len(target_values),)).copy()
            # grasp-side weighting: attraction of the fixed trajectory's end
            # effector to each candidate grasp
            if spec.context_pose is not None:
                ee_end = forward_kinematics(np.asarray(traj, float)[-1], ctx.arm)
                targets = compose_pose_grasp(np.asarray(spec.context_pose, float),
                                             target_values)
                eps2 = np.linalg.norm(targets[..., :2] - ee_end[:2], axis=-1)
                w = spec.c2 / np.maximum(eps2, CFREE_EPS_FLOOR)
        return w

    raise ValueError(f"no dispatch for constraint {name!r}")
