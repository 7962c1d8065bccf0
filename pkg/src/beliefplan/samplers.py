"""Kinematics, collision checking, RRT-Connect and initial-sample generators.

The robot is a mobile base (two prismatic coordinates) carrying a planar
2-link arm; a configuration is ``[bx, by, q1, q2]``.  Generators populate the
initial particle sets of constraint-network variables: object poses from the
belief, grasps on disc objects, IK configurations and RRT-Connect joint
trajectories, all with uniform weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import Rect, Scene, bounds_clearance, rects_min_distance, wrap_angle
from .metering import WorkMeter
from .particles import ParticleSet

TRAJECTORY_WAYPOINTS = 20
RRT_STEP = 0.1
RRT_MAX_ITERS = 2000
SHORTCUT_ATTEMPTS = 50


class GeneratorError(RuntimeError):
    """A specialized generator could not produce any valid sample."""


@dataclass(frozen=True)
class ArmModel:
    """Planar 2-link arm on a mobile base."""

    link_lengths: tuple = (0.5, 0.5)
    joint_limit: float = math.pi
    base_radius: float = 0.15
    point_radius: float = 0.03
    tuck: tuple = (1.9, 2.6)   # folded-arm joint angles used while driving

    @property
    def reach(self) -> float:
        return sum(self.link_lengths)


@dataclass(frozen=True)
class NoiseModel:
    """Standard deviations of pose and per-joint configuration estimates."""

    pose_std: float = 0.10     # meters
    config_std: float = 0.25   # radians

    def __post_init__(self):
        if self.pose_std < 0 or self.config_std < 0:
            raise ValueError("noise standard deviations must be >= 0")


# ---------------------------------------------------------------------------
# kinematics


def forward_kinematics(config, arm: ArmModel) -> np.ndarray:
    """End-effector pose(s) [x, y, heading] for config(s) [bx, by, q1, q2]."""
    c = np.asarray(config, dtype=float)
    l1, l2 = arm.link_lengths
    q1 = c[..., 2]
    q12 = c[..., 2] + c[..., 3]
    x = c[..., 0] + l1 * np.cos(q1) + l2 * np.cos(q12)
    y = c[..., 1] + l1 * np.sin(q1) + l2 * np.sin(q12)
    return np.stack([x, y, wrap_angle(q12)], axis=-1)


def elbow_position(config, arm: ArmModel) -> np.ndarray:
    c = np.asarray(config, dtype=float)
    l1 = arm.link_lengths[0]
    return np.stack([c[..., 0] + l1 * np.cos(c[..., 2]),
                     c[..., 1] + l1 * np.sin(c[..., 2])], axis=-1)


def inverse_kinematics(base, target, arm: ArmModel):
    """Analytic 2-link IK: joint pairs (q1, q2) reaching ``target`` position.

    Returns the elbow-down and elbow-up branches; a single solution at the
    workspace boundary; an empty list when the target is out of reach.
    """
    l1, l2 = arm.link_lengths
    dx = target[0] - base[0]
    dy = target[1] - base[1]
    d2 = dx * dx + dy * dy
    c2 = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    if c2 > 1.0:
        if c2 > 1.0 + 1e-12:
            return []
        c2 = 1.0
    if c2 < -1.0:
        if c2 < -1.0 - 1e-12:
            return []
        c2 = -1.0
    q2a = math.acos(c2)
    sols = []
    for q2 in ((q2a,) if q2a == 0.0 else (q2a, -q2a)):
        q1 = math.atan2(dy, dx) - math.atan2(l2 * math.sin(q2),
                                             l1 + l2 * math.cos(q2))
        q1 = float(wrap_angle(q1))
        if abs(q1) <= arm.joint_limit and abs(q2) <= arm.joint_limit:
            sols.append((q1, float(q2)))
    return sols


def within_joint_limits(config, arm: ArmModel) -> np.ndarray:
    c = np.asarray(config, dtype=float)
    return (np.abs(c[..., 2]) <= arm.joint_limit) & (np.abs(c[..., 3]) <= arm.joint_limit)


def config_distance(a, b) -> np.ndarray:
    """Unit-weighted configuration-space metric (meters and radians pooled)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.linalg.norm(a - b, axis=-1)


def trajectory_length(traj) -> np.ndarray:
    t = np.asarray(traj, dtype=float)
    return np.linalg.norm(np.diff(t, axis=-2), axis=-1).sum(axis=-1)


# ---------------------------------------------------------------------------
# collision checking (capsule arm model against axis-aligned rectangles)


def _seg_seg_distance(a0, a1, b0, b1):
    """Vectorized minimum distance between segments a (N,2 arrays) and b."""
    d1 = a1 - a0
    d2 = b1 - b0
    r = a0 - b0
    a = np.einsum("...i,...i", d1, d1)
    e = np.einsum("...i,...i", d2, d2)
    f = np.einsum("...i,...i", d2, r)
    c = np.einsum("...i,...i", d1, r)
    b = np.einsum("...i,...i", d1, d2)
    denom = a * e - b * b
    s = np.where(denom > 1e-18, np.clip((b * f - c * e) / np.where(denom > 1e-18, denom, 1.0), 0.0, 1.0), 0.0)
    t = np.where(e > 1e-18, (b * s + f) / np.where(e > 1e-18, e, 1.0), 0.0)
    t_cl = np.clip(t, 0.0, 1.0)
    s = np.where(e > 1e-18,
                 np.where(t != t_cl,
                          np.clip((np.einsum("...i,...i", d1, d2) * t_cl - c)
                                  / np.where(a > 1e-18, a, 1.0), 0.0, 1.0),
                          s),
                 np.where(a > 1e-18, np.clip(-c / np.where(a > 1e-18, a, 1.0), 0.0, 1.0), 0.0))
    closest_a = a0 + s[..., None] * d1
    closest_b = b0 + t_cl[..., None] * d2
    return np.linalg.norm(closest_a - closest_b, axis=-1)


@lru_cache(maxsize=64)
def _rect_edges(rects: tuple):
    """Stacked edge endpoints (R*4, 2) and bounds arrays for a rect tuple."""
    corners = np.array([[[r.x0, r.y0], [r.x1, r.y0], [r.x1, r.y1], [r.x0, r.y1]]
                        for r in rects])                       # (R, 4, 2)
    e0 = corners.reshape(-1, 2)
    e1 = np.roll(corners, -1, axis=1).reshape(-1, 2)
    lo = np.array([[r.x0, r.y0] for r in rects])
    hi = np.array([[r.x1, r.y1] for r in rects])
    return e0, e1, lo, hi


def segment_rect_clearance(p0, p1, rect: Rect) -> np.ndarray:
    """Distance from segments (N,2)->(N,2) to a rectangle; 0 when touching or
    penetrating."""
    return segments_clearance(p0, p1, (rect,))


def segments_clearance(p0, p1, rects) -> np.ndarray:
    """Minimum distance from segments (N,2)->(N,2) to a set of rectangles,
    zero on contact or penetration; one vectorized pass over all edges."""
    p0 = np.atleast_2d(np.asarray(p0, dtype=float))
    p1 = np.atleast_2d(np.asarray(p1, dtype=float))
    if not rects:
        return np.full(p0.shape[0], np.inf)
    e0, e1, lo, hi = _rect_edges(tuple(rects))
    d = _seg_seg_distance(p0[:, None, :], p1[:, None, :],
                          e0[None], e1[None])                  # (N, R*4)
    d = d.reshape(p0.shape[0], len(rects), 4).min(axis=-1)     # (N, R)
    inside = (np.all((p0[:, None, :] >= lo) & (p0[:, None, :] <= hi), axis=-1)
              | np.all((p1[:, None, :] >= lo) & (p1[:, None, :] <= hi), axis=-1))
    return np.where(inside, 0.0, d).min(axis=-1)


def config_clearance(configs, scene: Scene, arm: ArmModel, attached_radius: float = 0.0,
                     attached_offset: float = 0.0) -> np.ndarray:
    """Minimum clearance of the robot (base disc, two arm capsules, optional
    carried disc) over configurations (N, 4).  <= 0 means collision."""
    c = np.atleast_2d(np.asarray(configs, dtype=float))
    base = c[:, :2]
    elbow = elbow_position(c, arm)
    ee_pose = forward_kinematics(c, arm)
    ee = ee_pose[:, :2]

    clear = bounds_clearance(base, scene.bounds) - arm.base_radius
    clear = np.minimum(clear, rects_min_distance(base, scene.base_obstacles)
                       - arm.base_radius)
    # both capsule links go through one kernel call: (base->elbow, elbow->ee)
    links = segments_clearance(np.concatenate([base, elbow]),
                               np.concatenate([elbow, ee]),
                               scene.arm_obstacles) - arm.point_radius
    n = len(c)
    clear = np.minimum.reduce([clear, links[:n], links[n:],
                               bounds_clearance(elbow, scene.bounds) - arm.point_radius,
                               bounds_clearance(ee, scene.bounds) - arm.point_radius])
    if attached_radius > 0.0:
        heading = ee_pose[:, 2]
        center = ee + attached_offset * np.stack([np.cos(heading), np.sin(heading)], axis=-1)
        obj_clear = rects_min_distance(center, scene.arm_obstacles) - attached_radius
        clear = np.minimum.reduce([clear, obj_clear,
                                   bounds_clearance(center, scene.bounds) - attached_radius])
    joint_ok = within_joint_limits(c, arm)
    return np.where(joint_ok, clear, -1.0)


SAFETY_MARGIN = 0.01   # m of clearance kept at collision checks


def segment_free(c0, c1, scene: Scene, arm: ArmModel, attached_radius: float = 0.0,
                 attached_offset: float = 0.0, resolution: float = 0.005,
                 margin: float = SAFETY_MARGIN,
                 meter: WorkMeter | None = None) -> bool:
    """Check a straight configuration-space segment at the given resolution.

    The safety margin covers clearance variation between check points, so an
    accepted segment is collision-free everywhere, not just at the samples.
    """
    c0 = np.asarray(c0, dtype=float)
    c1 = np.asarray(c1, dtype=float)
    n = max(2, int(math.ceil(float(config_distance(c0, c1)) / resolution)) + 1)
    configs = np.linspace(c0, c1, n)
    if meter is not None:
        meter.add_rrt(1)
    return bool(np.all(config_clearance(configs, scene, arm,
                                        attached_radius, attached_offset) > margin))


# ---------------------------------------------------------------------------
# RRT-Connect


def _sample_config(scene: Scene, arm: ArmModel, rng: np.random.Generator,
                   box=None) -> np.ndarray:
    b = scene.bounds
    x0, y0 = b.x0 + arm.base_radius, b.y0 + arm.base_radius
    x1, y1 = b.x1 - arm.base_radius, b.y1 - arm.base_radius
    if box is not None:
        x0, y0 = max(x0, box[0]), max(y0, box[1])
        x1, y1 = min(x1, box[2]), min(y1, box[3])
    return np.array([
        rng.uniform(x0, x1),
        rng.uniform(y0, y1),
        rng.uniform(-arm.joint_limit, arm.joint_limit),
        rng.uniform(-arm.joint_limit, arm.joint_limit),
    ])


def rrt_connect(start, goal, scene: Scene, arm: ArmModel, rng: np.random.Generator,
                attached_radius: float = 0.0, attached_offset: float = 0.0,
                step: float = RRT_STEP, max_iters: int = RRT_MAX_ITERS,
                meter: WorkMeter | None = None):
    """Bidirectional RRT between configurations; returns a waypoint list or
    None after ``max_iters`` failed extensions."""
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)

    # planning-phase checks run at a coarser resolution; emitted trajectories
    # are re-validated densely after waypoint resampling
    def free(c0, c1):
        return segment_free(c0, c1, scene, arm, attached_radius, attached_offset,
                            resolution=0.05, meter=meter)

    # endpoints inside the safety margin can never be connected by a
    # margin-checked segment, so bail out before burning extensions
    if config_clearance(start, scene, arm, attached_radius,
                        attached_offset)[0] <= SAFETY_MARGIN:
        return None
    if config_clearance(goal, scene, arm, attached_radius,
                        attached_offset)[0] <= SAFETY_MARGIN:
        return None
    if free(start, goal):
        return [start, goal]

    trees = ([ (start, None) ], [ (goal, None) ])

    def nearest(tree, q):
        pts = np.array([n[0] for n in tree])
        return int(np.argmin(config_distance(pts, q)))

    def extend(tree, q):
        i = nearest(tree, q)
        base = tree[i][0]
        d = float(config_distance(base, q))
        if d < 1e-9:
            return i, True
        new = q if d <= step else base + (q - base) * (step / d)
        if free(base, new):
            tree.append((new, i))
            return len(tree) - 1, bool(d <= step)
        return None, False

    def path_from(tree, i):
        out = []
        while i is not None:
            out.append(tree[i][0])
            i = tree[i][1]
        return out

    a, b = trees
    swapped = False
    # informed base sampling: grow the box around the endpoints so short
    # connections stay local but hard ones can still detour anywhere
    lo = np.minimum(start[:2], goal[:2])
    hi = np.maximum(start[:2], goal[:2])
    for it in range(max_iters):
        inflate = 0.8 + 2.0 * it / max_iters
        box = (lo[0] - inflate, lo[1] - inflate, hi[0] + inflate, hi[1] + inflate)
        q_rand = _sample_config(scene, arm, rng, box)
        ia, _ = extend(a, q_rand)
        if ia is not None:
            target = a[ia][0]
            while True:
                ib, reached = extend(b, target)
                if ib is None:
                    break
                if reached:
                    pa = path_from(a, ia)[::-1]   # a's root .. meeting point
                    pb = path_from(b, ib)         # meeting point .. b's root
                    full = pa + pb if not swapped else pb[::-1] + pa[::-1]
                    return _shortcut(full, free, rng)
        a, b = b, a
        swapped = not swapped
    return None


def _shortcut(path, free, rng, attempts: int = SHORTCUT_ATTEMPTS):
    path = [np.asarray(p, dtype=float) for p in path]
    for _ in range(attempts):
        if len(path) <= 2:
            break
        i = int(rng.integers(0, len(path) - 2))
        j = int(rng.integers(i + 2, len(path)))
        if free(path[i], path[j]):
            path = path[: i + 1] + path[j:]
    return path


def resample_path(path, waypoints: int = TRAJECTORY_WAYPOINTS) -> np.ndarray:
    """Re-parameterize a polyline path to a fixed waypoint count by arclength."""
    pts = np.asarray(path, dtype=float)
    if len(pts) == 1:
        return np.tile(pts[0], (waypoints, 1))
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 1e-12:
        return np.tile(pts[0], (waypoints, 1))
    targets = np.linspace(0.0, total, waypoints)
    out = np.empty((waypoints, pts.shape[1]))
    for k, t in enumerate(targets):
        i = min(int(np.searchsorted(cum, t, side="right")) - 1, len(seg) - 1)
        frac = (t - cum[i]) / seg[i] if seg[i] > 1e-12 else 0.0
        out[k] = pts[i] + frac * (pts[i + 1] - pts[i])
    return out


# ---------------------------------------------------------------------------
# grasp composition


def grasp_point(pose, grasp) -> np.ndarray:
    """World position of the end effector for grasp [r, alpha, beta] of an
    object at pose (x, y)."""
    pose = np.asarray(pose, dtype=float)
    grasp = np.asarray(grasp, dtype=float)
    r, alpha = grasp[..., 0], grasp[..., 1]
    return np.stack([pose[..., 0] + r * np.cos(alpha),
                     pose[..., 1] + r * np.sin(alpha)], axis=-1)


def grasp_heading(grasp) -> np.ndarray:
    """Intended end-effector heading: pointing at the object center, offset
    by the approach deviation beta."""
    grasp = np.asarray(grasp, dtype=float)
    return wrap_angle(grasp[..., 1] + np.pi + grasp[..., 2])


def compose_pose_grasp(pose, grasp) -> np.ndarray:
    """Target end-effector pose [x, y, heading] for (object pose, grasp)."""
    pt = grasp_point(pose, grasp)
    heading = np.broadcast_to(grasp_heading(grasp), pt[..., 0].shape)
    return np.concatenate([pt, heading[..., None]], axis=-1)


# ---------------------------------------------------------------------------
# generators


def pose_sampler(belief, obj: str, count: int, rng: np.random.Generator) -> ParticleSet:
    """Uniformly weighted poses drawn from the object's belief mixture.

    The highest-mass component mean is always included as the first sample so
    the set contains the belief's point estimate exactly.
    """
    components = belief.pose_mixture[obj]
    masses = np.array([m for _, m, _ in components], dtype=float)
    masses = masses / masses.sum()
    means = np.array([mean for _, _, mean in components], dtype=float)
    idx = rng.choice(len(components), size=count, p=masses)
    vals = means[idx] + rng.normal(0.0, belief.pose_std, size=(count, 2))
    vals[0] = means[int(np.argmax(masses))]
    return ParticleSet(vals, np.full(count, 1.0 / count), "pose")


def place_pose_sampler(region: Rect, obj_radius: float, count: int,
                       rng: np.random.Generator) -> ParticleSet:
    inner = region.shrunk(obj_radius)
    xs = rng.uniform(inner.x0, inner.x1, count)
    ys = rng.uniform(inner.y0, inner.y1, count)
    return ParticleSet(np.stack([xs, ys], axis=1), np.full(count, 1.0 / count), "pose")


def grasp_sampler(pose_particles: np.ndarray, obj_radius: float, scene: Scene,
                  count: int, rng: np.random.Generator,
                  approach_clearance: float = 0.12) -> ParticleSet:
    """Valid uniformly weighted grasps, one per pose particle (round-robin).

    A grasp is (rim offset, rim angle, approach deviation); the offset equals
    the disc radius.  Rim angles whose approach ray is blocked by an arm
    obstacle are rejected and redrawn.
    """
    poses = np.asarray(pose_particles, dtype=float)
    n_pose = len(poses)
    vals = np.empty((count, 3))
    for i in range(count):
        center = poses[i % n_pose]
        alpha = 0.0
        for _ in range(30):
            alpha = rng.uniform(-np.pi, np.pi)
            u = np.array([np.cos(alpha), np.sin(alpha)])
            p_near = center + obj_radius * u
            p_far = center + (obj_radius + approach_clearance) * u
            d = segments_clearance(p_near[None, :], p_far[None, :],
                                   list(scene.arm_obstacles))[0]
            if d > 0.0:
                break
        beta = rng.normal(0.0, 0.15)
        vals[i] = [obj_radius, alpha, beta]
    return ParticleSet(vals, np.full(count, 1.0 / count), "grasp")


def ik_sampler(pose_particles: np.ndarray, grasp_particles: np.ndarray,
               arm: ArmModel, base_anchor, noise: NoiseModel, count: int,
               rng: np.random.Generator, meter: WorkMeter | None = None) -> ParticleSet:
    """Joint configurations reaching pose/grasp particle pairs.

    Analytic planar IK to each grasp's end-effector target, anchored near the
    action's standing base position.  Out-of-reach targets are replaced by
    resampling another pose/grasp pair.  The Gaussian sub-sampling of the
    configuration noise happens later, during message weighting.
    """
    poses = np.asarray(pose_particles, dtype=float)
    grasps = np.asarray(grasp_particles, dtype=float)
    base_anchor = np.asarray(base_anchor, dtype=float)
    n = len(poses)
    vals = np.empty((count, 4))
    for i in range(count):
        placed = False
        for attempt in range(60):
            j = i % n if attempt == 0 else int(rng.integers(0, n))
            target = grasp_point(poses[j], grasps[j % len(grasps)])
            intended = float(grasp_heading(grasps[j % len(grasps)]))
            base = base_anchor + rng.normal(0.0, 0.03, 2)
            if meter is not None:
                meter.add_ik(1)
            sols = inverse_kinematics(base, target, arm)
            if not sols:
                continue
            best = min(sols, key=lambda s: abs(float(
                wrap_angle(s[0] + s[1] - intended))))
            vals[i] = [base[0], base[1], best[0], best[1]]
            placed = True
            break
        if not placed:
            raise GeneratorError("no reachable pose/grasp pair for IK sampler")
    return ParticleSet(vals, np.full(count, 1.0 / count), "config")


def move_config_sampler(standing, arm: ArmModel, count: int,
                        rng: np.random.Generator) -> ParticleSet:
    """Target configurations for a drive action: standing pose, tucked arm."""
    standing = np.asarray(standing, dtype=float)
    vals = np.empty((count, 4))
    vals[:, :2] = standing + rng.normal(0.0, 0.02, (count, 2))
    vals[:, 2] = arm.tuck[0] + rng.normal(0.0, 0.05, count)
    vals[:, 3] = arm.tuck[1] + rng.normal(0.0, 0.05, count)
    return ParticleSet(vals, np.full(count, 1.0 / count), "config")


def initial_config_sampler(belief, count: int, rng: np.random.Generator) -> ParticleSet:
    """Samples of the robot's current configuration belief (base coordinates
    are directly observed; joint estimates carry the configuration noise)."""
    mean = np.asarray(belief.config_mean, dtype=float)
    vals = np.tile(mean, (count, 1))
    vals[1:, 2:] += rng.normal(0.0, belief.config_std, (count - 1, 2))
    return ParticleSet(vals, np.full(count, 1.0 / count), "config")


def trajectory_sampler(start_particles: np.ndarray, goal_particles: np.ndarray,
                       scene: Scene, arm: ArmModel, count: int,
                       rng: np.random.Generator, attached_radius: float = 0.0,
                       attached_offset: float = 0.0,
                       meter: WorkMeter | None = None,
                       template_cache: dict | None = None) -> ParticleSet:
    """Uniformly weighted fixed-length trajectories between sampled
    (start, goal) configuration pairs, planned with RRT-Connect.

    Full RRT runs are expensive, so interior waypoints of already-found paths
    are reused as templates for later endpoint pairs: only the two connecting
    segments need re-checking.  Every returned trajectory is validated
    segment-by-segment after fixed-waypoint resampling, which can otherwise
    cut corners of the planned polyline.
    """
    starts = np.asarray(start_particles, dtype=float)
    goals = np.asarray(goal_particles, dtype=float)
    n = min(len(starts), len(goals))
    # interior waypoint lists of successful paths; an external cache shares
    # them across calls (endpoint jitter rarely changes the path homotopy)
    if template_cache is not None:
        templates = template_cache.setdefault(round(attached_radius, 4), [])
        failed = template_cache.setdefault(("failed", round(attached_radius, 4)), [])
    else:
        templates = []
        failed = []

    def free(c0, c1):
        # a quick gate only: accepted candidates are re-validated densely
        return segment_free(c0, c1, scene, arm, attached_radius,
                            attached_offset, resolution=0.02, meter=meter)

    def validated(path):
        traj = resample_path(path, TRAJECTORY_WAYPOINTS)
        dense = [traj[:1]]
        for a, bb in zip(traj[:-1], traj[1:]):
            steps = max(1, int(math.ceil(float(config_distance(a, bb)) / 0.01)))
            dense.append(np.linspace(a, bb, steps + 1)[1:])
        configs = np.concatenate(dense, axis=0)
        if meter is not None:
            meter.add_rrt(len(traj) - 1)
        clear = config_clearance(configs, scene, arm, attached_radius,
                                 attached_offset)
        return traj if bool(np.all(clear > SAFETY_MARGIN)) else None

    def connect(start, goal):
        if free(start, goal):
            traj = validated([start, goal])
            if traj is not None:
                return traj
        # drive-then-reach / reach-then-drive maneuvers cover most short
        # approaches without a search
        for mid in (np.array([goal[0], goal[1], start[2], start[3]]),
                    np.array([start[0], start[1], goal[2], goal[3]])):
            if free(start, mid) and free(mid, goal):
                traj = validated([start, mid, goal])
                if traj is not None:
                    if len(templates) < 50:
                        templates.append([mid.copy()])
                    return traj
        # fold the arm at the start, drive, unfold at the goal; a folded arm
        # keeps the carried object close to the base and clear of obstacles
        for qa, qb in ((arm.tuck[0], arm.tuck[1]), (-arm.tuck[0], -arm.tuck[1]),
                       (math.pi / 2, -2.6), (-math.pi / 2, 2.6)):
            m1 = np.array([start[0], start[1], qa, qb])
            m2 = np.array([goal[0], goal[1], qa, qb])
            if free(start, m1) and free(m1, m2) and free(m2, goal):
                traj = validated([start, m1, m2, goal])
                if traj is not None:
                    return traj
        for interior in templates:
            path = [start] + interior + [goal]
            if free(path[0], path[1]) and free(path[-2], path[-1]):
                traj = validated(path)
                if traj is not None:
                    return traj
        # a full search that failed for a near-identical endpoint pair will
        # fail again; skip it instead of burning the iteration budget
        for fs, fg in failed:
            if (float(config_distance(fs, start)) < 0.05
                    and float(config_distance(fg, goal)) < 0.05):
                return None
        path = rrt_connect(start, goal, scene, arm, rng,
                           attached_radius, attached_offset, meter=meter)
        if path is None:
            if len(failed) < 200:
                failed.append((np.asarray(start, float).copy(),
                               np.asarray(goal, float).copy()))
            return None
        traj = validated(path)
        # only paths that survive post-resampling validation are worth
        # reusing; a grazing path would fail again for every later pair
        if traj is not None and len(path) > 2 and len(templates) < 50:
            templates.append([np.asarray(p, float) for p in path[1:-1]])
        return traj

    # endpoint samples cluster tightly, so a handful of distinct paths covers
    # the variation; the remaining particle budget repeats found paths
    unique = max(5, count // 20)
    trajs = []
    found = []
    for i in range(count):
        if i >= unique and found:
            trajs.append(found[i % len(found)])
            continue
        traj = None
        for attempt in range(20):
            j = i % n if attempt == 0 else int(rng.integers(0, n))
            k = i % n if attempt == 0 else int(rng.integers(0, n))
            traj = connect(starts[j], goals[k])
            if traj is not None:
                break
        if traj is not None:
            found.append(traj)
        trajs.append(traj)
    successes = [t for t in trajs if t is not None]
    if not successes:
        raise GeneratorError("RRT-Connect failed for every sampled pair")
    vals = np.stack([t if t is not None else successes[0] for t in trajs])
    return ParticleSet(vals, np.full(count, 1.0 / count), "trajectory")
