"""Kinematics, collision checking, RRT and the sample generators."""

import numpy as np
import pytest

from beliefplan.geometry import Rect, Scene
from beliefplan.samplers import (ArmModel, NoiseModel, compose_pose_grasp,
                                 config_clearance, config_distance,
                                 forward_kinematics, grasp_heading,
                                 grasp_point, grasp_sampler,
                                 initial_config_sampler, inverse_kinematics,
                                 ik_sampler, move_config_sampler,
                                 place_pose_sampler, pose_sampler,
                                 resample_path, rrt_connect, segment_free,
                                 trajectory_sampler)

ARM = ArmModel()


def empty_scene():
    return Scene(bounds=Rect(0, 0, 4, 3), arm_obstacles=(), base_obstacles=(),
                 regions={})


def test_forward_kinematics_known_values():
    # straight arm along +x
    ee = forward_kinematics([1.0, 1.0, 0.0, 0.0], ARM)
    assert np.allclose(ee, [2.0, 1.0, 0.0])
    # first link +x, elbow bent +90 degrees
    ee = forward_kinematics([0.0, 0.0, 0.0, np.pi / 2], ARM)
    assert np.allclose(ee, [0.5, 0.5, np.pi / 2])


def test_fk_ik_roundtrip_dense(rng):
    arm = ARM
    errs = []
    for _ in range(2000):
        base = rng.uniform(0, 3, 2)
        q = rng.uniform(-np.pi, np.pi, 2)
        target = forward_kinematics([*base, *q], arm)[:2]
        sols = inverse_kinematics(base, target, arm)
        assert sols
        best = min(np.linalg.norm(
            forward_kinematics([*base, *s], arm)[:2] - target) for s in sols)
        errs.append(best)
    assert max(errs) < 1e-9


def test_ik_out_of_reach_and_boundary():
    assert inverse_kinematics([0, 0], [1.5, 0.0], ARM) == []
    sols = inverse_kinematics([0, 0], [1.0, 0.0], ARM)
    assert len(sols) == 1  # workspace boundary: single solution
    sols = inverse_kinematics([0, 0], [0.5, 0.3], ARM)
    assert len(sols) == 2  # elbow-up and elbow-down


def test_config_clearance_detects_collision():
    scene = Scene(bounds=Rect(0, 0, 4, 3),
                  arm_obstacles=(Rect(1.7, 1.3, 2.3, 1.7),),
                  base_obstacles=(Rect(1.7, 1.3, 2.3, 1.7),), regions={})
    # base inside the obstacle
    assert config_clearance([2.0, 1.5, 0, 0], scene, ARM)[0] < 0
    # arm sweeping through the obstacle from the left
    assert config_clearance([1.2, 1.5, 0.0, 0.0], scene, ARM)[0] < 0
    # well clear
    assert config_clearance([0.5, 0.5, 0.0, 0.0], scene, ARM)[0] > 0.1
    # carried object collides even when the robot does not
    near = [1.4, 2.4, -np.pi / 2, 0.0]   # ee at (1.4, 1.4) pointing down
    assert config_clearance(near, scene, ARM)[0] > 0
    assert config_clearance(near, scene, ARM, attached_radius=0.4)[0] < 0


def test_joint_limit_violation_flagged():
    scene = empty_scene()
    c = [2.0, 1.5, 0.0, 3.5]
    assert config_clearance(c, scene, ARM)[0] == -1.0


def test_segment_free_margin():
    scene = Scene(bounds=Rect(0, 0, 4, 3),
                  arm_obstacles=(), base_obstacles=(Rect(1.9, 0, 2.1, 3),),
                  regions={})
    a = [0.5, 1.5, 0.0, 0.0]
    b = [3.5, 1.5, 0.0, 0.0]
    assert not segment_free(a, b, scene, ARM)
    c = [0.5, 1.5, 0, 0]
    d = [1.0, 1.5, 0, 0]
    assert segment_free(c, d, scene, ARM)


def test_rrt_connect_detours_and_shortcuts(rng):
    scene = Scene(bounds=Rect(0, 0, 4, 3),
                  arm_obstacles=(Rect(1.7, 0.0, 2.3, 2.0),),
                  base_obstacles=(Rect(1.7, 0.0, 2.3, 2.0),), regions={})
    start = np.array([1.0, 2.7, -2.0, 2.0])
    goal = np.array([3.0, 2.7, -2.0, 2.0])
    path = rrt_connect(start, goal, scene, ARM, rng)
    assert path is not None
    assert np.allclose(path[0], start) and np.allclose(path[-1], goal)
    for u, v in zip(path[:-1], path[1:]):
        assert segment_free(u, v, scene, ARM)


def test_rrt_rejects_colliding_endpoints(rng):
    scene = Scene(bounds=Rect(0, 0, 4, 3),
                  arm_obstacles=(), base_obstacles=(Rect(0.5, 0.5, 1.5, 1.5),),
                  regions={})
    inside = np.array([1.0, 1.0, 0.0, 0.0])
    free_cfg = np.array([3.0, 2.0, 0.0, 0.0])
    assert rrt_connect(inside, free_cfg, scene, ARM, rng) is None


def test_resample_path_fixed_waypoints():
    path = [np.zeros(4), np.array([1.0, 0, 0, 0]), np.array([1.0, 1.0, 0, 0])]
    out = resample_path(path, 20)
    assert out.shape == (20, 4)
    assert np.allclose(out[0], path[0]) and np.allclose(out[-1], path[-1])
    # arclength-uniform spacing (the step straddling the corner is a chord,
    # so it may be slightly shorter than the arclength increment)
    steps = np.linalg.norm(np.diff(out, axis=0), axis=1)
    assert np.all(steps <= 2.0 / 19 + 1e-9)
    assert np.all(steps > 0.7 * 2.0 / 19)


def test_grasp_composition():
    pose = np.array([1.0, 2.0])
    grasp = np.array([0.06, np.pi / 2, 0.0])
    pt = grasp_point(pose, grasp)
    assert np.allclose(pt, [1.0, 2.06])
    # gripper points back at the object center
    assert grasp_heading(grasp) == pytest.approx(-np.pi / 2)
    ee = compose_pose_grasp(pose, grasp)
    assert np.allclose(ee, [1.0, 2.06, -np.pi / 2])


class _PoseBelief:
    pose_mixture = {"pear": [("drawer_1", 0.5, (1.0, 2.0)),
                             ("drawer_2", 0.5, (2.0, 2.0))]}
    pose_std = 0.1
    config_mean = np.array([2.0, 1.0, 1.9, 2.6])
    config_std = 0.25


def test_pose_sampler_mixture(rng):
    ps = pose_sampler(_PoseBelief(), "pear", 500, rng)
    ps.check()
    assert np.allclose(ps.weights, 1 / 500)
    d1 = np.linalg.norm(ps.values - [1.0, 2.0], axis=1)
    d2 = np.linalg.norm(ps.values - [2.0, 2.0], axis=1)
    near1 = np.sum(d1 < d2)
    assert 150 < near1 < 350   # both components represented
    # point estimate included verbatim
    assert np.allclose(ps.values[0], [1.0, 2.0])


def test_place_pose_sampler_respects_footprint(rng):
    region = Rect(1.0, 1.0, 1.4, 1.5)
    ps = place_pose_sampler(region, 0.06, 200, rng)
    inner = region.shrunk(0.06)
    assert np.all(inner.contains(ps.values))


def test_grasp_sampler_offsets_equal_radius(rng):
    scene = empty_scene()
    poses = rng.normal([2.0, 1.5], 0.05, (10, 2))
    ps = grasp_sampler(poses, 0.06, scene, 100, rng)
    assert np.allclose(ps.values[:, 0], 0.06)
    assert np.all(np.abs(ps.values[:, 1]) <= np.pi)


def test_grasp_sampler_avoids_blocked_approaches(rng):
    # wall immediately to the right of the object blocks +x approaches
    scene = Scene(bounds=Rect(0, 0, 4, 3),
                  arm_obstacles=(Rect(2.1, 0.0, 2.2, 3.0),),
                  base_obstacles=(), regions={})
    poses = np.tile([2.0, 1.5], (5, 1))
    ps = grasp_sampler(poses, 0.06, scene, 200, rng)
    # approach rays pointing into the wall are rejected
    blocked = np.abs(ps.values[:, 1]) < np.pi / 8
    assert np.sum(blocked) == 0


def test_ik_sampler_reaches_targets(rng):
    poses = rng.normal([2.0, 2.75], 0.02, (20, 2))
    grasps = grasp_sampler(poses, 0.06, empty_scene(), 20, rng).values
    ps = ik_sampler(poses, grasps, ARM, [2.0, 2.1], NoiseModel(), 20, rng)
    ps.check()
    for i in range(20):
        ee = forward_kinematics(ps.values[i], ARM)
        target = grasp_point(poses[i], grasps[i])
        assert np.linalg.norm(ee[:2] - target) < 1e-6


def test_move_and_initial_config_samplers(rng):
    ps = move_config_sampler([2.0, 0.9], ARM, 50, rng)
    assert np.allclose(ps.values[:, :2].mean(axis=0), [2.0, 0.9], atol=0.02)
    ps = initial_config_sampler(_PoseBelief(), 50, rng)
    # base coordinates are exact, first sample is the mean itself
    assert np.allclose(ps.values[:, :2], [2.0, 1.0])
    assert np.allclose(ps.values[0], _PoseBelief.config_mean)
    assert ps.values[1:, 2:].std() > 0.1


def test_trajectory_sampler_collision_free(rng):
    scene = Scene(bounds=Rect(0, 0, 4, 3),
                  arm_obstacles=(Rect(1.7, 1.3, 2.3, 1.7),),
                  base_obstacles=(Rect(1.7, 1.3, 2.3, 1.7),), regions={})
    starts = rng.normal([0.7, 1.5, 1.9, 2.6], 0.01, (10, 4))
    goals = rng.normal([3.3, 1.5, 1.9, 2.6], 0.01, (10, 4))
    ps = trajectory_sampler(starts, goals, scene, ARM, 10, rng)
    assert ps.values.shape == (10, 20, 4)
    for traj in ps.values:
        for u, v in zip(traj[:-1], traj[1:]):
            n = max(2, int(np.ceil(config_distance(u, v) / 0.002)))
            dense = np.linspace(u, v, n)
            assert np.all(config_clearance(dense, scene, ARM) > 0)
