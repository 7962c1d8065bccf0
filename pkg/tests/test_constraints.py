"""Constraint weight functions: frozen oracle values and invariances."""

import numpy as np
import pytest

from beliefplan.constraints import (CFREE_EPS_FLOOR, ConstraintSpec,
                                    EvalContext, sigma_cfree, sigma_grasph,
                                    sigma_kin, sigma_motion, sigma_stable)
from beliefplan.geometry import Rect, Scene
from beliefplan.metering import WorkMeter
from beliefplan.samplers import (ArmModel, NoiseModel, compose_pose_grasp,
                                 forward_kinematics, inverse_kinematics)

ARM = ArmModel()


@pytest.fixture
def ctx():
    scene = Scene(bounds=Rect(0, 0, 4, 3), arm_obstacles=(), base_obstacles=(),
                  regions={"basin": Rect(1.5, 0.05, 1.9, 0.45)})
    return EvalContext(scene=scene, arm=ARM, object_radii={"pear": 0.06},
                       noise=NoiseModel(), meter=WorkMeter())


def test_spec_validation():
    with pytest.raises(ValueError):
        ConstraintSpec(name="Teleport", scope=("a",))
    with pytest.raises(ValueError):
        ConstraintSpec(name="CFree", scope=("t", "g"), c1=0.0)


def exact_reach(config, radius=0.06):
    """Pose and grasp that the given configuration reaches exactly."""
    fk = forward_kinematics(np.asarray(config, float), ARM)
    h = float(fk[2])
    from beliefplan.geometry import wrap_angle
    grasp = np.array([radius, float(wrap_angle(h + np.pi)), 0.0])
    pose = fk[:2] + radius * np.array([np.cos(h), np.sin(h)])
    return pose, grasp


def test_kin_peak_and_decay(ctx):
    exact = np.array([1.5, 1.8, 0.3, 0.5])
    pose, grasp = exact_reach(exact)
    assert sigma_kin(exact, pose, grasp, ctx) == pytest.approx(1.0, abs=1e-6)
    # 2 cm position error is one kernel scale: e^{-1/2}
    off_pose = pose + [0.02, 0.0]
    w = sigma_kin(exact, off_pose, grasp, ctx)
    assert w == pytest.approx(np.exp(-0.5), rel=1e-6)
    # outside joint limits the weight is exactly zero
    bad = exact.copy()
    bad[3] = 10.0
    assert sigma_kin(bad, pose, grasp, ctx) == 0.0


def test_motion_frozen_values(ctx):
    a = np.array([1.0, 1.0, 0.0, 0.0])
    b = np.array([2.0, 1.0, 0.0, 0.0])
    direct = np.linspace(a, b, 20)
    assert sigma_motion(a, b, direct, ctx) == pytest.approx(1.0, rel=1e-9)
    # a detour adding exactly one unit of excess length scores e^{-1}
    mid = np.array([1.5, 1.5, 0.0, 0.0])
    detour_len = 2 * np.hypot(0.5, 0.5)
    excess = detour_len - 1.0
    path = np.concatenate([np.linspace(a, mid, 10), np.linspace(mid, b, 11)[1:]])
    w = sigma_motion(a, b, path, ctx)
    assert w == pytest.approx(np.exp(-excess), rel=1e-6)
    # endpoint mismatch of one endpoint scale costs e^{-1/2}
    shifted = direct.copy()
    shifted[-1, 0] += 0.05
    w = sigma_motion(a, b, shifted, ctx)
    assert w == pytest.approx(np.exp(-0.05 / 1.0) * np.exp(-0.5), rel=1e-2)


def test_stable_frozen_values(ctx):
    region = ctx.scene.region("basin")
    center = np.array(region.center)
    assert sigma_stable(center, region, 0.06, ctx) == pytest.approx(1.0)
    # footprint flush with the region edge still scores 1
    edge = np.array([region.x1 - 0.06, center[1]])
    assert sigma_stable(edge, region, 0.06, ctx) == pytest.approx(1.0, abs=1e-9)
    # protruding 1 cm past the shrunk region scores e^{-1}
    out = np.array([region.x1 - 0.06 + 0.01, center[1]])
    assert sigma_stable(out, region, 0.06, ctx) == pytest.approx(np.exp(-1.0), rel=1e-9)
    # outside the world bounds: zero
    assert sigma_stable(np.array([-1.0, 0.2]), region, 0.06, ctx) == 0.0


def test_grasph_frozen_values(ctx):
    r = 0.06
    perfect = np.array([r, 1.2, 0.0])
    assert sigma_grasph(perfect, r, ctx) == pytest.approx(1.0)
    # half-centimetre offset error: e^{-1/2}
    off = np.array([r + 0.005, 1.2, 0.0])
    assert sigma_grasph(off, r, ctx) == pytest.approx(np.exp(-0.5), rel=1e-9)
    # tangential approach (90 degrees off radial) is effectively forbidden
    tangent = np.array([r, 1.2, np.pi / 2])
    assert sigma_grasph(tangent, r, ctx) < 1e-3
    # invariant to the approach direction itself
    for theta in (0.0, 1.0, -2.5):
        assert sigma_grasph(np.array([r, theta, 0.0]), r, ctx) == pytest.approx(1.0)


def test_cfree_formula(ctx):
    # clearance term only: straight trajectory in the empty scene
    a = np.array([2.0, 1.5, 0.0, 0.0])
    traj = np.tile(a, (20, 1))
    w = sigma_cfree(traj, None, ctx, c1=1.0, c2=1.0)
    # every waypoint has the same clearance; capped at 1 m
    from beliefplan.samplers import config_clearance
    clr = min(float(config_clearance(a, ctx.scene, ARM)[0]), 1.0)
    assert w == pytest.approx(20 * clr, rel=1e-9)
    # goal term: c2 / max(eps2, floor), additive
    pose = np.array([2.7, 1.5])
    grasp = np.array([0.06, np.pi, 0.0])
    target = compose_pose_grasp(pose, grasp)
    ee = forward_kinematics(a, ARM)
    eps2 = float(np.linalg.norm(ee[:2] - target[:2]))
    w2 = sigma_cfree(traj, grasp, ctx, context_pose=pose, c1=1.0, c2=1.0)
    assert w2 == pytest.approx(20 * clr + 1.0 / max(eps2, CFREE_EPS_FLOOR), rel=1e-9)
    # trajectory leaving the world bounds scores zero
    outside = traj.copy()
    outside[10, :2] = [-0.5, 1.5]
    assert sigma_cfree(outside, None, ctx) == 0.0


def test_cfree_goal_term_floor(ctx):
    # an end effector exactly on target hits the epsilon floor, not infinity
    pose = np.array([2.7, 1.5])
    grasp = np.array([0.06, np.pi, 0.0])
    target = compose_pose_grasp(pose, grasp)
    base = [2.0, 1.5]
    q = inverse_kinematics(base, target[:2], ARM)[0]
    end = np.array([*base, *q])
    traj = np.tile(end, (20, 1))
    w = sigma_cfree(traj, grasp, ctx, context_pose=pose, c1=1.0, c2=1.0)
    assert np.isfinite(w)
    assert w >= 1.0 / CFREE_EPS_FLOOR


def test_translation_equivariance(ctx):
    # kernels depend only on relative geometry: translate everything 0.3 m
    pose = np.array([2.0, 2.0])
    grasp = np.array([0.06, 0.7, 0.1])
    base = [1.5, 1.8]
    target = compose_pose_grasp(pose, grasp)
    q = inverse_kinematics(base, target[:2], ARM)[0]
    c = np.array([*base, *q])
    d = np.array([0.3, -0.2])
    w0 = sigma_kin(c, pose + [0.01, 0.0], grasp, ctx)
    c2 = c.copy()
    c2[:2] += d
    w1 = sigma_kin(c2, pose + d + [0.01, 0.0], grasp, ctx)
    assert w0 == pytest.approx(w1, rel=1e-9)


def test_weights_nonnegative_and_clipped(ctx):
    spec = ConstraintSpec(name="GraspH", scope=("g",), object_id="pear")
    vals = np.array([[0.06, 0.0, 0.0], [np.nan, 0.0, 0.0], [0.06, 0.0, 5.0]])
    w = spec.weights(ctx, 0, vals, {})
    assert np.all(np.isfinite(w)) and np.all(w >= 0)
    assert w[0] == pytest.approx(1.0)
    assert w[1] == 0.0


def test_config_message_uses_subsamples(ctx):
    # Kin messages to a configuration integrate over actuation noise, so a
    # config that is perfect at the mean still scores between 1 and J
    config = np.array([1.5, 1.8, 0.3, 0.5])
    pose, grasp = exact_reach(config)
    exact = config[None, :]
    spec = ConstraintSpec(name="Kin", scope=("c", "p", "g"), object_id="pear")
    rng = np.random.default_rng(0)
    w = spec.weights(ctx, 0, exact, {1: pose, 2: grasp}, rng=rng)
    assert 0.0 < w[0] < 10.0
    # without an rng the sub-sampling is skipped and the peak is exact
    w0 = spec.weights(ctx, 0, exact, {1: pose, 2: grasp}, rng=None)
    assert w0[0] == pytest.approx(1.0, abs=1e-6)


def test_meter_counts_evaluations(ctx):
    spec = ConstraintSpec(name="GraspH", scope=("g",), object_id="pear")
    before = ctx.meter.seconds
    spec.weights(ctx, 0, np.tile([0.06, 0.0, 0.0], (100, 1)), {})
    assert ctx.meter.seconds > before
