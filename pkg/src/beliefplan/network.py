"""Constraint-network construction from a plan skeleton.

The network is a bipartite factor graph: variable nodes hold particle-set
beliefs over continuous action parameters, factor nodes wrap constraint
functions.  Building walks the skeleton in order, minting one configuration
variable per motion-bearing action, aliasing object poses across actions
(a pose variable persists until some action moves the object), sharing the
grasp variable between a pick and its matching place (adding the coupling
constraint over both kinematics), and chaining consecutive configurations
with motion constraints over the connecting trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintSpec
from .context import WorldModel
from .particles import ParticleSet, normalize_weights
from .samplers import (GeneratorError, NoiseModel, grasp_sampler,
                       initial_config_sampler, ik_sampler, move_config_sampler,
                       place_pose_sampler, pose_sampler, trajectory_sampler)


class NetworkError(ValueError):
    pass


@dataclass
class VariableNode:
    id: str
    kind: str                    # config | pose | grasp | trajectory | discrete
    role: tuple = ()
    anchored: bool = False
    belief: ParticleSet | None = None
    neighbors: list = field(default_factory=list)


@dataclass
class FactorNode:
    id: str
    spec: object                 # ConstraintSpec or any object with .weights()
    scope: tuple                 # variable ids in constraint-argument order

    @property
    def name(self) -> str:
        return self.spec.name


@dataclass
class ConstraintNetwork:
    variables: dict = field(default_factory=dict)
    factors: dict = field(default_factory=dict)

    def add_variable(self, node: VariableNode) -> VariableNode:
        if node.id in self.variables:
            raise NetworkError(f"duplicate variable {node.id!r}")
        self.variables[node.id] = node
        return node

    def add_factor(self, node: FactorNode) -> FactorNode:
        if node.id in self.factors:
            raise NetworkError(f"duplicate factor {node.id!r}")
        for vid in node.scope:
            if vid not in self.variables:
                raise NetworkError(f"factor {node.id!r} references unknown "
                                   f"variable {vid!r}")
        self.factors[node.id] = node
        for vid in dict.fromkeys(node.scope):
            self.variables[vid].neighbors.append(node.id)
        return node

    def check_consistency(self):
        """Every variable<->factor adjacency must be recorded on both sides."""
        for fid, fac in self.factors.items():
            for vid in fac.scope:
                if fid not in self.variables[vid].neighbors:
                    raise NetworkError(f"edge {fid}<->{vid} missing on variable")
        for vid, var in self.variables.items():
            for fid in var.neighbors:
                if vid not in self.factors[fid].scope:
                    raise NetworkError(f"edge {vid}<->{fid} missing on factor")

    def dump(self) -> str:
        """Canonical text form used by golden-structure tests."""
        lines = []
        for vid in sorted(self.variables):
            v = self.variables[vid]
            lines.append(f"var {vid} kind={v.kind} anchored={int(v.anchored)}")
        for fid in sorted(self.factors):
            f = self.factors[fid]
            lines.append(f"factor {fid} {f.name} scope=" + ",".join(f.scope))
        return "\n".join(lines) + "\n"


def _believed_pose(belief, obj: str):
    comps = belief.pose_mixture[obj]
    best = max(comps, key=lambda c: c[1])
    return tuple(float(x) for x in best[2])


def _believed_container(belief, obj: str) -> str:
    comps = belief.pose_mixture[obj]
    return max(comps, key=lambda c: c[1])[0]


def _is_placing(action) -> bool:
    """True when the action's effects put the manipulated object somewhere."""
    return any(l.positive and l.atom[0] == "at" for l in action.ground_effects())


def build_network(skeleton, belief, world: WorldModel) -> ConstraintNetwork:
    """Build the factor graph for a plan skeleton under the current belief."""
    actions = list(skeleton.actions)
    if not actions:
        raise NetworkError("empty plan skeleton")

    net = ConstraintNetwork()
    net.add_variable(VariableNode("phi0", "config", role=("initial_config",),
                                  anchored=True))
    current_pose: dict = {}      # object -> live pose variable id
    held_grasp: dict = {}        # object -> (grasp var, pick phi var, pick pose var, step)
    prev_step = 0
    prev_phi = "phi0"
    kind_order = {"pose": 0, "grasp": 1, "config": 2, "trajectory": 3}

    for k, action in enumerate(actions, start=1):
        cont = sorted(action.schema.continuous_parameters,
                      key=lambda nk: kind_order[nk[1]])
        param_to_var = {}
        obj = action.bindings.get("o")
        placing = _is_placing(action) and obj is not None
        phi_var = None
        tau_var = None

        for pname, kind in cont:
            if kind == "pose":
                if obj is None:
                    raise NetworkError(
                        f"action {action!r} has a pose parameter but no object")
                if placing:
                    target_container = next(
                        l.atom[2] for l in action.ground_effects()
                        if l.positive and l.atom[0] == "at")
                    vid = f"{obj}_p{k}"
                    net.add_variable(VariableNode(
                        vid, "pose", role=("target_pose", obj, target_container)))
                    current_pose[obj] = vid
                else:
                    if obj not in current_pose:
                        vid = f"{obj}_p0"
                        net.add_variable(VariableNode(
                            vid, "pose", role=("current_pose", obj), anchored=True))
                        current_pose[obj] = vid
                    vid = current_pose[obj]
                param_to_var[pname] = vid
            elif kind == "grasp":
                if placing and obj in held_grasp:
                    param_to_var[pname] = held_grasp[obj][0]
                else:
                    pose_vid = next(param_to_var[n] for n, kk in cont
                                    if kk == "pose")
                    vid = f"{obj}_g{k}"
                    net.add_variable(VariableNode(
                        vid, "grasp", role=("grasp", obj, pose_vid)))
                    param_to_var[pname] = vid
            elif kind == "config":
                vid = f"phi{k}"
                loc = action.bindings.get("l") or action.bindings.get("to")
                if loc is None:
                    raise NetworkError(f"action {action!r} has no target location")
                pose_vid = next((param_to_var[n] for n, kk in cont if kk == "pose"),
                                None)
                grasp_vid = next((param_to_var[n] for n, kk in cont if kk == "grasp"),
                                 None)
                if pose_vid is not None and grasp_vid is not None:
                    role = ("ik_config", pose_vid, grasp_vid, loc)
                else:
                    role = ("move_config", loc)
                net.add_variable(VariableNode(vid, "config", role=role))
                param_to_var[pname] = vid
                phi_var = vid
            elif kind == "trajectory":
                vid = f"tau_{prev_step}_{k}"
                attached = obj if (placing and obj in held_grasp) else None
                net.add_variable(VariableNode(
                    vid, "trajectory",
                    role=("trajectory", prev_phi, f"phi{k}", attached)))
                param_to_var[pname] = vid
                tau_var = vid
            else:
                raise NetworkError(f"parameter ?{pname} of {action.name!r} has "
                                   f"no generator for kind {kind!r}")

        # declared constraints
        for ref in action.schema.constraints:
            kinds = action.schema.kinds
            scope = tuple(param_to_var[a] for a in ref.continuous_args(kinds))
            context_pose = None
            region = None
            cobj = obj
            if ref.name in ("CFree", "CFreeH") and len(scope) > 1:
                if placing:
                    context_pose = tuple(
                        world.scene.region(target_container).center)
                else:
                    context_pose = _believed_pose(belief, obj)
            if ref.name == "Stable":
                region = target_container if placing else \
                    _believed_container(belief, obj)
            net.add_factor(FactorNode(
                f"{ref.name.lower()}_{k}",
                ConstraintSpec(ref.name, scope, object_id=cobj, region=region,
                               context_pose=context_pose),
                scope))

        # implicit motion chaining and pick/place grasp coupling
        if phi_var is not None and tau_var is not None:
            scope = (prev_phi, phi_var, tau_var)
            net.add_factor(FactorNode(
                f"motion_{k}", ConstraintSpec("Motion", scope), scope))
        if placing and obj in held_grasp:
            g_vid, pick_phi, pick_pose, pick_step = held_grasp.pop(obj)
            scope = (pick_phi, pick_pose, g_vid, phi_var, current_pose[obj])
            net.add_factor(FactorNode(
                f"grasp_{pick_step}_{k}",
                ConstraintSpec("Grasp", scope, object_id=obj), scope))
        elif obj is not None and not placing and any(
                l.positive and l.atom[0] == "holding"
                for l in action.ground_effects()):
            g_vid = next((param_to_var[n] for n, kk in cont if kk == "grasp"), None)
            pose_vid = next((param_to_var[n] for n, kk in cont if kk == "pose"), None)
            if g_vid is not None:
                held_grasp[obj] = (g_vid, phi_var, pose_vid, k)

        if phi_var is not None:
            prev_phi = phi_var
            prev_step = k
        # record the resolved variable refs on the action for later extraction
        for pname, vid in param_to_var.items():
            action.params[pname] = action.params[pname]._replace(id=vid)

    net.check_consistency()
    return net


def _anchored_pose_weights(values: np.ndarray, belief, obj: str) -> np.ndarray:
    comps = belief.pose_mixture[obj]
    std = belief.pose_std
    if std <= 0:
        return np.full(len(values), 1.0 / len(values))
    w = np.zeros(len(values))
    for _, mass, mean in comps:
        d2 = np.sum((values - np.asarray(mean, float)) ** 2, axis=1)
        w += mass * np.exp(-d2 / (2 * std ** 2))
    return normalize_weights(w)


def _anchored_config_weights(values: np.ndarray, belief) -> np.ndarray:
    std = belief.config_std
    if std <= 0:
        return np.full(len(values), 1.0 / len(values))
    mean = np.asarray(belief.config_mean, float)
    d2 = np.sum((values[:, 2:] - mean[2:]) ** 2, axis=1)
    return normalize_weights(np.exp(-d2 / (2 * std ** 2)))


def initialize_network(net: ConstraintNetwork, belief, world: WorldModel,
                       samples: int, seed: int, meter=None,
                       traj_cache: dict | None = None):
    """Populate every variable with its initial particle set.

    Variables are initialized in insertion order so trajectory generators can
    read the already-sampled endpoint configurations.  Anchored (evidence)
    variables get belief-density weights; everything else starts uniform.
    """
    from .inference import derive_rng
    noise = NoiseModel(pose_std=belief.pose_std, config_std=belief.config_std)
    for var in net.variables.values():
        rng = derive_rng(seed, var.id, 0)
        role = var.role
        if role[0] == "initial_config":
            ps = initial_config_sampler(belief, samples, rng)
            ps = ParticleSet(ps.values,
                             _anchored_config_weights(ps.values, belief), "config")
        elif role[0] == "current_pose":
            ps = pose_sampler(belief, role[1], samples, rng)
            ps = ParticleSet(ps.values,
                             _anchored_pose_weights(ps.values, belief, role[1]),
                             "pose")
        elif role[0] == "target_pose":
            region = world.scene.region(role[2])
            ps = place_pose_sampler(region, world.object_radii[role[1]],
                                    samples, rng)
        elif role[0] == "grasp":
            pose_vals = net.variables[role[2]].belief.values
            ps = grasp_sampler(pose_vals, world.object_radii[role[1]],
                               world.scene, samples, rng)
        elif role[0] == "ik_config":
            pose_vals = net.variables[role[1]].belief.values
            grasp_vals = net.variables[role[2]].belief.values
            anchor = world.standing_pose(role[3])
            ps = ik_sampler(pose_vals, grasp_vals, world.arm, anchor, noise,
                            samples, rng, meter=meter)
        elif role[0] == "move_config":
            ps = move_config_sampler(world.standing_pose(role[1]), world.arm,
                                     samples, rng)
        elif role[0] == "trajectory":
            starts = net.variables[role[1]].belief.values
            goals = net.variables[role[2]].belief.values
            attached = role[3]
            radius = world.object_radii.get(attached, 0.0) if attached else 0.0
            ps = trajectory_sampler(starts, goals, world.scene, world.arm,
                                    samples, rng, attached_radius=radius,
                                    attached_offset=radius, meter=meter,
                                    template_cache=traj_cache)
        else:
            raise NetworkError(f"variable {var.id!r} has unknown role {role!r}")
        ps.check()
        var.belief = ps
    return net
