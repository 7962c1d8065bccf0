"""World model: static geometry plus the symbolic facts derived from it.

The world file is JSON (see ``data/kitchen_world.json``).  Rectangles are
stored as ``[cx, cy, width, height]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .geometry import Rect, Scene
from .samplers import ArmModel

SUPPORTED_SCHEMA_VERSION = 1


class WorldFileError(ValueError):
    pass


def _rect(spec) -> Rect:
    cx, cy, w, h = (float(v) for v in spec)
    if w <= 0 or h <= 0:
        raise WorldFileError(f"rectangle {spec} has non-positive extent")
    return Rect(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)


@dataclass(frozen=True)
class WorldModel:
    """Everything static about the environment and robot."""

    scene: Scene
    arm: ArmModel
    object_radii: dict          # object -> footprint radius
    object_prior: dict          # object -> tuple of candidate containers
    object_start: dict          # object -> known start container (or None)
    standing: dict              # location -> base position (2,)
    container_location: dict    # container -> location
    drawers: tuple
    static_atoms: frozenset
    start_location: str
    init_flags: frozenset       # fluent atoms true at the start (belief == truth)

    def standing_pose(self, location: str) -> np.ndarray:
        return np.asarray(self.standing[location], float)


def load_world(path_or_text=None) -> WorldModel:
    """Load a world model; defaults to the packaged kitchen."""
    if path_or_text is None:
        text = resources.files("beliefplan.data").joinpath(
            "kitchen_world.json").read_text()
    elif isinstance(path_or_text, str) and path_or_text.lstrip().startswith("{"):
        text = path_or_text
    else:
        with open(path_or_text) as fh:
            text = fh.read()
    raw = json.loads(text)
    version = raw.get("schema_version")
    if version != SUPPORTED_SCHEMA_VERSION:
        raise WorldFileError(f"unsupported world schema_version {version!r}")

    bx0, by0, bx1, by1 = (float(v) for v in raw["bounds"])
    scene = Scene(
        bounds=Rect(bx0, by0, bx1, by1),
        arm_obstacles=tuple(_rect(o["rect"]) for o in raw.get("arm_obstacles", [])),
        base_obstacles=tuple(_rect(o["rect"]) for o in raw.get("base_obstacles", [])),
        regions={name: _rect(spec) for name, spec in raw.get("regions", {}).items()},
    )

    robot = raw.get("robot", {})
    arm = ArmModel(
        link_lengths=tuple(robot.get("link_lengths", (0.5, 0.5))),
        base_radius=float(robot.get("base_radius", 0.15)),
        point_radius=float(robot.get("point_radius", 0.03)),
        tuck=tuple(robot.get("tuck", (1.9, 2.6))),
    )

    locations = {name: np.asarray(pos, float)
                 for name, pos in raw["locations"].items()}
    containers = raw.get("containers", {})
    for cname, cfg in containers.items():
        if cname not in scene.regions:
            raise WorldFileError(f"container {cname!r} has no region rectangle")
        if cfg["location"] not in locations:
            raise WorldFileError(f"container {cname!r} at unknown location")

    static = set()
    flags = set()
    for loc in locations:
        static.add(("location", loc))
    for a, b in raw.get("adjacent", []):
        static.add(("adjacent", a, b))
        static.add(("adjacent", b, a))
    drawers = []
    for cname, cfg in containers.items():
        static.add(("container-at", cname, cfg["location"]))
        if cfg.get("drawer"):
            static.add(("drawer", cname))
            drawers.append(cname)
        else:
            # non-drawer surfaces are permanently accessible
            flags.add(("open", cname))
        if cfg.get("placeable"):
            static.add(("placeable", cname))
    for aname, loc in raw.get("appliances", {}).items():
        static.add(("appliance", aname))
        static.add(("appliance-at", aname, loc))

    radii, prior, start = {}, {}, {}
    for oname, cfg in raw.get("objects", {}).items():
        radii[oname] = float(cfg["radius"])
        for flag in ("graspable", "washable", "cookable", "cup"):
            if cfg.get(flag):
                static.add((flag, oname))
        if "prior" in cfg:
            prior[oname] = tuple(cfg["prior"])
            start[oname] = None
        else:
            prior[oname] = (cfg["container"],)
            start[oname] = cfg["container"]
            flags.add(("at", oname, cfg["container"]))
            flags.add(("located", oname))

    start_location = raw.get("robot", {}).get("start_location", "home")
    flags.add(("robot-at", start_location))
    flags.add(("handempty",))

    return WorldModel(
        scene=scene,
        arm=arm,
        object_radii=radii,
        object_prior=prior,
        object_start=start,
        standing=locations,
        container_location={c: cfg["location"] for c, cfg in containers.items()},
        drawers=tuple(sorted(drawers)),
        static_atoms=frozenset(static),
        start_location=start_location,
        init_flags=frozenset(flags),
    )
