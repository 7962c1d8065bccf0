"""Breadth-first forward-search planner producing plan skeletons.

States are closed-world sets of ground atoms, encoded as bitmasks over the
fluent atoms of the grounded problem.  Ground actions are expanded in
lexicographic (action name, object ids) order, so returned plans are shortest
and deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from . import schema as sch


class UnsolvableError(RuntimeError):
    """No plan reaches the goal within the depth bound."""


@dataclass(frozen=True)
class PlanSkeleton:
    """Ordered ground symbolic actions with unresolved continuous parameters."""

    actions: tuple
    goal: frozenset

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)


def fluent_predicates(schemas) -> frozenset:
    """Predicates that appear in any action effect (everything else is static)."""
    preds = set()
    for s in schemas:
        for lit in s.effects:
            preds.add(lit.atom[0])
    return frozenset(preds)


def _bindings_product(schema, objects):
    """All binding dicts for a schema's symbolic parameters, lexicographic."""
    params = schema.symbolic_parameters
    if not params:
        yield {}
        return
    pools = [sorted(objects) for _ in params]

    def rec(i, acc):
        if i == len(params):
            yield dict(acc)
            return
        for obj in pools[i]:
            acc.append((params[i], obj))
            yield from rec(i + 1, acc)
            acc.pop()

    yield from rec(0, [])


class _GroundOp:
    __slots__ = ("key", "schema", "bindings", "pre_pos", "pre_neg", "add", "delete")

    def __init__(self, key, schema, bindings, pre_pos, pre_neg, add, delete):
        self.key = key
        self.schema = schema
        self.bindings = bindings
        self.pre_pos = pre_pos
        self.pre_neg = pre_neg
        self.add = add
        self.delete = delete


class Planner:
    """Grounds a domain once and answers (state, goal) queries with BFS.

    ``static_atoms`` are the atoms of predicates no action can change; they
    filter candidate bindings at grounding time and never enter the search
    state.  Results are memoized: replanning across trials with identical
    symbolic states is a dictionary lookup.
    """

    def __init__(self, schemas, objects, static_atoms, depth_bound: int = 40):
        self.schemas = list(schemas)
        self.objects = sorted(objects)
        self.depth_bound = depth_bound
        self.fluents = fluent_predicates(schemas)
        self.static_atoms = frozenset(a for a in static_atoms
                                      if a[0] not in self.fluents)
        self._ops = self._ground_all()
        self._atom_index = {}
        self._collect_atoms()
        self._encode_ops()
        self._memo = {}

    # -- grounding ---------------------------------------------------------

    def _ground_all(self):
        ops = []
        for s in self.schemas:
            for binding in _bindings_product(s, self.objects):
                pre_pos, pre_neg = [], []
                ok = True
                for lit in s.preconditions:
                    atom = lit.substituted(binding).atom
                    if atom[0] in self.fluents:
                        (pre_pos if lit.positive else pre_neg).append(atom)
                    else:
                        present = atom in self.static_atoms
                        if present != lit.positive:
                            ok = False
                            break
                if not ok:
                    continue
                add, delete = [], []
                for lit in s.effects:
                    atom = lit.substituted(binding).atom
                    (add if lit.positive else delete).append(atom)
                key = (s.name, tuple(binding[p] for p in s.symbolic_parameters))
                ops.append(_GroundOp(key, s, dict(binding),
                                     pre_pos, pre_neg, add, delete))
        ops.sort(key=lambda op: op.key)
        return ops

    def _collect_atoms(self):
        atoms = set()
        for op in self._ops:
            atoms.update(op.pre_pos)
            atoms.update(op.pre_neg)
            atoms.update(op.add)
            atoms.update(op.delete)
        for atom in sorted(atoms):
            self._atom_index[atom] = len(self._atom_index)

    def _mask(self, atoms) -> int:
        m = 0
        for a in atoms:
            idx = self._atom_index.get(a)
            if idx is not None:
                m |= 1 << idx
        return m

    def _encode_ops(self):
        self._encoded = []
        for op in self._ops:
            self._encoded.append((
                self._mask(op.pre_pos),
                self._mask(op.pre_neg),
                self._mask(op.add),
                self._mask(op.delete),
                op,
            ))

    # -- search ------------------------------------------------------------

    def _state_mask(self, atoms) -> int:
        return self._mask(a for a in atoms if a[0] in self.fluents)

    def check_goal(self, goal):
        for atom in goal:
            if atom not in self._atom_index and atom not in self.static_atoms:
                raise ValueError(f"goal atom {atom} is not over declared "
                                 "predicates/objects")

    def plan(self, init, goal) -> PlanSkeleton:
        """Shortest skeleton (by action count) from ``init`` to ``goal``."""
        goal = frozenset(goal)
        self.check_goal(goal)
        key = (frozenset(a for a in init if a[0] in self.fluents), goal)
        if key not in self._memo:
            self._memo[key] = self._search(key[0], goal)
        ops = self._memo[key]
        if ops is None:
            raise UnsolvableError(f"goal {sorted(goal)} unreachable within "
                                  f"{self.depth_bound} actions")
        actions = tuple(sch.ground(op.schema, op.bindings) for op in ops)
        return PlanSkeleton(actions=actions, goal=goal)

    def _search(self, init_fluents, goal):
        static_goal = [a for a in goal if a[0] not in self.fluents]
        if any(a not in self.static_atoms for a in static_goal):
            return None
        goal_mask = self._mask(a for a in goal if a[0] in self.fluents)
        start = self._state_mask(init_fluents)
        if start & goal_mask == goal_mask:
            return []
        encoded = self._encoded
        parents = {start: None}
        frontier = deque([(start, 0)])
        while frontier:
            state, depth = frontier.popleft()
            if depth >= self.depth_bound:
                continue
            for i, (pp, pn, add, delete, _op) in enumerate(encoded):
                if state & pp != pp or state & pn:
                    continue
                nxt = (state & ~delete) | add
                if nxt in parents:
                    continue
                parents[nxt] = (state, i)
                if nxt & goal_mask == goal_mask:
                    return self._extract(parents, nxt)
                frontier.append((nxt, depth + 1))
        return None

    def _extract(self, parents, state):
        ops = []
        while parents[state] is not None:
            state, i = parents[state]
            ops.append(self._encoded[i][4])
        ops.reverse()
        return ops


def plan(schemas, objects, init, goal, depth_bound: int = 40) -> PlanSkeleton:
    """One-shot planning entry point (grounds the domain fresh)."""
    planner = Planner(schemas, objects, init, depth_bound=depth_bound)
    return planner.plan(init, goal)


def update_plan_skeleton(current: PlanSkeleton, failed, state, goal,
                         planner: Planner | None = None,
                         schemas=None, objects=None) -> PlanSkeleton:
    """Replan from the post-observation symbolic state.

    The suffix of unexecuted actions is replaced wholesale; the symbolic
    planner sees the world as the belief now describes it.
    """
    if planner is None:
        planner = Planner(schemas, objects, state)
    return planner.plan(state, goal)


def validate_skeleton(skeleton: PlanSkeleton, static_atoms, init, goal) -> bool:
    """Symbolic simulation: preconditions hold step-by-step and the final
    state satisfies the goal."""
    state = set(init) | set(static_atoms)
    for action in skeleton:
        for lit in action.ground_preconditions():
            if lit.positive != (lit.atom in state):
                return False
        for lit in action.ground_effects():
            if lit.positive:
                state.add(lit.atom)
            else:
                state.discard(lit.atom)
    return all(a in state for a in goal)
