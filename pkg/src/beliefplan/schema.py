"""Domain/problem file parsing and action grounding.

The domain format is an s-expression dialect: actions declare ``:parameters``
(symbolic objects plus continuous parameters), ``:constraints`` over the
continuous parameters, and STRIPS-style ``:preconditions``/``:effects``.

Continuous parameter kinds are carried by the parameter name: ``?phi*`` is a
robot configuration, ``?p*`` an object pose, ``?g*`` a grasp and ``?tau*`` a
trajectory.  Every other ``?name`` is a symbolic object parameter.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import NamedTuple

# ---------------------------------------------------------------------------
# errors


class SchemaError(ValueError):
    """Parse or validation error, with best-effort source location."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.line = line
        self.col = col


class UndeclaredParameterError(SchemaError):
    pass


class UnknownConstraintError(SchemaError):
    pass


class MissingBindingError(ValueError):
    pass


# ---------------------------------------------------------------------------
# constraint catalog: allowed continuous-argument signatures per constraint

CONSTRAINT_SIGNATURES = {
    "CFree": (("trajectory",), ("trajectory", "grasp")),
    "CFreeH": (("trajectory", "grasp"),),
    "Motion": (("config", "config", "trajectory"),),
    "Kin": (("config", "pose", "grasp"),),
    "GraspH": (("grasp",),),
    "Grasp": (("config", "pose", "grasp", "config", "pose"),),
    "Stable": (("pose",),),
    "InBasin": (("pose",),),
    "InSaucepan": (("pose",),),
}

_KIND_PATTERN = re.compile(r"^(phi|tau|p|g)\d*$")
_KIND_BY_PREFIX = {"phi": "config", "tau": "trajectory", "p": "pose", "g": "grasp"}


def parameter_kind(name: str) -> str:
    """Kind of a parameter from its (?-stripped) name; 'symbol' otherwise."""
    m = _KIND_PATTERN.match(name)
    if m:
        return _KIND_BY_PREFIX[m.group(1)]
    return "symbol"


# ---------------------------------------------------------------------------
# data model


class Literal(NamedTuple):
    positive: bool
    atom: tuple  # (predicate, arg, ...)

    def substituted(self, binding: dict) -> "Literal":
        pred, *args = self.atom
        return Literal(self.positive, (pred, *[binding.get(a, a) for a in args]))


@dataclass(frozen=True)
class ConstraintRef:
    """A constraint named in a schema, over declared parameter names."""

    name: str
    args: tuple  # parameter names in file order (symbolic and continuous)

    def continuous_args(self, kinds: dict) -> tuple:
        return tuple(a for a in self.args if kinds[a] != "symbol")

    def symbolic_args(self, kinds: dict) -> tuple:
        return tuple(a for a in self.args if kinds[a] == "symbol")


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: tuple       # ((name, kind), ...)
    constraints: tuple      # (ConstraintRef, ...)
    preconditions: tuple    # (Literal, ...)
    effects: tuple          # (Literal, ...)

    @property
    def kinds(self) -> dict:
        return dict(self.parameters)

    @property
    def symbolic_parameters(self) -> tuple:
        return tuple(n for n, k in self.parameters if k == "symbol")

    @property
    def continuous_parameters(self) -> tuple:
        return tuple((n, k) for n, k in self.parameters if k != "symbol")


class VariableRef(NamedTuple):
    """Fresh handle for an unresolved continuous parameter."""

    id: str
    kind: str


@dataclass
class GroundAction:
    """An action schema with symbolic parameters bound to objects.

    Continuous parameters hold :class:`VariableRef` until inference resolves
    them, after which ``resolved`` maps parameter names to concrete values.
    """

    schema: ActionSchema
    bindings: dict               # symbolic parameter -> object name
    params: dict                 # continuous parameter -> VariableRef
    resolved: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.schema.name

    def signature(self) -> tuple:
        return (self.schema.name,
                tuple(self.bindings[n] for n in self.schema.symbolic_parameters))

    def ground_preconditions(self) -> tuple:
        return tuple(l.substituted(self.bindings) for l in self.schema.preconditions)

    def ground_effects(self) -> tuple:
        return tuple(l.substituted(self.bindings) for l in self.schema.effects)

    def __repr__(self):
        args = ", ".join(self.bindings[n] for n in self.schema.symbolic_parameters)
        return f"{self.schema.name}({args})"


@dataclass(frozen=True)
class Problem:
    name: str
    objects: tuple
    init: frozenset      # ground atoms
    goal: frozenset      # ground atoms (positive conjunctive goal)


# ---------------------------------------------------------------------------
# s-expression reader


class _Token(NamedTuple):
    text: str
    line: int
    col: int


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif c in "()":
            tokens.append(_Token(c, line, col))
            col += 1
            i += 1
        else:
            j = i
            while j < len(text) and text[j] not in " \t\r\n();":
                j += 1
            tokens.append(_Token(text[i:j], line, col))
            col += j - i
            i = j
    return tokens


def _read(tokens):
    """Parse a token stream into nested lists of tokens."""
    def parse_expr(pos):
        tok = tokens[pos]
        if tok.text == "(":
            items = []
            pos += 1
            while True:
                if pos >= len(tokens):
                    raise SchemaError("unbalanced parenthesis", tok.line, tok.col)
                if tokens[pos].text == ")":
                    return items, pos + 1
                item, pos = parse_expr(pos)
                items.append(item)
        if tok.text == ")":
            raise SchemaError("unexpected ')'", tok.line, tok.col)
        return tok, pos + 1

    exprs = []
    pos = 0
    while pos < len(tokens):
        expr, pos = parse_expr(pos)
        exprs.append(expr)
    return exprs


def _atom_text(x) -> str:
    if not isinstance(x, _Token):
        raise SchemaError("expected atom, got list")
    return x.text


def _parse_literals(expr) -> tuple:
    """Parse a literal, or an (and ...) conjunction, into a Literal tuple."""
    if isinstance(expr, _Token):
        raise SchemaError("expected literal list", expr.line, expr.col)
    if expr and isinstance(expr[0], _Token) and expr[0].text == "and":
        out = []
        for sub in expr[1:]:
            out.extend(_parse_literals(sub))
        return tuple(out)
    if expr and isinstance(expr[0], _Token) and expr[0].text == "not":
        inner = _parse_literals(expr[1])
        if len(inner) != 1 or not inner[0].positive:
            raise SchemaError("malformed negation", expr[0].line, expr[0].col)
        return (Literal(False, inner[0].atom),)
    atom = tuple(_atom_text(t) for t in expr)
    if not atom:
        raise SchemaError("empty literal")
    return (Literal(True, atom),)


# ---------------------------------------------------------------------------
# domain parsing


def _parse_action(expr) -> ActionSchema:
    head = expr[0]
    name = _atom_text(expr[1])
    sections = {}
    i = 2
    while i < len(expr):
        key = _atom_text(expr[i])
        if not key.startswith(":"):
            raise SchemaError(f"expected section keyword, got {key!r}",
                              expr[i].line, expr[i].col)
        vals = []
        i += 1
        while i < len(expr) and not (isinstance(expr[i], _Token)
                                     and expr[i].text.startswith(":")):
            vals.append(expr[i])
            i += 1
        sections[key] = vals

    params = []
    for group in sections.get(":parameters", []):
        items = group if isinstance(group, list) else [group]
        for tok in items:
            pname = _atom_text(tok)
            if not pname.startswith("?"):
                raise SchemaError(f"parameter {pname!r} must start with '?'",
                                  tok.line, tok.col)
            pname = pname[1:]
            params.append((pname, parameter_kind(pname)))
    kinds = dict(params)

    def check_declared(pname: str, tok):
        if pname not in kinds:
            raise UndeclaredParameterError(
                f"action {name!r} references undeclared parameter ?{pname}",
                tok.line, tok.col)

    constraints = []
    for group in sections.get(":constraints", []):
        if isinstance(group, _Token):
            raise SchemaError("constraint must be a list", group.line, group.col)
        cname = _atom_text(group[0])
        if cname not in CONSTRAINT_SIGNATURES:
            raise UnknownConstraintError(f"unknown constraint {cname!r}",
                                         group[0].line, group[0].col)
        args = []
        for tok in group[1:]:
            a = _atom_text(tok)
            if not a.startswith("?"):
                raise SchemaError(f"constraint argument {a!r} must be a parameter",
                                  tok.line, tok.col)
            a = a[1:]
            check_declared(a, tok)
            args.append(a)
        ref = ConstraintRef(cname, tuple(args))
        sig = tuple(kinds[a] for a in ref.continuous_args(kinds))
        if sig not in CONSTRAINT_SIGNATURES[cname]:
            raise SchemaError(
                f"constraint {cname} in action {name!r} has continuous "
                f"signature {sig}, expected one of "
                f"{CONSTRAINT_SIGNATURES[cname]}",
                group[0].line, group[0].col)
        constraints.append(ref)

    def parse_section(key):
        lits = []
        for group in sections.get(key, []):
            lits.extend(_parse_literals(group))
        out = []
        for lit in lits:
            pred, *args = lit.atom
            resolved_args = []
            for a in args:
                if a.startswith("?"):
                    # find the token for location reporting is overkill here
                    if a[1:] not in kinds:
                        raise UndeclaredParameterError(
                            f"action {name!r} references undeclared parameter {a}")
                    resolved_args.append(a[1:])
                else:
                    resolved_args.append(a)
            out.append(Literal(lit.positive, (pred, *resolved_args)))
        return tuple(out)

    return ActionSchema(
        name=name,
        parameters=tuple(params),
        constraints=tuple(constraints),
        preconditions=parse_section(":preconditions"),
        effects=parse_section(":effects"),
    )


def parse_domain(text: str):
    """Parse a domain file into a list of :class:`ActionSchema` (file order)."""
    exprs = _read(_tokenize(text))
    schemas = []
    for expr in exprs:
        if isinstance(expr, _Token):
            raise SchemaError("top-level atoms not allowed", expr.line, expr.col)
        if not expr:
            continue
        head = _atom_text(expr[0])
        if head == "define":
            for sub in expr[1:]:
                if isinstance(sub, list) and sub and _atom_text(sub[0]) == ":action":
                    schemas.append(_parse_action(sub))
        elif head == ":action":
            schemas.append(_parse_action(expr))
        elif head == "domain":
            continue
        else:
            raise SchemaError(f"unexpected top-level form {head!r}",
                              expr[0].line, expr[0].col)
    return schemas


def parse_problem(text: str) -> Problem:
    exprs = _read(_tokenize(text))
    name = "problem"
    objects, init, goal = [], [], []
    for expr in exprs:
        if isinstance(expr, _Token) or not expr:
            continue
        if _atom_text(expr[0]) != "define":
            raise SchemaError("problem file must be a (define ...) form")
        for sub in expr[1:]:
            if isinstance(sub, _Token):
                continue
            head = _atom_text(sub[0])
            if head == "problem":
                name = _atom_text(sub[1])
            elif head == ":objects":
                objects = [_atom_text(t) for t in sub[1:]]
            elif head == ":init":
                for g in sub[1:]:
                    (lit,) = _parse_literals(g)
                    if not lit.positive:
                        raise SchemaError("negative literals not allowed in :init")
                    init.append(lit.atom)
            elif head == ":goal":
                for lit in _parse_literals(sub[1] if len(sub) == 2 else sub[1:][0]):
                    if not lit.positive:
                        raise SchemaError("negative goals not supported")
                    goal.append(lit.atom)
    return Problem(name, tuple(objects), frozenset(init), frozenset(goal))


# ---------------------------------------------------------------------------
# printing (parse . print . parse is identity on the structure)


def _format_literal(lit: Literal) -> str:
    pred, *args = lit.atom
    body = " ".join([pred] + [f"?{a}" if _is_param(a) else a for a in args])
    # at print time we cannot tell parameter names from constants, so the
    # printer is given schemas whose literal args were stored without '?';
    return body


def print_domain(schemas, name: str = "kitchen") -> str:
    lines = [f"(define (domain {name})"]
    for s in schemas:
        lines.append(f"  (:action {s.name}")
        lines.append("    :parameters (" + " ".join(f"?{n}" for n, _ in s.parameters) + ")")
        if s.constraints:
            cs = " ".join(
                "(" + " ".join([c.name] + [f"?{a}" for a in c.args]) + ")"
                for c in s.constraints)
            lines.append(f"    :constraints {cs}")
        params = set(s.kinds)

        def fmt(lit: Literal) -> str:
            pred, *args = lit.atom
            body = " ".join([pred] + [f"?{a}" if a in params else a for a in args])
            s_ = f"({body})"
            return s_ if lit.positive else f"(not {s_})"

        if s.preconditions:
            lines.append("    :preconditions (and " + " ".join(fmt(l) for l in s.preconditions) + ")")
        if s.effects:
            lines.append("    :effects (and " + " ".join(fmt(l) for l in s.effects) + ")")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def _is_param(a: str) -> bool:  # used only by the printer helper above
    return False


# ---------------------------------------------------------------------------
# grounding

_fresh_counter = itertools.count()


def ground(schema: ActionSchema, bindings: dict) -> GroundAction:
    """Bind symbolic parameters and mint fresh continuous variable refs."""
    bound = {}
    for pname in schema.symbolic_parameters:
        if pname not in bindings:
            raise MissingBindingError(
                f"action {schema.name!r} missing binding for ?{pname}")
        bound[pname] = bindings[pname]
    extra = set(bindings) - set(schema.symbolic_parameters)
    if extra:
        raise MissingBindingError(
            f"action {schema.name!r} got bindings for unknown parameters {sorted(extra)}")
    params = {}
    for pname, kind in schema.continuous_parameters:
        params[pname] = VariableRef(f"v{next(_fresh_counter)}", kind)
    return GroundAction(schema=schema, bindings=bound, params=params)
