"""Max-product belief propagation over particle-set messages.

Each iteration runs two synchronous phases: every variable sends its pooled
incoming evidence (minus the recipient) to each neighboring factor, then every
factor reweights samples drawn from the target's belief against the single
highest-weighted sample of each other neighbor's message.  Beliefs pool all
incoming factor messages and resample back to the particle budget.

``discrete_exact`` switches small finite-support networks to exact
max-product updates (elementwise products at variables, exhaustive
maximization at factors over the shared support), which reproduces exact
MAP assignments on tree-structured graphs.
"""

from __future__ import annotations

import csv
import itertools
import zlib
from dataclasses import dataclass, field

import numpy as np

from .particles import (ParticleSet, displacement, normalize_weights,
                        pooled_union, resample)

DEFAULT_ITERATIONS = 10


def derive_rng(seed: int, name: str, iteration: int, salt: int = 0) -> np.random.Generator:
    """Independent, reproducible random stream per (seed, node, iteration)."""
    return np.random.default_rng(
        [int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode()), iteration, salt])


@dataclass
class InferenceConfig:
    iterations: int = DEFAULT_ITERATIONS
    seed: int = 0
    discrete_exact: bool = False
    pairwise_max: bool = False
    check_invariants: bool = True
    trace: list | None = None     # appended (iteration, source, target, w0..w2)


@dataclass
class InferenceResult:
    converged: bool
    iterations_run: int


def _trace(cfg: InferenceConfig, iteration: int, source: str, target: str,
           msg: ParticleSet):
    if cfg.trace is not None:
        head = [float(w) for w in msg.weights[:3]]
        head += [0.0] * (3 - len(head))
        cfg.trace.append((iteration, source, target, *head))


def _check(cfg: InferenceConfig, msg: ParticleSet, expected: int, where: str):
    if not cfg.check_invariants:
        return
    if msg.size != expected:
        raise ValueError(f"{where}: particle count {msg.size} != {expected}")
    msg.check()


def variable_to_constraint(net, vid: str, fid: str, c2v: dict, rng,
                           cfg: InferenceConfig) -> ParticleSet:
    """Message from a variable: pooled incoming evidence excluding the target
    factor; anchored variables always send their (fixed) belief."""
    var = net.variables[vid]
    if var.anchored:
        return var.belief.copy()
    incoming = [c2v[(f, vid)] for f in var.neighbors
                if f != fid and (f, vid) in c2v]
    if cfg.discrete_exact:
        if not incoming:
            return var.belief.copy()
        w = np.prod([m.weights for m in incoming], axis=0)
        return ParticleSet(var.belief.values, normalize_weights(w), var.kind)
    if not incoming:
        return var.belief.copy()
    pooled = pooled_union(incoming, var.kind)
    return resample(pooled, var.belief.size, rng)


def _exact_factor_weights(fac, target_pos: int, support, other_msgs, ctx) -> np.ndarray:
    """Exhaustive max-product factor update over finite supports."""
    others = [(pos, msg) for pos, msg in other_msgs]
    n = len(support)
    best = np.zeros(n)
    ranges = [range(m.size) for _, m in others]
    for combo in itertools.product(*ranges) if others else [()]:
        fixed = {pos: np.asarray(msg.values[j])
                 for (pos, msg), j in zip(others, combo)}
        w = fac.spec.weights(ctx, target_pos, np.asarray(support), fixed, None)
        scale = 1.0
        for (_, msg), j in zip(others, combo):
            scale *= float(msg.weights[j])
        best = np.maximum(best, np.asarray(w, float) * scale)
    return best


def constraint_to_variable(net, fid: str, vid: str, v2c: dict, ctx, rng,
                           cfg: InferenceConfig) -> ParticleSet:
    """Message from a factor: candidates drawn from the target's belief,
    weighted by the constraint function at the best sample of each other
    neighbor's incoming message."""
    fac = net.factors[fid]
    var = net.variables[vid]
    target_pos = fac.scope.index(vid)
    other_positions = [p for p, v in enumerate(fac.scope) if v != vid]

    if cfg.discrete_exact:
        support = var.belief.values
        other_msgs = [(p, v2c[(fac.scope[p], fid)]) for p in other_positions]
        w = _exact_factor_weights(fac, target_pos, support, other_msgs, ctx)
        return ParticleSet(support, normalize_weights(w), var.kind)

    candidates = resample(var.belief, var.belief.size, rng)
    if cfg.pairwise_max and len(other_positions) == 1:
        p = other_positions[0]
        msg = v2c[(fac.scope[p], fid)]
        w = np.zeros(candidates.size)
        for j in range(msg.size):
            wj = fac.spec.weights(ctx, target_pos, candidates.values,
                                  {p: np.asarray(msg.values[j])}, rng)
            w = np.maximum(w, np.asarray(wj, float) * float(msg.weights[j]))
    else:
        fixed = {p: np.asarray(v2c[(fac.scope[p], fid)].argmax_value())
                 for p in other_positions}
        w = fac.spec.weights(ctx, target_pos, candidates.values, fixed, rng)
    return ParticleSet(candidates.values, normalize_weights(w), var.kind)


def update_belief(net, vid: str, c2v: dict, rng, cfg: InferenceConfig) -> ParticleSet:
    """New belief: union of all incoming factor messages, resampled back to
    the particle budget.  Anchored variables keep their evidence belief."""
    var = net.variables[vid]
    if var.anchored:
        return var.belief
    incoming = [c2v[(f, vid)] for f in var.neighbors if (f, vid) in c2v]
    if not incoming:
        return var.belief
    if cfg.discrete_exact:
        w = np.prod([m.weights for m in incoming], axis=0)
        return ParticleSet(var.belief.values, normalize_weights(w), var.kind)
    pooled = pooled_union(incoming, var.kind)
    return resample(pooled, var.belief.size, rng)


def run_inference(net, ctx, cfg: InferenceConfig) -> InferenceResult:
    """Synchronous message passing until convergence or the iteration cap."""
    c2v: dict = {}
    prev_argmax = {vid: np.asarray(v.belief.argmax_value())
                   for vid, v in net.variables.items()}
    prev_weights = {vid: v.belief.weights.copy()
                    for vid, v in net.variables.items()}
    iterations_run = 0
    converged = False
    for it in range(1, cfg.iterations + 1):
        iterations_run = it
        if ctx is not None and getattr(ctx, "meter", None) is not None:
            ctx.meter.add_cycle()
        v2c = {}
        for vid, var in net.variables.items():
            for fid in var.neighbors:
                rng = derive_rng(cfg.seed, f"{vid}->{fid}", it)
                msg = variable_to_constraint(net, vid, fid, c2v, rng, cfg)
                _check(cfg, msg, var.belief.size, f"{vid}->{fid}")
                _trace(cfg, it, vid, fid, msg)
                v2c[(vid, fid)] = msg
        c2v = {}
        for fid, fac in net.factors.items():
            for vid in dict.fromkeys(fac.scope):
                rng = derive_rng(cfg.seed, f"{fid}->{vid}", it)
                msg = constraint_to_variable(net, fid, vid, v2c, ctx, rng, cfg)
                _check(cfg, msg, net.variables[vid].belief.size, f"{fid}->{vid}")
                _trace(cfg, it, fid, vid, msg)
                c2v[(fid, vid)] = msg
        moved = 0.0
        for vid, var in net.variables.items():
            rng = derive_rng(cfg.seed, vid, it, salt=1)
            var.belief = update_belief(net, vid, c2v, rng, cfg)
            _check(cfg, var.belief, var.belief.size, f"belief[{vid}]")
            new = np.asarray(var.belief.argmax_value())
            if var.kind == "discrete":
                # an unchanged argmax is not enough on finite supports: the
                # belief must be a fixed point of the updates, otherwise a
                # chain can stop before messages have crossed the graph
                if not np.allclose(prev_weights[vid], var.belief.weights,
                                   atol=1e-12):
                    moved = np.inf
            elif prev_argmax[vid].shape == new.shape:
                moved = max(moved, displacement(var.kind, prev_argmax[vid], new))
            else:
                moved = np.inf
            prev_argmax[vid] = new
            prev_weights[vid] = var.belief.weights.copy()
        if moved < 1.0:
            converged = True
            break
    return InferenceResult(converged=converged, iterations_run=iterations_run)


def max_product_assignment(net) -> dict:
    """Highest-weighted belief sample per variable (lowest index on ties)."""
    return {vid: var.belief.argmax_value() for vid, var in net.variables.items()}


def write_trace_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "source", "target", "w0", "w1", "w2"])
        for row in rows:
            writer.writerow(row)
