"""Projective and interferometric topological-charge measurements.

Targets are 1-based anyon positions.  A non-adjacent target is measured by
braiding the target anyons together, measuring the contiguous block, and
braiding back; each bypassed anyon carries an ``over``/``under`` tag that
fixes on which side of it the measured charge line passes.

Interferometry is the asymptotic many-probe limit: projection onto a class
of charges with equal probe monodromy followed by the decoherence
superoperator, which deletes every charge line ``e`` crossing the
interferometer boundary whose monodromy with the probe differs from 1.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .anyon_model import AnyonModel, ProbeSpec
from .fusion_space import (
    CCW,
    CW,
    AnyonicDensityMatrix,
    apply_braid_word,
    block_projectors,
    chain_shape,
    inverse_word,
    qtrace,
    trace_distance,
    tree_basis,
)

OVER, UNDER = "over", "under"
MONODROMY_TOL = 1e-9
FORCED_MIN_PROB = 1e-12


class MeasurementError(ValueError):
    pass


@dataclass(frozen=True)
class MeasurementTarget:
    subset: tuple[int, ...]
    configuration: tuple[str, ...] | None = None
    exterior: str = OVER  # side on which anyons left and right of the block connect

    def __post_init__(self):
        subset = tuple(int(p) for p in self.subset)
        if not subset:
            raise MeasurementError("empty measurement target")
        if any(b <= a for a, b in zip(subset, subset[1:])) or subset[0] < 1:
            raise MeasurementError(f"target positions must be strictly increasing and 1-based: {subset}")
        object.__setattr__(self, "subset", subset)
        bypassed = self.bypassed
        config = self.configuration
        if config is None:
            config = (OVER,) * len(bypassed)
        config = tuple(config)
        if len(config) != len(bypassed) or any(c not in (OVER, UNDER) for c in config):
            raise MeasurementError(f"need one over/under tag per bypassed anyon {bypassed}, got {config}")
        object.__setattr__(self, "configuration", config)
        if self.exterior not in (OVER, UNDER):
            raise MeasurementError(f"exterior side must be over or under, got {self.exterior!r}")

    @property
    def bypassed(self) -> tuple[int, ...]:
        inside = set(self.subset)
        return tuple(p for p in range(self.subset[0], self.subset[-1]) if p not in inside)

    @property
    def contiguous(self) -> bool:
        return not self.bypassed

    def __str__(self) -> str:
        return "(" + ",".join(str(p) for p in self.subset) + ")"


def as_target(target) -> MeasurementTarget:
    if isinstance(target, MeasurementTarget):
        return target
    if isinstance(target, int):
        return MeasurementTarget((target,))
    return MeasurementTarget(tuple(sorted(target)))


@dataclass(frozen=True)
class Routing:
    word: tuple[tuple[int, str], ...]
    lo: int  # 1-based first position of the gathered block
    hi: int


def routing_for(target: MeasurementTarget) -> Routing:
    """Braid word gathering the target into a contiguous block at its first position.

    Each later target anyon travels left past the bypassed anyons in its way;
    passing ``over`` a bypassed anyon is the counterclockwise exchange.
    """
    tags = dict(zip(target.bypassed, target.configuration))
    order = list(range(1, target.subset[-1] + 1))  # order[pos-1] = original label at pos
    word = []
    packed_end = target.subset[0]
    for label in target.subset[1:]:
        pos = order.index(label) + 1
        while pos > packed_end + 1:
            other = order[pos - 2]
            direction = CCW if tags[other] == OVER else CW
            word.append((pos - 1, direction))
            order[pos - 2], order[pos - 1] = order[pos - 1], order[pos - 2]
            pos -= 1
        packed_end = pos
    return Routing(tuple(word), target.subset[0], target.subset[0] + len(target.subset) - 1)


def route_target(rho: AnyonicDensityMatrix, target) -> tuple[AnyonicDensityMatrix, Routing]:
    target = as_target(target)
    if target.subset[-1] > rho.n:
        raise MeasurementError(f"target {target} exceeds {rho.n} anyons")
    routing = routing_for(target)
    return apply_braid_word(rho, routing.word), routing


def unroute(rho: AnyonicDensityMatrix, routing: Routing) -> AnyonicDensityMatrix:
    return apply_braid_word(rho, inverse_word(routing.word))


def _sample(probs: dict, rng, forced):
    if forced is not None:
        p = probs.get(forced, 0.0)
        if p <= FORCED_MIN_PROB:
            raise MeasurementError(f"forced outcome has probability {p:.3e}")
        return forced
    if rng is None:
        raise MeasurementError("need a random generator or a forced outcome")
    u = rng.random()
    acc = 0.0
    last = None
    for c, p in probs.items():
        if p <= 0:
            continue
        acc += p
        last = c
        if u < acc:
            return c
    return last


class Outcome(NamedTuple):
    outcome: object
    state: AnyonicDensityMatrix
    probability: float


def _block_probs(rho, lo, hi):
    projs = block_projectors(rho.model, rho.leaves, lo - 1, hi - 1)
    probs = {}
    for c, proj in projs.items():
        probs[c] = max(float(np.real(np.sum(proj * rho.mat.T))), 0.0)
    return projs, probs


def projector_probabilities(rho: AnyonicDensityMatrix, target) -> dict[int, float]:
    routed, routing = route_target(rho, target)
    return _block_probs(routed, routing.lo, routing.hi)[1]


def project(rho: AnyonicDensityMatrix, target, rng=None, forced_outcome=None) -> Outcome:
    """Projective measurement of the collective charge of ``target``."""
    routed, routing = route_target(rho, target)
    projs, probs = _block_probs(routed, routing.lo, routing.hi)
    if forced_outcome is not None:
        forced_outcome = rho.model.charge(forced_outcome)
    c = _sample(probs, rng, forced_outcome)
    proj = projs[c]
    post = routed.with_matrix(proj @ routed.mat @ proj / probs[c])
    return Outcome(c, unroute(post, routing), probs[c])


# --------------------------------------------------------------------------
# decoherence and interferometry


@dataclass(frozen=True)
class ChargeClassPartition:
    classes: tuple[tuple[int, ...], ...]
    values: tuple[complex, ...]

    def class_of(self, a: int) -> int:
        for k, cls in enumerate(self.classes):
            if a in cls:
                return k
        raise KeyError(a)


def charge_classes(model: AnyonModel, probe: ProbeSpec) -> ChargeClassPartition:
    classes, values = [], []
    for a in model.charges:
        m = model.monodromy_probe(a, probe)
        for k, v in enumerate(values):
            if abs(v - m) < MONODROMY_TOL:
                classes[k].append(a)
                break
        else:
            classes.append([a])
            values.append(m)
    return ChargeClassPartition(tuple(tuple(c) for c in classes), tuple(values))


def _kept_lines(model, probe) -> tuple[bool, ...]:
    return tuple(abs(model.monodromy_probe(e, probe) - 1) < MONODROMY_TOL for e in model.charges)


@functools.lru_cache(maxsize=2048)
def _decoherence_map(model, leaves, n_inside, kept):
    """Index/coefficient arrays of the cut superoperator in the two-cluster basis."""
    m = len(leaves)
    shape = (chain_shape(range(n_inside)), chain_shape(range(n_inside, m)))
    u, trees = tree_basis(model, leaves, shape)
    where = {t: j for j, t in enumerate(trees)}
    qd = model.qdim

    def charge(t):
        return leaves[t] if isinstance(t, int) else t[2]

    kernel_cache = {}

    def kernel(a, b, c, d):
        key = (a, b, c, d)
        if key not in kernel_cache:
            fs = [f for f in model.charges if model.nsym[a, b, f] and model.nsym[c, d, f]]
            es = [e for e in model.charges if model.nsym[c, e, a] and model.nsym[e, b, d]]
            fmat = np.array([[model.f_bend(a, b, c, d, e, f) for f in fs] for e in es])
            keep = np.array([kept[e] for e in es], dtype=float)
            kmat = fmat.conj().T @ (keep[:, None] * fmat)
            kernel_cache[key] = (fs, kmat)
        return kernel_cache[key]

    dest, src, coef = [], [], []
    dim = len(trees)
    for x, (lx, rx, f) in enumerate(trees):
        for y, (ly, ry, g) in enumerate(trees):
            if f != g:
                continue
            fs, kmat = kernel(charge(lx), charge(rx), charge(ly), charge(ry))
            i = fs.index(f)
            for j, f2 in enumerate(fs):
                val = kmat[i, j]
                if abs(val) < 1e-15:
                    continue
                x2, y2 = where[(lx, rx, f2)], where[(ly, ry, f2)]
                dest.append(x2 * dim + y2)
                src.append(x * dim + y)
                coef.append(math.sqrt(qd[f2] / qd[f]) * val)
    return u, np.array(dest, dtype=np.int64), np.array(src, dtype=np.int64), np.array(coef, dtype=complex)


def decohere(rho: AnyonicDensityMatrix, cut: int, probe: ProbeSpec) -> tuple[AnyonicDensityMatrix, float]:
    """Remove charge lines crossing the cut between anyons ``1..cut`` and the rest.

    Returns the new state and the removed weight ``1/2 ||rho - rho'||_1``.
    The superoperator is trace preserving: lines with ``e != 0`` carry no
    quantum trace.
    """
    if not 1 <= cut < rho.n:
        raise MeasurementError(f"cut {cut} must split {rho.n} anyons into two non-empty groups")
    kept = _kept_lines(rho.model, probe)
    if all(kept):
        return rho, 0.0
    u, dest, src, coef = _decoherence_map(rho.model, rho.leaves, cut, kept)
    inner = u.conj().T @ rho.mat @ u
    out = np.zeros(inner.size, dtype=complex)
    np.add.at(out, dest, coef * inner.reshape(-1)[src])
    mat = u @ out.reshape(inner.shape) @ u.conj().T
    new = rho.with_matrix(mat)
    return new, trace_distance(rho, new)


def _decohere_block(rho, lo, hi, kept_probe, exterior=OVER):
    """Decoherence for the contiguous 1-based block lo..hi.

    Anyons left of the block are carried past it on the ``exterior`` side
    so the block becomes a prefix; passing over is the clockwise exchange
    for an anyon moving right.
    """
    n = rho.n
    if lo == 1 and hi == n:
        return rho
    if lo == 1:
        return decohere(rho, hi, kept_probe)[0]
    if hi == n:
        return decohere(rho, lo - 1, kept_probe)[0]
    slide = CW if exterior == OVER else CCW
    word = []
    for step in range(lo - 1):
        start = lo - 1 - step  # anyon currently just left of the block
        for pos in range(start, start + hi - lo + 1):
            word.append((pos, slide))
    moved = apply_braid_word(rho, word)
    moved = decohere(moved, hi - lo + 1, kept_probe)[0]
    return apply_braid_word(moved, inverse_word(word))


def outcome_distribution(rho: AnyonicDensityMatrix, target, method: str, probe: ProbeSpec | None = None) -> dict:
    """Outcome probabilities in the order the samplers walk them.

    Keys are the outcomes reported by :func:`project` (a charge) or
    :func:`interferometry` (a charge, or a tuple for a multi-charge class).
    """
    routed, routing = route_target(rho, target)
    probs = _block_probs(routed, routing.lo, routing.hi)[1]
    if method == "projective":
        return probs
    partition = charge_classes(rho.model, probe)
    out = {}
    for cls in partition.classes:
        out[cls[0] if len(cls) == 1 else cls] = sum(probs.get(c, 0.0) for c in cls)
    return out


def interferometry(
    rho: AnyonicDensityMatrix,
    target,
    probe: ProbeSpec,
    rng=None,
    forced_class=None,
) -> Outcome:
    """Asymptotic interferometric measurement of the collective charge of ``target``.

    The outcome is the tuple of charges in the observed class; ``forced_class``
    may be given as any charge belonging to the class.
    """
    model = rho.model
    routed, routing = route_target(rho, target)
    projs, probs = _block_probs(routed, routing.lo, routing.hi)
    partition = charge_classes(model, probe)
    class_probs = {}
    for cls in partition.classes:
        class_probs[cls] = sum(probs.get(c, 0.0) for c in cls)
    forced = None
    if forced_class is not None:
        if isinstance(forced_class, tuple):
            forced = forced_class
        else:
            forced = partition.classes[partition.class_of(model.charge(forced_class))]
    cls = _sample(class_probs, rng, forced)
    proj = sum(projs[c] for c in cls if c in projs)
    post = routed.with_matrix(proj @ routed.mat @ proj / class_probs[cls])
    post = _decohere_block(post, routing.lo, routing.hi, probe, as_target(target).exterior)
    post = post.with_matrix(post.mat / qtrace(post))
    outcome = cls[0] if len(cls) == 1 else cls
    return Outcome(outcome, unroute(post, routing), class_probs[cls])
