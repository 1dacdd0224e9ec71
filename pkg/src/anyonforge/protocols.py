"""Forced-measurement teleportation and measurement-generated braiding.

A forced measurement moves an entanglement-resource pair ``old -> new``:
it measures the charge of ``new`` until the vacuum is found, undoing each
failure by measuring ``old`` again.  The interferometric variant adds a
charge check on the block that carries the state and only accepts when that
block is back to vacuum charge.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .anyon_model import AnyonModel, ProbeSpec
from .fusion_space import (
    CCW,
    CW,
    AnyonicDensityMatrix,
    apply_braid_word,
    cluster_marginals,
    inverse_word,
    tensor,
)
from .measurement import (
    OVER,
    UNDER,
    MeasurementTarget,
    Outcome,
    _sample,
    as_target,
    decohere,
    interferometry,
    outcome_distribution,
    project,
    projector_probabilities,
)

PROJECTIVE, INTERFEROMETRIC, QUBIT_REFERENCE = "projective", "interferometric", "qubit_reference"
MAX_ATTEMPTS = 10_000


class AttemptCapExceeded(RuntimeError):
    pass


@dataclass
class ForcedMeasurementRecord:
    method: str
    outcomes: list = field(default_factory=list)
    attempts: int = 0

    def as_dict(self, model: AnyonModel | None = None) -> dict:
        def show(c):
            if model is None or not isinstance(c, (int, np.integer)):
                return c if not isinstance(c, tuple) else list(c)
            return model.labels[c]

        return {"method": self.method, "attempts": self.attempts, "outcomes": [[k, show(v)] for k, v in self.outcomes]}


class EventLog(list):
    """Measurement events as plain dicts, ready for JSON lines."""

    def add(self, model, target, method, outcome, probability):
        if isinstance(outcome, tuple):
            shown = [model.labels[c] for c in outcome]
        else:
            shown = model.labels[outcome]
        self.append(
            {
                "target": list(as_target(target).subset),
                "method": method,
                "outcome": shown,
                "probability": round(float(probability), 12),
            }
        )


class TransitionCache:
    """Memo of measurement transitions for repeated runs from one initial state.

    A forced measurement only ever visits a handful of distinct density
    matrices, so Monte Carlo runs can reuse every (state, target) branch.
    Sampling consumes the generator exactly as the uncached path does, so
    seeded runs give identical outcomes either way.
    """

    def __init__(self, decimals: int = 11):
        self.decimals = decimals
        self._table = {}

    def _key(self, rho, target, method, probe):
        digest = hashlib.blake2b(np.round(rho.mat, self.decimals).tobytes(), digest_size=16).digest()
        probe_key = None if probe is None else tuple(sorted(probe.items()))
        return rho.leaves, digest, as_target(target), method, probe_key

    def measure(self, rho, target, method, probe, rng) -> Outcome:
        key = self._key(rho, target, method, probe)
        entry = self._table.get(key)
        if entry is None:
            entry = self._table[key] = (outcome_distribution(rho, target, method, probe), {})
        probs, states = entry
        c = _sample(probs, rng, None)
        if c not in states:
            states[c] = _measure_once(rho, target, method, probe, None, c).state
        return Outcome(c, states[c], probs[c])

    def __len__(self):
        return len(self._table)


def _measure_once(rho, target, method, probe, rng, forced=None):
    if method == PROJECTIVE:
        return project(rho, target, rng, forced_outcome=forced)
    return interferometry(rho, target, probe, rng, forced_class=forced)


def _measure(rho, target, method, probe, rng, log, cache=None):
    if cache is not None:
        res = cache.measure(rho, target, method, probe, rng)
    else:
        res = _measure_once(rho, target, method, probe, rng)
    if log is not None:
        log.add(rho.model, target, method, res.outcome, res.probability)
    return res


def _is_vacuum(outcome) -> bool:
    return outcome == 0 or outcome == (0,)


def forced_move_projective(rho, new_pair, old_pair, rng, log=None, cap=MAX_ATTEMPTS, cache=None):
    """Projective forced measurement moving the resource from ``old_pair`` to ``new_pair``."""
    record = ForcedMeasurementRecord(PROJECTIVE, [("e", 0)])
    while True:
        record.attempts += 1
        if record.attempts > cap:
            raise AttemptCapExceeded(f"forced measurement exceeded {cap} attempts")
        res = _measure(rho, new_pair, PROJECTIVE, None, rng, log, cache)
        rho = res.state
        record.outcomes.append(("f", res.outcome))
        if _is_vacuum(res.outcome):
            return rho, record
        res = _measure(rho, old_pair, PROJECTIVE, None, rng, log, cache)
        rho = res.state
        record.outcomes.append(("e", res.outcome))


def forced_move_interferometric(
    rho,
    new_pair,
    old_pair,
    check_target,
    probe,
    rng,
    log=None,
    cap=MAX_ATTEMPTS,
    skip_inferable=True,
    resource_charge=None,
    cache=None,
):
    """Interferometric forced measurement; ``check_target`` is the block that must return to vacuum.

    With ``skip_inferable`` the check is skipped on the first attempt when
    the resource charge ``e`` and the outcome ``f`` are both Abelian: the
    state block then starts with trivial charge and the check outcome is
    fixed by fusion.  Later attempts leave the state charge unmeasured, so
    nothing can be inferred there.
    """
    model = rho.model
    record = ForcedMeasurementRecord(INTERFEROMETRIC)
    if resource_charge is not None:
        record.outcomes.append(("e", resource_charge))
    while True:
        record.attempts += 1
        if record.attempts > cap:
            raise AttemptCapExceeded(f"forced measurement exceeded {cap} attempts")
        res = _measure(rho, new_pair, INTERFEROMETRIC, probe, rng, log, cache)
        rho, f = res.state, res.outcome
        record.outcomes.append(("f", f))
        e = resource_charge if record.attempts == 1 else None
        if skip_inferable and e is not None and _abelian(model, e) and _abelian(model, f):
            z = model.fuse(e, model.dual[f])[0]
        else:
            res = _measure(rho, check_target, INTERFEROMETRIC, probe, rng, log, cache)
            rho, z = res.state, res.outcome
        record.outcomes.append(("z", z))
        if _is_vacuum(z):
            return rho, record
        res = _measure(rho, old_pair, INTERFEROMETRIC, probe, rng, log, cache)
        rho = res.state
        record.outcomes.append(("e", res.outcome))


def _abelian(model, c):
    return not isinstance(c, tuple) and model.is_abelian(c)


# Geometry shared by every protocol here: the charge lines of the state run
# under the resource pair.  Loops around state anyons pass under pair anyons
# they bypass, and anyons on either side of a pair measurement are joined
# underneath it.  The (2, 4) loop passes over anyon 3.


def _state_block(n: int) -> MeasurementTarget:
    # anyon 1 plus everything right of the pair at (2, 3)
    rest = tuple(range(4, n + 1))
    return MeasurementTarget((1,) + rest, (UNDER, UNDER) if rest else ())


def _pair(p, q) -> MeasurementTarget:
    bypassed = q - p - 1
    return MeasurementTarget((p, q), (OVER,) * bypassed, exterior=UNDER)


def _state_target(positions) -> MeasurementTarget:
    target = MeasurementTarget(tuple(sorted(positions)))
    return MeasurementTarget(target.subset, (UNDER,) * len(target.bypassed), exterior=UNDER)


def forced_teleport_projective(rho: AnyonicDensityMatrix, rng, log=None, cap=MAX_ATTEMPTS, cache=None):
    """Teleport the state of anyon 3 onto anyon 1 using the vacuum pair at (1, 2)."""
    _check_leaves(rho)
    if _definite_charge(rho, (1, 2)) != 0:
        raise ValueError("resource pair at (1, 2) is not in the vacuum channel")
    return forced_move_projective(rho, _pair(2, 3), _pair(1, 2), rng, log, cap, cache)


def forced_teleport_interferometric(
    rho: AnyonicDensityMatrix, probe: ProbeSpec, rng, log=None, skip_inferable=True, cap=MAX_ATTEMPTS, cache=None
):
    """Interferometric teleport of anyon 3 onto anyon 1 with a resource of definite charge at (1, 2)."""
    _check_leaves(rho)
    e = _definite_charge(rho, (1, 2))
    if e is None:
        raise ValueError("resource pair at (1, 2) must have a definite charge")
    if _definite_charge(rho, tuple(range(3, rho.n + 1))) != 0:
        raise ValueError("the state block must have trivial overall charge")
    return forced_move_interferometric(
        rho,
        _pair(2, 3),
        _pair(1, 2),
        _state_block(rho.n),
        probe,
        rng,
        log,
        cap=cap,
        skip_inferable=skip_inferable,
        resource_charge=e,
        cache=cache,
    )


def _check_leaves(rho):
    if rho.n < 3:
        raise ValueError("need a resource pair at (1, 2) and a state anyon at 3")
    a = rho.leaves[0]
    if rho.leaves[1] != rho.model.dual[a] or rho.leaves[2] != a:
        raise ValueError("anyons 1 and 3 must carry the same charge a, anyon 2 its dual")


def _definite_charge(rho, target, tol=1e-9):
    """The collective charge of ``target`` if it is certain, else None."""
    for c, p in projector_probabilities(rho, target).items():
        if p > 1 - tol:
            return c
    return None


# --------------------------------------------------------------------------
# measurement-generated braiding of anyons 1 and 4 around the pair (2, 3)

# (new pair, old pair, check pair) per forced measurement in template
# numbering, in time order; the check block adds the rest of the state
_BRAID_SEQUENCES = {
    CCW: (((1, 2), (2, 3), (3, 4)), ((2, 4), (1, 2), (1, 3)), ((2, 3), (2, 4), (1, 4))),
    CW: (((2, 4), (2, 3), (1, 3)), ((1, 2), (2, 4), (3, 4)), ((2, 3), (1, 2), (1, 4))),
}


@dataclass(frozen=True)
class BraidStep:
    new: MeasurementTarget
    old: MeasurementTarget
    check: MeasurementTarget


def braid_steps(chirality: str, n: int, at: int = 1, group=None) -> tuple[BraidStep, ...]:
    """The three forced measurements exchanging anyons ``at`` and ``at+3`` around the pair between them.

    ``group`` lists the other positions carrying the state; by default every
    anyon outside the four template anyons.
    """
    if chirality not in (CCW, CW):
        raise ValueError(f"chirality must be ccw or cw, got {chirality!r}")
    if not 1 <= at <= n - 3:
        raise ValueError(f"template anyons {at}..{at + 3} do not fit in {n} anyons")
    template = range(at, at + 4)
    if group is None:
        group = [p for p in range(1, n + 1) if p not in template]
    group = tuple(group)
    if any(p in template or not 1 <= p <= n for p in group):
        raise ValueError(f"state group {group} overlaps the template or leaves the array")

    def place(t):
        return at + t - 1

    steps = []
    for new, old, check in _BRAID_SEQUENCES[chirality]:
        steps.append(
            BraidStep(
                _pair(place(new[0]), place(new[1])),
                _pair(place(old[0]), place(old[1])),
                _state_target((place(check[0]), place(check[1])) + group),
            )
        )
    return tuple(steps)


def run_braid_step(rho, step: BraidStep, method, probe, rng, log=None, resource=None, cache=None, cap=MAX_ATTEMPTS):
    """One forced measurement of a braid; returns (state, record, pair charge left behind)."""
    if method == PROJECTIVE:
        rho, rec = forced_move_projective(rho, step.new, step.old, rng, log, cap, cache)
        return rho, rec, 0
    rho, rec = forced_move_interferometric(
        rho, step.new, step.old, step.check, probe, rng, log, cap, resource_charge=resource, cache=cache
    )
    return rho, rec, rec.outcomes[-2][1]


def measurement_braid(
    rho: AnyonicDensityMatrix,
    chirality: str = CCW,
    method: str = PROJECTIVE,
    probe: ProbeSpec | None = None,
    rng=None,
    log=None,
    cache=None,
    at: int = 1,
    group=None,
):
    """Exchange anyons ``at`` and ``at+3`` using only charge measurements and the pair between them.

    By default the template sits at 1..4 and every other anyon belongs to
    the state; the interferometric check blocks include them.  Returns the
    final state and the three forced-measurement records.
    """
    if method not in (PROJECTIVE, INTERFEROMETRIC):
        raise ValueError(f"unknown method {method!r}")
    steps = braid_steps(chirality, rho.n, at, group)
    a = rho.leaves[at - 1]
    if rho.leaves[at + 2] != a or rho.leaves[at] != rho.model.dual[a] or rho.leaves[at + 1] != a:
        raise ValueError("the computational anyons and the second pair anyon must carry a, the first pair anyon its dual")
    resource = _definite_charge(rho, (at + 1, at + 2))
    if method == PROJECTIVE and resource != 0:
        raise ValueError("projective braiding needs the resource pair in the vacuum channel")
    if method == INTERFEROMETRIC:
        if probe is None:
            raise ValueError("interferometric braiding needs a probe")
        if resource is None:
            raise ValueError("the resource pair must have a definite charge")
        if _definite_charge(rho, steps[2].check) != 0:
            raise ValueError("the state block must have trivial overall charge")
    records = []
    for step in steps:
        rho, rec, resource = run_braid_step(rho, step, method, probe, rng, log, resource, cache)
        records.append(rec)
    return rho, records


def direct_braid(rho: AnyonicDensityMatrix, i: int, j: int, chirality: str = CCW) -> AnyonicDensityMatrix:
    """Exchange anyons i < j along an arc passing over the anyons in between.

    Anyon j is brought next to i, the two are exchanged, and the anyon
    that started at i is carried back along the same arc, so the ccw and cw
    versions are exact inverses.
    """
    if chirality not in (CCW, CW):
        raise ValueError(f"chirality must be ccw or cw, got {chirality!r}")
    if not 1 <= i < j <= rho.n:
        raise IndexError(f"invalid anyon pair ({i}, {j}) for {rho.n} anyons")
    return apply_braid_word(rho, direct_braid_word(i, j, chirality))


def direct_braid_word(i: int, j: int, chirality: str = CCW):
    bring = [(p, CCW) for p in range(j - 1, i, -1)]
    return bring + [(i, chirality)] + inverse_word(bring)


# --------------------------------------------------------------------------
# placing and releasing a resource pair inside a state


def insert_resource(state: AnyonicDensityMatrix, pair: AnyonicDensityMatrix, position: int) -> AnyonicDensityMatrix:
    """Place ``pair`` at 1-based ``position, position+1`` with the state's lines running under it."""
    if not 1 <= position <= state.n + 1:
        raise IndexError(f"cannot insert at position {position} into {state.n} anyons")
    full = tensor(state, pair)
    n = full.n
    word = [(p, CCW) for p in range(n - 2, position - 1, -1)]
    word += [(p, CCW) for p in range(n - 1, position, -1)]
    return apply_braid_word(full, word)


def release_resource(rho: AnyonicDensityMatrix, position: int):
    """Inverse of :func:`insert_resource`: returns the reduced (state, pair)."""
    n = rho.n
    if not 1 <= position < n:
        raise IndexError(f"no pair at position {position} among {n} anyons")
    word = [(p, CW) for p in range(position + 1, n)]
    word += [(p, CW) for p in range(position, n - 1)]
    moved = apply_braid_word(rho, word)
    if n == 2:
        raise ValueError("nothing left once the pair is removed")
    return cluster_marginals(moved, n - 2)


def resource_entanglement(rho: AnyonicDensityMatrix, position: int, probe: ProbeSpec) -> float:
    """Weight removed by severing all lines between the pair at ``position`` and the rest."""
    n = rho.n
    word = [(p, CW) for p in range(position + 1, n)]
    word += [(p, CW) for p in range(position, n - 1)]
    return decohere(apply_braid_word(rho, word), n - 2, probe)[1]


# --------------------------------------------------------------------------
# spin-1/2 reference protocol

_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
_BELL = tuple(np.kron(np.eye(2), s) @ np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2) for s in _PAULI)
_BELL_PROJECTORS = {
    (1, 2): tuple(np.kron(np.outer(b, b.conj()), np.eye(2)) for b in _BELL),
    (2, 3): tuple(np.kron(np.eye(2), np.outer(b, b.conj())) for b in _BELL),
}


def _bell_measure(psi, sites, rng):
    probs = np.array([np.vdot(psi, proj @ psi).real for proj in _BELL_PROJECTORS[sites]])
    mu = int(_sample(dict(enumerate(probs / probs.sum())), rng, None))
    post = _BELL_PROJECTORS[sites][mu] @ psi
    return mu, post / np.linalg.norm(post), probs[mu]


def qubit_reference_forced_teleport(qubit, rng, cap=MAX_ATTEMPTS):
    """Forced Bell-measurement teleport of a spin-1/2 state from site 3 to site 1.

    Sites 1 and 2 start in the Bell state ``Phi_0``.  Returns the final
    three-site state vector and the record of (mu, nu) outcomes.
    """
    qubit = np.asarray(qubit, dtype=complex)
    qubit = qubit / np.linalg.norm(qubit)
    psi = np.kron(_BELL[0], qubit)
    record = ForcedMeasurementRecord(QUBIT_REFERENCE)
    while True:
        record.attempts += 1
        if record.attempts > cap:
            raise AttemptCapExceeded(f"forced measurement exceeded {cap} attempts")
        mu, psi, _ = _bell_measure(psi, (2, 3), rng)
        record.outcomes.append(("μ", mu))
        if mu == 0:
            return psi, record
        nu, psi, _ = _bell_measure(psi, (1, 2), rng)
        record.outcomes.append(("ν", nu))


def site_state(psi: np.ndarray, site: int) -> np.ndarray:
    """Reduced 2x2 density matrix of one site (1-based) of a three-site state."""
    t = np.asarray(psi).reshape(2, 2, 2)
    t = np.moveaxis(t, site - 1, 0).reshape(2, 4)
    return t @ t.conj().T


# --------------------------------------------------------------------------
# Monte Carlo summaries


@dataclass
class AttemptStatistics:
    runs: int
    mean: float
    std_error: float
    histogram: dict
    tail: dict  # N -> empirical Prob(n > N)
    success_per_attempt: float

    def as_dict(self) -> dict:
        return {
            "runs": self.runs,
            "mean_attempts": self.mean,
            "std_error": self.std_error,
            "success_per_attempt": self.success_per_attempt,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "tail": {str(k): v for k, v in sorted(self.tail.items())},
        }


def attempt_statistics(records, tail_points=(1, 2, 5, 10, 20)) -> AttemptStatistics:
    """Mean, histogram and tail of the attempt counts of forced measurements.

    ``records`` may hold ForcedMeasurementRecord objects or bare integers.
    """
    counts = np.array([r.attempts if hasattr(r, "attempts") else int(r) for r in records], dtype=float)
    if counts.size == 0:
        raise ValueError("no records to summarize")
    if np.any(counts < 1):
        raise ValueError("attempt counts must be positive")
    values, freq = np.unique(counts.astype(int), return_counts=True)
    std_error = float(counts.std(ddof=1) / math.sqrt(counts.size)) if counts.size > 1 else 0.0
    return AttemptStatistics(
        runs=int(counts.size),
        mean=float(counts.mean()),
        std_error=std_error,
        histogram={int(v): int(c) for v, c in zip(values, freq)},
        tail={int(n): float(np.mean(counts > n)) for n in tail_points},
        success_per_attempt=float(counts.size / counts.sum()),
    )
