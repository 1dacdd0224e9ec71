"""Compile braid words on four-anyon qubits into adaptive measurement schedules.

Computational anyons sit on a line with resource anyons interleaved.  A
generator ``(i, chirality)`` exchanges computational anyons ``i`` and
``i + 1`` by the three forced measurements of :func:`measurement_braid`,
using the resource anyon between them and its pair partner.

The schedule names anyons by physical index on that line.  Execution keeps
only the computational anyons in memory and materializes the one resource
pair a generator needs, right where the braid template expects it; a pair
that has been released carries nothing but its own charge, which is stored
between uses.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .anyon_model import AnyonModel, ProbeSpec, build_model
from .fusion_space import (
    CCW,
    CW,
    AnyonicDensityMatrix,
    apply_braid,
    chain_shape,
    fusion_basis,
    pure_state,
    resource_pair,
    tensor,
    tree_basis,
)
from .measurement import MeasurementTarget, project
from .protocols import (
    INTERFEROMETRIC,
    MAX_ATTEMPTS,
    PROJECTIVE,
    BraidStep,
    EventLog,
    braid_steps,
    insert_resource,
    release_resource,
    run_braid_step,
)

log = logging.getLogger(__name__)

SCHEDULE_VERSION = "motqc-schedule/1"
ANYONS_PER_QUBIT = 4
MAX_ARITY = 8
_STANDARD_CHARGE = {"ising": "σ", "fib": "ε", "fib_conj": "ε"}


class CompileError(ValueError):
    pass


class ArityError(CompileError):
    """A compiled measurement exceeds the arity bound; indicates a compiler bug or an unsupported word."""


@dataclass(frozen=True)
class QubitEncoding:
    model: AnyonModel
    charge: int
    channels: tuple[int, int]

    @property
    def anyons_per_qubit(self) -> int:
        return ANYONS_PER_QUBIT


def qubit_encoding(model: AnyonModel, charge=None) -> QubitEncoding:
    """Qubit basis from the two lowest fusion channels of ``charge`` with itself.

    The default charge is σ for Ising, ε for Fibonacci and j = 1/2 for SU(2)_k.
    """
    if charge is None:
        charge = _STANDARD_CHARGE.get(model.name, "1/2")
    a = model.charge(charge)
    channels = model.fuse(a, model.dual[a])
    if len(channels) < 2:
        raise ValueError(f"{model.labels[a]} x {model.labels[a]} has a single channel; no qubit to encode")
    return QubitEncoding(model, a, (channels[0], channels[1]))


def _qubit_state(enc: QubitEncoding, bit: int) -> AnyonicDensityMatrix:
    model, a = enc.model, enc.charge
    leaves = (a, a, a, a)
    u, trees = tree_basis(model, leaves, chain_shape([(0, 1), (2, 3)]))
    c = enc.channels[bit]
    col = trees.index(((0, 1, c), (2, 3, c), 0))
    vec = u[:, col]
    basis = fusion_basis(model, leaves)
    amps = {basis.chains[k]: vec[k] for k in np.flatnonzero(np.abs(vec) > 1e-15)}
    return pure_state(model, leaves, amps)


def encode_qubits(model: AnyonModel, n: int, bits=None, encoding: QubitEncoding | None = None) -> AnyonicDensityMatrix:
    """Product state of ``n`` qubits, each four anyons with total charge vacuum."""
    if n < 1:
        raise ValueError("need at least one qubit")
    enc = encoding or qubit_encoding(model)
    if bits is None:
        bits = "0" * n
    bits = [int(b) for b in bits]
    if len(bits) != n or any(b not in (0, 1) for b in bits):
        raise ValueError(f"bitstring must have {n} binary digits")
    rho = _qubit_state(enc, bits[0])
    for b in bits[1:]:
        rho = tensor(rho, _qubit_state(enc, b))
    return rho


# --------------------------------------------------------------------------
# layout


@dataclass(frozen=True)
class ArrayLayout:
    """Economical single-row layout ``r0 C1 r1 C2 r2 ... r(4n-1) C(4n)``.

    Physical indices are 1-based along the row: computational anyon ``k``
    sits at ``2k`` and resource anyon ``r_k`` at ``2k + 1``.  Resource
    anyons ``r(2j), r(2j+1)`` form pair ``j``.
    """

    n_qubits: int

    @property
    def n_computational(self) -> int:
        return ANYONS_PER_QUBIT * self.n_qubits

    @property
    def n_physical(self) -> int:
        return 2 * self.n_computational

    def computational(self, k: int) -> int:
        return 2 * k

    def resource(self, k: int) -> int:
        return 2 * k + 1

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple((self.resource(2 * j), self.resource(2 * j + 1)) for j in range(self.n_computational // 2))

    def generator_resources(self, i: int) -> tuple[int, int]:
        """Physical (template anyon 2, template anyon 3) for generator ``i``."""
        partner = i - 1 if i % 2 else i + 1
        return self.resource(i), self.resource(partner)

    def as_dict(self) -> dict:
        return {
            "kind": "economical",
            "n_qubits": self.n_qubits,
            "computational": [self.computational(k) for k in range(1, self.n_computational + 1)],
            "pairs": [list(p) for p in self.pairs],
        }


def _qubit_of(k: int) -> int:
    return (k - 1) // ANYONS_PER_QUBIT


def _to_physical(layout: ArrayLayout, i: int):
    """Map simulation positions (pair inserted after computational anyon i) to physical indices."""
    two, three = layout.generator_resources(i)

    def phys(p):
        if p <= i:
            return layout.computational(p)
        if p == i + 1:
            return two
        if p == i + 2:
            return three
        return layout.computational(p - 2)

    return phys


def _from_physical(layout: ArrayLayout, i: int):
    two, three = layout.generator_resources(i)

    def sim(x):
        if x == two:
            return i + 1
        if x == three:
            return i + 2
        if x % 2:
            raise CompileError(f"resource anyon {x} is not part of generator {i}")
        k = x // 2
        return k if k <= i else k + 2

    return sim


# --------------------------------------------------------------------------
# schedules


@dataclass
class MeasurementSchedule:
    model: str
    charge: str
    method: str
    n_qubits: int
    instructions: list
    frames: list
    probe: dict | None = None
    requested_method: str | None = None
    notes: list = field(default_factory=list)

    @property
    def layout(self) -> ArrayLayout:
        return ArrayLayout(self.n_qubits)

    def max_arity(self) -> int:
        arity = 0
        for ins in self.instructions:
            for m in _measures(ins):
                arity = max(arity, len(m["target"]))
        return arity

    def as_dict(self) -> dict:
        return {
            "version": SCHEDULE_VERSION,
            "model": self.model,
            "charge": self.charge,
            "method": self.method,
            "requested_method": self.requested_method or self.method,
            "n_qubits": self.n_qubits,
            "probe": self.probe,
            "layout": self.layout.as_dict(),
            "frames": self.frames,
            "instructions": self.instructions,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=1, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> MeasurementSchedule:
        data = json.loads(text)
        if data.get("version") != SCHEDULE_VERSION:
            raise ValueError(f"unsupported schedule version {data.get('version')!r}")
        sched = cls(
            model=data["model"],
            charge=data["charge"],
            method=data["method"],
            n_qubits=int(data["n_qubits"]),
            instructions=data["instructions"],
            frames=data["frames"],
            probe=data.get("probe"),
            requested_method=data.get("requested_method"),
            notes=list(data.get("notes", [])),
        )
        if sched.max_arity() > MAX_ARITY:
            raise ValueError(f"schedule measures more than {MAX_ARITY} anyons at once")
        return sched


def _measures(ins):
    if ins["op"] == "MEASURE":
        yield ins
    elif ins["op"] == "REPEAT_UNTIL_VACUUM":
        for sub in ins["block"] + ins["retry"]:
            yield from _measures(sub)


def parse_word(word) -> list[tuple[int, str]]:
    """Accept ``[(i, "ccw"), ...]`` or text like ``"1+ 2- 3"`` / ``"1,-2"`` (sign gives chirality)."""
    if isinstance(word, str):
        items = [t for t in word.replace(",", " ").split() if t]
        out = []
        for t in items:
            chir = CCW
            if t.endswith("+"):
                t = t[:-1]
            elif t.endswith("-") or t.startswith("-"):
                t, chir = t.strip("-"), CW
            out.append((int(t), chir))
        return out
    out = []
    for item in word:
        if isinstance(item, (int, np.integer)):
            out.append((abs(int(item)), CCW if item > 0 else CW))
        else:
            i, chir = item
            out.append((int(i), str(chir)))
    return out


def _measure_ins(target: MeasurementTarget, phys, method) -> dict:
    return {
        "op": "MEASURE",
        "target": [phys(p) for p in target.subset],
        "configuration": list(target.configuration),
        "exterior": target.exterior,
        "method": method,
    }


def default_probe(model: AnyonModel, encoding: QubitEncoding) -> ProbeSpec:
    return ProbeSpec.pure(encoding.charge)


def _check_probe(model, probe):
    mono = [model.monodromy_probe(c, probe) for c in model.charges]
    if any(abs(m - 1) < 1e-9 for m in mono[1:]):
        raise CompileError("the probe cannot tell some nontrivial charge from the vacuum")


def compile_word(
    model: AnyonModel,
    word,
    n_qubits: int,
    method: str = PROJECTIVE,
    probe: ProbeSpec | None = None,
    encoding: QubitEncoding | None = None,
) -> MeasurementSchedule:
    """Compile a braid word into a schedule of forced measurements followed by readout."""
    if method not in (PROJECTIVE, INTERFEROMETRIC):
        raise CompileError(f"unknown method {method!r}")
    enc = encoding or qubit_encoding(model)
    if any(model.dual[c] != c for c in model.charges):
        raise CompileError("the economical layout needs self-dual charges")
    word = parse_word(word)
    layout = ArrayLayout(n_qubits)
    n_comp = layout.n_computational
    requested, notes = method, []
    if method == INTERFEROMETRIC and model.name == "ising":
        method = PROJECTIVE
        notes.append("ising: interferometry of sigma pairs distinguishes every channel; lowered to projective")
        log.info(notes[-1])
    if method == INTERFEROMETRIC:
        probe = probe or default_probe(model, enc)
        _check_probe(model, probe)

    groups = {q: {q} for q in range(n_qubits)}
    instructions, frames = [], []
    for i, chir in word:
        if not 1 <= i < n_comp:
            raise CompileError(f"generator {i} does not address two adjacent of {n_comp} computational anyons")
        if chir not in (CCW, CW):
            raise CompileError(f"chirality must be ccw or cw, got {chir!r}")
        qa, qb = _qubit_of(i), _qubit_of(i + 1)
        if qa != qb:
            merged = groups[qa] | groups[qb]
            for q in merged:
                groups[q] = merged
        comp = [k for q in sorted(groups[qa]) for k in range(ANYONS_PER_QUBIT * q + 1, ANYONS_PER_QUBIT * q + 5)]
        sim_group = [k if k < i else k + 2 for k in comp if k not in (i, i + 1)]
        steps = braid_steps(chir, n_comp + 2, at=i, group=sim_group)
        phys = _to_physical(layout, i)
        frame = len(frames)
        frames.append(
            {
                "generator": i,
                "chirality": chir,
                "computational": [layout.computational(i), layout.computational(i + 1)],
                "resource": list(layout.generator_resources(i)),
                "group": [layout.computational(k) for k in comp],
            }
        )
        for step in steps:
            block = [_measure_ins(step.new, phys, method)]
            if method == INTERFEROMETRIC:
                block.append(_measure_ins(step.check, phys, method))
            instructions.append(
                {
                    "op": "REPEAT_UNTIL_VACUUM",
                    "frame": frame,
                    "block": block,
                    "check_target": block[-1]["target"],
                    "retry": [_measure_ins(step.old, phys, method)],
                }
            )
    instructions += [{"op": "READOUT", "qubit": q} for q in range(n_qubits)]
    sched = MeasurementSchedule(
        model=model.name,
        charge=model.labels[enc.charge],
        method=method,
        n_qubits=n_qubits,
        instructions=instructions,
        frames=frames,
        probe=None if method == PROJECTIVE else {model.labels[b]: float(p) for b, p in sorted(probe.items())},
        requested_method=requested,
        notes=notes,
    )
    if sched.max_arity() > MAX_ARITY:
        raise ArityError(
            f"a charge check needs {sched.max_arity()} anyons; braid words may link at most two qubits at a time"
        )
    return sched


# --------------------------------------------------------------------------
# execution


class _PhysicalLog(EventLog):
    """Event log that reports measured anyons by physical index."""

    def __init__(self, sink, phys):
        super().__init__()
        self.sink, self.phys = sink, phys

    def add(self, model, target, method, outcome, probability):
        super().add(model, target, method, outcome, probability)
        event = self.pop()
        event["target"] = [self.phys(p) for p in event["target"]]
        self.sink.append({"event": "measure", **event})


@dataclass
class RunLog:
    events: list = field(default_factory=list)
    records: list = field(default_factory=list)
    readout: dict = field(default_factory=dict)
    pair_charges: dict = field(default_factory=dict)
    computed_state: AnyonicDensityMatrix | None = field(default=None, repr=False)  # just before readout

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True, ensure_ascii=False) + "\n" for e in self.events)


def _target_from(ins, sim) -> MeasurementTarget:
    return MeasurementTarget(tuple(sim(x) for x in ins["target"]), tuple(ins["configuration"]), ins["exterior"])


def _pair_charge(pair: AnyonicDensityMatrix, tol=1e-9) -> int:
    weights = pair.overall_probabilities()
    total = sum(weights.values())
    for f, w in weights.items():
        if w > (1 - tol) * total:
            return f
    raise RuntimeError("released resource pair is not in a definite charge")


def _probe_from(model, spec) -> ProbeSpec | None:
    if spec is None:
        return None
    return ProbeSpec({model.charge(name): p for name, p in spec.items()})


def execute(
    schedule: MeasurementSchedule,
    rho: AnyonicDensityMatrix,
    rng: np.random.Generator,
    cache=None,
    cap: int = MAX_ATTEMPTS,
    perform_readout: bool = True,
) -> tuple[AnyonicDensityMatrix, RunLog]:
    """Run ``schedule`` on the computational state ``rho``; every resource pair starts in the vacuum."""
    model = rho.model
    layout = schedule.layout
    if model.name != schedule.model:
        raise ValueError(f"schedule targets {schedule.model}, state belongs to {model.name}")
    a = model.charge(schedule.charge)
    if rho.leaves != (a,) * layout.n_computational:
        raise ValueError(f"state must hold {layout.n_computational} anyons of charge {schedule.charge}")
    probe = _probe_from(model, schedule.probe)
    run = RunLog()
    charges = {j: 0 for j in range(len(layout.pairs))}
    active = None  # (frame index, generator, resource charge, full state)

    def release():
        nonlocal active, rho
        if active is None:
            return
        _, i, _, full = active
        state, pair = release_resource(full, i + 1)
        j = i // 2
        charges[j] = _pair_charge(pair)
        rho = state
        run.events.append({"event": "release", "pair": list(layout.pairs[j]), "charge": model.labels[charges[j]]})
        active = None

    for ins in schedule.instructions:
        op = ins["op"]
        if op == "REPEAT_UNTIL_VACUUM":
            frame = schedule.frames[ins["frame"]]
            i = int(frame["generator"])
            if active is None or active[0] != ins["frame"]:
                release()
                pair = resource_pair(model, a, charges[i // 2])
                active = (ins["frame"], i, charges[i // 2], insert_resource(rho, pair, i + 1))
                run.events.append(
                    {"event": "frame", "generator": i, "chirality": frame["chirality"], "resource": frame["resource"]}
                )
            frame_index, i, resource, full = active
            sim = _from_physical(layout, i)
            new = _target_from(ins["block"][0], sim)
            check = _target_from(ins["block"][-1], sim)
            old = _target_from(ins["retry"][0], sim)
            sink = _PhysicalLog(run.events, _to_physical(layout, i))
            full, rec, resource = run_braid_step(
                full, BraidStep(new, old, check), schedule.method, probe, rng, sink, resource, cache, cap
            )
            active = (frame_index, i, resource, full)
            run.records.append(rec)
            run.events.append({"event": "forced", **rec.as_dict(model)})
        elif op == "MEASURE":
            raise ValueError("bare MEASURE instructions are only valid inside REPEAT_UNTIL_VACUUM blocks")
        elif op == "READOUT":
            release()
            if run.computed_state is None:
                run.computed_state = rho
            if perform_readout:
                bit, rho = readout(rho, int(ins["qubit"]), rng, schedule)
                run.readout[int(ins["qubit"])] = bit
                run.events.append({"event": "readout", "qubit": int(ins["qubit"]), "bit": bit})
        else:
            raise ValueError(f"unknown instruction {op!r}")
    release()
    if run.computed_state is None:
        run.computed_state = rho
    run.pair_charges = {j: model.labels[c] for j, c in charges.items()}
    attempts = [r.attempts for r in run.records]
    run.events.append(
        {
            "event": "summary",
            "forced_measurements": len(attempts),
            "attempts": attempts,
            "readout": [run.readout[q] for q in sorted(run.readout)],
        }
    )
    return rho, run


def readout(rho: AnyonicDensityMatrix, qubit: int, rng, schedule: MeasurementSchedule | None = None, encoding=None):
    """Projectively measure the first pair of ``qubit``; returns (bit, collapsed state)."""
    n_qubits = rho.n // ANYONS_PER_QUBIT
    if not 0 <= qubit < n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {n_qubits} qubits")
    if encoding is None:
        charge = schedule.charge if schedule is not None else None
        encoding = qubit_encoding(rho.model, charge)
    first = ANYONS_PER_QUBIT * qubit + 1
    res = project(rho, (first, first + 1), rng)
    if res.outcome not in encoding.channels:
        raise RuntimeError(f"qubit {qubit} left the computational space: pair charge {rho.model.labels[res.outcome]}")
    return encoding.channels.index(res.outcome), res.state


def direct_circuit(rho: AnyonicDensityMatrix, word) -> AnyonicDensityMatrix:
    """Reference: apply each generator as an exchange of adjacent computational anyons."""
    for i, chir in parse_word(word):
        rho = apply_braid(rho, i, chir)
    return rho


def model_from_schedule(schedule: MeasurementSchedule) -> AnyonModel:
    return build_model(schedule.model)


__all__ = [
    "ArityError",
    "ArrayLayout",
    "CompileError",
    "MeasurementSchedule",
    "QubitEncoding",
    "RunLog",
    "compile_word",
    "direct_circuit",
    "encode_qubits",
    "execute",
    "parse_word",
    "qubit_encoding",
    "readout",
]
