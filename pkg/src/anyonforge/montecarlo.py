"""Seeded Monte Carlo drivers for forced teleportation and braid verification.

Trial ``k`` of a run with seed ``s`` draws from ``default_rng([s, k])``, so
results do not depend on how trials are split across worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .anyon_model import AnyonModel, ProbeSpec, build_model
from .compiler import qubit_encoding
from .fusion_space import CCW, CW, apply_braid, random_state, resource_pair, tensor, trace_distance
from .protocols import (
    INTERFEROMETRIC,
    PROJECTIVE,
    QUBIT_REFERENCE,
    TransitionCache,
    attempt_statistics,
    forced_teleport_interferometric,
    forced_teleport_projective,
    insert_resource,
    measurement_braid,
    qubit_reference_forced_teleport,
    release_resource,
    resource_entanglement,
)

METHODS = (PROJECTIVE, INTERFEROMETRIC, QUBIT_REFERENCE)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial)])


def _chunks(trials: int, jobs: int):
    size = math.ceil(trials / jobs)
    return [(lo, min(lo + size, trials)) for lo in range(0, trials, size)]


def _fan_out(worker, args, trials, jobs):
    if jobs <= 1 or trials < 2:
        return worker(*args, 0, trials)
    out = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(worker, *args, lo, hi) for lo, hi in _chunks(trials, jobs)]
        for fut in futures:
            out.extend(fut.result())
    return out


# --------------------------------------------------------------------------
# forced teleportation


def _teleport_chunk(model_name, method, resource_charge, seed, lo, hi):
    if method == QUBIT_REFERENCE:
        qubit = np.array([math.cos(0.3), math.sin(0.3) * np.exp(0.7j)])
        return [qubit_reference_forced_teleport(qubit, trial_rng(seed, k))[1] for k in range(lo, hi)]
    model = build_model(model_name)
    a = qubit_encoding(model).charge
    # resource at (1, 2); the teleported anyon 3 is paired with anyon 4
    start = tensor(resource_pair(model, a, resource_charge), resource_pair(model, a, 0))
    probe = ProbeSpec.pure(a)
    cache = TransitionCache()
    records = []
    for k in range(lo, hi):
        rng = trial_rng(seed, k)
        if method == PROJECTIVE:
            _, rec = forced_teleport_projective(start, rng, cache=cache)
        else:
            _, rec = forced_teleport_interferometric(start, probe, rng, cache=cache)
        records.append(rec)
    return records


def forced_teleport_trials(model_name: str, method: str, trials: int, seed: int, jobs: int = 1, resource_charge=0):
    """Forced-measurement records of ``trials`` independent teleports."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if trials < 1:
        raise ValueError("need at least one trial")
    if method != INTERFEROMETRIC and resource_charge != 0:
        raise ValueError("only the interferometric protocol accepts a charged resource pair")
    return _fan_out(_teleport_chunk, (model_name, method, resource_charge, seed), trials, jobs)


def expected_success(model: AnyonModel | None, method: str) -> tuple[float, bool]:
    """Per-attempt success ``d_a^-2`` and whether it is exact.

    Projective attempts after an undo succeed with ``d_e / d_a^2`` where ``e``
    is the undo outcome, so ``d_a^-2`` is only a lower bound unless every
    channel of ``a`` with its dual is Abelian.
    """
    if method == QUBIT_REFERENCE:
        return 0.25, True
    a = qubit_encoding(model).charge
    exact = method == INTERFEROMETRIC or all(model.is_abelian(e) for e in model.fuse(a, model.dual[a]))
    return float(model.qdim[a] ** -2), exact


def geometric_chi2(counts, p: float, min_expected: float = 5.0):
    """Chi-square fit of attempt counts to a geometric law with success ``p`` estimated from the data.

    Bins run 1, 2, ... until the expected count drops below ``min_expected``;
    the remainder is pooled into one tail bin.  Returns (statistic, dof, p-value).
    """
    counts = np.asarray(counts, dtype=int)
    n = counts.size
    observed, expected = [], []
    k = 1
    while True:
        e = n * p * (1 - p) ** (k - 1)
        tail = n * (1 - p) ** k
        if e < min_expected or tail < min_expected:
            observed.append(int(np.sum(counts >= k)))
            expected.append(n * (1 - p) ** (k - 1))
            break
        observed.append(int(np.sum(counts == k)))
        expected.append(e)
        k += 1
    observed, expected = np.array(observed, float), np.array(expected, float)
    dof = len(observed) - 2
    if dof < 1:
        return 0.0, 0, 1.0
    stat = float(np.sum((observed - expected) ** 2 / expected))
    return stat, dof, float(stats.chi2.sf(stat, dof))


@dataclass
class TeleportReport:
    model: str
    method: str
    seed: int
    expected_success: float
    exact_law: bool
    statistics: dict
    z_score: float
    chi2: float
    chi2_dof: int
    chi2_p_value: float

    @property
    def passed(self) -> bool:
        if not self.exact_law:
            return self.z_score >= -3
        return abs(self.z_score) <= 3 and self.chi2_p_value >= 0.01

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "method": self.method,
            "seed": self.seed,
            "expected_success_per_attempt": self.expected_success,
            "law": "exact" if self.exact_law else "lower bound",
            **self.statistics,
            "z_score": self.z_score,
            "chi2": self.chi2,
            "chi2_dof": self.chi2_dof,
            "chi2_p_value": self.chi2_p_value,
            "pass": self.passed,
        }


def teleport_report(model_name: str, method: str, records, seed: int) -> TeleportReport:
    model = None if method == QUBIT_REFERENCE else build_model(model_name)
    p0, exact = expected_success(model, method)
    st = attempt_statistics(records)
    counts = np.array([r.attempts for r in records])
    # successes over attempts is a ratio estimator; its error follows from the binomial law
    total = counts.sum()
    sigma = math.sqrt(p0 * (1 - p0) / total) if total else float("inf")
    z = (st.success_per_attempt - p0) / sigma if sigma > 0 else 0.0
    chi2, dof, pval = geometric_chi2(counts, st.success_per_attempt)
    return TeleportReport(
        model=model.name if model is not None else "spin-1/2",
        method=method,
        seed=seed,
        expected_success=p0,
        exact_law=exact,
        statistics=st.as_dict(),
        z_score=float(z),
        chi2=chi2,
        chi2_dof=dof,
        chi2_p_value=pval,
    )


# --------------------------------------------------------------------------
# braid verification


def _braid_chunk(model_name, methods, seed, lo, hi):
    model = build_model(model_name)
    a = qubit_encoding(model).charge
    probe = ProbeSpec.pure(a)
    rows = []
    for k in range(lo, hi):
        rng = trial_rng(seed, k)
        state = random_state(model, (a, a, a, a), rng, overall=0)
        for method in methods:
            for chir in (CCW, CW):
                full = insert_resource(state, resource_pair(model, a, 0), 2)
                out, records = measurement_braid(full, chir, method, probe if method == INTERFEROMETRIC else None, rng)
                # the pair may end in another definite charge; only its link to the state matters
                reduced, _ = release_resource(out, 2)
                rows.append(
                    {
                        "trial": k,
                        "method": method,
                        "chirality": chir,
                        "trace_distance": trace_distance(reduced, apply_braid(state, 1, chir)),
                        "resource_entanglement": resource_entanglement(out, 2, probe),
                        "attempts": [r.attempts for r in records],
                    }
                )
    return rows


def braid_verify(model_name: str, trials: int, seed: int, methods=(PROJECTIVE, INTERFEROMETRIC), jobs: int = 1):
    """Compare measurement-generated exchanges with direct braiding on random states."""
    if trials < 1:
        raise ValueError("need at least one trial")
    methods = tuple(methods)
    if any(m not in (PROJECTIVE, INTERFEROMETRIC) for m in methods):
        raise ValueError("braid verification supports the projective and interferometric methods")
    return _fan_out(_braid_chunk, (model_name, methods, seed), trials, jobs)
