"""Algebraic data of multiplicity-free anyon models.

Built-in theories are Ising, Fibonacci (and its complex conjugate) and
SU(2)_k for 1 <= k <= 16.  Charges are small integers with 0 the vacuum.

F-symbols follow the splitting-tree convention

    |(a b)_e c ; d>  =  sum_f [F^{abc}_d]_{ef} |a (b c)_f ; d>

and R-symbols act as  R_{ab} |a, b; c> = R^{ab}_c |b, a; c>  for a
counterclockwise exchange.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

SU2K_MAX_LEVEL = 16
DEFAULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AnyonModel:
    """Immutable tables of one anyon theory.

    ``fsym`` maps ``(a, b, c, d)`` to an ``n x n`` matrix indexed by
    ``(e, f)``; absent keys and inadmissible entries are zero.  Derived
    quantities (``qdim``, ``twist``, ``smat``, ``mono``) hold the closed-form
    table values; :func:`validate` recomputes them from N, F and R.
    """

    name: str
    labels: tuple[str, ...]
    nsym: np.ndarray
    fsym: dict
    rsym: np.ndarray
    dual: tuple[int, ...]
    qdim: np.ndarray
    twist: np.ndarray
    smat: np.ndarray
    mono: np.ndarray
    _fusion_cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def charges(self) -> range:
        return range(self.size)

    @property
    def total_qdim(self) -> float:
        return float(np.sqrt(np.sum(self.qdim**2)))

    def label(self, a: int) -> str:
        return self.labels[a]

    def charge(self, name: str | int) -> int:
        """Look up a charge by index or display name (``"1/2"`` style for SU(2)_k)."""
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < self.size:
                raise ValueError(f"charge index {name} out of range for {self.name}")
            return int(name)
        aliases = {"0": "I", "1": "I", "vac": "I", "sigma": "σ", "psi": "ψ", "eps": "ε", "epsilon": "ε", "tau": "ε"}
        key = name.strip()
        if key in self.labels:
            return self.labels.index(key)
        if key in aliases and aliases[key] in self.labels:
            return self.labels.index(aliases[key])
        if key.startswith("j="):
            key = key[2:]
        if self.name.startswith("su2k"):
            from fractions import Fraction

            try:
                twice = Fraction(key) * 2
            except (ValueError, ZeroDivisionError):
                twice = None
            if twice is not None and twice.denominator == 1 and 0 <= twice < self.size:
                return int(twice)
        raise ValueError(f"unknown charge {name!r} for model {self.name}")

    def is_abelian(self, a: int) -> bool:
        return abs(self.qdim[a] - 1.0) < 1e-12

    def fuse(self, a: int, b: int) -> list[int]:
        key = (a, b)
        out = self._fusion_cache.get(key)
        if out is None:
            out = [c for c in self.charges if self.nsym[a, b, c]]
            self._fusion_cache[key] = out
        return out

    def f_symbol(self, a, b, c, d, e, f) -> complex:
        block = self.fsym.get((a, b, c, d))
        if block is None:
            return 0j
        return complex(block[e, f])

    def f_bend(self, a, b, c, d, e, f) -> complex:
        """Bent-leg F-symbol ``[F^{ab}_{cd}]_{ef}`` from the ordinary table."""
        val = self.f_symbol(c, e, b, f, a, d)
        if val == 0:
            return 0j
        qd = self.qdim
        return math.sqrt(qd[e] * qd[f] / (qd[a] * qd[d])) * val.conjugate()

    def r_symbol(self, a, b, c) -> complex:
        return complex(self.rsym[a, b, c])

    def monodromy(self, a: int, b: int) -> complex:
        return complex(self.mono[a, b])

    def monodromy_probe(self, a: int, probe: ProbeSpec) -> complex:
        return complex(sum(p * self.mono[a, b] for b, p in probe.items()))


class ProbeSpec(dict):
    """Probe charge distribution ``{charge: probability}``."""

    def __init__(self, dist):
        super().__init__({int(b): float(p) for b, p in dict(dist).items() if p != 0})
        if any(p < 0 for p in self.values()):
            raise ValueError("probe probabilities must be non-negative")
        if abs(sum(self.values()) - 1.0) > 1e-12:
            raise ValueError("probe probabilities must sum to 1")

    @classmethod
    def pure(cls, b: int) -> ProbeSpec:
        return cls({b: 1.0})


# --------------------------------------------------------------------------
# construction helpers


def _fusion_table(n, rule):
    nsym = np.zeros((n, n, n), dtype=np.int8)
    for a, b in product(range(n), repeat=2):
        for c in rule(a, b):
            nsym[a, b, c] = 1
    return nsym


def _admissible_f(nsym, a, b, c, d):
    n = nsym.shape[0]
    es = [e for e in range(n) if nsym[a, b, e] and nsym[e, c, d]]
    fs = [f for f in range(n) if nsym[b, c, f] and nsym[a, f, d]]
    return es, fs


def _fill_f(nsym, entry):
    """Populate F blocks by calling ``entry(a, b, c, d, e, f)`` on admissible labels."""
    n = nsym.shape[0]
    fsym = {}
    for a, b, c, d in product(range(n), repeat=4):
        es, fs = _admissible_f(nsym, a, b, c, d)
        if not es:
            continue
        block = np.zeros((n, n), dtype=complex)
        for e in es:
            for f in fs:
                block[e, f] = entry(a, b, c, d, e, f)
        fsym[(a, b, c, d)] = block
    return fsym


def _fill_r(nsym, entry):
    n = nsym.shape[0]
    rsym = np.zeros((n, n, n), dtype=complex)
    for a, b, c in product(range(n), repeat=3):
        if nsym[a, b, c]:
            rsym[a, b, c] = entry(a, b, c)
    return rsym


def _mono_from_s(smat):
    s0 = smat[0]
    return smat * smat[0, 0] / np.outer(s0, s0)


# --------------------------------------------------------------------------
# Ising

_I, _SIG, _PSI = 0, 1, 2


def _ising() -> AnyonModel:
    def rule(a, b):
        if a == _I:
            return [b]
        if b == _I:
            return [a]
        if a == _SIG and b == _SIG:
            return [_I, _PSI]
        if a == _PSI and b == _PSI:
            return [_I]
        return [_SIG]

    nsym = _fusion_table(3, rule)
    h = 1 / math.sqrt(2)
    fmat = {(_I, _I): h, (_I, _PSI): h, (_PSI, _I): h, (_PSI, _PSI): -h}
    minus_one = {(_SIG, _PSI, _SIG, _PSI), (_PSI, _SIG, _PSI, _SIG)}

    def f_entry(a, b, c, d, e, f):
        if (a, b, c, d) == (_SIG, _SIG, _SIG, _SIG):
            return fmat[(e, f)]
        if (a, b, c, d) in minus_one:
            return -1.0
        return 1.0

    r_table = {
        (_SIG, _SIG, _I): cmath.exp(-1j * math.pi / 8),
        (_SIG, _SIG, _PSI): cmath.exp(3j * math.pi / 8),
        (_SIG, _PSI, _SIG): -1j,
        (_PSI, _SIG, _SIG): -1j,
        (_PSI, _PSI, _I): -1.0,
    }
    rsym = _fill_r(nsym, lambda a, b, c: r_table.get((a, b, c), 1.0))
    r2 = math.sqrt(2)
    smat = 0.5 * np.array([[1, r2, 1], [r2, 0, -r2], [1, -r2, 1]], dtype=complex)
    mono = np.array([[1, 1, 1], [1, 0, -1], [1, -1, 1]], dtype=complex)
    return AnyonModel(
        name="ising",
        labels=("I", "σ", "ψ"),
        nsym=nsym,
        fsym=_fill_f(nsym, f_entry),
        rsym=rsym,
        dual=(0, 1, 2),
        qdim=np.array([1.0, r2, 1.0]),
        twist=np.array([1, cmath.exp(1j * math.pi / 8), -1], dtype=complex),
        smat=smat,
        mono=mono,
    )


# --------------------------------------------------------------------------
# Fibonacci

PHI = (1 + math.sqrt(5)) / 2


def _fib(conjugate: bool = False) -> AnyonModel:
    def rule(a, b):
        if a == 0:
            return [b]
        if b == 0:
            return [a]
        return [0, 1]

    nsym = _fusion_table(2, rule)
    inv, rinv = 1 / PHI, 1 / math.sqrt(PHI)
    fmat = np.array([[inv, rinv], [rinv, -inv]])

    def f_entry(a, b, c, d, e, f):
        if (a, b, c, d) == (1, 1, 1, 1):
            return fmat[e, f]
        return 1.0

    r_table = {(1, 1, 0): cmath.exp(-4j * math.pi / 5), (1, 1, 1): cmath.exp(3j * math.pi / 5)}
    rsym = _fill_r(nsym, lambda a, b, c: r_table.get((a, b, c), 1.0))
    twist = np.array([1, cmath.exp(4j * math.pi / 5)], dtype=complex)
    smat = np.array([[1, PHI], [PHI, -1]], dtype=complex) / math.sqrt(PHI + 2)
    mono = np.array([[1, 1], [1, -(PHI**-2)]], dtype=complex)
    if conjugate:
        rsym, twist, smat = rsym.conj(), twist.conj(), smat.conj()
    return AnyonModel(
        name="fib_conj" if conjugate else "fib",
        labels=("I", "ε"),
        nsym=nsym,
        fsym=_fill_f(nsym, f_entry),
        rsym=rsym,
        dual=(0, 1),
        qdim=np.array([1.0, PHI]),
        twist=twist,
        smat=smat,
        mono=mono,
    )


# --------------------------------------------------------------------------
# SU(2)_k, spins stored doubled: charge index i <-> j = i/2


def q_number(n: int, k: int) -> float:
    """``[n]_q`` at ``q = exp(2 pi i/(k+2))``, i.e. ``sin(n pi/(k+2))/sin(pi/(k+2))``."""
    x = math.pi / (k + 2)
    return math.sin(n * x) / math.sin(x)


@functools.lru_cache(maxsize=None)
def _q_factorial(n: int, k: int) -> float:
    out = 1.0
    for m in range(2, n + 1):
        out *= q_number(m, k)
    return out


def _twice(j) -> int:
    t = round(2 * j)
    if abs(2 * j - t) > 1e-9 or t < 0:
        raise ValueError(f"spin {j} is not a non-negative half-integer")
    return t


def _triangle_ok(a2, b2, c2, k) -> bool:
    return (
        (a2 + b2 + c2) % 2 == 0
        and abs(a2 - b2) <= c2 <= a2 + b2
        and a2 + b2 + c2 <= 2 * k
    )


def _delta(a2, b2, c2, k) -> float:
    num = (
        _q_factorial((-a2 + b2 + c2) // 2, k)
        * _q_factorial((a2 - b2 + c2) // 2, k)
        * _q_factorial((a2 + b2 - c2) // 2, k)
    )
    return math.sqrt(num / _q_factorial((a2 + b2 + c2) // 2 + 1, k))


def _q6j_doubled(j1, j2, j12, j3, j, j23, k) -> float:
    triads = ((j1, j2, j12), (j12, j3, j), (j2, j3, j23), (j1, j23, j))
    if not all(_triangle_ok(*t, k) for t in triads):
        return 0.0
    pre = 1.0
    for t in triads:
        pre *= _delta(*t, k)
    lows = [sum(t) // 2 for t in triads]
    highs = [(j1 + j2 + j3 + j) // 2, (j1 + j12 + j3 + j23) // 2, (j2 + j12 + j + j23) // 2]
    total = 0.0
    for z in range(max(lows), min(highs) + 1):
        den = 1.0
        for low in lows:
            den *= _q_factorial(z - low, k)
        for high in highs:
            den *= _q_factorial(high - z, k)
        total += (-1) ** z * _q_factorial(z + 1, k) / den
    return pre * total


def q_6j(j1, j2, j12, j3, j, j23, k) -> float:
    """q-deformed 6j-symbol ``{j1 j2 j12; j3 j j23}_q`` with spins as half-integers."""
    return _q6j_doubled(*(_twice(x) for x in (j1, j2, j12, j3, j, j23)), k)


def _su2k(k: int) -> AnyonModel:
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= SU2K_MAX_LEVEL:
        raise ValueError(f"su2k level must be an integer in [1, {SU2K_MAX_LEVEL}], got {k!r}")
    k = int(k)
    n = k + 1

    def rule(a, b):
        return list(range(abs(a - b), min(a + b, 2 * k - a - b) + 1, 2))

    nsym = _fusion_table(n, rule)

    def f_entry(a, b, c, d, e, f):
        sign = -1 if ((a + b + c + d) // 2) % 2 else 1
        return sign * math.sqrt(q_number(e + 1, k) * q_number(f + 1, k)) * _q6j_doubled(a, b, e, c, d, f, k)

    q_half = cmath.exp(1j * math.pi / (k + 2))

    def r_entry(a, b, c):
        sign = -1 if ((c - a - b) // 2) % 2 else 1
        # exponent (j(j+1) - j1(j1+1) - j2(j2+1))/2 in doubled spins
        cas = c * (c + 2) - a * (a + 2) - b * (b + 2)
        return sign * q_half ** (cas / 4)

    x = math.pi / (k + 2)
    idx = np.arange(n)
    qdim = np.sin((idx + 1) * x) / math.sin(x)
    twist = np.exp(1j * math.pi * idx * (idx + 2) / (2 * (k + 2)))
    outer = np.outer(idx + 1, idx + 1)
    smat = math.sqrt(2 / (k + 2)) * np.sin(outer * x).astype(complex)
    mono = (np.sin(outer * x) * math.sin(x) / np.outer(np.sin((idx + 1) * x), np.sin((idx + 1) * x))).astype(complex)

    def label(i):
        return str(i // 2) if i % 2 == 0 else f"{i}/2"

    return AnyonModel(
        name=f"su2k({k})",
        labels=tuple(label(i) for i in idx),
        nsym=nsym,
        fsym=_fill_f(nsym, f_entry),
        rsym=_fill_r(nsym, r_entry),
        dual=tuple(range(n)),
        qdim=qdim,
        twist=twist,
        smat=smat,
        mono=mono,
    )


@functools.lru_cache(maxsize=None)
def _build_cached(name: str, k) -> AnyonModel:
    if name == "ising":
        model = _ising()
    elif name == "fib":
        model = _fib()
    elif name == "fib_conj":
        model = _fib(conjugate=True)
    elif name == "su2k":
        if k is None:
            raise ValueError("su2k requires a level k")
        model = _su2k(k)
    else:
        raise ValueError(f"unknown model {name!r}; expected ising, fib, fib_conj or su2k")
    report = validate(model, DEFAULT_TOL)
    if not report.passed:
        raise ValueError(f"model {model.name} failed validation:\n{report.format()}")
    return model


def build_model(name: str, k: int | None = None) -> AnyonModel:
    """Build and validate a model.  ``name`` may also be given as ``"su2k(3)"``."""
    name = name.strip().lower()
    if name.startswith("su2k(") and name.endswith(")"):
        k = int(name[5:-1])
        name = "su2k"
    if name != "su2k":
        k = None
    return _build_cached(name, k)


def fuse(model: AnyonModel, a: int, b: int) -> list[int]:
    return model.fuse(a, b)


def f_symbol(model, a, b, c, d, e, f) -> complex:
    return model.f_symbol(a, b, c, d, e, f)


def f_bend(model, a, b, c, d, e, f) -> complex:
    return model.f_bend(a, b, c, d, e, f)


def twist(model, a) -> complex:
    return complex(model.twist[a])


def s_matrix(model) -> np.ndarray:
    return model.smat.copy()


def monodromy(model, a, b) -> complex:
    return model.monodromy(a, b)


def monodromy_probe(model, a, probe: ProbeSpec) -> complex:
    return model.monodromy_probe(a, probe)


# --------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    model: str
    tol: float
    checks: list[tuple[str, float]]

    @property
    def passed(self) -> bool:
        return all(dev < self.tol for _, dev in self.checks)

    def deviation(self, name: str) -> float:
        return dict(self.checks)[name]

    def format(self) -> str:
        lines = [f"model {self.model} (tol {self.tol:.1e})"]
        for name, dev in self.checks:
            status = "ok" if dev < self.tol else "FAIL"
            lines.append(f"  {name:<28} max dev {dev:.3e}  {status}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _f_blocks(model):
    """Yield (key, admissible e list, admissible f list, square submatrix)."""
    for key, block in model.fsym.items():
        es, fs = _admissible_f(model.nsym, *key)
        yield key, es, fs, block[np.ix_(es, fs)]


def _bent_blocks(model):
    n = model.size
    for a, b, c, d in product(range(n), repeat=4):
        es = [e for e in range(n) if model.nsym[c, e, a] and model.nsym[e, b, d]]
        fs = [f for f in range(n) if model.nsym[a, b, f] and model.nsym[c, d, f]]
        if not es or not fs:
            continue
        mat = np.array([[model.f_bend(a, b, c, d, e, f) for f in fs] for e in es])
        yield (a, b, c, d), es, fs, mat


def validate(model: AnyonModel, tol: float = DEFAULT_TOL) -> ValidationReport:
    n, nsym, qd = model.size, model.nsym.astype(float), model.qdim
    checks = []

    assoc = np.einsum("abe,ecd->abcd", nsym, nsym) - np.einsum("bcf,afd->abcd", nsym, nsym)
    comm = nsym - nsym.transpose(1, 0, 2)
    vac = np.max(np.abs(nsym[:, 0, :] - np.eye(n)))
    dual_ok = max(abs(nsym[a, b, 0] - (b == model.dual[a])) for a in range(n) for b in range(n))
    checks.append(("fusion algebra", float(max(np.max(np.abs(assoc)), np.max(np.abs(comm)), vac, dual_ok))))

    perron = max(abs(max(np.linalg.eigvals(nsym[a]).real) - qd[a]) for a in range(n))
    checks.append(("qdim = Perron eigenvalue", float(perron)))
    checks.append(("dimension sum", float(max(abs(sum(nsym[a, model.dual[a], c] * qd[c] for c in range(n)) - qd[a] ** 2) for a in range(n)))))

    unit = 0.0
    for _, es, fs, mat in _f_blocks(model):
        if len(es) != len(fs):
            unit = math.inf
            continue
        unit = max(unit, np.max(np.abs(mat @ mat.conj().T - np.eye(len(es)))))
    checks.append(("F unitarity", float(unit)))

    bent_unit = 0.0
    for _, es, fs, mat in _bent_blocks(model):
        if len(es) != len(fs):
            bent_unit = math.inf
            continue
        bent_unit = max(bent_unit, np.max(np.abs(mat @ mat.conj().T - np.eye(len(es)))))
    checks.append(("bent F unitarity", float(bent_unit)))

    idf = 0.0
    for a, b in product(range(n), repeat=2):
        for c in model.fuse(a, b):
            idf = max(idf, abs(model.f_bend(a, b, a, b, 0, c) - math.sqrt(qd[c] / (qd[a] * qd[b]))))
    checks.append(("vacuum-line F", float(idf)))

    twist_dev = 0.0
    for a in range(n):
        theta = sum(qd[c] / qd[a] * model.rsym[a, a, c] for c in model.fuse(a, model.dual[a]) if nsym[a, a, c])
        twist_dev = max(twist_dev, abs(theta - model.twist[a]), abs(abs(model.twist[a]) - 1))
    twist_dev = max(twist_dev, abs(model.twist[0] - 1))
    checks.append(("twist from R", float(twist_dev)))

    big_d = model.total_qdim
    s_calc = np.zeros((n, n), dtype=complex)
    for a, b in product(range(n), repeat=2):
        s_calc[a, b] = sum(
            nsym[a, b, c] * model.twist[c] / (model.twist[a] * model.twist[b]) * qd[c] for c in range(n)
        ) / big_d
    # the formula gives S_{a bbar}; all built-in charges are self-dual
    s_calc = s_calc[:, list(model.dual)]
    checks.append(("S from N, twist, d", float(np.max(np.abs(s_calc - model.smat)))))
    checks.append(("M from S", float(np.max(np.abs(_mono_from_s(model.smat) - model.mono)))))

    pent = 0.0
    for a, e, f, x in product(range(n), repeat=4):
        fb, xb = model.dual[f], model.dual[x]
        lhs = abs(model.f_symbol(e, fb, a, a, xb, a))
        rhs = abs(model.f_symbol(x, e, a, a, f, a))
        if lhs == 0 and rhs == 0:
            continue
        pent = max(pent, abs(lhs - math.sqrt(qd[x] / qd[f]) * rhs))
    checks.append(("pentagon modulus identity", float(pent)))

    return ValidationReport(model.name, tol, checks)


# --------------------------------------------------------------------------
# text export


def _fmt(z: complex) -> str:
    z = complex(z)
    re = 0.0 if abs(z.real) < 5e-13 else z.real
    im = 0.0 if abs(z.imag) < 5e-13 else z.imag
    return f"{re:.12g} {im:.12g}"


def table_report(model: AnyonModel) -> str:
    """Canonical text listing of N, F, R, d, theta, S and M (12 significant digits)."""
    lab = model.labels
    n = model.size
    lines = [f"# model {model.name}", f"# charges {' '.join(lab)}"]
    for a, b, c in product(range(n), repeat=3):
        if model.nsym[a, b, c]:
            lines.append(f"N {lab[a]} {lab[b]} {lab[c]} 1")
    for (a, b, c, d), block in sorted(model.fsym.items()):
        es, fs = _admissible_f(model.nsym, a, b, c, d)
        for e in es:
            for f in fs:
                lines.append(f"F {lab[a]} {lab[b]} {lab[c]} {lab[d]} {lab[e]} {lab[f]} {_fmt(block[e, f])}")
    for a, b, c in product(range(n), repeat=3):
        if model.nsym[a, b, c]:
            lines.append(f"R {lab[a]} {lab[b]} {lab[c]} {_fmt(model.rsym[a, b, c])}")
    for a in range(n):
        lines.append(f"d {lab[a]} {model.qdim[a]:.12g}")
    lines.append(f"D {model.total_qdim:.12g}")
    for a in range(n):
        lines.append(f"theta {lab[a]} {_fmt(model.twist[a])}")
    for a, b in product(range(n), repeat=2):
        lines.append(f"S {lab[a]} {lab[b]} {_fmt(model.smat[a, b])}")
    for a, b in product(range(n), repeat=2):
        lines.append(f"M {lab[a]} {lab[b]} {_fmt(model.mono[a, b])}")
    return "\n".join(lines) + "\n"
