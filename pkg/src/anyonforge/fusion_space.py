"""Fusion-tree bases and anyonic density matrices.

The canonical basis for leaves ``(a_1, ..., a_n)`` is the left-to-right
chain ``(((a_1 a_2)_{g_2} a_3)_{g_3} ...)_f``.  A chain is stored as the
tuple ``(g_2, ..., g_{n-1}, f)``; a single leaf has the empty chain.

Density matrices are dense over the union of all overall charges f and are
stored with the ``1/d_f`` weight folded in, so the quantum trace is the
ordinary trace.  Every operator that conserves total charge is therefore a
block-diagonal unitary and acts by plain conjugation.

Positions in the public API are 1-based like the anyon numbering used in
the protocols; helpers prefixed with ``_`` take 0-based positions.
"""

from __future__ import annotations

import functools
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .anyon_model import AnyonModel

CCW, CW = "ccw", "cw"


@dataclass(frozen=True)
class FusionChain:
    leaf_charges: tuple[int, ...]
    intermediates: tuple[int, ...]
    overall: int

    @property
    def labels(self) -> tuple[int, ...]:
        return self.intermediates + (self.overall,) if len(self.leaf_charges) > 1 else ()


def _fusion_chains(model: AnyonModel, leaves: tuple[int, ...]) -> list[tuple[int, ...]]:
    if len(leaves) == 1:
        return [()]
    partial = [((), leaves[0])]
    for a in leaves[1:]:
        partial = [(lab + (g,), g) for lab, cur in partial for g in model.fuse(cur, a)]
    return sorted(lab for lab, _ in partial)


class FusionBasis:
    """Enumerated canonical chains for a fixed leaf list (all overall charges)."""

    def __init__(self, model: AnyonModel, leaves: tuple[int, ...]):
        if not leaves:
            raise ValueError("need at least one anyon")
        self.model = model
        self.leaves = tuple(leaves)
        self.chains = _fusion_chains(model, self.leaves)
        self.index = {c: i for i, c in enumerate(self.chains)}
        if len(self.leaves) == 1:
            self.overall = np.array([self.leaves[0]])
        else:
            self.overall = np.array([c[-1] for c in self.chains], dtype=int)
        self.blocks = {int(f): np.flatnonzero(self.overall == f) for f in sorted(set(self.overall.tolist()))}

    @property
    def dim(self) -> int:
        return len(self.chains)

    def chain(self, i: int) -> FusionChain:
        lab = self.chains[i]
        return FusionChain(self.leaves, lab[:-1], int(self.overall[i]))

    def describe(self, i: int) -> str:
        lab = self.model.labels
        return ",".join(lab[g] for g in self.chains[i]) if self.chains[i] else lab[self.leaves[0]]


@functools.lru_cache(maxsize=4096)
def fusion_basis(model: AnyonModel, leaves: tuple[int, ...]) -> FusionBasis:
    return FusionBasis(model, tuple(int(a) for a in leaves))


def enumerate_basis(model: AnyonModel, leaf_charges, overall: int | None = None) -> list[FusionChain]:
    basis = fusion_basis(model, tuple(leaf_charges))
    chains = [basis.chain(i) for i in range(basis.dim)]
    if overall is not None:
        chains = [c for c in chains if c.overall == overall]
    return chains


# --------------------------------------------------------------------------
# general trees: a shape is a nested tuple of leaf positions (binary nodes as
# 2-tuples); a labelled tree replaces each node by (left, right, charge).


def chain_shape(items) -> object:
    items = list(items)
    shape = items[0]
    for item in items[1:]:
        shape = (shape, item)
    return shape


def _charge(t, leaves):
    return leaves[t] if isinstance(t, int) else t[2]


def _labelings(model, leaves, shape):
    if isinstance(shape, int):
        return [shape]
    left, right = shape
    out = []
    for lt in _labelings(model, leaves, left):
        for rt in _labelings(model, leaves, right):
            for c in model.fuse(_charge(lt, leaves), _charge(rt, leaves)):
                out.append((lt, rt, c))
    return out


def _comb(model, leaves, t, memo):
    """Expand a labelled tree in left-combed chains: {chain tree: amplitude}."""
    if isinstance(t, int):
        return {t: 1.0}
    hit = memo.get(t)
    if hit is not None:
        return hit
    left, right, d = t
    out = defaultdict(complex)
    for left2, amp in _comb(model, leaves, left, memo).items():
        if isinstance(right, int):
            out[(left2, right, d)] += amp
            continue
        r1, r2, w = right
        a, b, c = _charge(left2, leaves), _charge(r1, leaves), _charge(r2, leaves)
        block = model.fsym.get((a, b, c, d))
        if block is None:
            continue
        # |a (b c)_w; d> = sum_e conj(F^{abc}_d)_{ew} |(a b)_e c; d>
        for e in model.fuse(a, b):
            coef = block[e, w].conjugate()
            if coef == 0:
                continue
            for t2, amp2 in _comb(model, leaves, ((left2, r1, e), r2, d), memo).items():
                out[t2] += amp * coef * amp2
    out = dict(out)
    memo[t] = out
    return out


def _chain_of(t) -> tuple[int, ...]:
    labels = []
    while not isinstance(t, int):
        labels.append(t[2])
        t = t[0]
    return tuple(reversed(labels))


def _chain_tree(labels, positions):
    t = positions[0]
    for lab, pos in zip(labels, positions[1:]):
        t = (t, pos, lab)
    return t


@functools.lru_cache(maxsize=4096)
def tree_basis(model: AnyonModel, leaves: tuple[int, ...], shape) -> tuple[np.ndarray, tuple]:
    """Unitary ``U[chain, tree]`` from a tree basis of ``shape`` to the canonical chain basis."""
    basis = fusion_basis(model, leaves)
    trees = tuple(_labelings(model, leaves, shape))
    mat = np.zeros((basis.dim, len(trees)), dtype=complex)
    memo: dict = {}
    for j, t in enumerate(trees):
        for ct, amp in _comb(model, leaves, t, memo).items():
            mat[basis.index[_chain_of(ct)], j] += amp
    return mat, trees


def _cherry_shape(n, p):
    items = list(range(p)) + [(p, p + 1)] + list(range(p + 2, n))
    return chain_shape(items)


def _block_shape(n, lo, hi):
    items = list(range(lo)) + [chain_shape(range(lo, hi + 1))] + list(range(hi + 1, n))
    return chain_shape(items)


@functools.lru_cache(maxsize=4096)
def braid_unitary(model: AnyonModel, leaves: tuple[int, ...], p: int, direction: str) -> np.ndarray:
    """Matrix of the exchange of 0-based leaves p, p+1: chain(leaves) -> chain(swapped)."""
    n = len(leaves)
    if not 0 <= p < n - 1:
        raise IndexError(f"braid position {p + 1} out of range for {n} anyons")
    swapped = list(leaves)
    swapped[p], swapped[p + 1] = swapped[p + 1], swapped[p]
    swapped = tuple(swapped)
    shape = _cherry_shape(n, p)
    u_old, trees_old = tree_basis(model, leaves, shape)
    u_new, trees_new = tree_basis(model, swapped, shape)
    where = {t: j for j, t in enumerate(trees_new)}
    a, b = leaves[p], leaves[p + 1]
    perm = np.zeros((len(trees_new), len(trees_old)), dtype=complex)
    for j, t in enumerate(trees_old):
        x = _node_label(t, p, p + 1)
        phase = model.rsym[a, b, x] if direction == CCW else np.conj(model.rsym[b, a, x])
        perm[where[t], j] = phase
    return u_new @ perm @ u_old.conj().T


@functools.lru_cache(maxsize=4096)
def block_projectors(model: AnyonModel, leaves: tuple[int, ...], lo: int, hi: int) -> dict:
    """Projectors onto the collective charge of contiguous 0-based leaves lo..hi."""
    n = len(leaves)
    if not 0 <= lo <= hi < n:
        raise IndexError("invalid block")
    basis = fusion_basis(model, leaves)
    if lo == 0:
        if hi == 0:
            return {leaves[0]: np.eye(basis.dim)}
        labels = np.array([c[hi - 1] for c in basis.chains])
        return {int(c): np.diag((labels == c).astype(float)) for c in sorted(set(labels.tolist()))}
    if lo == hi:
        return {leaves[lo]: np.eye(basis.dim)}
    u, trees = tree_basis(model, leaves, _block_shape(n, lo, hi))
    block_node = [_node_label(t, lo, hi) for t in trees]
    out = {}
    for c in sorted(set(block_node)):
        cols = [j for j, x in enumerate(block_node) if x == c]
        sub = u[:, cols]
        out[int(c)] = sub @ sub.conj().T
    return out


def _leaf_span(t):
    if isinstance(t, int):
        return t, t
    return _leaf_span(t[0])[0], _leaf_span(t[1])[1]


def _node_label(t, lo, hi):
    """Charge label of the subtree covering exactly leaves lo..hi."""
    if isinstance(t, int):
        return None
    if _leaf_span(t) == (lo, hi):
        return t[2]
    for child in t[:2]:
        span = _leaf_span(child)
        if span[0] <= lo and hi <= span[1]:
            return _node_label(child, lo, hi)
    return None


# --------------------------------------------------------------------------
# density matrices


@dataclass(frozen=True, eq=False)
class AnyonicDensityMatrix:
    model: AnyonModel
    leaves: tuple[int, ...]
    mat: np.ndarray

    @property
    def basis(self) -> FusionBasis:
        return fusion_basis(self.model, self.leaves)

    @property
    def n(self) -> int:
        return len(self.leaves)

    def with_matrix(self, mat, leaves=None) -> AnyonicDensityMatrix:
        return AnyonicDensityMatrix(self.model, self.leaves if leaves is None else tuple(leaves), mat)

    def conjugate_by(self, unitary, leaves=None) -> AnyonicDensityMatrix:
        return self.with_matrix(unitary @ self.mat @ unitary.conj().T, leaves)

    def overall_probabilities(self) -> dict[int, float]:
        diag = np.real(np.diag(self.mat))
        return {f: float(diag[idx].sum()) for f, idx in self.basis.blocks.items()}

    def block(self, f: int) -> np.ndarray:
        idx = self.basis.blocks.get(f, np.array([], dtype=int))
        return self.mat[np.ix_(idx, idx)]

    def check(self, tol: float = 1e-9) -> None:
        """Assert Hermiticity, unit trace, positivity and block structure."""
        mat = self.mat
        if np.max(np.abs(mat - mat.conj().T), initial=0) > tol:
            raise AssertionError("density matrix not Hermitian")
        if abs(qtrace(self) - 1) > tol:
            raise AssertionError(f"qtrace {qtrace(self)} != 1")
        overall = self.basis.overall
        if np.max(np.abs(mat[overall[:, None] != overall[None, :]]), initial=0) > tol:
            raise AssertionError("coherence between different overall charges")
        for f in self.basis.blocks:
            if np.min(np.linalg.eigvalsh(self.block(f)), initial=0) < -tol:
                raise AssertionError("density matrix not positive")

    def snapshot(self, tol: float = 1e-13) -> str:
        """Canonical text listing ``ket | bra | re | im`` of the non-negligible entries."""
        basis = self.basis
        rows = []
        for i, j in zip(*np.nonzero(np.abs(self.mat) > tol)):
            z = self.mat[i, j]
            rows.append((basis.describe(i), basis.describe(j), f"{z.real:.12g}", f"{z.imag:.12g}"))
        rows.sort()
        return "".join(" | ".join(r) + "\n" for r in rows)


def _empty(model, leaves):
    dim = fusion_basis(model, leaves).dim
    return np.zeros((dim, dim), dtype=complex)


def pure_state(model: AnyonModel, leaves, amplitudes: dict) -> AnyonicDensityMatrix:
    """Normalized pure state from ``{chain labels: amplitude}`` with one overall charge."""
    leaves = tuple(int(a) for a in leaves)
    basis = fusion_basis(model, leaves)
    vec = np.zeros(basis.dim, dtype=complex)
    for chain, amp in amplitudes.items():
        chain = tuple(chain)
        if chain not in basis.index:
            raise ValueError(f"inadmissible chain {chain} for leaves {leaves}")
        vec[basis.index[chain]] = amp
    if len(set(basis.overall[np.abs(vec) > 0].tolist())) > 1:
        raise ValueError("a pure state needs a single overall charge")
    norm = np.vdot(vec, vec).real
    if norm == 0:
        raise ValueError("zero state")
    vec /= math.sqrt(norm)
    return AnyonicDensityMatrix(model, leaves, np.outer(vec, vec.conj()))


def resource_pair(model: AnyonModel, a: int, e: int = 0) -> AnyonicDensityMatrix:
    ab = model.dual[a]
    if not model.nsym[a, ab, e]:
        raise ValueError(f"{model.labels[e]} is not a fusion channel of {model.labels[a]} x its dual")
    return pure_state(model, (a, ab), {(e,): 1.0})


def vacuum_pair(model: AnyonModel, a: int) -> AnyonicDensityMatrix:
    return resource_pair(model, a, 0)


def random_state(model: AnyonModel, leaves, rng: np.random.Generator, rank: int = 2, overall=None) -> AnyonicDensityMatrix:
    """Random mixed state: each overall-charge block gets a random rank-limited Gram matrix."""
    leaves = tuple(int(a) for a in leaves)
    basis = fusion_basis(model, leaves)
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    for f, idx in basis.blocks.items():
        if overall is not None and f not in np.atleast_1d(overall):
            continue
        g = rng.normal(size=(len(idx), rank)) + 1j * rng.normal(size=(len(idx), rank))
        mat[np.ix_(idx, idx)] = (g @ g.conj().T) * rng.uniform(0.2, 1.0)
    tr = np.trace(mat).real
    if tr == 0:
        raise ValueError("no admissible block for the requested overall charge")
    return AnyonicDensityMatrix(model, leaves, mat / tr)


def qtrace(rho: AnyonicDensityMatrix) -> float:
    return float(np.trace(rho.mat).real)


def trace_distance(rho1: AnyonicDensityMatrix, rho2: AnyonicDensityMatrix) -> float:
    if rho1.model is not rho2.model or rho1.leaves != rho2.leaves:
        raise ValueError("states live on different anyon configurations")
    diff = rho1.mat - rho2.mat
    diff = (diff + diff.conj().T) / 2
    total = 0.0
    for idx in rho1.basis.blocks.values():
        total += np.abs(np.linalg.eigvalsh(diff[np.ix_(idx, idx)])).sum()
    # any cross-block coherence would be an error; include it conservatively
    overall = rho1.basis.overall
    total += np.abs(diff[overall[:, None] != overall[None, :]]).sum()
    return 0.5 * float(total)


@functools.lru_cache(maxsize=1024)
def _tensor_map(model, leaves1, leaves2):
    n1, n2 = len(leaves1), len(leaves2)
    leaves = leaves1 + leaves2
    shape = (chain_shape(range(n1)), chain_shape(range(n1, n1 + n2)))
    u, trees = tree_basis(model, leaves, shape)
    b1, b2 = fusion_basis(model, leaves1), fusion_basis(model, leaves2)
    rows = []
    for t in trees:
        left, right, f = t
        i1 = b1.index[_chain_of(left)]
        i2 = b2.index[_chain_of(right) if not isinstance(right, int) else ()]
        rows.append((i1, i2, f))
    return leaves, u, rows


def tensor(rho1: AnyonicDensityMatrix, rho2: AnyonicDensityMatrix) -> AnyonicDensityMatrix:
    """Juxtapose two states (rho2 to the right) and recouple into the canonical chain."""
    if rho1.model is not rho2.model:
        raise ValueError("cannot tensor states of different models")
    model = rho1.model
    leaves, u, rows = _tensor_map(model, rho1.leaves, rho2.leaves)
    qd = model.qdim
    i1 = np.array([r[0] for r in rows])
    i2 = np.array([r[1] for r in rows])
    f = np.array([r[2] for r in rows])
    f1 = rho1.basis.overall[i1]
    f2 = rho2.basis.overall[i2]
    same = (f[:, None] == f[None, :])
    weight = np.where(same, qd[f][:, None] / (qd[f1][:, None] * qd[f2][:, None]), 0.0)
    inner = rho1.mat[np.ix_(i1, i1)] * rho2.mat[np.ix_(i2, i2)] * weight
    return AnyonicDensityMatrix(model, leaves, u @ inner @ u.conj().T)


def apply_braid(rho: AnyonicDensityMatrix, i: int, direction: str = CCW) -> AnyonicDensityMatrix:
    """Exchange anyons i and i+1 (1-based)."""
    if direction not in (CCW, CW):
        raise ValueError(f"direction must be ccw or cw, got {direction!r}")
    if not 1 <= i < rho.n:
        raise IndexError(f"braid index {i} out of range for {rho.n} anyons")
    u = braid_unitary(rho.model, rho.leaves, i - 1, direction)
    leaves = list(rho.leaves)
    leaves[i - 1], leaves[i] = leaves[i], leaves[i - 1]
    return rho.conjugate_by(u, leaves)


def apply_braid_word(rho: AnyonicDensityMatrix, word) -> AnyonicDensityMatrix:
    for i, direction in word:
        rho = apply_braid(rho, i, direction)
    return rho


def inverse_word(word):
    return [(i, CW if d == CCW else CCW) for i, d in reversed(word)]


@dataclass(frozen=True, eq=False)
class RecoupledState:
    """Coefficients of a state in the basis with anyons ``position, position+1`` fused first."""

    source: AnyonicDensityMatrix
    position: int
    trees: tuple
    mat: np.ndarray


def apply_f_basis_change(rho: AnyonicDensityMatrix, position: int) -> RecoupledState:
    """Recouple edge ``g_position``: fuse anyons ``position`` and ``position+1`` first (1-based, >= 2)."""
    if not 2 <= position < rho.n:
        raise IndexError(f"no internal recoupling site at position {position} for {rho.n} anyons")
    u, trees = tree_basis(rho.model, rho.leaves, _cherry_shape(rho.n, position - 1))
    return RecoupledState(rho, position, trees, u.conj().T @ rho.mat @ u)


def undo_f_basis_change(state: RecoupledState) -> AnyonicDensityMatrix:
    src = state.source
    u, _ = tree_basis(src.model, src.leaves, _cherry_shape(src.n, state.position - 1))
    return src.with_matrix(u @ state.mat @ u.conj().T)


# --------------------------------------------------------------------------
# leaf bookkeeping used by the protocols


def permute_leaves(rho: AnyonicDensityMatrix, word) -> AnyonicDensityMatrix:
    """Alias for applying a braid word given as ``[(i, direction), ...]``."""
    return apply_braid_word(rho, word)


def cluster_marginals(rho: AnyonicDensityMatrix, n_left: int):
    """Reduced states of anyons ``1..n_left`` and of the rest.

    Each cluster's partner is closed off by the quantum trace, which kills
    any coherence between different total charges of the kept cluster.
    """
    if not 1 <= n_left < rho.n:
        raise IndexError(f"cut {n_left} must split {rho.n} anyons into two non-empty groups")
    model = rho.model
    leaves1, leaves2 = rho.leaves[:n_left], rho.leaves[n_left:]
    _, u, rows = _tensor_map(model, leaves1, leaves2)
    inner = u.conj().T @ rho.mat @ u
    b1, b2 = fusion_basis(model, leaves1), fusion_basis(model, leaves2)
    i1 = np.array([r[0] for r in rows])
    i2 = np.array([r[1] for r in rows])
    f = np.array([r[2] for r in rows])
    same_f = f[:, None] == f[None, :]
    c1, c2 = b1.overall[i1], b2.overall[i2]
    # summing the product form over the partner chain and the overall
    # channel leaves each factor times the partner trace (sum_f N d_f = d_f1 d_f2)
    mask1 = same_f & (i2[:, None] == i2[None, :]) & (c1[:, None] == c1[None, :])
    mask2 = same_f & (i1[:, None] == i1[None, :]) & (c2[:, None] == c2[None, :])
    left = np.zeros((b1.dim, b1.dim), dtype=complex)
    right = np.zeros((b2.dim, b2.dim), dtype=complex)
    xs, ys = np.nonzero(mask1)
    np.add.at(left, (i1[xs], i1[ys]), inner[xs, ys])
    xs, ys = np.nonzero(mask2)
    np.add.at(right, (i2[xs], i2[ys]), inner[xs, ys])
    return AnyonicDensityMatrix(model, leaves1, left), AnyonicDensityMatrix(model, leaves2, right)


def split_product(rho: AnyonicDensityMatrix, n_left: int, tol: float = 1e-9):
    """Factor ``rho = left (x) right`` when the two groups carry no charge entanglement.

    Returns ``(left, right)`` or raises ``ValueError`` when the state is not a
    product across the cut.
    """
    rho1, rho2 = cluster_marginals(rho, n_left)
    rho1 = rho1.with_matrix(rho1.mat / np.trace(rho1.mat).real)
    rho2 = rho2.with_matrix(rho2.mat / np.trace(rho2.mat).real)
    if trace_distance(tensor(rho1, rho2), rho) > tol:
        raise ValueError("state is not a product across the requested cut")
    return rho1, rho2
