import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anyonforge.anyon_model import PHI, build_model
from anyonforge.compiler import encode_qubits
from anyonforge.fusion_space import (
    CCW,
    CW,
    AnyonicDensityMatrix,
    apply_braid,
    apply_braid_word,
    apply_f_basis_change,
    cluster_marginals,
    enumerate_basis,
    fusion_basis,
    inverse_word,
    pure_state,
    qtrace,
    random_state,
    resource_pair,
    split_product,
    tensor,
    trace_distance,
    undo_f_basis_change,
    vacuum_pair,
)

I, SIGMA, PSI = 0, 1, 2


def test_enumerate_basis_examples(ising, fib):
    chains = enumerate_basis(ising, (SIGMA,) * 4, overall=I)
    assert [(c.intermediates, c.overall) for c in chains] == [((I, SIGMA), I), ((PSI, SIGMA), I)]
    assert sorted(c.overall for c in enumerate_basis(fib, (1, 1))) == [0, 1]
    only = enumerate_basis(fib, (0, 0))
    assert len(only) == 1 and only[0].overall == 0


def test_enumerate_basis_ordering_is_lexicographic(fib):
    labels = [c.labels for c in enumerate_basis(fib, (1,) * 5)]
    assert labels == sorted(labels)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_ising_basis_count_matches_transfer_matrix(ising, m):
    chains = enumerate_basis(ising, (SIGMA,) * (2 * m), overall=I)
    n_sigma = ising.nsym[SIGMA].astype(int)
    # paths I -> ... -> I of length 2m through the sigma fusion graph
    assert len(chains) == np.linalg.matrix_power(n_sigma, 2 * m)[I, I] == 2 ** (m - 1)


def test_chains_are_admissible(fib):
    for c in enumerate_basis(fib, (1, 1, 1, 1)):
        g = (c.leaf_charges[0],) + c.intermediates + (c.overall,)
        for k, a in enumerate(c.leaf_charges[1:]):
            assert fib.nsym[g[k], a, g[k + 1]] == 1


def test_resource_pairs(ising, fib):
    for m in (ising, fib, build_model("su2k", k=3)):
        for a in m.charges:
            assert qtrace(vacuum_pair(m, a)) == pytest.approx(1)
            np.testing.assert_array_equal(resource_pair(m, a, 0).mat, vacuum_pair(m, a).mat)
    assert qtrace(resource_pair(ising, SIGMA, PSI)) == pytest.approx(1)
    assert qtrace(resource_pair(fib, 1, 1)) == pytest.approx(1)
    with pytest.raises(ValueError):
        resource_pair(ising, SIGMA, SIGMA)


def test_tensor_of_vacuum_pairs(ising):
    rho = tensor(vacuum_pair(ising, SIGMA), vacuum_pair(ising, SIGMA))
    assert rho.leaves == (SIGMA,) * 4
    assert rho.overall_probabilities()[I] == pytest.approx(1)
    rho.check()


def test_tensor_rejects_model_mismatch(ising, fib):
    with pytest.raises(ValueError):
        tensor(vacuum_pair(ising, SIGMA), vacuum_pair(fib, 1))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), name=st.sampled_from(["ising", "fib", "su2k(3)"]))
def test_tensor_qtrace_multiplicative(seed, name):
    m = build_model(name)
    rng = np.random.default_rng(seed)
    a = 1
    r1 = random_state(m, (a, a), rng)
    r2 = random_state(m, (a, a), rng)
    r1 = r1.with_matrix(r1.mat * 0.7)
    r2 = r2.with_matrix(r2.mat * 1.3)
    assert qtrace(tensor(r1, r2)) == pytest.approx(qtrace(r1) * qtrace(r2), abs=1e-9)


def test_tensor_then_split_recovers_factors(fib, rng):
    r1 = random_state(fib, (1, 1, 1), rng)
    r2 = random_state(fib, (1, 1), rng)
    left, right = split_product(tensor(r1, r2), 3)
    assert trace_distance(left, r1) < 1e-12
    assert trace_distance(right, r2) < 1e-12


def test_cluster_marginals_of_product(ising, rng):
    r1 = random_state(ising, (SIGMA,) * 2, rng)
    r2 = random_state(ising, (SIGMA,) * 3, rng)
    left, right = cluster_marginals(tensor(r1, r2), 2)
    assert trace_distance(left, r1) < 1e-12
    assert trace_distance(right, r2) < 1e-12


def _fib_chain_state(e):
    return pure_state(build_model("fib"), (1, 1, 1), {(e, 1): 1.0})


def test_f_basis_change_fib_by_hand(fib):
    f_mat = fib.fsym[(1, 1, 1, 1)]
    for e in (0, 1):
        moved = apply_f_basis_change(_fib_chain_state(e), 2)
        # trees are (leaf 0, (leaf 1, leaf 2, f), overall)
        amp = np.zeros(len(moved.trees), dtype=complex)
        for k, t in enumerate(moved.trees):
            amp[k] = f_mat[e, t[1][2]] if t[2] == 1 else 0
        np.testing.assert_allclose(moved.mat, np.outer(amp, amp.conj()), atol=1e-12)


def test_f_basis_change_ising_by_hand(ising):
    f_mat = ising.fsym[(SIGMA,) * 4]
    rho = pure_state(ising, (SIGMA,) * 3, {(I, SIGMA): 1.0})
    moved = apply_f_basis_change(rho, 2)
    amp = np.array([f_mat[I, t[1][2]] if t[2] == SIGMA else 0 for t in moved.trees])
    np.testing.assert_allclose(moved.mat, np.outer(amp, amp.conj()), atol=1e-12)


def test_f_basis_change_round_trip(fib, rng):
    rho = random_state(fib, (1,) * 5, rng)
    for pos in (2, 3, 4):
        moved = apply_f_basis_change(rho, pos)
        assert np.trace(moved.mat).real == pytest.approx(1, abs=1e-12)
        np.testing.assert_allclose(undo_f_basis_change(moved).mat, rho.mat, atol=1e-12)
    with pytest.raises(IndexError):
        apply_f_basis_change(rho, 1)


def test_braid_in_definite_channel_is_a_phase(ising):
    rho = vacuum_pair(ising, SIGMA)
    np.testing.assert_allclose(apply_braid(rho, 1, CCW).mat, rho.mat, atol=1e-15)


def test_braid_round_trip(fib, rng):
    rho = random_state(fib, (1,) * 4, rng)
    for i in (1, 2, 3):
        back = apply_braid(apply_braid(rho, i, CCW), i, CW)
        np.testing.assert_allclose(back.mat, rho.mat, atol=1e-12)
    word = [(1, CCW), (3, CW), (2, CCW), (2, CCW)]
    np.testing.assert_allclose(apply_braid_word(apply_braid_word(rho, word), inverse_word(word)).mat, rho.mat, atol=1e-12)


def test_braid_index_and_direction_errors(fib, rng):
    rho = random_state(fib, (1,) * 3, rng)
    with pytest.raises(IndexError):
        apply_braid(rho, 3)
    with pytest.raises(ValueError):
        apply_braid(rho, 1, "left")


def test_double_braid_flips_ising_channel_coherence(ising):
    plus = pure_state(ising, (SIGMA,) * 4, {(I, SIGMA, I): 1.0, (PSI, SIGMA, I): 1.0})
    twice = apply_braid(apply_braid(plus, 1, CCW), 1, CCW)
    # R_I^2 conj(R_psi^2) = -1 multiplies the I/psi coherence
    np.testing.assert_allclose(np.diag(twice.mat), np.diag(plus.mat), atol=1e-12)
    np.testing.assert_allclose(twice.mat[0, 1], -plus.mat[0, 1], atol=1e-12)


@pytest.mark.parametrize("name", ["ising", "fib", "su2k(3)"])
def test_moves_preserve_state_invariants(name, rng):
    m = build_model(name)
    rho = random_state(m, (1,) * 5, rng, rank=3)
    rho.check()
    for i in (1, 2, 3, 4):
        rho = apply_braid(rho, i, CCW if i % 2 else CW)
        rho.check()
    assert qtrace(rho) == pytest.approx(1, abs=1e-9)


def test_trace_distance_examples(ising, rng):
    rho = random_state(ising, (SIGMA,) * 4, rng)
    assert trace_distance(rho, rho) == 0
    zero, one = encode_qubits(ising, 1, "0"), encode_qubits(ising, 1, "1")
    assert trace_distance(zero, one) == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        trace_distance(zero, vacuum_pair(ising, SIGMA))


def test_density_matrix_check_catches_bad_states(ising):
    basis = fusion_basis(ising, (SIGMA, SIGMA))
    bad = AnyonicDensityMatrix(ising, (SIGMA, SIGMA), np.ones((basis.dim, basis.dim)) / 2)
    with pytest.raises(AssertionError):
        bad.check()


def test_snapshot_is_canonical(fib):
    rho = pure_state(fib, (1, 1), {(0,): 1.0})
    assert rho.snapshot() == "I | I | 1 | 0\n"


def test_pure_state_normalizes(fib):
    rho = pure_state(fib, (1, 1, 1), {(0, 1): 3.0, (1, 1): 4.0j})
    assert qtrace(rho) == pytest.approx(1)
    assert rho.mat[0, 0].real == pytest.approx(9 / 25)
    with pytest.raises(ValueError):
        pure_state(fib, (1, 1), {(0,): 1.0, (1,): 1.0})


def test_golden_ratio_constant():
    assert PHI**2 == pytest.approx(PHI + 1)
