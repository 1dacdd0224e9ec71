import math

import numpy as np
import pytest

from anyonforge.anyon_model import build_model
from anyonforge.compiler import (
    MAX_ARITY,
    ArityError,
    ArrayLayout,
    CompileError,
    MeasurementSchedule,
    compile_word,
    direct_circuit,
    encode_qubits,
    execute,
    parse_word,
    qubit_encoding,
    readout,
)
from anyonforge.fusion_space import cluster_marginals, qtrace, trace_distance
from anyonforge.measurement import projector_probabilities
from anyonforge.protocols import TransitionCache


def test_encode_examples(ising, fib):
    zero = encode_qubits(ising, 1)
    assert zero.leaves == (1, 1, 1, 1)
    assert projector_probabilities(zero, (1, 2))[0] == pytest.approx(1)
    assert projector_probabilities(zero, (3, 4))[0] == pytest.approx(1)
    two = encode_qubits(fib, 2, "01")
    assert two.n == 8 and qtrace(two) == pytest.approx(1)
    assert projector_probabilities(two, (5, 6))[1] == pytest.approx(1)
    assert two.overall_probabilities()[0] == pytest.approx(1)
    assert trace_distance(encode_qubits(fib, 1, "0"), encode_qubits(fib, 1, "1")) == pytest.approx(1)


def test_encode_has_no_charge_lines_between_qubits(fib):
    two = encode_qubits(fib, 2, "10")
    first, second = cluster_marginals(two, 4)
    assert trace_distance(first, encode_qubits(fib, 1, "1")) < 1e-12
    assert trace_distance(second, encode_qubits(fib, 1, "0")) < 1e-12


def test_encoding_errors(ising):
    with pytest.raises(ValueError):
        qubit_encoding(ising, "ψ")  # ψ x ψ = I only
    with pytest.raises(ValueError):
        encode_qubits(ising, 2, "012")
    with pytest.raises(ValueError):
        encode_qubits(ising, 0)


def test_encoding_channels():
    assert qubit_encoding(build_model("ising")).channels == (0, 2)
    assert qubit_encoding(build_model("su2k(3)")).channels == (0, 2)


def test_layout_is_economical():
    lay = ArrayLayout(2)
    assert lay.n_physical == 16
    assert [lay.computational(k) for k in (1, 2, 8)] == [2, 4, 16]
    assert lay.pairs[:2] == ((1, 3), (5, 7))
    # one resource anyon between every two computational anyons
    row = sorted([lay.computational(k) for k in range(1, 9)] + [x for p in lay.pairs for x in p])
    assert row == list(range(1, 17))


def test_parse_word():
    assert parse_word("1+ 2- 3") == [(1, "ccw"), (2, "cw"), (3, "ccw")]
    assert parse_word("1,-2") == [(1, "ccw"), (2, "cw")]
    assert parse_word([3, -1]) == [(3, "ccw"), (1, "cw")]
    assert parse_word([(2, "cw")]) == [(2, "cw")]


def test_empty_word_only_reads_out(fib):
    sched = compile_word(fib, [], 2)
    assert [ins["op"] for ins in sched.instructions] == ["READOUT", "READOUT"]


def test_single_generator_three_forced_measurements(fib):
    sched = compile_word(fib, [(1, "ccw")], 1)
    ops = [ins["op"] for ins in sched.instructions]
    assert ops == ["REPEAT_UNTIL_VACUUM"] * 3 + ["READOUT"]
    for ins in sched.instructions[:3]:
        assert all(m["op"] == "MEASURE" for m in ins["block"] + ins["retry"])


def test_interferometric_blocks_carry_a_check(fib):
    sched = compile_word(fib, "2+", 1, "interferometric")
    for ins in sched.instructions[:3]:
        assert len(ins["block"]) == 2
        assert ins["check_target"] == ins["block"][-1]["target"]
        assert len(ins["check_target"]) == 4


def test_ising_interferometric_lowered(ising):
    sched = compile_word(ising, "1+", 1, "interferometric")
    assert sched.method == "projective" and sched.requested_method == "interferometric"
    assert sched.notes


def test_compile_errors(fib):
    with pytest.raises(CompileError):
        compile_word(fib, "8+", 2)
    with pytest.raises(CompileError):
        compile_word(fib, "0+", 2)
    with pytest.raises(CompileError):
        compile_word(fib, [(1, "sideways")], 1)
    with pytest.raises(CompileError):
        compile_word(fib, "1+", 1, "telepathic")
    with pytest.raises(ArityError):
        compile_word(fib, "4+ 8+", 3, "interferometric")


def test_arity_small_words_exhaustive():
    m = build_model("su2k(3)")
    letters = [(i, c) for i in range(1, 8) for c in ("ccw", "cw")]
    worst = 0
    for a in letters:
        for b in letters:
            for method in ("projective", "interferometric"):
                worst = max(worst, compile_word(m, [a, b], 2, method).max_arity())
    assert worst <= MAX_ARITY


def test_schedule_json_round_trip(fib):
    sched = compile_word(fib, "1+ 4- 5+ 7-", 2, "interferometric")
    text = sched.to_json()
    again = MeasurementSchedule.from_json(text)
    assert again.to_json() == text
    assert '"version": "motqc-schedule/1"' in text
    with pytest.raises(ValueError):
        MeasurementSchedule.from_json(text.replace("motqc-schedule/1", "motqc-schedule/0"))


@pytest.mark.parametrize("name", ["ising", "fib", "su2k(3)"])
@pytest.mark.parametrize("method", ["projective", "interferometric"])
def test_execute_matches_direct_circuit(name, method):
    m = build_model(name)
    words_rng = np.random.default_rng([len(name), len(method), 17])
    init = encode_qubits(m, 2, "00")
    for _ in range(2):
        length = int(words_rng.integers(1, 7))
        word = [(int(words_rng.integers(1, 8)), ("ccw", "cw")[words_rng.integers(2)]) for _ in range(length)]
        sched = compile_word(m, word, 2, method)
        ref = direct_circuit(init, word)
        for seed in range(2):
            out, _ = execute(sched, init, np.random.default_rng(seed), perform_readout=False)
            assert trace_distance(out, ref) < 1e-9


def test_identity_word(fib):
    init = encode_qubits(fib, 2, "10")
    out, run = execute(compile_word(fib, "3+ 3-", 2), init, np.random.default_rng(0), perform_readout=False)
    assert trace_distance(out, init) < 1e-12
    out, run = execute(compile_word(fib, [], 2), init, np.random.default_rng(0), perform_readout=False)
    assert trace_distance(out, init) < 1e-12


def test_seeded_logs_identical(fib):
    sched = compile_word(fib, "1+ 2- 5+", 2, "interferometric")
    init = encode_qubits(fib, 2)
    logs = [execute(sched, init, np.random.default_rng(42))[1].to_jsonl() for _ in range(2)]
    assert logs[0] == logs[1]
    other = execute(sched, init, np.random.default_rng(43))[1].to_jsonl()
    assert other != logs[0]


def test_log_records_every_measurement(fib):
    sched = compile_word(fib, "2-", 1)
    _, run = execute(sched, encode_qubits(fib, 1), np.random.default_rng(3))
    measured = [ev for ev in run.events if ev["event"] == "measure"]
    per_record = sum(2 * r.attempts - 1 for r in run.records)
    assert len(measured) == per_record
    assert run.events[-1]["event"] == "summary"
    assert all(x <= ArrayLayout(1).n_physical for ev in measured for x in ev["target"])


def test_readout_examples(ising, fib):
    for m in (ising, fib):
        bit, _ = readout(encode_qubits(m, 1, "1"), 0, np.random.default_rng(0))
        assert bit == 1
    with pytest.raises(IndexError):
        readout(encode_qubits(ising, 1), 1, np.random.default_rng(0))


def test_readout_after_exchange_within_pair(ising):
    sched = compile_word(ising, "1+", 1)
    init = encode_qubits(ising, 1)
    for seed in range(20):
        _, run = execute(sched, init, np.random.default_rng(seed))
        assert run.readout == {0: 0}


def test_readout_born_statistics_after_middle_exchange(ising):
    sched = compile_word(ising, "2+", 1)
    init = encode_qubits(ising, 1)
    cache = TransitionCache()
    runs = 10_000
    bits = [execute(sched, init, np.random.default_rng(seed), cache=cache)[1].readout[0] for seed in range(runs)]
    p = 0.5
    assert abs(np.mean(bits) - p) <= 3 * math.sqrt(p * (1 - p) / runs)


def test_single_qubit_schedule_is_isolated(fib):
    init = encode_qubits(fib, 2, "01")
    for word in ("1+ 2- 3+", "3- 3- 1+"):
        sched = compile_word(fib, word, 2, "interferometric")
        targets = {x for ins in sched.instructions if ins["op"] != "READOUT" for m in ins["block"] + ins["retry"] for x in m["target"]}
        assert max(targets) <= 9  # qubit 0 occupies 2..8, its resources 1..9
        out, _ = execute(sched, init, np.random.default_rng(1), perform_readout=False)
        _, second = cluster_marginals(out, 4)
        assert trace_distance(second, encode_qubits(fib, 1, "1")) < 1e-9


def test_execute_rejects_mismatched_state(ising, fib):
    sched = compile_word(fib, "1+", 1)
    with pytest.raises(ValueError):
        execute(sched, encode_qubits(ising, 1), np.random.default_rng(0))
    with pytest.raises(ValueError):
        execute(sched, encode_qubits(fib, 2), np.random.default_rng(0))
