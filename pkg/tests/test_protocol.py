import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dephasim import core, protocol
from dephasim.core import DephasingParams, DomainError

import oracles

# Three-pair truth table: flags (T, T, C) before and after the CNOTs, accepted rows.
TABLE_THREE_PAIRS = {
    (0, 0, 0): ((0, 0, 0), True),
    (0, 0, 1): ((0, 0, 1), False),
    (0, 1, 0): ((0, 1, 1), False),
    (0, 1, 1): ((0, 1, 0), True),
    (1, 0, 0): ((1, 0, 1), False),
    (1, 0, 1): ((1, 0, 0), True),
    (1, 1, 0): ((1, 1, 0), True),
    (1, 1, 1): ((1, 1, 1), False),
}


def test_truth_table_three_pairs():
    rows = {inp: (out, ok) for inp, out, ok in protocol.truth_table(3)}
    assert rows == TABLE_THREE_PAIRS


@pytest.mark.parametrize("m", range(2, 8))
def test_truth_table_parity_rule(m):
    for inp, out, ok in protocol.truth_table(m):
        assert out[:-1] == inp[:-1]
        assert out[-1] == sum(inp) % 2
        assert ok == (sum(inp) % 2 == 0)


def test_error_pattern_bits():
    pat = protocol.ErrorPattern.from_int(0b101, 3)
    assert pat.flags == (1, 0, 1) and pat.weight == 2
    assert pat.probability(0.1) == pytest.approx(0.01 * 0.9)


def test_classify_mixed_level():
    # m=2, two rounds: block 0 even, block 1 odd -> mixed first level
    bits = np.array([[0, 0, 1, 0]], dtype=np.uint8)
    codes, _ = protocol.classify(bits, 2, 2)
    assert codes[0, 0] == -1


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("p", [0.01, 0.1, 0.35])
def test_round2_enumeration_matches_oracle(p, m):
    table = oracles.lineage_table(p, m, 2)
    for key, out in protocol.enumerate_round2(DephasingParams(p, m)).items():
        cond, _, fid = table[key]
        assert out.probability == pytest.approx(float(cond), abs=1e-13)
        if fid is not None:
            assert out.reduced_pair_fidelity == pytest.approx(float(fid), abs=1e-13)


@given(st.floats(0.0, 0.5), st.integers(2, 12))
@settings(max_examples=25)
def test_round1_enumeration_matches_closed_form(p, m):
    params = DephasingParams(p, m)
    for key, out in protocol.enumerate_round1(params).items():
        prob, spec = core.round1_spectrum(params, key)
        assert out.probability == pytest.approx(prob, abs=1e-12)
        if prob > 0.0:
            assert out.spectrum.as_dict().keys() == spec.as_dict().keys()


FROZEN_FIDELITY = {
    # exhaustive first-survivor fidelities of the all-success lineage
    (0.1, 3, 1): 0.9761904762,
    (0.1, 3, 2): 0.9993836625,
    (0.1, 4, 1): 0.9653802497,
    (0.1, 4, 2): 0.9985657797,
    (0.1, 2, 2): 0.9998476074,
    (0.1, 2, 3): 0.9999999768,
}


@pytest.mark.parametrize("key", sorted(FROZEN_FIDELITY))
def test_frozen_success_fidelities(key):
    p, m, n = key
    rep = protocol.enumerate_rounds(DephasingParams(p, m), n, mode="exhaustive")[-1]
    assert rep.lineage_fidelity == pytest.approx(FROZEN_FIDELITY[key], abs=1e-9)


@pytest.mark.parametrize("p", [0.05, 0.1, 0.2])
def test_success_fidelity_increases(p):
    reps = protocol.enumerate_rounds(DephasingParams(p, 2), 3, mode="exhaustive")
    fids = [1 - p] + [r.lineage_fidelity for r in reps]
    assert all(b > a for a, b in zip(fids, fids[1:]))


def test_surviving_slots_share_fidelity():
    out = protocol.enumerate_round2(DephasingParams(0.1, 3))["s1s2"]
    assert out.slot_fidelities
    assert np.ptp(out.slot_fidelities) < 1e-13


def test_montecarlo_requires_seed():
    with pytest.raises(ValueError):
        protocol.sample_lineages(DephasingParams(0.1, 3), 2, None, 1000)
    with pytest.raises(ValueError):
        protocol.enumerate_rounds(DephasingParams(0.1, 3), 3, mode="auto")


def test_montecarlo_is_deterministic_and_unbiased():
    params = DephasingParams(0.2, 3)
    a = protocol.enumerate_round2(params, "montecarlo", seed=11, samples=200_000)
    b = protocol.enumerate_round2(params, "montecarlo", seed=11, samples=200_000)
    exact = protocol.enumerate_round2(params)
    for key in exact:
        assert a[key].probability == b[key].probability
        se = a[key].stderr["probability"]
        assert abs(a[key].probability - exact[key].probability) <= 4 * se + 1e-12


def test_exhaustive_size_guards():
    with pytest.raises(DomainError):
        protocol.enumerate_round1(DephasingParams(0.1, protocol.MAX_ROUND1_M + 1))
    with pytest.raises(DomainError):
        protocol.enumerate_round2(DephasingParams(0.1, 5))


def test_label_range_report_flags_unused_printed_labels():
    rep = protocol.label_range_report(2)
    assert (0, 2) in rep["s1f2"]["extra"]
    assert rep["s1s2"] == {"missing": [], "extra": []}


def test_branch_record_is_json_ready():
    import json

    out = protocol.enumerate_round2(DephasingParams(0.1, 2))["f1f2"]
    rec = protocol.branch_record(out)
    assert rec["tag"] == "f1f2"
    assert json.loads(json.dumps(rec))["spectrum"][0]["label"] == [1, 2]
