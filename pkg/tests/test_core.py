import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dephasim import core
from dephasim.core import (
    F1, F1F2, F1S2, ROUND1_TAGS, ROUND2_TAGS, S1, S1F2, S1S2,
    BranchTag, ConsistencyError, DephasingParams, DomainError, Spectrum,
)

import oracles

probs = st.floats(min_value=0.0, max_value=0.5, allow_nan=False)
interior = st.floats(min_value=1e-4, max_value=0.4999)


def expand(spec):
    return sorted(v for e in spec for v in [e.value] * e.multiplicity if v > 0.0)


# --- parameters and tags --------------------------------------------------------


@pytest.mark.parametrize("p, m, n", [(-0.01, 3, 1), (0.51, 3, 1), (0.1, 1, 1), (0.1, 3, 0), (0.1, 2.5, 1), (math.nan, 3, 1)])
def test_params_reject_bad_domain(p, m, n):
    with pytest.raises(DomainError):
        DephasingParams(p, m, n)


def test_params_accept_fully_dephased():
    assert DephasingParams(0.5, 2).p == 0.5


def test_tag_parse_roundtrip():
    for tag in core.all_tags(3):
        assert BranchTag.parse(str(tag)) == tag
    assert S1S2.prefix == S1
    assert F1F2.last_success is False
    with pytest.raises(ValueError):
        BranchTag.parse("s2")


# --- scalar helpers -------------------------------------------------------------------


def test_capacity_values():
    assert core.capacity(0.0) == 1.0
    assert core.capacity(0.5) == 0.0
    assert core.capacity(0.1) == pytest.approx(0.5310044064107188, abs=1e-15)


def test_node_dephasing_composes_flips():
    # two segments: flip iff exactly one segment flips
    pe = core.node_dephasing(0.1, 2)
    assert 2 * pe * (1 - pe) == pytest.approx(0.1, abs=1e-15)


@given(probs)
def test_binary_entropy_symmetric(x):
    assert core.binary_entropy(x) == pytest.approx(core.binary_entropy(1 - x), abs=1e-12)


# --- round 1 ------------------------------------------------------------------------


def test_round1_success_probability_frozen():
    assert core.round1_success_probability(0.1, 3) == pytest.approx(0.756, abs=1e-15)


@given(probs, st.integers(2, 30))
def test_round1_branches_complete(p, m):
    params = DephasingParams(p, m)
    total = 0.0
    for tag in ROUND1_TAGS:
        prob, spec = core.round1_spectrum(params, tag)
        total += prob
        if prob > 0.0:
            assert spec.is_normalized(1e-12)
            assert spec.dimension() <= 2 ** (m - 1)
    assert total == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
@pytest.mark.parametrize("p", [0.03, 0.1, 0.37])
def test_round1_matches_brute_force(p, m):
    params = DephasingParams(p, m)
    table = oracles.lineage_table(p, m, 1)
    for tag in ROUND1_TAGS:
        prob, spec = core.round1_spectrum(params, tag)
        cond, _, _ = table[str(tag)]
        assert prob == pytest.approx(float(cond), abs=1e-14)
        assert expand(spec) == pytest.approx(oracles.eigenvalues(p, m, str(tag)), abs=1e-14)


@given(interior, st.integers(2, 12))
def test_small_p_failure_branch_stays_normalized(p, m):
    p = p * 1e-5
    prob, spec = core.round1_spectrum(DephasingParams(p, m), F1)
    assert prob > 0.0
    assert spec.is_normalized(1e-13)


def test_zero_probability_branch_is_empty():
    prob, spec = core.round1_spectrum(DephasingParams(0.0, 4), F1)
    assert prob == 0.0 and spec.is_empty


@given(st.integers(2, 9))
def test_fully_dephased_round1_uniform(m):
    for tag in ROUND1_TAGS:
        prob, spec = core.round1_spectrum(DephasingParams(0.5, m), tag)
        assert prob == pytest.approx(0.5, abs=1e-15)
        assert expand(spec) == pytest.approx([2.0 ** (1 - m)] * 2 ** (m - 1), abs=1e-15)


@given(probs, st.integers(2, 10))
def test_mixture_is_copies(p, m):
    mix = core.round1_mixture_spectrum(DephasingParams(p, m))
    copies = core.copies_spectrum(p, m - 1)
    assert expand(mix) == pytest.approx(expand(copies), abs=1e-13)


# --- round 2 ------------------------------------------------------------------------------


FROZEN_ROUND2 = {
    # (p, m): (P(s1s2|s1), F of first survivor after s1s2, P(s2|f1))
    (0.1, 2): (0.975907198, 0.9998476074, 0.5),
    (0.1, 3): (0.897878199, 0.9993836625, 0.25881131),
    (0.1, 4): (0.7552200508, 0.9985657797, 0.1533109576),
}


@pytest.mark.parametrize("key", sorted(FROZEN_ROUND2))
def test_round2_frozen_probabilities(key):
    p, m = key
    ps, _, pf = FROZEN_ROUND2[key]
    params = DephasingParams(p, m)
    assert core.round2_spectrum(params, S1S2)[0] == pytest.approx(ps, abs=1e-9)
    assert core.round2_spectrum(params, F1S2)[0] == pytest.approx(pf, abs=1e-8)


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("p", [0.02, 0.1, 0.3])
def test_round2_matches_brute_force(p, m):
    params = DephasingParams(p, m)
    table = oracles.lineage_table(p, m, 2)
    for tag in ROUND2_TAGS:
        prob, spec = core.round2_spectrum(params, tag)
        cond, _, _ = table[str(tag)]
        assert prob == pytest.approx(float(cond), abs=1e-13)
        if prob > 0.0:
            assert expand(spec) == pytest.approx(oracles.eigenvalues(p, m, str(tag)), abs=1e-13)


@given(probs, st.integers(2, 8))
def test_round2_branches_complete(p, m):
    params = DephasingParams(p, m)
    for head, tags in ((S1, (S1S2, S1F2)), (F1, (F1S2, F1F2))):
        if core.round1_spectrum(params, head)[0] == 0.0:
            continue
        probs_ = [core.round2_spectrum(params, t)[0] for t in tags]
        assert sum(probs_) == pytest.approx(1.0, abs=1e-12)
        for t, pr in zip(tags, probs_):
            if pr > 0.0:
                assert core.round2_spectrum(params, t)[1].is_normalized(1e-11)


@given(interior, st.integers(2, 8))
def test_round2_probability_two_routes(p, m):
    params = DephasingParams(p, m)
    for given_tag in (S1, F1):
        a = core.round2_success_probability(params, given_tag)
        b = core.round2_success_probability_from_multiplicities(params, given_tag)
        assert a == pytest.approx(b, abs=1e-12)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_round2_conditional_exact_matches_oracle(m):
    p = Fraction(1, 10)
    exact = core._round2_conditional_exact(0.1, m, True)
    ref = oracles.lineage_table(p, m, 2)["s1s2"][0]
    assert float(exact) == pytest.approx(float(ref), abs=1e-15)


def test_round2_label_counts_total_patterns():
    for m in range(2, 6):
        for head in (True, False):
            counts = core.round2_label_counts(m, head)
            assert sum(counts.values()) == 2 ** ((m - 1) ** 2)


def test_failure_label_parity_guard():
    with pytest.raises(ValueError):
        core.round2_spectrum(DephasingParams(0.1, 3), BranchTag((True, True, True)))


def test_printed_label_ranges_against_counts():
    for m in range(2, 9):
        for tag in (S1S2, F1S2):
            assert core.counted_labels(m, tag) == core.printed_label_ranges(m, tag)
    # two-index ranges list labels that never occur and, from m = 6, miss some that do
    assert (0, 2) in core.printed_label_ranges(2, S1F2) - core.counted_labels(2, S1F2)
    assert (6, 12) in core.counted_labels(6, S1F2) - core.printed_label_ranges(6, S1F2)


def test_branch_spectrum_rejects_deep_tags():
    with pytest.raises(ValueError):
        core.branch_spectrum(DephasingParams(0.1, 3), BranchTag((True,) * 3))


def test_spectrum_normalize_zero_raises():
    with pytest.raises(ConsistencyError):
        Spectrum((), 1).normalized()
