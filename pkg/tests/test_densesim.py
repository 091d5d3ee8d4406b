import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dephasim import core, densesim
from dephasim.core import ROUND1_TAGS, DephasingParams, DomainError

import oracles

probs = st.floats(min_value=0.0, max_value=0.5, allow_nan=False)


def test_single_pair_dephasing_is_phi_mixture():
    st_ = densesim.prepare_and_dephase(1, 0.2)
    expected = 0.8 * densesim.bell_product_state([0]).matrix + 0.2 * densesim.bell_product_state([1]).matrix
    np.testing.assert_allclose(st_.matrix, expected, atol=1e-15)
    assert densesim.fidelity_phi_plus(st_) == pytest.approx(0.8, abs=1e-15)


def test_pair_qubit_layout():
    assert densesim.pair_qubits(0) == (0, 1)
    assert densesim.pair_qubits(2) == (4, 5)


@pytest.mark.parametrize("flags", list(itertools.product((0, 1), repeat=3)))
def test_cnot_moves_phase_flags_onto_control(flags):
    # Bell-basis rule: target phase flips are XORed into the control pair
    state = densesim.bell_product_state(flags)
    out = densesim.apply_circuit(state, densesim.round1_gates(3))
    expected = list(flags)
    expected[2] = (flags[0] + flags[1] + flags[2]) % 2
    np.testing.assert_allclose(out.matrix, densesim.bell_product_state(expected).matrix, atol=1e-14)


def test_x_measurement_reveals_parity():
    for flag in (0, 1):
        branches = densesim.measure_pair_x(densesim.bell_product_state([flag]), 0)
        prob = {b.outcome: b.probability for b in branches}
        same = prob["++"] + prob["--"]
        assert same == pytest.approx(1.0 - flag, abs=1e-15)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
@pytest.mark.parametrize("p", [0.0, 0.07, 0.25, 0.5])
def test_round1_dense_matches_closed_form(p, m):
    dense = densesim.round1_dense(p, m)
    params = DephasingParams(p, m)
    for tag in ROUND1_TAGS:
        prob, spec = core.round1_spectrum(params, tag)
        br = dense[str(tag)]
        assert br.probability == pytest.approx(prob, abs=1e-12)
        if prob > 0.0:
            assert densesim.spectrum_gap(spec, br.state) <= 1e-10
            assert br.state.is_physical()
            assert densesim.is_bell_diagonal(br.state)


@pytest.mark.parametrize("m", [2, 3])
@pytest.mark.parametrize("p", [0.05, 0.2])
def test_round2_dense_matches_oracle(p, m):
    table = oracles.lineage_table(p, m, 2)
    for head in ("s1", "f1"):
        for key, br in densesim.round2_dense(p, m, head).items():
            cond, _, fid = table[key]
            assert br.probability == pytest.approx(float(cond), abs=1e-12)
            if br.probability > 0.0:
                vals = sorted(v for v in br.state.eigenvalues() if v > 1e-14)
                assert vals == pytest.approx(oracles.eigenvalues(p, m, key), abs=1e-12)
                assert densesim.fidelity_phi_plus(br.state, 0) == pytest.approx(float(fid), abs=1e-12)


def test_round2_dense_size_guard():
    with pytest.raises(DomainError):
        densesim.round2_dense(0.1, 4)
    with pytest.raises(DomainError):
        densesim.prepare_and_dephase(densesim.MAX_DENSE_PAIRS + 1, 0.1)


@given(probs)
@settings(max_examples=15)
def test_bsm_average_rci_is_capacity(p):
    branches, avg = densesim.bsm_swap(p)
    assert avg == pytest.approx(core.capacity(p), abs=1e-12)
    for br in branches:
        assert br.probability == pytest.approx(0.25, abs=1e-12)
        assert densesim.max_offdiagonal(br.state) == pytest.approx(0.5 * (1 - 2 * p), abs=1e-12)


def test_partial_trace_of_product():
    state = densesim.prepare_and_dephase(2, 0.1)
    first = densesim.pair_state(state, 0)
    np.testing.assert_allclose(first.matrix, densesim.prepare_and_dephase(1, 0.1).matrix, atol=1e-15)
    assert first.trace() == pytest.approx(1.0)


def test_entropy_of_alice_marginal_is_maximal():
    br = densesim.round1_dense(0.1, 3)["s1"]
    alice = densesim.partial_trace(br.state, densesim.alice_qubits(br.state))
    assert densesim.von_neumann_entropy(alice) == pytest.approx(2.0, abs=1e-12)


def test_bell_representation_diagonal():
    # weights over phi+/phi- patterns of two pairs
    weights = np.array([0.7, 0.1, 0.15, 0.05])
    state = densesim.from_bell_diagonal(weights)
    assert densesim.is_bell_diagonal(state)
    diag = np.diag(densesim.bell_representation(state)).real
    assert sorted(diag[diag > 1e-15]) == pytest.approx(sorted(weights), abs=1e-15)


def test_dump_csv_roundtrip(tmp_path):
    state = densesim.prepare_and_dephase(1, 0.1)
    path = densesim.dump_csv(state, tmp_path / "rho.csv")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# qubits")
    cells = [row.split('","') for row in lines[1:]]
    first = cells[0][0].strip('"').split(",")
    assert float(first[0]) == pytest.approx(0.5)
    assert len(cells) == 4
