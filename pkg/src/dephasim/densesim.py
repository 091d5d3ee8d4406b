"""Dense density-matrix oracle for small registers.

Pairs are stored as consecutive qubits ``A1 B1 A2 B2 ...``; qubit ``0`` is
the most significant bit of a computational-basis index, matching
``np.kron`` ordering.  All index arithmetic goes through
:func:`pair_qubits`.  Matrices are kept complex on purpose even though every
state in scope is real.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DomainError, _check_probability, node_dephasing

MAX_DENSE_PAIRS = 6
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10

_S = 1.0 / math.sqrt(2.0)
PLUS = np.array([_S, _S], dtype=complex)
MINUS = np.array([_S, -_S], dtype=complex)
BELL = {
    "phi+": np.array([_S, 0, 0, _S], dtype=complex),
    "phi-": np.array([_S, 0, 0, -_S], dtype=complex),
    "psi+": np.array([0, _S, _S, 0], dtype=complex),
    "psi-": np.array([0, _S, -_S, 0], dtype=complex),
}
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
X_OUTCOMES = {"+": PLUS, "-": MINUS}
SUCCESS_OUTCOMES = ("++", "--")
FAILURE_OUTCOMES = ("+-", "-+")


def pair_qubits(pair: int) -> tuple:
    """Register positions ``(alice, bob)`` of a pair."""
    return 2 * pair, 2 * pair + 1


def _pair_labels(pair_count: int) -> tuple:
    return tuple(f"{side}{k + 1}" for k in range(pair_count) for side in "AB")


@dataclass(frozen=True)
class DenseState:
    """Density matrix over ``len(qubit_labels)`` qubits."""

    matrix: np.ndarray
    qubit_labels: tuple = field(default=())

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        nq = int(round(math.log2(mat.shape[0]))) if mat.size else 0
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or (1 << nq) != mat.shape[0]:
            raise ValueError(f"matrix of shape {mat.shape} is not a qubit register")
        labels = tuple(self.qubit_labels) or tuple(f"q{i}" for i in range(nq))
        if len(labels) != nq:
            raise ValueError(f"{len(labels)} labels for {nq} qubits")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "qubit_labels", labels)

    @property
    def num_qubits(self) -> int:
        return len(self.qubit_labels)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_pairs(self) -> int:
        return self.num_qubits // 2

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_physical(self, tol: float = PSD_TOL) -> bool:
        return (
            self.is_hermitian()
            and abs(self.trace() - 1.0) <= HERMITIAN_TOL
            and float(self.eigenvalues().min()) >= -tol
        )


@dataclass(frozen=True)
class MeasurementBranch:
    """One measurement outcome: its probability and normalized post-state."""

    outcome: str
    probability: float
    state: DenseState | None


# --- construction ------------------------------------------------------------


def _apply_local(matrix: np.ndarray, op: np.ndarray, qubit: int, nq: int) -> np.ndarray:
    """``op`` on one qubit, conjugated: ``O rho O^dagger``."""
    t = matrix.reshape((2,) * (2 * nq))
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [qubit])), 0, qubit)
    t = np.moveaxis(np.tensordot(op.conj(), t, axes=([1], [nq + qubit])), 0, nq + qubit)
    return t.reshape(matrix.shape)


def kraus_dephase(state: DenseState, qubit: int, p: float) -> DenseState:
    """Dephasing channel on one qubit with ``K0 = sqrt(1-p) I``, ``K1 = sqrt(p) Z``."""
    p = _check_probability("p", p)
    k0 = math.sqrt(1.0 - p) * np.eye(2, dtype=complex)
    k1 = math.sqrt(p) * SIGMA_Z
    nq = state.num_qubits
    out = _apply_local(state.matrix, k0, qubit, nq) + _apply_local(state.matrix, k1, qubit, nq)
    return DenseState(out, state.qubit_labels)


def _check_pair_count(pair_count: int) -> None:
    if not 1 <= pair_count <= MAX_DENSE_PAIRS:
        raise DomainError(f"dense simulation supports 1..{MAX_DENSE_PAIRS} pairs, got {pair_count}")


def prepare_and_dephase(pair_count: int, p: float) -> DenseState:
    """``pair_count`` copies of phi+ with Bob's half sent through the channel."""
    _check_pair_count(pair_count)
    p = _check_probability("p", p)
    pure = np.outer(BELL["phi+"], BELL["phi+"].conj())
    one = kraus_dephase(DenseState(pure, ("A", "B")), 1, p).matrix
    mat = one
    for _ in range(pair_count - 1):
        mat = np.kron(mat, one)
    return DenseState(mat, _pair_labels(pair_count))


def bell_product_state(flags) -> DenseState:
    """Pure product of phi+ (flag 0) and phi- (flag 1) pairs."""
    flags = [int(f) for f in flags]
    _check_pair_count(len(flags))
    vec = np.ones(1, dtype=complex)
    for f in flags:
        vec = np.kron(vec, BELL["phi-" if f else "phi+"])
    return DenseState(np.outer(vec, vec.conj()), _pair_labels(len(flags)))


def from_bell_diagonal(probabilities: np.ndarray) -> DenseState:
    """Bell-diagonal state from its ``2**k`` phi+/phi- weights (flag bit ``k-1-i`` for pair ``i``)."""
    probabilities = np.asarray(probabilities, dtype=float)
    k = int(round(math.log2(probabilities.size)))
    _check_pair_count(k)
    mat = np.zeros((4**k, 4**k), dtype=complex)
    for idx, w in enumerate(probabilities):
        if w == 0.0:
            continue
        flags = [(idx >> (k - 1 - i)) & 1 for i in range(k)]
        mat += w * bell_product_state(flags).matrix
    return DenseState(mat, _pair_labels(k))


# --- gates -------------------------------------------------------------------


def _cnot_permutation(nq: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << nq)
    cbit = (idx >> (nq - 1 - control)) & 1
    return idx ^ (cbit << (nq - 1 - target))


def circuit_permutation(num_pairs: int, gates) -> np.ndarray:
    """Basis map ``x -> U x`` for bilateral CNOTs ``(control_pair, target_pair)``."""
    nq = 2 * num_pairs
    f = np.arange(1 << nq)
    for gate in gates:
        c, t = (int(g) for g in gate)
        if not (0 <= c < num_pairs and 0 <= t < num_pairs) or c == t:
            raise IndexError(f"bad CNOT {gate!r} on {num_pairs} pairs")
        for side in (0, 1):
            g = _cnot_permutation(nq, pair_qubits(c)[side], pair_qubits(t)[side])
            f = g[f]
    return f


def apply_circuit(state: DenseState, gates) -> DenseState:
    """Conjugate by a sequence of bilateral CNOTs (Alice's gate mirrored by Bob).

    CNOTs permute basis states, so ``U rho U^dagger`` is a re-indexing.
    """
    if state.num_qubits % 2:
        raise ValueError("state does not consist of whole pairs")
    f = circuit_permutation(state.num_pairs, gates)
    inv = np.argsort(f)
    return DenseState(state.matrix[np.ix_(inv, inv)], state.qubit_labels)


def round1_gates(m: int, offset: int = 0) -> list:
    """The last pair of the block controls a CNOT onto each of the others."""
    return [(offset + m - 1, offset + k) for k in range(m - 1)]


# --- partial traces and measurement -------------------------------------------


def _contract(matrix: np.ndarray, nq: int, qubits, ket: np.ndarray | None) -> np.ndarray:
    """``<v| rho |v>`` over ``qubits`` (or their partial trace when ``ket`` is None)."""
    qubits = list(qubits)
    rest = [q for q in range(nq) if q not in qubits]
    k = len(qubits)
    t = matrix.reshape((2,) * (2 * nq))
    order = qubits + rest + [nq + q for q in qubits] + [nq + q for q in rest]
    t = t.transpose(order).reshape(1 << k, 1 << len(rest), 1 << k, 1 << len(rest))
    if ket is None:
        return np.einsum("arab->rb", t)
    return np.einsum("a,arbs,b->rs", ket.conj(), t, ket)


def partial_trace(state: DenseState, keep) -> DenseState:
    """Reduced state on the qubits listed in ``keep`` (kept in register order)."""
    keep = sorted(int(q) for q in keep)
    drop = [q for q in range(state.num_qubits) if q not in keep]
    mat = _contract(state.matrix, state.num_qubits, drop, None)
    return DenseState(mat, tuple(state.qubit_labels[q] for q in keep))


def pair_state(state: DenseState, pair: int) -> DenseState:
    if not 0 <= pair < state.num_pairs:
        raise IndexError(f"pair {pair} out of range")
    return partial_trace(state, pair_qubits(pair))


def project_qubits(state: DenseState, qubits, ket: np.ndarray) -> tuple:
    """Probability and normalized post-state after projecting ``qubits`` onto ``ket``.

    The projected qubits are removed from the register.
    """
    qubits = [int(q) for q in qubits]
    mat = _contract(state.matrix, state.num_qubits, qubits, ket)
    labels = tuple(l for i, l in enumerate(state.qubit_labels) if i not in qubits)
    prob = float(np.trace(mat).real)
    if prob <= 0.0:
        return 0.0, None
    return prob, DenseState(mat / prob, labels)


def _unnormalized(branch: MeasurementBranch) -> np.ndarray:
    return branch.probability * branch.state.matrix


def measure_pair_x(state: DenseState, pair: int) -> list:
    """X-basis measurement of both halves of a pair.

    Returns four branches with outcomes ``"++"``, ``"+-"``, ``"-+"``,
    ``"--"`` (Alice first); the measured pair is traced out of each
    post-state.
    """
    if not 0 <= pair < state.num_pairs:
        raise IndexError(f"pair {pair} out of range")
    out = []
    for a, va in X_OUTCOMES.items():
        for b, vb in X_OUTCOMES.items():
            prob, post = project_qubits(state, pair_qubits(pair), np.kron(va, vb))
            out.append(MeasurementBranch(a + b, prob, post))
    return sorted(out, key=lambda br: br.outcome)


def pool_branches(branches, outcomes, label: str) -> MeasurementBranch:
    """Sum selected branches into one normalized branch."""
    chosen = [br for br in branches if br.outcome in outcomes and br.probability > 0.0]
    prob = math.fsum(br.probability for br in chosen)
    if prob <= 0.0:
        return MeasurementBranch(label, 0.0, None)
    mat = sum(_unnormalized(br) for br in chosen) / prob
    return MeasurementBranch(label, prob, DenseState(mat, chosen[0].state.qubit_labels))


def measure_pairs_parity(state: DenseState, pairs) -> dict:
    """Joint X measurement of several pairs, grouped by the parity pattern.

    Returns ``{parities: MeasurementBranch}`` where ``parities`` is a tuple
    with ``0`` for matching outcomes on a pair and ``1`` for mismatching.
    """
    pairs = [int(k) for k in pairs]
    qubits = [q for k in pairs for q in pair_qubits(k)]
    acc: dict = {}
    labels = None
    for bits in range(1 << (2 * len(pairs))):
        ket = np.ones(1, dtype=complex)
        parities = []
        for i in range(len(pairs)):
            a = (bits >> (2 * i + 1)) & 1
            b = (bits >> (2 * i)) & 1
            ket = np.kron(ket, np.kron(MINUS if a else PLUS, MINUS if b else PLUS))
            parities.append(a ^ b)
        mat = _contract(state.matrix, state.num_qubits, qubits, ket)
        key = tuple(parities)
        acc[key] = acc.get(key, 0) + mat
        if labels is None:
            labels = tuple(l for i, l in enumerate(state.qubit_labels) if i not in qubits)
    out = {}
    for key, mat in sorted(acc.items()):
        prob = float(np.trace(mat).real)
        out[key] = MeasurementBranch(
            "".join(map(str, key)), prob, DenseState(mat / prob, labels) if prob > 0.0 else None
        )
    return out


def _pool_parities(branches: dict, success: bool, label: str) -> MeasurementBranch:
    chosen = {k: br for k, br in branches.items() if (not any(k)) == success and br.probability > 0.0}
    prob = math.fsum(br.probability for br in chosen.values())
    if prob <= 0.0:
        return MeasurementBranch(label, 0.0, None)
    mat = sum(_unnormalized(br) for br in chosen.values()) / prob
    labels = next(iter(chosen.values())).state.qubit_labels
    return MeasurementBranch(label, prob, DenseState(mat, labels))


# --- protocol rounds -------------------------------------------------------------


def round1_dense(p: float, m: int) -> dict:
    """One block of ``m`` pairs through the first-round circuit.

    Returns ``{"s1": branch, "f1": branch}`` with the ``m - 1`` unmeasured
    pairs as post-states.
    """
    state = apply_circuit(prepare_and_dephase(m, p), round1_gates(m))
    branches = measure_pair_x(state, m - 1)
    return {
        "s1": pool_branches(branches, SUCCESS_OUTCOMES, "s1"),
        "f1": pool_branches(branches, FAILURE_OUTCOMES, "f1"),
    }


def round2_dense(p: float, m: int, first: str = "s1") -> dict:
    """Second round on ``m`` copies of a round-1 branch state.

    Copy ``c`` holds pairs ``c (m-1) .. c (m-1) + m - 2``; slot ``s`` of the
    last copy controls CNOTs onto slot ``s`` of every other copy, then the
    whole last copy is measured.  Success requires every measured pair to
    show matching outcomes.  Returns ``{"<first>s2": ..., "<first>f2": ...}``.
    """
    k = m - 1
    if m * k > MAX_DENSE_PAIRS:
        raise DomainError(f"round 2 needs {m * k} pairs, dense limit is {MAX_DENSE_PAIRS}")
    block = round1_dense(p, m)[first]
    tags = {first + "s2": None, first + "f2": None}
    if block.probability <= 0.0:
        return {t: MeasurementBranch(t, 0.0, None) for t in tags}
    mat = block.state.matrix
    for _ in range(m - 1):
        mat = np.kron(mat, block.state.matrix)
    state = DenseState(mat, _pair_labels(m * k))
    gates = [((m - 1) * k + s, c * k + s) for s in range(k) for c in range(m - 1)]
    state = apply_circuit(state, gates)
    branches = measure_pairs_parity(state, range((m - 1) * k, m * k))
    return {
        first + "s2": _pool_parities(branches, True, first + "s2"),
        first + "f2": _pool_parities(branches, False, first + "f2"),
    }


def bsm_swap(p: float) -> tuple:
    """Entanglement swapping through one middle node.

    Both segments dephase with ``node_dephasing(p, 2)``; Charlie projects
    his two qubits onto each Bell state.  Returns the four branches (Alice
    and Bob's post-states) and the probability-weighted average RCI.
    """
    p = _check_probability("p", p)
    pe = node_dephasing(p, 2)
    base = prepare_and_dephase(2, pe)
    state = DenseState(base.matrix, ("A", "C1", "C2", "B"))
    branches = []
    for name, vec in BELL.items():
        prob, post = project_qubits(state, (1, 2), vec)
        branches.append(MeasurementBranch(name, prob, post))
    avg = math.fsum(br.probability * rci(br.state, [0]) for br in branches if br.state is not None)
    return branches, avg


# --- diagnostics ---------------------------------------------------------------


def fidelity_phi_plus(state: DenseState, pair: int = 0) -> float:
    """Overlap of one pair's reduced state with phi+."""
    red = pair_state(state, pair).matrix
    v = BELL["phi+"]
    return float(np.real(v.conj() @ red @ v))


def von_neumann_entropy(state: DenseState) -> float:
    ev = state.eigenvalues()
    ev = ev[ev > 1e-14]
    return float(-np.sum(ev * np.log2(ev)))


def rci(state: DenseState, alice_qubits) -> float:
    """Reverse coherent information ``S(A) - S(AB)`` with A the listed qubits."""
    return von_neumann_entropy(partial_trace(state, alice_qubits)) - von_neumann_entropy(state)


def alice_qubits(state: DenseState) -> list:
    return [pair_qubits(k)[0] for k in range(state.num_pairs)]


def max_offdiagonal(state: DenseState) -> float:
    mat = state.matrix
    return float(np.max(np.abs(mat - np.diag(np.diag(mat)))))


def _bell_basis(pairs: int) -> np.ndarray:
    one = np.column_stack([BELL["phi+"], BELL["phi-"], BELL["psi+"], BELL["psi-"]])
    out = np.ones((1, 1), dtype=complex)
    for _ in range(pairs):
        out = np.kron(out, one)
    return out


def bell_representation(state: DenseState) -> np.ndarray:
    """The state written in the tensor-product Bell basis."""
    b = _bell_basis(state.num_pairs)
    return b.conj().T @ state.matrix @ b


def is_bell_diagonal(state: DenseState, tol: float = 1e-12) -> bool:
    rep = bell_representation(state)
    return bool(np.max(np.abs(rep - np.diag(np.diag(rep))), initial=0.0) <= tol)


def eigen_multiset(state: DenseState, digits: int = 10) -> list:
    """Sorted ``(value, multiplicity)`` pairs of the nonzero eigenvalues."""
    acc: dict = {}
    for v in state.eigenvalues():
        key = round(float(v), digits)
        if key == 0.0:
            continue
        acc[key] = acc.get(key, 0) + 1
    return sorted(acc.items())


def spectrum_gap(spectrum, state: DenseState) -> float:
    """Largest difference between sorted eigenvalue lists.

    ``spectrum`` is expanded by multiplicity and padded with zeros to the
    dimension of ``state``.
    """
    ours = np.zeros(state.dim)
    vals = [e.value for e in spectrum for _ in range(e.multiplicity)]
    if len(vals) > state.dim:
        return math.inf
    ours[: len(vals)] = vals
    return float(np.max(np.abs(np.sort(ours) - np.sort(state.eigenvalues()))))


def dump_csv(state: DenseState, path) -> Path:
    """Write the matrix row-major with ``re,im`` cells, atomically."""
    from .emit import atomic_write

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["# qubits"] + list(state.qubit_labels))
    for row in state.matrix:
        w.writerow([f"{float(z.real)!r},{float(z.imag)!r}" for z in row])
    path = Path(path)
    atomic_write(path, buf.getvalue())
    return path
