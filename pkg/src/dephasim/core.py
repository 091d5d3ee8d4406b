"""Scalar formulas, the Bell-diagonal spectrum model and closed-form spectra.

Every state handled here is diagonal in the tensor-product Bell basis and
only carries phase-flip (phi-) flags, so a state over ``k`` pairs is fully
described by eigenvalues indexed by error counts.  Round-1 spectra are
binomial; round-2 spectra need multiplicities that have no closed form and
are produced by an exact parity-class counter (:func:`round2_label_counts`).
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Union

import numpy as np

Label = Union[int, tuple]

NORM_TOL = 1e-12
NEGATIVE_TOL = 1e-12
MAX_COUNTED_M = 8


class DomainError(ValueError):
    """Raised when an argument lies outside its physical range."""


class ConsistencyError(ArithmeticError):
    """Raised when a computed spectrum violates an internal invariant."""


def _check_probability(name: str, x: float, hi: float = 0.5) -> float:
    x = float(x)
    if not (0.0 <= x <= hi) or math.isnan(x):
        raise DomainError(f"{name}={x!r} must lie in [0, {hi}]")
    return x


@dataclass(frozen=True)
class DephasingParams:
    """Channel and protocol parameters.

    Attributes
    ----------
    p : float
        Dephasing (phase-flip) probability, ``0 <= p <= 1/2``.  ``p = 1/2``
        is allowed and means the pairs are completely dephased.
    m : int
        Bell pairs per block, ``m >= 2``.
    n : int
        Number of purification rounds, ``n >= 1``.
    """

    p: float
    m: int
    n: int = 1

    def __post_init__(self):
        _check_probability("p", self.p)
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 2:
            raise DomainError(f"m={self.m!r} must be an integer >= 2")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n={self.n!r} must be an integer >= 1")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))

    def with_p(self, p: float) -> "DephasingParams":
        return replace(self, p=p)


@dataclass(frozen=True)
class SpectrumEntry:
    label: Label
    value: float
    multiplicity: int


@dataclass(frozen=True)
class Spectrum:
    """Bell-diagonal spectrum as labelled ``(value, multiplicity)`` entries.

    Labels are error counts: a single ``j`` for round-1 and round-2 success
    branches, a pair ``(j1, j2)`` for round-2 failure branches.  A spectrum
    may be unnormalized (summing to a branch probability); an empty spectrum
    stands for a branch that occurs with probability zero.
    """

    entries: tuple = ()
    pair_count: int = 0

    def __iter__(self) -> Iterator[SpectrumEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def is_empty(self) -> bool:
        return not self.entries

    def total(self) -> float:
        return math.fsum(e.multiplicity * e.value for e in self.entries)

    def dimension(self) -> int:
        """Number of eigenvalues counted with multiplicity."""
        return sum(e.multiplicity for e in self.entries)

    def normalized(self) -> "Spectrum":
        t = self.total()
        if t <= 0.0:
            raise ConsistencyError("cannot normalize a spectrum with zero weight")
        return Spectrum(
            tuple(SpectrumEntry(e.label, e.value / t, e.multiplicity) for e in self.entries),
            self.pair_count,
        )

    def as_dict(self) -> dict:
        return {e.label: (e.value, e.multiplicity) for e in self.entries}

    def merged_values(self, digits: int = 13) -> list:
        """Sorted ``(value, multiplicity)`` pairs with equal values merged.

        Used to compare spectra whose labelling differs (e.g. dense
        eigen-decompositions against error-count labels).
        """
        acc: dict = {}
        for e in self.entries:
            if e.value == 0.0:
                continue
            key = round(e.value, digits)
            acc[key] = acc.get(key, 0) + e.multiplicity
        return sorted(acc.items())

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.total() - 1.0) <= tol


@dataclass(frozen=True, order=True)
class BranchTag:
    """Per-round outcome lineage; ``True`` is success.

    ``str(BranchTag((True, False)))`` is ``"s1f2"``.
    """

    outcomes: tuple = field(default=(True,))

    def __post_init__(self):
        if not self.outcomes:
            raise ValueError("a branch tag needs at least one round")
        object.__setattr__(self, "outcomes", tuple(bool(o) for o in self.outcomes))

    @classmethod
    def parse(cls, text: str) -> "BranchTag":
        text = text.strip().lower()
        outcomes = []
        i = 0
        while i < len(text):
            ch = text[i]
            if ch not in "sf":
                raise ValueError(f"bad branch tag {text!r}")
            j = i + 1
            while j < len(text) and text[j].isdigit():
                j += 1
            idx = int(text[i + 1 : j]) if j > i + 1 else len(outcomes) + 1
            if idx != len(outcomes) + 1:
                raise ValueError(f"bad round index in branch tag {text!r}")
            outcomes.append(ch == "s")
            i = j
        return cls(tuple(outcomes))

    @property
    def rounds(self) -> int:
        return len(self.outcomes)

    @property
    def last_success(self) -> bool:
        return self.outcomes[-1]

    @property
    def prefix(self) -> "BranchTag | None":
        return BranchTag(self.outcomes[:-1]) if len(self.outcomes) > 1 else None

    def __str__(self) -> str:
        return "".join(("s" if o else "f") + str(i + 1) for i, o in enumerate(self.outcomes))


S1 = BranchTag((True,))
F1 = BranchTag((False,))
S1S2 = BranchTag((True, True))
S1F2 = BranchTag((True, False))
F1S2 = BranchTag((False, True))
F1F2 = BranchTag((False, False))
ROUND1_TAGS = (S1, F1)
ROUND2_TAGS = (S1S2, S1F2, F1S2, F1F2)


def all_tags(rounds: int) -> list:
    """All ``2**rounds`` lineages, success-first."""
    out = [()]
    for _ in range(rounds):
        out = [t + (o,) for t in out for o in (True, False)]
    return [BranchTag(t) for t in out]


def _as_tag(branch) -> BranchTag:
    return BranchTag.parse(branch) if isinstance(branch, str) else branch


# --- scalar formulas -------------------------------------------------------


def xlog2x(x: float) -> float:
    """``x * log2(x)`` with the ``0 log 0 = 0`` convention."""
    return 0.0 if x == 0.0 else x * math.log2(x)


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy in bits."""
    x = _check_probability("x", x, hi=1.0)
    return -xlog2x(x) - xlog2x(1.0 - x)


def capacity(p: float) -> float:
    """Two-way assisted capacity ``1 - H2(p)`` of the dephasing channel."""
    p = _check_probability("p", p)
    return 1.0 - binary_entropy(p)


def node_dephasing(p: float, segments: int) -> float:
    """Per-segment dephasing probability when the channel is cut into pieces.

    Composing ``segments`` dephasing channels multiplies their off-diagonal
    factors ``1 - 2 p_e``, so ``p_e = (1 - (1 - 2p)**(1/segments)) / 2``.
    """
    p = _check_probability("p", p)
    if isinstance(segments, bool) or int(segments) != segments or segments < 1:
        raise DomainError(f"segments={segments!r} must be an integer >= 1")
    if segments == 1:
        return p
    return 0.5 * (1.0 - (1.0 - 2.0 * p) ** (1.0 / segments))


def repeater_capacity(p: float, segments: int) -> float:
    """Capacity of one segment when ``segments - 1`` repeaters split the channel."""
    return capacity(node_dephasing(p, segments))


def pattern_weight(p: float, size: int, errors: int) -> float:
    """Probability ``(1-p)**(size-errors) * p**errors`` of one flag pattern."""
    if p == 0.0:
        return 1.0 if errors == 0 else 0.0
    if p == 1.0:
        return 1.0 if errors == size else 0.0
    return math.exp((size - errors) * math.log1p(-p) + errors * math.log(p))


def _scaled_weight(p: float, size: int, errors: int, first: float, power: int) -> float:
    """``pattern_weight(p, size, errors) / first**power`` without forming ``first**power``.

    Flag factors are paired with ``first`` as ``(p / first)**a`` so ratios
    stay finite and accurate when ``first`` is of order ``p`` and both
    ``p**errors`` and ``first**power`` underflow.
    """
    if p == 0.0:
        return first ** -power if errors == 0 else 0.0
    a = min(errors, power)
    head = (p / first) ** a * math.exp((size - errors) * math.log1p(-p))
    tail = power - a
    if errors > a:
        head *= p ** (errors - a)
    return head / first**tail if tail else head


def weight_table(p: float, size: int) -> np.ndarray:
    return np.array([pattern_weight(p, size, j) for j in range(size + 1)])


# --- round 1 ---------------------------------------------------------------


def round1_success_probability(p: float, m: int) -> float:
    """Probability that the measured pair of an ``m``-block reads even parity."""
    return 0.5 * (1.0 + (1.0 - 2.0 * p) ** m)


def _round1_joint(params: DephasingParams, success: bool) -> float:
    if success:
        return round1_success_probability(params.p, params.m)
    if params.p == 0.5:
        return 0.5
    # 1 - q**m loses digits for small p
    return -0.5 * math.expm1(params.m * math.log1p(-2.0 * params.p))


def round1_spectrum(params: DephasingParams, branch=S1) -> tuple:
    """Branch probability and normalized spectrum of the ``m - 1`` survivors.

    The label ``j`` is the total number of phase flips in the block
    (measured pair included): even ``j`` for success, odd for failure, each
    with multiplicity ``C(m, j)``.

    Returns
    -------
    probability : float
    spectrum : Spectrum
        Empty when the branch has probability zero.
    """
    tag = _as_tag(branch)
    if tag.rounds != 1:
        raise ValueError(f"round-1 branch expected, got {tag}")
    p, m = params.p, params.m
    prob = _round1_joint(params, tag.last_success)
    if prob == 0.0:
        return 0.0, Spectrum((), m - 1)
    start = 0 if tag.last_success else 1
    entries = []
    for j in range(start, m + 1, 2):
        w = pattern_weight(p, m, j)
        if w == 0.0:
            continue
        entries.append(SpectrumEntry(j, w / prob, math.comb(m, j)))
    return prob, Spectrum(tuple(entries), m - 1)


def copies_spectrum(p: float, pairs: int) -> Spectrum:
    """Spectrum of ``pairs`` independent dephased pairs, labelled by error count."""
    entries = []
    for j in range(pairs + 1):
        w = pattern_weight(p, pairs, j)
        if w > 0.0:
            entries.append(SpectrumEntry(j, w, math.comb(pairs, j)))
    return Spectrum(tuple(entries), pairs)


def round1_mixture_spectrum(params: DephasingParams) -> Spectrum:
    """``P_s rho_s + P_f rho_f`` as a spectrum over surviving error counts.

    A surviving flag pattern of weight ``w`` appears in the success branch
    with total count ``w + (w mod 2)`` and in the failure branch with
    ``w + 1 - (w mod 2)``; the two contributions are added per pattern.
    """
    m = params.m
    out = []
    parts = {}
    for tag in ROUND1_TAGS:
        prob, spec = round1_spectrum(params, tag)
        parts[tag] = (prob, spec.as_dict())
    for w in range(m):
        total = 0.0
        for tag in ROUND1_TAGS:
            prob, table = parts[tag]
            j = w + (w % 2) if tag.last_success else w + 1 - (w % 2)
            if j in table:
                total += prob * table[j][0]
        if total > 0.0:
            out.append(SpectrumEntry(w, total, math.comb(m - 1, w)))
    return Spectrum(tuple(out), m - 1)


def tensor_power(spectrum: Spectrum, copies: int) -> Spectrum:
    """Spectrum of ``copies`` independent copies of an integer-labelled spectrum.

    Entries are grouped by summed label; this requires each label of the
    result to carry a single value, which holds when values depend only on
    the label sum (true for every round-1 spectrum).
    """
    acc = {0: (1.0, 1)}
    for _ in range(copies):
        nxt: dict = {}
        for la, (va, ma) in acc.items():
            for e in spectrum.entries:
                key = la + e.label
                val = va * e.value
                mult = ma * e.multiplicity
                if key in nxt:
                    v0, m0 = nxt[key]
                    if not math.isclose(v0, val, rel_tol=1e-9, abs_tol=1e-300):
                        raise ConsistencyError(f"label {key} carries two values")
                    nxt[key] = (v0, m0 + mult)
                else:
                    nxt[key] = (val, mult)
        acc = nxt
    entries = tuple(SpectrumEntry(k, v, mu) for k, (v, mu) in sorted(acc.items()))
    return Spectrum(entries, spectrum.pair_count * copies)


# --- round 2 ---------------------------------------------------------------


def _popcounts(bits: int) -> np.ndarray:
    idx = np.arange(1 << bits)
    return np.array([bin(int(i)).count("1") for i in idx], dtype=np.int64)


@lru_cache(maxsize=None)
def round2_label_counts(m: int, first_success: bool = True) -> dict:
    """Exact multiplicities of round-2 eigenvalue labels.

    The survivors of two rounds form an ``(m-1) x (m-1)`` block of the
    ``m x m`` error matrix (rows are round-1 blocks, columns pair slots).
    Given the survivors, the round-1 outcome forces the last column and the
    round-2 success forces the last row, so every surviving pattern has
    exactly one completion in the success branch.  For each surviving
    pattern this returns the label ``(j1, j2)``: ``j1`` counts flags in the
    ``m - 1`` kept rows (forced column included), ``j2`` adds the forced
    control row.

    Counting proceeds row by row over the parity vector of the kept
    columns, so the cost is ``O(m * 4**(m-1) * m**2)`` instead of
    ``2**((m-1)**2)``.
    """
    if m < 2 or m > MAX_COUNTED_M:
        raise DomainError(f"round-2 label counting supports 2 <= m <= {MAX_COUNTED_M}, got {m}")
    k = m - 1
    pc = _popcounts(k)
    parity_bit = pc % 2 if first_success else 1 - pc % 2
    row_w = pc + parity_bit
    jmax = m * k
    state = np.zeros((1 << k, jmax + 1), dtype=np.int64)
    state[0, 0] = 1
    vs = np.arange(1 << k)
    for _ in range(k):
        nxt = np.zeros_like(state)
        for s in range(1 << k):
            rw = int(row_w[s])
            tgt = vs ^ s
            nxt[tgt, rw:] += state[:, : jmax + 1 - rw]
        state = nxt
    counts: dict = {}
    last_row = pc + (pc % 2 if first_success else 1 - pc % 2)
    for v in range(1 << k):
        for j1 in np.nonzero(state[v])[0]:
            key = (int(j1), int(j1 + last_row[v]))
            counts[key] = counts.get(key, 0) + int(state[v, j1])
    return dict(sorted(counts.items()))


def round2_success_multiplicities(m: int, first_success: bool = True) -> dict:
    """Multiplicity ``M(j)`` of each success-branch eigenvalue label."""
    out: dict = {}
    for (_, j2), c in round2_label_counts(m, first_success).items():
        out[j2] = out.get(j2, 0) + c
    return dict(sorted(out.items()))


def _round2_joint_exact(p: float, m: int, first_success: bool) -> Fraction:
    q = 1 - 2 * Fraction(p)
    total = Fraction(0)
    if first_success:
        for r in range((m - 1) // 2 + 1):
            total += math.comb(m, r) * (1 + q ** (m - 2 * r)) ** m * q ** (m * r)
        if m % 2 == 0:
            total += 2 ** (m - 1) * math.comb(m, m // 2) * q ** (m * m // 2)
    elif m % 2 == 0:
        for r in range(m // 2):
            total += (-1) ** r * math.comb(m, r) * (1 + q ** (m - 2 * r)) ** m * q ** (m * r)
        total += (-1) ** (m // 2) * 2 ** (m - 1) * math.comb(m, m // 2) * q ** (m * m // 2)
    else:
        for r in range((m - 1) // 2 + 1):
            x = q ** (m - 2 * r)
            total += (-1) ** r * math.comb(m, r) * (1 - x) * (1 + x) ** (m - 1) * q ** (m * r)
    return total / 2 ** (2 * m - 1)


def _round1_joint_exact(p: float, m: int, success: bool) -> Fraction:
    q = 1 - 2 * Fraction(p)
    return (1 + q**m) / 2 if success else (1 - q**m) / 2


def round2_joint_probability(p: float, m: int, first_success: bool = True) -> float:
    """Probability that all ``m`` blocks share the round-1 outcome and round 2 succeeds.

    Character-sum form over row and column subsets of the ``m x m`` error
    matrix.  With ``q = 1 - 2p`` and all rows even this is::

        2**-(2m-1) * [ sum_{r < m/2} C(m,r) (1 + q**(m-2r))**m q**(m r)
                       + (m even) 2**(m-1) C(m, m/2) q**(m*m/2) ]

    With all rows odd the ``r``-th term picks up ``(-1)**r``, and for odd
    ``m`` the factor ``(1 + x)**m`` becomes ``(1 - x)(1 + x)**(m-1)``
    because the last column must then be odd.

    The odd-row sum alternates and loses about ``m log10(1/p)`` digits in
    floating point, so both sums run exactly on the rational value of
    ``p`` and are rounded once.
    """
    return float(_round2_joint_exact(p, m, first_success))


@lru_cache(maxsize=4096)
def _round2_conditional_exact(p: float, m: int, first_success: bool) -> Fraction:
    first = _round1_joint_exact(p, m, first_success)
    if first == 0:
        return Fraction(0)
    return _round2_joint_exact(p, m, first_success) / first**m


def _round2_conditional(p: float, m: int, first_success: bool) -> float:
    return float(_round2_conditional_exact(p, m, first_success))


def round2_success_probability(params: DephasingParams, given=S1) -> float:
    """Round-2 success probability conditioned on ``m`` homogeneous round-1 blocks."""
    tag = _as_tag(given)
    if tag.rounds != 1:
        raise ValueError(f"condition on a round-1 branch, got {tag}")
    return _round2_conditional(params.p, params.m, tag.last_success)


def round2_success_probability_from_multiplicities(params: DephasingParams, given=S1) -> float:
    """Same quantity summed over success eigenvalues, ``sum_j M(j) w(j) / P1**m``."""
    tag = _as_tag(given)
    p, m = params.p, params.m
    first = _round1_joint(params, tag.last_success)
    if first == 0.0:
        return 0.0
    mult = round2_success_multiplicities(m, tag.last_success)
    return math.fsum(c * _scaled_weight(p, m * m, j, first, m) for j, c in mult.items())


def _other_rows_weight(p: float, m: int, passing: int, even: bool) -> float:
    """Weight of control-row patterns of the given parity, minus the passing one.

    Equals ``P1 - w_m(passing)``; summed term by term so the small
    failure-branch eigenvalues keep full relative precision.
    """
    terms = []
    for j in range(0 if even else 1, m + 1, 2):
        count = math.comb(m, j) - (1 if j == passing else 0)
        if count:
            terms.append(count * pattern_weight(p, m, j))
    return math.fsum(terms)


def round2_spectrum(params: DephasingParams, branch=S1S2) -> tuple:
    """Conditional probability and normalized spectrum of a round-2 branch.

    Success branches use ``w(j) / (P1**m * P2)`` with labels ``j``; failure
    branches use the two-index form::

        [w_{m(m-1)}(j1) / P1**(m-1) - w_{m*m}(j2) / P1**m] / (1 - P2)

    which is what remains of ``m - 1`` copies of the round-1 state after
    removing the success part.  ``P1`` is the round-1 branch probability
    and ``P2`` the conditional round-2 success probability.  The bracket is
    evaluated as ``w(j1) * (P1 - w_m(j2 - j1)) / P1**m`` with the inner
    difference summed term by term; the literal difference is still
    computed and must not be negative beyond its own rounding error.

    Raises
    ------
    ConsistencyError
        If a label is inconsistent with the branch or an eigenvalue comes
        out negative beyond ``1e-12``.
    """
    tag = _as_tag(branch)
    if tag.rounds != 2:
        raise ValueError(f"round-2 branch expected, got {tag}")
    p, m = params.p, params.m
    first_tag = tag.prefix
    first = _round1_joint(params, first_tag.last_success)
    pairs = (m - 1) ** 2
    if first == 0.0:
        return 0.0, Spectrum((), pairs)
    p2_exact = _round2_conditional_exact(p, m, first_tag.last_success)
    p2 = float(p2_exact)
    prob = p2 if tag.last_success else float(1 - p2_exact)
    if prob <= 0.0:
        return 0.0, Spectrum((), pairs)
    counts = round2_label_counts(m, first_tag.last_success)
    entries = []
    if tag.last_success:
        for j, c in round2_success_multiplicities(m, first_tag.last_success).items():
            v = _scaled_weight(p, m * m, j, first, m) / p2
            if v > 0.0:
                entries.append(SpectrumEntry(j, v, c))
    else:
        for (j1, j2), c in counts.items():
            row = j2 - j1
            if row < 0 or row % 2 != (0 if first_tag.last_success else 1):
                raise ConsistencyError(f"label {(j1, j2)} has a control row of the wrong parity")
            kept = _scaled_weight(p, m * (m - 1), j1, first, m - 1)
            literal = (kept - _scaled_weight(p, m * m, j2, first, m)) / prob
            v = kept * (_other_rows_weight(p, m, row, first_tag.last_success) / first) / prob
            # the literal difference cancels; its rounding error scales like eps * kept / prob
            slack = NEGATIVE_TOL + 8 * sys.float_info.epsilon * kept / prob
            if literal < -slack or v < -NEGATIVE_TOL:
                raise ConsistencyError(f"negative eigenvalue {v} at label {(j1, j2)} for {tag}")
            if v > 0.0:
                entries.append(SpectrumEntry((j1, j2), v, c))
    return prob, Spectrum(tuple(entries), pairs)


def round2_mixture_spectrum(params: DephasingParams, given=S1) -> Spectrum:
    """``P(s2) rho_{.s2} + P(f2) rho_{.f2}`` regrouped by kept-row error count ``j1``.

    Should equal ``m - 1`` copies of the round-1 branch state.
    """
    tag = _as_tag(given)
    m = params.m
    succ = BranchTag(tag.outcomes + (True,))
    fail = BranchTag(tag.outcomes + (False,))
    ps, spec_s = round2_spectrum(params, succ)
    pf, spec_f = round2_spectrum(params, fail)
    ds, df = spec_s.as_dict(), spec_f.as_dict()
    acc: dict = {}
    for (j1, j2), c in round2_label_counts(m, tag.last_success).items():
        v = ps * ds.get(j2, (0.0, 0))[0] + pf * df.get((j1, j2), (0.0, 0))[0]
        if j1 in acc:
            v0, c0 = acc[j1]
            if not math.isclose(v0, v, rel_tol=1e-9, abs_tol=1e-15):
                raise ConsistencyError(f"kept-row label {j1} carries two values ({v0}, {v})")
            acc[j1] = (v0, c0 + c)
        else:
            acc[j1] = (v, c)
    entries = tuple(SpectrumEntry(j, v, c) for j, (v, c) in sorted(acc.items()) if v > 0.0)
    return Spectrum(entries, (m - 1) ** 2)


def printed_label_ranges(m: int, branch) -> set:
    """Eigenvalue labels exactly as the printed range formulas list them.

    Only used for reporting against the counted labels; the printed
    two-index ranges are known to be neither complete nor tight.
    """
    tag = _as_tag(branch)
    key = str(tag)
    if key == "s1s2":
        if m % 2:
            return {0, *range(4, m * (m - 1) + 1, 2)}
        return {0, *range(4, m * m - 4 + 1, 2), m * m}
    if key == "f1s2":
        hi = m * (m - 1) if m % 2 == 0 else m * (m - 1) + 1
        return set(range(m, hi + 1, 2))
    if key == "s1f2":
        labels = {(0, 0), (2, 4)}
        if m % 2 == 0:
            for j1 in range(4, m * (m - 1) - 2, 2):
                labels |= {(j1, j1), (j1, j1 + 2), (j1, j1 + 4)}
            j1 = m * (m - 1) - 2
            labels |= {(j1, j1), (j1, j1 + 2), (m * (m - 1), m * m)}
        else:
            for j1 in range(4, (m - 1) ** 2, 2):
                labels |= {(j1, j1), (j1, j1 + 2), (j1, j1 + 4)}
            j1 = (m - 1) ** 2
            labels |= {(j1, j2) for j2 in range(j1, m * (m - 1) + 1, 2)}
        return labels
    if key == "f1f2":
        labels = set()
        if m % 2 == 0:
            for j1 in range(m - 1, (m - 1) ** 2 + 1, 2):
                labels |= {(j1, j2) for j2 in range(j1 + 1, j1 + m, 2)}
        else:
            for j1 in range(m - 1, m * (m - 1) + 1, 2):
                labels |= {(j1, j2) for j2 in range(j1 + 1, j1 + m + 1, 2)}
        return labels
    raise ValueError(f"no printed range for branch {tag}")


def counted_labels(m: int, branch) -> set:
    tag = _as_tag(branch)
    counts = round2_label_counts(m, tag.outcomes[0])
    if tag.last_success:
        return {j2 for _, j2 in counts}
    return set(counts)


def branch_spectrum(params: DephasingParams, branch) -> tuple:
    """Dispatch to the round-1 or round-2 closed form by tag length."""
    tag = _as_tag(branch)
    if tag.rounds == 1:
        return round1_spectrum(params, tag)
    if tag.rounds == 2:
        return round2_spectrum(params, tag)
    raise ValueError("closed forms exist for rounds 1 and 2 only")
