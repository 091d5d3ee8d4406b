"""Classical error-pattern engine for the recursive protocol.

Every pair carries a phi- flag.  A bilateral CNOT leaves the target's flag
alone and XORs it into the control, so the measured control of a group
reports the parity of the group.  Pairs are indexed by base-``m`` digits
``i = d1 + m d2 + m**2 d3 + ...``: round ``r`` groups the pairs that agree
on every digit except ``d_r`` (only pairs with ``d_k < m - 1`` for
``k < r`` are still present) and uses ``d_r = m - 1`` as the control.  A
level-``r`` unit succeeds when all of its round-``r`` groups are even.

A lineage such as ``s1f2`` requires every level-``k`` unit to show the
``k``-th outcome; mixed groups are discarded.  Exhaustive mode counts the
patterns of each ``(lineage, survivors, total weight)`` class exactly and
applies ``p`` only when evaluating, so reductions are order-independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    BranchTag,
    ConsistencyError,
    DephasingParams,
    DomainError,
    Spectrum,
    SpectrumEntry,
    printed_label_ranges,
    pattern_weight,
)

MAX_ROUND1_M = 20
MAX_EXHAUSTIVE_BITS = 24
CHUNK = 1 << 16


@dataclass(frozen=True)
class ErrorPattern:
    """Phi- flags on ``k`` pairs (``1`` marks phi-)."""

    flags: tuple

    @classmethod
    def from_int(cls, value: int, size: int) -> "ErrorPattern":
        return cls(tuple((value >> i) & 1 for i in range(size)))

    @property
    def size(self) -> int:
        return len(self.flags)

    @property
    def weight(self) -> int:
        return sum(self.flags)

    def probability(self, p: float) -> float:
        return pattern_weight(p, self.size, self.weight)


@dataclass(frozen=True)
class BranchOutcome:
    """Conditional state of one lineage.

    ``probability`` is conditioned on all sub-units sharing the earlier
    outcomes; ``joint`` is the unconditional probability that one unit
    shows the whole lineage.  ``stderr`` is set in Monte Carlo mode, where
    ``spectrum`` is ``None``.
    """

    tag: BranchTag
    probability: float
    spectrum: Spectrum | None
    reduced_pair_fidelity: float
    joint: float = float("nan")
    stderr: dict | None = None
    slot_fidelities: tuple = field(default=(), repr=False)


def truth_table(m: int) -> list:
    """Round-1 flags before and after the circuit for all ``2**m`` inputs.

    Rows are ``(input_flags, output_flags, success)``; the last pair is the
    control and ends up holding the block parity.
    """
    rows = []
    for v in range(1 << m):
        flags = ErrorPattern.from_int(v, m).flags
        out = list(flags)
        for t in range(m - 1):
            out[m - 1] ^= out[t]
        rows.append((flags, tuple(out), out[m - 1] == 0))
    return rows


# --- classification ---------------------------------------------------------------


def _bits_of(indices: np.ndarray, nbits: int) -> np.ndarray:
    return ((indices[:, None] >> np.arange(nbits, dtype=np.int64)) & 1).astype(np.uint8)


def classify(bits: np.ndarray, m: int, rounds: int) -> tuple:
    """Per-level outcomes and survivors of a batch of flag patterns.

    Parameters
    ----------
    bits : ndarray, shape (N, m**rounds)
        Flags with pair ``i`` in column ``i``.

    Returns
    -------
    codes : ndarray, shape (N, rounds)
        ``1`` if every unit of that level succeeded, ``0`` if every unit
        failed, ``-1`` if the level is mixed.
    survivors : ndarray, shape (N, (m-1)**rounds)
        Flags of the pairs left after all rounds, lowest digits fastest.
    """
    n = bits.shape[0]
    cur = bits.reshape((n,) + (m,) * rounds + (1,))
    codes = np.empty((n, rounds), dtype=np.int8)
    for k in range(rounds):
        parity = cur.sum(axis=-2, dtype=np.int64) % 2
        unit_ok = (parity == 0).all(axis=-1).reshape(n, -1)
        codes[:, k] = np.where(unit_ok.all(axis=1), 1, np.where(unit_ok.any(axis=1), -1, 0))
        lead = cur.shape[1:-2]
        cur = cur[..., : m - 1, :].reshape((n,) + lead + (-1,))
    return codes, cur.reshape(n, -1)


def _lineage_code(codes: np.ndarray, upto: int) -> np.ndarray:
    """Integer lineage id over the first ``upto`` levels, ``-1`` if any is mixed."""
    sub = codes[:, :upto].astype(np.int64)
    ok = (sub >= 0).all(axis=1)
    val = (sub * (1 << np.arange(upto, dtype=np.int64))).sum(axis=1) if upto else np.zeros(len(sub), np.int64)
    return np.where(ok, val, -1)


def _tag_of(code: int, rounds: int) -> BranchTag:
    return BranchTag(tuple(bool((code >> k) & 1) for k in range(rounds)))


def _code_of(tag: BranchTag) -> int:
    return sum(1 << k for k, o in enumerate(tag.outcomes) if o)


# --- exhaustive engine ---------------------------------------------------------


@dataclass
class PatternTable:
    """Exact pattern counts for one block of ``m**rounds`` pairs.

    ``rows[code]`` holds sorted arrays ``(survivor, j, count)``: how many
    full patterns with lineage ``code``, survivor flags ``survivor`` (an
    integer, bit ``s`` for survivor slot ``s``) and total weight ``j``
    exist.  ``prefix[code]`` maps ``j`` to the number of patterns whose
    first ``rounds - 1`` levels show lineage ``code``.
    """

    m: int
    rounds: int
    rows: dict
    prefix: dict

    @property
    def bits(self) -> int:
        return self.m**self.rounds

    @property
    def survivor_bits(self) -> int:
        return (self.m - 1) ** self.rounds


def _sum_by(inv: np.ndarray, counts: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size, dtype=np.int64)
    np.add.at(out, inv, counts)
    return out


def build_table(m: int, rounds: int) -> PatternTable:
    """Enumerate every flag pattern of one level-``rounds`` unit."""
    nbits = m**rounds
    if nbits > MAX_EXHAUSTIVE_BITS:
        raise DomainError(f"{nbits} pairs exceed the exhaustive limit of {MAX_EXHAUSTIVE_BITS}")
    sbits = (m - 1) ** rounds
    jw = nbits + 1
    sweights = (1 << np.arange(sbits, dtype=np.int64))
    key_parts, prefix_parts = [], []
    total = 1 << nbits
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
        bits = _bits_of(idx, nbits)
        codes, surv = classify(bits, m, rounds)
        j = bits.sum(axis=1, dtype=np.int64)
        full = _lineage_code(codes, rounds)
        pre = _lineage_code(codes, rounds - 1)
        sidx = surv.astype(np.int64) @ sweights
        keep = full >= 0
        keys = (full[keep] * (1 << sbits) + sidx[keep]) * jw + j[keep]
        uk, cnt = np.unique(keys, return_counts=True)
        key_parts.append((uk, cnt.astype(np.int64)))
        pk = pre >= 0
        pkeys = pre[pk] * jw + j[pk]
        uk, cnt = np.unique(pkeys, return_counts=True)
        prefix_parts.append((uk, cnt.astype(np.int64)))
    rows = {}
    keys = np.concatenate([k for k, _ in key_parts])
    cnts = np.concatenate([c for _, c in key_parts])
    uk, inv = np.unique(keys, return_inverse=True)
    tot = _sum_by(inv, cnts, len(uk))
    codes = uk // ((1 << sbits) * jw)
    rem = uk % ((1 << sbits) * jw)
    for code in np.unique(codes):
        sel = codes == code
        rows[int(code)] = (rem[sel] // jw, rem[sel] % jw, tot[sel])
    prefix = {}
    pkeys = np.concatenate([k for k, _ in prefix_parts])
    pcnts = np.concatenate([c for _, c in prefix_parts])
    uk, inv = np.unique(pkeys, return_inverse=True)
    tot = _sum_by(inv, pcnts, len(uk))
    for code in np.unique(uk // jw):
        sel = (uk // jw) == code
        prefix[int(code)] = dict(zip((uk[sel] % jw).tolist(), tot[sel].tolist()))
    return PatternTable(m, rounds, rows, prefix)


_TABLES: dict = {}


def pattern_table(m: int, rounds: int) -> PatternTable:
    key = (m, rounds)
    if key not in _TABLES:
        _TABLES[key] = build_table(m, rounds)
    return _TABLES[key]


def _round2_label(survivor: int, m: int, first_success: bool) -> tuple:
    """``(j1, j2)`` of a surviving ``(m-1) x (m-1)`` block.

    ``j1`` counts the kept rows completed with their forced last column;
    ``j2`` adds the control row that would make every column even.
    """
    k = m - 1
    grid = [[(survivor >> (r * k + c)) & 1 for c in range(k)] for r in range(k)]
    fix = 0 if first_success else 1
    j1 = 0
    for row in grid:
        j1 += sum(row) + ((sum(row) + fix) % 2)
    control = [sum(grid[r][c] for r in range(k)) % 2 for c in range(k)]
    control_weight = sum(control) + ((sum(control) + fix) % 2)
    return j1, j1 + control_weight


def _evaluate(table: PatternTable, p: float, tag: BranchTag) -> BranchOutcome:
    m, rounds = table.m, table.rounds
    code = _code_of(tag)
    weights = np.array([pattern_weight(p, table.bits, j) for j in range(table.bits + 1)])
    prefix_code = code & ((1 << (rounds - 1)) - 1)
    if rounds == 1:
        denom = 1.0
    else:
        pre = table.prefix.get(prefix_code, {})
        denom = math.fsum(c * weights[j] for j, c in pre.items())
    nsurv = table.survivor_bits
    empty = BranchOutcome(tag, 0.0, Spectrum((), nsurv), float("nan"), 0.0)
    if code not in table.rows or denom <= 0.0:
        return empty
    surv, jj, cnt = table.rows[code]
    contrib = cnt.astype(float) * weights[jj]
    joint = math.fsum(contrib.tolist())
    if joint <= 0.0:
        return empty
    starts = np.flatnonzero(np.r_[True, surv[1:] != surv[:-1]])
    ids = surv[starts]
    values = np.add.reduceat(contrib, starts) / joint
    bounds = np.r_[starts, len(surv)]
    single = all(bounds[i + 1] - bounds[i] == 1 and cnt[bounds[i]] == 1 for i in range(len(ids)))

    groups: dict = {}
    for i, sid in enumerate(ids.tolist()):
        lo, hi = bounds[i], bounds[i + 1]
        signature = tuple(zip(jj[lo:hi].tolist(), cnt[lo:hi].tolist()))
        if rounds == 2 and not tag.last_success:
            label = _round2_label(sid, m, tag.outcomes[0])
        elif rounds <= 2:
            if not single:
                raise ConsistencyError(f"survivor {sid} of {tag} has several completions")
            label = int(jj[lo])
            if rounds == 2 and _round2_label(sid, m, tag.outcomes[0])[1] != label:
                raise ConsistencyError(f"completion weight {label} of {tag} differs from the forced label")
        else:
            label = signature
        if label in groups:
            if groups[label][0] != signature:
                raise ConsistencyError(f"label {label} groups survivors with different weights")
            groups[label][2] += 1
        else:
            groups[label] = [signature, float(values[i]), 1]
    entries = tuple(
        SpectrumEntry(label, v, mult)
        for label, (_, v, mult) in sorted(groups.items(), key=lambda kv: _label_key(kv[0]))
        if v > 0.0
    )
    slot = []
    for s in range(min(nsurv, 62)):
        clear = ((ids >> s) & 1) == 0
        slot.append(math.fsum(values[clear].tolist()))
    cond = joint / denom
    return BranchOutcome(
        tag, cond, Spectrum(entries, nsurv), slot[0], joint, None, tuple(slot)
    )


def _label_key(label):
    if isinstance(label, int):
        return (0, (label,))
    if label and isinstance(label[0], tuple):
        return (2, label)
    return (1, tuple(label))


def _check_params(params: DephasingParams) -> DephasingParams:
    if not isinstance(params, DephasingParams):
        raise TypeError("expected DephasingParams")
    return params


def enumerate_lineages(params: DephasingParams, rounds: int) -> dict:
    """Exhaustive outcomes of every ``rounds``-long lineage, keyed by tag string."""
    params = _check_params(params)
    table = pattern_table(params.m, rounds)
    return {
        str(tag): _evaluate(table, params.p, tag)
        for tag in sorted((_tag_of(c, rounds) for c in range(1 << rounds)), key=_tag_order)
    }


def _tag_order(tag: BranchTag):
    return tuple(not o for o in tag.outcomes)


def enumerate_round1(params: DephasingParams) -> dict:
    """Exhaustive first round: ``{"s1": ..., "f1": ...}``."""
    if params.m > MAX_ROUND1_M:
        raise DomainError(f"round-1 enumeration supports m <= {MAX_ROUND1_M}")
    return enumerate_lineages(params, 1)


def enumerate_round2(params: DephasingParams, mode: str = "exhaustive", seed=None, samples: int = 10**6) -> dict:
    """Second round for all four lineages.

    ``mode="exhaustive"`` needs ``m*m <= 20``; ``"montecarlo"`` samples
    patterns with a required seed and reports standard errors.
    """
    if mode == "exhaustive":
        if params.m**2 > 20:
            raise DomainError(f"exhaustive round 2 needs m*m <= 20, got m={params.m}")
        return enumerate_lineages(params, 2)
    if mode == "montecarlo":
        return sample_lineages(params, 2, seed, samples)
    raise ValueError(f"unknown mode {mode!r}")


# --- Monte Carlo ----------------------------------------------------------------


def sample_lineages(params: DephasingParams, rounds: int, seed, samples: int, chunk: int = 1 << 17) -> dict:
    """Monte Carlo estimate of every lineage of a level-``rounds`` unit.

    Conditional probabilities are estimated as ``N(lineage) / N(prefix)``
    and fidelities as the fraction of accepted samples whose first survivor
    is clean; each comes with a binomial standard error.
    """
    if seed is None:
        raise ValueError("Monte Carlo mode requires a seed")
    m, p = params.m, params.p
    nbits = m**rounds
    rng = np.random.default_rng(seed)
    n_full = np.zeros(1 << rounds, dtype=np.int64)
    n_clean = np.zeros(1 << rounds, dtype=np.int64)
    n_prefix = np.zeros(max(1, 1 << (rounds - 1)), dtype=np.int64)
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        bits = (rng.random((size, nbits)) < p).astype(np.uint8)
        codes, surv = classify(bits, m, rounds)
        full = _lineage_code(codes, rounds)
        pre = _lineage_code(codes, rounds - 1)
        ok = full >= 0
        n_full += np.bincount(full[ok], minlength=1 << rounds)
        n_clean += np.bincount(full[ok & (surv[:, 0] == 0)], minlength=1 << rounds)
        n_prefix += np.bincount(pre[pre >= 0], minlength=len(n_prefix))
        done += size
    out = {}
    for code in sorted(range(1 << rounds), key=lambda c: _tag_order(_tag_of(c, rounds))):
        tag = _tag_of(code, rounds)
        den = n_prefix[code & ((1 << (rounds - 1)) - 1)] if rounds > 1 else samples
        prob = n_full[code] / den if den else float("nan")
        fid = n_clean[code] / n_full[code] if n_full[code] else float("nan")
        err = {
            "probability": math.sqrt(prob * (1 - prob) / den) if den else float("nan"),
            "reduced_pair_fidelity": math.sqrt(fid * (1 - fid) / n_full[code]) if n_full[code] else float("nan"),
            "accepted": int(n_full[code]),
            "samples": int(samples),
        }
        out[str(tag)] = BranchOutcome(tag, float(prob), None, float(fid), float("nan"), err)
    return out


# --- multi-round driver ------------------------------------------------------


@dataclass(frozen=True)
class RoundReport:
    """Outcomes of one round plus the all-success lineage summary."""

    round: int
    outcomes: dict
    lineage_probability: float
    lineage_fidelity: float
    mode: str
    stderr: float = 0.0


def enumerate_rounds(params: DephasingParams, n: int | None = None, mode: str = "auto",
                     seed=None, samples: int = 10**6) -> list:
    """Per-round lineage outcomes for rounds ``1..n``.

    ``mode`` is ``"exhaustive"`` (requires ``m**r <= 24``), ``"montecarlo"``
    (requires a seed) or ``"auto"``, which switches to Monte Carlo for the
    rounds that are too large and raises if no seed was given.
    """
    n = params.n if n is None else n
    m = params.m
    if mode not in ("auto", "exhaustive", "montecarlo"):
        raise ValueError(f"unknown mode {mode!r}")
    plan = []
    for r in range(1, n + 1):
        small = m**r <= MAX_EXHAUSTIVE_BITS
        if mode == "exhaustive" and not small:
            raise DomainError(f"round {r} needs {m**r} pairs; exhaustive limit is {MAX_EXHAUSTIVE_BITS}")
        use = "exhaustive" if (mode == "exhaustive" or (mode == "auto" and small)) else "montecarlo"
        if use == "montecarlo" and seed is None:
            raise ValueError(f"round {r} needs Monte Carlo sampling; pass a seed")
        plan.append(use)
    reports = []
    for r, use in enumerate(plan, start=1):
        if use == "exhaustive":
            outs = enumerate_lineages(params, r)
            err = 0.0
        else:
            outs = sample_lineages(params, r, None if seed is None else [seed, r], samples)
        lead = outs["".join(f"s{k}" for k in range(1, r + 1))]
        if use == "montecarlo":
            err = lead.stderr["reduced_pair_fidelity"]
        reports.append(RoundReport(r, outs, lead.probability, lead.reduced_pair_fidelity, use, err))
    return reports


# --- reporting ---------------------------------------------------------------------


def observed_labels(m: int, branch) -> set:
    """Spectrum labels found by exhaustive enumeration (any ``p`` in ``(0, 1/2)``)."""
    tag = BranchTag.parse(branch) if isinstance(branch, str) else branch
    out = enumerate_lineages(DephasingParams(0.1, m), tag.rounds)[str(tag)]
    return {e.label for e in out.spectrum}


def label_range_report(m: int, counted=None) -> dict:
    """Compare printed round-2 label ranges with the labels that occur.

    Returns ``{branch: {"missing": [...], "extra": [...]}}``: ``missing``
    labels occur but are not printed, ``extra`` labels are printed but
    never occur.  ``counted`` supplies the occurring labels per branch
    (defaults to exhaustive enumeration, so ``m <= 4``).
    """
    report = {}
    for tag in ("s1s2", "s1f2", "f1s2", "f1f2"):
        seen = counted(m, tag) if counted else observed_labels(m, tag)
        printed = printed_label_ranges(m, tag)
        report[tag] = {
            "missing": sorted(seen - printed, key=_label_key),
            "extra": sorted(printed - seen, key=_label_key),
        }
    return report


def _json_label(label):
    if isinstance(label, (int, np.integer)):
        return int(label)
    return [_json_label(x) for x in label]


def branch_record(outcome: BranchOutcome) -> dict:
    """JSON-ready record ``{tag, probability, spectrum, fidelity}``."""
    rec = {
        "tag": str(outcome.tag),
        "probability": outcome.probability,
        "spectrum": None,
        "fidelity": outcome.reduced_pair_fidelity,
    }
    if outcome.spectrum is not None:
        rec["spectrum"] = [
            {"label": _json_label(e.label), "value": e.value, "multiplicity": e.multiplicity}
            for e in outcome.spectrum
        ]
    if outcome.stderr is not None:
        rec["stderr"] = outcome.stderr
    return rec
