"""Entropies, reverse coherent information and per-channel-use rates.

All rates are per channel use: a round-``n`` branch holds ``(m-1)**n``
pairs made from ``m**n`` channel uses.  Alice's marginal of every branch is
maximally mixed, so ``S(rho_A) = (m-1)**n`` and the branch RCI is
``(m-1)**n - S(rho_AB)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import core
from .core import (
    ROUND1_TAGS,
    ROUND2_TAGS,
    BranchTag,
    ConsistencyError,
    DephasingParams,
    Spectrum,
    capacity,
)

ENTROPY_NORM_TOL = 1e-10
BOUND_TOL = 1e-9


def entropy_of_spectrum(spectrum: Spectrum, tol: float = ENTROPY_NORM_TOL) -> float:
    """Von Neumann entropy ``-sum M lambda log2 lambda`` in bits."""
    if not spectrum.is_normalized(tol):
        raise ConsistencyError(f"spectrum sums to {spectrum.total()!r}, not 1")
    return 0.0 - math.fsum(e.multiplicity * core.xlog2x(e.value) for e in spectrum)


@dataclass(frozen=True)
class BranchRate:
    tag: BranchTag
    probability: float
    weight: float
    entropy: float
    alice_entropy: float

    @property
    def rci(self) -> float:
        return self.alice_entropy - self.entropy


@dataclass(frozen=True)
class RoundLedger:
    """Accounting of one round: branches, average RCI and its bounds.

    ``weight`` of a branch is the product of its conditional probabilities
    along the lineage; ``avg_rci`` is ``sum weight * rci / m**n``.
    """

    p: float
    m: int
    n: int
    branches: tuple
    avg_rci: float
    lower_bound: float
    capacity: float

    def within_bounds(self, tol: float = BOUND_TOL) -> bool:
        return self.lower_bound - tol <= self.avg_rci <= self.capacity + tol

    def rows(self) -> list:
        """One CSV row per branch plus an aggregate row."""
        out = []
        for b in self.branches:
            out.append({
                "p": self.p, "m": self.m, "n": self.n, "branch": str(b.tag),
                "probability": b.probability, "entropy": b.entropy, "rci": b.rci,
                "avg_rci": self.avg_rci, "lower_bound": self.lower_bound, "capacity": self.capacity,
            })
        out.append({
            "p": self.p, "m": self.m, "n": self.n, "branch": "all",
            "probability": math.fsum(b.weight for b in self.branches), "entropy": float("nan"),
            "rci": float("nan"), "avg_rci": self.avg_rci, "lower_bound": self.lower_bound,
            "capacity": self.capacity,
        })
        return out


CSV_COLUMNS = ("p", "m", "n", "branch", "probability", "entropy", "rci", "avg_rci", "lower_bound", "capacity")


def rci_bound(params: DephasingParams, n: int | None = None) -> tuple:
    """``(((m-1)/m)**n C, C)`` with ``C = 1 - H2(p)``."""
    n = params.n if n is None else n
    c = capacity(params.p)
    return ((params.m - 1) / params.m) ** n * c, c


def _ledger(params: DephasingParams, n: int, parts) -> RoundLedger:
    """``parts`` holds ``(tag, weight, probability, spectrum-or-entropies)`` tuples.

    The last item is either a :class:`Spectrum` or a precomputed
    ``(S(rho_AB), S(rho_A))`` pair from the dense oracle.  Unreachable
    branches carry NaN entropies and drop out of the average.
    """
    branches = []
    alice = float((params.m - 1) ** n)
    for tag, weight, prob, spec in parts:
        if weight <= 0.0:
            branches.append(BranchRate(tag, prob, 0.0, float("nan"), float("nan")))
        elif isinstance(spec, Spectrum):
            branches.append(BranchRate(tag, prob, weight, entropy_of_spectrum(spec), alice))
        else:
            branches.append(BranchRate(tag, prob, weight, spec[0], spec[1]))
    avg = math.fsum(b.weight * b.rci for b in branches if b.weight > 0.0) / params.m**n
    lower, c = rci_bound(params, n)
    return RoundLedger(params.p, params.m, n, tuple(branches), avg, lower, c)


def _dense_entropies(state) -> tuple:
    from . import densesim

    joint = densesim.von_neumann_entropy(state)
    alice = densesim.von_neumann_entropy(densesim.partial_trace(state, densesim.alice_qubits(state)))
    return joint, alice


def rci_round1(params: DephasingParams, mode: str = "closed") -> RoundLedger:
    """First-round RCI per channel use, ``[(m-1) - P_s S_s - P_f S_f] / m``.

    ``mode`` selects the route: ``"closed"`` (any ``m``), ``"enumerate"``
    (``m <= 20``) or ``"dense"`` (``m <= 6``, entropies from density
    matrices, Alice's entropy measured rather than assumed).
    """
    parts = []
    if mode == "closed":
        for tag in ROUND1_TAGS:
            prob, spec = core.round1_spectrum(params, tag)
            parts.append((tag, prob, prob, spec))
    elif mode == "enumerate":
        from .protocol import enumerate_round1

        for out in enumerate_round1(params).values():
            parts.append((out.tag, out.probability, out.probability, out.spectrum))
    elif mode == "dense":
        from .densesim import round1_dense

        for key, br in round1_dense(params.p, params.m).items():
            ent = _dense_entropies(br.state) if br.state is not None else (0.0, 0.0)
            parts.append((BranchTag.parse(key), br.probability, br.probability, ent))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _ledger(params, 1, parts)


def rci_round2(params: DephasingParams, mode: str = "closed") -> RoundLedger:
    """Second-round RCI per channel use.

    ``mode="closed"`` uses the closed-form spectra (``m <= 8``),
    ``"enumerate"`` exhaustive patterns (``m <= 4``) and ``"dense"`` the
    density-matrix oracle (``m <= 3``).
    """
    parts = []
    if mode == "closed":
        first = {t: core.round1_spectrum(params, t)[0] for t in ROUND1_TAGS}
        for tag in ROUND2_TAGS:
            prob, spec = core.round2_spectrum(params, tag)
            parts.append((tag, first[tag.prefix] * prob, prob, spec))
    elif mode == "enumerate":
        from .protocol import enumerate_round1, enumerate_round2

        first = {k: v.probability for k, v in enumerate_round1(params).items()}
        for key, out in enumerate_round2(params).items():
            parts.append((out.tag, first[key[:2]] * out.probability, out.probability, out.spectrum))
    elif mode == "dense":
        from .densesim import round1_dense, round2_dense

        first = {k: v.probability for k, v in round1_dense(params.p, params.m).items()}
        for head in ("s1", "f1"):
            for key, br in round2_dense(params.p, params.m, head).items():
                ent = _dense_entropies(br.state) if br.state is not None else (0.0, 0.0)
                parts.append((BranchTag.parse(key), first[head] * br.probability, br.probability, ent))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _ledger(params, 2, parts)


def rci_round_n(params: DephasingParams, n: int | None = None) -> RoundLedger:
    """Round-``n`` RCI from exhaustive lineage enumeration (``m**n <= 24``)."""
    from .protocol import enumerate_rounds

    n = params.n if n is None else n
    reports = enumerate_rounds(params, n, mode="exhaustive")
    cond = [r.outcomes for r in reports]
    parts = []
    for key, out in cond[-1].items():
        weight = 1.0
        for r in range(1, n + 1):
            weight *= cond[r - 1][key[: 2 * r]].probability
        parts.append((out.tag, weight, out.probability, out.spectrum))
    return _ledger(params, n, parts)


def round_ledger(params: DephasingParams, n: int | None = None, mode: str = "closed") -> RoundLedger:
    n = params.n if n is None else n
    if n == 1:
        return rci_round1(params, mode)
    if n == 2:
        return rci_round2(params, mode)
    return rci_round_n(params, n)


def mixture_identity_gap(params: DephasingParams) -> float:
    """``(1/m)[(m-1) - S(P_s rho_s + P_f rho_f)] - ((m-1)/m) C``; zero in exact arithmetic."""
    mix = core.round1_mixture_spectrum(params)
    m = params.m
    return ((m - 1) - entropy_of_spectrum(mix)) / m - (m - 1) / m * capacity(params.p)


def concavity_gap(params: DephasingParams) -> float:
    """``S(mixture) - P_s S_s - P_f S_f``; nonnegative by concavity."""
    mix = entropy_of_spectrum(core.round1_mixture_spectrum(params))
    parts = 0.0
    for tag in ROUND1_TAGS:
        prob, spec = core.round1_spectrum(params, tag)
        if prob > 0.0:
            parts += prob * entropy_of_spectrum(spec)
    return mix - parts


@dataclass(frozen=True)
class AlternativeComparison:
    p: float
    m: int
    round: int
    alternative: float
    actual: float

    @property
    def difference(self) -> float:
        return self.actual - self.alternative


def alternative_vs_actual_rci(params: DephasingParams, round: int = 1) -> AlternativeComparison:
    """RCI of the all-success state against i.i.d. copies of restarted reduced pairs.

    The alternative uses ``(m-1)**round`` pairs dephased with the map's
    ``p_round``; the actual value is ``(m-1)**round - S`` of the
    high-dimensional success state.
    """
    from .purify_map import iterate_map

    if round not in (1, 2):
        raise ValueError("comparison is defined for rounds 1 and 2")
    pairs = (params.m - 1) ** round
    p_r = iterate_map(params.p, params.m, round).p_sequence[-1]
    alternative = pairs * capacity(min(p_r, 0.5))
    tag = core.S1 if round == 1 else core.S1S2
    _, spec = core.branch_spectrum(params, tag)
    actual = pairs - entropy_of_spectrum(spec)
    return AlternativeComparison(params.p, params.m, round, alternative, actual)
