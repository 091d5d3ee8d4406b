"""Named cross-checks between closed forms, the enumeration engine and the
dense oracle.  ``run_checks`` returns a machine-readable report; the CLI's
``verify`` subcommand exits nonzero when any non-informational check fails.
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np

from . import core, densesim, protocol, purify_map, rates
from .core import ROUND1_TAGS, ROUND2_TAGS, DephasingParams


@dataclass(frozen=True)
class Grid:
    p_values: tuple
    m_values: tuple
    dense_m: tuple
    enum_round1_m: tuple
    enum_round2_m: tuple
    dense_round2_m: tuple
    mc_samples: int


GRIDS = {
    "default": Grid(
        p_values=tuple(round(0.05 * k, 2) for k in range(11)),
        m_values=(2, 3, 4, 5, 6),
        dense_m=(2, 3, 4, 5),
        enum_round1_m=tuple(range(2, 13)),
        enum_round2_m=(2, 3, 4),
        dense_round2_m=(2, 3),
        mc_samples=10**6,
    ),
    "quick": Grid(
        p_values=(0.0, 0.1, 0.3, 0.5),
        m_values=(2, 3, 4),
        dense_m=(2, 3),
        enum_round1_m=(2, 3, 4, 5),
        enum_round2_m=(2, 3),
        dense_round2_m=(2,),
        mc_samples=2 * 10**5,
    ),
}

_CHECKS: list = []


def check(name: str, module: str, informational: bool = False):
    def deco(fn):
        _CHECKS.append((name, module, informational, fn))
        return fn
    return deco


def _interior(grid: Grid) -> list:
    return [p for p in grid.p_values if 0.0 < p < 0.5]


def _spectra_close(a: core.Spectrum, b: core.Spectrum, tol: float) -> float:
    da, db = a.as_dict(), b.as_dict()
    if set(da) != set(db):
        return math.inf
    worst = 0.0
    for k, (v, mult) in da.items():
        if mult != db[k][1]:
            return math.inf
        worst = max(worst, abs(v - db[k][0]))
    return worst


# --- core -----------------------------------------------------------------


@check("spectra_normalized", "core")
def _normalized(grid):
    worst = 0.0
    for m in grid.m_values:
        for p in grid.p_values:
            params = DephasingParams(p, m)
            for tag in ROUND1_TAGS + ROUND2_TAGS:
                prob, spec = core.branch_spectrum(params, tag)
                if prob > 0.0:
                    worst = max(worst, abs(spec.total() - 1.0))
    return worst <= 1e-12, {"max_error": worst}


@check("branch_completeness", "core")
def _complete(grid):
    worst = 0.0
    for m in grid.m_values:
        for p in grid.p_values:
            params = DephasingParams(p, m)
            ps = [core.branch_spectrum(params, t)[0] for t in ROUND1_TAGS]
            worst = max(worst, abs(sum(ps) - 1.0))
            for head in ROUND1_TAGS:
                if core.branch_spectrum(params, head)[0] == 0.0:
                    continue
                pr = [core.round2_spectrum(params, t)[0] for t in ROUND2_TAGS if t.prefix == head]
                worst = max(worst, abs(sum(pr) - 1.0))
    return worst <= 1e-12, {"max_error": worst}


@check("mixture_reconstructs_copies", "core")
def _mixture(grid):
    worst = 0.0
    for m in grid.m_values:
        for p in grid.p_values:
            params = DephasingParams(p, m)
            worst = max(worst, _spectra_close(core.round1_mixture_spectrum(params), core.copies_spectrum(p, m - 1), 0))
            for head in ROUND1_TAGS:
                prob, spec = core.round1_spectrum(params, head)
                if prob == 0.0:
                    continue
                target = core.tensor_power(spec, m - 1)
                worst = max(worst, _spectra_close(core.round2_mixture_spectrum(params, head), target, 0))
    return worst <= 1e-12, {"max_error": worst}


@check("success_probability_monotone", "core")
def _monotone(grid):
    ok = True
    ps = np.linspace(0, 0.5, 101)
    for m in grid.m_values:
        vals = [core.round1_success_probability(p, m) for p in ps]
        ok &= all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
    for p in _interior(grid):
        vals = [core.round1_success_probability(p, m) for m in range(2, 31)]
        ok &= all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
    return bool(ok), {}


@check("fully_dephased_uniform", "core")
def _uniform(grid):
    worst = 0.0
    for m in grid.m_values:
        params = DephasingParams(0.5, m)
        for tag in ROUND1_TAGS:
            prob, spec = core.round1_spectrum(params, tag)
            worst = max(worst, abs(prob - 0.5))
        for tag in ROUND1_TAGS + ROUND2_TAGS:
            prob, spec = core.branch_spectrum(params, tag)
            vals = [e.value for e in spec]
            if vals:
                worst = max(worst, max(vals) - min(vals), abs(sum(e.multiplicity for e in spec) * vals[0] - 1.0))
    return worst <= 1e-12, {"max_error": worst}


@check("round2_probability_two_routes", "core")
def _two_routes(grid):
    worst = 0.0
    for m in grid.m_values:
        for p in grid.p_values:
            params = DephasingParams(p, m)
            for head in ROUND1_TAGS:
                a = core.round2_success_probability(params, head)
                b = core.round2_success_probability_from_multiplicities(params, head)
                worst = max(worst, abs(a - b))
    return worst <= 1e-12, {"max_error": worst}


# --- densesim --------------------------------------------------------------


@check("dense_round1_matches_closed_form", "densesim")
def _dense1(grid):
    worst = 0.0
    for m in grid.dense_m:
        for p in (0.0, 0.1, 0.3, 0.5):
            params = DephasingParams(p, m)
            dense = densesim.round1_dense(p, m)
            for tag in ROUND1_TAGS:
                prob, spec = core.round1_spectrum(params, tag)
                br = dense[str(tag)]
                worst = max(worst, abs(prob - br.probability))
                if prob > 0.0:
                    worst = max(worst, densesim.spectrum_gap(spec, br.state))
    return worst <= 1e-10, {"max_error": worst}


@check("dense_round2_matches_closed_form", "densesim")
def _dense2(grid):
    worst = 0.0
    for m in grid.dense_round2_m:
        for p in (0.1, 0.3):
            params = DephasingParams(p, m)
            for head in ("s1", "f1"):
                dense = densesim.round2_dense(p, m, head)
                for key, br in dense.items():
                    prob, spec = core.round2_spectrum(params, key)
                    worst = max(worst, abs(prob - br.probability))
                    if prob > 0.0:
                        worst = max(worst, densesim.spectrum_gap(spec, br.state))
    return worst <= 1e-10, {"max_error": worst}


@check("dense_states_physical", "densesim")
def _physical(grid):
    ok = True
    for m in grid.dense_m:
        for p in (0.0, 0.1, 0.5):
            ok &= densesim.prepare_and_dephase(m, p).is_physical()
            for br in densesim.round1_dense(p, m).values():
                if br.state is not None:
                    ok &= br.state.is_physical() and densesim.is_bell_diagonal(br.state, 1e-10)
    return bool(ok), {}


@check("x_parity_law", "densesim")
def _parity(grid):
    ok = True
    for m in (2, 3, 4):
        for flags, _, success in protocol.truth_table(m):
            state = densesim.apply_circuit(densesim.bell_product_state(flags), densesim.round1_gates(m))
            brs = {b.outcome: b.probability for b in densesim.measure_pair_x(state, m - 1)}
            even = brs["++"] + brs["--"]
            ok &= abs(even - (1.0 if sum(flags) % 2 == 0 else 0.0)) <= 1e-12
            ok &= success == (sum(flags) % 2 == 0)
    return bool(ok), {}


@check("bsm_ineffective", "densesim")
def _bsm(grid):
    worst = 0.0
    for p in grid.p_values:
        branches, avg = densesim.bsm_swap(p)
        worst = max(worst, abs(avg - core.capacity(p)))
        for br in branches:
            worst = max(worst, abs(br.probability - 0.25))
            worst = max(worst, abs(densesim.max_offdiagonal(br.state) - 0.5 * (1 - 2 * p)))
    return worst <= 1e-12, {"max_error": worst}


# --- protocol --------------------------------------------------------------


@check("truth_table_parity", "protocol")
def _truth(grid):
    ok = True
    for m in range(2, 9):
        for flags, out, success in protocol.truth_table(m):
            ok &= out[:-1] == flags[:-1] and out[-1] == sum(flags) % 2 and success == (out[-1] == 0)
        bits = protocol._bits_of(np.arange(1 << m, dtype=np.int64), m)
        codes, _ = protocol.classify(bits, m, 1)
        ok &= bool(np.all(codes[:, 0] == (bits.sum(axis=1) % 2 == 0)))
    return bool(ok), {}


@check("enumeration_round1_matches_closed_form", "protocol")
def _enum1(grid):
    worst = 0.0
    for m in grid.enum_round1_m:
        for p in grid.p_values:
            params = DephasingParams(p, m)
            for key, out in protocol.enumerate_round1(params).items():
                prob, spec = core.round1_spectrum(params, key)
                worst = max(worst, abs(prob - out.probability))
                if prob > 0.0:
                    worst = max(worst, _spectra_close(spec, out.spectrum, 0))
    return worst <= 1e-10, {"max_error": worst}


@check("enumeration_round2_matches_closed_form", "protocol")
def _enum2(grid):
    worst = 0.0
    for m in grid.enum_round2_m:
        for p in grid.p_values:
            params = DephasingParams(p, m)
            for key, out in protocol.enumerate_round2(params).items():
                prob, spec = core.round2_spectrum(params, key)
                worst = max(worst, abs(prob - out.probability))
                if prob > 0.0:
                    worst = max(worst, _spectra_close(spec, out.spectrum, 0))
    return worst <= 1e-12, {"max_error": worst}


@check("enumeration_conserves_copies", "protocol")
def _conserve(grid):
    worst = 0.0
    for m in grid.enum_round2_m:
        for p in _interior(grid):
            params = DephasingParams(p, m)
            r1 = protocol.enumerate_round1(params)
            r2 = protocol.enumerate_round2(params)
            for head in ("s1", "f1"):
                target = core.tensor_power(r1[head].spectrum, m - 1)
                succ, fail = r2[head + "s2"], r2[head + "f2"]
                mix = core.Spectrum(tuple(
                    core.SpectrumEntry(j1, v, c) for j1, (v, c) in _regroup(succ, fail, m, head == "s1").items()
                ), (m - 1) ** 2)
                worst = max(worst, _spectra_close(mix, target, 0))
    return worst <= 1e-12, {"max_error": worst}


def _regroup(succ, fail, m, first_success):
    ds, df = succ.spectrum.as_dict(), fail.spectrum.as_dict()
    out: dict = {}
    for (j1, j2), c in core.round2_label_counts(m, first_success).items():
        v = succ.probability * ds.get(j2, (0.0, 0))[0] + fail.probability * df.get((j1, j2), (0.0, 0))[0]
        v0, c0 = out.get(j1, (v, 0))
        if abs(v0 - v) > 1e-12:
            v0 = math.inf
        out[j1] = (v0, c0 + c)
    return dict(sorted(out.items()))


@check("montecarlo_matches_exhaustive", "protocol")
def _mc(grid):
    params = DephasingParams(0.1, 3)
    exact = protocol.enumerate_round2(params)
    sampled = protocol.sample_lineages(params, 2, seed=12345, samples=grid.mc_samples)
    worst = 0.0
    for key, out in exact.items():
        s = sampled[key]
        z = abs(s.probability - out.probability) / s.stderr["probability"]
        worst = max(worst, z)
    return worst <= 4.0, {"max_z": worst}


@check("success_fidelity_increases", "protocol")
def _fid_order(grid):
    ok = True
    for m in (2, 3, 4):
        for p in _interior(grid):
            f1 = protocol.enumerate_round1(DephasingParams(p, m))["s1"].reduced_pair_fidelity
            f2 = protocol.enumerate_round2(DephasingParams(p, m))["s1s2"].reduced_pair_fidelity
            ok &= (1 - p) <= f1 <= f2
    return bool(ok), {}


@check("surviving_slots_symmetric", "protocol")
def _slots(grid):
    worst = 0.0
    for m in grid.enum_round2_m:
        out = protocol.enumerate_round2(DephasingParams(0.1, m))
        for b in out.values():
            worst = max(worst, max(b.slot_fidelities) - min(b.slot_fidelities))
    return worst <= 1e-12, {"max_spread": worst}


@check("printed_label_ranges", "protocol", informational=True)
def _ranges(grid):
    report = {m: protocol.label_range_report(m) for m in grid.enum_round2_m}
    clean = all(not v["missing"] and not v["extra"] for r in report.values() for v in r.values())
    return clean, {str(m): {k: {kk: [list(x) if isinstance(x, tuple) else x for x in vv] for kk, vv in v.items()}
                            for k, v in r.items()} for m, r in report.items()}


# --- rates ------------------------------------------------------------------


@check("rci_bound_chain", "rates")
def _bounds(grid):
    ok = True
    for m in grid.m_values:
        for p in grid.p_values:
            params = DephasingParams(p, m)
            ok &= rates.rci_round1(params).within_bounds() and rates.rci_round2(params).within_bounds()
    return bool(ok), {}


@check("mixture_entropy_identity", "rates")
def _mix_identity(grid):
    worst = max(abs(rates.mixture_identity_gap(DephasingParams(p, m)))
                for m in grid.m_values for p in grid.p_values)
    return worst <= 1e-9, {"max_error": worst}


@check("entropy_concavity", "rates")
def _concave(grid):
    worst = min(rates.concavity_gap(DephasingParams(p, m)) for m in grid.m_values for p in grid.p_values)
    return worst >= -1e-12, {"min_gap": worst}


@check("rci_dense_agreement", "rates")
def _rci_dense(grid):
    worst = 0.0
    for m in grid.dense_m[:3]:
        for p in (0.1, 0.3):
            params = DephasingParams(p, m)
            worst = max(worst, abs(rates.rci_round1(params).avg_rci - rates.rci_round1(params, "dense").avg_rci))
    return worst <= 1e-9, {"max_error": worst}


@check("alternative_below_actual", "rates")
def _alt(grid):
    ok = True
    for m in (2, 3, 4):
        for p in grid.p_values:
            for r in (1, 2):
                ok &= rates.alternative_vs_actual_rci(DephasingParams(p, m), r).difference >= -1e-9
    return bool(ok), {}


# --- purify_map ----------------------------------------------------------------


@check("map_contracts", "purify_map")
def _contract(grid):
    ok = True
    for m in range(2, 31):
        for p in np.linspace(0, 0.5, 51):
            ok &= purify_map.map_step(float(p), m) <= p
        for p in _interior(grid):
            tr = purify_map.iterate_map(p, m, 8).p_sequence
            ok &= all(b <= a for a, b in zip(tr, tr[1:]))
    return bool(ok), {}


@check("fidelity_sandwich", "purify_map")
def _sandwich(grid):
    ok = True
    for m in (2, 3, 4):
        for p in grid.p_values:
            params = DephasingParams(p, m)
            alt = purify_map.iterate_map(p, m, 2).fidelity_sequence
            orig = (protocol.enumerate_round1(params)["s1"].reduced_pair_fidelity,
                    protocol.enumerate_round2(params)["s1s2"].reduced_pair_fidelity)
            for r in (1, 2):
                ok &= (1 - p) - 1e-12 <= alt[r] <= orig[r - 1] + 1e-12 and orig[r - 1] <= 1 + 1e-12
    return bool(ok), {}


@check("derivative_matches_finite_difference", "purify_map")
def _deriv(grid):
    worst = 0.0
    h = 1e-6
    for m in range(2, 7):
        for p in np.linspace(0.01, 0.45, 45):
            p = float(p)
            fd = (purify_map.map_step(p + h, m) - purify_map.map_step(p - h, m)) / (2 * h)
            d = purify_map.map_derivative(p, m)
            worst = max(worst, abs(d - fd) / max(abs(d), 1e-300))
    return worst <= 1e-6 and purify_map.map_derivative(0.0, 3) == 0.0, {"max_rel_error": worst}


def _exact_scan(m: int, steps: int) -> set:
    """Roots of ``p_new(p) - p`` on ``[0, 1]`` from exact rational evaluation.

    Grid points where the difference is exactly zero are roots; a sign
    change between neighbours is reported by its midpoint.
    """
    def diff(x):
        q = 1 - 2 * x
        den = 1 + q**m
        if den == 0:
            return None
        return (1 - (q + q ** (m - 1)) / den) / 2 - x

    xs = [Fraction(k, steps) for k in range(steps + 1)]
    vals = [diff(x) for x in xs]
    roots = {float(x) for x, v in zip(xs, vals) if v == 0}
    for (x0, v0), (x1, v1) in zip(zip(xs, vals), zip(xs[1:], vals[1:])):
        if v0 is not None and v1 is not None and v0 * v1 < 0:
            roots.add(float((x0 + x1) / 2))
    return roots


@check("fixed_points", "purify_map")
def _fixed(grid):
    ok = True
    found = {}
    for m in range(2, 9):
        pts = purify_map.fixed_points(m)
        found[m] = [fp.p for fp in pts]
        ok &= all(fp.residual < 1e-12 for fp in pts)
        scan = _exact_scan(m, 2000)
        ok &= scan == set(found[m])
    return bool(ok), {"fixed_points": {str(k): v for k, v in found.items()}}


@check("superstable_convergence", "purify_map")
def _superstable(grid):
    worst = 0.0
    for m in range(2, 11):
        tr = [p for p in purify_map.iterate_map(0.1, m, 6).p_sequence if p > 0.0]
        for a, b in zip(tr, tr[1:]):
            worst = max(worst, b / (a * a))
    # near 0 the map behaves like (m - 1) p**2
    return worst <= 10.0, {"max_ratio": worst}


@check("round1_coincidence", "purify_map")
def _coincide(grid):
    worst = 0.0
    for m in grid.enum_round1_m:
        for p in grid.p_values:
            f = protocol.enumerate_round1(DephasingParams(p, m))["s1"].reduced_pair_fidelity
            worst = max(worst, abs(purify_map.map_step(p, m) - (1 - f)))
    return worst <= 1e-12, {"max_error": worst}


def run_checks(grid: str = "default", names=None) -> dict:
    """Run every registered check (or those in ``names``) and collect a report."""
    g = GRIDS[grid]
    if names:
        unknown = set(names) - set(check_names())
        if unknown:
            raise KeyError(f"unknown checks: {sorted(unknown)}")
    results = []
    for name, module, informational, fn in _CHECKS:
        if names and name not in names:
            continue
        try:
            passed, detail = fn(g)
            error = None
        except Exception as exc:  # reported, not raised
            passed, detail, error = False, {}, f"{type(exc).__name__}: {exc}"
        results.append({
            "name": name,
            "module": module,
            "passed": bool(passed),
            "informational": informational,
            "detail": detail,
            "error": error,
        })
    ok = all(r["passed"] or r["informational"] for r in results)
    return {"grid": grid, "passed": ok, "checks": results}


def check_names() -> list:
    return [name for name, *_ in _CHECKS]
