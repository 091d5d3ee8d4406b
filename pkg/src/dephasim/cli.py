"""Command-line front end: sweeps, table reproduction and verification.

Every subcommand emits CSV (with a ``# dephasim-schema v1`` line) or JSON.
Output goes to ``--output``, else to ``$DEPHASIM_OUTPUT_DIR/<command>.<fmt>``
when that variable is set, else to stdout.  Files are written atomically.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import core, densesim, emit, protocol, purify_map, rates, verify
from .core import DephasingParams, DomainError

OUTPUT_ENV = "DEPHASIM_OUTPUT_DIR"
MODES = ("closed-form", "dense", "enumerate", "montecarlo")

# largest m each mode can handle, per subcommand; None means unbounded
MODE_LIMITS = {
    "round1": {"closed-form": None, "dense": densesim.MAX_DENSE_PAIRS, "enumerate": protocol.MAX_ROUND1_M},
    "round2": {"closed-form": core.MAX_COUNTED_M, "dense": 3, "enumerate": 4},
    "fidelity": {"closed-form": None, "enumerate": None, "montecarlo": None},
    "branches": {"enumerate": None, "montecarlo": None},
}
_FIDELITY_MODE = {"closed-form": "auto", "enumerate": "exhaustive", "montecarlo": "montecarlo"}


class ConfigError(ValueError):
    """Invalid command-line configuration."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    p: tuple = (0.1,)
    m: tuple = (3,)
    n: int = 1
    mode: str = "closed-form"
    seed: int | None = None
    samples: int = 10**6
    fmt: str = "csv"
    output: str | None = None
    workers: int = 1
    segments: tuple = (1,)
    grid: str = "default"
    dump_dir: str | None = None
    extra: dict = field(default_factory=dict)


# --- parsing helpers ----------------------------------------------------------


def parse_range(text: str) -> tuple:
    """``"0.1"``, ``"0.1,0.2"`` or ``"start:stop:step"`` (stop included when reachable)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range {text!r} must look like start:stop:step")
        start, stop, step = (float(x) for x in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"range {text!r} needs step > 0 and stop >= start")
        count = (stop - start) / step
        k = round(count)
        if abs(start + k * step - stop) <= 1e-12:
            n = k
        else:
            n = math.floor(count)
        vals = [round(start + i * step, 12) for i in range(n + 1)]
        if abs(start + n * step - stop) <= 1e-12:
            vals[-1] = stop
        return tuple(vals)
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r} as numbers") from exc


def parse_ints(text: str) -> tuple:
    try:
        if ":" in text:
            a, b = text.split(":")
            return tuple(range(int(a), int(b) + 1))
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r} as integers") from exc


def validate(cfg: RunConfig) -> None:
    """Reject configurations that cannot run, before any work starts."""
    for p in cfg.p:
        if not 0.0 <= p <= 0.5:
            raise ConfigError(f"--p value {p} outside [0, 0.5]")
    for m in cfg.m:
        if m < 2:
            raise ConfigError(f"--m value {m} must be >= 2")
    if cfg.mode == "montecarlo" and cfg.seed is None:
        raise ConfigError("--mode montecarlo requires --seed")
    limits = MODE_LIMITS.get(cfg.command)
    if limits is not None:
        if cfg.mode not in limits:
            allowed = ", ".join(limits)
            raise ConfigError(f"{cfg.command} supports --mode {allowed}, not {cfg.mode}")
        cap = limits[cfg.mode]
        if cap is not None and max(cfg.m) > cap:
            raise ConfigError(f"--mode {cfg.mode} for {cfg.command} supports m <= {cap}; got m={max(cfg.m)}")
    if cfg.n < 1 and cfg.command != "map":
        raise ConfigError("--rounds must be >= 1")
    if cfg.command == "compare-alt" and cfg.n not in (1, 2):
        raise ConfigError("compare-alt supports --rounds 1 or 2")
    if cfg.command in ("fidelity", "branches") and cfg.mode != "montecarlo":
        for m in cfg.m:
            if m**cfg.n > protocol.MAX_EXHAUSTIVE_BITS:
                if cfg.mode == "enumerate" or cfg.command == "branches":
                    raise ConfigError(
                        f"m={m} over {cfg.n} rounds has 2**{m**cfg.n} patterns; exhaustive "
                        f"enumeration stops at 2**{protocol.MAX_EXHAUSTIVE_BITS}, use --mode montecarlo --seed N"
                    )
                if cfg.seed is None:
                    raise ConfigError(
                        f"m={m} over {cfg.n} rounds needs Monte Carlo sampling; pass --seed"
                    )
    if cfg.workers < 1:
        raise ConfigError("--workers must be >= 1")


# --- sweep workers (top level so they pickle) -----------------------------------


_ENGINE_MODE = {"closed-form": "closed", "dense": "dense", "enumerate": "enumerate"}


def _capacity_rows(point):
    p, seg = point
    pe = core.node_dephasing(p, seg)
    return [{"p": p, "segments": seg, "p_segment": pe, "capacity": core.capacity(pe)}]


def _round_rows(point):
    p, m, n, mode = point
    params = DephasingParams(p, m)
    if n == 1:
        ledger = rates.rci_round1(params, _ENGINE_MODE[mode])
    else:
        ledger = rates.rci_round2(params, _ENGINE_MODE[mode])
    return ledger.rows()


def _fidelity_rows(point):
    p, m, n, mode, seed, samples = point
    reports = protocol.enumerate_rounds(
        DephasingParams(p, m), n, mode=_FIDELITY_MODE[mode], seed=seed, samples=samples
    )
    alt = purify_map.iterate_map(p, m, n).fidelity_sequence
    rows = [{"p": p, "m": m, "round": 0, "original": 1.0 - p, "original_stderr": 0.0,
             "alternative": alt[0], "mode": "exact"}]
    for rep in reports:
        rows.append({"p": p, "m": m, "round": rep.round, "original": rep.lineage_fidelity,
                     "original_stderr": rep.stderr, "alternative": alt[rep.round], "mode": rep.mode})
    return rows


def _compare_rows(point):
    p, m, r = point
    cmp = rates.alternative_vs_actual_rci(DephasingParams(p, m), r)
    return [{"p": p, "m": m, "round": r, "alternative": cmp.alternative,
             "actual": cmp.actual, "difference": cmp.difference}]


def _map_rows(point):
    p, m, n = point
    return [dict(p0=p, m=m, **row) for row in purify_map.iterate_map(p, m, n).rows()]


def _bsm_rows(point):
    p, dump_dir = point
    branches, avg = densesim.bsm_swap(p)
    rows = []
    for br in branches:
        if dump_dir:
            densesim.dump_csv(br.state, Path(dump_dir) / f"bsm_p{p!r}_{br.outcome}.csv")
        rows.append({"p": p, "outcome": br.outcome, "probability": br.probability,
                     "offdiagonal": densesim.max_offdiagonal(br.state),
                     "rci": densesim.rci(br.state, [0]), "avg_rci": avg, "capacity": core.capacity(p)})
    return rows


def _branch_rows(point):
    p, m, n, mode, seed, samples = point
    params = DephasingParams(p, m)
    if mode == "montecarlo":
        outs = protocol.sample_lineages(params, n, seed, samples)
    else:
        outs = protocol.enumerate_lineages(params, n)
    return [{"p": p, "m": m, **protocol.branch_record(out)} for out in outs.values()]


def _csv_label(label) -> str:
    if isinstance(label, list):
        return "/".join(_csv_label(x) for x in label)
    return str(label)


def _sweep(fn, points, workers: int) -> list:
    points = list(points)
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(fn, points))
    else:
        chunks = [fn(pt) for pt in points]
    return [row for chunk in chunks for row in chunk]


# --- commands -----------------------------------------------------------------------


def _points(cfg: RunConfig):
    return sorted((p, m) for p in cfg.p for m in cfg.m)


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one configuration; returns the process exit status."""
    stdout = stdout or sys.stdout
    validate(cfg)
    cmd = cfg.command
    meta = {"command": cmd}
    status = 0
    if cmd == "capacity":
        columns = ("p", "segments", "p_segment", "capacity")
        rows = _sweep(_capacity_rows, sorted((p, s) for p in cfg.p for s in cfg.segments), cfg.workers)
    elif cmd in ("round1", "round2"):
        n = 1 if cmd == "round1" else 2
        columns = rates.CSV_COLUMNS
        rows = _sweep(_round_rows, [(p, m, n, cfg.mode) for p, m in _points(cfg)], cfg.workers)
    elif cmd == "fidelity":
        columns = ("p", "m", "round", "original", "original_stderr", "alternative", "mode")
        pts = [(p, m, cfg.n, cfg.mode, cfg.seed, cfg.samples) for p, m in _points(cfg)]
        rows = _sweep(_fidelity_rows, pts, cfg.workers)
    elif cmd == "compare-alt":
        columns = ("p", "m", "round", "alternative", "actual", "difference")
        rows = _sweep(_compare_rows, [(p, m, cfg.n) for p, m in _points(cfg)], cfg.workers)
    elif cmd == "map":
        columns = ("p0", "m", "round", "p", "fidelity")
        rows = _sweep(_map_rows, [(p, m, cfg.n) for p, m in _points(cfg)], cfg.workers)
    elif cmd == "bsm-check":
        if cfg.dump_dir:
            Path(cfg.dump_dir).mkdir(parents=True, exist_ok=True)
        columns = ("p", "outcome", "probability", "offdiagonal", "rci", "avg_rci", "capacity")
        rows = _sweep(_bsm_rows, [(p, cfg.dump_dir) for p in sorted(cfg.p)], cfg.workers)
    elif cmd == "branches":
        columns = ("p", "m", "tag", "probability", "fidelity", "spectrum")
        pts = [(p, m, cfg.n, cfg.mode, cfg.seed, cfg.samples) for p, m in _points(cfg)]
        rows = _sweep(_branch_rows, pts, cfg.workers)
        if cfg.fmt == "csv":
            for row in rows:
                row["spectrum"] = "" if row["spectrum"] is None else ";".join(
                    f"{_csv_label(e['label'])}:{e['value']!r}x{e['multiplicity']}" for e in row["spectrum"]
                )
    elif cmd == "verify":
        report = verify.run_checks(cfg.grid)
        status = 0 if report["passed"] else 1
        text = emit.dumps_json(report)
        _deliver(cfg, text, "json")
        return status
    else:
        raise ConfigError(f"unknown command {cmd!r}")
    text = emit.render(cfg.fmt, columns, rows, **meta)
    _deliver(cfg, text, cfg.fmt)
    return status


def _deliver(cfg: RunConfig, text: str, ext: str) -> None:
    target = cfg.output
    if target is None and os.environ.get(OUTPUT_ENV):
        target = str(Path(os.environ[OUTPUT_ENV]) / f"{cfg.command}.{ext}")
    if target is None or target == "-":
        sys.stdout.write(text)
    else:
        emit.atomic_write(target, text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dephasim",
        description="Recursive two-way purification over the dephasing channel.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, rounds=False, mode=False, default_m="3"):
        sp.add_argument("--p", default="0.1", help="value, list a,b,c, or range start:stop:step")
        sp.add_argument("--m", default=default_m, help="pairs per block: list a,b,c or range a:b")
        if rounds:
            sp.add_argument("--rounds", "--n", dest="n", type=int, default=rounds)
        if mode:
            sp.add_argument("--mode", choices=MODES, default="closed-form")
            sp.add_argument("--seed", type=int, default=None)
            sp.add_argument("--samples", type=int, default=10**6)
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
        sp.add_argument("--output", "-o", default=None, help="file path ('-' for stdout)")
        sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("capacity", help="C = 1 - H2(p) and per-segment repeater capacity")
    common(sp)
    sp.add_argument("--segments", default="1", help="segment counts, e.g. 1,2,4")

    sp = sub.add_parser("round1", help="first-round RCI per channel use")
    common(sp, mode=True, default_m="2,5,10,30")
    sp = sub.add_parser("round2", help="second-round RCI per channel use")
    common(sp, mode=True, default_m="2,3,4")
    sp = sub.add_parser("fidelity", help="success-lineage fidelity ladder, original vs restart map")
    common(sp, rounds=3, mode=True)
    sp = sub.add_parser("compare-alt", help="RCI of the success state vs restarted reduced pairs")
    common(sp, rounds=1)
    sp = sub.add_parser("map", help="iterate the restart-protocol dephasing map")
    common(sp, rounds=8)
    sp = sub.add_parser("bsm-check", help="entanglement swapping through one node")
    common(sp)
    sp.add_argument("--dump-dir", default=None, help="write branch density matrices as CSV here")
    sp = sub.add_parser("branches", help="branch probabilities, spectra and fidelities")
    common(sp, rounds=2, mode=True)
    sp.set_defaults(mode="enumerate")
    sp = sub.add_parser("verify", help="run every cross-check; nonzero exit on failure")
    sp.add_argument("--grid", choices=sorted(verify.GRIDS), default="default")
    sp.add_argument("--output", "-o", default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    kw = {"command": args.command}
    if hasattr(args, "p"):
        kw["p"] = parse_range(args.p)
        kw["m"] = parse_ints(args.m)
        kw["fmt"] = args.fmt
        kw["workers"] = args.workers
    for name in ("n", "mode", "seed", "samples", "grid", "dump_dir", "output"):
        if getattr(args, name, None) is not None:
            kw[name] = getattr(args, name)
    if getattr(args, "segments", None):
        kw["segments"] = parse_ints(args.segments)
    return RunConfig(**kw)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except (ConfigError, DomainError) as exc:
        parser.error(str(exc))
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
