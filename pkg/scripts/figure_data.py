"""Write the CSV series behind the rate and fidelity plots into one directory.

    python scripts/figure_data.py --out figures/ [--workers 2]

Files: rci_round1.csv, rci_round2.csv, fidelity.csv, compare_alt_round{1,2}.csv,
map_traces.csv, capacity.csv.  Everything goes through the CLI so the
outputs carry the same schema line as ``dephasim`` itself.
"""
import argparse
from pathlib import Path

from dephasim import cli

P_SWEEP = "0:0.5:0.01"

JOBS = {
    "capacity.csv": ["capacity", "--p", P_SWEEP, "--segments", "1,2,4,8"],
    "rci_round1.csv": ["round1", "--p", P_SWEEP, "--m", "2,5,10,30"],
    "rci_round2.csv": ["round2", "--p", P_SWEEP, "--m", "2,3,4"],
    "fidelity.csv": ["fidelity", "--p", "0.01:0.3:0.01", "--m", "2,3,4", "--rounds", "2"],
    "compare_alt_round1.csv": ["compare-alt", "--p", "0.01:0.49:0.01", "--m", "3,4,5", "--rounds", "1"],
    "compare_alt_round2.csv": ["compare-alt", "--p", "0.01:0.49:0.01", "--m", "3,4", "--rounds", "2"],
    "map_traces.csv": ["map", "--p", "0.1,0.2,0.3,0.4", "--m", "2,3,5,10", "--rounds", "8"],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, argv in JOBS.items():
        status = cli.main(argv + ["--workers", str(args.workers), "-o", str(out / name)])
        print(f"{name}: {'ok' if status == 0 else f'exit {status}'}")


if __name__ == "__main__":
    main()
