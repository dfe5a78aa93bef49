"""Stiffness sweep of gap endpoints against their limits, written as CSV.

Usage: python scripts/run_convergence.py [out.csv]

Runs the comb with one pendant (limit gap (2, 4)) over a decade sweep of
epsilon and writes the endpoint errors; without an argument the table
goes to stdout.
"""

import sys

from bandgap import build_comb, convergence_csv, convergence_study

EPSILONS = [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001]


def main() -> int:
    cell = build_comb(1, 1.0, [1.0], [2.0])
    table = convergence_study(cell, EPSILONS)
    text = convergence_csv(table)
    if len(sys.argv) > 1:
        with open(sys.argv[1], "w") as fh:
            fh.write(text)
        print(f"wrote {len(table.rows)} rows to {sys.argv[1]}")
    else:
        sys.stdout.write(text)
    for j, (ma, mb) in enumerate(
        zip(table.a_monotone, table.b_monotone), start=1
    ):
        print(
            f"# gap {j}: left endpoint monotone={ma} right endpoint monotone={mb}",
            file=sys.stderr,
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
