"""Sweep the quasimomentum grid of a cell and dump bands, gaps, raw data.

Usage: python scripts/run_band_sweep.py CELL.json EPSILON LAMBDA_MAX [PREFIX]

Writes PREFIX_sweep.csv and PREFIX_gaps.csv (default prefix "band") and
prints the band intervals with their certified gaps.
"""

import sys

from bandgap import (
    band_intervals,
    gaps_csv,
    load_cell,
    sweep_csv,
    sweep_fiber_spectra,
)

SAMPLES_PER_DIM = 16


def main() -> int:
    if len(sys.argv) < 4:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    cell = load_cell(sys.argv[1])
    epsilon = float(sys.argv[2])
    lambda_max = float(sys.argv[3])
    prefix = sys.argv[4] if len(sys.argv) > 4 else "band"

    samples = sweep_fiber_spectra(cell, epsilon, lambda_max, SAMPLES_PER_DIM)
    diagram = band_intervals(
        cell, epsilon, lambda_max, SAMPLES_PER_DIM, samples=samples
    )
    with open(f"{prefix}_sweep.csv", "w") as fh:
        fh.write(sweep_csv(samples, epsilon, cell.dimension))
    with open(f"{prefix}_gaps.csv", "w") as fh:
        fh.write(gaps_csv(diagram.certified_gaps, epsilon))

    print(f"epsilon={epsilon} lambda_max={lambda_max} fibers={len(samples)}")
    for b in diagram.bands:
        print(f"band {b.k}: [{b.lo:.6f}, {b.hi:.6f}]")
    for g in diagram.certified_gaps:
        print(f"gap: ({g.lo:.6f}, {g.hi:.6f}) certificate k={g.below}")
    print(f"wrote {prefix}_sweep.csv and {prefix}_gaps.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
