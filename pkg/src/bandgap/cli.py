"""Command line front end.

Subcommands operate on period-cell JSON documents (see graph_model) and
gap-target JSON documents (see gap_designer):

* ``validate`` checks a cell against the structural invariants,
* ``limit`` prints the small-stiffness limit constants and gap intervals,
* ``spectrum`` prints one fiber spectrum (exact solver or FD check),
* ``bands`` sweeps the quasimomentum grid and prints band intervals plus
  certified gaps, optionally writing the raw sweep and the gap table as CSV,
* ``converge`` prints a CSV table comparing finite-stiffness endpoints
  against their limits over a stiffness sweep,
* ``design`` solves the inverse problem for requested gap intervals,
* ``selftest`` runs the built-in acceptance checks.

Exit codes: 0 on success, 1 on domain failures (an invalid cell under
``validate``, unattainable targets, resolution failures), 2 on usage or
input-format problems.  Diagnostics are a single ``error: <code>: ...``
line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import acceptance
from .band_structure import (
    band_intervals,
    convergence_csv,
    convergence_study,
    gaps_csv,
    sweep_csv,
    sweep_fiber_spectra,
)
from .errors import BandgapError, FormatError
from .fiber_solver import (
    DIRICHLET,
    NEUMANN,
    SpectralProblem,
    Theta,
    eigenvalues_below,
    fem_oracle,
)
from .gap_designer import design, design_to_dict, load_targets, realize
from .graph_model import load_cell, save_cell, validate_cell
from .limit_theory import gap_right_endpoints, limit_model_for_cell


class _Parser(argparse.ArgumentParser):
    """Parser that fails with a one-line diagnostic instead of usage text."""

    def error(self, message: str):
        print(f"error: usage: {message}", file=sys.stderr)
        raise SystemExit(2)


def _phi_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(","))


def _print_json(doc) -> None:
    print(json.dumps(doc, indent=2))


def _cmd_validate(args) -> int:
    report = validate_cell(load_cell(args.cell))
    print(str(report))
    return 0 if report.ok else 1


def _cmd_limit(args) -> int:
    model = gap_right_endpoints(limit_model_for_cell(load_cell(args.cell)))
    _print_json(
        {
            "m": model.m,
            "l": list(model.l),
            "N": list(model.N),
            "q": list(model.q),
            "a": list(model.a),
            "b": list(model.b),
            "gaps": [[a, b] for a, b in zip(model.a, model.b)],
        }
    )
    return 0


def _cmd_spectrum(args) -> int:
    cell = load_cell(args.cell)
    if args.neumann:
        regime = NEUMANN
        regime_doc = "neumann"
    elif args.dirichlet:
        regime = DIRICHLET
        regime_doc = "dirichlet"
    else:
        regime = Theta.from_angles(args.phi)
        regime_doc = {"phi": list(args.phi)}
    problem = SpectralProblem(cell, regime, args.epsilon, args.lambda_max)
    if args.mesh_density is not None:
        spec = fem_oracle(problem, mesh_density=args.mesh_density)
    else:
        spec = eigenvalues_below(problem)
    _print_json(
        {
            "epsilon": args.epsilon,
            "lambda_max": args.lambda_max,
            "regime": regime_doc,
            "eigenvalues": [[lam, mult] for lam, mult in spec.eigenvalues],
            "residuals": list(spec.residuals),
        }
    )
    return 0


def _cmd_bands(args) -> int:
    cell = load_cell(args.cell)
    samples = sweep_fiber_spectra(
        cell, args.epsilon, args.lambda_max, args.samples, args.threads
    )
    diagram = band_intervals(
        cell, args.epsilon, args.lambda_max, args.samples, args.threads,
        samples=samples,
    )
    if args.sweep_out is not None:
        with open(args.sweep_out, "w") as fh:
            fh.write(sweep_csv(samples, args.epsilon, cell.dimension))
    if args.gaps_out is not None:
        with open(args.gaps_out, "w") as fh:
            fh.write(gaps_csv(diagram.certified_gaps, args.epsilon))
    _print_json(
        {
            "epsilon": diagram.epsilon,
            "lambda_max": diagram.lambda_max,
            "samples_per_dim": diagram.samples_per_dim,
            "bands": [[b.k, b.lo, b.hi] for b in diagram.bands],
            "certified_gaps": [
                {"lo": g.lo, "hi": g.hi, "below": g.below, "above": g.above}
                for g in diagram.certified_gaps
            ],
        }
    )
    return 0


def _cmd_converge(args) -> int:
    table = convergence_study(
        load_cell(args.cell),
        args.epsilon,
        lambda_max=args.lambda_max,
        threads=args.threads,
    )
    sys.stdout.write(convergence_csv(table))
    return 0


def _cmd_design(args) -> int:
    d = design(load_targets(args.targets))
    if args.cell_out is not None:
        save_cell(realize(d), args.cell_out)
    _print_json(design_to_dict(d, include_cell=args.realize))
    return 0


def _cmd_selftest(args) -> int:
    if args.criterion:
        results = [acceptance.run_criterion(i) for i in args.criterion]
    else:
        results = acceptance.run_all()
    for r in results:
        print(r.line, flush=True)
    return 0 if all(r.passed for r in results) else 1


def _build_parser() -> _Parser:
    parser = _Parser(prog="bandgap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a period cell document")
    p.add_argument("cell", help="path to a period cell JSON file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("limit", help="small-stiffness limit constants and gaps")
    p.add_argument("cell")
    p.set_defaults(func=_cmd_limit)

    p = sub.add_parser("spectrum", help="one fiber spectrum below a ceiling")
    p.add_argument("cell")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--lambda-max", type=float, required=True)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--neumann", action="store_true", help="free boundary ends")
    grp.add_argument("--dirichlet", action="store_true", help="clamped boundary ends")
    grp.add_argument(
        "--phi", type=_phi_list,
        help="quasimomentum angles, comma separated, one per lattice direction",
    )
    p.add_argument(
        "--mesh-density", type=int, default=None,
        help="use the finite difference check with this many points per unit length",
    )
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("bands", help="band intervals and certified gaps")
    p.add_argument("cell")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--lambda-max", type=float, required=True)
    p.add_argument("--samples", type=int, default=16,
                   help="quasimomentum samples per lattice direction")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--sweep-out", default=None,
                   help="write the raw sweep as CSV to this path")
    p.add_argument("--gaps-out", default=None,
                   help="write the certified gap table as CSV to this path")
    p.set_defaults(func=_cmd_bands)

    p = sub.add_parser("converge", help="stiffness sweep against the limit (CSV)")
    p.add_argument("cell")
    p.add_argument("--epsilon", type=float, action="append", required=True,
                   help="repeat for each stiffness, strictly decreasing")
    p.add_argument("--lambda-max", type=float, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("design", help="solve the inverse gap problem")
    p.add_argument("targets", help="path to a gap targets JSON file")
    p.add_argument("--realize", action="store_true",
                   help="include the realized period cell in the output")
    p.add_argument("--cell-out", default=None,
                   help="write the realized period cell JSON to this path")
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("selftest", help="run the built-in acceptance checks")
    p.add_argument(
        "--criterion",
        type=int,
        choices=range(1, 10),
        action="append",
        default=None,
        help="run one criterion; repeatable",
    )
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: format: {exc}", file=sys.stderr)
        return 2
    except BandgapError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: domain: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
