"""Band intervals, gap certificates and small-epsilon convergence tables.

The spectrum of the periodic operator is the union over the quasimomentum
torus of the fiber eigenvalue curves.  Sampling the torus yields band
interval estimates; the free (Neumann) and clamped (Dirichlet) spectra of
the decoupled cell bracket every curve from below and above, so the pair
(k-th Dirichlet value, (k+1)-th Neumann value) certifies a spectral gap
whenever it is a nonempty interval, without trusting the sampling density.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .errors import CeilingError
from .fiber_solver import (
    DIRICHLET,
    NEUMANN,
    SpectralProblem,
    Spectrum,
    Theta,
    eigenvalues_below,
)
from .graph_model import PeriodCell
from .limit_theory import (
    LimitModel,
    gap_right_endpoints,
    limit_model_for_cell,
)

THETA_SAMPLES = 16       # default quasimomentum samples per dimension
GAP_MIN_WIDTH = 1e-8     # relative width below which a certificate is noise


def max_workers() -> int:
    """Concurrency cap: BANDGAP_THREADS when set, else a small default."""
    env = os.environ.get("BANDGAP_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _run_problems(problems, threads=None):
    workers = threads if threads is not None else max_workers()
    if workers <= 1 or len(problems) <= 1:
        return [eigenvalues_below(p) for p in problems]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(eigenvalues_below, problems))


def theta_angle_grid(
    dimension: int, samples_per_dim: int = THETA_SAMPLES
) -> tuple[tuple[float, ...], ...]:
    """Quasimomentum sample angles, reduced by conjugation symmetry.

    The uniform grid on [0, 2pi) per dimension is augmented with the two
    mandatory corners (all angles 0, all angles pi).  Angles phi and
    2pi - phi give complex-conjugate fibers with equal spectra, so only
    the lexicographically smaller representative of each pair is kept.
    """
    if samples_per_dim < 3:
        raise ValueError("need at least 3 samples per dimension")
    base = {2.0 * math.pi * i / samples_per_dim for i in range(samples_per_dim)}
    per_dim = sorted(base | {0.0, math.pi})
    kept = []
    seen = set()
    for phi in itertools.product(per_dim, repeat=dimension):
        conj = tuple((2.0 * math.pi - p) % (2.0 * math.pi) for p in phi)
        canon = min(phi, conj)
        key = tuple(round(p, 12) for p in canon)
        if key not in seen:
            seen.add(key)
            kept.append(canon)
    return tuple(sorted(kept))


@dataclass(frozen=True)
class FiberSample:
    """Spectrum of one sampled quasimomentum fiber."""

    index: int
    angles: tuple[float, ...]
    spectrum: Spectrum


def sweep_fiber_spectra(
    cell: PeriodCell,
    epsilon: float,
    lambda_max: float,
    samples_per_dim: int = THETA_SAMPLES,
    threads: int | None = None,
) -> tuple[FiberSample, ...]:
    """Fiber spectra over the reduced quasimomentum grid, in grid order."""
    angles = theta_angle_grid(cell.dimension, samples_per_dim)
    problems = [
        SpectralProblem(cell, Theta.from_angles(phi), epsilon, lambda_max)
        for phi in angles
    ]
    spectra = _run_problems(problems, threads)
    return tuple(
        FiberSample(i, phi, s)
        for i, (phi, s) in enumerate(zip(angles, spectra))
    )


@dataclass(frozen=True)
class Band:
    k: int
    lo: float
    hi: float


@dataclass(frozen=True)
class CertifiedGap:
    """Open interval free of spectrum, certified by the bracketing pair.

    ``below`` is the Dirichlet index pinning the lower edge, ``above`` the
    Neumann index pinning the upper edge (always below + 1).
    """

    lo: float
    hi: float
    below: int
    above: int


@dataclass(frozen=True)
class BandDiagram:
    epsilon: float
    lambda_max: float
    samples_per_dim: int
    bands: tuple[Band, ...]
    certified_gaps: tuple[CertifiedGap, ...]


def _nd_values(cell, epsilon, lambda_max, threads=None):
    problems = [
        SpectralProblem(cell, NEUMANN, epsilon, lambda_max),
        SpectralProblem(cell, DIRICHLET, epsilon, lambda_max),
    ]
    n_spec, d_spec = _run_problems(problems, threads)
    return n_spec.values, d_spec.values


def _certify(nvals, dvals, lambda_max) -> tuple[CertifiedGap, ...]:
    gaps = []
    for k in range(1, len(dvals) + 1):
        if k >= len(nvals):
            break
        lo, hi = dvals[k - 1], nvals[k]
        if hi - lo > GAP_MIN_WIDTH * (1.0 + abs(hi)) and hi <= lambda_max:
            gaps.append(CertifiedGap(lo, hi, k, k + 1))
    return tuple(gaps)


def certify_gaps(
    cell: PeriodCell,
    epsilon: float,
    lambda_max: float,
    threads: int | None = None,
) -> tuple[CertifiedGap, ...]:
    """Certified spectral gaps below the ceiling, from the N/D bracketing."""
    nvals, dvals = _nd_values(cell, epsilon, lambda_max, threads)
    return _certify(nvals, dvals, lambda_max)


def band_intervals(
    cell: PeriodCell,
    epsilon: float,
    lambda_max: float,
    samples_per_dim: int = THETA_SAMPLES,
    threads: int | None = None,
    samples: Sequence[FiberSample] | None = None,
) -> BandDiagram:
    """Sampled band intervals plus certified gaps.

    Band k spans the k-th fiber eigenvalue over the sampled quasimomenta;
    its endpoints are clamped into the brackets provided by the Neumann
    and Dirichlet spectra and the two mandatory corner fibers.  Bands are
    reported only up to the largest k every sample resolves below the
    ceiling, so refining the grid never shrinks a reported band.  Pass
    ``samples`` to reuse an existing sweep instead of recomputing it.
    """
    if samples is None:
        samples = sweep_fiber_spectra(
            cell, epsilon, lambda_max, samples_per_dim, threads
        )
    nvals, dvals = _nd_values(cell, epsilon, lambda_max, threads)

    def corner(angle):
        for s in samples:
            if all(abs(p - angle) < 1e-12 for p in s.angles):
                return s.spectrum.values
        return ()

    periodic = corner(0.0)
    antiperiodic = corner(math.pi)
    count = min(len(s.spectrum.values) for s in samples)
    bands = []
    for k in range(1, count + 1):
        vals = [s.spectrum.values[k - 1] for s in samples]
        lo, hi = min(vals), max(vals)
        if k <= len(periodic):
            lo = min(lo, periodic[k - 1])
        if k <= len(nvals):
            lo = max(lo, nvals[k - 1])
        if k <= len(antiperiodic):
            hi = max(hi, antiperiodic[k - 1])
        if k <= len(dvals):
            hi = min(hi, dvals[k - 1])
        bands.append(Band(k, lo, hi))
    return BandDiagram(
        epsilon,
        lambda_max,
        samples_per_dim,
        tuple(bands),
        _certify(nvals, dvals, lambda_max),
    )


@dataclass(frozen=True)
class ConvergenceRow:
    epsilon: float
    j: int
    a_eps: float
    b_eps: float
    a_limit: float
    b_limit: float

    @property
    def err_a(self) -> float:
        return self.a_eps - self.a_limit

    @property
    def err_b(self) -> float:
        return self.b_eps - self.b_limit


@dataclass(frozen=True)
class ConvergenceTable:
    limit: LimitModel
    rows: tuple[ConvergenceRow, ...]
    a_monotone: tuple[bool, ...]
    b_monotone: tuple[bool, ...]


def convergence_study(
    cell: PeriodCell,
    epsilons: Sequence[float],
    limit: LimitModel | None = None,
    lambda_max: float | None = None,
    threads: int | None = None,
) -> ConvergenceTable:
    """Compare finite-stiffness proxies against their limits over an epsilon sweep.

    For each epsilon the j-th Dirichlet eigenvalue approximates a_j from
    below and the (j+1)-th Neumann eigenvalue approximates b_j from below;
    both increase as epsilon decreases.  ``epsilons`` must be strictly
    decreasing.  Raises CeilingError if some sweep point does not resolve
    all m+1 required eigenvalues below the ceiling (raise lambda_max).
    """
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise ValueError("need at least one epsilon")
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    if limit is None:
        limit = limit_model_for_cell(cell)
    if limit.b is None:
        limit = gap_right_endpoints(limit)
    m = limit.m
    if lambda_max is None:
        top = max(limit.b) if limit.b else 1.0
        lambda_max = 1.5 * top + 1.0

    rows: list[ConvergenceRow] = []
    per_eps: list[tuple[tuple[float, ...], tuple[float, ...]]] = []
    for eps in eps_list:
        nvals, dvals = _nd_values(cell, eps, lambda_max, threads)
        if len(dvals) < m or len(nvals) < m + 1:
            raise CeilingError(
                f"epsilon={eps!r} resolves only {len(dvals)} clamped and "
                f"{len(nvals)} free eigenvalues below {lambda_max!r}; "
                "raise lambda_max"
            )
        per_eps.append((nvals, dvals))
        for j in range(1, m + 1):
            rows.append(
                ConvergenceRow(
                    eps,
                    j,
                    dvals[j - 1],
                    nvals[j],
                    limit.a[j - 1],
                    limit.b[j - 1],
                )
            )

    slack = 1e-9
    a_monotone = []
    b_monotone = []
    for j in range(1, m + 1):
        a_seq = [d[j - 1] for _, d in per_eps]
        b_seq = [n[j] for n, _ in per_eps]
        a_monotone.append(
            all(y >= x - slack * (1 + abs(x)) for x, y in zip(a_seq, a_seq[1:]))
        )
        b_monotone.append(
            all(y >= x - slack * (1 + abs(x)) for x, y in zip(b_seq, b_seq[1:]))
        )
    return ConvergenceTable(limit, tuple(rows), tuple(a_monotone), tuple(b_monotone))


# --- CSV emitters -------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".15g")


def _phi_header(dimension: int) -> list[str]:
    if dimension == 1:
        return ["phi"]
    return [f"phi{i}" for i in range(1, dimension + 1)]


def sweep_csv(
    samples: Sequence[FiberSample], epsilon: float, dimension: int
) -> str:
    """Raw sweep rows: epsilon,k,theta_index,phi...,lambda."""
    lines = [",".join(["epsilon", "k", "theta_index"] + _phi_header(dimension) + ["lambda"])]
    for s in samples:
        for k, lam in enumerate(s.spectrum.values, start=1):
            cells = [_fmt(epsilon), str(k), str(s.index)]
            cells += [_fmt(p) for p in s.angles]
            cells.append(_fmt(lam))
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def gaps_csv(gaps: Sequence[CertifiedGap], epsilon: float) -> str:
    """Certificate rows: epsilon,gap_lo,gap_hi,cert_k."""
    lines = ["epsilon,gap_lo,gap_hi,cert_k"]
    for g in gaps:
        lines.append(
            ",".join([_fmt(epsilon), _fmt(g.lo), _fmt(g.hi), str(g.below)])
        )
    return "\n".join(lines) + "\n"


def convergence_csv(table: ConvergenceTable) -> str:
    """Convergence rows: epsilon,j,aj_eps,bj_eps,aj,bj,err_a,err_b."""
    lines = ["epsilon,j,aj_eps,bj_eps,aj,bj,err_a,err_b"]
    for r in table.rows:
        lines.append(
            ",".join(
                [
                    _fmt(r.epsilon),
                    str(r.j),
                    _fmt(r.a_eps),
                    _fmt(r.b_eps),
                    _fmt(r.a_limit),
                    _fmt(r.b_limit),
                    _fmt(r.err_a),
                    _fmt(r.err_b),
                ]
            )
        )
    return "\n".join(lines) + "\n"
