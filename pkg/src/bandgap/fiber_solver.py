"""Fiber spectra of one period cell, by an exact secular solver and an FD oracle.

Each edge carries the stiffness-scaled second derivative, so a fiber
eigenfunction restricted to an edge of length l is a combination of
cos(kx) and sin(kx)/k with k = sqrt(epsilon * lambda); the second basis
function continues to x at lambda = 0, which keeps the assembled matrix
continuous in lambda and makes the zero eigenvalue a plain root instead
of a special case.  Edge coordinates run from the tail; derivative rows
always use the direction away from the vertex into the edge.

Vertex rows, one block per vertex:

* plain vertices: continuity across all incident ends plus a flux sum
  (the common 1/epsilon factor of the flux row is dropped),
* coupling vertices: continuity within the base side and within each
  attached side, then one flux row per side in which -1/epsilon times the
  outward flux balances the strength-weighted value jumps (here the
  1/epsilon factor matters and is kept),
* degree-1 vertices: a free (zero-derivative) end, except external stubs
  under the Dirichlet regime, which are clamped to zero,
* paired external stubs under a quasimomentum regime: value and
  derivative of the plus stub equal the minus stub's times the product of
  the phase factors raised to the lattice shift, derivatives compared
  along the travel direction of the underlying edge via the stored
  orientation signs.

The matrix is square of size twice the edge count; rows are scaled to
unit norm.  Eigenvalues are located by scanning the smallest singular
value and refining every local minimum by golden section.  The scan grid
unites three families: uniform in k (so the total phase advances at most
0.05 rad per step, resolving the oscillatory regime), uniform in lambda,
and a segment sized by the small-epsilon limit constants of the cell
(resolving the coupling-dominated regime, whose features the k criterion
cannot see when epsilon is small).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.integrate
import scipy.linalg
from scipy.optimize import brentq

from .errors import (
    AssemblyError,
    DegenerateConstantsError,
    GridResolutionError,
)
from .graph_model import ROLE_EXTERNAL, PeriodCell
from . import limit_theory

NEUMANN = "neumann"
DIRICHLET = "dirichlet"

ROOT_TOL = 1e-7          # singular values below this count towards the kernel
GRID_RAD_STEP = 0.05     # max advance of k * total length between scan points
LAMBDA_DIVISIONS = 2000  # uniform lambda subdivisions of [0, lambda_max]
REFINE_REL = 1e-12       # golden-section bracket width, relative to 1 + lambda
MERGE_RTOL = 1e-10       # refined roots closer than this collapse to one
ROW_NORM_FLOOR = 1e-2    # smallest divisor used when scaling rows to unit norm

_UNIT_TOL = 1e-14


@dataclass(frozen=True)
class Theta:
    """Quasimomentum regime: one unit-modulus phase factor per lattice direction."""

    values: tuple[complex, ...]

    def __init__(self, values):
        vals = tuple(complex(v) for v in values)
        if not vals:
            raise ValueError("at least one phase factor is required")
        for v in vals:
            if abs(abs(v) - 1.0) > _UNIT_TOL:
                raise ValueError(f"phase factor {v!r} is not unit modulus")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_angles(cls, phi) -> "Theta":
        return cls(tuple(complex(math.cos(p), math.sin(p)) for p in phi))


Regime = Union[Theta, str]


@dataclass(frozen=True)
class SpectralProblem:
    """One fiber problem: cell, boundary regime, stiffness and ceiling."""

    cell: PeriodCell
    regime: Regime
    epsilon: float
    lambda_max: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.lambda_max > 0:
            raise ValueError(f"lambda_max must be positive, got {self.lambda_max}")
        if isinstance(self.regime, Theta):
            if len(self.regime.values) != self.cell.dimension:
                raise ValueError(
                    f"{len(self.regime.values)} phase factors for a "
                    f"{self.cell.dimension}-dimensional cell"
                )
        elif self.regime not in (NEUMANN, DIRICHLET):
            raise ValueError(f"unknown regime {self.regime!r}")


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues with multiplicities and per-eigenvalue residuals."""

    eigenvalues: tuple[tuple[float, int], ...]
    residuals: tuple[float, ...]
    epsilon: float

    @property
    def values(self) -> tuple[float, ...]:
        """Eigenvalues flattened by multiplicity."""
        out = []
        for lam, mult in self.eigenvalues:
            out.extend([lam] * mult)
        return tuple(out)

    def __len__(self) -> int:
        return sum(mult for _, mult in self.eigenvalues)


def _pairing_factors(cell: PeriodCell, theta: Theta) -> list[complex]:
    out = []
    for p in cell.pairings:
        rho = complex(1.0)
        for t, s in zip(theta.values, p.shift):
            rho *= t ** s
        out.append(rho)
    return out


def _stub_end(cell: PeriodCell, vid: str):
    ends = cell.ends_at(vid)
    if len(ends) != 1:
        raise AssemblyError(f"paired vertex {vid!r} must have degree 1")
    return ends[0]


def _sinc_entire(z: complex) -> complex:
    """sin(z)/z continued through z = 0 (entire in z)."""
    if abs(z) < 1e-6:
        z2 = z * z
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0
    return cmath.sin(z) / z


def _s3_entire(z: complex) -> complex:
    """(z cos z - sin z) / z**3 continued through z = 0 (entire in z)."""
    if abs(z) < 1e-2:
        z2 = z * z
        return -1.0 / 3.0 + z2 / 30.0 - z2 * z2 / 840.0
    return (z * cmath.cos(z) - cmath.sin(z)) / (z * z * z)


def assemble_secular(problem: SpectralProblem, lam) -> np.ndarray:
    """Assemble the row-normalized secular matrix at a spectral point.

    The matrix is square with twice the edge count rows; a violated row
    budget raises AssemblyError.  Real lam must be non-negative; a complex
    lam is accepted as well (every basis entry is entire in lam and even
    in the wavenumber, so the square-root branch is immaterial), which the
    contour-counting certificate relies on.
    """
    return _assemble(problem, lam)


def _assemble(
    problem: SpectralProblem,
    lam,
    deriv: bool = False,
    normalize: bool = True,
) -> np.ndarray:
    """Shared assembly of the secular matrix or its lam-derivative.

    Every row is a fixed linear combination of per-end basis entries with
    lam-independent coefficients (signs, strengths, phase factors), so the
    derivative matrix reuses the row construction verbatim with the entry
    tables replaced by their derivatives.  Normalization is skipped for
    the derivative pairing because the logarithmic derivative needs both
    matrices on the same scale (row norms are positive, so they never
    change the winding of the determinant anyway).
    """
    complex_lam = isinstance(lam, complex)
    if not complex_lam and lam < 0:
        raise ValueError(f"lam must be non-negative, got {lam}")
    if deriv and not complex_lam:
        lam = complex(lam, 0.0)
        complex_lam = True
    cell = problem.cell
    eps = problem.epsilon
    k2 = eps * lam

    pos = {e.id: 2 * i for i, e in enumerate(cell.edges)}
    val: dict[tuple[str, int], tuple] = {}
    dout: dict[tuple[str, int], tuple] = {}
    if complex_lam:
        k = cmath.sqrt(k2)
        for e in cell.edges:
            kl = k * e.length
            sinc = _sinc_entire(kl)
            c = cmath.cos(kl)
            s = e.length * sinc
            if deriv:
                half = 0.5 * eps * e.length * e.length
                ds = half * e.length * _s3_entire(kl)
                val[(e.id, 0)] = (0.0, 0.0)
                dout[(e.id, 0)] = (0.0, 0.0)
                val[(e.id, 1)] = (-half * sinc, ds)
                dout[(e.id, 1)] = (eps * s + k2 * ds, half * sinc)
            else:
                val[(e.id, 0)] = (1.0, 0.0)
                dout[(e.id, 0)] = (0.0, 1.0)
                val[(e.id, 1)] = (c, s)
                dout[(e.id, 1)] = (k2 * s, -c)
    else:
        k = math.sqrt(k2)
        for e in cell.edges:
            kl = k * e.length
            c = math.cos(kl)
            s = e.length * float(np.sinc(kl / math.pi))
            val[(e.id, 0)] = (1.0, 0.0)
            dout[(e.id, 0)] = (0.0, 1.0)
            val[(e.id, 1)] = (c, s)
            dout[(e.id, 1)] = (k2 * s, -c)

    theta = problem.regime if isinstance(problem.regime, Theta) else None
    rhos = _pairing_factors(cell, theta) if theta is not None else []
    needs_complex = any(abs(r.imag) > 0.0 for r in rhos) or complex_lam
    dtype = np.complex128 if needs_complex else np.float64

    n = 2 * len(cell.edges)
    rows: list[np.ndarray] = []

    def new_row() -> np.ndarray:
        r = np.zeros(n, dtype=dtype)
        rows.append(r)
        return r

    def put(r, e, end, table, coeff):
        vc, vd = table[(e.id, end)]
        j = pos[e.id]
        r[j] += coeff * vc
        r[j + 1] += coeff * vd

    for v in cell.vertices:
        ends = cell.ends_at(v.id)
        if not ends:
            raise AssemblyError(f"vertex {v.id!r} has no incident edges")
        if v.role == ROLE_EXTERNAL and theta is not None:
            continue  # the pairing emits this stub's rows
        css = cell.coupling_sets_at(v.id)
        if css:
            by_part: dict[int, list] = {}
            for e, end in ends:
                by_part.setdefault(e.part, []).append((e, end))
            side0 = by_part.pop(0, None)
            if side0 is None:
                raise AssemblyError(f"coupling vertex {v.id!r} touches no base edge")
            if set(by_part) != {cs.part for cs in css}:
                raise AssemblyError(
                    f"parts at coupling vertex {v.id!r} disagree with its coupling sets"
                )
            sides = [side0] + [by_part[cs.part] for cs in css]
            for side in sides:
                for (e1, d1), (e2, d2) in zip(side, side[1:]):
                    r = new_row()
                    put(r, e1, d1, val, 1.0)
                    put(r, e2, d2, val, -1.0)
            e0, d0 = side0[0]
            r0 = new_row()
            for e, end in side0:
                put(r0, e, end, dout, -1.0 / eps)
            for cs in css:
                ej, dj = by_part[cs.part][0]
                put(r0, e0, d0, val, cs.q)
                put(r0, ej, dj, val, -cs.q)
            for cs in css:
                ej, dj = by_part[cs.part][0]
                r = new_row()
                for e, end in by_part[cs.part]:
                    put(r, e, end, dout, -1.0 / eps)
                put(r, ej, dj, val, cs.q)
                put(r, e0, d0, val, -cs.q)
        elif len(ends) == 1:
            (e, end), = ends
            r = new_row()
            if v.role == ROLE_EXTERNAL and problem.regime == DIRICHLET:
                put(r, e, end, val, 1.0)
            else:
                put(r, e, end, dout, 1.0)
        else:
            for (e1, d1), (e2, d2) in zip(ends, ends[1:]):
                r = new_row()
                put(r, e1, d1, val, 1.0)
                put(r, e2, d2, val, -1.0)
            r = new_row()
            for e, end in ends:
                put(r, e, end, dout, 1.0)

    if theta is not None:
        for p, rho in zip(cell.pairings, rhos):
            factor = rho if needs_complex else rho.real
            em, dm = _stub_end(cell, p.minus)
            ep, dp = _stub_end(cell, p.plus)
            sign_m, sign_p = p.orientation_signs
            r = new_row()
            put(r, ep, dp, val, 1.0)
            put(r, em, dm, val, -factor)
            r = new_row()
            put(r, ep, dp, dout, float(sign_p))
            put(r, em, dm, dout, -factor * float(sign_m))

    if len(rows) != n:
        raise AssemblyError(f"assembled {len(rows)} rows for {n} unknowns")
    M = np.array(rows)
    if not normalize:
        return M
    # Rows are scaled to unit norm, but the divisor is floored: at doubly
    # degenerate quasimomentum eigenvalues (a self-paired edge at theta = +-1)
    # both pairing rows vanish identically, which is exactly the rank drop
    # that flags the eigenvalue.  Dividing by the raw norm there would turn
    # the dip of sigma_min into a removable point that no scan can see.
    norms = np.maximum(np.linalg.norm(M, axis=1), ROW_NORM_FLOOR)
    return M / norms[:, None]


def singular_values(problem: SpectralProblem, lam: float) -> np.ndarray:
    """All singular values of the secular matrix at lam, descending."""
    return scipy.linalg.svdvals(assemble_secular(problem, lam))


def sigma_min(problem: SpectralProblem, lam: float) -> float:
    """Smallest singular value of the secular matrix at lam.

    Continuous in lam and zero exactly at the fiber eigenvalues.
    """
    return float(singular_values(problem, lam)[-1])


def _structure_scale(cell: PeriodCell):
    """Spacing and top of the small-epsilon limit features, if they exist."""
    if not cell.couplings:
        return None
    try:
        model = limit_theory.gap_right_endpoints(
            limit_theory.limit_model_for_cell(cell)
        )
    except (DegenerateConstantsError, ValueError):
        return None
    marks = sorted({0.0, *model.a, *model.b})
    gaps = [y - x for x, y in zip(marks, marks[1:]) if y > x]
    if not gaps:
        return None
    return min(gaps), marks[-1]


def _scan_grid(problem: SpectralProblem, rad_step: float, lambda_divisions: int):
    lmax = problem.lambda_max
    eps = problem.epsilon
    parts = [np.linspace(0.0, lmax, lambda_divisions + 1)]
    total = problem.cell.total_length()
    if total > 0:
        dk = rad_step / total
        nk = int(math.sqrt(eps * lmax) / dk) + 1
        if nk >= 1:
            ks = np.arange(nk + 1) * dk
            parts.append(np.minimum(ks * ks / eps, lmax))
    scale = _structure_scale(problem.cell)
    if scale is not None:
        gap, top = scale
        hi = min(lmax, 1.3 * top + gap)
        if hi > 0:
            npts = min(int(hi / (gap / 12.0)) + 1, 20_000)
            parts.append(np.linspace(0.0, hi, npts + 1))
    grid = np.unique(np.concatenate(parts))
    return grid[(grid >= 0.0) & (grid <= lmax)]


def _det_phase(problem: SpectralProblem, z: complex):
    """Unit phase and log magnitude of the secular determinant at z."""
    sign, logab = np.linalg.slogdet(assemble_secular(problem, z))
    return complex(sign), float(logab)


def _log_derivative(problem: SpectralProblem, z: complex) -> complex:
    """d/dz of log det of the (unnormalized) secular matrix at z."""
    m = _assemble(problem, z, normalize=False)
    mp = _assemble(problem, z, deriv=True, normalize=False)
    return complex(np.trace(np.linalg.solve(m, mp)))


def count_eigenvalues_interval(problem: SpectralProblem, lo: float, hi: float):
    """Exact eigenvalue count in (lo, hi], by the argument principle.

    The secular determinant is entire in the spectral parameter and
    vanishes precisely at eigenvalues, which are all real because the
    fiber operator is self-adjoint; the determinant's winding around the
    rectangle [lo, hi] x [-h, h] therefore equals the number of
    eigenvalues between lo and hi counted with multiplicity.  The winding
    is the contour integral of the analytic logarithmic derivative,
    evaluated edge by edge with adaptive quadrature, whose error estimate
    guards against a silently skipped turn (the failure mode of sampled
    phase tracking).  Returns None when the result is not certifiably an
    integer, e.g. an eigenvalue essentially on the contour; the caller
    must then treat the scan as unverified.
    """
    h = 0.35 * (hi - lo)
    if not h > 0.0:
        return None
    corners = [
        complex(lo, -h),
        complex(hi, -h),
        complex(hi, h),
        complex(lo, h),
    ]
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
        try:
            for z0, z1 in zip(corners, corners[1:] + corners[:1]):
                dz = z1 - z0

                def arg_rate(t: float, z0=z0, dz=dz) -> float:
                    return (_log_derivative(problem, z0 + t * dz) * dz).imag

                part, perr = scipy.integrate.quad(
                    arg_rate, 0.0, 1.0, epsabs=0.05, epsrel=1e-7, limit=400
                )
                total += part
                err += perr
        except (np.linalg.LinAlgError, ValueError):
            return None
    w = total / (2.0 * math.pi)
    if err > 0.3 or not math.isfinite(w):
        return None
    n = round(w)
    if abs(w - n) > 0.05 or n < 0:
        return None
    return int(n)


def _phase_aligned_dets(problem: SpectralProblem, grid: np.ndarray):
    """Secular determinant samples rotated onto the real axis, or None.

    For real phase factors the determinant is already real.  A complex
    unit factor rho enters the two pairing rows linearly, and the
    conjugate fiber carries the conjugate matrix, so the determinant is a
    Laurent polynomial in rho with real coefficient functions; on the
    unit circle it is one lambda-independent unit phase times a real
    function.  The phase is estimated at the largest sample and verified
    at every point clear of the roots.  Returns (alpha, real samples), or
    None when the verification fails and the caller must fall back to dip
    detection alone.
    """
    dets = np.array(
        [np.linalg.det(assemble_secular(problem, float(x))) for x in grid]
    )
    if not np.iscomplexobj(dets):
        return 1.0 + 0.0j, dets.astype(float)
    mags = np.abs(dets)
    top = float(mags.max(initial=0.0))
    if not top > 0.0:
        return None
    alpha = dets[int(mags.argmax())]
    alpha /= abs(alpha)
    rotated = dets / alpha
    usable = mags > 1e-6 * top
    drift = float(np.max(np.abs(rotated[usable].imag) / mags[usable]))
    if drift > 1e-6:
        return None
    return alpha, np.ascontiguousarray(rotated.real)


def _golden_min(f: Callable[[float], float], a: float, b: float, tol: float):
    """Golden-section minimum of f on [a, b]; returns the best point seen."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    best = (c, fc) if fc <= fd else (d, fd)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
            if fc < best[1]:
                best = (c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
            if fd < best[1]:
                best = (d, fd)
    return best


def _detect_roots(
    problem: SpectralProblem,
    grid: np.ndarray,
    root_tol: float,
    refine_rel: float,
) -> list[tuple[float, float, int]]:
    """Dip and sign-change root detection over one sample grid.

    Local minima of the smallest singular value catch clusters and
    even-multiplicity roots; sign changes of the phase-aligned secular
    determinant catch steep simple crossings whose dip is far narrower
    than the grid, because a flip between two samples brackets a root
    regardless of the dip width.  Returns unmerged (x, sigma, origin)
    triples, where origin is the grid index the root was found from.
    """

    def f(x: float) -> float:
        return sigma_min(problem, x)

    vals = np.array([f(float(x)) for x in grid])

    brackets: list[tuple[float, float, int]] = []
    n = grid.size
    for i in range(1, n - 1):
        mid = vals[i]
        if mid <= vals[i - 1] and mid <= vals[i + 1] and (
            mid < vals[i - 1] or mid < vals[i + 1]
        ):
            brackets.append((grid[i - 1], grid[i + 1], i))
    if vals[-1] < vals[-2]:
        brackets.append((grid[-2], grid[-1], n - 1))
    if vals[0] < vals[1]:
        # a genuine zero mode is the boundary minimum of this bracket; the
        # golden refinement converges onto the endpoint and the snap below
        # reports it as exactly 0.0
        brackets.append((grid[0], grid[1], 0))

    roots: list[tuple[float, float, int]] = []
    for a, b, origin in brackets:
        tol = refine_rel * (1.0 + 0.5 * (a + b))
        x, fx = _golden_min(f, float(a), float(b), tol)
        if fx < root_tol:
            if x <= refine_rel:
                x = 0.0
            roots.append((float(x), float(fx), origin))

    aligned = _phase_aligned_dets(problem, grid)
    if aligned is not None:
        alpha, rdets = aligned

        def signed_det(x: float) -> float:
            d = np.linalg.det(assemble_secular(problem, float(x)))
            return float((d / alpha).real)

        for i in range(n - 1):
            if rdets[i] * rdets[i + 1] < 0.0:
                x = float(
                    brentq(
                        signed_det,
                        float(grid[i]),
                        float(grid[i + 1]),
                        xtol=refine_rel * (1.0 + float(grid[i + 1])),
                    )
                )
                fx = f(x)
                if fx < root_tol:
                    if x <= refine_rel:
                        x = 0.0
                    roots.append((x, fx, i))
    return roots


def _merge_roots(roots):
    roots.sort(key=lambda r: r[0])
    merged: list[tuple[float, float, int]] = []
    for x, fx, origin in roots:
        if merged and abs(x - merged[-1][0]) <= MERGE_RTOL * (1.0 + abs(x)):
            px, pfx, porigin = merged[-1]
            if abs(origin - porigin) > 2:
                raise GridResolutionError(
                    f"refined roots from distant scan intervals collided near "
                    f"lam={x!r}; raise lambda_divisions"
                )
            if fx < pfx:
                merged[-1] = (px if px == 0.0 else x, fx, origin)
        else:
            merged.append((x, fx, origin))
    return merged


def _entry_for_root(problem: SpectralProblem, x: float, root_tol: float):
    svs = singular_values(problem, x)
    mult = max(1, int(np.count_nonzero(svs < root_tol)))
    return (x, mult, float(svs[-1]))


def _count_with_mult(entries, a: float, b: float) -> int:
    return sum(m for x, m, _ in entries if a < x <= b)


def _right_edge(problem: SpectralProblem, lambda_max: float) -> float:
    """A real point just above the ceiling where the determinant is healthy."""
    scale = 1.0 + lambda_max
    r = lambda_max + 1e-9 * scale
    for j in range(10):
        _, la = _det_phase(problem, complex(r, 0.0))
        if math.isfinite(la) and la > -55.0:
            return r
        r = lambda_max + 1e-9 * scale * 3.0 ** (j + 1)
    return r


def _demote_clusters(entries):
    """Drop multiplicities inside tight clusters of separately found roots.

    A pair of roots split by less than the kernel threshold makes the two
    smallest singular values tiny at both points, so each point reports
    multiplicity 2 and the pair is counted four times.  When the contour
    count says the total is too high, treat each member of a tight
    cluster as simple; the caller re-checks the total afterwards.
    """
    out = list(entries)
    for i, (x, m, r) in enumerate(out):
        tight = 1e-4 * (1.0 + abs(x))
        near = any(
            j != i and abs(out[j][0] - x) < tight for j in range(len(out))
        )
        if near and m > 1:
            out[i] = (x, 1, r)
    return out


def _recover_missing(
    problem: SpectralProblem,
    lo: float,
    hi: float,
    w_total: int,
    entries,
    root_tol: float,
    refine_rel: float,
):
    """Locate eigenvalues the scan missed, guided by contour counts.

    Bisects (lo, hi) with the argument principle until each deficient
    interval is narrow, then sweeps it densely.  Raises
    GridResolutionError when a deficit cannot be resolved.
    """
    out = list(entries)
    stack = [(lo, hi, w_total)]
    rounds = 0
    while stack:
        rounds += 1
        if rounds > 500:
            raise GridResolutionError(
                "eigenvalue recovery did not converge; the spectrum near the "
                "ceiling may be pathologically clustered"
            )
        a, b, w = stack.pop()
        have = _count_with_mult(out, a, b)
        if have == w:
            continue
        if have > w:
            raise GridResolutionError(
                f"located {have} eigenvalues in ({a!r}, {b!r}) but the "
                f"contour count is {w}"
            )
        width = b - a
        if width <= 1e-6 * (1.0 + abs(b)):
            raise GridResolutionError(
                f"{w - have} eigenvalues near lam={0.5 * (a + b)!r} cannot "
                "be separated at double precision"
            )
        if width <= max(16.0, 1e-3 * (1.0 + abs(b))):
            for points in (258, 2050):
                xs = np.linspace(a, b, points)
                found = _merge_roots(
                    _detect_roots(problem, xs, root_tol, refine_rel)
                )
                for x, fx, _ in found:
                    if any(
                        abs(x - e[0]) <= MERGE_RTOL * (1.0 + abs(x))
                        for e in out
                    ):
                        continue
                    out.append(_entry_for_root(problem, x, root_tol))
                if _count_with_mult(out, a, b) >= w:
                    break
            have = _count_with_mult(out, a, b)
            if have < w:
                raise GridResolutionError(
                    f"contour counting certifies {w} eigenvalues in "
                    f"({a!r}, {b!r}) but only {have} were located"
                )
            if have > w:
                raise GridResolutionError(
                    f"located {have} eigenvalues in ({a!r}, {b!r}) but the "
                    f"contour count is {w}"
                )
            continue
        wl = None
        for attempt in range(6):
            shift = 0.07 * ((attempt + 1) // 2) * (-1.0 if attempt % 2 else 1.0)
            mid = a + (0.5 + shift) * width
            wl = count_eigenvalues_interval(problem, a, mid)
            if wl is not None:
                break
        if wl is None:
            raise GridResolutionError(
                f"contour counting failed while narrowing ({a!r}, {b!r})"
            )
        wr = w - wl
        if wr < 0:
            raise GridResolutionError(
                f"inconsistent contour counts while narrowing ({a!r}, {b!r})"
            )
        stack.append((a, mid, wl))
        stack.append((mid, b, wr))
    out.sort(key=lambda e: e[0])
    return out


def eigenvalues_below(
    problem: SpectralProblem,
    *,
    rad_step: float = GRID_RAD_STEP,
    lambda_divisions: int = LAMBDA_DIVISIONS,
    root_tol: float = ROOT_TOL,
    refine_rel: float = REFINE_REL,
) -> Spectrum:
    """All fiber eigenvalues in [0, lambda_max], with multiplicities.

    Roots are found by dip and sign-change detection over a scan grid,
    then the total count (with multiplicity) is certified against the
    argument-principle contour count over the whole window; any deficit
    triggers a bisection hunt for the missing eigenvalues, so even pairs
    that fall between grid points without a net determinant sign change
    are recovered.  When the contour count itself cannot be completed the
    scan result is returned unverified.

    Deterministic: the same problem always yields the same spectrum.  Two
    refined roots that collide despite coming from well-separated scan
    intervals raise GridResolutionError (raise lambda_divisions then).
    """
    grid = _scan_grid(problem, rad_step, lambda_divisions)
    if grid.size < 4:
        grid = np.linspace(0.0, problem.lambda_max, 4)

    merged = _merge_roots(_detect_roots(problem, grid, root_tol, refine_rel))
    entries = [
        _entry_for_root(problem, x, root_tol)
        for x, _, _ in merged
        if x <= problem.lambda_max * (1.0 + 1e-12)
    ]

    lo_edge = -1.0 - 1e-3 * (1.0 + problem.lambda_max)
    hi_edge = _right_edge(problem, problem.lambda_max)
    w_total = count_eigenvalues_interval(problem, lo_edge, hi_edge)
    if w_total is not None:
        found = _count_with_mult(entries, lo_edge, hi_edge)
        if found > w_total:
            entries = _demote_clusters(entries)
            found = _count_with_mult(entries, lo_edge, hi_edge)
        if found < w_total:
            entries = _recover_missing(
                problem, lo_edge, hi_edge, w_total, entries,
                root_tol, refine_rel,
            )
        elif found > w_total:
            raise GridResolutionError(
                f"located {found} eigenvalues below the ceiling but the "
                f"contour count is {w_total}"
            )

    eigenvalues: list[tuple[float, int]] = []
    residuals: list[float] = []
    for x, mult, resid in entries:
        if x > problem.lambda_max * (1.0 + 1e-12):
            continue
        eigenvalues.append((x, mult))
        residuals.append(resid)
    return Spectrum(tuple(eigenvalues), tuple(residuals), problem.epsilon)


# --- finite-difference oracle -------------------------------------------------


def fem_oracle(problem: SpectralProblem, mesh_density: int = 100) -> Spectrum:
    """Independent second-order finite-difference discretization.

    Every edge is sampled uniformly with at least ``mesh_density`` nodes
    per unit length; interior nodes carry the three-point second
    difference, endpoint slots carry the vertex conditions with one-sided
    second-order derivative quotients.  The resulting generalized
    eigenproblem is solved dense; eigenvalue errors scale like the square
    of the mesh width.  Residuals are not defined for this route and are
    reported as NaN.
    """
    if mesh_density < 100:
        raise ValueError("mesh_density below 100 gives a poor oracle; use >= 100")
    cell = problem.cell
    eps = problem.epsilon

    theta = problem.regime if isinstance(problem.regime, Theta) else None
    rhos = _pairing_factors(cell, theta) if theta is not None else []
    needs_complex = any(abs(r.imag) > 0.0 for r in rhos)
    dtype = np.complex128 if needs_complex else np.float64

    layout: dict[str, tuple[int, int, float]] = {}
    total = 0
    for e in cell.edges:
        ne = max(2, math.ceil(mesh_density * e.length))
        layout[e.id] = (total, ne, e.length / ne)
        total += ne + 1

    A = np.zeros((total, total), dtype=dtype)
    B = np.zeros((total, total), dtype=dtype)
    r = 0
    for e in cell.edges:
        off, ne, h = layout[e.id]
        w = 1.0 / (eps * h * h)
        for i in range(1, ne):
            A[r, off + i - 1] -= w
            A[r, off + i] += 2.0 * w
            A[r, off + i + 1] -= w
            B[r, off + i] = 1.0
            r += 1

    def vnode(e, end):
        off, ne, _ = layout[e.id]
        return off if end == 0 else off + ne

    def dstencil(e, end):
        off, ne, h = layout[e.id]
        if end == 0:
            idx = (off, off + 1, off + 2)
        else:
            idx = (off + ne, off + ne - 1, off + ne - 2)
        return tuple(zip(idx, (-1.5 / h, 2.0 / h, -0.5 / h)))

    def add_value(row, e, end, coeff):
        A[row, vnode(e, end)] += coeff

    def add_deriv(row, e, end, coeff):
        for node, c in dstencil(e, end):
            A[row, node] += coeff * c

    for v in cell.vertices:
        ends = cell.ends_at(v.id)
        if not ends:
            raise AssemblyError(f"vertex {v.id!r} has no incident edges")
        if v.role == ROLE_EXTERNAL and theta is not None:
            continue
        css = cell.coupling_sets_at(v.id)
        if css:
            groups: dict[int, list] = {}
            for e, end in ends:
                groups.setdefault(e.part, []).append((e, end))
            base = groups.pop(0, None)
            if base is None:
                raise AssemblyError(f"coupling vertex {v.id!r} touches no base edge")
            if set(groups) != {cs.part for cs in css}:
                raise AssemblyError(
                    f"parts at coupling vertex {v.id!r} disagree with its coupling sets"
                )
            for side in [base] + [groups[cs.part] for cs in css]:
                for (e1, d1), (e2, d2) in zip(side, side[1:]):
                    add_value(r, e1, d1, 1.0)
                    add_value(r, e2, d2, -1.0)
                    r += 1
            for e, end in base:
                add_deriv(r, e, end, -1.0 / eps)
            for cs in css:
                add_value(r, *base[0], cs.q)
                add_value(r, *groups[cs.part][0], -cs.q)
            r += 1
            for cs in css:
                for e, end in groups[cs.part]:
                    add_deriv(r, e, end, -1.0 / eps)
                add_value(r, *groups[cs.part][0], cs.q)
                add_value(r, *base[0], -cs.q)
                r += 1
        elif len(ends) == 1:
            (e, end), = ends
            if v.role == ROLE_EXTERNAL and problem.regime == DIRICHLET:
                add_value(r, e, end, 1.0)
            else:
                add_deriv(r, e, end, 1.0)
            r += 1
        else:
            for (e1, d1), (e2, d2) in zip(ends, ends[1:]):
                add_value(r, e1, d1, 1.0)
                add_value(r, e2, d2, -1.0)
                r += 1
            for e, end in ends:
                add_deriv(r, e, end, 1.0)
            r += 1

    if theta is not None:
        for p, rho in zip(cell.pairings, rhos):
            factor = rho if needs_complex else rho.real
            em, dm = _stub_end(cell, p.minus)
            ep, dp = _stub_end(cell, p.plus)
            sign_m, sign_p = p.orientation_signs
            add_value(r, ep, dp, 1.0)
            add_value(r, em, dm, -factor)
            r += 1
            add_deriv(r, ep, dp, float(sign_p))
            add_deriv(r, em, dm, -factor * float(sign_m))
            r += 1

    if r != total:
        raise AssemblyError(f"assembled {r} rows for {total} unknowns")

    # joint row scaling keeps the pencil well balanced for QZ
    for i in range(total):
        s = max(np.linalg.norm(A[i]), np.linalg.norm(B[i]))
        if s > 0:
            A[i] /= s
            B[i] /= s

    w = scipy.linalg.eig(A, B, right=False)
    w = w[np.isfinite(w)]
    keep = (np.abs(w.imag) <= 1e-6 * (1.0 + np.abs(w.real))) & (
        w.real >= -1e-6
    ) & (w.real <= problem.lambda_max)
    lams = np.sort(w.real[keep])

    eigenvalues: list[tuple[float, int]] = []
    for lam in lams:
        lam = max(float(lam), 0.0)
        if eigenvalues and lam - eigenvalues[-1][0] <= 1e-6 * (1.0 + lam):
            prev, mult = eigenvalues[-1]
            eigenvalues[-1] = (prev, mult + 1)
        else:
            eigenvalues.append((lam, 1))
    residuals = tuple(math.nan for _ in eigenvalues)
    return Spectrum(tuple(eigenvalues), residuals, problem.epsilon)
