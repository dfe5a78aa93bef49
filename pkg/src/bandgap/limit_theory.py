"""Small-epsilon limit of the band edges.

As the stiffness parameter epsilon goes to zero, the low fiber eigenvalues
of a period cell with m attached parts converge to quantities computable
from per-part aggregates alone: the total lengths l_0..l_m, the coupling
vertex counts N_1..N_m and the strengths q_1..q_m.  The per-part constants

    a_j = N_j q_j / l_j        (sorted ascending, pairwise distinct)

are the limits of the decoupled-side eigenvalues, and the roots b_j of

    F(lam) = 1 + sum_i a_i l_i / (l_0 (a_i - lam))

interlace them: a_j < b_j < a_{j+1} and a_m < b_m <= a_m + sum_i a_i l_i/l_0.
Spectral gaps of the periodic operator open up exactly on (a_j, b_j).

The same data defines an (m+1)x(m+1) matrix whose spectrum is {0, b_1..b_m};
it is self-adjoint in the length-weighted inner product, so its eigenvalues
are computed through a symmetric similarity transform.  The determinant
identity det(A - lam I) = -lam * prod_j (a_j - lam) * F(lam) ties the two
routes together and serves as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateConstantsError, PoleError
from .graph_model import TIE_RTOL, PartTotals, PeriodCell, part_totals

POLE_RTOL = 1e-12
ROOT_RTOL = 1e-12


@dataclass(frozen=True)
class LimitModel:
    """Per-part aggregates of a period cell, sorted by the constants a_j.

    ``l`` holds the m+1 total lengths with the base part at index 0;
    ``N``, ``q``, ``a`` and ``b`` hold one entry per attached part, all
    permuted consistently so that ``a`` is ascending.  ``b`` is None until
    :func:`gap_right_endpoints` fills it.
    """

    l: tuple[float, ...]
    N: tuple[int, ...]
    q: tuple[float, ...]
    a: tuple[float, ...]
    b: tuple[float, ...] | None = None

    @property
    def m(self) -> int:
        return len(self.a)


def limit_constants(
    totals: Mapping[int, PartTotals] | Mapping[int, tuple], q: Sequence[float]
) -> LimitModel:
    """Build a LimitModel from per-part totals and coupling strengths.

    ``totals`` maps part index (0..m) to (length, coupling_count);
    ``q[j-1]`` is the strength of part j.  Raises
    DegenerateConstantsError when two constants a_j collide within
    relative tolerance 1e-12.
    """
    m = len(totals) - 1
    if len(q) != m:
        raise ValueError(f"expected {m} strengths, got {len(q)}")
    if 0 not in totals:
        raise ValueError("totals must include the base part 0")

    def unpack(j):
        t = totals[j]
        if isinstance(t, PartTotals):
            return t.length, t.coupling_count
        return float(t[0]), int(t[1])

    l0, _ = unpack(0)
    if not l0 > 0:
        raise ValueError(f"base length must be positive, got {l0}")
    rows = []
    for j in range(1, m + 1):
        lj, nj = unpack(j)
        qj = float(q[j - 1])
        if not lj > 0:
            raise ValueError(f"part {j} has non-positive length {lj}")
        if nj < 1:
            raise ValueError(f"part {j} has no coupling vertices")
        if not qj > 0:
            raise ValueError(f"part {j} has non-positive strength {qj}")
        rows.append((nj * qj / lj, lj, nj, qj))
    rows.sort(key=lambda r: r[0])
    for (a1, *_), (a2, *_) in zip(rows, rows[1:]):
        if abs(a2 - a1) <= TIE_RTOL * max(abs(a1), abs(a2)):
            raise DegenerateConstantsError(
                f"constants {a1!r} and {a2!r} coincide within tolerance"
            )
    return LimitModel(
        l=(l0,) + tuple(r[1] for r in rows),
        N=tuple(r[2] for r in rows),
        q=tuple(r[3] for r in rows),
        a=tuple(r[0] for r in rows),
    )


def limit_model_for_cell(cell: PeriodCell) -> LimitModel:
    """LimitModel of a period cell, straight from its totals and couplings."""
    q = [cs.q for cs in sorted(cell.couplings, key=lambda c: c.part)]
    return limit_constants(part_totals(cell), q)


def eval_characteristic(model: LimitModel, lam: float) -> float:
    """Evaluate F(lam) = 1 + sum_i a_i l_i / (l_0 (a_i - lam)).

    The sum is accumulated term by term, exactly as written.  Raises
    PoleError when lam is within relative tolerance of a pole a_i.
    """
    l0 = model.l[0]
    acc = 1.0
    for i, ai in enumerate(model.a):
        if abs(lam - ai) <= POLE_RTOL * max(1.0, abs(ai)):
            raise PoleError(f"lam={lam!r} is at the pole a_{i + 1}={ai!r}")
        acc += ai * model.l[i + 1] / (l0 * (ai - lam))
    return acc


def _bracket_root(model: LimitModel, lo_pole: float, hi: float, hi_open: bool):
    """Shrink towards a sign change of F on (lo_pole, hi)."""
    width = hi - lo_pole
    lo = lo_pole + 0.25 * width
    for _ in range(400):
        try:
            if eval_characteristic(model, lo) < 0:
                break
        except PoleError:
            pass
        lo = lo_pole + (lo - lo_pole) * 0.5
    else:  # pragma: no cover - F -> -inf at the pole, so this cannot happen
        raise ArithmeticError("no negative value found above the pole")
    fhi = None
    if hi_open:
        hi_ = hi - 0.25 * width
        for _ in range(400):
            try:
                fhi = eval_characteristic(model, hi_)
                if fhi > 0:
                    break
            except PoleError:
                pass
            hi_ = hi - (hi - hi_) * 0.5
        else:  # pragma: no cover
            raise ArithmeticError("no positive value found below the pole")
        hi = hi_
    else:
        fhi = eval_characteristic(model, hi)
        if fhi == 0.0:
            return hi
        while fhi < 0:
            # roundoff can leave the closed upper endpoint barely negative
            hi += max(abs(hi), 1.0) * 1e-15
            fhi = eval_characteristic(model, hi)
    return brentq(
        lambda x: eval_characteristic(model, x),
        lo,
        hi,
        xtol=1e-15 * max(1.0, abs(hi)),
        rtol=1e-15,
    )


def gap_right_endpoints(model: LimitModel) -> LimitModel:
    """Solve F = 0 on each inter-pole interval; returns the model with b set.

    F is strictly increasing between consecutive poles and runs from -inf
    to +inf there, so each interval (a_j, a_{j+1}) holds exactly one root.
    The last root lies in (a_m, a_m + sum_i a_i l_i / l_0]; the upper end
    of that bracket is attained exactly when m == 1.
    """
    if model.m == 0:
        return replace(model, b=())
    spread = sum(
        ai * li for ai, li in zip(model.a, model.l[1:])
    ) / model.l[0]
    roots = []
    for j in range(model.m):
        lo = model.a[j]
        if j + 1 < model.m:
            roots.append(_bracket_root(model, lo, model.a[j + 1], hi_open=True))
        else:
            roots.append(_bracket_root(model, lo, lo + spread, hi_open=False))
    return replace(model, b=tuple(float(r) for r in roots))


def limit_matrix(model: LimitModel) -> np.ndarray:
    """The (m+1)x(m+1) limit matrix A.

    Row 0 balances the base part against every attached part, row j the
    attached part j against the base; all entries are flux strengths per
    unit length.
    """
    m = model.m
    A = np.zeros((m + 1, m + 1))
    l0 = model.l[0]
    A[0, 0] = sum(q * n for q, n in zip(model.q, model.N)) / l0
    for j in range(1, m + 1):
        qn = model.q[j - 1] * model.N[j - 1]
        A[0, j] = -qn / l0
        A[j, 0] = -qn / model.l[j]
        A[j, j] = qn / model.l[j]
    return A


def limit_matrix_spectrum(model: LimitModel) -> np.ndarray:
    """Eigenvalues of the limit matrix, ascending.

    A is self-adjoint in the inner product weighted by the lengths l_j, so
    D^(1/2) A D^(-1/2) with D = diag(l) is symmetric and eigvalsh applies.
    The smallest eigenvalue is 0 up to roundoff; the others are the b_j.
    """
    A = limit_matrix(model)
    w = np.sqrt(np.asarray(model.l))
    S = (w[:, None] * A) / w[None, :]
    S = 0.5 * (S + S.T)  # symmetrize roundoff
    return np.linalg.eigvalsh(S)


def det_identity_residual(model: LimitModel, lam: float) -> float:
    """Normalized defect of det(A - lam I) = -lam * prod_j (a_j - lam) * F(lam)."""
    A = limit_matrix(model)
    lhs = float(np.linalg.det(A - lam * np.eye(model.m + 1)))
    prod = 1.0
    for aj in model.a:
        prod *= aj - lam
    rhs = -lam * prod * eval_characteristic(model, lam)
    return abs(lhs - rhs) / (1.0 + abs(lhs))


def dirichlet_limits(model: LimitModel) -> tuple[float, ...]:
    """Limits of the decoupled-side eigenvalues: exactly the constants a_j."""
    return model.a
