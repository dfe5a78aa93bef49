"""Inverse design: comb cells whose low spectral gaps hit prescribed intervals.

Given disjoint target intervals (alpha_j, beta_j) the attached-part data
(l_j, q_j) solving a_j = alpha_j and b_j = beta_j exists in closed form,
because the characteristic function is a rational interpolation problem in
the quantities a_j l_j.  Every design is re-verified through the forward
limit computation before it is returned.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import DesignConditioningError, FormatError, TargetOrderError
from .graph_model import PeriodCell, build_comb, cell_to_dict
from .limit_theory import LimitModel, gap_right_endpoints, limit_constants

VERIFY_RTOL = 1e-9      # mandatory round-trip bound on recovered gap endpoints
_LOG_FORM_MIN_M = 4     # switch to log-magnitude products above this many gaps


def _as_float(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{what} must be a number")
    return float(value)


@dataclass(frozen=True)
class GapTargets:
    """Prescribed gap intervals for an m-gap comb design.

    ``intervals`` lists (alpha_j, beta_j) pairs that must satisfy
    0 < alpha_1, alpha_j < beta_j < alpha_{j+1}, and beta_m < L where L is
    the spectral window the design is judged in.  ``N`` gives the number
    of coupling vertices each attached part will use (default 1 each).
    """

    L: float
    intervals: tuple[tuple[float, float], ...]
    l0: float = 1.0
    N: tuple[int, ...] = ()

    def __post_init__(self):
        ivs = tuple(
            (float(a), float(b)) for a, b in self.intervals
        )
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "l0", float(self.l0))
        n = self.N if self.N else tuple(1 for _ in ivs)
        n = tuple(int(v) for v in n)
        object.__setattr__(self, "N", n)
        if not ivs:
            raise TargetOrderError("need at least one target interval")
        if not self.l0 > 0:
            raise TargetOrderError(f"base length must be positive, got {self.l0}")
        if len(n) != len(ivs):
            raise TargetOrderError(
                f"{len(ivs)} intervals but {len(n)} coupling counts"
            )
        if any(v < 1 for v in n):
            raise TargetOrderError("coupling counts must be positive integers")
        seq = [0.0]
        for a, b in ivs:
            seq.extend((a, b))
        for x, y in zip(seq, seq[1:]):
            if not x < y:
                raise TargetOrderError(
                    f"targets must be strictly increasing and positive; "
                    f"got {y} after {x}"
                )
        if not ivs[-1][1] < self.L:
            raise TargetOrderError(
                f"last target endpoint {ivs[-1][1]} must lie below the "
                f"window L={self.L}"
            )

    @property
    def m(self) -> int:
        return len(self.intervals)

    @property
    def alpha(self) -> tuple[float, ...]:
        return tuple(a for a, _ in self.intervals)

    @property
    def beta(self) -> tuple[float, ...]:
        return tuple(b for _, b in self.intervals)


@dataclass(frozen=True)
class GapDesign:
    targets: GapTargets
    l: tuple[float, ...]
    q: tuple[float, ...]
    residuals: Mapping[str, float] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.l)


def _length_products(alpha, beta, l0):
    """Closed-form attached lengths; log-magnitude form for larger systems."""
    m = len(alpha)
    if m < _LOG_FORM_MIN_M:
        out = []
        for j in range(m):
            val = l0 * (beta[j] - alpha[j]) / alpha[j]
            for i in range(m):
                if i != j:
                    val *= (beta[i] - alpha[j]) / (alpha[i] - alpha[j])
            out.append(val)
        return out
    out = []
    for j in range(m):
        log_mag = math.log(l0) + math.log(beta[j] - alpha[j]) - math.log(alpha[j])
        sign = 1.0
        for i in range(m):
            if i == j:
                continue
            num = beta[i] - alpha[j]
            den = alpha[i] - alpha[j]
            log_mag += math.log(abs(num)) - math.log(abs(den))
            if num < 0:
                sign = -sign
            if den < 0:
                sign = -sign
        out.append(sign * math.exp(log_mag))
    return out


def design(targets: GapTargets) -> GapDesign:
    """Solve for (l_j, q_j) hitting the targets, then verify the round trip.

    Raises DesignConditioningError when the forward recomputation of the
    gap endpoints misses a target by more than the relative bound, which
    happens for nearly coincident targets beyond double precision.
    """
    alpha, beta = targets.alpha, targets.beta
    lengths = _length_products(alpha, beta, targets.l0)
    if any(not l > 0 for l in lengths) or any(not math.isfinite(l) for l in lengths):
        raise DesignConditioningError(
            "computed lengths are not positive finite numbers; "
            "targets are too close together for double precision"
        )
    q = [alpha[j] * lengths[j] / targets.N[j] for j in range(targets.m)]

    totals = {0: (targets.l0, 0)}
    for j in range(targets.m):
        totals[j + 1] = (lengths[j], targets.N[j])
    model = gap_right_endpoints(limit_constants(totals, q))
    err_a = max(
        abs(model.a[j] - alpha[j]) / alpha[j] for j in range(targets.m)
    )
    err_b = max(
        abs(model.b[j] - beta[j]) / beta[j] for j in range(targets.m)
    )
    err_sys = _system_residual(alpha, beta, lengths, targets.l0)
    if err_a > VERIFY_RTOL or err_b > VERIFY_RTOL:
        raise DesignConditioningError(
            f"verification failed: endpoint residuals a={err_a:.3e} "
            f"b={err_b:.3e} exceed {VERIFY_RTOL:.0e}"
        )
    return GapDesign(
        targets,
        tuple(lengths),
        tuple(q),
        {"a": err_a, "b": err_b, "system": err_sys},
    )


def _system_residual(alpha, beta, lengths, l0) -> float:
    worst = 0.0
    for bi in beta:
        acc = 1.0
        for j in range(len(alpha)):
            acc += alpha[j] * lengths[j] / (l0 * (alpha[j] - bi))
        worst = max(worst, abs(acc))
    return worst


def verify_system(d: GapDesign) -> float:
    """Largest residual of the interpolation identities the design must satisfy.

    For each target right endpoint beta_i the characteristic function must
    vanish: 1 + sum_j alpha_j l_j / (l0 (alpha_j - beta_i)) = 0.
    """
    return _system_residual(d.targets.alpha, d.targets.beta, d.l, d.targets.l0)


def limit_of_design(d: GapDesign) -> LimitModel:
    """Forward limit model of a design, with gap endpoints filled in."""
    totals = {0: (d.targets.l0, 0)}
    for j in range(d.m):
        totals[j + 1] = (d.l[j], d.targets.N[j])
    return gap_right_endpoints(limit_constants(totals, list(d.q)))


def realize(d: GapDesign) -> PeriodCell:
    """Concrete one-dimensional comb cell carrying the design.

    Only single-vertex couplings translate directly into the comb shape,
    so every N_j must be 1.
    """
    if any(n != 1 for n in d.targets.N):
        raise ValueError(
            "realize supports single-vertex couplings (every N_j = 1) only"
        )
    return build_comb(d.m, d.targets.l0, list(d.l), list(d.q))


# --- JSON documents -----------------------------------------------------------

_TARGET_KEYS = {"L", "intervals", "l0", "N"}
_REQUIRED_TARGET_KEYS = {"L", "intervals"}


def targets_from_dict(doc: Mapping) -> GapTargets:
    if not isinstance(doc, Mapping):
        raise FormatError("targets document must be an object")
    unknown = set(doc) - _TARGET_KEYS
    if unknown:
        raise FormatError(f"targets document has unknown keys {sorted(unknown)}")
    missing = _REQUIRED_TARGET_KEYS - set(doc)
    if missing:
        raise FormatError(f"targets document is missing keys {sorted(missing)}")
    raw = doc["intervals"]
    if not isinstance(raw, Sequence) or isinstance(raw, (str, bytes)):
        raise FormatError("intervals must be an array of [alpha, beta] pairs")
    intervals = []
    for item in raw:
        if (
            not isinstance(item, Sequence)
            or isinstance(item, (str, bytes))
            or len(item) != 2
        ):
            raise FormatError("each interval must be an [alpha, beta] pair")
        intervals.append(
            (_as_float(item[0], "alpha"), _as_float(item[1], "beta"))
        )
    n = ()
    if "N" in doc:
        raw_n = doc["N"]
        if not isinstance(raw_n, Sequence) or isinstance(raw_n, (str, bytes)):
            raise FormatError("N must be an array of integers")
        for v in raw_n:
            if isinstance(v, bool) or not isinstance(v, int):
                raise FormatError("N must be an array of integers")
        n = tuple(raw_n)
    l0 = _as_float(doc.get("l0", 1.0), "l0")
    return GapTargets(
        _as_float(doc["L"], "L"), tuple(intervals), l0=l0, N=n
    )


def targets_to_dict(t: GapTargets) -> dict:
    return {
        "L": t.L,
        "intervals": [[a, b] for a, b in t.intervals],
        "l0": t.l0,
        "N": list(t.N),
    }


def loads_targets(text: str) -> GapTargets:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return targets_from_dict(doc)


def load_targets(path) -> GapTargets:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_targets(fh.read())


def design_to_dict(d: GapDesign, include_cell: bool = False) -> dict:
    doc = {
        "targets": targets_to_dict(d.targets),
        "l": list(d.l),
        "q": list(d.q),
        "residuals": dict(d.residuals),
    }
    if include_cell:
        doc["cell"] = cell_to_dict(realize(d))
    return doc
