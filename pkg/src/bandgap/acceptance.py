"""Self-contained acceptance checks with pinned tolerances and time budgets.

Each criterion is an end-to-end statement about the engine (route
equivalence, closed-form spectra, oracle agreement, convergence,
certified-gap placement, structural invariances) with a numeric bound
fixed here once and for all.  ``run_all`` executes every criterion and
reports one pass/fail line each; the test suite and the ``selftest``
command both go through this module so they cannot drift apart.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .band_structure import certify_gaps, convergence_study, sweep_fiber_spectra
from .errors import DegenerateConstantsError
from .fiber_solver import (
    DIRICHLET,
    NEUMANN,
    SpectralProblem,
    Theta,
    eigenvalues_below,
    fem_oracle,
)
from .gap_designer import GapTargets, design, realize, verify_system
from .graph_model import (
    ROLE_EXTERNAL,
    BoundaryPairing,
    Edge,
    PeriodCell,
    Vertex,
    build_comb,
    subdivide_edge,
    validate_cell,
)
from .limit_theory import (
    det_identity_residual,
    gap_right_endpoints,
    limit_constants,
    limit_matrix_spectrum,
)


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    seconds: float
    budget: float
    detail: str

    @property
    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (
            f"{mark} criterion {self.index} ({self.name}) "
            f"[{self.seconds:.1f}s of {self.budget:.0f}s]: {self.detail}"
        )


def _random_model(rng, max_m=8):
    while True:
        m = int(rng.integers(1, max_m + 1))
        l = rng.uniform(0.2, 5.0, size=m + 1)
        q = rng.uniform(0.2, 5.0, size=m)
        n = rng.integers(1, 5, size=m)
        totals = {0: (float(l[0]), 0)}
        for j in range(m):
            totals[j + 1] = (float(l[j + 1]), int(n[j]))
        try:
            return limit_constants(totals, [float(x) for x in q])
        except DegenerateConstantsError:
            continue


def _interval_cell(length: float) -> PeriodCell:
    """A single edge whose two boundary stubs take the regime condition.

    The clamped/free regimes act at external-boundary vertices, so the
    tips are marked external even though no pairing is attached; only the
    fiber solver sees this cell, never the validator.
    """
    return PeriodCell(
        dimension=1,
        vertices=[Vertex("left", ROLE_EXTERNAL), Vertex("right", ROLE_EXTERNAL)],
        edges=[Edge("seg", "left", "right", length, 0)],
        pairings=[],
        couplings=[],
    )


def _circle_cell(length: float) -> PeriodCell:
    return PeriodCell(
        dimension=1,
        vertices=[Vertex("a", ROLE_EXTERNAL), Vertex("b", ROLE_EXTERNAL)],
        edges=[Edge("loop", "a", "b", length, 0)],
        pairings=[BoundaryPairing("a", "b", (1,), (1, -1))],
        couplings=[],
    )


def _model_comb() -> PeriodCell:
    """The reference comb whose limit gap is (2, 4)."""
    return build_comb(1, 1.0, [1.0], [2.0])


def _spectrum_with_count(cell, regime, epsilon, lambda_max, count):
    """Grow the ceiling until ``count`` eigenvalues are resolved."""
    for _ in range(8):
        spec = eigenvalues_below(SpectralProblem(cell, regime, epsilon, lambda_max))
        if len(spec.values) >= count:
            return spec, lambda_max
        lambda_max *= 2.0
    raise AssertionError(
        f"could not resolve {count} eigenvalues below {lambda_max}"
    )


def _criterion_1():
    """Matrix route and root-finding route agree on the limit spectrum."""
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        model = gap_right_endpoints(_random_model(rng))
        spec = limit_matrix_spectrum(model)
        scale = 1.0 + max(model.b)
        dev = abs(float(spec[0])) / scale
        for v, b in zip(spec[1:], model.b):
            dev = max(dev, abs(float(v) - b) / b)
        worst = max(worst, dev)
    return worst <= 1e-9, (
        f"worst relative deviation {worst:.3e} over 100 random systems "
        f"(bound 1e-09)"
    )


def _criterion_2():
    """Determinant of the limit matrix factors through the characteristic function."""
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        model = _random_model(rng)
        hi = 2.0 * model.a[-1] + 1.0
        taken = 0
        while taken < 20:
            lam = float(rng.uniform(-hi, hi))
            if min(abs(lam - a) for a in model.a) < 1e-6 * hi:
                continue
            worst = max(worst, det_identity_residual(model, lam))
            taken += 1
    return worst <= 1e-8, (
        f"worst normalized determinant defect {worst:.3e} over "
        f"100 systems x 20 points (bound 1e-08)"
    )


def _criterion_3():
    """Designed parameters reproduce their targets through the forward map."""
    rng = np.random.default_rng(303)
    worst_a = worst_b = worst_sys = 0.0
    for _ in range(200):
        m = int(rng.integers(1, 6))
        steps = rng.uniform(0.1, 1.8, size=2 * m)
        vals = np.cumsum(steps) + rng.uniform(0.05, 0.5)
        intervals = tuple(
            (float(vals[2 * i]), float(vals[2 * i + 1])) for i in range(m)
        )
        big = float(vals[-1] + rng.uniform(0.1, 2.0))
        n = tuple(int(v) for v in rng.integers(1, 5, size=m))
        t = GapTargets(big, intervals, l0=float(rng.uniform(0.3, 3.0)), N=n)
        d = design(t)
        worst_a = max(worst_a, d.residuals["a"])
        worst_b = max(worst_b, d.residuals["b"])
        worst_sys = max(worst_sys, verify_system(d))
    ok = worst_a <= 1e-10 and worst_b <= 1e-9 and worst_sys <= 1e-9
    return ok, (
        f"200 round trips: left endpoints {worst_a:.3e} (1e-10), right "
        f"endpoints {worst_b:.3e} (1e-09), system residual {worst_sys:.3e} (1e-09)"
    )


def _criterion_4():
    """Closed-form spectra: clamped/free interval of length pi, then a circle."""
    iv = _interval_cell(math.pi)
    sd = eigenvalues_below(SpectralProblem(iv, DIRICHLET, 1.0, 30.0))
    sn = eigenvalues_below(SpectralProblem(iv, NEUMANN, 1.0, 30.0))
    if len(sd.values) < 5 or len(sn.values) < 5:
        return False, "interval spectra came back short"
    err = 0.0
    for got, want in zip(sd.values[:5], (1.0, 4.0, 9.0, 16.0, 25.0)):
        err = max(err, abs(got - want))
    for got, want in zip(sn.values[:5], (0.0, 1.0, 4.0, 9.0, 16.0)):
        err = max(err, abs(got - want))
    if err > 1e-8:
        return False, f"interval spectra off by {err:.3e} (bound 1e-08 absolute)"

    circle = _circle_cell(1.0)
    spec = eigenvalues_below(
        SpectralProblem(circle, Theta.from_angles((0.0,)), 1.0, 170.0)
    )
    w = (2.0 * math.pi) ** 2
    expected = ((0.0, 1), (w, 2), (4.0 * w, 2))
    if len(spec.eigenvalues) != len(expected):
        return False, (
            f"circle found {len(spec.eigenvalues)} groups, expected 3"
        )
    rel = 0.0
    for (lam, mult), (want, wmult) in zip(spec.eigenvalues, expected):
        if mult != wmult:
            return False, (
                f"circle multiplicity at {want:g} is {mult}, expected {wmult}"
            )
        rel = max(rel, abs(lam - want) / (1.0 + want))
    ok = rel <= 1e-7
    return ok, (
        f"interval endpoints off by {err:.3e} (1e-08 absolute), circle "
        f"off by {rel:.3e} relative (1e-07) with exact multiplicities"
    )


def _criterion_5():
    """Secular solver vs independent finite-difference route on the comb."""
    cell = _model_comb()
    eps = 0.05
    worst = 0.0
    for regime in (NEUMANN, DIRICHLET):
        sec, lmax = _spectrum_with_count(cell, regime, eps, 800.0, 6)
        fem = fem_oracle(
            SpectralProblem(cell, regime, eps, lmax), mesh_density=500
        )
        if len(fem.values) < 6:
            return False, "finite-difference route came back short"
        for s, f in zip(sec.values[:6], fem.values[:6]):
            worst = max(worst, abs(s - f) / max(abs(s), 1.0))
    return worst <= 1e-3, (
        f"first 6 free and clamped eigenvalues agree to {worst:.3e} "
        f"relative (bound 1e-03) at mesh density 500"
    )


def _criterion_6():
    """Every sampled fiber eigenvalue sits inside its free/clamped bracket."""
    cell = _model_comb()
    worst = math.inf
    for eps in (0.1, 0.01):
        sd, lmax = _spectrum_with_count(cell, DIRICHLET, eps, 2000.0, 8)
        sn = eigenvalues_below(SpectralProblem(cell, NEUMANN, eps, lmax))
        if len(sn.values) < 8:
            return False, f"free spectrum short at epsilon={eps}"
        samples = sweep_fiber_spectra(cell, eps, lmax, samples_per_dim=16)
        for s in samples:
            vals = s.spectrum.values[:8]
            if len(vals) < 8:
                return False, (
                    f"fiber at {s.angles} resolved only {len(vals)} "
                    f"eigenvalues at epsilon={eps}"
                )
            for k, lam in enumerate(vals):
                worst = min(worst, lam - sn.values[k], sd.values[k] - lam)
    return worst >= -1e-8, (
        f"smallest bracketing slack {worst:.3e} over 2 stiffness values, "
        f"16 fibers, 8 levels (bound -1e-08)"
    )


def _criterion_7():
    """Small-stiffness convergence of the comb toward its limit gap (2, 4)."""
    cell = _model_comb()
    eps_list = [0.1, 0.01, 0.001]
    table = convergence_study(cell, eps_list)
    a_seq = [r.a_eps for r in table.rows]
    b_seq = [r.b_eps for r in table.rows]
    if not all(x < y < 2.0 for x, y in zip(a_seq, a_seq[1:])):
        return False, f"clamped proxies not strictly increasing below 2: {a_seq}"
    if not all(x < y < 4.0 for x, y in zip(b_seq, b_seq[1:])):
        return False, f"free proxies not strictly increasing below 4: {b_seq}"
    err_a = [abs(r.err_a) for r in table.rows]
    err_b = [abs(r.err_b) for r in table.rows]
    if not all(x > y for x, y in zip(err_a, err_a[1:])):
        return False, f"clamped errors not strictly decreasing: {err_a}"
    if not all(x > y for x, y in zip(err_b, err_b[1:])):
        return False, f"free errors not strictly decreasing: {err_b}"
    rel = max(err_a[-1] / 2.0, err_b[-1] / 4.0)
    if rel > 0.05:
        return False, f"relative error {rel:.3e} at epsilon=0.001 exceeds 5%"
    for eps in eps_list:
        spec = eigenvalues_below(SpectralProblem(cell, NEUMANN, eps, 7.0))
        if spec.values[0] != 0.0:
            return False, f"lowest free eigenvalue at epsilon={eps} is {spec.values[0]!r}, not exactly 0.0"
    gaps = certify_gaps(cell, 0.001, 10.0)
    if len(gaps) != 1:
        return False, f"expected exactly one certified gap below 10, got {len(gaps)}"
    g = gaps[0]
    off = max(abs(g.lo - 2.0) / 2.0, abs(g.hi - 4.0) / 4.0)
    ok = off <= 0.05
    return ok, (
        f"errors shrink monotonically, final relative error {rel:.3e} "
        f"(5% bound), one certified gap ({g.lo:.4f}, {g.hi:.4f}) within "
        f"{off:.2%} of (2, 4)"
    )


def _criterion_8():
    """End-to-end design: targets (1,2) and (3,4) down to a certified cell."""
    t = GapTargets(6.0, ((1.0, 2.0), (3.0, 4.0)))
    d = design(t)
    want_l = (1.5, 1.0 / 6.0)
    want_q = (1.5, 0.5)
    worst = 0.0
    for got, want in zip(d.l + d.q, want_l + want_q):
        worst = max(worst, abs(got - want) / want)
    if worst > 1e-12:
        return False, f"closed-form parameters off by {worst:.3e} (bound 1e-12)"
    cell = realize(d)
    report = validate_cell(cell)
    if not report.ok:
        return False, f"realized cell failed validation: {report.violations}"
    gaps = certify_gaps(cell, 0.001, 6.0)
    if len(gaps) != 2:
        return False, f"expected exactly two certified gaps below 6, got {len(gaps)}"
    off = 0.0
    for g, (lo, hi) in zip(gaps, t.intervals):
        off = max(off, abs(g.lo - lo) / lo, abs(g.hi - hi) / hi)
    ok = off <= 0.05
    return ok, (
        f"parameters exact to {worst:.1e}, realized cell valid, both gaps "
        f"certified at stiffness 0.001 within {off:.2%} of targets (5% bound)"
    )


def _criterion_9():
    """Structural invariances: subdivision, stiffness monotonicity, conjugation, interlacing."""
    cell = _model_comb()
    theta = Theta.from_angles((1.0,))
    base = eigenvalues_below(SpectralProblem(cell, theta, 0.1, 60.0))
    cut = subdivide_edge(cell, "spine1", 0.37 * cell.edge("spine1").length)
    cut = subdivide_edge(cut, "arm1", 0.61 * cell.edge("arm1").length)
    after = eigenvalues_below(SpectralProblem(cut, theta, 0.1, 60.0))
    if len(base.eigenvalues) != len(after.eigenvalues):
        return False, "subdivision changed the eigenvalue count"
    sub_dev = 0.0
    for (x, mx), (y, my) in zip(base.eigenvalues, after.eigenvalues):
        if mx != my:
            return False, "subdivision changed a multiplicity"
        sub_dev = max(sub_dev, abs(x - y) / (1.0 + abs(x)))
    if sub_dev > 1e-9:
        return False, f"subdivision moved an eigenvalue by {sub_dev:.3e} (bound 1e-09)"

    mono_slack = 0.0
    for regime in (NEUMANN, DIRICHLET):
        prev = None
        for eps in (0.1, 0.05, 0.01):
            spec, _ = _spectrum_with_count(cell, regime, eps, 400.0, 5)
            vals = spec.values[:5]
            if prev is not None:
                for x, y in zip(prev, vals):
                    mono_slack = min(mono_slack, y - x + 1e-9 * (1.0 + abs(x)))
            prev = vals
    if mono_slack < 0.0:
        return False, f"eigenvalues decreased as stiffness grew: slack {mono_slack:.3e}"

    phi = 0.7
    left = eigenvalues_below(SpectralProblem(cell, Theta.from_angles((phi,)), 0.05, 120.0))
    right = eigenvalues_below(
        SpectralProblem(cell, Theta.from_angles((2.0 * math.pi - phi,)), 0.05, 120.0)
    )
    if [m for _, m in left.eigenvalues] != [m for _, m in right.eigenvalues]:
        return False, "conjugate fibers disagree on multiplicities"
    conj_dev = max(
        (abs(x - y) / (1.0 + abs(x)) for x, y in zip(left.values, right.values)),
        default=math.inf,
    )
    if not left.values or conj_dev > 1e-10:
        return False, f"conjugate fibers differ by {conj_dev:.3e} (bound 1e-10)"

    rng = np.random.default_rng(909)
    for _ in range(50):
        model = gap_right_endpoints(_random_model(rng))
        seq = []
        for a, b in zip(model.a, model.b):
            seq.extend((a, b))
        if not all(x < y for x, y in zip(seq, seq[1:])):
            return False, f"interlacing violated: {seq}"
        spread = sum(
            model.a[j] * model.l[j + 1] for j in range(model.m)
        ) / model.l[0]
        if model.b[-1] > model.a[-1] + spread * (1.0 + 1e-12):
            return False, "last gap endpoint escaped its bracket"
    return True, (
        f"subdivision deviation {sub_dev:.3e} (1e-09), stiffness "
        f"monotonicity slack {mono_slack:.3e}, conjugation deviation "
        f"{conj_dev:.3e} (1e-10), interlacing holds on 50 random systems"
    )


_CRITERIA = (
    (1, "route-equivalence", 5.0, _criterion_1),
    (2, "determinant-identity", 5.0, _criterion_2),
    (3, "design-round-trip", 5.0, _criterion_3),
    (4, "closed-form-spectra", 10.0, _criterion_4),
    (5, "oracle-cross-check", 60.0, _criterion_5),
    (6, "bracket-enclosure", 60.0, _criterion_6),
    (7, "limit-convergence", 120.0, _criterion_7),
    (8, "end-to-end-design", 180.0, _criterion_8),
    (9, "invariances", 60.0, _criterion_9),
)


def run_criterion(index: int) -> CriterionResult:
    for idx, name, budget, fn in _CRITERIA:
        if idx == index:
            start = time.perf_counter()
            try:
                ok, detail = fn()
            except Exception as exc:  # a crash is a failure, not an error
                elapsed = time.perf_counter() - start
                return CriterionResult(
                    idx, name, False, elapsed, budget,
                    f"raised {type(exc).__name__}: {exc}",
                )
            elapsed = time.perf_counter() - start
            if ok and elapsed > budget:
                ok = False
                detail += f"; exceeded time budget ({elapsed:.1f}s > {budget:.0f}s)"
            return CriterionResult(idx, name, ok, elapsed, budget, detail)
    raise ValueError(f"no criterion {index}")


def run_all() -> list[CriterionResult]:
    return [run_criterion(idx) for idx, _, _, _ in _CRITERIA]
