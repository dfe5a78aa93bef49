"""Exact fiber spectra against closed forms, invariances, and the FD check."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bandgap.fiber_solver import (
    DIRICHLET,
    NEUMANN,
    SpectralProblem,
    Theta,
    assemble_secular,
    count_eigenvalues_interval,
    eigenvalues_below,
    fem_oracle,
    sigma_min,
)
from bandgap.graph_model import (
    ROLE_EXTERNAL,
    BoundaryPairing,
    Edge,
    PeriodCell,
    Vertex,
    build_comb,
    subdivide_edge,
)

TWO_PI = 2.0 * math.pi


def interval_cell(length):
    # no pairing: only ever solved under the free/clamped regimes
    return PeriodCell(
        1,
        [Vertex("a", ROLE_EXTERNAL), Vertex("b", ROLE_EXTERNAL)],
        [Edge("e", "a", "b", length, 0)],
        [],
        [],
    )


def circle_cell(length=1.0):
    return PeriodCell(
        1,
        [Vertex("a", ROLE_EXTERNAL), Vertex("b", ROLE_EXTERNAL)],
        [Edge("e", "a", "b", length, 0)],
        [BoundaryPairing("a", "b", (1,), (1, -1))],
        [],
    )


def comb1():
    return build_comb(1, 1.0, [1.0], [2.0])


def test_interval_closed_forms():
    # clamped: (j pi / L)^2 / eps; free adds 0
    cell = interval_cell(math.pi)
    sd = eigenvalues_below(SpectralProblem(cell, DIRICHLET, 1.0, 30.0))
    sn = eigenvalues_below(SpectralProblem(cell, NEUMANN, 1.0, 30.0))
    assert sd.values[:5] == pytest.approx((1.0, 4.0, 9.0, 16.0, 25.0), abs=1e-8)
    assert sn.values[:5] == pytest.approx((0.0, 1.0, 4.0, 9.0, 16.0), abs=1e-8)
    assert sn.values[0] == 0.0


def test_circle_periodic_fiber():
    # theta = 1: 0 simple, (2 pi n)^2 twice
    spec = eigenvalues_below(
        SpectralProblem(circle_cell(), Theta.from_angles((0.0,)), 1.0, 170.0)
    )
    w = TWO_PI**2
    want = [(0.0, 1), (w, 2), (4 * w, 2)]
    assert len(spec.eigenvalues) == 3
    for (lam, mult), (lam0, mult0) in zip(spec.eigenvalues, want):
        assert mult == mult0
        assert lam == pytest.approx(lam0, rel=1e-8, abs=1e-10)


def test_circle_generic_fiber():
    phi = 0.7
    spec = eigenvalues_below(
        SpectralProblem(circle_cell(), Theta.from_angles((phi,)), 1.0, 120.0)
    )
    want = sorted(
        (phi + TWO_PI * n) ** 2
        for n in range(-3, 4)
        if (phi + TWO_PI * n) ** 2 <= 120.0
    )
    assert spec.values == pytest.approx(tuple(want), rel=1e-9)
    assert all(m == 1 for _, m in spec.eigenvalues)


def test_zero_eigenvalue_membership():
    cell = comb1()
    assert eigenvalues_below(SpectralProblem(cell, NEUMANN, 0.5, 5.0)).values[0] == 0.0
    per = eigenvalues_below(
        SpectralProblem(cell, Theta.from_angles((0.0,)), 0.5, 5.0)
    )
    assert per.values[0] == 0.0
    gen = eigenvalues_below(
        SpectralProblem(cell, Theta.from_angles((0.7,)), 0.5, 5.0)
    )
    assert gen.values[0] > 0.0
    d = eigenvalues_below(SpectralProblem(cell, DIRICHLET, 0.5, 5.0))
    assert d.values[0] > 0.0


def test_sigma_min_positive_between_roots():
    problem = SpectralProblem(interval_cell(math.pi), DIRICHLET, 1.0, 30.0)
    assert sigma_min(problem, 2.5) > 1e-3
    assert sigma_min(problem, 1.0) < 1e-7


def test_stiffness_scaling_on_circle():
    # Kirchhoff-only cell: lam(eps) = lam(1) / eps exactly
    base = eigenvalues_below(
        SpectralProblem(circle_cell(), Theta.from_angles((1.0,)), 1.0, 50.0)
    )
    quarter = eigenvalues_below(
        SpectralProblem(circle_cell(), Theta.from_angles((1.0,)), 0.25, 200.0)
    )
    assert quarter.values == pytest.approx(
        tuple(v / 0.25 for v in base.values), rel=1e-9
    )


def test_conjugate_fibers_agree():
    cell = build_comb(2, 1.0, [1.0, 0.5], [2.0, 3.0])
    phi = 0.7
    s1 = eigenvalues_below(
        SpectralProblem(cell, Theta.from_angles((phi,)), 0.05, 120.0)
    )
    s2 = eigenvalues_below(
        SpectralProblem(cell, Theta.from_angles((TWO_PI - phi,)), 0.05, 120.0)
    )
    assert [m for _, m in s1.eigenvalues] == [m for _, m in s2.eigenvalues]
    assert s1.values == pytest.approx(s2.values, rel=1e-10)


def test_subdivision_leaves_spectrum_alone():
    cell = comb1()
    cut = subdivide_edge(subdivide_edge(cell, "spine1", 0.21), "arm1", 0.55)
    theta = Theta.from_angles((1.0,))
    s1 = eigenvalues_below(SpectralProblem(cell, theta, 0.1, 60.0))
    s2 = eigenvalues_below(SpectralProblem(cut, theta, 0.1, 60.0))
    assert [m for _, m in s1.eigenvalues] == [m for _, m in s2.eigenvalues]
    assert s1.values == pytest.approx(s2.values, rel=1e-9)


def test_complex_assembly_matches_real():
    problem = SpectralProblem(comb1(), NEUMANN, 0.3, 20.0)
    for lam in (0.0, 0.37, 5.5):
        real = assemble_secular(problem, lam)
        lifted = assemble_secular(problem, complex(lam, 0.0))
        assert np.allclose(real, lifted, rtol=1e-13, atol=1e-13)


def test_contour_count_matches_spectrum():
    # regression: a wide window must count steep pairs correctly
    problem = SpectralProblem(comb1(), DIRICHLET, 0.1, 2000.0)
    spec = eigenvalues_below(problem)
    assert len(spec) == 9
    count = count_eigenvalues_interval(problem, -3.0, 2000.001)
    assert count == 9


def test_contour_count_sees_multiplicity():
    problem = SpectralProblem(
        circle_cell(), Theta.from_angles((0.0,)), 1.0, 170.0
    )
    assert count_eigenvalues_interval(problem, -1.0, 170.0) == 5
    assert count_eigenvalues_interval(problem, 1.0, 170.0) == 4


def test_fd_check_converges():
    problem = SpectralProblem(comb1(), DIRICHLET, 0.05, 800.0)
    exact = eigenvalues_below(problem).values[:4]
    errs = []
    for density in (100, 400):
        approx = fem_oracle(problem, mesh_density=density).values[:4]
        errs.append(
            max(
                abs(a - e) / max(1.0, abs(e))
                for a, e in zip(approx, exact)
            )
        )
    assert errs[1] < errs[0]
    assert errs[1] < 5e-4


_BRACKETS = {}


def _brackets(eps=0.1):
    if eps not in _BRACKETS:
        cell = comb1()
        _BRACKETS[eps] = (
            eigenvalues_below(SpectralProblem(cell, NEUMANN, eps, 60.0)).values,
            eigenvalues_below(SpectralProblem(cell, DIRICHLET, eps, 60.0)).values,
        )
    return _BRACKETS[eps]


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.0, max_value=TWO_PI))
def test_enclosure_between_free_and_clamped(phi):
    cell = comb1()
    eps = 0.1
    sn, sd = _brackets(eps)
    st_ = eigenvalues_below(
        SpectralProblem(cell, Theta.from_angles((phi,)), eps, 60.0)
    ).values
    for k in range(min(3, len(st_))):
        assert sn[k] <= st_[k] + 1e-8 * (1 + abs(st_[k]))
        if k < len(sd):
            assert st_[k] <= sd[k] + 1e-8 * (1 + abs(st_[k]))
