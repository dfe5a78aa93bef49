"""Limit constants, characteristic function, matrix route, interlacing."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from bandgap.errors import DegenerateConstantsError, PoleError
from bandgap.graph_model import build_comb
from bandgap.limit_theory import (
    LimitModel,
    det_identity_residual,
    dirichlet_limits,
    eval_characteristic,
    gap_right_endpoints,
    limit_constants,
    limit_matrix,
    limit_matrix_spectrum,
    limit_model_for_cell,
)


def model_m1():
    return limit_model_for_cell(build_comb(1, 1.0, [1.0], [2.0]))


def model_m2():
    # the designed cell for target gaps (1, 2) and (3, 4)
    return limit_model_for_cell(
        build_comb(2, 1.0, [1.5, 1.0 / 6.0], [1.5, 0.5])
    )


def test_m1_constants_and_endpoint():
    model = gap_right_endpoints(model_m1())
    assert model.a == (2.0,)
    assert model.b[0] == pytest.approx(4.0, rel=1e-12)
    assert dirichlet_limits(model) == (2.0,)


def test_m2_constants_and_endpoints():
    model = gap_right_endpoints(model_m2())
    assert model.a[0] == pytest.approx(1.0, rel=1e-12)
    assert model.a[1] == pytest.approx(3.0, rel=1e-12)
    assert model.b[0] == pytest.approx(2.0, rel=1e-12)
    assert model.b[1] == pytest.approx(4.0, rel=1e-12)


def test_characteristic_roots_of_m2():
    model = model_m2()
    assert eval_characteristic(model, 2.0) == pytest.approx(0.0, abs=1e-12)
    assert eval_characteristic(model, 4.0) == pytest.approx(0.0, abs=1e-12)
    # F > 0 left of the first pole, F < 0 just right of it
    assert eval_characteristic(model, 0.5) > 0
    assert eval_characteristic(model, 1.1) < 0


def test_characteristic_value_m1():
    # F(1) = 1 + 2*1 / (1*(2-1)) = 3
    assert eval_characteristic(model_m1(), 1.0) == pytest.approx(3.0)


def test_pole_raises():
    with pytest.raises(PoleError):
        eval_characteristic(model_m1(), 2.0)


def test_limit_matrix_m1():
    A = limit_matrix(model_m1())
    assert A == pytest.approx(np.array([[2.0, -2.0], [-2.0, 2.0]]))
    spec = limit_matrix_spectrum(model_m1())
    assert spec[0] == pytest.approx(0.0, abs=1e-12)
    assert spec[1] == pytest.approx(4.0, rel=1e-12)


def test_det_identity_m1():
    # det(A - I) = (2-1)^2 - 4 = -3 must equal -1 * (2-1) * F(1) = -3
    assert det_identity_residual(model_m1(), 1.0) == pytest.approx(0.0, abs=1e-12)


def test_limit_constants_rejects_collision():
    with pytest.raises(DegenerateConstantsError):
        limit_constants({0: (1.0, 0), 1: (1.0, 1), 2: (2.0, 1)}, [3.0, 6.0])


def test_limit_constants_sorts_ascending():
    model = limit_constants(
        {0: (2.0, 0), 1: (1.0, 1), 2: (0.5, 1)}, [0.5, 2.0]
    )
    assert model.a == (0.5, 4.0)
    assert model.q == (0.5, 2.0)
    assert model.l == (2.0, 1.0, 0.5)


def params(max_m=4):
    return st.integers(min_value=1, max_value=max_m).flatmap(
        lambda m: st.tuples(
            st.lists(
                st.floats(min_value=0.2, max_value=5.0),
                min_size=m,
                max_size=m,
            ),
            st.lists(
                st.floats(min_value=0.2, max_value=5.0),
                min_size=m,
                max_size=m,
            ),
            st.lists(
                st.integers(min_value=1, max_value=4), min_size=m, max_size=m
            ),
            st.floats(min_value=0.3, max_value=3.0),
        )
    )


def _build(lengths, q, N, l0):
    totals = {0: (l0, 0)}
    for j, (lj, nj) in enumerate(zip(lengths, N), start=1):
        totals[j] = (lj, nj)
    try:
        model = limit_constants(totals, q)
    except DegenerateConstantsError:
        assume(False)
    seps = [
        y - x for x, y in zip(model.a, model.a[1:])
    ]
    assume(not seps or min(seps) > 1e-3 * max(model.a))
    return gap_right_endpoints(model)


@given(params())
@settings(max_examples=150)
def test_interlacing(ps):
    lengths, q, N, l0 = ps
    model = _build(lengths, q, N, l0)
    spread = sum(a * l for a, l in zip(model.a, model.l[1:])) / model.l[0]
    seq = []
    for a, b in zip(model.a, model.b):
        seq.extend((a, b))
    assert all(x < y for x, y in zip(seq, seq[1:]))
    assert model.b[-1] <= model.a[-1] + spread * (1 + 1e-12)


@given(params())
@settings(max_examples=100)
def test_matrix_route_matches_characteristic_roots(ps):
    lengths, q, N, l0 = ps
    model = _build(lengths, q, N, l0)
    spec = limit_matrix_spectrum(model)
    assert abs(spec[0]) <= 1e-9 * max(1.0, spec[-1])
    for b_char, b_mat in zip(model.b, spec[1:]):
        assert b_mat == pytest.approx(b_char, rel=1e-9)


@given(params(), st.floats(min_value=0.1, max_value=10.0))
@settings(max_examples=100)
def test_endpoints_scale_with_strengths(ps, t):
    lengths, q, N, l0 = ps
    model = _build(lengths, q, N, l0)
    scaled = _build(lengths, [t * v for v in q], N, l0)
    for a1, a2 in zip(model.a, scaled.a):
        assert a2 == pytest.approx(t * a1, rel=1e-9)
    for b1, b2 in zip(model.b, scaled.b):
        assert b2 == pytest.approx(t * b1, rel=1e-9)


@given(params(), st.floats(min_value=0.05, max_value=20.0))
@settings(max_examples=100)
def test_characteristic_increases_between_poles(ps, frac):
    lengths, q, N, l0 = ps
    model = _build(lengths, q, N, l0)
    # within the last inter-pole window F must be strictly increasing
    lo = model.a[-1]
    hi = model.b[-1]
    x = lo + (hi - lo) * frac / 21.0
    y = lo + (hi - lo) * (frac + 0.5) / 21.0
    try:
        fx = eval_characteristic(model, x)
        fy = eval_characteristic(model, y)
    except PoleError:
        assume(False)
    assert fy >= fx - 1e-9 * (1 + abs(fx))


@given(params(), st.floats(min_value=-3.0, max_value=30.0))
@settings(max_examples=150)
def test_det_identity_random_points(ps, lam):
    lengths, q, N, l0 = ps
    model = _build(lengths, q, N, l0)
    try:
        resid = det_identity_residual(model, lam)
    except PoleError:
        assume(False)
    assert resid <= 1e-8
