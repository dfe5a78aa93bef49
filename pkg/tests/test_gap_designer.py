"""Inverse design closed forms, target validation, JSON documents."""

import json

import pytest
from hypothesis import assume, given, settings, strategies as st

from bandgap.errors import FormatError, TargetOrderError
from bandgap.gap_designer import (
    GapTargets,
    design,
    design_to_dict,
    limit_of_design,
    loads_targets,
    realize,
    targets_from_dict,
    targets_to_dict,
    verify_system,
)
from bandgap.graph_model import validate_cell
from bandgap.limit_theory import gap_right_endpoints


def two_gap_targets():
    return GapTargets(L=6.0, intervals=((1.0, 2.0), (3.0, 4.0)))


def test_two_gap_closed_form():
    d = design(two_gap_targets())
    assert d.l[0] == pytest.approx(1.5, rel=1e-12)
    assert d.l[1] == pytest.approx(1.0 / 6.0, rel=1e-12)
    assert d.q[0] == pytest.approx(1.5, rel=1e-12)
    assert d.q[1] == pytest.approx(0.5, rel=1e-12)
    assert d.residuals["a"] <= 1e-12
    assert d.residuals["b"] <= 1e-12
    assert verify_system(d) <= 1e-12


def test_design_hits_targets_in_the_limit():
    d = design(two_gap_targets())
    model = gap_right_endpoints(limit_of_design(d))
    assert model.a == pytest.approx((1.0, 3.0), rel=1e-12)
    assert model.b == pytest.approx((2.0, 4.0), rel=1e-12)


def test_realized_cell_is_valid():
    cell = realize(design(two_gap_targets()))
    assert validate_cell(cell).ok
    assert len(cell.couplings) == 2


def test_realize_requires_single_vertex_couplings():
    targets = GapTargets(L=6.0, intervals=((1.0, 2.0), (3.0, 4.0)), N=(2, 1))
    with pytest.raises(ValueError):
        realize(design(targets))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(L=6.0, intervals=()),
        dict(L=6.0, intervals=((2.0, 1.0),)),
        dict(L=6.0, intervals=((0.0, 1.0),)),
        dict(L=6.0, intervals=((1.0, 2.0), (2.0, 3.0))),
        dict(L=3.5, intervals=((1.0, 2.0), (3.0, 4.0))),
        dict(L=6.0, intervals=((1.0, 2.0),), l0=0.0),
        dict(L=6.0, intervals=((1.0, 2.0),), N=(1, 1)),
        dict(L=6.0, intervals=((1.0, 2.0),), N=(0,)),
    ],
)
def test_bad_targets_rejected(kwargs):
    with pytest.raises(TargetOrderError):
        GapTargets(**kwargs)


def test_targets_json_round_trip():
    t = GapTargets(L=6.0, intervals=((1.0, 2.0), (3.0, 4.0)), l0=2.0, N=(1, 3))
    doc = targets_to_dict(t)
    again = targets_from_dict(json.loads(json.dumps(doc)))
    assert again == t


def test_targets_json_defaults():
    t = loads_targets('{"L": 6.0, "intervals": [[1.0, 2.0]]}')
    assert t.l0 == 1.0
    assert t.N == (1,)


def test_targets_json_rejects_unknown_keys():
    with pytest.raises(FormatError):
        targets_from_dict({"L": 6.0, "intervals": [[1.0, 2.0]], "oops": 1})


def test_targets_json_rejects_missing_keys():
    with pytest.raises(FormatError):
        targets_from_dict({"L": 6.0})


def test_targets_json_rejects_bool_counts():
    with pytest.raises(FormatError):
        targets_from_dict({"L": 6.0, "intervals": [[1.0, 2.0]], "N": [True]})


def test_design_to_dict_shape():
    d = design(two_gap_targets())
    doc = design_to_dict(d)
    assert set(doc) == {"targets", "l", "q", "residuals"}
    doc = design_to_dict(d, include_cell=True)
    assert "cell" in doc


def interval_lists(max_m=5):
    return st.integers(min_value=1, max_value=max_m).flatmap(
        lambda m: st.lists(
            st.floats(min_value=0.05, max_value=1.5),
            min_size=2 * m + 1,
            max_size=2 * m + 1,
        )
    )


def _targets_from_steps(steps, l0=1.0, N=None):
    vals = []
    acc = 0.0
    for s in steps:
        acc += s
        vals.append(acc)
    intervals = tuple(
        (vals[2 * i], vals[2 * i + 1]) for i in range(len(vals) // 2)
    )
    return GapTargets(
        L=vals[-1] + 1.0,
        intervals=intervals,
        l0=l0,
        N=N if N else (),
    )


@given(interval_lists())
@settings(max_examples=150)
def test_design_round_trip_random_targets(steps):
    targets = _targets_from_steps(steps)
    d = design(targets)
    model = gap_right_endpoints(limit_of_design(d))
    for want, got in zip(targets.alpha, model.a):
        assert got == pytest.approx(want, rel=1e-9)
    for want, got in zip(targets.beta, model.b):
        assert got == pytest.approx(want, rel=1e-9)


@given(interval_lists(), st.floats(min_value=0.1, max_value=10.0))
@settings(max_examples=100)
def test_design_scales_with_targets(steps, t):
    base = design(_targets_from_steps(steps))
    scaled = design(
        _targets_from_steps([t * s for s in steps])
    )
    # lengths depend only on interval ratios; strengths carry the scale
    for l1, l2 in zip(base.l, scaled.l):
        assert l2 == pytest.approx(l1, rel=1e-9)
    for q1, q2 in zip(base.q, scaled.q):
        assert q2 == pytest.approx(t * q1, rel=1e-9)


@given(
    interval_lists(max_m=3),
    st.lists(st.integers(min_value=1, max_value=4), min_size=3, max_size=3),
)
@settings(max_examples=100)
def test_coupling_counts_do_not_move_endpoints(steps, counts):
    targets = _targets_from_steps(steps)
    with_n = _targets_from_steps(steps, N=tuple(counts[: targets.m]))
    base = gap_right_endpoints(limit_of_design(design(targets)))
    split = gap_right_endpoints(limit_of_design(design(with_n)))
    assert split.a == pytest.approx(base.a, rel=1e-9)
    assert split.b == pytest.approx(base.b, rel=1e-9)
