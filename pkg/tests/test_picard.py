from __future__ import annotations

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leaderfp.contraction import SelfMap
from leaderfp.errors import OrbitEscapedError, PreconditionError
from leaderfp.metric import BMetricSpace, SampleSpec
from leaderfp.picard import (
    first_entry_index,
    fixed_point_residual,
    iterate,
    orbit_bounded_check,
    uniform_entry_profile,
)

LINE = BMetricSpace(1, (-np.inf,), (np.inf,))
HALF = SelfMap.parse("x1/2", BMetricSpace.interval(-4, 4))
COUNTER = SelfMap.parse("if x1 = 0 then 1 else x1/2", BMetricSpace.interval(0, 1))
SHIFT = SelfMap.parse("x1 + 1", LINE)


def test_halving_converges_to_certified_fixed_point():
    orbit, rep = iterate(HALF, [1.0], cauchy_tol=1e-9)
    assert rep.converged and rep.fixed_point_certified
    assert rep.limit_estimate == [0.0]
    # steps 2^-(k+1) drop below 1e-9 from k = 29; ten in a row end at k = 39
    assert rep.iterations_used == 39
    assert rep.residual == 0.0


def test_counterexample_limit_is_not_fixed():
    for x0 in (1.0, 0.7, 0.3, 0.01):
        _, rep = iterate(COUNTER, [x0])
        assert rep.converged
        assert abs(rep.limit_estimate[0]) <= 1e-9
        assert rep.residual == 1.0
        assert not rep.fixed_point_certified
        assert rep.to_dict()["flag"] == "limit is not a fixed point"


def test_translation_unbounded():
    orbit, rep = iterate(SHIFT, [0.0], max_iter=100)
    assert not rep.converged
    assert rep.orbit_diameter_estimate == 100.0
    assert rep.boundedness == "unbounded-suspect"
    assert orbit_bounded_check(orbit).verdict == "unbounded-suspect"


def test_bounded_orbits():
    orbit, _ = iterate(HALF, [1.0], max_iter=60)
    r = orbit_bounded_check(orbit)
    assert r.verdict == "bounded" and r.diameter == pytest.approx(1.0)
    orbit, _ = iterate(COUNTER, [1.0], max_iter=60)
    r = orbit_bounded_check(orbit)
    assert r.verdict == "bounded" and r.diameter <= 1.0


def test_residual_examples():
    assert fixed_point_residual(HALF, [0.0]) == 0.0
    assert fixed_point_residual(COUNTER, [0.0]) == 1.0
    rational = SelfMap.parse("x1/(1+x1)", BMetricSpace.interval(0, 100))
    assert fixed_point_residual(rational, [0.0]) == 0.0


def test_orbit_leaving_domain():
    T = SelfMap.parse("x1 + 1", BMetricSpace.interval(0, 3))
    with pytest.raises(OrbitEscapedError) as info:
        iterate(T, [0.5])
    assert info.value.index == 3
    with pytest.raises(PreconditionError):
        iterate(T, [5.0])


def test_orbit_reconstruction_and_csv(tmp_path):
    orbit, _ = iterate(HALF, [3.0], max_iter=20)
    for a, b in zip(orbit.points, orbit.points[1:]):
        assert np.array_equal(HALF(a), b)
    path = tmp_path / "orbit.csv"
    orbit.to_csv(path, z=[0.0])
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["n", "x1", "step_distance", "distance_to_z"]
    assert rows[1] == ["0", "3.0", "1.5", "3.0"]
    assert len(rows) == orbit.length + 1
    assert rows[-1][2] == ""


def test_first_entry_examples():
    assert first_entry_index(HALF, [1.0], [0.0], 0.1, 100) == 4
    assert first_entry_index(HALF, [0.05], [0.0], 0.1, 100) == 0
    assert first_entry_index(SHIFT, [5.0], [0.0], 1.0, 1000) is None


def test_entry_profile_examples():
    spec = SampleSpec(0, 1000, anchors=((1.0 - 1e-12,),))
    p = uniform_entry_profile(HALF, [0.0], 1.0, 0.1, spec)
    assert p.max_index == 4 and p.all_entered
    p = uniform_entry_profile(HALF, [0.0], 0.05, 0.1, spec)
    assert p.max_index == 0
    p = uniform_entry_profile(SHIFT, [0.0], 1.0, 0.1, SampleSpec(0, 200), cap=50)
    assert p.max_index is None
    assert p.histogram[-1] > 100


@settings(max_examples=100, deadline=None)
@given(st.floats(-4, 4), st.floats(1e-3, 2), st.floats(1e-3, 2))
def test_first_entry_monotone_in_epsilon(x, e1, e2):
    lo, hi = sorted((e1, e2))
    i_lo = first_entry_index(HALF, [x], [0.0], lo, 200)
    i_hi = first_entry_index(HALF, [x], [0.0], hi, 200)
    assert i_hi <= i_lo


@settings(max_examples=50, deadline=None)
@given(st.floats(-4, 4))
def test_converged_certified_orbits_enter_every_ball(x0):
    _, rep = iterate(HALF, [x0])
    assert rep.converged and rep.fixed_point_certified
    for eps in (1e-3, 1e-6, 1e-9):
        assert first_entry_index(HALF, [x0], rep.limit_estimate, eps, 1000) is not None
