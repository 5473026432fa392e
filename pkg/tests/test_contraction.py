from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leaderfp.contraction import (
    Certificate,
    SelfMap,
    Witness,
    certificate_holds,
    check_banach,
    check_boyd_wong,
    check_chen_condition,
    check_kirk_asymptotic,
    check_nonexpansive,
    continuity_probe,
    maps_into_domain,
    search_leader_params,
    search_meir_keeler_params,
    search_mk_leader_params,
)
from leaderfp.control import ControlFunction, ControlSequence
from leaderfp.errors import VacuousSampleError
from leaderfp.metric import BMetricSpace, SampleSpec

SPEC = SampleSpec(0, 10_000)
LINE = BMetricSpace(1, (-np.inf,), (np.inf,))
LINE_SPEC = SampleSpec(0, 10_000, region=((-10, 10),))


def smap(src, lo, hi):
    return SelfMap.parse(src, BMetricSpace.interval(lo, hi))


HALF = smap("x1/2", 0, 4)
RATIONAL = smap("x1/(1+x1)", 0, 100)
COUNTER = smap("if x1 = 0 then 1 else x1/2", 0, 1)
SHIFT = SelfMap.parse("x1 + 1", LINE)


def test_selfmap_vectorises():
    T = SelfMap.parse(["-x2", "x1"], BMetricSpace.box([(-1, 1), (-1, 1)]))
    np.testing.assert_array_equal(T([1.0, 0.0]), [0.0, 1.0])
    np.testing.assert_array_equal(T(np.array([[1.0, 0.0], [0.0, 1.0]])), [[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_allclose(T.power([1.0, 0.0], 4), [1.0, 0.0])


def test_banach_examples():
    assert check_banach(HALF, 0.5, SPEC).passed
    r = check_banach(HALF, 0.4, SPEC)
    assert not r.passed
    w = r.witness
    assert w["lhs"] == pytest.approx(w["distance"] / 2)
    assert not check_banach(SHIFT, 0.99, LINE_SPEC).passed


def test_boyd_wong_examples():
    assert check_boyd_wong(RATIONAL, ControlFunction.parse("t/(1+t)"), SPEC).passed
    ident = smap("x1", 0, 1)
    assert not check_boyd_wong(ident, ControlFunction.parse("t/2"), SPEC).passed


def test_banach_implies_boyd_wong_on_same_sample():
    for q in (0.5, 0.7):
        if check_banach(HALF, q, SPEC).passed:
            assert check_boyd_wong(HALF, ControlFunction.parse(f"{q}*t"), SPEC).passed


def test_kirk_examples():
    assert check_kirk_asymptotic(HALF, ControlSequence.parse("t/2^n", "0"), SPEC).passed
    r = check_kirk_asymptotic(HALF, ControlSequence.parse("t/3^n", "0"), SPEC)
    assert not r.passed and r.witness["n"] == 1
    r = check_kirk_asymptotic(COUNTER, ControlSequence.parse("t/2^n", "0"), SampleSpec(0, 10_000, anchors=((0.0,),)))
    assert not r.passed
    assert 0.0 in (r.witness["x"][0], r.witness["y"][0])


def test_leader_halving_example():
    c = search_leader_params(HALF, 0.5, SPEC)
    assert isinstance(c, Certificate)
    assert (c.delta, c.r) == (0.5, 1)
    for fn in (search_mk_leader_params, search_meir_keeler_params):
        c = fn(HALF, 0.5, SPEC)
        assert (c.delta, c.r) == (0.5, 1)


def test_translation_gives_witnesses():
    for fn in (search_leader_params, search_mk_leader_params, search_meir_keeler_params):
        w = fn(SHIFT, 1.0, LINE_SPEC)
        assert isinstance(w, Witness)
        assert w.replay(SHIFT)
        assert all(abs(d - w.distances[0]) < 1e-12 for d in w.distances)
        assert min(w.distances) >= 1.0 - 1e-12 or w.guard_kind == "Leader"


def test_rational_map_certificates():
    sp = BMetricSpace.interval(0, 10)
    T = SelfMap.parse("x1/(1+x1)", sp)
    c = search_leader_params(T, 0.1, SampleSpec(0, 10_000, anchors=((0.0,),)), delta_ladder=[0.1, 0.05, 0.01])
    assert isinstance(c, Certificate) and 1 <= c.r <= 64
    mk = search_meir_keeler_params(T, 1.0, SPEC)
    assert isinstance(mk, Certificate) and mk.r == 1


def test_vacuous_guard():
    tiny = smap("x1/2", 0, 0.001)
    with pytest.raises(VacuousSampleError):
        search_mk_leader_params(tiny, 0.5, SampleSpec(0, 100))


def test_counterexample_certificates():
    spec = SampleSpec(0, 10_000, anchors=((0.0,),))
    for eps in (0.1, 0.25, 0.5):
        c = search_leader_params(COUNTER, eps, spec)
        assert isinstance(c, Certificate) and c.r <= 16
        # hand oracle for the hardest guarded pair (0, eps + delta): distance 2^(1-r) - (eps+delta)/2^r
        worst = max(2.0 ** (1 - c.r) - y / 2.0 ** c.r for y in np.linspace(0, eps + c.delta, 2001)[1:-1])
        assert worst < eps


def test_certificate_downward_closed_in_delta():
    spec = SampleSpec(0, 5000, anchors=((0.0,),))
    c = search_leader_params(COUNTER, 0.25, spec)
    for frac in (1.0, 0.5, 0.1, 0.01):
        assert certificate_holds(COUNTER, c, spec, delta=c.delta * frac)


def test_nonexpansive_examples():
    assert check_nonexpansive(HALF, SPEC).passed
    assert check_nonexpansive(SHIFT, LINE_SPEC).passed
    assert not check_nonexpansive(smap("2*x1", -10, 10), SampleSpec(0, 1000, region=((-1, 1),))).passed


def test_maps_into_domain():
    assert maps_into_domain(HALF, SPEC)[0]
    ok, escapee = maps_into_domain(smap("x1 + 1", 0, 1), SampleSpec(0, 100))
    assert not ok and escapee is not None


def test_chen_examples():
    assert check_chen_condition(ControlSequence.parse("t/2^n", "0"), 1).passed
    r = check_chen_condition(ControlSequence.parse("t/2 + 0.1/n", "t/2"), 1)
    assert not r.passed and not r.zero_ok
    jump = ControlSequence.parse("if t < 1 then t/2 else t/3", "if t < 1 then t/2 else t/3")
    r = check_chen_condition(jump, 1)
    assert not r.passed and r.failing_t == pytest.approx(1.0)


def test_continuity_examples():
    sp = BMetricSpace.interval(-4, 4)
    r = continuity_probe(SelfMap.parse("x1/2", sp), 3, SampleSpec(0, 200))
    assert r.continuous_on_sample
    assert r.max_oscillation == pytest.approx(1 / 8, rel=1e-6)
    r = continuity_probe(COUNTER, 1, SampleSpec(0, 200, anchors=((0.0,),)))
    assert not r.continuous_on_sample
    assert [0.0] in r.suspects
    r = continuity_probe(SelfMap.parse("x1/(1+x1)", BMetricSpace.interval(0, 100)), 2, SampleSpec(0, 200))
    assert r.continuous_on_sample


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 0.25, 0.5]))
def test_witnesses_replay(seed, eps):
    w = search_leader_params(SHIFT, eps, SampleSpec(seed, 500, region=((-10, 10),)))
    assert isinstance(w, Witness) and w.replay(SHIFT)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.1, 0.5, 1.0]))
def test_mk_leader_implies_leader(seed, eps):
    spec = SampleSpec(seed, 2000, anchors=((0.0,),))
    for T in (HALF, COUNTER):
        if eps >= T.space.diameter():
            continue
        if isinstance(search_mk_leader_params(T, eps, spec), Certificate):
            assert isinstance(search_leader_params(T, eps, spec), Certificate)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([100, 1000, 5000]))
def test_anchor_exposes_counterexample_jump(seed, count):
    spec = SampleSpec(seed, count, anchors=((0.0,),))
    assert not check_nonexpansive(COUNTER, spec).passed
