from __future__ import annotations

import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from leaderfp.bounds import (
    invariance_index_constructive,
    invariance_index_empirical,
    retract_bound,
    verify_retract_bound,
    verify_uniform_convergence,
)
from leaderfp.contraction import SelfMap
from leaderfp.control import ControlFunction, ControlSequence
from leaderfp.errors import PreconditionError, SubcontractivityViolated
from leaderfp.metric import BMetricSpace, SampleSpec

HALF = SelfMap.parse("x1/2", BMetricSpace.interval(-4, 4))
SPEC = SampleSpec(0, 1000, anchors=((1.0 - 1e-12,),))


def const(src):
    phi = ControlFunction.parse(src)
    return phi, ControlSequence.constant(phi)


def hand_p(K, delta):
    # exact rational arithmetic: smallest integer strictly above K/delta + 1
    q = Fraction(K) / Fraction(delta) + 1
    return math.floor(q) + 1


def test_halving_bound():
    phi, seq = const("t/2")
    b = retract_bound(phi, seq, 0.1, 1.0)
    assert b.f_min == pytest.approx(0.025, abs=1e-9)
    assert b.delta == pytest.approx(0.00625, abs=1e-15)
    assert (b.m2, b.s, b.p, b.m) == (1, 1, 162, 162)
    assert b.p == hand_p(1, Fraction(1, 160))
    assert b.invariants_hold()


def test_flat_gap_bound():
    phi, seq = const("max(t - 0.1, 0)")
    b = retract_bound(phi, seq, 0.2, 1.0)
    assert b.f_min == pytest.approx(0.1, abs=1e-12)
    assert b.delta == pytest.approx(0.025, abs=1e-15)
    assert b.p == 42 == hand_p(1, Fraction(1, 40))
    assert b.m == 42 * b.s


def test_bound_preconditions():
    phi, seq = const("t/2")
    with pytest.raises(PreconditionError):
        retract_bound(phi, seq, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        retract_bound(phi, seq, 2.0, 1.0)
    bad, bad_seq = const("t")
    with pytest.raises(SubcontractivityViolated):
        retract_bound(bad, bad_seq, 0.1, 1.0)


@pytest.mark.parametrize("K", [1.0, 2.0, 4.0])
def test_bound_monotone(K):
    phi = ControlFunction.parse("t/2")
    seq = ControlSequence.parse("t/2 + 1/n", phi)
    base = retract_bound(phi, seq, 0.1, K)
    assert retract_bound(phi, seq, 0.1, K * 1.5).m >= base.m
    assert retract_bound(phi, seq, 0.05, K).m >= base.m


def test_constructive_invariance():
    phi, seq = const("t/2")
    assert invariance_index_constructive(phi, seq, 0.1, 1.0).m == 1
    seq = ControlSequence.parse("t/2 + 1/n", "t/2")
    inv = invariance_index_constructive(seq.limit, seq, 0.1, 1.0)
    assert inv.m == 160 and inv.mode == "constructive"
    assert inv.detail["max_excess_over_t_minus_delta"] <= 1e-12
    assert inv.detail["max_below_half_eps"] < inv.detail["half_eps_plus_delta"]
    # the constructive index must also pass the sampled invariance check
    xs = np.linspace(-0.0999, 0.0999, 401)[:, None]
    cur = HALF.power(xs, inv.m)
    for _ in range(50):
        assert np.all(np.abs(cur) < 0.1)
        cur = HALF(cur)


def test_empirical_invariance():
    assert invariance_index_empirical(HALF, [0.0], 0.3, SPEC).m == 1
    flip = SelfMap.parse("-0.9*x1", BMetricSpace.interval(-2, 2))
    spec = SampleSpec(0, 1000, anchors=((0.999999,), (-0.999999,)))
    assert invariance_index_empirical(flip, [0.0], 1.0, spec).m == 1
    counter = SelfMap.parse("if x1 = 0 then 1 else x1/2", BMetricSpace.interval(0, 1))
    with pytest.raises(PreconditionError):
        invariance_index_empirical(counter, [0.0], 0.1, SPEC)


def test_verify_retract():
    phi, seq = const("t/2")
    b = retract_bound(phi, seq, 0.1, 1.0)
    v = verify_retract_bound(HALF, [0.0], b, SPEC)
    assert v.passed and v.worst_index == 4
    bad = verify_retract_bound(HALF, [0.0], replace(b, m=2), SPEC)
    assert not bad.passed and bad.worst_index == 4
    # every start already inside
    inside = verify_retract_bound(HALF, [0.0], replace(b, K=0.05), SampleSpec(0, 200))
    assert inside.passed and inside.worst_index == 0


def test_verify_uniform():
    phi, seq = const("t/2")
    b = retract_bound(phi, seq, 0.1, 1.0)
    inv = invariance_index_empirical(HALF, [0.0], 0.1, SPEC)
    u = verify_uniform_convergence(HALF, [0.0], 0.1, 1.0, b, inv, SPEC)
    assert u.passed and u.composed_bound == 163
    assert verify_uniform_convergence(HALF, [0.0], 2.0, 1.0, None, None, SPEC).degenerate
    shift = SelfMap.parse("x1 + 1", BMetricSpace(1, (-np.inf,), (np.inf,)))
    with pytest.raises(PreconditionError):
        verify_uniform_convergence(shift, [0.0], 0.1, 1.0, b, inv, SPEC)


def test_bound_serialises_intermediates():
    phi, seq = const("t/2")
    d = retract_bound(phi, seq, 0.1, 1.0).to_dict()
    for key in ("f_min", "delta", "m2", "s", "p", "m", "provenance", "gap_grid"):
        assert key in d
    assert d["provenance"] == "proof-schema derived"
