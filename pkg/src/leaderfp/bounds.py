"""A-priori iteration counts for entering ``B(z, eps)`` from ``B(z, K)``, and their empirical checks.

For a Kirk-type family ``phi_n -> phi`` with ``t - phi(t)`` bounded below on
``[eps/2, K]`` the retract bound is built as follows::

    f_min = inf { t - phi(t) : eps/2 <= t <= K }
    delta = min(f_min, eps/2) / 4            # 2 delta < f_min, delta < eps/4
    m2    = first n with sup_[0,K] |phi_n - phi| <= delta from n on
    m1    = m2                               # invariance of B(z, K), see below
    s     = max(m1, m2)
    p     = smallest integer > K/delta + 1
    m     = s * p

For ``n >= m2`` the family satisfies ``phi_n(t) <= t - delta`` on
``[eps/2, K]`` and ``phi_n(t) < eps/2 + delta`` below ``eps/2``; both keep
``B(z, K)`` and ``B(z, eps)`` invariant under ``T^n``, which is what makes
``m2`` usable as the invariance index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import (
    DEFAULT_GRID,
    ControlFunction,
    ControlSequence,
    gap_infimum,
    uniform_convergence_check,
)
from .contraction import SelfMap
from .errors import InvarianceNotObserved, PreconditionError, UniformConvergenceNotFound
from .metric import SampleSpec, sample_ball
from .picard import FIXED_POINT_TOL, NOT_ENTERED, distance_table, first_entry_indices, fixed_point_residual

# slack when realising the strict inequality p > K/delta + 1 in floating point
_P_SLACK = 1e-9


@dataclass
class RetractBound:
    epsilon: float
    K: float
    f_min: float
    argmin_w: float
    delta: float
    m1: int
    m2: int
    s: int
    p: int
    m: int
    gap_grid: int
    gap_refine_rounds: int
    gap_resolution: float
    uniform_grid: int
    provenance: str = "proof-schema derived"

    def invariants_hold(self) -> bool:
        return (2 * self.delta < self.f_min and self.delta < self.epsilon / 4
                and self.p > self.K / self.delta + 1 and self.m == self.s * self.p
                and min(self.delta, self.m1, self.m2, self.s, self.p, self.m) > 0)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class InvarianceIndex:
    epsilon: float
    m: int
    mode: str  # "empirical" | "constructive"
    detail: dict

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _smallest_int_above(x: float) -> int:
    return int(math.floor(x + _P_SLACK * max(1.0, abs(x)))) + 1


def retract_bound(phi: ControlFunction, seq: ControlSequence, epsilon: float, K: float,
                  n_max: int = 10_000, grid_n: int = DEFAULT_GRID,
                  refine_rounds: int = 3) -> RetractBound:
    """Compute the retract bound ``m`` for ``B(z, K) -> B(z, eps)``.

    ``phi`` should be the uniform limit of ``seq``; it is passed separately so
    a caller can bound with a different right-usc majorant of the limit.

    Raises
    ------
    SubcontractivityViolated
        The gap infimum estimate is not positive.
    UniformConvergenceNotFound
        No index up to ``n_max`` brings ``seq`` within ``delta`` of its limit.
    """
    if not 0 < epsilon < K:
        raise PreconditionError(f"need 0 < epsilon < K, got epsilon={epsilon}, K={K}")
    gap = gap_infimum(phi, epsilon / 2, K, initial_grid=grid_n, refine_rounds=refine_rounds)
    f_min = gap.infimum_estimate
    delta = min(f_min, epsilon / 2) / 4
    uc = uniform_convergence_check(seq, K, delta, n_max, grid_n=grid_n)
    if not uc.reached:
        raise UniformConvergenceNotFound(
            f"uniform convergence index not found: sup|phi_n - phi| > {delta:g} at n_max={n_max}")
    m2 = int(uc.index)
    m1 = m2
    s = max(m1, m2)
    p = _smallest_int_above(K / delta + 1)
    return RetractBound(float(epsilon), float(K), f_min, gap.argmin_estimate, delta, m1, m2, s, p,
                        s * p, grid_n, refine_rounds, gap.grid_resolution, grid_n)


def invariance_index_constructive(phi: ControlFunction, seq: ControlSequence, epsilon: float,
                                  K: float, **kwargs) -> InvarianceIndex:
    """Invariance index ``m2`` of the retract bound, with the estimates behind it.

    The ``detail`` record re-evaluates ``phi_{m2}`` on the grid: the largest
    excess of ``phi_{m2}(t)`` over ``t - delta`` on ``[eps/2, K]`` (should be
    ``<= 0``) and the largest value on ``[0, eps/2)`` (should be below
    ``eps/2 + delta``).
    """
    bound = retract_bound(phi, seq, epsilon, K, **kwargs)
    m = bound.m2
    t_hi = np.linspace(epsilon / 2, K, DEFAULT_GRID)
    t_lo = np.linspace(0.0, epsilon / 2, DEFAULT_GRID, endpoint=False)
    v_hi = seq.values([m], t_hi)[0]
    v_lo = seq.values([m], t_lo)[0]
    detail = {
        "delta": bound.delta,
        "m2": m,
        "max_excess_over_t_minus_delta": float(np.max(v_hi - (t_hi - bound.delta))),
        "max_below_half_eps": float(np.max(v_lo)),
        "half_eps_plus_delta": epsilon / 2 + bound.delta,
    }
    return InvarianceIndex(float(epsilon), m, "constructive", detail)


def _require_fixed_point(T: SelfMap, z) -> float:
    res = fixed_point_residual(T, z)
    if res > FIXED_POINT_TOL:
        raise PreconditionError(
            f"z={list(np.atleast_1d(z))} is not a certified fixed point (residual {res!r})")
    return res


def invariance_index_empirical(T: SelfMap, z, epsilon: float, spec: SampleSpec,
                               n_cap: int = 200) -> InvarianceIndex:
    """Smallest ``m`` with ``dist(T^n x, z) < eps`` for all sampled ``x`` in ``B(z, eps)`` and ``m <= n <= n_cap``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    res = _require_fixed_point(T, z)
    xs = sample_ball(T.space, z, epsilon, spec)
    D = distance_table(T, xs, z, n_cap)
    outside = np.any(D[:, 1:] >= epsilon, axis=0)  # index n-1
    bad = np.flatnonzero(outside)
    m = 1 if bad.size == 0 else int(bad[-1]) + 2
    if m > n_cap:
        raise InvarianceNotObserved(f"invariance not observed within cap {n_cap}")
    return InvarianceIndex(float(epsilon), m, "empirical",
                           {"samples": len(xs), "n_cap": n_cap, "residual": res})


@dataclass
class RetractVerification:
    passed: bool
    worst_index: int | None
    bound_m: int
    cap: int
    samples: int
    not_entered: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_retract_bound(T: SelfMap, z, bound: RetractBound, spec: SampleSpec,
                         cap: int | None = None) -> RetractVerification:
    """Check that every sampled start in ``B(z, K)`` enters ``B(z, eps)`` within ``bound.m`` steps.

    The first-entry search runs to ``max(bound.m, cap)`` so the worst index is
    reported even when it exceeds the bound. The caller is responsible for
    the family in ``bound`` actually dominating ``T``; run
    :func:`~leaderfp.contraction.check_kirk_asymptotic` first.
    """
    _require_fixed_point(T, z)
    limit = max(bound.m, cap if cap is not None else 1_000)
    xs = sample_ball(T.space, z, bound.K, spec)
    idx = first_entry_indices(T, xs, z, bound.epsilon, limit)
    missing = int(np.sum(idx == NOT_ENTERED))
    worst = None if missing else int(np.max(idx))
    passed = missing == 0 and worst <= bound.m
    return RetractVerification(passed, worst, bound.m, limit, len(xs), missing)


@dataclass
class UniformVerification:
    passed: bool
    degenerate: bool
    composed_bound: int | None
    cap: int | None
    samples: int
    worst_distance: float | None
    first_failure: dict | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_uniform_convergence(T: SelfMap, z, epsilon: float, K: float, bound: RetractBound | None,
                               inv: InvarianceIndex | None, spec: SampleSpec,
                               extra_steps: int = 64) -> UniformVerification:
    """Check ``dist(T^i x, z) < eps`` for sampled ``x`` in ``B(z, K)`` and ``q + m <= i <= q + m + extra_steps``.

    ``q`` is the invariance index of ``B(z, eps)`` and ``m`` the retract
    bound. When ``eps > K`` the check is vacuous and passes as degenerate.
    """
    if epsilon > K:
        return UniformVerification(True, True, None, None, 0, None)
    _require_fixed_point(T, z)
    if bound is None or inv is None:
        raise PreconditionError("a retract bound and an invariance index are required when eps <= K")
    composed = inv.m + bound.m
    cap = composed + extra_steps
    xs = sample_ball(T.space, z, K, spec)
    D = distance_table(T, xs, z, cap)[:, composed:]
    bad = D >= epsilon
    worst = float(np.max(D))
    if np.any(bad):
        k, j = np.argwhere(bad)[0]
        fail = {"x": xs[k].tolist(), "i": int(composed + j), "distance": float(D[k, j])}
        return UniformVerification(False, False, composed, cap, len(xs), worst, fail)
    return UniformVerification(True, False, composed, cap, len(xs), worst)
