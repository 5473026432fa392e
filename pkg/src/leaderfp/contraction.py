"""Contraction conditions as falsifiable predicates over sampled pairs.

Each ``check_*`` evaluates one inequality on a seeded pair sample and returns
a :class:`CheckResult` carrying the first violating pair. The ``search_*``
routines look for ``(delta, r)`` parameters of the Meir-Keeler family of
definitions and return either a :class:`Certificate` or a :class:`Witness`.
Neither is a proof; both carry the sample they were computed on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .control import (
    DEFAULT_PROBE_WIDTHS,
    VALUE_TOL,
    ControlFunction,
    ControlSequence,
    usc_probe,
)
from .errors import DimensionError, EvaluationError, VacuousSampleError
from .expression import Expression, parse_expression
from .metric import BMetricSpace, SampleSpec, as_point, sample_pairs, sample_points

# a strict "<" passes only below this margin
STRICT_SLACK = 1e-12
# relative allowance on non-strict "<=" for rounding in both sides
NONSTRICT_RTOL = 1e-12

DEFAULT_LADDER = (1.0, 0.5, 0.1, 0.05, 0.01, 0.001)


def _le(lhs, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    return lhs <= rhs + NONSTRICT_RTOL * np.maximum(1.0, np.abs(rhs))


def _lt(lhs, bound) -> np.ndarray:
    return lhs < bound - STRICT_SLACK


@dataclass(frozen=True)
class SelfMap:
    """``T: X -> X`` given by one expression per output coordinate in ``x1..xd``."""

    components: tuple[Expression, ...]
    space: BMetricSpace

    def __post_init__(self):
        if len(self.components) != self.space.dimension:
            raise DimensionError(
                f"map has {len(self.components)} components, space has dimension {self.space.dimension}")

    @classmethod
    def parse(cls, sources: str | Sequence[str], space: BMetricSpace) -> "SelfMap":
        if isinstance(sources, str):
            sources = [sources]
        names = {f"x{i + 1}" for i in range(space.dimension)}
        return cls(tuple(parse_expression(s, variables=names) for s in sources), space)

    @property
    def sources(self) -> list[str]:
        return [c.source for c in self.components]

    def __call__(self, x) -> np.ndarray:
        """Apply ``T`` to one point ``(d,)`` or a batch ``(N, d)``."""
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1] != self.space.dimension:
            raise DimensionError(f"expected trailing dimension {self.space.dimension}, got {arr.shape}")
        env = {f"x{i + 1}": arr[..., i] for i in range(self.space.dimension)}
        out = np.stack([np.broadcast_to(c(**env), arr.shape[:-1]) for c in self.components], axis=-1)
        if not np.all(np.isfinite(out)):
            bad = np.flatnonzero(~np.all(np.isfinite(out), axis=-1).ravel())[0]
            src = arr.reshape(-1, self.space.dimension)[bad]
            raise EvaluationError(f"map produced a non-finite value at x={src.tolist()}")
        return out

    def power(self, x, n: int) -> np.ndarray:
        """``T^n x``; ``n = 0`` returns ``x`` unchanged."""
        out = np.asarray(x, dtype=float)
        for _ in range(n):
            out = self(out)
        return out

    def to_dict(self) -> dict:
        return {"components": self.sources}


def iterate_distances(T: SelfMap, xs: np.ndarray, ys: np.ndarray, r_max: int) -> np.ndarray:
    """Table ``D[k, i] = dist(T^i x_k, T^i y_k)`` for ``i = 0..r_max``."""
    d = np.empty((xs.shape[0], r_max + 1))
    a, b = xs, ys
    d[:, 0] = T.space.dist(a, b)
    for i in range(1, r_max + 1):
        a, b = T(a), T(b)
        d[:, i] = T.space.dist(a, b)
    return d


def maps_into_domain(T: SelfMap, spec: SampleSpec) -> tuple[bool, list[float] | None]:
    """Whether every sampled point is mapped back into the domain; returns the first escapee."""
    pts = sample_points(T.space, spec)
    inside = T.space.contains(T(pts))
    if np.all(inside):
        return True, None
    return False, pts[np.flatnonzero(~inside)[0]].tolist()


@dataclass
class CheckResult:
    """Outcome of checking one inequality on a pair sample."""

    name: str
    passed: bool
    pairs_checked: int
    witness: dict | None = None
    parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "pairs_checked": self.pairs_checked,
            "witness": self.witness,
            "parameters": self.parameters,
        }


def _pairwise_check(name: str, T: SelfMap, spec: SampleSpec, rhs_of, params: dict) -> CheckResult:
    xs, ys = sample_pairs(T.space, spec)
    d0 = T.space.dist(xs, ys)
    d1 = T.space.dist(T(xs), T(ys))
    rhs = rhs_of(d0)
    ok = _le(d1, rhs)
    if np.all(ok):
        return CheckResult(name, True, len(d0), None, params)
    i = int(np.flatnonzero(~ok)[0])
    witness = {"x": xs[i].tolist(), "y": ys[i].tolist(), "n": 1,
               "distance": float(d0[i]), "lhs": float(d1[i]), "rhs": float(rhs[i])}
    return CheckResult(name, False, len(d0), witness, params)


def check_banach(T: SelfMap, q: float, spec: SampleSpec) -> CheckResult:
    """``dist(Tx, Ty) <= q dist(x, y)`` on sampled pairs."""
    if not 0 < q < 1:
        raise ValueError("Banach constant must lie in (0, 1)")
    return _pairwise_check("banach", T, spec, lambda d: q * d, {"q": q})


def check_boyd_wong(T: SelfMap, phi: ControlFunction, spec: SampleSpec) -> CheckResult:
    """``dist(Tx, Ty) <= phi(dist(x, y))`` on sampled pairs."""
    return _pairwise_check("boyd_wong", T, spec, phi, {"phi": phi.source})


def check_nonexpansive(T: SelfMap, spec: SampleSpec) -> CheckResult:
    return _pairwise_check("nonexpansive", T, spec, lambda d: d, {})


def check_kirk_asymptotic(T: SelfMap, seq: ControlSequence, spec: SampleSpec,
                          n_max: int = 20) -> CheckResult:
    """``dist(T^n x, T^n y) <= phi_n(dist(x, y))`` for ``1 <= n <= n_max``.

    The witness is the violating pair with the smallest ``n`` (then lowest
    sample index).
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    xs, ys = sample_pairs(T.space, spec)
    D = iterate_distances(T, xs, ys, n_max)
    bound = seq.values(np.arange(1, n_max + 1), D[:, 0])  # (n_max, N)
    ok = _le(D[:, 1:].T, bound) & ~np.isnan(bound)
    params = {"family": seq.source, "n_max": n_max}
    if np.all(ok):
        return CheckResult("kirk_asymptotic", True, len(xs), None, params)
    n_idx, k = np.argwhere(~ok)[0]
    witness = {"x": xs[k].tolist(), "y": ys[k].tolist(), "n": int(n_idx) + 1,
               "distance": float(D[k, 0]), "lhs": float(D[k, n_idx + 1]),
               "rhs": float(bound[n_idx, k])}
    return CheckResult("kirk_asymptotic", False, len(xs), witness, params)


# --------------------------------------------------------------------------
# certificate search


@dataclass
class Certificate:
    """Sampled evidence that a guard/implication pair holds at ``(epsilon, delta, r)``."""

    guard_kind: str
    epsilon: float
    delta: float
    r: int
    sample_size: int
    pairs_checked: int
    delta_ladder: list[float]
    r_max: int
    seed: int

    outcome = "certificate"

    def to_dict(self) -> dict:
        return {"outcome": self.outcome, **{k: v for k, v in self.__dict__.items()}}


@dataclass
class Witness:
    """A sampled pair on which no tested ``(delta, r)`` works.

    ``distances[i]`` is ``dist(T^i x, T^i y)``. ``survives`` is true when the
    pair never gets closer than ``epsilon`` within ``r_max`` steps.
    """

    guard_kind: str
    epsilon: float
    x: list[float]
    y: list[float]
    distances: list[float]
    delta: float
    r_max: int
    survives: bool
    sample_size: int
    seed: int

    outcome = "witness"

    def replay(self, T: SelfMap, atol: float = 1e-12) -> bool:
        """Recompute the iterate distances and compare with the stored ones."""
        D = iterate_distances(T, np.array([self.x]), np.array([self.y]), len(self.distances) - 1)
        return bool(np.all(np.abs(D[0] - np.asarray(self.distances)) <= atol))

    def to_dict(self) -> dict:
        return {"outcome": self.outcome, **{k: v for k, v in self.__dict__.items()}}


GUARD_KINDS = ("Leader", "MKLeader", "MeirKeeler")


def _ladder(epsilon: float, delta_ladder: Sequence[float] | None) -> list[float]:
    if delta_ladder is None:
        ladder = [float(f"{f * epsilon:.15g}") for f in DEFAULT_LADDER]
    else:
        ladder = [float(d) for d in delta_ladder]
    if not ladder or any(d <= 0 for d in ladder):
        raise ValueError("delta ladder must be non-empty and positive")
    return sorted(set(ladder), reverse=True)


def _search(kind: str, T: SelfMap, epsilon: float, spec: SampleSpec,
            delta_ladder: Sequence[float] | None, r_max: int,
            pairs: tuple[np.ndarray, np.ndarray] | None = None) -> Certificate | Witness:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    ladder = _ladder(epsilon, delta_ladder)
    if pairs is None:
        pairs = sample_pairs(T.space, spec, band=(epsilon, epsilon + ladder[0]))
    xs, ys = pairs
    D = iterate_distances(T, xs, ys, r_max)
    d0 = D[:, 0]
    below = _lt(D[:, 1:], epsilon)  # (N, r_max): implication conclusion per r
    last_nonempty = None
    for delta in ladder:
        guard = d0 < epsilon + delta
        if kind != "Leader":
            guard &= d0 >= epsilon
        if not np.any(guard):
            continue
        last_nonempty = (delta, guard)
        ok_r = np.all(below[guard], axis=0)
        hits = np.flatnonzero(ok_r)
        if hits.size:
            return Certificate(kind, float(epsilon), float(delta), int(hits[0]) + 1, len(d0),
                               int(guard.sum()), ladder, r_max, int(spec.seed))
    if last_nonempty is None:
        raise VacuousSampleError(
            f"no sampled pair satisfies any {kind} guard at epsilon={epsilon}")
    delta, guard = last_nonempty
    idx = np.flatnonzero(guard)
    never_below = ~np.any(below[idx], axis=1)
    if np.any(never_below):
        k, survives = int(idx[np.flatnonzero(never_below)[0]]), True
    else:
        k, survives = int(idx[np.flatnonzero(~below[idx, -1])[0]]), False
    return Witness(kind, float(epsilon), xs[k].tolist(), ys[k].tolist(), D[k].tolist(),
                   float(delta), r_max, survives, len(d0), int(spec.seed))


def search_leader_params(T: SelfMap, epsilon: float, spec: SampleSpec,
                         delta_ladder: Sequence[float] | None = None,
                         r_max: int = 64) -> Certificate | Witness:
    """Search ``(delta, r)`` with ``dist(x, y) < eps + delta => dist(T^r x, T^r y) < eps``.

    Ladder rungs are tried from the largest ``delta`` down and, for each, ``r``
    from 1 up; the first rung and ``r`` that hold on every guarded pair win.
    Raises :class:`VacuousSampleError` when no pair satisfies any guard.
    """
    return _search("Leader", T, epsilon, spec, delta_ladder, r_max)


def search_mk_leader_params(T: SelfMap, epsilon: float, spec: SampleSpec,
                            delta_ladder: Sequence[float] | None = None,
                            r_max: int = 64) -> Certificate | Witness:
    """As :func:`search_leader_params` with the two-sided guard ``eps <= dist < eps + delta``."""
    return _search("MKLeader", T, epsilon, spec, delta_ladder, r_max)


def search_meir_keeler_params(T: SelfMap, epsilon: float, spec: SampleSpec,
                              delta_ladder: Sequence[float] | None = None) -> Certificate | Witness:
    """Meir-Keeler: the MK-Leader search with ``r`` pinned to 1."""
    return _search("MeirKeeler", T, epsilon, spec, delta_ladder, 1)


def certificate_holds(T: SelfMap, cert: Certificate, spec: SampleSpec, delta: float | None = None) -> bool:
    """Re-test a certificate's implication, optionally with a smaller ``delta``, on a fresh draw."""
    d = cert.delta if delta is None else delta
    xs, ys = sample_pairs(T.space, spec, band=(cert.epsilon, cert.epsilon + cert.delta))
    D = iterate_distances(T, xs, ys, cert.r)
    guard = D[:, 0] < cert.epsilon + d
    if cert.guard_kind != "Leader":
        guard &= D[:, 0] >= cert.epsilon
    return bool(np.all(_lt(D[guard, cert.r], cert.epsilon)))


# --------------------------------------------------------------------------
# conditions on the control family and on T itself


@dataclass
class ChenReport:
    passed: bool
    n_star: int
    phi_at_zero: float
    zero_ok: bool
    probes_run: int
    failing_t: float | None
    failing_limsup: float | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_chen_condition(seq: ControlSequence, n_star: int, t_values: Sequence[float] | None = None,
                         probe_widths: Sequence[float] | None = None) -> ChenReport:
    """``phi_{n*}(0) = 0`` and a two-sided usc probe at each of ``t_values``.

    The default probe grid is 64 evenly spaced points of ``(0, 4]``, which
    contains every multiple of 1/16.
    """
    if n_star < 1:
        raise ValueError("n_star must be at least 1")
    phi = seq.member(n_star)
    at_zero = float(phi.raw(0.0))
    zero_ok = abs(at_zero) <= VALUE_TOL
    ts = np.linspace(0.0, 4.0, 65)[1:] if t_values is None else np.asarray(t_values, dtype=float)
    widths = DEFAULT_PROBE_WIDTHS if probe_widths is None else probe_widths
    failing_t = failing_val = None
    for t in ts:
        rep = usc_probe(phi, float(t), widths)
        if not rep.consistent:
            failing_t, failing_val = float(t), rep.limsup_estimate
            break
    return ChenReport(zero_ok and failing_t is None, n_star, at_zero, zero_ok, len(ts),
                      failing_t, failing_val)


@dataclass
class ContinuityReport:
    n: int
    probe_radius: float
    max_oscillation: float
    suspects: list[list[float]]
    points_probed: int
    jump_tol: float

    @property
    def continuous_on_sample(self) -> bool:
        return not self.suspects

    def to_dict(self) -> dict:
        return {**self.__dict__, "continuous_on_sample": self.continuous_on_sample}


def continuity_probe(T: SelfMap, n: int, spec: SampleSpec, probe_radius: float = 1e-6,
                     jump_tol: float = 1e-3, shrink: Sequence[float] = (1.0, 0.1, 0.01)) -> ContinuityReport:
    """Look for jumps of ``T^n`` by perturbing each sampled point along every axis.

    ``max_oscillation`` is the largest ``dist(T^n x, T^n x') / dist(x, x')``
    seen at ``probe_radius``. A point is a suspect when some perturbation
    still moves the image by more than ``jump_tol`` at the smallest radius.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    space = T.space
    xs = sample_points(space, spec)
    base = T.power(xs, n)
    worst_ratio = 0.0
    suspect = np.zeros(len(xs), dtype=bool)
    for k in range(space.dimension):
        for sign in (1.0, -1.0):
            jumps_small = None
            valid_small = None
            for j, factor in enumerate(shrink):
                step = np.zeros(space.dimension)
                step[k] = sign * probe_radius * factor
                xp = xs + step
                valid = space.contains(xp)
                if not np.any(valid):
                    continue
                img = np.empty_like(base)
                img[valid] = T.power(xp[valid], n)
                jump = np.where(valid, space.dist(np.where(valid[:, None], img, base), base), 0.0)
                if j == 0:
                    sep = space.dist(xp, xs)
                    ratio = np.where(valid & (sep > 0), jump / np.where(sep > 0, sep, 1.0), 0.0)
                    worst_ratio = max(worst_ratio, float(np.max(ratio)))
                jumps_small, valid_small = jump, valid
            if jumps_small is not None:
                suspect |= valid_small & (jumps_small > jump_tol)
    return ContinuityReport(n, probe_radius, worst_ratio, xs[suspect].tolist(), len(xs), jump_tol)
