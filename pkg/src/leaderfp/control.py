"""Control functions phi: [0, inf) -> [0, inf) and indexed families phi_n.

Everything here is sampled evidence. A semicontinuity probe that says
"consistent" has only failed to find a counterexample at the resolution it
was given; the reports carry that resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EvaluationError, SubcontractivityViolated
from .expression import Expression, parse_expression

VALUE_TOL = 1e-9
PROBE_TOL = 1e-6
DEFAULT_GRID = 1024
DEFAULT_PROBE_WIDTHS = tuple(10.0 ** -k for k in range(1, 9))

PROPERTY_FLAGS = frozenset({"subcontractive", "right_usc", "usc", "zero_at_zero"})


@dataclass(frozen=True)
class ControlFunction:
    expression: Expression
    declared_properties: frozenset[str] = frozenset()

    def __post_init__(self):
        unknown = set(self.declared_properties) - PROPERTY_FLAGS
        if unknown:
            raise ValueError(f"unknown property flags: {sorted(unknown)}")
        object.__setattr__(self, "declared_properties", frozenset(self.declared_properties))

    @classmethod
    def parse(cls, source: str, properties: Sequence[str] = ()) -> "ControlFunction":
        return cls(parse_expression(source, variables={"t"}), frozenset(properties))

    @property
    def source(self) -> str:
        return self.expression.source

    def raw(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(self.expression(t=t), t.shape).astype(float)

    def __call__(self, t) -> np.ndarray:
        """Evaluate on an array of non-negative ``t``; enforces the output contract."""
        t = np.asarray(t, dtype=float)
        if np.any(~np.isfinite(t)) or np.any(t < 0):
            raise EvaluationError(f"control functions take finite t >= 0 ({self.source})")
        v = self.raw(t)
        bad = ~np.isfinite(v) | (v < 0)
        if np.any(bad):
            i = np.flatnonzero(bad.ravel())[0]
            raise EvaluationError(
                f"phi(t)={self.source} gave {v.ravel()[i]!r} at t={t.ravel()[i]!r}; "
                "expected a finite non-negative value")
        return v

    def eval(self, t: float) -> float:
        return float(self(float(t)))

    def to_dict(self) -> dict:
        return {"expr": self.source, "properties": sorted(self.declared_properties)}


@dataclass(frozen=True)
class ControlSequence:
    """The family ``n -> phi_n`` given as one expression in ``n`` and ``t``.

    ``subsequence_indices`` restricts convergence checks to ``n(1) < n(2) < ...``.
    """

    family: Expression
    limit: ControlFunction
    subsequence_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.subsequence_indices is not None:
            idx = tuple(int(i) for i in self.subsequence_indices)
            if not idx or idx[0] < 1 or any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError("subsequence indices must be positive and strictly increasing")
            object.__setattr__(self, "subsequence_indices", idx)

    @classmethod
    def parse(cls, family: str, limit: str | ControlFunction,
              subsequence: Sequence[int] | None = None) -> "ControlSequence":
        lim = limit if isinstance(limit, ControlFunction) else ControlFunction.parse(limit)
        fam = parse_expression(family, variables={"n", "t"})
        return cls(fam, lim, None if subsequence is None else tuple(subsequence))

    @classmethod
    def constant(cls, phi: ControlFunction) -> "ControlSequence":
        return cls(phi.expression, phi)

    @property
    def source(self) -> str:
        return self.family.source

    def values(self, ns, t) -> np.ndarray:
        """Raw ``phi_n(t)`` table of shape ``(len(ns), len(t))``; no contract checks."""
        ns = np.asarray(ns, dtype=float).reshape(-1, 1)
        t = np.asarray(t, dtype=float).reshape(1, -1)
        return np.broadcast_to(self.family(n=ns, t=t), (ns.shape[0], t.shape[1])).astype(float)

    def member(self, n: int) -> ControlFunction:
        """``phi_n`` as a stand-alone control function."""
        node = _substitute_n(self.family.root, float(n))
        return ControlFunction(Expression(f"({self.source})[n={n}]", node))

    def indices(self, n_max: int, n_min: int = 1) -> np.ndarray:
        if self.subsequence_indices is None:
            return np.arange(n_min, n_max + 1)
        idx = np.asarray(self.subsequence_indices)
        return idx[(idx >= n_min) & (idx <= n_max)]

    def to_dict(self) -> dict:
        return {
            "family": self.source,
            "limit": self.limit.source,
            "subsequence": None if self.subsequence_indices is None else list(self.subsequence_indices),
        }


def _substitute_n(node, n: float):
    from . import expression as ex

    if isinstance(node, ex.Var):
        return ex.Num(n) if node.name == "n" else node
    if isinstance(node, ex.Num):
        return node
    if isinstance(node, ex.Neg):
        return ex.Neg(_substitute_n(node.operand, n))
    if isinstance(node, ex.BinOp):
        return ex.BinOp(node.op, _substitute_n(node.left, n), _substitute_n(node.right, n))
    if isinstance(node, ex.Compare):
        return ex.Compare(node.op, _substitute_n(node.left, n), _substitute_n(node.right, n))
    if isinstance(node, ex.Call):
        return ex.Call(node.func, tuple(_substitute_n(a, n) for a in node.args))
    if isinstance(node, ex.IfElse):
        return ex.IfElse(_substitute_n(node.cond, n), _substitute_n(node.then, n),
                         _substitute_n(node.orelse, n))
    raise TypeError(node)


# --------------------------------------------------------------------------
# subcontractivity


@dataclass
class SubcontractivityReport:
    passed: bool
    b: float
    grid_n: int
    first_violation_t: float | None = None
    value_at_violation: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_subcontractive(phi: ControlFunction, b: float, grid_n: int = DEFAULT_GRID) -> SubcontractivityReport:
    """Test ``phi(t) < t`` at ``grid_n`` evenly spaced points of ``(0, b]``."""
    if not b > 0:
        raise ValueError("b must be positive")
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    t = b * np.arange(1, grid_n + 1) / grid_n
    v = phi(t)
    bad = np.flatnonzero(~(v < t))
    if bad.size:
        i = bad[0]
        return SubcontractivityReport(False, b, grid_n, float(t[i]), float(v[i]))
    return SubcontractivityReport(True, b, grid_n)


# --------------------------------------------------------------------------
# semicontinuity probes


@dataclass
class ProbeReport:
    """Sampled estimate of a one- or two-sided limsup at ``t``.

    ``sup_per_width[k]`` is the largest sampled value within ``widths[k]`` of
    ``t`` (excluding ``t`` itself); the last entry is the limsup estimate.
    """

    side: str
    t: float
    value_at_t: float
    limsup_estimate: float
    verdict: str
    widths: list[float]
    sup_per_width: list[float]
    tol: float

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _probe(phi: ControlFunction, t: float, widths, side: str, samples_per_width: int,
           tol: float) -> ProbeReport:
    if not t > 0:
        raise ValueError("probe point must be positive")
    widths = [float(w) for w in (DEFAULT_PROBE_WIDTHS if widths is None else widths)]
    if not widths or any(w <= 0 for w in widths) or any(b >= a for a, b in zip(widths, widths[1:])):
        raise ValueError("probe widths must be positive and strictly decreasing")
    frac = np.arange(1, samples_per_width + 1) / samples_per_width
    value = phi.eval(t)
    sups = []
    for w in widths:
        pts = [t + w * frac]
        if side == "two-sided":
            left = t - w * frac
            pts.append(left[left >= 0])
        s = np.concatenate(pts)
        sups.append(float(np.max(phi(s))))
    est = sups[-1]
    verdict = "violated" if est > value + tol else "consistent"
    return ProbeReport(side, float(t), value, est, verdict, widths, sups, tol)


def right_usc_probe(phi: ControlFunction, t: float, probe_widths: Sequence[float] | None = None,
                    samples_per_width: int = 32, tol: float = PROBE_TOL) -> ProbeReport:
    """Probe upper semicontinuity from the right at ``t`` over ``(t, t + w]``."""
    return _probe(phi, t, probe_widths, "right", samples_per_width, tol)


def usc_probe(phi: ControlFunction, t: float, probe_widths: Sequence[float] | None = None,
              samples_per_width: int = 32, tol: float = PROBE_TOL) -> ProbeReport:
    """Probe two-sided upper semicontinuity at ``t`` over ``(t - w, t + w)``."""
    return _probe(phi, t, probe_widths, "two-sided", samples_per_width, tol)


# --------------------------------------------------------------------------
# gap infimum


@dataclass
class GapReport:
    """Estimate of ``inf { t - phi(t) : a <= t <= b }``.

    ``round_estimates[0]`` is the coarse-grid value and each later entry adds
    one refinement round, so the list is non-increasing.
    """

    a: float
    b: float
    infimum_estimate: float
    argmin_estimate: float
    grid_resolution: float
    initial_grid: int
    refine_rounds: int
    round_estimates: list[float] = field(default_factory=list)
    evaluations: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _best(ts: np.ndarray, fs: np.ndarray) -> tuple[float, float]:
    m = np.min(fs)
    return float(m), float(np.min(ts[fs == m]))


def gap_infimum(phi: ControlFunction, a: float, b: float, initial_grid: int = DEFAULT_GRID,
                refine_rounds: int = 3, right_offset: float = 1e-3) -> GapReport:
    """Grid-and-refine estimate of the infimum of ``f(t) = t - phi(t)`` on ``[a, b]``.

    Each round shrinks the spacing tenfold around the running argmin. Every
    knot is also probed at ``knot + right_offset * spacing``: for right-usc
    ``phi`` the gap can dip immediately to the right of a point.

    Raises
    ------
    SubcontractivityViolated
        If the estimate is not strictly positive.
    """
    if not 0 < a < b:
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    if initial_grid < 2:
        raise ValueError("initial_grid must be at least 2")

    def gap(ts):
        ts = ts[(ts >= a) & (ts <= b)]
        return ts, ts - phi(ts)

    h = (b - a) / (initial_grid - 1)
    knots = np.linspace(a, b, initial_grid)
    ts, fs = gap(np.concatenate([knots, knots + right_offset * h]))
    best_f, best_t = _best(ts, fs)
    n_evals = ts.size
    rounds = [best_f]
    for _ in range(refine_rounds):
        h_new = h / 10.0
        local = best_t + h_new * np.arange(-10, 11)
        lts, lfs = gap(np.concatenate([local, local + right_offset * h_new]))
        n_evals += lts.size
        f2, t2 = _best(lts, lfs)
        if f2 < best_f or (f2 == best_f and t2 < best_t):
            best_f, best_t = f2, t2
        h = h_new
        rounds.append(best_f)
    report = GapReport(float(a), float(b), best_f, best_t, h, initial_grid, refine_rounds,
                       rounds, n_evals)
    if not best_f > 0:
        raise SubcontractivityViolated("subcontractivity violated on interval", best_t)
    return report


# --------------------------------------------------------------------------
# families


@dataclass
class UniformConvergenceReport:
    reached: bool
    index: int | None
    b: float
    tol: float
    n_max: int
    grid_n: int
    tested: int
    max_deviation_tail: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _deviations(seq: ControlSequence, ns: np.ndarray, t: np.ndarray, chunk: int = 256) -> np.ndarray:
    lim = seq.limit.raw(t)
    out = np.empty(ns.size)
    for s in range(0, ns.size, chunk):
        vals = seq.values(ns[s:s + chunk], t)
        with np.errstate(invalid="ignore"):
            d = np.abs(vals - lim[None, :])
        d = np.where(np.isfinite(d), d, np.inf)
        out[s:s + chunk] = np.max(d, axis=1)
    return out


def uniform_convergence_check(seq: ControlSequence, b: float, tol: float, n_max: int,
                              grid_n: int = DEFAULT_GRID) -> UniformConvergenceReport:
    """Find the first index ``N`` from which ``sup_[0,b] |phi_n - phi| <= tol``.

    The supremum is taken over a fixed ``grid_n``-point grid of ``[0, b]``,
    for every tested ``n`` in ``[N, n_max]`` (the subsequence, when the family
    declares one). Overflowing members count as infinitely far from the limit.
    """
    if not b > 0 or not tol > 0:
        raise ValueError("b and tol must be positive")
    t = np.linspace(0.0, b, grid_n)
    ns = seq.indices(n_max)
    if ns.size == 0:
        return UniformConvergenceReport(False, None, b, tol, n_max, grid_n, 0, math.inf)
    dev = _deviations(seq, ns, t)
    bad = np.flatnonzero(dev > tol + VALUE_TOL)
    if bad.size == 0:
        index, reached, tail = int(ns[0]), True, float(np.max(dev))
    elif bad[-1] == ns.size - 1:
        index, reached, tail = None, False, float(dev[-1])
    else:
        first_ok = bad[-1] + 1
        index, reached, tail = int(ns[first_ok]), True, float(np.max(dev[first_ok:]))
    return UniformConvergenceReport(reached, index, float(b), float(tol), int(n_max), grid_n,
                                    int(ns.size), tail)


@dataclass
class TailSupReport:
    sup_estimate: float
    argmax_n: int
    argmax_t: float
    verdict: str
    a: float
    m_a: int
    n_max: int
    running_sup: list[float]

    @property
    def finite(self) -> bool:
        return self.verdict == "finite"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def tail_sup_bounded(seq: ControlSequence, a: float, m_a: int, n_max: int,
                     grid_n: int = DEFAULT_GRID) -> TailSupReport:
    """Estimate ``sup { phi_n(t) : t in [0, a], m_a <= n <= n_max }``.

    Flags "suspect-divergent" when the running supremum keeps strictly
    increasing over the last quarter of the tested indices.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if m_a < 1 or n_max < m_a:
        raise ValueError("need 1 <= m_a <= n_max")
    t = np.linspace(0.0, a, grid_n)
    ns = np.arange(m_a, n_max + 1)
    per_n = np.empty(ns.size)
    arg_t = np.empty(ns.size)
    for s in range(0, ns.size, 256):
        vals = seq.values(ns[s:s + 256], t)
        vals = np.where(np.isnan(vals), np.inf, vals)
        j = np.argmax(vals, axis=1)
        per_n[s:s + 256] = vals[np.arange(vals.shape[0]), j]
        arg_t[s:s + 256] = t[j]
    running = np.maximum.accumulate(per_n)
    k = int(np.argmax(per_n))
    q = max(2, ns.size // 4)
    tail = running[-q:]
    divergent = (not np.isfinite(running[-1])) or (tail.size >= 2 and bool(np.all(np.diff(tail) > 0)))
    return TailSupReport(float(running[-1]), int(ns[k]), float(arg_t[k]),
                         "suspect-divergent" if divergent else "finite",
                         float(a), int(m_a), int(n_max), running.tolist())
