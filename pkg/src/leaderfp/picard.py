"""Picard iteration with Cauchy-window convergence and residual diagnostics.

Convergence of an orbit and existence of a fixed point are reported
separately. A map can drive every orbit to a point it does not fix, so a
``converged`` report says nothing about ``T z = z`` until the residual has
been looked at.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .contraction import SelfMap
from .errors import OrbitEscapedError, PreconditionError
from .metric import BMetricSpace, SampleSpec, as_point, sample_ball

DEFAULT_MAX_ITER = 100_000
DEFAULT_CAUCHY_TOL = 1e-10
CAUCHY_WINDOW = 10
FIXED_POINT_TOL = 1e-12
NOT_ENTERED = -1


@dataclass
class Orbit:
    """``points[i] = T^i x`` and ``step_distances[i] = dist(points[i], points[i + 1])``."""

    start: np.ndarray
    points: np.ndarray
    step_distances: np.ndarray
    space: BMetricSpace | None = None

    @property
    def length(self) -> int:
        return len(self.points)

    def header(self) -> list[str]:
        d = self.points.shape[1]
        return ["n", *[f"x{i + 1}" for i in range(d)], "step_distance", "distance_to_z"]

    def to_csv(self, path: str | Path, z=None) -> None:
        """Write ``n, x1..xd, step_distance, distance_to_z`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header())
            w.writerows(self.rows(z))

    def rows(self, z=None) -> list[list]:
        to_z = None
        if z is not None and self.space is not None:
            to_z = self.space.dist(self.points, np.asarray(z, dtype=float))
        out = []
        for n, p in enumerate(self.points):
            step = repr(float(self.step_distances[n])) if n < len(self.step_distances) else ""
            dz = repr(float(to_z[n])) if to_z is not None else ""
            out.append([n, *[repr(float(c)) for c in p], step, dz])
        return out


@dataclass
class BoundednessReport:
    diameter: float
    verdict: str  # "bounded" | "unbounded-suspect"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ConvergenceReport:
    converged: bool
    limit_estimate: list[float] | None
    iterations_used: int
    cauchy_tol: float
    residual: float | None
    fixed_point_certified: bool
    orbit_diameter_estimate: float
    boundedness: str
    last_point: list[float]
    window: int = CAUCHY_WINDOW
    complete_graph: str = "not machine-checkable"

    @property
    def limit_is_fixed_point(self) -> bool | None:
        if not self.converged:
            return None
        return self.fixed_point_certified

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["limit_is_fixed_point"] = self.limit_is_fixed_point
        if self.converged and not self.fixed_point_certified:
            d["flag"] = "limit is not a fixed point"
        return d


def fixed_point_residual(T: SelfMap, z) -> float:
    """``dist(T z, z)``; at most ``1e-12`` certifies ``z`` as a fixed point."""
    pz = as_point(z, T.space.dimension)
    if not bool(T.space.contains(pz)):
        raise PreconditionError(f"point {pz.tolist()} is outside the domain")
    return float(T.space.dist(T(pz), pz))


def _snap(x: np.ndarray, tol: float, space) -> np.ndarray:
    # the limit is only known to about tol; round onto the tol lattice
    z = np.round(x / tol) * tol + 0.0
    return np.clip(z, space.lower, space.upper)


def orbit_bounded_check(orbit: Orbit) -> BoundednessReport:
    """Diameter from the start point plus a growth heuristic.

    "unbounded-suspect" needs the distance from the start to increase strictly
    over the final half of the orbit *and* not to decelerate: the growth in
    the last quarter must be at least half the growth in the quarter before.
    Geometrically converging orbits grow monotonically too, but their growth
    collapses.
    """
    if orbit.length < 2:
        raise ValueError("orbit must contain at least two points")
    if orbit.space is not None:
        r = orbit.space.dist(orbit.points, orbit.start)
    else:
        r = np.sqrt(np.sum((orbit.points - orbit.start) ** 2, axis=-1))
    return _boundedness(r)


def _boundedness(r: np.ndarray) -> BoundednessReport:
    diameter = float(np.max(r))
    L = len(r) - 1
    if L < 4:
        return BoundednessReport(diameter, "bounded")
    half = r[L // 2:]
    monotone = bool(np.all(np.diff(half) > 0))
    g3 = r[(3 * L) // 4] - r[L // 2]
    g4 = r[L] - r[(3 * L) // 4]
    growing = g4 > 0 and g4 >= 0.5 * g3
    return BoundednessReport(diameter, "unbounded-suspect" if monotone and growing else "bounded")


def iterate(T: SelfMap, x0, max_iter: int = DEFAULT_MAX_ITER,
            cauchy_tol: float = DEFAULT_CAUCHY_TOL, window: int = CAUCHY_WINDOW) -> tuple[Orbit, ConvergenceReport]:
    """Run ``x, Tx, T^2 x, ...`` until ``window`` consecutive steps are below ``cauchy_tol``.

    On convergence the limit estimate is the last iterate rounded onto the
    ``cauchy_tol`` lattice and the residual ``dist(T z, z)`` is evaluated
    there. Raises :class:`OrbitEscapedError` if an iterate leaves the domain.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if not cauchy_tol > 0:
        raise ValueError("cauchy_tol must be positive")
    space = T.space
    x = as_point(x0, space.dimension)
    if not bool(space.contains(x)):
        raise PreconditionError(f"start point {x.tolist()} is outside the domain")
    points = [x]
    steps: list[float] = []
    run = 0
    converged = False
    for k in range(1, max_iter + 1):
        y = T(x)
        if not bool(space.contains(y)):
            raise OrbitEscapedError(k, y)
        step = float(space.dist(x, y))
        points.append(y)
        steps.append(step)
        run = run + 1 if step < cauchy_tol else 0
        x = y
        if run >= window:
            converged = True
            break
    orbit = Orbit(points[0], np.array(points), np.array(steps), space)
    r = space.dist(orbit.points, orbit.start)
    bounded = _boundedness(r)
    if converged:
        bounded = BoundednessReport(bounded.diameter, "bounded")
        z = _snap(orbit.points[-1], cauchy_tol, space)
        residual = fixed_point_residual(T, z)
        limit = z.tolist()
    else:
        residual, limit = None, None
    report = ConvergenceReport(
        converged=converged,
        limit_estimate=limit,
        iterations_used=len(steps),
        cauchy_tol=cauchy_tol,
        residual=residual,
        fixed_point_certified=residual is not None and residual <= FIXED_POINT_TOL,
        orbit_diameter_estimate=bounded.diameter,
        boundedness=bounded.verdict,
        last_point=orbit.points[-1].tolist(),
        window=window,
    )
    return orbit, report


def first_entry_indices(T: SelfMap, xs: np.ndarray, z, epsilon: float, cap: int) -> np.ndarray:
    """Vectorised first-entry times; :data:`NOT_ENTERED` where the cap is hit."""
    space = T.space
    zc = as_point(z, space.dimension)
    cur = np.array(xs, dtype=float, copy=True)
    out = np.full(len(cur), NOT_ENTERED, dtype=int)
    active = np.ones(len(cur), dtype=bool)
    for i in range(cap + 1):
        hit = active & (space.dist(cur, zc) < epsilon)
        out[hit] = i
        active &= ~hit
        if not np.any(active) or i == cap:
            break
        cur[active] = T(cur[active])
    return out


def first_entry_index(T: SelfMap, x, z, epsilon: float, cap: int) -> int | None:
    """Smallest ``i <= cap`` with ``dist(T^i x, z) < epsilon``; ``None`` if never."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    px = as_point(x, T.space.dimension)
    i = int(first_entry_indices(T, px[None, :], z, epsilon, cap)[0])
    return None if i == NOT_ENTERED else i


@dataclass
class EntryProfile:
    epsilon: float
    K: float
    cap: int
    samples: int
    max_index: int | None
    not_entered: int
    histogram: dict[int, int] = field(default_factory=dict)

    @property
    def all_entered(self) -> bool:
        return self.not_entered == 0

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "K": self.K,
            "cap": self.cap,
            "samples": self.samples,
            "max_index": "not entered" if self.max_index is None else self.max_index,
            "not_entered": self.not_entered,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


def uniform_entry_profile(T: SelfMap, z, K: float, epsilon: float, spec: SampleSpec,
                          cap: int = 10_000) -> EntryProfile:
    """First-entry times into ``B(z, epsilon)`` for starts sampled from ``B(z, K)``.

    ``max_index`` is the empirical uniform bound, or ``None`` when some start
    did not enter within ``cap`` steps.
    """
    if not (epsilon > 0 and K > 0):
        raise ValueError("epsilon and K must be positive")
    xs = sample_ball(T.space, z, K, spec)
    idx = first_entry_indices(T, xs, z, epsilon, cap)
    missing = int(np.sum(idx == NOT_ENTERED))
    hist = Counter(int(i) for i in idx if i != NOT_ENTERED)
    if missing:
        hist[NOT_ENTERED] = missing
    max_index = None if missing else int(np.max(idx))
    return EntryProfile(float(epsilon), float(K), cap, len(xs), max_index, missing, dict(hist))


def distance_table(T: SelfMap, xs: np.ndarray, z, n_max: int) -> np.ndarray:
    """``D[k, n] = dist(T^n x_k, z)`` for ``n = 0..n_max``."""
    zc = as_point(z, T.space.dimension)
    D = np.empty((len(xs), n_max + 1))
    cur = np.asarray(xs, dtype=float)
    D[:, 0] = T.space.dist(cur, zc)
    for n in range(1, n_max + 1):
        cur = T(cur)
        D[:, n] = T.space.dist(cur, zc)
    return D

