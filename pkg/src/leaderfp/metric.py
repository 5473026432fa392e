"""Points, b-metric spaces on axis-aligned boxes, and seeded sampling.

A point is a 1-D float ``numpy`` array. Batches of points are 2-D arrays of
shape ``(count, dimension)``; every distance routine broadcasts over the
leading axis so the same code handles one pair or ten thousand.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, SamplingError

Point = np.ndarray

# value-comparison tolerance for the axiom checker
AXIOM_RTOL = 1e-9

# stream identifiers so each sampling purpose draws from an independent generator
_STREAM_POINTS = 0
_STREAM_PAIRS = 1
_STREAM_TRIPLES = 2
_STREAM_BALL = 3


class MetricKind(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    CHEBYSHEV = "chebyshev"
    POWER_EUCLIDEAN = "power_euclidean"


def as_point(coords, dimension: int | None = None) -> Point:
    """Validate and convert ``coords`` to a finite 1-D float array."""
    x = np.atleast_1d(np.asarray(coords, dtype=float))
    if x.ndim != 1 or x.size < 1:
        raise DimensionError(f"a point must be a non-empty 1-D coordinate list, got shape {x.shape}")
    if dimension is not None and x.size != dimension:
        raise DimensionError(f"expected dimension {dimension}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DimensionError(f"non-finite coordinates: {x.tolist()}")
    return x


@dataclass(frozen=True)
class BMetricSpace:
    """A box in R^d with a (b-)metric.

    ``coefficient_s`` defaults to the natural relaxed-triangle constant of the
    metric (1 for the norm metrics, ``2**(p-1)`` for ``|x-y|_2**p``). It may be
    declared explicitly, including wrongly, so that the axiom checker has
    something to falsify.
    """

    dimension: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    metric: MetricKind = MetricKind.EUCLIDEAN
    exponent: float = 1.0
    coefficient_s: float | None = None

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise DimensionError(f"dimension must be a positive integer, got {self.dimension}")
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != self.dimension or len(upper) != self.dimension:
            raise DimensionError("domain bounds must have one entry per coordinate")
        if any(lo > hi for lo, hi in zip(lower, upper)):
            raise DimensionError(f"empty domain: lower {lower} exceeds upper {upper}")
        if any(math.isnan(v) for v in lower + upper):
            raise DimensionError("domain bounds may be infinite but not NaN")
        metric = MetricKind(self.metric)
        exponent = float(self.exponent)
        if metric is MetricKind.POWER_EUCLIDEAN:
            if not exponent >= 1.0:
                raise ValueError(f"PowerEuclidean exponent must be >= 1, got {exponent}")
        else:
            exponent = 1.0
        natural = 2.0 ** (exponent - 1.0)
        s = natural if self.coefficient_s is None else float(self.coefficient_s)
        if not s >= 1.0:
            raise ValueError(f"b-metric coefficient must be >= 1, got {s}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "metric", metric)
        object.__setattr__(self, "exponent", exponent)
        object.__setattr__(self, "coefficient_s", s)

    @classmethod
    def interval(cls, lo: float, hi: float, **kwargs) -> "BMetricSpace":
        return cls(1, (lo,), (hi,), **kwargs)

    @classmethod
    def box(cls, bounds: Sequence[tuple[float, float]], **kwargs) -> "BMetricSpace":
        lows, highs = zip(*bounds)
        return cls(len(bounds), tuple(lows), tuple(highs), **kwargs)

    @property
    def natural_coefficient(self) -> float:
        return 2.0 ** (self.exponent - 1.0)

    @property
    def bounded(self) -> bool:
        return all(math.isfinite(v) for v in self.lower + self.upper)

    @property
    def bounds(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self.lower, self.upper))

    def norm(self, v: np.ndarray) -> np.ndarray:
        """Underlying norm of difference vectors along the last axis."""
        v = np.asarray(v, dtype=float)
        if self.metric is MetricKind.MANHATTAN:
            return np.sum(np.abs(v), axis=-1)
        if self.metric is MetricKind.CHEBYSHEV:
            return np.max(np.abs(v), axis=-1)
        return np.sqrt(np.sum(v * v, axis=-1))

    def dist(self, x, y) -> np.ndarray:
        """Vectorised distance; no validation. Broadcasts over leading axes."""
        r = self.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        if self.metric is MetricKind.POWER_EUCLIDEAN and self.exponent != 1.0:
            r = r ** self.exponent
        return r

    def contains(self, points) -> np.ndarray:
        arr = np.asarray(points, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all((arr >= lo) & (arr <= hi), axis=-1)

    def diameter(self) -> float:
        if not self.bounded:
            return math.inf
        return float(self.dist(np.asarray(self.lower), np.asarray(self.upper)))

    def radius_in_norm(self, d):
        """Norm length of a difference vector whose distance equals ``d``."""
        if self.metric is MetricKind.POWER_EUCLIDEAN:
            return d ** (1.0 / self.exponent)
        return d

    def unit_directions(self, rng: np.random.Generator, count: int) -> np.ndarray:
        g = rng.standard_normal((count, self.dimension))
        n = self.norm(g)
        n = np.where(n > 0, n, 1.0)
        return g / n[:, None]

    def to_dict(self) -> dict:
        metric: dict | str = self.metric.value
        if self.metric is MetricKind.POWER_EUCLIDEAN:
            metric = {"kind": self.metric.value, "exponent": self.exponent}
        return {
            "dimension": self.dimension,
            "domain": [[_json_float(lo), _json_float(hi)] for lo, hi in self.bounds],
            "metric": metric,
            "coefficient_s": self.coefficient_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BMetricSpace":
        dim = int(data["dimension"])
        domain = data.get("domain")
        if domain is None:
            bounds = [(-math.inf, math.inf)] * dim
        else:
            bounds = [(_parse_float(lo), _parse_float(hi)) for lo, hi in domain]
        metric = data.get("metric", "euclidean")
        exponent = 1.0
        if isinstance(metric, dict):
            exponent = float(metric.get("exponent", 1.0))
            metric = metric["kind"]
        space = cls.box(bounds, metric=MetricKind(metric), exponent=exponent,
                        coefficient_s=data.get("coefficient_s"))
        if space.dimension != dim:
            raise DimensionError("dimension does not match the number of domain bounds")
        return space


def _json_float(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _parse_float(v) -> float:
    return float(v)


def distance(space: BMetricSpace, x, y) -> float:
    """Distance between two points after validating dimension and finiteness."""
    px = as_point(x, space.dimension)
    py = as_point(y, space.dimension)
    return float(space.dist(px, py))


@dataclass(frozen=True)
class SampleSpec:
    """Seeded sampling request.

    ``region`` defaults to the space's domain. ``anchors`` are points that
    replace the first uniform draws, which lets callers force known trouble
    spots (breakpoints of a piecewise map, for instance) into every sample.
    """

    seed: int
    count: int
    region: tuple[tuple[float, float], ...] | None = None
    anchors: tuple[tuple[float, ...], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise SamplingError(f"sample count must be >= 1, got {self.count}")
        if not -(2**63) <= int(self.seed) < 2**64:
            raise SamplingError(f"seed must fit in 64 bits, got {self.seed}")
        if self.region is not None:
            object.__setattr__(self, "region",
                               tuple((float(lo), float(hi)) for lo, hi in self.region))
        object.__setattr__(self, "anchors",
                           tuple(tuple(float(c) for c in np.atleast_1d(a)) for a in self.anchors))

    def with_count(self, count: int) -> "SampleSpec":
        return SampleSpec(self.seed, count, self.region, self.anchors)

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "count": int(self.count),
            "region": None if self.region is None else [list(b) for b in self.region],
            "anchors": [list(a) for a in self.anchors],
        }


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) % 2**64, stream])


def _resolve_region(space: BMetricSpace, spec: SampleSpec) -> tuple[np.ndarray, np.ndarray]:
    region = spec.region if spec.region is not None else space.bounds
    if len(region) != space.dimension:
        raise SamplingError(f"region has {len(region)} bounds, space has dimension {space.dimension}")
    lo = np.array([b[0] for b in region], dtype=float)
    hi = np.array([b[1] for b in region], dtype=float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise SamplingError("cannot sample uniformly from an unbounded region")
    if np.any(lo > hi):
        raise SamplingError("region lower bound exceeds upper bound")
    dlo = np.asarray(space.lower)
    dhi = np.asarray(space.upper)
    if np.any(lo < dlo) or np.any(hi > dhi):
        raise SamplingError("sampling region must lie inside the domain")
    return lo, hi


def _uniform(rng: np.random.Generator, lo: np.ndarray, hi: np.ndarray, count: int) -> np.ndarray:
    return lo + (hi - lo) * rng.random((count, lo.size))


def _with_anchors(space: BMetricSpace, spec: SampleSpec, pts: np.ndarray, repeat: int = 1) -> np.ndarray:
    """Overwrite the leading points with the anchors, each repeated ``repeat`` times."""
    if spec.anchors:
        anchors = np.array([as_point(a, space.dimension) for a in spec.anchors])
        anchors = np.tile(anchors, (repeat, 1))
        k = min(len(anchors), len(pts))
        pts[:k] = anchors[:k]
    return pts


def sample_points(space: BMetricSpace, spec: SampleSpec) -> np.ndarray:
    """Draw ``spec.count`` points uniformly from the sampling region.

    Pure function of ``(space, spec)``: the same spec always yields the same
    array.
    """
    lo, hi = _resolve_region(space, spec)
    pts = _uniform(_rng(spec.seed, _STREAM_POINTS), lo, hi, spec.count)
    return _with_anchors(space, spec, pts)


def sample_pairs(space: BMetricSpace, spec: SampleSpec,
                 band: tuple[float, float] | None = None,
                 max_rounds: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``spec.count`` pairs of points.

    Without ``band`` both points are uniform. With ``band=(lo, hi)`` half of
    the pairs are placed so that their distance lies in ``[lo, hi)``, by
    stepping from a uniform base point along a random direction and rejecting
    steps that leave the region. Offsets above ``lo`` are spread
    log-uniformly over four decades of ``hi - lo``. If the band cannot be realised inside the
    region the shortfall is made up with uniform pairs.
    """
    lo, hi = _resolve_region(space, spec)
    rng = _rng(spec.seed, _STREAM_PAIRS)
    n = spec.count
    n_band = n // 2 if band is not None else 0
    n_uniform = n - n_band

    # each anchor gets several uniform partners
    xs_u = _with_anchors(space, spec, _uniform(rng, lo, hi, n_uniform), repeat=16)
    ys_u = _uniform(rng, lo, hi, n_uniform)

    if n_band == 0:
        return xs_u, ys_u

    blo, bhi = float(band[0]), float(band[1])
    got_x: list[np.ndarray] = []
    got_y: list[np.ndarray] = []
    if spec.anchors:
        ax, ay = _anchor_band_pairs(space, spec, blo, bhi, lo, hi)
        got_x.append(ax[:n_band])
        got_y.append(ay[:n_band])
    need = n_band - sum(len(g) for g in got_x)
    for _ in range(max_rounds):
        if need <= 0:
            break
        batch = max(4 * need, 64)
        bx = _uniform(rng, lo, hi, batch)
        # log-spread offsets: the inner edge of the band is where guards bite
        target = blo + (bhi - blo) * 10.0 ** (-4.0 * rng.random(batch))
        step = space.radius_in_norm(target)
        by = bx + space.unit_directions(rng, batch) * step[:, None]
        inside = np.all((by >= lo) & (by <= hi), axis=-1)
        d = space.dist(bx, by)
        keep = inside & (d >= blo) & (d < bhi)
        got_x.append(bx[keep][:need])
        got_y.append(by[keep][:need])
        need -= len(got_x[-1])
    if need > 0:
        got_x.append(_uniform(rng, lo, hi, need))
        got_y.append(_uniform(rng, lo, hi, need))
    xs_b = np.concatenate(got_x)
    ys_b = np.concatenate(got_y)
    return np.concatenate([xs_b, xs_u]), np.concatenate([ys_b, ys_u])


def _anchor_band_pairs(space: BMetricSpace, spec: SampleSpec, blo: float, bhi: float,
                       lo: np.ndarray, hi: np.ndarray, per_axis: int = 8):
    """Pairs ``(anchor, anchor +- step * e_k)`` with distances spread over the band."""
    fracs = 0.999 * 10.0 ** (-4.0 * np.arange(per_axis) / per_axis)
    xs, ys = [], []
    for a in spec.anchors:
        pa = as_point(a, space.dimension)
        for k in range(space.dimension):
            for sign in (1.0, -1.0):
                for f in fracs:
                    y = pa.copy()
                    y[k] += sign * space.radius_in_norm(blo + (bhi - blo) * f)
                    if np.all(y >= lo) and np.all(y <= hi) and blo <= space.dist(pa, y) < bhi:
                        xs.append(pa)
                        ys.append(y)
    if not xs:
        empty = np.empty((0, space.dimension))
        return empty, empty
    return np.array(xs), np.array(ys)


def sample_ball(space: BMetricSpace, center, radius: float, spec: SampleSpec,
                max_rounds: int = 200) -> np.ndarray:
    """Draw ``spec.count`` points from ``{x in domain : dist(x, center) < radius}``.

    Rejection sampling from the bounding box of the ball intersected with the
    domain (and with ``spec.region`` when given). Anchors inside the ball are
    kept as the first points.
    """
    c = as_point(center, space.dimension)
    r_norm = space.radius_in_norm(radius)
    lo = np.maximum(c - r_norm, np.asarray(space.lower))
    hi = np.minimum(c + r_norm, np.asarray(space.upper))
    if spec.region is not None:
        rlo, rhi = _resolve_region(space, spec)
        lo, hi = np.maximum(lo, rlo), np.minimum(hi, rhi)
    if np.any(lo > hi):
        raise SamplingError("ball does not meet the sampling region")
    rng = _rng(spec.seed, _STREAM_BALL)
    out: list[np.ndarray] = []
    for a in spec.anchors:
        pa = as_point(a, space.dimension)
        if space.dist(pa, c) < radius and bool(space.contains(pa)):
            out.append(pa[None, :])
    need = spec.count - sum(len(o) for o in out)
    for _ in range(max_rounds):
        if need <= 0:
            break
        cand = _uniform(rng, lo, hi, max(2 * need, 64))
        cand = cand[space.dist(cand, c) < radius][:need]
        out.append(cand)
        need -= len(cand)
    if need > 0:
        raise SamplingError("rejection sampling of the ball did not fill the requested count")
    return np.concatenate(out)[: spec.count]


@dataclass
class AxiomReport:
    """Outcome of the sampled metric-axiom check.

    ``violations`` maps each failing axiom to its first violating tuple.
    """

    coefficient_s: float
    metric: str
    pairs_checked: int
    triples_checked: int
    passed: dict[str, bool]
    violations: dict[str, dict]

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "coefficient_s": self.coefficient_s,
            "metric": self.metric,
            "pairs_checked": self.pairs_checked,
            "triples_checked": self.triples_checked,
            "passed": dict(self.passed),
            "violations": self.violations,
            "all_passed": self.all_passed,
        }


def _first(mask: np.ndarray) -> int | None:
    idx = np.flatnonzero(mask)
    return int(idx[0]) if idx.size else None


def check_metric_axioms(space: BMetricSpace, spec: SampleSpec) -> AxiomReport:
    """Check the b-metric axioms on ``spec.count`` sampled triples.

    Checks non-negativity, symmetry, ``d(x, x) == 0`` exactly, positivity on
    distinct pairs, and ``d(x, z) <= s * (d(x, y) + d(y, z))``. A quarter of
    the triples put ``y`` at the midpoint of ``x`` and ``z``, where power
    metrics are tight against their coefficient.
    """
    lo, hi = _resolve_region(space, spec)
    rng = _rng(spec.seed, _STREAM_TRIPLES)
    n = spec.count
    x = _with_anchors(space, spec, _uniform(rng, lo, hi, n))
    y = _uniform(rng, lo, hi, n)
    z = _uniform(rng, lo, hi, n)
    n_mid = n // 4
    y[:n_mid] = 0.5 * (x[:n_mid] + z[:n_mid])

    dxy, dyx = space.dist(x, y), space.dist(y, x)
    dyz, dxz = space.dist(y, z), space.dist(x, z)
    dxx = space.dist(x, x)
    s = space.coefficient_s

    passed: dict[str, bool] = {}
    violations: dict[str, dict] = {}

    def record(name: str, bad: np.ndarray, make):
        i = _first(bad)
        passed[name] = i is None
        if i is not None:
            violations[name] = make(i)

    record("non_negativity", ~(dxy >= 0),
           lambda i: {"x": x[i].tolist(), "y": y[i].tolist(), "distance": float(dxy[i])})
    record("symmetry", ~np.isclose(dxy, dyx, rtol=AXIOM_RTOL, atol=0.0),
           lambda i: {"x": x[i].tolist(), "y": y[i].tolist(),
                      "d_xy": float(dxy[i]), "d_yx": float(dyx[i])})
    distinct = np.any(x != y, axis=-1)
    record("zero_iff_equal", (dxx != 0.0) | (distinct & ~(dxy > 0)),
           lambda i: {"x": x[i].tolist(), "y": y[i].tolist(),
                      "d_xx": float(dxx[i]), "d_xy": float(dxy[i])})
    rhs = s * (dxy + dyz)
    record("b_triangle", dxz > rhs * (1.0 + AXIOM_RTOL),
           lambda i: {"x": x[i].tolist(), "y": y[i].tolist(), "z": z[i].tolist(),
                      "d_xz": float(dxz[i]), "s_times_sum": float(rhs[i])})
    return AxiomReport(
        coefficient_s=s,
        metric=space.metric.value,
        pairs_checked=n,
        triples_checked=n,
        passed=passed,
        violations=violations,
    )
