"""Built-in instances: a space, a self-map, optional control data and what is known about them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contraction import SelfMap
from .control import ControlFunction, ControlSequence
from .errors import ConfigError
from .metric import BMetricSpace, SampleSpec

CLASSES = ("Banach", "BoydWong", "MeirKeeler", "MKLeader", "Leader", "Kirk")
STANDARD_EPSILONS = (0.01, 0.1, 0.5, 1.0)


@dataclass(frozen=True)
class GroundTruth:
    fixed_point: tuple[float, ...] | None  # None: no fixed point
    picard_limit: tuple[float, ...] | None  # None: unknown / no limit
    expected_classes: frozenset[str] = frozenset()
    expected_non_classes: frozenset[str] = frozenset()
    nonexpansive: bool | None = None

    def __post_init__(self):
        for name in ("expected_classes", "expected_non_classes"):
            vals = frozenset(getattr(self, name))
            unknown = vals - set(CLASSES)
            if unknown:
                raise ConfigError(f"unknown contraction classes {sorted(unknown)}")
            object.__setattr__(self, name, vals)
        if self.expected_classes & self.expected_non_classes:
            raise ConfigError("a class cannot be both expected and excluded")

    def to_dict(self) -> dict:
        return {
            "fixed_point": "none" if self.fixed_point is None else list(self.fixed_point),
            "picard_limit": "unknown" if self.picard_limit is None else list(self.picard_limit),
            "expected_classes": [c for c in CLASSES if c in self.expected_classes],
            "expected_non_classes": [c for c in CLASSES if c in self.expected_non_classes],
            "nonexpansive": self.nonexpansive,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroundTruth":
        def point(v):
            if v is None or v in ("none", "unknown"):
                return None
            return tuple(float(c) for c in np.atleast_1d(v))

        return cls(point(data.get("fixed_point")), point(data.get("picard_limit")),
                   frozenset(data.get("expected_classes", ())),
                   frozenset(data.get("expected_non_classes", ())),
                   data.get("nonexpansive"))


@dataclass(frozen=True)
class Instance:
    """One experiment subject.

    ``phi`` is the Boyd-Wong control, ``phi_seq`` the Kirk family (its
    ``limit`` need not equal ``phi``). For maps that are not contractions
    ``banach_q``/``phi``/``phi_seq`` hold probe controls that are expected to
    fail. ``sample_region`` bounds sampling on unbounded domains, and
    ``anchors`` are forced into every sample.
    """

    name: str
    summary: str
    space: BMetricSpace
    map: SelfMap
    ground_truth: GroundTruth
    phi: ControlFunction | None = None
    phi_seq: ControlSequence | None = None
    banach_q: float | None = None
    classes_tested: tuple[str, ...] = CLASSES
    sample_region: tuple[tuple[float, float], ...] | None = None
    anchors: tuple[tuple[float, ...], ...] = ()
    breakpoints: tuple[float, ...] = ()
    x0: tuple[float, ...] = (1.0,)
    K: float = 1.0
    epsilon: float = 0.1

    def sample_spec(self, seed: int = 0, count: int = 10_000) -> SampleSpec:
        return SampleSpec(seed, count, self.sample_region, self.anchors)

    def epsilon_grid(self, grid=STANDARD_EPSILONS) -> list[float]:
        """``grid`` intersected with ``(0, diameter)`` of the sampled region."""
        if self.sample_region is not None:
            diam = float(self.space.dist(*(np.array(b, dtype=float) for b in zip(*self.sample_region))))
            diam = max(diam, self.space.diameter())
        else:
            diam = self.space.diameter()
        return [float(e) for e in grid if 0 < e < diam]

    def testable(self, cls: str) -> bool:
        if cls not in self.classes_tested:
            return False
        if cls == "Banach":
            return self.banach_q is not None
        if cls == "BoydWong":
            return self.phi is not None
        if cls == "Kirk":
            return self.phi_seq is not None
        return True

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "summary": self.summary,
            "space": self.space.to_dict(),
            "map": self.map.sources,
            "phi": None if self.phi is None else self.phi.source,
            "phi_seq": None if self.phi_seq is None else self.phi_seq.to_dict(),
            "banach_q": self.banach_q,
            "classes_tested": list(self.classes_tested),
            "sample_region": None if self.sample_region is None else [list(b) for b in self.sample_region],
            "anchors": [list(a) for a in self.anchors],
            "breakpoints": list(self.breakpoints),
            "x0": list(self.x0),
            "K": self.K,
            "epsilon": self.epsilon,
            "ground_truth": self.ground_truth.to_dict(),
        }


def instance_from_dict(data: dict) -> Instance:
    """Build an inline instance from a config record (the format of :meth:`Instance.to_dict`)."""
    try:
        space = BMetricSpace.from_dict(data["space"])
        T = SelfMap.parse(data["map"], space)
        phi = ControlFunction.parse(data["phi"]) if data.get("phi") else None
        seq = None
        if data.get("phi_seq"):
            s = data["phi_seq"]
            seq = ControlSequence.parse(s["family"], s["limit"], s.get("subsequence"))
        region = data.get("sample_region")
        return Instance(
            name=str(data.get("name", "inline")),
            summary=str(data.get("summary", "inline instance")),
            space=space,
            map=T,
            ground_truth=GroundTruth.from_dict(data.get("ground_truth", {})),
            phi=phi,
            phi_seq=seq,
            banach_q=data.get("banach_q"),
            classes_tested=tuple(data.get("classes_tested", CLASSES)),
            sample_region=None if region is None else tuple(tuple(map(float, b)) for b in region),
            anchors=tuple(tuple(map(float, a)) for a in data.get("anchors", ())),
            breakpoints=tuple(map(float, data.get("breakpoints", ()))),
            x0=tuple(map(float, np.atleast_1d(data.get("x0", [1.0] * space.dimension)))),
            K=float(data.get("K", 1.0)),
            epsilon=float(data.get("epsilon", 0.1)),
        )
    except KeyError as exc:
        raise ConfigError(f"inline instance is missing field {exc}") from exc


def _interval(lo, hi, **kw):
    return BMetricSpace.interval(lo, hi, **kw)


def _build_registry() -> dict[str, Instance]:
    every = frozenset(CLASSES)
    inst: list[Instance] = []

    sp = _interval(-4, 4)
    inst.append(Instance(
        "banach_half", "T(x) = x/2 on [-4, 4]; the canonical contraction",
        sp, SelfMap.parse("x1/2", sp),
        GroundTruth((0.0,), (0.0,), every, frozenset(), True),
        phi=ControlFunction.parse("t/2"),
        phi_seq=ControlSequence.parse("t/2^n", "0"),
        banach_q=0.5, x0=(4.0,),
    ))

    sp = _interval(0, 100)
    inst.append(Instance(
        "boyd_wong_rational", "T(x) = x/(1+x) on [0, 100]; Boyd-Wong with phi(t) = t/(1+t), not Banach",
        sp, SelfMap.parse("x1/(1+x1)", sp),
        GroundTruth((0.0,), (0.0,), every - {"Banach"}, frozenset(), True),
        phi=ControlFunction.parse("t/(1+t)"),
        phi_seq=ControlSequence.parse("t/(1+t)", "t/(1+t)"),
        anchors=((0.0,),),
    ))

    sp = _interval(0, 1)
    inst.append(Instance(
        "jachymski_counterexample", "T(0) = 1, T(x) = x/2 otherwise, on [0, 1]; Leader but no fixed point",
        sp, SelfMap.parse("if x1 = 0 then 1 else x1/2", sp),
        GroundTruth(None, (0.0,), frozenset({"Leader", "MKLeader"}), frozenset(), False),
        classes_tested=("MKLeader", "Leader"),
        anchors=((0.0,),),
    ))

    sp = BMetricSpace(1, (-np.inf,), (np.inf,))
    inst.append(Instance(
        "translation", "T(x) = x + 1 on the real line; isometry without fixed point",
        sp, SelfMap.parse("x1 + 1", sp),
        GroundTruth(None, None, frozenset(), every, True),
        phi=ControlFunction.parse("0.999*t"),
        phi_seq=ControlSequence.parse("0.999*t", "0.999*t"),
        banach_q=0.999,
        sample_region=((-10.0, 10.0),), x0=(0.0,),
    ))

    sp = _interval(-4, 4)
    jump = "if t < 1 then t/2 else 5*t/12"
    inst.append(Instance(
        "right_usc_jump", "T(x) = x/2 on [-4, 4] with a Kirk limit that jumps down at t = 1 (right-usc, not usc)",
        sp, SelfMap.parse("x1/2", sp),
        GroundTruth((0.0,), (0.0,), every - {"BoydWong"}, frozenset(), True),
        phi=ControlFunction.parse(jump),
        phi_seq=ControlSequence.parse(f"max({jump}, t/2^n)", jump),
        banach_q=0.5, breakpoints=(1.0,), x0=(4.0,),
    ))

    sp = _interval(-4, 4)
    inst.append(Instance(
        "kirk_varying", "T(x) = x/2 on [-4, 4] with phi_n(t) = t/2 + 1/n converging uniformly to t/2",
        sp, SelfMap.parse("x1/2", sp),
        GroundTruth((0.0,), (0.0,), every, frozenset(), True),
        phi=ControlFunction.parse("t/2"),
        phi_seq=ControlSequence.parse("t/2 + 1/n", "t/2"),
        banach_q=0.5, x0=(4.0,),
    ))

    sp = BMetricSpace.box([(-1, 1), (-1, 1)])
    inst.append(Instance(
        "rotation_2d", "quarter-turn rotation of [-1, 1]^2; isometry with fixed point 0",
        sp, SelfMap.parse(["-x2", "x1"], sp),
        GroundTruth((0.0, 0.0), None, frozenset(), every, True),
        phi=ControlFunction.parse("0.999*t"),
        phi_seq=ControlSequence.parse("0.999*t", "0.999*t"),
        banach_q=0.999, x0=(1.0, 0.0), K=1.0,
    ))

    sp = _interval(-4, 4, metric="power_euclidean", exponent=2.0)
    inst.append(Instance(
        "banach_half_b2", "T(x) = x/2 on [-4, 4] under the b-metric |x - y|^2 (s = 2)",
        sp, SelfMap.parse("x1/2", sp),
        GroundTruth((0.0,), (0.0,), every, frozenset(), True),
        phi=ControlFunction.parse("t/4"),
        phi_seq=ControlSequence.parse("t/4^n", "0"),
        banach_q=0.25, x0=(4.0,),
    ))
    return {i.name: i for i in inst}


_REGISTRY = _build_registry()


def list_instances(match: str | None = None) -> list[tuple[str, str]]:
    """``(name, summary)`` pairs, optionally filtered by substring."""
    return [(n, i.summary) for n, i in _REGISTRY.items() if match is None or match in n]


def get_instance(name: str) -> Instance:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown instance {name!r}; available: {', '.join(_REGISTRY)}") from None
