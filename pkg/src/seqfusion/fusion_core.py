"""Static fusion graphs: validation, ordering and per-center marginalization."""

from __future__ import annotations

import heapq
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from seqfusion.confusion import ConfusionMatrix
from seqfusion.fusion_rules import RuleSpec, build_rule, fuse

__all__ = [
    "ConfusionMatrix",
    "FusionNetwork",
    "InvalidNetworkError",
    "NetworkStructureError",
    "ValidationReport",
    "Vertex",
    "VertexKind",
    "Violation",
    "center_matrices",
    "fusion_order",
    "propagate",
    "validate_network",
]


class NetworkStructureError(ValueError):
    """The vertex/edge data is inconsistent (unknown ids, duplicates, no object)."""


class InvalidNetworkError(ValueError):
    """A structurally sound network breaks one or more fusion-graph rules."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("invalid fusion network: " + "; ".join(str(v) for v in report.violations))


class VertexKind(str, Enum):
    OBJECT = "object"
    SENSOR = "sensor"
    CENTER = "center"


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: VertexKind
    model: ConfusionMatrix | None = None
    rule: RuleSpec | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", VertexKind(self.kind))
        if self.kind is VertexKind.CENTER and self.rule is None:
            raise NetworkStructureError(f"fusion center {self.id!r} has no rule")

    @classmethod
    def object(cls, id: str = "H") -> Vertex:
        return cls(id, VertexKind.OBJECT)

    @classmethod
    def sensor(cls, id: str, model: ConfusionMatrix | None = None) -> Vertex:
        return cls(id, VertexKind.SENSOR, model=model)

    @classmethod
    def center(cls, id: str, rule: RuleSpec) -> Vertex:
        return cls(id, VertexKind.CENTER, rule=rule)


@dataclass(frozen=True)
class Violation:
    rule: str
    vertices: tuple[str, ...]
    message: str = ""

    def __str__(self) -> str:
        ids = ", ".join(self.vertices)
        return f"[{self.rule}] {self.message} ({ids})" if self.message else f"[{self.rule}] ({ids})"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class FusionNetwork:
    """Object, sensor and fusion-center vertices joined by parent -> child edges.

    Construction only checks structural consistency; the fusion-graph rules
    are checked by :func:`validate_network`.
    """

    vertices: tuple[Vertex, ...]
    edges: frozenset[tuple[str, str]]
    m: int = 2
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        vertices = tuple(self.vertices)
        edges = frozenset((str(a), str(b)) for a, b in self.edges)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", edges)
        by_id: dict[str, Vertex] = {}
        for v in vertices:
            if v.id in by_id:
                raise NetworkStructureError(f"duplicate vertex id {v.id!r}")
            by_id[v.id] = v
        object.__setattr__(self, "_by_id", by_id)
        dangling = sorted({x for e in edges for x in e if x not in by_id})
        if dangling:
            raise NetworkStructureError(f"edges reference unknown vertices: {dangling}")
        loops = sorted(a for a, b in edges if a == b)
        if loops:
            raise NetworkStructureError(f"self-loop on {loops}")
        objects = [v.id for v in vertices if v.kind is VertexKind.OBJECT]
        if len(objects) != 1:
            raise NetworkStructureError(f"expected exactly one object vertex, found {objects}")
        if self.m < 2:
            raise NetworkStructureError("decision-space size must be at least 2")
        for v in vertices:
            if v.model is not None and v.model.m != self.m:
                raise NetworkStructureError(
                    f"sensor {v.id!r} has m = {v.model.m}, network has m = {self.m}"
                )
            if v.rule is not None:
                try:
                    v.rule.check_size(self.m)
                except ValueError as exc:
                    raise NetworkStructureError(f"center {v.id!r}: {exc}") from None

    @classmethod
    def build(
        cls,
        centers: Mapping[str, tuple[RuleSpec, Sequence[str]]],
        sensors: Iterable[str] | Mapping[str, ConfusionMatrix | None],
        *,
        cues: Iterable[tuple[str, str]] = (),
        m: int = 2,
        object_id: str = "H",
    ) -> FusionNetwork:
        """Convenience constructor that wires the object to every sensor.

        ``centers`` maps a center id to ``(rule, parent ids)``; ``cues`` adds
        center -> sensor edges.
        """
        models = dict(sensors) if isinstance(sensors, Mapping) else {s: None for s in sensors}
        vertices = [Vertex.object(object_id)]
        vertices += [Vertex.sensor(s, model) for s, model in models.items()]
        vertices += [Vertex.center(c, rule) for c, (rule, _) in centers.items()]
        edges = {(object_id, s) for s in models}
        edges |= {(p, c) for c, (_, parents) in centers.items() for p in parents}
        edges |= set(cues)
        return cls(tuple(vertices), frozenset(edges), m)

    def vertex(self, vid: str) -> Vertex:
        return self._by_id[vid]

    @property
    def object_id(self) -> str:
        return next(v.id for v in self.vertices if v.kind is VertexKind.OBJECT)

    def ids(self, kind: VertexKind) -> list[str]:
        return sorted(v.id for v in self.vertices if v.kind is kind)

    def parents(self, vid: str) -> list[str]:
        """Parent ids in ascending order; this fixes tensor axis order."""
        return sorted(a for a, b in self.edges if b == vid)

    def children(self, vid: str) -> list[str]:
        return sorted(b for a, b in self.edges if a == vid)

    def kind(self, vid: str) -> VertexKind:
        return self._by_id[vid].kind


def _find_cycle(net: FusionNetwork) -> list[str] | None:
    children = defaultdict(list)
    for a, b in net.edges:
        children[a].append(b)
    state: dict[str, int] = {}
    stack_path: list[str] = []

    def visit(u: str) -> list[str] | None:
        state[u] = 1
        stack_path.append(u)
        for w in sorted(children[u]):
            if state.get(w) == 1:
                return stack_path[stack_path.index(w):]
            if w not in state:
                found = visit(w)
                if found:
                    return found
        stack_path.pop()
        state[u] = 2
        return None

    for v in sorted(net._by_id):
        if v not in state:
            found = visit(v)
            if found:
                return found
    return None


def validate_network(net: FusionNetwork) -> ValidationReport:
    """Check every fusion-graph rule and report all violations found."""
    out: list[Violation] = []
    obj = net.object_id
    sensors = net.ids(VertexKind.SENSOR)
    centers = net.ids(VertexKind.CENTER)
    K = net.kind

    cycle = _find_cycle(net)
    if cycle:
        out.append(Violation("acyclic", tuple(cycle), "graph contains a cycle"))

    if net.parents(obj):
        out.append(Violation("object_root", (obj,), "the object cannot have parents"))

    for s in sensors:
        ps = net.parents(s)
        if obj not in ps:
            out.append(Violation("sensor_parents", (s,), "sensor must observe the object"))
        center_ps = [p for p in ps if K(p) is VertexKind.CENTER]
        if len(center_ps) > 1:
            out.append(Violation("sensor_parents", (s, *center_ps), "sensor has more than one fusion-center parent"))
        other = [p for p in ps if K(p) is VertexKind.SENSOR]
        if other:
            out.append(Violation("sensor_parents", (s, *other), "sensor has a sensor parent"))

    if not any(net.parents(s) == [obj] for s in sensors):
        out.append(Violation("root_sensor", tuple(sensors), "no sensor has only the object as parent"))

    for c in centers:
        ps = net.parents(c)
        if obj in ps:
            out.append(Violation("center_object_parent", (c,), "fusion center has the object as parent"))
        if not ps:
            out.append(Violation("center_arity", (c,), "fusion center has no parents"))

    finals = [c for c in centers if not net.children(c)]
    if len(finals) != 1:
        out.append(Violation("single_final", tuple(finals), f"{len(finals)} childless fusion centers, expected 1"))

    for v in sensors + [c for c in centers if c not in finals]:
        fc_children = [w for w in net.children(v) if K(w) is VertexKind.CENTER]
        if len(fc_children) != 1:
            out.append(
                Violation("tree", (v, *fc_children), f"{len(fc_children)} fusion-center children, expected 1")
            )
    return ValidationReport(tuple(out))


def _require_valid(net: FusionNetwork) -> None:
    report = validate_network(net)
    if not report.ok:
        raise InvalidNetworkError(report)


def final_center(net: FusionNetwork) -> str:
    _require_valid(net)
    return next(c for c in net.ids(VertexKind.CENTER) if not net.children(c))


def _center_ancestors(net: FusionNetwork, c: str) -> set[str]:
    seen: set[str] = set()
    todo = list(net.parents(c))
    while todo:
        u = todo.pop()
        if u in seen:
            continue
        seen.add(u)
        todo.extend(net.parents(u))
    return {u for u in seen if net.kind(u) is VertexKind.CENTER}


def fusion_order(net: FusionNetwork) -> list[str]:
    """Fusion centers in parent-to-child order, ties by ascending id."""
    _require_valid(net)
    centers = net.ids(VertexKind.CENTER)
    before = {c: _center_ancestors(net, c) for c in centers}
    waiting = {c: len(before[c]) for c in centers}
    after = defaultdict(list)
    for c, anc in before.items():
        for a in anc:
            after[a].append(c)
    ready = [c for c in centers if waiting[c] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        c = heapq.heappop(ready)
        order.append(c)
        for d in after[c]:
            waiting[d] -= 1
            if waiting[d] == 0:
                heapq.heappush(ready, d)
    return order


def _sensor_models(
    net: FusionNetwork, sensor_models: Mapping[str, ConfusionMatrix] | None
) -> dict[str, ConfusionMatrix]:
    models = {}
    for s in net.ids(VertexKind.SENSOR):
        model = (sensor_models or {}).get(s, net.vertex(s).model)
        if model is None:
            raise ValueError(f"no model for sensor {s!r}")
        if model.m != net.m:
            raise ValueError(f"sensor {s!r} model has m = {model.m}, network has m = {net.m}")
        models[s] = model
    return models


def center_matrices(
    net: FusionNetwork,
    sensor_models: Mapping[str, ConfusionMatrix] | None = None,
    order: Sequence[str] | None = None,
) -> dict[str, ConfusionMatrix]:
    """P(F=.|H) for every fusion center, visiting centers in ``order``.

    ``order`` defaults to :func:`fusion_order`. Any order in which each center
    follows its fusion-center ancestors gives the same result.
    """
    if order is None:
        order = fusion_order(net)
    else:
        _require_valid(net)
    known: dict[str, ConfusionMatrix] = _sensor_models(net, sensor_models)
    out = {}
    for c in order:
        try:
            parents = [known[p] for p in net.parents(c)]
        except KeyError as exc:
            raise ValueError(f"center {c!r} visited before its parent {exc.args[0]!r}") from None
        tensor = build_rule(net.vertex(c).rule, parents)
        known[c] = out[c] = fuse(tensor, parents)
    return out


def propagate(
    net: FusionNetwork,
    sensor_models: Mapping[str, ConfusionMatrix] | None = None,
    order: Sequence[str] | None = None,
) -> ConfusionMatrix:
    """System decision matrix P(D=.|H) at the final fusion center.

    ``sensor_models`` overrides the models stored on the sensor vertices.
    """
    return center_matrices(net, sensor_models, order)[final_center(net)]
