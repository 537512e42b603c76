"""Metric-graph data model, problem-file ingestion and length-set checks.

A problem is a compact metric graph: finitely many edges of finite positive
length glued at vertices.  Degree-1 (external) vertices carry Dirichlet (D)
or Neumann (N) conditions, internal vertices carry Neumann-Kirchhoff (NK)
conditions (continuity plus vanishing sum of outgoing derivatives).

Star edges are always parametrized with coordinate 0 at the external vertex
and coordinate L at the center; loop edges run 0..L with both endpoints at
the same vertex.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ValidationError

DEFAULT_QMAX = 10_000
DEFAULT_RATIO_TOL = 1e-9


class BoundaryCondition(enum.Enum):
    DIRICHLET = "D"
    NEUMANN = "N"
    NEUMANN_KIRCHHOFF = "NK"


class Topology(enum.Enum):
    INTERVAL = "interval"
    STAR = "star"
    STAR_WITH_LOOPS = "star_with_loops"
    UNIFORM_CHAIN = "uniform_chain"


@dataclass(frozen=True)
class Edge:
    eid: str
    length: float
    tail: str  # coordinate 0
    head: str  # coordinate L


@dataclass
class MetricGraph:
    edges: list[Edge]
    bc: dict[str, BoundaryCondition]
    topology: Topology

    def __post_init__(self):
        self._validate()

    # -- derived quantities -------------------------------------------------

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges])

    @property
    def edge_ids(self) -> list[str]:
        return [e.eid for e in self.edges]

    def degree(self, vid: str) -> int:
        d = 0
        for e in self.edges:
            d += (e.tail == vid) + (e.head == vid)
        return d

    @property
    def external_vertices(self) -> list[str]:
        return [v for v in self.bc if self.degree(v) == 1]

    @property
    def internal_vertices(self) -> list[str]:
        return [v for v in self.bc if self.degree(v) >= 2]

    @property
    def center(self) -> str | None:
        internal = self.internal_vertices
        return internal[0] if len(internal) == 1 else None

    def external_bc(self, edge: Edge) -> BoundaryCondition:
        """Boundary condition at the coordinate-0 end of a star/interval edge."""
        return self.bc[edge.tail]

    # -- validation ---------------------------------------------------------

    def _validate(self):
        if not self.edges:
            raise ValidationError("graph has no edges")
        seen = set()
        for e in self.edges:
            if e.eid in seen:
                raise ValidationError(f"duplicate edge id {e.eid!r}")
            seen.add(e.eid)
            if not (math.isfinite(e.length) and e.length > 0):
                raise ValidationError(f"edge {e.eid!r}: length must be positive and finite")
            for v in (e.tail, e.head):
                if v not in self.bc:
                    raise ValidationError(f"edge {e.eid!r}: unknown vertex {v!r}")
        for vid, cond in self.bc.items():
            deg = self.degree(vid)
            if deg == 0:
                raise ValidationError(f"vertex {vid!r} is isolated")
            if deg == 1 and cond is BoundaryCondition.NEUMANN_KIRCHHOFF:
                raise ValidationError(f"vertex {vid!r}: NK not allowed on external (degree-1) vertex")
            if deg >= 2 and cond is not BoundaryCondition.NEUMANN_KIRCHHOFF:
                raise ValidationError(f"vertex {vid!r}: NK required on internal vertex")

        if self.topology is Topology.INTERVAL:
            if len(self.edges) != 1 or self.internal_vertices:
                raise ValidationError("interval topology requires a single edge with two external vertices")
        elif self.topology in (Topology.STAR, Topology.STAR_WITH_LOOPS):
            internal = self.internal_vertices
            if len(internal) != 1:
                raise ValidationError("star topology requires exactly one internal vertex")
            c = internal[0]
            for e in self.edges:
                if e.tail == e.head:
                    if self.topology is Topology.STAR:
                        raise ValidationError(f"edge {e.eid!r}: loops require star_with_loops topology")
                    if e.tail != c:
                        raise ValidationError(f"loop {e.eid!r} must be attached to the center")
                elif e.head != c:
                    raise ValidationError(
                        f"edge {e.eid!r}: star edges run external -> center (coordinate 0 at the external vertex)")


def infer_topology(edges: list[Edge], bc: dict[str, BoundaryCondition]) -> Topology:
    deg: dict[str, int] = {}
    for e in edges:
        deg[e.tail] = deg.get(e.tail, 0) + 1
        deg[e.head] = deg.get(e.head, 0) + 1
    internal = [v for v, d in deg.items() if d >= 2]
    if len(edges) == 1 and not internal:
        return Topology.INTERVAL
    if any(e.tail == e.head for e in edges):
        return Topology.STAR_WITH_LOOPS
    if len(internal) == 1:
        return Topology.STAR
    return Topology.UNIFORM_CHAIN


@dataclass
class LengthSetReport:
    """Outcome of the rational-ratio scan over a set of edge lengths.

    Genuine rational independence (or algebraic irrationality of ratios)
    cannot be decided from floating point data; the report only certifies
    that no ratio L_k/L_j is within ``tol`` of a rational p/q with
    q <= q_max.
    """

    ratios: np.ndarray
    rational_hits: list[tuple[int, int, int, int, float]]  # (k, j, p, q, residual), 1-based
    independence_flag: bool
    q_max: int = DEFAULT_QMAX
    tol: float = DEFAULT_RATIO_TOL


def check_length_set(lengths, q_max: int = DEFAULT_QMAX, tol: float = DEFAULT_RATIO_TOL) -> LengthSetReport:
    """Scan all ratios L_k/L_j (k > j) for low-denominator rational values.

    The best rational approximation with denominator <= q_max is obtained via
    the Stern-Brocot / continued-fraction expansion, which is equivalent to
    an exhaustive scan over all p/q with q <= q_max.
    """
    lengths = np.asarray(lengths, dtype=float)
    if lengths.size == 0:
        raise ValidationError("lengths must be nonempty")
    if np.any(~np.isfinite(lengths)) or np.any(lengths <= 0):
        raise ValidationError("lengths must be positive and finite")
    if q_max < 1:
        raise ValidationError("q_max must be >= 1")
    if tol <= 0:
        raise ValidationError("tol must be positive")

    n = lengths.size
    ratios = lengths[:, None] / lengths[None, :]
    hits = []
    for k in range(1, n):
        for j in range(k):
            r = lengths[k] / lengths[j]
            frac = Fraction(r).limit_denominator(q_max)
            residual = abs(r - frac.numerator / frac.denominator)
            if residual < tol:
                hits.append((k + 1, j + 1, frac.numerator, frac.denominator, residual))
    return LengthSetReport(ratios=ratios, rational_hits=hits,
                           independence_flag=not hits, q_max=q_max, tol=tol)


@dataclass
class SolverSettings:
    num_modes: int = 50
    scan_resolution: float | None = None  # None: chosen from the total length
    horizon: float = 10.0
    root_rel_tol: float = 1e-13
    cluster_rel_tol: float = 1e-9
    resonance_rel_tol: float = 1e-10
    extra: dict = field(default_factory=dict)


_BC_BY_NAME = {b.value: b for b in BoundaryCondition}
_TOPOLOGY_BY_NAME = {t.value: t for t in Topology}


def _require(mapping, key, context):
    if key not in mapping:
        raise ValidationError(f"{context}: missing field {key!r}")
    return mapping[key]


def load_problem(path):
    """Load a problem file: returns (MetricGraph, ControlOperator, SolverSettings).

    The file is JSON with top-level keys "graph", "control" and "solver"
    (see README for the schema).  Star edges given center -> external are
    reoriented so that coordinate 0 sits at the external vertex.
    """
    from .potentials import ControlOperator  # deferred: potentials imports this module

    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"problem file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"problem file {path}: parse error at line {exc.lineno}: {exc.msg}")

    gdoc = _require(doc, "graph", "problem file")
    bc = {}
    for vdoc in _require(gdoc, "vertices", "graph"):
        vid = str(_require(vdoc, "id", "vertex"))
        name = _require(vdoc, "bc", f"vertex {vid}")
        if name not in _BC_BY_NAME:
            raise ValidationError(f"vertex {vid}: unknown boundary condition {name!r}")
        bc[vid] = _BC_BY_NAME[name]

    edges = []
    for edoc in _require(gdoc, "edges", "graph"):
        eid = str(_require(edoc, "id", "edge"))
        try:
            length = float(_require(edoc, "length", f"edge {eid}"))
        except (TypeError, ValueError):
            raise ValidationError(f"edge {eid}: length must be a number")
        edges.append(Edge(eid, length, str(_require(edoc, "from", f"edge {eid}")),
                          str(_require(edoc, "to", f"edge {eid}"))))

    topo_name = gdoc.get("topology")
    topology = _TOPOLOGY_BY_NAME[topo_name] if topo_name in _TOPOLOGY_BY_NAME else infer_topology(edges, bc)

    # Reorient star edges so the external vertex carries coordinate 0.
    if topology in (Topology.STAR, Topology.STAR_WITH_LOOPS):
        deg: dict[str, int] = {}
        for e in edges:
            deg[e.tail] = deg.get(e.tail, 0) + 1
            deg[e.head] = deg.get(e.head, 0) + 1
        internal = [v for v, d in deg.items() if d >= 2]
        if len(internal) == 1:
            c = internal[0]
            edges = [Edge(e.eid, e.length, e.head, e.tail)
                     if (e.tail == c and e.head != c) else e
                     for e in edges]

    graph = MetricGraph(edges=edges, bc=bc, topology=topology)

    cdoc = doc.get("control", {})
    per_edge = {}
    for eid, coeffs in cdoc.items():
        if eid not in graph.edge_ids:
            raise ValidationError(f"control: unknown edge id {eid!r}")
        per_edge[eid] = np.asarray([float(c) for c in coeffs], dtype=float)
    control = ControlOperator(per_edge=per_edge, tag=str(doc.get("control_tag", "")))

    sdoc = doc.get("solver", {})
    settings = SolverSettings(
        num_modes=int(sdoc.get("num_modes", 50)),
        scan_resolution=(float(sdoc["scan_resolution"]) if "scan_resolution" in sdoc else None),
        horizon=float(sdoc.get("T", 10.0)),
        root_rel_tol=float(sdoc.get("root_rel_tol", 1e-13)),
        cluster_rel_tol=float(sdoc.get("cluster_rel_tol", 1e-9)),
        resonance_rel_tol=float(sdoc.get("resonance_rel_tol", 1e-10)),
        extra={k: v for k, v in sdoc.items()
               if k not in ("num_modes", "scan_resolution", "T", "root_rel_tol",
                            "cluster_rel_tol", "resonance_rel_tol")},
    )
    return graph, control, settings


def serialize_problem(graph: MetricGraph, control=None, settings: SolverSettings | None = None) -> dict:
    """Inverse of load_problem, up to default filling."""
    doc = {
        "graph": {
            "topology": graph.topology.value,
            "edges": [{"id": e.eid, "length": e.length, "from": e.tail, "to": e.head}
                      for e in graph.edges],
            "vertices": [{"id": v, "bc": c.value} for v, c in graph.bc.items()],
        },
    }
    if control is not None:
        doc["control"] = {eid: list(map(float, coeffs)) for eid, coeffs in control.per_edge.items()}
        if control.tag:
            doc["control_tag"] = control.tag
    if settings is not None:
        doc["solver"] = {
            "num_modes": settings.num_modes,
            "T": settings.horizon,
            "root_rel_tol": settings.root_rel_tol,
            "cluster_rel_tol": settings.cluster_rel_tol,
            "resonance_rel_tol": settings.resonance_rel_tol,
            **({"scan_resolution": settings.scan_resolution} if settings.scan_resolution else {}),
            **settings.extra,
        }
    return doc
