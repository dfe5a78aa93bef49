"""Period-cell data model for Z^n-periodic metric graphs.

A periodic metric graph is described by one period cell: a finite metric
graph whose edges are partitioned into a connected base part (part 0) and
m attached parts (parts 1..m).  Degree-1 vertices come in two flavours:
external-boundary vertices sit in the interior of an edge of the full
graph and are identified pairwise by lattice shifts, internal-boundary
vertices are genuine degree-1 vertices of the full graph.  Each attached
part meets the base part in a coupling set, where a two-sided flux
condition with strength q acts; everywhere else standard continuity plus
flux conservation holds.

Cells are immutable.  Operations that modify a cell return a new one.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .errors import FormatError, CellStructureError, DegenerateConstantsError

ROLE_INTERIOR = "interior"
ROLE_EXTERNAL = "external-boundary"
ROLE_INTERNAL = "internal-boundary"
ROLES = (ROLE_INTERIOR, ROLE_EXTERNAL, ROLE_INTERNAL)

# Relative tolerance under which two per-part constants count as equal.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Vertex:
    """A vertex of the period cell.

    Args:
        id: unique identifier within the cell.
        role: one of ``interior``, ``external-boundary``, ``internal-boundary``.
    """

    id: str
    role: str


@dataclass(frozen=True)
class Edge:
    """An edge with a positive length and a part assignment.

    ``tail`` and ``head`` fix the parametrisation direction (x=0 at the
    tail).  Loops are forbidden; subdivide first if a loop is wanted.
    """

    id: str
    tail: str
    head: str
    length: float
    part: int


@dataclass(frozen=True)
class BoundaryPairing:
    """Identification of two external-boundary stubs under a lattice shift.

    The ``plus`` vertex is the image of the ``minus`` vertex shifted by the
    integer lattice vector ``shift`` (never the zero vector).  The two
    ``orientation_signs`` record, for the minus and the plus stub in turn,
    whether the direction away from the stub vertex along its edge agrees
    (+1) or disagrees (-1) with the travel direction of the underlying
    edge of the full graph.
    """

    minus: str
    plus: str
    shift: tuple[int, ...]
    orientation_signs: tuple[int, int]


@dataclass(frozen=True)
class CouplingSet:
    """Vertices where an attached part meets the base part.

    Each listed vertex carries the two-sided flux condition of strength
    ``q`` between the base side and the part-``part`` side.
    """

    part: int
    vertices: frozenset[str]
    q: float

    def __init__(self, part: int, vertices, q: float):
        object.__setattr__(self, "part", part)
        object.__setattr__(self, "vertices", frozenset(vertices))
        object.__setattr__(self, "q", q)


class PeriodCell:
    """Immutable period cell: vertices, edges, pairings and coupling sets.

    Construction resolves all id references and raises
    :class:`CellStructureError` if that is impossible (duplicate or dangling
    ids, coupling parts that do not form 1..m, edge parts out of range,
    loops).  Everything else, including violations of the decomposition
    conditions, is left to :func:`validate_cell`.
    """

    __slots__ = (
        "dimension",
        "vertices",
        "edges",
        "pairings",
        "couplings",
        "_vertex_index",
        "_edge_index",
        "_ends",
    )

    def __init__(
        self,
        dimension: int,
        vertices: Sequence[Vertex],
        edges: Sequence[Edge],
        pairings: Sequence[BoundaryPairing] = (),
        couplings: Sequence[CouplingSet] = (),
    ):
        self.dimension = int(dimension)
        self.vertices = tuple(vertices)
        self.edges = tuple(edges)
        self.pairings = tuple(pairings)
        self.couplings = tuple(couplings)

        vindex: dict[str, Vertex] = {}
        for v in self.vertices:
            if v.id in vindex:
                raise CellStructureError(f"duplicate vertex id {v.id!r}")
            vindex[v.id] = v
        eindex: dict[str, Edge] = {}
        for e in self.edges:
            if e.id in eindex:
                raise CellStructureError(f"duplicate edge id {e.id!r}")
            eindex[e.id] = e
        self._vertex_index = vindex
        self._edge_index = eindex

        for e in self.edges:
            for vid in (e.tail, e.head):
                if vid not in vindex:
                    raise CellStructureError(
                        f"edge {e.id!r} references unknown vertex {vid!r}"
                    )
            if e.tail == e.head:
                raise CellStructureError(f"edge {e.id!r} is a loop")
            if not isinstance(e.part, int) or isinstance(e.part, bool):
                raise CellStructureError(f"edge {e.id!r} has a non-integer part")
        for p in self.pairings:
            for vid in (p.minus, p.plus):
                if vid not in vindex:
                    raise CellStructureError(
                        f"pairing references unknown vertex {vid!r}"
                    )
        parts_seen = [cs.part for cs in self.couplings]
        if len(set(parts_seen)) != len(parts_seen):
            raise CellStructureError("two coupling sets claim the same part")
        expected = set(range(1, len(self.couplings) + 1))
        if set(parts_seen) != expected:
            raise CellStructureError(
                f"coupling parts {sorted(parts_seen)} do not form 1..{len(self.couplings)}"
            )
        for cs in self.couplings:
            for vid in cs.vertices:
                if vid not in vindex:
                    raise CellStructureError(
                        f"coupling set {cs.part} references unknown vertex {vid!r}"
                    )
        for e in self.edges:
            if not 0 <= e.part <= self.m:
                raise CellStructureError(
                    f"edge {e.id!r} has part {e.part}, outside 0..{self.m}"
                )

        ends: dict[str, list[tuple[Edge, int]]] = defaultdict(list)
        for e in self.edges:
            ends[e.tail].append((e, 0))
            ends[e.head].append((e, 1))
        self._ends = {vid: tuple(lst) for vid, lst in ends.items()}

    @property
    def m(self) -> int:
        """Number of attached parts."""
        return len(self.couplings)

    def vertex(self, vid: str) -> Vertex:
        return self._vertex_index[vid]

    def edge(self, eid: str) -> Edge:
        return self._edge_index[eid]

    def ends_at(self, vid: str) -> tuple[tuple[Edge, int], ...]:
        """Edge ends incident to a vertex, as (edge, end) with end 0=tail, 1=head."""
        return self._ends.get(vid, ())

    def degree(self, vid: str) -> int:
        return len(self.ends_at(vid))

    def coupling_sets_at(self, vid: str) -> tuple[CouplingSet, ...]:
        return tuple(cs for cs in self.couplings if vid in cs.vertices)

    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PeriodCell):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self.vertices == other.vertices
            and self.edges == other.edges
            and self.pairings == other.pairings
            and self.couplings == other.couplings
        )

    def __repr__(self) -> str:
        return (
            f"PeriodCell(dim={self.dimension}, |V|={len(self.vertices)}, "
            f"|E|={len(self.edges)}, m={self.m})"
        )


@dataclass(frozen=True)
class Violation:
    """One violated cell invariant."""

    condition: str
    message: str

    def __str__(self) -> str:
        return f"condition {self.condition}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "cell valid"
        return "\n".join(str(v) for v in self.violations)


@dataclass(frozen=True)
class PartTotals:
    """Aggregate data of one part: total length and coupling vertex count."""

    length: float
    coupling_count: int


def _part_subgraph_connected(cell: PeriodCell, part: int) -> bool:
    edges = [e for e in cell.edges if e.part == part]
    if not edges:
        return True
    adj: dict[str, set[str]] = defaultdict(set)
    for e in edges:
        adj[e.tail].add(e.head)
        adj[e.head].add(e.tail)
    start = edges[0].tail
    seen = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == set(adj)


def validate_cell(cell: PeriodCell) -> ValidationReport:
    """Check the decomposition and boundary invariants of a cell.

    Id resolution problems raise :class:`CellStructureError` already at
    construction; this function reports everything else as a list of
    violations, one per failed invariant, and never raises on a
    structurally well formed cell.
    """
    out: list[Violation] = []
    add = lambda cond, msg: out.append(Violation(cond, msg))

    for v in cell.vertices:
        if v.role not in ROLES:
            add("role", f"vertex {v.id!r} has unknown role {v.role!r}")
    for e in cell.edges:
        if not e.length > 0:
            add("positivity", f"edge {e.id!r} has non-positive length {e.length}")
    for cs in cell.couplings:
        if not cs.q > 0:
            add("positivity", f"coupling set {cs.part} has non-positive q {cs.q}")

    # (i) every part present, (ii) every part connected
    parts_with_edges = {e.part for e in cell.edges}
    for j in range(cell.m + 1):
        if j not in parts_with_edges:
            add("(i)", f"part {j} has no edges")
        elif not _part_subgraph_connected(cell, j):
            add("(ii)", f"part {j} is not connected")

    paired: dict[str, int] = defaultdict(int)
    for p in cell.pairings:
        paired[p.minus] += 1
        paired[p.plus] += 1

    for v in cell.vertices:
        deg = cell.degree(v.id)
        if deg == 0:
            add("degree", f"vertex {v.id!r} is isolated")
            continue
        if v.role == ROLE_EXTERNAL:
            if deg != 1:
                add("degree", f"external-boundary vertex {v.id!r} has degree {deg}")
            else:
                (e, _end), = cell.ends_at(v.id)
                if e.part != 0:
                    add(
                        "(iv)",
                        f"external-boundary vertex {v.id!r} sits on part {e.part}, "
                        "not on the base part",
                    )
            if paired.get(v.id, 0) != 1:
                add(
                    "pairing",
                    f"external-boundary vertex {v.id!r} appears in "
                    f"{paired.get(v.id, 0)} pairing slots, expected exactly 1",
                )
        elif v.role == ROLE_INTERNAL:
            if deg != 1:
                add("degree", f"internal-boundary vertex {v.id!r} has degree {deg}")
            if v.id in paired:
                add("pairing", f"internal-boundary vertex {v.id!r} is paired")
        else:
            if deg < 2:
                add("degree", f"interior vertex {v.id!r} has degree {deg}")
            if v.id in paired:
                add("pairing", f"interior vertex {v.id!r} is paired")

    for p in cell.pairings:
        if p.minus == p.plus:
            add("pairing", f"stub {p.minus!r} is paired with itself")
        for vid in (p.minus, p.plus):
            if cell.vertex(vid).role != ROLE_EXTERNAL:
                add(
                    "pairing",
                    f"paired vertex {vid!r} does not have the external-boundary role",
                )
        if len(p.shift) != cell.dimension:
            add(
                "pairing",
                f"pairing {p.minus!r}/{p.plus!r} has a shift of arity "
                f"{len(p.shift)}, cell dimension is {cell.dimension}",
            )
        if all(s == 0 for s in p.shift):
            add("pairing", f"pairing {p.minus!r}/{p.plus!r} has a zero shift")
        if any(s not in (-1, 1) for s in p.orientation_signs) or len(
            p.orientation_signs
        ) != 2:
            add(
                "pairing",
                f"pairing {p.minus!r}/{p.plus!r} has orientation signs "
                f"{p.orientation_signs!r}, expected a pair of +-1",
            )

    # parts incident to each vertex
    parts_at: dict[str, set[int]] = defaultdict(set)
    for e in cell.edges:
        parts_at[e.tail].add(e.part)
        parts_at[e.head].add(e.part)

    # (v) coupling sets are exactly the base/part contact vertices
    for cs in cell.couplings:
        if not cs.vertices:
            add("(v)", f"coupling set for part {cs.part} is empty")
        for vid in sorted(cs.vertices):
            have = parts_at.get(vid, set())
            if 0 not in have:
                add(
                    "(v)",
                    f"coupling vertex {vid!r} of part {cs.part} touches no base edge",
                )
            if cs.part not in have:
                add(
                    "(v)",
                    f"coupling vertex {vid!r} of part {cs.part} touches no "
                    f"part-{cs.part} edge",
                )
            if cell.vertex(vid).role == ROLE_EXTERNAL:
                add("(v)", f"coupling vertex {vid!r} is an external-boundary stub")
    coupling_members = {
        (cs.part, vid) for cs in cell.couplings for vid in cs.vertices
    }
    for vid, have in sorted(parts_at.items()):
        for j in sorted(have):
            if j != 0 and 0 in have and (j, vid) not in coupling_members:
                add(
                    "(v)",
                    f"vertex {vid!r} joins the base part and part {j} but is "
                    f"missing from coupling set {j}",
                )
        # (vi) two attached parts may only meet where the base part is present
        attached = sorted(j for j in have if j != 0)
        if len(attached) >= 2 and 0 not in have:
            add(
                "(vi)",
                f"vertex {vid!r} joins parts {attached} without a base edge",
            )

    return ValidationReport(tuple(out))


def part_totals(cell: PeriodCell) -> dict[int, PartTotals]:
    """Total edge length and coupling vertex count per part.

    The base part reports a coupling count of 0.
    """
    lengths: dict[int, float] = {j: 0.0 for j in range(cell.m + 1)}
    for e in cell.edges:
        lengths[e.part] = lengths.get(e.part, 0.0) + e.length
    counts = {j: 0 for j in lengths}
    for cs in cell.couplings:
        counts[cs.part] = len(cs.vertices)
    return {j: PartTotals(lengths[j], counts[j]) for j in sorted(lengths)}


def _fresh(base: str, taken) -> str:
    name = base
    while name in taken:
        name += "'"
    return name


def subdivide_edge(cell: PeriodCell, edge_id: str, position: float) -> PeriodCell:
    """Split an edge at an interior point with a plain degree-2 vertex.

    ``position`` is measured from the tail and must satisfy
    0 < position < length.  The new vertex joins the two halves with
    continuity and flux conservation, so all spectra are unchanged.
    """
    if edge_id not in {e.id for e in cell.edges}:
        raise CellStructureError(f"unknown edge {edge_id!r}")
    old = cell.edge(edge_id)
    if not 0.0 < position < old.length:
        raise ValueError(
            f"position {position} outside the open interval (0, {old.length})"
        )
    vids = {v.id for v in cell.vertices}
    eids = {e.id for e in cell.edges}
    cut = _fresh(f"{edge_id}*cut", vids)
    first = _fresh(f"{edge_id}*a", eids)
    second = _fresh(f"{edge_id}*b", eids | {first})

    vertices = cell.vertices + (Vertex(cut, ROLE_INTERIOR),)
    edges = []
    for e in cell.edges:
        if e.id == edge_id:
            edges.append(Edge(first, old.tail, cut, position, old.part))
            edges.append(Edge(second, cut, old.head, old.length - position, old.part))
        else:
            edges.append(e)
    return PeriodCell(cell.dimension, vertices, edges, cell.pairings, cell.couplings)


def build_comb(
    m: int, l0: float, lengths: Sequence[float], q: Sequence[float]
) -> PeriodCell:
    """Z-periodic comb cell: a spine of length l0 with m pendant edges.

    The spine is one edge of the full graph, cut open at the cell boundary
    and carried as part 0.  Pendant j hangs at the interior point
    j*l0/(m+1), has length ``lengths[j-1]``, coupling strength ``q[j-1]``
    and a free internal-boundary tip.  The per-part constants
    q_j/lengths[j-1] must be pairwise distinct.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    if len(lengths) != m or len(q) != m:
        raise ValueError(f"expected {m} pendant lengths and strengths")
    if not l0 > 0:
        raise ValueError(f"spine length must be positive, got {l0}")
    for j, (lj, qj) in enumerate(zip(lengths, q), start=1):
        if not lj > 0:
            raise ValueError(f"pendant {j} has non-positive length {lj}")
        if not qj > 0:
            raise ValueError(f"pendant {j} has non-positive strength {qj}")
    rates = [qj / lj for lj, qj in zip(lengths, q)]
    for i in range(m):
        for k in range(i + 1, m):
            if abs(rates[i] - rates[k]) <= TIE_RTOL * max(
                abs(rates[i]), abs(rates[k])
            ):
                raise DegenerateConstantsError(
                    f"pendants {i + 1} and {k + 1} give the same constant "
                    f"{rates[i]!r}"
                )

    vertices = [Vertex("bnd-", ROLE_EXTERNAL)]
    edges = []
    seg = l0 / (m + 1)
    prev = "bnd-"
    for j in range(1, m + 1):
        w = f"joint{j}"
        vertices.append(Vertex(w, ROLE_INTERIOR))
        edges.append(Edge(f"spine{j}", prev, w, seg, 0))
        prev = w
    vertices.append(Vertex("bnd+", ROLE_EXTERNAL))
    edges.append(Edge(f"spine{m + 1}", prev, "bnd+", seg, 0))
    couplings = []
    for j in range(1, m + 1):
        tip = f"tip{j}"
        vertices.append(Vertex(tip, ROLE_INTERNAL))
        edges.append(Edge(f"arm{j}", f"joint{j}", tip, float(lengths[j - 1]), j))
        couplings.append(CouplingSet(j, [f"joint{j}"], float(q[j - 1])))
    pairing = BoundaryPairing("bnd-", "bnd+", (1,), (1, -1))
    return PeriodCell(1, vertices, edges, [pairing], couplings)


# --- JSON graph-description documents ---------------------------------------

_TOP_KEYS = {"dimension", "vertices", "edges", "pairings", "couplings"}
_VERTEX_KEYS = {"id", "role"}
_EDGE_KEYS = {"id", "tail", "head", "length", "part"}
_PAIRING_KEYS = {"minus", "plus", "shift", "orientation_signs"}
_COUPLING_KEYS = {"part", "vertices", "q"}


def _require_keys(obj: Mapping, allowed: set[str], what: str) -> None:
    if not isinstance(obj, Mapping):
        raise FormatError(f"{what} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise FormatError(f"{what} has unknown keys {sorted(unknown)}")
    missing = allowed - set(obj)
    if missing:
        raise FormatError(f"{what} is missing keys {sorted(missing)}")


def _as_number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{what} must be a number")
    return float(value)


def _as_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{what} must be an integer")
    return value


def _as_str(value, what: str) -> str:
    if not isinstance(value, str):
        raise FormatError(f"{what} must be a string")
    return value


def cell_from_dict(doc: Mapping) -> PeriodCell:
    """Build a cell from a parsed graph-description document.

    Unknown keys are rejected at every level.
    """
    _require_keys(doc, _TOP_KEYS, "cell document")
    dim = _as_int(doc["dimension"], "dimension")
    if dim < 1:
        raise FormatError("dimension must be a positive integer")
    for key in ("vertices", "edges", "pairings", "couplings"):
        if not isinstance(doc[key], Sequence) or isinstance(doc[key], (str, bytes)):
            raise FormatError(f"{key} must be an array")

    vertices = []
    for item in doc["vertices"]:
        _require_keys(item, _VERTEX_KEYS, "vertex")
        role = _as_str(item["role"], "vertex role")
        if role not in ROLES:
            raise FormatError(f"unknown vertex role {role!r}")
        vertices.append(Vertex(_as_str(item["id"], "vertex id"), role))
    edges = []
    for item in doc["edges"]:
        _require_keys(item, _EDGE_KEYS, "edge")
        edges.append(
            Edge(
                _as_str(item["id"], "edge id"),
                _as_str(item["tail"], "edge tail"),
                _as_str(item["head"], "edge head"),
                _as_number(item["length"], "edge length"),
                _as_int(item["part"], "edge part"),
            )
        )
    pairings = []
    for item in doc["pairings"]:
        _require_keys(item, _PAIRING_KEYS, "pairing")
        shift = item["shift"]
        signs = item["orientation_signs"]
        if not isinstance(shift, Sequence) or isinstance(shift, (str, bytes)):
            raise FormatError("pairing shift must be an array of integers")
        if not isinstance(signs, Sequence) or len(signs) != 2:
            raise FormatError("orientation_signs must be a pair")
        pairings.append(
            BoundaryPairing(
                _as_str(item["minus"], "pairing minus"),
                _as_str(item["plus"], "pairing plus"),
                tuple(_as_int(s, "shift entry") for s in shift),
                tuple(_as_int(s, "orientation sign") for s in signs),
            )
        )
    couplings = []
    for item in doc["couplings"]:
        _require_keys(item, _COUPLING_KEYS, "coupling")
        members = item["vertices"]
        if not isinstance(members, Sequence) or isinstance(members, (str, bytes)):
            raise FormatError("coupling vertices must be an array of ids")
        couplings.append(
            CouplingSet(
                _as_int(item["part"], "coupling part"),
                [_as_str(v, "coupling vertex") for v in members],
                _as_number(item["q"], "coupling q"),
            )
        )
    return PeriodCell(dim, vertices, edges, pairings, couplings)


def cell_to_dict(cell: PeriodCell) -> dict:
    """Serialize a cell to the graph-description document layout."""
    return {
        "dimension": cell.dimension,
        "vertices": [{"id": v.id, "role": v.role} for v in cell.vertices],
        "edges": [
            {
                "id": e.id,
                "tail": e.tail,
                "head": e.head,
                "length": e.length,
                "part": e.part,
            }
            for e in cell.edges
        ],
        "pairings": [
            {
                "minus": p.minus,
                "plus": p.plus,
                "shift": list(p.shift),
                "orientation_signs": list(p.orientation_signs),
            }
            for p in cell.pairings
        ],
        "couplings": [
            {"part": cs.part, "vertices": sorted(cs.vertices), "q": cs.q}
            for cs in cell.couplings
        ],
    }


def loads_cell(text: str) -> PeriodCell:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return cell_from_dict(doc)


def dumps_cell(cell: PeriodCell) -> str:
    return json.dumps(cell_to_dict(cell), indent=2) + "\n"


def load_cell(path) -> PeriodCell:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_cell(fh.read())


def save_cell(cell: PeriodCell, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_cell(cell))
