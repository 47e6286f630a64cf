"""Typed graph model: schemas, instance graphs and conformance checking.

A typed graph schema describes labeled nodes, (hyper-)edges with roles and
multiplicities, named data types and integrity constraints.  An instance
graph carries data-level nodes and edges together with a typing map into
its schema; ``validate_instance`` checks that this map is a homomorphism
and that all values and constraints hold.

All values in this module are immutable after construction and safe to
share between threads; every operation is a pure function.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal
from enum import Enum
from functools import cached_property
from typing import Any, Optional


class SchemaError(ValueError):
    """Raised when a schema or instance value violates a structural invariant."""


class UnknownSchemaError(SchemaError):
    """Raised when an instance graph names a schema it was not validated against."""


# --------------------------------------------------------------------------
# data types
# --------------------------------------------------------------------------

PRIMITIVE_KINDS = ("string", "integer", "decimal", "boolean", "date")


@dataclass(frozen=True)
class DataType:
    """A value type: primitive, enumeration or composite, with an optional unit.

    ``length``/``fixed`` qualify strings (fixed-width vs. variable),
    ``precision``/``scale`` qualify decimals.  They exist so that schemas
    imported from relational sources can be exported again without loss.
    """

    kind: str  # string|integer|decimal|boolean|date|enum|composite
    name: Optional[str] = None
    values: tuple[str, ...] = ()  # enumeration members
    fields: tuple[tuple[str, "DataType"], ...] = ()  # composite fields
    unit: Optional[str] = None
    length: Optional[int] = None
    fixed: bool = False
    precision: Optional[int] = None
    scale: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in PRIMITIVE_KINDS + ("enum", "composite"):
            raise SchemaError(f"unknown data type kind {self.kind!r}")
        if self.kind == "enum":
            if not self.values:
                raise SchemaError("enumeration needs at least one allowed value")
            if len(set(self.values)) != len(self.values):
                raise SchemaError(f"enumeration {self.name!r} has duplicate values")
        if self.kind == "composite":
            names = [n for n, _ in self.fields]
            if len(set(names)) != len(names):
                raise SchemaError(f"composite {self.name!r} has duplicate field names")

    @property
    def is_numeric(self) -> bool:
        return self.kind in ("integer", "decimal")


STRING = DataType("string")
INTEGER = DataType("integer")
DECIMAL = DataType("decimal")
BOOLEAN = DataType("boolean")
DATE = DataType("date")


def string_type(length: int | None = None, fixed: bool = False) -> DataType:
    return DataType("string", length=length, fixed=fixed)


def decimal_type(precision: int | None = None, scale: int | None = None) -> DataType:
    return DataType("decimal", precision=precision, scale=scale)


def enum_type(name: str, values: tuple[str, ...] | list[str]) -> DataType:
    return DataType("enum", name=name, values=tuple(values))


def nfc(text: str) -> str:
    """Unicode NFC normalization; value comparison is case-sensitive after this."""
    return unicodedata.normalize("NFC", text)


def value_conforms(value: Any, dtype: DataType) -> str | None:
    """Return None when ``value`` conforms to ``dtype``, else a short reason."""
    kind = dtype.kind
    if kind == "string":
        return None if isinstance(value, str) else f"expected string, got {type(value).__name__}"
    if kind == "integer":
        if isinstance(value, bool) or not isinstance(value, int):
            return f"expected integer, got {type(value).__name__}"
        return None
    if kind == "decimal":
        if isinstance(value, bool) or not isinstance(value, (int, Decimal)):
            return f"expected decimal, got {type(value).__name__}"
        return None
    if kind == "boolean":
        return None if isinstance(value, bool) else f"expected boolean, got {type(value).__name__}"
    if kind == "date":
        return None if isinstance(value, date) else f"expected date, got {type(value).__name__}"
    if kind == "enum":
        if not isinstance(value, str):
            return f"expected enumeration value, got {type(value).__name__}"
        if nfc(value) not in {nfc(v) for v in dtype.values}:
            return f"value {value!r} not in enumeration {dtype.name or ''}"
        return None
    if kind == "composite":
        if not isinstance(value, dict):
            return f"expected composite object, got {type(value).__name__}"
        declared = dict(dtype.fields)
        for fname in value:
            if fname not in declared:
                return f"undeclared composite field {fname!r}"
        for fname, ftype in dtype.fields:
            if fname not in value:
                return f"missing composite field {fname!r}"
            reason = value_conforms(value[fname], ftype)
            if reason:
                return f"{fname}: {reason}"
        return None
    return f"unknown kind {kind!r}"


# --------------------------------------------------------------------------
# schema structure
# --------------------------------------------------------------------------

UNBOUNDED: Optional[int] = None


@dataclass(frozen=True)
class Multiplicity:
    """Cardinality bounds; ``max=None`` means unbounded."""

    min: int = 0
    max: Optional[int] = None

    def __post_init__(self) -> None:
        if self.min < 0:
            raise SchemaError("multiplicity min must be a natural number")
        if self.max is not None and self.min > self.max:
            raise SchemaError(f"multiplicity {self.min}..{self.max} has min > max")

    def contains(self, count: int) -> bool:
        return count >= self.min and (self.max is None or count <= self.max)

    def __str__(self) -> str:
        return f"{self.min}..{'*' if self.max is None else self.max}"


ANY = Multiplicity(0, None)
EXACTLY_ONE = Multiplicity(1, 1)


class EdgeKind(str, Enum):
    ASSOCIATION = "association"
    AGGREGATION = "aggregation"
    GENERALIZATION = "generalization"
    FUNCTION = "function"


@dataclass(frozen=True)
class SchemaNode:
    """A typed node with an ordered property list."""

    id: str
    label: str
    properties: tuple[tuple[str, DataType], ...] = ()

    def __post_init__(self) -> None:
        if not self.label:
            raise SchemaError(f"node {self.id!r} has an empty label")
        names = [n for n, _ in self.properties]
        if len(set(names)) != len(names):
            raise SchemaError(f"node {self.label!r} has duplicate property names")

    @property
    def property_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.properties)

    def property_type(self, name: str) -> DataType | None:
        for n, t in self.properties:
            if n == name:
                return t
        return None


@dataclass(frozen=True)
class Endpoint:
    node: str  # schema node id
    role: str
    multiplicity: Multiplicity = ANY


@dataclass(frozen=True)
class SchemaEdge:
    """A (hyper-)edge over two or more endpoints, each with a role and bounds.

    For FUNCTION edges the last endpoint is the target and must carry
    multiplicity 1..1.  Foreign-key derived edges encode the referencing
    and referenced column lists in their endpoint roles (comma-joined).
    """

    id: str
    label: str
    kind: EdgeKind
    endpoints: tuple[Endpoint, ...]
    properties: tuple[tuple[str, DataType], ...] = ()

    def __post_init__(self) -> None:
        if len(self.endpoints) < 2:
            raise SchemaError(f"edge {self.id!r} needs at least two endpoints")
        if self.kind is EdgeKind.FUNCTION and self.endpoints[-1].multiplicity != EXACTLY_ONE:
            raise SchemaError(f"function edge {self.id!r} must target multiplicity 1..1")
        names = [n for n, _ in self.properties]
        if len(set(names)) != len(names):
            raise SchemaError(f"edge {self.id!r} has duplicate property names")


class ConstraintKind(str, Enum):
    # a floor of common kinds; the enum is deliberately open for extension
    KEY = "key"
    NOT_NULL = "not_null"
    RANGE = "range"
    ENUM_MEMBER = "enum_member"


@dataclass(frozen=True)
class Constraint:
    """An integrity constraint on a node (KEY) or one of its properties."""

    kind: ConstraintKind
    node: str  # schema node id
    properties: tuple[str, ...]
    params: tuple[tuple[str, Any], ...] = ()

    def __post_init__(self) -> None:
        if self.kind is ConstraintKind.KEY and not self.properties:
            raise SchemaError("KEY constraint needs a non-empty property list")

    def param(self, name: str, default: Any = None) -> Any:
        for k, v in self.params:
            if k == name:
                return v
        return default


@dataclass(frozen=True)
class TypedGraphSchema:
    """Schema tuple: nodes, edges, named types and constraints."""

    name: str
    nodes: tuple[SchemaNode, ...] = ()
    edges: tuple[SchemaEdge, ...] = ()
    types: tuple[DataType, ...] = ()
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self) -> None:
        labels = [n.label for n in self.nodes]
        if len(set(labels)) != len(labels):
            raise SchemaError(f"schema {self.name!r} has duplicate node labels")
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise SchemaError(f"schema {self.name!r} has duplicate node ids")
        eids = [e.id for e in self.edges]
        if len(set(eids)) != len(eids):
            raise SchemaError(f"schema {self.name!r} has duplicate edge ids")
        node_ids = set(ids)
        for e in self.edges:
            for ep in e.endpoints:
                if ep.node not in node_ids:
                    raise SchemaError(f"edge {e.id!r} endpoint references unknown node {ep.node!r}")
        for c in self.constraints:
            node = self._node_by_id(c.node)
            if node is None:
                raise SchemaError(f"constraint targets unknown node {c.node!r}")
            for p in c.properties:
                if node.property_type(p) is None:
                    raise SchemaError(f"constraint targets unknown property {node.label}.{p}")

    def _node_by_id(self, node_id: str) -> SchemaNode | None:
        return self.nodes_by_id.get(node_id)

    @cached_property
    def nodes_by_id(self) -> dict[str, SchemaNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def nodes_by_label(self) -> dict[str, SchemaNode]:
        return {n.label: n for n in self.nodes}

    @cached_property
    def edges_by_id(self) -> dict[str, SchemaEdge]:
        return {e.id: e for e in self.edges}

    def node(self, label: str) -> SchemaNode:
        try:
            return self.nodes_by_label[label]
        except KeyError:
            raise SchemaError(f"schema {self.name!r} has no node labeled {label!r}") from None

    def edge(self, edge_id: str) -> SchemaEdge:
        try:
            return self.edges_by_id[edge_id]
        except KeyError:
            raise SchemaError(f"schema {self.name!r} has no edge {edge_id!r}") from None

    def incident_edges(self, node_id: str) -> list[tuple[SchemaEdge, int]]:
        """All (edge, endpoint index) pairs where the node participates."""
        found = []
        for e in self.edges:
            for i, ep in enumerate(e.endpoints):
                if ep.node == node_id:
                    found.append((e, i))
        return found


# --------------------------------------------------------------------------
# instance graphs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class INode:
    id: str
    node: str  # schema node id
    values: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class IEdge:
    id: str
    edge: str  # schema edge id
    endpoints: tuple[str, ...]  # instance node ids, in role order
    values: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class InstanceGraph:
    """Data nodes/edges plus the typing map into a named schema."""

    schema_ref: str
    inodes: tuple[INode, ...] = ()
    iedges: tuple[IEdge, ...] = ()

    @cached_property
    def inodes_by_id(self) -> dict[str, INode]:
        return {n.id: n for n in self.inodes}


@dataclass(frozen=True)
class Violation:
    clause: str  # typing|dangling|homomorphism|datatype|multiplicity|constraint
    element: str  # offending instance element id
    message: str


CLAUSE_ORDER = {"typing": 0, "dangling": 1, "homomorphism": 2, "datatype": 3,
                "multiplicity": 4, "constraint": 5}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self):
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


def _normalized_eq(a: Any, b: Any) -> bool:
    if isinstance(a, str) and isinstance(b, str):
        return nfc(a) == nfc(b)
    return a == b


def validate_instance(graph: InstanceGraph, schema: TypedGraphSchema) -> ValidationReport:
    """Check the typing homomorphism, value conformance, multiplicities and constraints.

    The report is deterministic: violations are sorted by element id, then
    clause, then message.  A dangling edge endpoint is reported, not raised.
    """
    if graph.schema_ref != schema.name:
        raise UnknownSchemaError(
            f"instance graph references schema {graph.schema_ref!r}, not {schema.name!r}")

    out: list[Violation] = []

    for inode in graph.inodes:
        snode = schema.nodes_by_id.get(inode.node)
        if snode is None:
            out.append(Violation("typing", inode.id, f"unknown schema node {inode.node!r}"))
            continue
        declared = dict(snode.properties)
        for pname, value in inode.values.items():
            if pname not in declared:
                out.append(Violation("datatype", inode.id,
                                     f"undeclared property {snode.label}.{pname}"))
                continue
            if value is None:  # explicit null means absent; NOT_NULL handles it
                continue
            reason = value_conforms(value, declared[pname])
            if reason:
                out.append(Violation("datatype", inode.id, f"{snode.label}.{pname}: {reason}"))

    # edge typing, endpoint resolution and the homomorphism condition
    for iedge in graph.iedges:
        sedge = schema.edges_by_id.get(iedge.edge)
        if sedge is None:
            out.append(Violation("typing", iedge.id, f"unknown schema edge {iedge.edge!r}"))
            continue
        if len(iedge.endpoints) != len(sedge.endpoints):
            out.append(Violation("homomorphism", iedge.id,
                                 f"edge {sedge.label or sedge.id} expects "
                                 f"{len(sedge.endpoints)} endpoints, got {len(iedge.endpoints)}"))
            continue
        for pos, (inode_id, ep) in enumerate(zip(iedge.endpoints, sedge.endpoints)):
            target = graph.inodes_by_id.get(inode_id)
            if target is None:
                out.append(Violation("dangling", iedge.id,
                                     f"endpoint {pos} ({ep.role}) references missing node {inode_id!r}"))
            elif target.node != ep.node:
                expected = schema.nodes_by_id[ep.node].label
                out.append(Violation("homomorphism", iedge.id,
                                     f"endpoint {pos} ({ep.role}) must be a {expected} node, "
                                     f"got image {target.node!r}"))
        declared = dict(sedge.properties)
        for pname, value in iedge.values.items():
            if pname not in declared:
                out.append(Violation("datatype", iedge.id,
                                     f"undeclared edge property {pname}"))
                continue
            if value is None:
                continue
            reason = value_conforms(value, declared[pname])
            if reason:
                out.append(Violation("datatype", iedge.id, f"{pname}: {reason}"))

    out.extend(_check_multiplicities(graph, schema))
    out.extend(_check_constraints(graph, schema))

    out.sort(key=lambda v: (v.element, CLAUSE_ORDER.get(v.clause, 9), v.message))
    return ValidationReport(tuple(out))


def _check_multiplicities(graph: InstanceGraph, schema: TypedGraphSchema) -> list[Violation]:
    """Each endpoint's bounds constrain, per instance of every *other* endpoint,
    how many edge instances that node participates in (UML reading)."""
    out: list[Violation] = []
    # counts[(edge id, endpoint index, instance node id)] -> participation count
    counts: dict[tuple[str, int, str], int] = {}
    for iedge in graph.iedges:
        sedge = schema.edges_by_id.get(iedge.edge)
        if sedge is None or len(iedge.endpoints) != len(sedge.endpoints):
            continue
        for pos, inode_id in enumerate(iedge.endpoints):
            target = graph.inodes_by_id.get(inode_id)
            if target is None or target.node != sedge.endpoints[pos].node:
                continue
            counts[(sedge.id, pos, inode_id)] = counts.get((sedge.id, pos, inode_id), 0) + 1

    for sedge in schema.edges:
        for pos, ep in enumerate(sedge.endpoints):
            # bounds that apply to a node sitting at `pos`: every other endpoint's
            for other_i, other in enumerate(sedge.endpoints):
                if other_i == pos:
                    continue
                m = other.multiplicity
                if m.min == 0 and m.max is None:
                    continue
                for inode in graph.inodes:
                    if inode.node != ep.node:
                        continue
                    count = counts.get((sedge.id, pos, inode.id), 0)
                    if not m.contains(count):
                        out.append(Violation(
                            "multiplicity", inode.id,
                            f"node participates {count}x as {ep.role!r} in "
                            f"{sedge.label or sedge.id}, bounds {m} at {other.role!r} endpoint"))
    return out


def _check_constraints(graph: InstanceGraph, schema: TypedGraphSchema) -> list[Violation]:
    out: list[Violation] = []
    for c in schema.constraints:
        snode = schema.nodes_by_id.get(c.node)
        if snode is None:
            continue
        members = [n for n in graph.inodes if n.node == c.node]
        if c.kind is ConstraintKind.KEY:
            seen: dict[tuple, str] = {}
            for inode in members:
                missing = [p for p in c.properties if p not in inode.values]
                if missing:
                    out.append(Violation("constraint", inode.id,
                                         f"key of {snode.label} missing {', '.join(missing)}"))
                    continue
                key = tuple(_key_part(inode.values[p]) for p in c.properties)
                if key in seen:
                    out.append(Violation("constraint", inode.id,
                                         f"duplicate key {key!r} on {snode.label} "
                                         f"(first seen at {seen[key]})"))
                else:
                    seen[key] = inode.id
        elif c.kind is ConstraintKind.NOT_NULL:
            prop = c.properties[0]
            for inode in members:
                if inode.values.get(prop) is None:
                    out.append(Violation("constraint", inode.id,
                                         f"{snode.label}.{prop} must not be null"))
        elif c.kind is ConstraintKind.RANGE:
            prop = c.properties[0]
            lo, hi = c.param("min"), c.param("max")
            for inode in members:
                v = inode.values.get(prop)
                if v is None or isinstance(v, bool) or not isinstance(v, (int, Decimal)):
                    continue
                if (lo is not None and v < lo) or (hi is not None and v > hi):
                    out.append(Violation("constraint", inode.id,
                                         f"{snode.label}.{prop} value {v} outside [{lo}, {hi}]"))
        elif c.kind is ConstraintKind.ENUM_MEMBER:
            prop = c.properties[0]
            dtype = snode.property_type(prop)
            if dtype is None or dtype.kind != "enum":
                continue
            allowed = {nfc(v) for v in dtype.values}
            for inode in members:
                v = inode.values.get(prop)
                if isinstance(v, str) and nfc(v) not in allowed:
                    out.append(Violation("constraint", inode.id,
                                         f"{snode.label}.{prop} value {v!r} not an allowed member"))
    return out


def _key_part(value: Any) -> Any:
    return nfc(value) if isinstance(value, str) else value


# --------------------------------------------------------------------------
# schema diff
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NodeShape:
    """Label-resolved view of a node; ids play no part in comparison."""

    label: str
    properties: tuple[tuple[str, DataType], ...]


@dataclass(frozen=True)
class EdgeShape:
    """Label-resolved view of an edge: endpoints as (node label, role, bounds)."""

    label: str
    kind: EdgeKind
    endpoints: tuple[tuple[str, str, Multiplicity], ...]
    properties: tuple[tuple[str, DataType], ...] = ()

    @property
    def signature(self) -> tuple:
        return (self.label, self.kind.value,
                tuple((n, r) for n, r, _ in self.endpoints))


@dataclass(frozen=True)
class ConstraintShape:
    kind: ConstraintKind
    node_label: str
    properties: tuple[str, ...]
    params: tuple[tuple[str, Any], ...] = ()

    @property
    def signature(self) -> tuple:
        return (self.kind.value, self.node_label, self.properties)


def node_shape(node: SchemaNode) -> NodeShape:
    return NodeShape(node.label, node.properties)


def edge_shape(edge: SchemaEdge, schema: TypedGraphSchema) -> EdgeShape:
    eps = tuple((schema.nodes_by_id[ep.node].label, ep.role, ep.multiplicity)
                for ep in edge.endpoints)
    return EdgeShape(edge.label, edge.kind, eps, edge.properties)


def constraint_shape(c: Constraint, schema: TypedGraphSchema) -> ConstraintShape:
    return ConstraintShape(c.kind, schema.nodes_by_id[c.node].label, c.properties, c.params)


@dataclass(frozen=True)
class SchemaDifference:
    kind: str  # {added,removed,changed}_{node,edge,type,constraint}
    subject: str
    before: Any = None  # shape (or DataType) in the first schema
    after: Any = None  # shape (or DataType) in the second schema


def schema_diff(a: TypedGraphSchema, b: TypedGraphSchema) -> list[SchemaDifference]:
    """Differences between two schemas, insensitive to element id renaming.

    Nodes are keyed by label, edges by (label, kind, endpoint labels+roles),
    named types by name and constraints by (kind, node label, properties).
    The result is complete: ``apply_diff(a, schema_diff(a, b))`` has an
    empty diff against ``b``.
    """
    out: list[SchemaDifference] = []

    a_nodes = {n.label: node_shape(n) for n in a.nodes}
    b_nodes = {n.label: node_shape(n) for n in b.nodes}
    for label in sorted(set(a_nodes) | set(b_nodes)):
        if label not in b_nodes:
            out.append(SchemaDifference("removed_node", label, before=a_nodes[label]))
        elif label not in a_nodes:
            out.append(SchemaDifference("added_node", label, after=b_nodes[label]))
        elif a_nodes[label] != b_nodes[label]:
            out.append(SchemaDifference("changed_node", label,
                                        before=a_nodes[label], after=b_nodes[label]))

    a_edges = {edge_shape(e, a).signature: edge_shape(e, a) for e in a.edges}
    b_edges = {edge_shape(e, b).signature: edge_shape(e, b) for e in b.edges}
    for sig in sorted(set(a_edges) | set(b_edges)):
        subject = f"{sig[0] or sig[1]}({', '.join(n for n, _ in sig[2])})"
        if sig not in b_edges:
            out.append(SchemaDifference("removed_edge", subject, before=a_edges[sig]))
        elif sig not in a_edges:
            out.append(SchemaDifference("added_edge", subject, after=b_edges[sig]))
        elif a_edges[sig] != b_edges[sig]:
            out.append(SchemaDifference("changed_edge", subject,
                                        before=a_edges[sig], after=b_edges[sig]))

    a_types = {t.name: t for t in a.types if t.name}
    b_types = {t.name: t for t in b.types if t.name}
    for name in sorted(set(a_types) | set(b_types)):
        if name not in b_types:
            out.append(SchemaDifference("removed_type", name, before=a_types[name]))
        elif name not in a_types:
            out.append(SchemaDifference("added_type", name, after=b_types[name]))
        elif a_types[name] != b_types[name]:
            out.append(SchemaDifference("changed_type", name,
                                        before=a_types[name], after=b_types[name]))

    a_cons = {constraint_shape(c, a).signature: constraint_shape(c, a) for c in a.constraints}
    b_cons = {constraint_shape(c, b).signature: constraint_shape(c, b) for c in b.constraints}
    for key in sorted(set(a_cons) | set(b_cons)):
        subject = f"{key[0]} {key[1]}({', '.join(key[2])})"
        if key not in b_cons:
            out.append(SchemaDifference("removed_constraint", subject, before=a_cons[key]))
        elif key not in a_cons:
            out.append(SchemaDifference("added_constraint", subject, after=b_cons[key]))
        elif a_cons[key] != b_cons[key]:
            out.append(SchemaDifference("changed_constraint", subject,
                                        before=a_cons[key], after=b_cons[key]))

    return out


def apply_diff(a: TypedGraphSchema, diff: list[SchemaDifference],
               name: str | None = None) -> TypedGraphSchema:
    """Apply a diff produced by ``schema_diff(a, b)``; the result matches
    ``b`` up to element id renaming (and keeps ``a``'s name unless given)."""
    nodes = {n.label: node_shape(n) for n in a.nodes}
    node_ids = {n.label: n.id for n in a.nodes}
    edges = {edge_shape(e, a).signature: edge_shape(e, a) for e in a.edges}
    edge_ids = {edge_shape(e, a).signature: e.id for e in a.edges}
    types = {t.name: t for t in a.types if t.name}
    cons = {constraint_shape(c, a).signature: constraint_shape(c, a) for c in a.constraints}

    for d in diff:
        if d.kind == "removed_node":
            nodes.pop(d.subject, None)
        elif d.kind in ("added_node", "changed_node"):
            nodes[d.subject] = d.after
        elif d.kind == "removed_edge":
            edges.pop(d.before.signature, None)
        elif d.kind in ("added_edge", "changed_edge"):
            if d.kind == "changed_edge":
                edges.pop(d.before.signature, None)
            edges[d.after.signature] = d.after
        elif d.kind == "removed_type":
            types.pop(d.subject, None)
        elif d.kind in ("added_type", "changed_type"):
            types[d.subject] = d.after
        elif d.kind == "removed_constraint":
            cons.pop(d.before.signature, None)
        elif d.kind in ("added_constraint", "changed_constraint"):
            if d.kind == "changed_constraint":
                cons.pop(d.before.signature, None)
            cons[d.after.signature] = d.after
        else:
            raise SchemaError(f"unknown difference kind {d.kind!r}")

    used = set(node_ids.values())
    for label in sorted(nodes):
        if label not in node_ids:
            fresh = f"n_{label}"
            while fresh in used:
                fresh += "_"
            node_ids[label] = fresh
            used.add(fresh)

    out_nodes = tuple(SchemaNode(node_ids[s.label], s.label, s.properties)
                      for s in (nodes[label] for label in sorted(nodes)))

    out_edges = []
    counter = 0
    used_eids = set(edge_ids.values())
    for sig in sorted(edges):
        shape = edges[sig]
        eid = edge_ids.get(sig)
        if eid is None:
            counter += 1
            eid = f"e_{shape.label or shape.kind.value}_{counter}"
            while eid in used_eids:
                counter += 1
                eid = f"e_{shape.label or shape.kind.value}_{counter}"
            used_eids.add(eid)
        eps = tuple(Endpoint(node_ids[n], role, m) for n, role, m in shape.endpoints)
        out_edges.append(SchemaEdge(eid, shape.label, shape.kind, eps, shape.properties))

    out_cons = tuple(Constraint(s.kind, node_ids[s.node_label], s.properties, s.params)
                     for s in (cons[k] for k in sorted(cons)))

    return TypedGraphSchema(
        name=name or a.name,
        nodes=out_nodes,
        edges=tuple(out_edges),
        types=tuple(types[n] for n in sorted(types)),
        constraints=out_cons,
    )
