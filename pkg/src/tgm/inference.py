"""Schema inference for schemaless sources: hierarchical JSON and CSV.

Hierarchical documents map each distinct element path with children to a
node, containment to AGGREGATION edges (part side 0..*, whole side 1..1)
and scalar leaves to properties.  Repeated siblings unify by path, so all
regions of all countries share one node.

CSV maps the whole file to a single node, one property per column, with
primitive kinds inferred from at most the first 1000 sample rows via the
widening chain boolean -> integer -> decimal -> date -> string (first kind
where every sample parses).

Both importers can also lift the same input into an InstanceGraph typed by
the inferred schema, which is how file sources enter the execution stage.
"""

from __future__ import annotations

import csv as _csv
import io
import json
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal, InvalidOperation

from .errors import TgmError, parse_error
from .model import (
    DataType,
    EdgeKind,
    Endpoint,
    EXACTLY_ONE,
    IEdge,
    INode,
    InstanceGraph,
    Multiplicity,
    SchemaEdge,
    SchemaNode,
    TypedGraphSchema,
)

SAMPLE_CAP = 1000


@dataclass(frozen=True)
class ImportResult:
    """An inferred schema plus any non-fatal findings made along the way."""

    schema: TypedGraphSchema
    warnings: tuple[str, ...] = ()


# --------------------------------------------------------------------------
# scalar kind inference
# --------------------------------------------------------------------------

_BOOL_WORDS = {"true": True, "false": False}


def _parses_as(kind: str, text: str) -> bool:
    if kind == "boolean":
        return text.strip().lower() in _BOOL_WORDS
    if kind == "integer":
        t = text.strip()
        if t.startswith(("+", "-")):
            t = t[1:]
        return t.isdigit() and t != ""
    if kind == "decimal":
        try:
            return Decimal(text.strip()).is_finite()
        except (InvalidOperation, ValueError):
            return False
    if kind == "date":
        try:
            date.fromisoformat(text.strip())
            return True
        except ValueError:
            return False
    return kind == "string"


def _parse_cell(kind: str, text: str):
    t = text.strip()
    if kind == "boolean":
        return _BOOL_WORDS[t.lower()]
    if kind == "integer":
        return int(t)
    if kind == "decimal":
        return Decimal(t)
    if kind == "date":
        return date.fromisoformat(t)
    return text


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------


def infer_column_kind(samples: list[str]) -> str:
    """First kind on the widening chain where every non-empty sample parses;
    no evidence means the weakest kind (string)."""
    cells = [s for s in samples if s.strip() != ""]
    if not cells:
        return "string"
    for kind in ("boolean", "integer", "decimal", "date"):
        if all(_parses_as(kind, c) for c in cells):
            return kind
    return "string"


def import_csv(header: list[str], rows: list[list[str]],
               name: str = "Record", schema_name: str = "csv") -> ImportResult:
    """Single-node schema with one typed property per column."""
    if not header:
        raise parse_error("CSV header must not be empty")
    if len(set(header)) != len(header):
        raise parse_error("CSV header has duplicate column names")
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise TgmError("ARITY_MISMATCH",
                           f"row {i + 2} has {len(row)} fields, header has {len(header)}",
                           row=i + 2)
    sample = rows[:SAMPLE_CAP]
    props = []
    for col, column_name in enumerate(header):
        kind = infer_column_kind([row[col] for row in sample])
        props.append((column_name, DataType(kind)))
    node = SchemaNode(id=name, label=name, properties=tuple(props))
    return ImportResult(TypedGraphSchema(name=schema_name, nodes=(node,)))


def parse_csv(text: str) -> tuple[list[str], list[list[str]]]:
    reader = _csv.reader(io.StringIO(text))
    table = [row for row in reader if row]
    if not table:
        raise parse_error("CSV input has no header row")
    return table[0], table[1:]


def csv_instance(header: list[str], rows: list[list[str]],
                 schema: TypedGraphSchema, node_label: str | None = None) -> InstanceGraph:
    """Lift CSV rows into instance nodes typed by the inferred schema."""
    node = schema.node(node_label) if node_label else schema.nodes[0]
    kinds = {pname: ptype.kind for pname, ptype in node.properties}
    inodes = []
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise TgmError("ARITY_MISMATCH",
                           f"row {i + 1} has {len(row)} fields, header has {len(header)}",
                           row=i + 1)
        values = {}
        for col_name, cell in zip(header, row):
            if cell.strip() == "" or col_name not in kinds:
                continue
            values[col_name] = _parse_cell(kinds[col_name], cell)
        inodes.append(INode(id=f"{node.id}_{i}", node=node.id, values=values))
    return InstanceGraph(schema_ref=schema.name, inodes=tuple(inodes))


# --------------------------------------------------------------------------
# hierarchical documents
# --------------------------------------------------------------------------


@dataclass
class _Element:
    """Inference state for one element path."""

    path: tuple[str, ...]
    children: dict[str, "_Element"] = field(default_factory=dict)
    leaves: dict[str, list] = field(default_factory=dict)  # leaf name -> samples
    leaf_order: list[str] = field(default_factory=list)
    child_order: list[str] = field(default_factory=list)


def _is_scalar(value) -> bool:
    return value is None or isinstance(value, (str, bool, int, float, Decimal))


def _walk(value, element: _Element, path: tuple[str, ...]) -> None:
    if not isinstance(value, dict):
        raise parse_error(f"expected an object at /{'/'.join(path)}, "
                          f"got {type(value).__name__}")
    for key, child in value.items():
        items = child if isinstance(child, list) else [child]
        for item in items:
            if isinstance(item, dict):
                if key in element.leaves:
                    raise TgmError(
                        "HETEROGENEOUS_LEAF",
                        f"path /{'/'.join(path + (key,))} is both a scalar and an element")
                if key not in element.children:
                    element.children[key] = _Element(path + (key,))
                    element.child_order.append(key)
                _walk(item, element.children[key], path + (key,))
            elif _is_scalar(item):
                if key in element.children:
                    raise TgmError(
                        "HETEROGENEOUS_LEAF",
                        f"path /{'/'.join(path + (key,))} is both a scalar and an element")
                if key not in element.leaves:
                    element.leaves[key] = []
                    element.leaf_order.append(key)
                if item is not None:
                    element.leaves[key].append(item)
            else:
                raise parse_error(
                    f"unsupported value at /{'/'.join(path + (key,))}: nested arrays")


def _leaf_kind(path: str, samples: list, warnings: list[str]) -> str:
    """Unify scalar sample kinds; numeric strings reinterpret as numbers."""
    if not samples:
        return "string"
    kinds = set()
    for s in samples:
        if isinstance(s, bool):
            kinds.add("boolean")
        elif isinstance(s, int):
            kinds.add("integer")
        elif isinstance(s, (float, Decimal)):
            kinds.add("decimal")
        else:
            kinds.add("string")
    if len(kinds) == 1:
        return kinds.pop()
    if "boolean" in kinds:
        raise TgmError("HETEROGENEOUS_LEAF",
                       f"path {path} mixes boolean with other scalar kinds")
    if kinds == {"integer", "decimal"}:
        return "decimal"
    # strings mixed with numbers: reinterpret numeric strings, else widen to string
    strings = [s for s in samples if isinstance(s, str)]
    if all(_parses_as("integer", s) for s in strings):
        numeric = "decimal" if "decimal" in kinds else "integer"
        warnings.append(f"{path}: coerced {len(strings)} string value(s) to {numeric}")
        return numeric
    if all(_parses_as("decimal", s) for s in strings):
        warnings.append(f"{path}: coerced {len(strings)} string value(s) to decimal")
        return "decimal"
    warnings.append(f"{path}: mixed scalar kinds widened to string")
    return "string"


def _collect_elements(root: _Element) -> list[_Element]:
    out = [root]
    for key in root.child_order:
        out.extend(_collect_elements(root.children[key]))
    return out


def import_hierarchical(doc, name: str = "Document",
                        schema_name: str = "hierarchical") -> ImportResult:
    """Nodes from element paths, AGGREGATION edges from containment.

    ``doc`` is parsed JSON.  A root object with a single element child is
    unwrapped, so {"Country": {...}} starts at Country rather than at an
    artificial document node.
    """
    root = _Element(())
    _walk(doc, root, ())
    if not root.leaves and len(root.children) == 1:
        key = root.child_order[0]
        root = root.children[key]
    else:
        root = _Element((name,), root.children, root.leaves,
                        root.leaf_order, root.child_order)

    elements = _collect_elements(root)
    warnings: list[str] = []

    # labels prefer the last path segment; collisions fall back to dotted paths
    last_segments = [e.path[-1] for e in elements]
    labels = {}
    for e in elements:
        seg = e.path[-1]
        labels[e.path] = seg if last_segments.count(seg) == 1 else ".".join(e.path)

    nodes = []
    edges = []
    for e in elements:
        props = []
        for leaf in e.leaf_order:
            kind = _leaf_kind("/" + "/".join(e.path + (leaf,)), e.leaves[leaf], warnings)
            props.append((leaf, DataType(kind)))
        nodes.append(SchemaNode(id="/".join(e.path), label=labels[e.path],
                                properties=tuple(props)))
        for key in e.child_order:
            child = e.children[key]
            edges.append(SchemaEdge(
                id=f"agg_{'/'.join(child.path)}",
                label="contains",
                kind=EdgeKind.AGGREGATION,
                endpoints=(
                    Endpoint("/".join(e.path), "whole", EXACTLY_ONE),
                    Endpoint("/".join(child.path), "part", Multiplicity(0, None)),
                ),
            ))

    schema = TypedGraphSchema(name=schema_name, nodes=tuple(nodes), edges=tuple(edges))
    return ImportResult(schema, tuple(warnings))


def hierarchical_instance(doc, schema: TypedGraphSchema) -> InstanceGraph:
    """Lift a document into instance nodes/edges typed by its inferred schema.

    Values coerce to the declared property kinds the same way inference
    widened them (numeric strings become numbers when the type is numeric).
    """
    by_id = schema.nodes_by_id
    edge_by_child = {}
    children_of: dict[str, dict[str, str]] = {}
    for e in schema.edges:
        if e.kind is EdgeKind.AGGREGATION:
            parent_id, child_id = e.endpoints[0].node, e.endpoints[1].node
            edge_by_child[child_id] = e
            segment = child_id.split("/")[-1]
            children_of.setdefault(parent_id, {})[segment] = child_id

    counters: dict[str, int] = {}
    inodes: list[INode] = []
    iedges: list[IEdge] = []

    def fresh(prefix: str) -> str:
        counters[prefix] = counters.get(prefix, 0) + 1
        return f"{prefix}_{counters[prefix]}"

    def emit(obj: dict, node_id: str, parent_instance: str | None) -> None:
        node = by_id[node_id]
        values = {}
        children: list[tuple[str, dict]] = []
        for key, value in obj.items():
            items = value if isinstance(value, list) else [value]
            child_id = children_of.get(node_id, {}).get(key)
            if child_id is not None:
                children.extend((child_id, item) for item in items if isinstance(item, dict))
                continue
            dtype = node.property_type(key)
            for item in items:
                if item is None or dtype is None:
                    continue
                values[key] = _coerce_scalar(item, dtype)
        iid = fresh(node.label)
        inodes.append(INode(id=iid, node=node_id, values=values))
        if parent_instance is not None:
            edge = edge_by_child[node_id]
            iedges.append(IEdge(id=fresh("contains"), edge=edge.id,
                                endpoints=(parent_instance, iid)))
        for child_id, item in children:
            emit(item, child_id, iid)

    root_id = schema.nodes[0].id
    if isinstance(doc, dict) and len(doc) == 1:
        only = next(iter(doc))
        if only == root_id and isinstance(doc[only], (dict, list)):
            items = doc[only] if isinstance(doc[only], list) else [doc[only]]
            for item in items:
                emit(item, root_id, None)
            return InstanceGraph(schema.name, tuple(inodes), tuple(iedges))
    emit(doc, root_id, None)
    return InstanceGraph(schema.name, tuple(inodes), tuple(iedges))


def _coerce_scalar(value, dtype: DataType):
    kind = dtype.kind
    if kind == "integer":
        if isinstance(value, str) and _parses_as("integer", value):
            return int(value.strip())
        return value
    if kind == "decimal":
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and _parses_as("decimal", value):
            return Decimal(value.strip())
        if isinstance(value, int):
            return Decimal(value)
        if isinstance(value, float):
            return Decimal(str(value))
        return value
    if kind == "string" and not isinstance(value, str):
        if isinstance(value, bool):
            return "true" if value else "false"
        return str(value)
    return value


def load_json_document(text: str, filename: str | None = None):
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise parse_error(f"invalid JSON{': ' + filename if filename else ''}: {exc.msg}",
                          line=exc.lineno, column=exc.colno) from exc
