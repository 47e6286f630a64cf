"""Canonical on-disk formats: `.tgs.json` schemas and `.data.json` instances.

Both formats are strict: unknown fields are rejected with PARSE_ERROR and a
JSON pointer to the offending key.  Emission uses a fixed field order so
files diff cleanly.  Decimals are serialized as strings (or plain JSON
numbers on input, parsed exactly), dates as ISO `YYYY-MM-DD`.
"""

from __future__ import annotations

import json
from datetime import date
from decimal import Decimal, InvalidOperation
from typing import Any, Mapping

from .errors import TgmError, parse_error
from .model import (
    Constraint,
    ConstraintKind,
    DataType,
    EdgeKind,
    Endpoint,
    IEdge,
    INode,
    InstanceGraph,
    Multiplicity,
    PRIMITIVE_KINDS,
    SchemaEdge,
    SchemaNode,
    TypedGraphSchema,
)

PRIMITIVES = {k: DataType(k) for k in PRIMITIVE_KINDS}


def _require_object(doc: Any, allowed: tuple[str, ...], required: tuple[str, ...],
                    pointer: str) -> dict:
    if not isinstance(doc, dict):
        raise parse_error(f"expected object, got {type(doc).__name__}", pointer=pointer)
    for key in doc:
        if key not in allowed:
            raise parse_error(f"unknown field {key!r}", pointer=f"{pointer}/{key}")
    for key in required:
        if key not in doc:
            raise parse_error(f"missing field {key!r}", pointer=pointer)
    return doc


def _require_list(doc: Any, pointer: str) -> list:
    if not isinstance(doc, list):
        raise parse_error(f"expected array, got {type(doc).__name__}", pointer=pointer)
    return doc


def _require_str(doc: Any, pointer: str) -> str:
    if not isinstance(doc, str):
        raise parse_error(f"expected string, got {type(doc).__name__}", pointer=pointer)
    return doc


def _loads(text: str, filename: str | None = None) -> Any:
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise parse_error(f"invalid JSON{': ' + filename if filename else ''}: {exc.msg}",
                          line=exc.lineno, column=exc.colno) from exc


# --------------------------------------------------------------------------
# data types
# --------------------------------------------------------------------------

_TYPE_FIELDS = ("kind", "name", "values", "fields", "unit", "length", "fixed",
                "precision", "scale")


def _type_to_json(dtype: DataType, named: dict[str, DataType]) -> Any:
    """Emit a type reference: bare kind, a declared name, or an inline object."""
    if dtype.name and named.get(dtype.name) == dtype:
        return dtype.name
    plain = (dtype.name is None and not dtype.unit and dtype.length is None
             and not dtype.fixed and dtype.precision is None and dtype.scale is None)
    if dtype.kind in PRIMITIVE_KINDS and plain:
        return dtype.kind
    return _type_object(dtype, named)


def _type_object(dtype: DataType, named: dict[str, DataType]) -> dict:
    out: dict[str, Any] = {"kind": dtype.kind}
    if dtype.name:
        out["name"] = dtype.name
    if dtype.kind == "enum":
        out["values"] = list(dtype.values)
    if dtype.kind == "composite":
        out["fields"] = [{"name": n, "type": _type_to_json(t, named)}
                         for n, t in dtype.fields]
    if dtype.unit:
        out["unit"] = dtype.unit
    if dtype.length is not None:
        out["length"] = dtype.length
    if dtype.fixed:
        out["fixed"] = True
    if dtype.precision is not None:
        out["precision"] = dtype.precision
    if dtype.scale is not None:
        out["scale"] = dtype.scale
    return out


def _type_from_json(doc: Any, named: dict[str, DataType], pointer: str) -> DataType:
    if isinstance(doc, str):
        if doc in PRIMITIVES:
            return PRIMITIVES[doc]
        if doc in named:
            return named[doc]
        raise parse_error(f"unknown type name {doc!r}", pointer=pointer)
    obj = _require_object(doc, _TYPE_FIELDS, ("kind",), pointer)
    kind = _require_str(obj["kind"], f"{pointer}/kind")
    fields: tuple[tuple[str, DataType], ...] = ()
    if "fields" in obj:
        raw = _require_list(obj["fields"], f"{pointer}/fields")
        parsed = []
        for i, f in enumerate(raw):
            fobj = _require_object(f, ("name", "type"), ("name", "type"),
                                   f"{pointer}/fields/{i}")
            parsed.append((_require_str(fobj["name"], f"{pointer}/fields/{i}/name"),
                           _type_from_json(fobj["type"], named, f"{pointer}/fields/{i}/type")))
        fields = tuple(parsed)
    values: tuple[str, ...] = ()
    if "values" in obj:
        values = tuple(_require_str(v, f"{pointer}/values/{i}")
                       for i, v in enumerate(_require_list(obj["values"], f"{pointer}/values")))
    try:
        return DataType(
            kind=kind,
            name=obj.get("name"),
            values=values,
            fields=fields,
            unit=obj.get("unit"),
            length=obj.get("length"),
            fixed=bool(obj.get("fixed", False)),
            precision=obj.get("precision"),
            scale=obj.get("scale"),
        )
    except ValueError as exc:
        raise parse_error(str(exc), pointer=pointer) from exc


# --------------------------------------------------------------------------
# .tgs.json
# --------------------------------------------------------------------------


def schema_to_json(schema: TypedGraphSchema) -> dict:
    """Canonical JSON object: name, types, nodes, edges, constraints in order."""
    named: dict[str, DataType] = {t.name: t for t in schema.types if t.name}
    # every named type used by a property must be declared
    declared = list(schema.types)

    def _collect(dtype: DataType) -> None:
        if dtype.name and dtype.name not in named:
            named[dtype.name] = dtype
            declared.append(dtype)
        for _, ft in dtype.fields:
            _collect(ft)

    for node in schema.nodes:
        for _, t in node.properties:
            _collect(t)
    for edge in schema.edges:
        for _, t in edge.properties:
            _collect(t)

    def _props(props: tuple[tuple[str, DataType], ...]) -> list:
        return [{"name": n, "type": _type_to_json(t, named)} for n, t in props]

    types_json = []
    for t in declared:
        obj = _type_object(t, named)
        # a declaration is always the full object, never a self-reference
        types_json.append(obj)

    nodes_json = [{"id": n.id, "label": n.label, "properties": _props(n.properties)}
                  for n in schema.nodes]

    edges_json = []
    for e in schema.edges:
        obj: dict[str, Any] = {
            "id": e.id,
            "label": e.label,
            "kind": e.kind.value,
            "endpoints": [
                {"node": ep.node, "role": ep.role, "min": ep.multiplicity.min,
                 "max": "*" if ep.multiplicity.max is None else ep.multiplicity.max}
                for ep in e.endpoints
            ],
        }
        if e.properties:
            obj["properties"] = _props(e.properties)
        edges_json.append(obj)

    constraints_json = [
        {"kind": c.kind.value, "node": c.node, "properties": list(c.properties),
         "params": {k: v for k, v in c.params}}
        for c in schema.constraints
    ]

    return {
        "name": schema.name,
        "types": types_json,
        "nodes": nodes_json,
        "edges": edges_json,
        "constraints": constraints_json,
    }


def schema_from_json(doc: Any) -> TypedGraphSchema:
    obj = _require_object(doc, ("name", "types", "nodes", "edges", "constraints"),
                          ("name", "types", "nodes", "edges", "constraints"), "")
    name = _require_str(obj["name"], "/name")

    # named types may reference each other in any order; resolve to fixpoint
    raw_types = _require_list(obj["types"], "/types")
    named: dict[str, DataType] = {}
    pending = list(enumerate(raw_types))
    while pending:
        progressed = False
        remaining = []
        last_error: TgmError | None = None
        for i, t in pending:
            try:
                dtype = _type_from_json(t, named, f"/types/{i}")
            except TgmError as exc:
                if "unknown type name" in exc.message:
                    last_error = exc
                    remaining.append((i, t))
                    continue
                raise
            if not dtype.name:
                raise parse_error("declared types must be named", pointer=f"/types/{i}")
            if dtype.name in named:
                raise parse_error(f"duplicate type name {dtype.name!r}", pointer=f"/types/{i}")
            named[dtype.name] = dtype
            progressed = True
        if not progressed:
            raise last_error if last_error else parse_error("unresolvable types", pointer="/types")
        pending = remaining
    declared = [named[_type_name(t, i)] for i, t in enumerate(raw_types)]

    def _props(raw: Any, pointer: str) -> tuple[tuple[str, DataType], ...]:
        out = []
        for i, p in enumerate(_require_list(raw, pointer)):
            pobj = _require_object(p, ("name", "type"), ("name", "type"), f"{pointer}/{i}")
            out.append((_require_str(pobj["name"], f"{pointer}/{i}/name"),
                        _type_from_json(pobj["type"], named, f"{pointer}/{i}/type")))
        return tuple(out)

    nodes = []
    for i, n in enumerate(_require_list(obj["nodes"], "/nodes")):
        nobj = _require_object(n, ("id", "label", "properties"), ("id", "label"),
                               f"/nodes/{i}")
        try:
            nodes.append(SchemaNode(
                id=_require_str(nobj["id"], f"/nodes/{i}/id"),
                label=_require_str(nobj["label"], f"/nodes/{i}/label"),
                properties=_props(nobj.get("properties", []), f"/nodes/{i}/properties"),
            ))
        except ValueError as exc:
            raise parse_error(str(exc), pointer=f"/nodes/{i}") from exc

    edges = []
    for i, e in enumerate(_require_list(obj["edges"], "/edges")):
        eobj = _require_object(e, ("id", "label", "kind", "endpoints", "properties"),
                               ("id", "label", "kind", "endpoints"), f"/edges/{i}")
        kind_str = _require_str(eobj["kind"], f"/edges/{i}/kind")
        try:
            kind = EdgeKind(kind_str)
        except ValueError:
            raise parse_error(f"unknown edge kind {kind_str!r}",
                              pointer=f"/edges/{i}/kind") from None
        endpoints = []
        for j, ep in enumerate(_require_list(eobj["endpoints"], f"/edges/{i}/endpoints")):
            epobj = _require_object(ep, ("node", "role", "min", "max"),
                                    ("node", "role", "min", "max"),
                                    f"/edges/{i}/endpoints/{j}")
            raw_max = epobj["max"]
            if raw_max == "*":
                mx = None
            elif isinstance(raw_max, int) and not isinstance(raw_max, bool):
                mx = raw_max
            else:
                raise parse_error("max must be a natural number or \"*\"",
                                  pointer=f"/edges/{i}/endpoints/{j}/max")
            mn = epobj["min"]
            if not isinstance(mn, int) or isinstance(mn, bool):
                raise parse_error("min must be a natural number",
                                  pointer=f"/edges/{i}/endpoints/{j}/min")
            try:
                endpoints.append(Endpoint(
                    node=_require_str(epobj["node"], f"/edges/{i}/endpoints/{j}/node"),
                    role=_require_str(epobj["role"], f"/edges/{i}/endpoints/{j}/role"),
                    multiplicity=Multiplicity(mn, mx),
                ))
            except ValueError as exc:
                raise parse_error(str(exc), pointer=f"/edges/{i}/endpoints/{j}") from exc
        try:
            edges.append(SchemaEdge(
                id=_require_str(eobj["id"], f"/edges/{i}/id"),
                label=_require_str(eobj["label"], f"/edges/{i}/label"),
                kind=kind,
                endpoints=tuple(endpoints),
                properties=_props(eobj.get("properties", []), f"/edges/{i}/properties"),
            ))
        except ValueError as exc:
            raise parse_error(str(exc), pointer=f"/edges/{i}") from exc

    constraints = []
    for i, c in enumerate(_require_list(obj["constraints"], "/constraints")):
        cobj = _require_object(c, ("kind", "node", "properties", "params"),
                               ("kind", "node", "properties"), f"/constraints/{i}")
        kind_str = _require_str(cobj["kind"], f"/constraints/{i}/kind")
        try:
            ckind = ConstraintKind(kind_str)
        except ValueError:
            raise parse_error(f"unknown constraint kind {kind_str!r}",
                              pointer=f"/constraints/{i}/kind") from None
        params_obj = cobj.get("params", {})
        if not isinstance(params_obj, dict):
            raise parse_error("params must be an object", pointer=f"/constraints/{i}/params")
        props = tuple(_require_str(p, f"/constraints/{i}/properties/{j}")
                      for j, p in enumerate(_require_list(cobj["properties"],
                                                          f"/constraints/{i}/properties")))
        try:
            constraints.append(Constraint(
                kind=ckind,
                node=_require_str(cobj["node"], f"/constraints/{i}/node"),
                properties=props,
                params=tuple(sorted(params_obj.items())),
            ))
        except ValueError as exc:
            raise parse_error(str(exc), pointer=f"/constraints/{i}") from exc

    try:
        return TypedGraphSchema(name=name, nodes=tuple(nodes), edges=tuple(edges),
                                types=tuple(declared), constraints=tuple(constraints))
    except ValueError as exc:
        raise parse_error(str(exc), pointer="") from exc


def _type_name(doc: Any, index: int) -> str:
    if isinstance(doc, dict) and isinstance(doc.get("name"), str):
        return doc["name"]
    raise parse_error("declared types must be named", pointer=f"/types/{index}")


def dumps_schema(schema: TypedGraphSchema) -> str:
    return json.dumps(schema_to_json(schema), indent=2, ensure_ascii=False) + "\n"


def parse_schema(text: str, filename: str | None = None) -> TypedGraphSchema:
    return schema_from_json(_loads(text, filename))


def save_schema(schema: TypedGraphSchema, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_schema(schema))


def load_schema(path: str) -> TypedGraphSchema:
    with open(path, encoding="utf-8") as fh:
        return parse_schema(fh.read(), filename=path)


# --------------------------------------------------------------------------
# .data.json (instance graphs)
# --------------------------------------------------------------------------


def _value_to_json(value: Any) -> Any:
    if isinstance(value, Decimal):
        return str(value)
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, dict):
        return {k: _value_to_json(v) for k, v in value.items()}
    return value


value_to_json = _value_to_json


def _value_from_json(value: Any, dtype: DataType | None, pointer: str) -> Any:
    """Convert a JSON value into the runtime form the declared type expects."""
    if value is None:
        return None
    if dtype is None:
        return value  # undeclared property; validation reports it downstream
    kind = dtype.kind
    if kind == "decimal":
        if isinstance(value, bool):
            raise parse_error("decimal value must be a number or numeric string",
                              pointer=pointer)
        if isinstance(value, (int, Decimal)):
            return value if isinstance(value, Decimal) else Decimal(value)
        if isinstance(value, str):
            try:
                return Decimal(value)
            except InvalidOperation:
                raise parse_error(f"not a decimal: {value!r}", pointer=pointer) from None
        raise parse_error("decimal value must be a number or numeric string", pointer=pointer)
    if kind == "date":
        if isinstance(value, str):
            try:
                return date.fromisoformat(value)
            except ValueError:
                raise parse_error(f"not an ISO date: {value!r}", pointer=pointer) from None
        raise parse_error("date value must be an ISO string", pointer=pointer)
    if kind == "composite" and isinstance(value, dict):
        declared = dict(dtype.fields)
        return {k: _value_from_json(v, declared.get(k), f"{pointer}/{k}")
                for k, v in value.items()}
    return value


def instance_to_json(graph: InstanceGraph) -> dict:
    return {
        "schema": graph.schema_ref,
        "nodes": [
            {"id": n.id, "node": n.node,
             "values": {k: _value_to_json(v) for k, v in n.values.items()}}
            for n in graph.inodes
        ],
        "edges": [
            {"id": e.id, "edge": e.edge, "endpoints": list(e.endpoints),
             "values": {k: _value_to_json(v) for k, v in e.values.items()}}
            for e in graph.iedges
        ],
    }


def instance_from_json(doc: Any, schema: TypedGraphSchema) -> InstanceGraph:
    obj = _require_object(doc, ("schema", "nodes", "edges"), ("schema", "nodes", "edges"), "")
    ref = _require_str(obj["schema"], "/schema")

    inodes = []
    for i, n in enumerate(_require_list(obj["nodes"], "/nodes")):
        nobj = _require_object(n, ("id", "node", "values"), ("id", "node"), f"/nodes/{i}")
        node_id = _require_str(nobj["node"], f"/nodes/{i}/node")
        snode = schema.nodes_by_id.get(node_id)
        raw_values = nobj.get("values", {})
        if not isinstance(raw_values, dict):
            raise parse_error("values must be an object", pointer=f"/nodes/{i}/values")
        values = {}
        for k, v in raw_values.items():
            dtype = snode.property_type(k) if snode else None
            converted = _value_from_json(v, dtype, f"/nodes/{i}/values/{k}")
            if converted is not None:
                values[k] = converted
        inodes.append(INode(id=_require_str(nobj["id"], f"/nodes/{i}/id"),
                            node=node_id, values=values))

    iedges = []
    for i, e in enumerate(_require_list(obj["edges"], "/edges")):
        eobj = _require_object(e, ("id", "edge", "endpoints", "values"),
                               ("id", "edge", "endpoints"), f"/edges/{i}")
        edge_id = _require_str(eobj["edge"], f"/edges/{i}/edge")
        sedge = schema.edges_by_id.get(edge_id)
        declared = dict(sedge.properties) if sedge else {}
        raw_values = eobj.get("values", {})
        if not isinstance(raw_values, dict):
            raise parse_error("values must be an object", pointer=f"/edges/{i}/values")
        values = {}
        for k, v in raw_values.items():
            converted = _value_from_json(v, declared.get(k), f"/edges/{i}/values/{k}")
            if converted is not None:
                values[k] = converted
        endpoints = tuple(_require_str(p, f"/edges/{i}/endpoints/{j}")
                          for j, p in enumerate(_require_list(eobj["endpoints"],
                                                              f"/edges/{i}/endpoints")))
        iedges.append(IEdge(id=_require_str(eobj["id"], f"/edges/{i}/id"),
                            edge=edge_id, endpoints=endpoints, values=values))

    return InstanceGraph(schema_ref=ref, inodes=tuple(inodes), iedges=tuple(iedges))


def dumps_instance(graph: InstanceGraph) -> str:
    return json.dumps(instance_to_json(graph), indent=2, ensure_ascii=False) + "\n"


def parse_instance(text: str, schema: TypedGraphSchema,
                   filename: str | None = None) -> InstanceGraph:
    return instance_from_json(_loads(text, filename), schema)


def parse_instance_for(text: str, schemas: Mapping[str, TypedGraphSchema],
                       filename: str | None = None) -> InstanceGraph:
    """Like parse_instance, but picks the schema the file declares."""
    doc = _loads(text, filename)
    ref = doc.get("schema") if isinstance(doc, dict) else None
    schema = schemas.get(ref) if isinstance(ref, str) else None
    if schema is None:
        raise TgmError("UNRESOLVED_REFERENCE",
                       f"instance file references unknown schema {ref!r}")
    return instance_from_json(doc, schema)


def save_instance(graph: InstanceGraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(graph))


def load_instance(path: str, schema: TypedGraphSchema) -> InstanceGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read(), schema, filename=path)
