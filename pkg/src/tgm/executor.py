"""Mapping execution: materializes the target instance graph from validated
source instance graphs (global-as-view), with conflict and provenance logs.

Evaluation order per target node: group the driving source instances
(entity rules; AGGREGATE group-by defines the groups), compute property
contributions rule by rule, merge entities that share a declared key,
drop duplicate values, then resolve remaining conflicts by policy.  Element
ids are content hashes of the entity key (or of the provenance when no key
is declared), so executing twice yields structurally identical output.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import date
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .errors import TgmError
from .mapping import (
    Aggregate,
    AggregateFn,
    Cast,
    ChainMiss,
    Constant,
    ConflictPolicy,
    Identity,
    MappingRule,
    MappingSet,
    Scale,
    Split,
    Translate,
    cast_value,
    fraction_to_decimal,
    normalize_value,
)
from .matching import ElementRef
from .model import (
    DataType,
    EdgeKind,
    IEdge,
    INode,
    InstanceGraph,
    SchemaEdge,
    SchemaNode,
    TypedGraphSchema,
    validate_instance,
)


@dataclass(frozen=True)
class Contribution:
    source_element: str
    value: Any
    schema: str

    def to_json(self) -> dict:
        from .mapping import scalar_to_json
        return {"sourceElement": self.source_element,
                "value": scalar_to_json(self.value), "schema": self.schema}


@dataclass(frozen=True)
class ConflictRecord:
    target_element: str  # "<inode id>.<property>"
    contributions: tuple[Contribution, ...]
    policy: str
    resolved: Any
    severity: str  # INFO|WARNING|ERROR
    code: str | None = None

    def to_json(self) -> dict:
        from .mapping import scalar_to_json
        return {
            "targetElement": self.target_element,
            "contributions": [c.to_json() for c in self.contributions],
            "policy": self.policy,
            "resolved": scalar_to_json(self.resolved),
            "severity": self.severity,
            "code": self.code,
        }


@dataclass(frozen=True)
class ProvenanceEntry:
    target_element: str
    rule: str
    source_elements: tuple[str, ...]

    def to_json(self) -> dict:
        return {"targetElement": self.target_element, "rule": self.rule,
                "sourceElements": list(self.source_elements)}


@dataclass(frozen=True)
class ExecutionResult:
    target: InstanceGraph
    conflicts: tuple[ConflictRecord, ...]
    provenance: tuple[ProvenanceEntry, ...]
    edge_image: tuple[tuple[str, str], ...] = ()  # source iedge id -> target iedge id

    def to_json(self) -> dict:
        from .formats import instance_to_json
        return {
            "target": instance_to_json(self.target),
            "conflicts": [c.to_json() for c in self.conflicts],
            "provenance": [p.to_json() for p in self.provenance],
            "edgeImage": {s: t for s, t in self.edge_image},
        }


def _content_id(label: str, parts: Iterable[Any]) -> str:
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha1(f"{label}\x1e{text}".encode()).hexdigest()[:10]
    return f"{label}-{digest}"


# --------------------------------------------------------------------------
# internal working state
# --------------------------------------------------------------------------


@dataclass
class _Entity:
    rule_ids: list[str]  # entity rules that produced/merged into this entity
    label: str
    node_id: str
    drivers: list[tuple[str, INode]]  # (schema name, driver inode)
    contributions: dict[str, list[tuple[tuple, Contribution]]] = field(default_factory=dict)
    # property -> [(order key, contribution)]; order key sorts deterministically
    rule_sources: dict[str, list[str]] = field(default_factory=dict)  # rule id -> inode ids
    policies: dict[str, list[tuple[str, ConflictPolicy]]] = field(default_factory=dict)

    def driver_ids(self) -> list[str]:
        return sorted(i.id for _, i in self.drivers)


class _Execution:
    def __init__(self, source_schemas: Mapping[str, TypedGraphSchema],
                 target_schema: TypedGraphSchema, mapping: MappingSet,
                 sources: list[InstanceGraph]) -> None:
        self.source_schemas = dict(source_schemas)
        self.target = target_schema
        self.mapping = mapping
        self.sources = sources
        self.conflicts: list[ConflictRecord] = []
        self.provenance: list[ProvenanceEntry] = []
        self.entities: list[_Entity] = []
        self.by_driver: dict[tuple[str, str], _Entity] = {}  # (entity rule, inode id)
        self.iedges: dict[tuple[str, tuple[str, ...]], IEdge] = {}
        self.edge_image: dict[str, str] = {}

    # -- rule classification ------------------------------------------------

    def runnable(self, rule: MappingRule) -> bool:
        """A rule executes when all its sources live in source schemas that
        have instance data; target-internal rules only serve path analysis."""
        for s in rule.sources:
            if s.schema == self.target.name or s.schema not in self.source_schemas:
                return False
            if not any(g.schema_ref == s.schema for g in self.sources):
                return False
        return rule.target.schema == self.target.name

    def entity_rules(self) -> list[MappingRule]:
        return sorted((r for r in self.mapping.rules
                       if r.target.kind == "node" and self.runnable(r)
                       and not isinstance(r.transform, Split)),
                      key=lambda r: r.id)

    def property_rules(self) -> list[MappingRule]:
        out = []
        for r in self.mapping.rules:
            if not self.runnable(r):
                continue
            if r.target.kind == "property":
                out.append(r)
            elif r.target.kind == "node" and isinstance(r.transform, Split):
                out.append(r)
        return sorted(out, key=lambda r: r.id)

    def edge_rules(self) -> list[MappingRule]:
        return sorted((r for r in self.mapping.rules
                       if r.target.kind == "edge" and self.runnable(r)),
                      key=lambda r: r.id)

    # -- entity phase ---------------------------------------------------------

    def build_entities(self) -> None:
        for rule in self.entity_rules():
            src = rule.sources[0]
            target_node = self.target.node(rule.target.node_label)
            drivers = self._driver_inodes(src)
            if isinstance(rule.transform, Aggregate) and rule.transform.group_by:
                groups: dict[tuple, list[tuple[str, INode]]] = {}
                order: list[tuple] = []
                for schema_name, inode in drivers:
                    key = tuple(normalize_value(inode.values.get(p))
                                for p in rule.transform.group_by)
                    if key not in groups:
                        groups[key] = []
                        order.append(key)
                    groups[key].append((schema_name, inode))
                for key in order:
                    self._add_entity(rule, target_node, groups[key])
            else:
                for schema_name, inode in drivers:
                    self._add_entity(rule, target_node, [(schema_name, inode)])

    def _driver_inodes(self, src: ElementRef) -> list[tuple[str, INode]]:
        schema = self.source_schemas[src.schema]
        node = schema.node(src.node_label)
        out = []
        for graph in self.sources:
            if graph.schema_ref != src.schema:
                continue
            for inode in sorted(graph.inodes, key=lambda n: n.id):
                if inode.node == node.id:
                    out.append((src.schema, inode))
        return out

    def _add_entity(self, rule: MappingRule, target_node: SchemaNode,
                    drivers: list[tuple[str, INode]]) -> None:
        entity = _Entity([rule.id], target_node.label, target_node.id, list(drivers))
        entity.rule_sources[rule.id] = [i.id for _, i in drivers]
        self.entities.append(entity)
        for _, inode in drivers:
            self.by_driver[(rule.id, inode.id)] = entity

    # -- property phase -------------------------------------------------------

    def apply_property_rules(self) -> None:
        for rule in self.property_rules():
            for entity in self.entities:
                if entity.label != rule.target.node_label:
                    continue
                self._contribute(rule, entity)

    def _contribute(self, rule: MappingRule, entity: _Entity) -> None:
        transform = rule.transform
        if isinstance(transform, Constant):
            drivers = [i.id for _, i in entity.drivers]
            prop = rule.target.property_name
            self._record(entity, rule, prop,
                         [((rule.id, 0, min(drivers)),
                           Contribution(min(drivers), transform.value,
                                        rule.sources[0].schema))],
                         drivers)
            return

        for index, src in enumerate(rule.sources):
            raws = self._source_values(src, entity)
            if not raws:
                continue
            pre = rule.source_transform(index)
            used: list[str] = []
            if isinstance(transform, Aggregate):
                collected: list[Any] = []
                null_count = 0
                for element_id, value in raws:
                    used.append(element_id)
                    if value is None:
                        null_count += 1
                        continue
                    collected.append(self._apply_value(pre, value, element_id))
                folded = _fold(transform, collected, null_count)
                if folded is None:
                    continue
                order = (rule.id, index, min(used))
                prop = rule.target.property_name
                self._record(entity, rule, prop,
                             [(order, Contribution(",".join(sorted(used)), folded,
                                                   src.schema))], used)
            elif isinstance(transform, Split):
                for element_id, value in raws:
                    if value is None:
                        continue
                    used.append(element_id)
                    text = self._apply_value(pre, value, element_id)
                    if not isinstance(text, str):
                        raise TgmError("TYPE_MISMATCH",
                                       f"rule {rule.id}: SPLIT over non-string value "
                                       f"{text!r} at {element_id}")
                    for part in transform.parts:
                        extracted = part.extract(text)
                        if extracted is None:
                            continue
                        self._record(entity, rule, part.property,
                                     [((rule.id, index, element_id),
                                       Contribution(element_id, extracted, src.schema))],
                                     [element_id])
            else:
                prop = rule.target.property_name
                for element_id, value in raws:
                    if value is None:
                        continue
                    used.append(element_id)
                    out = self._apply_value(pre, value, element_id)
                    out = self._apply_value(transform, out, element_id)
                    self._record(entity, rule, prop,
                                 [((rule.id, index, element_id),
                                   Contribution(element_id, out, src.schema))],
                                 [element_id])

    def _record(self, entity: _Entity, rule: MappingRule, prop: str,
                contributions: list[tuple[tuple, Contribution]],
                used: list[str]) -> None:
        entity.contributions.setdefault(prop, []).extend(contributions)
        entity.policies.setdefault(prop, []).append((rule.id, rule.conflict_policy))
        existing = entity.rule_sources.setdefault(rule.id, [])
        for element_id in used:
            if element_id not in existing:
                existing.append(element_id)

    def _apply_value(self, transform, value: Any, element_id: str) -> Any:
        if isinstance(transform, Identity):
            return value
        if isinstance(transform, Translate):
            hit, out = transform.lookup(value)
            if not hit:
                raise TgmError("TRANSLATE_MISS",
                               f"value {value!r} at {element_id} has no translation "
                               "and the table declares no default",
                               element=element_id)
            return out
        if isinstance(transform, Cast):
            return cast_value(value, transform.to)
        if isinstance(transform, Scale):
            if isinstance(value, bool) or not isinstance(value, (int, Decimal, Fraction)):
                raise TgmError("TYPE_MISMATCH",
                               f"SCALE over non-numeric value {value!r} at {element_id}")
            return Fraction(value) * transform.factor + transform.offset
        if isinstance(transform, Constant):
            return transform.value
        raise TgmError("NON_COMPOSABLE",
                       f"transform {type(transform).__name__} is not value-level")

    def _source_values(self, src: ElementRef, entity: _Entity) -> list[tuple[str, Any]]:
        """Values for one source ref: from drivers of the same node, or pulled
        across a single schema edge hop (e.g. a parent's property)."""
        out: list[tuple[str, Any]] = []
        prop = src.property_name if src.kind == "property" else None
        for schema_name, inode in entity.drivers:
            if schema_name != src.schema:
                continue
            schema = self.source_schemas[schema_name]
            driver_node = schema.nodes_by_id[inode.node]
            if src.kind == "property" and driver_node.label == src.node_label:
                out.append((inode.id, inode.values.get(prop)))
            elif src.kind == "property":
                for neighbor in self._hop(schema_name, inode, src.node_label):
                    out.append((neighbor.id, neighbor.values.get(prop)))
        return out

    def _hop(self, schema_name: str, inode: INode, other_label: str) -> list[INode]:
        schema = self.source_schemas[schema_name]
        other = schema.nodes_by_label.get(other_label)
        if other is None:
            return []
        found: list[INode] = []
        for graph in self.sources:
            if graph.schema_ref != schema_name:
                continue
            if inode.id not in graph.inodes_by_id:
                continue
            for iedge in graph.iedges:
                sedge = schema.edges_by_id.get(iedge.edge)
                if sedge is None or inode.id not in iedge.endpoints:
                    continue
                for pos, endpoint_id in enumerate(iedge.endpoints):
                    if endpoint_id == inode.id:
                        continue
                    if sedge.endpoints[pos].node != other.id:
                        continue
                    neighbor = graph.inodes_by_id.get(endpoint_id)
                    if neighbor is not None:
                        found.append(neighbor)
        return sorted(found, key=lambda n: n.id)

    # -- entity merge and resolution -------------------------------------------

    def merge_entities(self) -> None:
        merged: list[_Entity] = []
        by_key: dict[tuple, _Entity] = {}
        for entity in self.entities:
            key_props = self.mapping.key_for(entity.label)
            key = self._entity_key(entity, key_props) if key_props else None
            if key is None:
                merged.append(entity)
                continue
            existing = by_key.get((entity.label,) + key)
            if existing is None:
                by_key[(entity.label,) + key] = entity
                merged.append(entity)
                continue
            existing.rule_ids.extend(r for r in entity.rule_ids
                                     if r not in existing.rule_ids)
            existing.drivers.extend(entity.drivers)
            for prop, contribs in entity.contributions.items():
                existing.contributions.setdefault(prop, []).extend(contribs)
            for prop, pols in entity.policies.items():
                existing.policies.setdefault(prop, []).extend(pols)
            for rid, ids in entity.rule_sources.items():
                bucket = existing.rule_sources.setdefault(rid, [])
                for element_id in ids:
                    if element_id not in bucket:
                        bucket.append(element_id)
            for (rid, driver_id), owner in list(self.by_driver.items()):
                if owner is entity:
                    self.by_driver[(rid, driver_id)] = existing
        self.entities = merged

    def _entity_key(self, entity: _Entity, key_props: tuple[str, ...]) -> tuple | None:
        parts = []
        for prop in key_props:
            value = self._resolve_quietly(entity, prop)
            if value is None:
                return None
            parts.append(normalize_value(value))
        return tuple(parts)

    def _resolve_quietly(self, entity: _Entity, prop: str) -> Any:
        contribs = entity.contributions.get(prop)
        if not contribs:
            return None
        distinct = _distinct(contribs)
        if len(distinct) == 1:
            return distinct[0][1].value
        value, _, _ = self._apply_policy(entity, prop, distinct)
        return value

    def resolve(self) -> list[INode]:
        out: list[INode] = []
        for entity in self.entities:
            node = self.target.node(entity.label)
            values: dict[str, Any] = {}
            pending: list[tuple[str, ConflictRecord]] = []
            for prop, _ in node.properties:
                contribs = entity.contributions.get(prop)
                if not contribs:
                    continue
                distinct = _distinct(contribs)
                record = None
                if len(distinct) == 1:
                    resolved, ok = distinct[0][1].value, True
                else:
                    resolved, ok, record = self._apply_policy(entity, prop, distinct)
                if ok:
                    dtype = node.property_type(prop)
                    try:
                        values[prop] = to_target_value(resolved, dtype)
                    except TgmError as exc:
                        # a resolution artifact (say a fractional mean) that the
                        # declared type cannot carry degrades to an omission
                        if exc.code != "TYPE_MISMATCH" or record is None:
                            raise
                        record = ConflictRecord(
                            record.target_element, record.contributions,
                            record.policy, None, "ERROR", "TYPE_MISMATCH")
                if record is not None:
                    pending.append((prop, record))
            key_props = self.mapping.key_for(entity.label)
            entity_id = self._entity_id(entity, key_props, values)
            out.append(INode(id=entity_id, node=entity.node_id, values=values))
            for prop, record in pending:
                self.conflicts.append(ConflictRecord(
                    f"{entity_id}.{prop}", record.contributions, record.policy,
                    record.resolved, record.severity, record.code))
            for rid in sorted(entity.rule_sources):
                self.provenance.append(ProvenanceEntry(
                    entity_id, rid, tuple(sorted(entity.rule_sources[rid]))))
        return out

    def _entity_id(self, entity: _Entity, key_props: tuple[str, ...] | None,
                   values: dict[str, Any]) -> str:
        if key_props and all(p in values for p in key_props):
            return _content_id(entity.label, [values[p] for p in key_props])
        return _content_id(entity.label, entity.rule_ids[:1] + entity.driver_ids())

    def _apply_policy(self, entity: _Entity, prop: str,
                      distinct: list[tuple[tuple, Contribution]],
                      ) -> tuple[Any, bool, ConflictRecord]:
        policies = sorted(entity.policies.get(prop, []), key=lambda p: p[0])
        policy = policies[0][1] if policies else ConflictPolicy("fail")
        contributions = tuple(c for _, c in distinct)
        ordered = [c for _, c in sorted(distinct, key=lambda t: t[0])]

        if policy.kind == "priority":
            ranked = sorted(
                distinct,
                key=lambda t: (self._rank(policy, t[1]), t[0]))
            resolved: Any = ranked[0][1].value
            ok = True
        elif policy.kind == "mean":
            numeric = [c.value for c in ordered
                       if isinstance(c.value, (int, Decimal, Fraction))
                       and not isinstance(c.value, bool)]
            if not numeric:
                resolved, ok = None, False
            else:
                resolved = sum((Fraction(v) for v in numeric), Fraction(0)) / len(numeric)
                ok = True
        elif policy.kind == "first_non_null":
            resolved = next((c.value for c in ordered if c.value is not None), None)
            ok = resolved is not None
        else:  # fail
            resolved, ok = None, False

        record = ConflictRecord(
            prop, contributions, policy.kind,
            resolved if ok else None,
            "WARNING" if ok else "ERROR",
            code=None if ok else "POLICY_FAIL")
        return resolved, ok, record

    def _rank(self, policy: ConflictPolicy, contribution: Contribution) -> int:
        for i, entry in enumerate(policy.order):
            if entry == contribution.schema or entry.startswith(f"{contribution.schema}:"):
                return i
        return len(policy.order)

    # -- edges -----------------------------------------------------------------

    def apply_edge_rules(self, inode_ids: dict[int, str]) -> None:
        for rule in self.edge_rules():
            src = rule.sources[0]
            schema = self.source_schemas[src.schema]
            sedge = schema.edge(src.ref)
            target_edge = self.target.edge(rule.target.ref)
            entity_rules = [self.mapping.rule(rid) for rid in rule.endpoint_map]
            for graph in self.sources:
                if graph.schema_ref != src.schema:
                    continue
                for iedge in sorted(graph.iedges, key=lambda e: e.id):
                    if iedge.edge != sedge.id:
                        continue
                    endpoints = self._map_endpoints(rule, sedge, iedge, entity_rules,
                                                    inode_ids)
                    target_iedge = self._ensure_iedge(target_edge, endpoints)
                    self.edge_image[iedge.id] = target_iedge.id
                    self._edge_provenance.setdefault(
                        (target_iedge.id, rule.id), []).append(iedge.id)

    _edge_provenance: dict[tuple[str, str], list[str]]

    def _map_endpoints(self, rule: MappingRule, sedge: SchemaEdge, iedge: IEdge,
                       entity_rules: list[MappingRule],
                       inode_ids: dict[int, str]) -> tuple[str, ...]:
        used_positions: set[int] = set()
        endpoints: list[str] = []
        schema = self.source_schemas[rule.sources[0].schema]
        for er in entity_rules:
            source_node = schema.node(er.sources[0].node_label)
            position = next(
                (p for p, ep in enumerate(sedge.endpoints)
                 if ep.node == source_node.id and p not in used_positions), None)
            if position is None:
                raise TgmError("NON_COMPOSABLE",
                               f"rule {rule.id}: no endpoint of {sedge.id} is typed "
                               f"{source_node.label}")
            used_positions.add(position)
            driver_id = iedge.endpoints[position]
            entity = self.by_driver.get((er.id, driver_id))
            if entity is None:
                raise TgmError("NON_COMPOSABLE",
                               f"rule {rule.id}: source node {driver_id} was never "
                               f"lifted by entity rule {er.id}")
            endpoints.append(inode_ids[id(entity)])
        return tuple(endpoints)

    def _ensure_iedge(self, target_edge: SchemaEdge,
                      endpoints: tuple[str, ...]) -> IEdge:
        key = (target_edge.id, endpoints)
        if key not in self.iedges:
            iedge_id = _content_id("ie", [target_edge.id, *endpoints])
            self.iedges[key] = IEdge(id=iedge_id, edge=target_edge.id,
                                     endpoints=endpoints)
        return self.iedges[key]

    def materialize_reference_edges(self, inodes: list[INode]) -> None:
        """Value-join FK-style edges: endpoint roles carry column lists, so a
        child row links to the parent row whose key columns match."""
        explicit = {self.mapping.rule(r.id).target.ref
                    for r in self.edge_rules()}
        by_node: dict[str, list[INode]] = {}
        for inode in inodes:
            by_node.setdefault(inode.node, []).append(inode)
        for edge in self.target.edges:
            if edge.id in explicit or len(edge.endpoints) != 2:
                continue
            if edge.kind not in (EdgeKind.FUNCTION, EdgeKind.AGGREGATION):
                continue
            if edge.kind is EdgeKind.FUNCTION:
                child_ep, parent_ep = edge.endpoints
            else:
                parent_ep, child_ep = edge.endpoints
            child_cols = child_ep.role.split(",")
            parent_cols = parent_ep.role.split(",")
            child_node = self.target.nodes_by_id[child_ep.node]
            parent_node = self.target.nodes_by_id[parent_ep.node]
            if (len(child_cols) != len(parent_cols)
                    or any(child_node.property_type(c) is None for c in child_cols)
                    or any(parent_node.property_type(c) is None for c in parent_cols)):
                continue  # roles are not join columns; nothing to materialize
            parents: dict[tuple, list[INode]] = {}
            for parent in by_node.get(parent_ep.node, []):
                key = tuple(normalize_value(parent.values.get(c)) for c in parent_cols)
                parents.setdefault(key, []).append(parent)
            for child in by_node.get(child_ep.node, []):
                if any(child.values.get(c) is None for c in child_cols):
                    continue
                key = tuple(normalize_value(child.values.get(c)) for c in child_cols)
                candidates = parents.get(key, [])
                if len(candidates) == 1:
                    if edge.kind is EdgeKind.FUNCTION:
                        endpoints = (child.id, candidates[0].id)
                    else:
                        endpoints = (candidates[0].id, child.id)
                    self._ensure_iedge(edge, endpoints)
                elif len(candidates) > 1:
                    self.conflicts.append(ConflictRecord(
                        f"{child_node.label}.{','.join(child_cols)}",
                        tuple(Contribution(p.id, tuple(p.values.get(c)
                                                       for c in parent_cols),
                                           self.target.name)
                              for p in candidates),
                        "fail", None, "ERROR", code="POLICY_FAIL"))

    # -- driver ------------------------------------------------------------------

    def run(self) -> ExecutionResult:
        self._edge_provenance = {}
        for graph in self.sources:
            schema = self.source_schemas.get(graph.schema_ref)
            if schema is None:
                raise TgmError("UNRESOLVED_REFERENCE",
                               f"instance data references unknown schema "
                               f"{graph.schema_ref!r}")
            report = validate_instance(graph, schema)
            if not report.ok:
                first = report.violations[0]
                raise TgmError("SOURCE_INVALID",
                               f"source {graph.schema_ref} does not validate: "
                               f"{first.element}: {first.message}",
                               violations=len(report.violations))

        self.build_entities()
        self.apply_property_rules()
        self.merge_entities()
        inodes = self.resolve()
        inode_ids = {id(e): n.id for e, n in zip(self.entities, inodes)}
        self.apply_edge_rules(inode_ids)
        self.materialize_reference_edges(inodes)

        for (iedge_id, rule_id), source_ids in sorted(self._edge_provenance.items()):
            self.provenance.append(ProvenanceEntry(iedge_id, rule_id,
                                                   tuple(sorted(set(source_ids)))))

        inodes.sort(key=lambda n: (n.node, n.id))
        iedges = sorted(self.iedges.values(), key=lambda e: (e.edge, e.id))
        target = InstanceGraph(self.target.name, tuple(inodes), tuple(iedges))

        report = validate_instance(target, self.target)
        if not report.ok:
            first = report.violations[0]
            raise TgmError("TARGET_INVALID",
                           f"produced instance graph violates the target schema: "
                           f"{first.element}: {first.message}",
                           violations=[f"{v.element}: {v.message}"
                                       for v in report.violations])

        self.provenance.sort(key=lambda p: (p.target_element, p.rule))
        self.conflicts.sort(key=lambda c: (c.target_element, c.policy))
        return ExecutionResult(target, tuple(self.conflicts), tuple(self.provenance),
                               tuple(sorted(self.edge_image.items())))


def _distinct(contribs: list[tuple[tuple, Contribution]]) -> list[tuple[tuple, Contribution]]:
    """Duplicate values merge silently; the first contribution (by order key)
    represents each distinct value."""
    ordered = sorted(contribs, key=lambda t: t[0])
    seen: list = []
    out: list[tuple[tuple, Contribution]] = []
    for order, c in ordered:
        norm = normalize_value(c.value)
        if norm in seen:
            continue
        seen.append(norm)
        out.append((order, c))
    return out


def _fold(agg: Aggregate, values: list[Any], null_count: int) -> Any:
    if agg.fn is AggregateFn.COUNT:
        return len(values) + (null_count if agg.count_nulls else 0)
    if not values:
        return None
    if agg.fn is AggregateFn.SUM:
        return sum((Fraction(v) for v in values), Fraction(0))
    if agg.fn is AggregateFn.MEAN:
        return sum((Fraction(v) for v in values), Fraction(0)) / len(values)
    if agg.fn is AggregateFn.MIN:
        return min(values, key=normalize_value)
    return max(values, key=normalize_value)


def to_target_value(value: Any, dtype: DataType | None) -> Any:
    """Final conversion into the declared target type; decimals with a
    declared scale are quantized half-even."""
    if dtype is None or value is None:
        return value
    out = cast_value(value, dtype)
    if dtype.kind == "decimal" and dtype.scale is not None and isinstance(out, Decimal):
        out = out.quantize(Decimal(1).scaleb(-dtype.scale), rounding=ROUND_HALF_EVEN)
    return out


def execute(source_schemas: Mapping[str, TypedGraphSchema],
            target_schema: TypedGraphSchema,
            mapping: MappingSet,
            sources: list[InstanceGraph]) -> ExecutionResult:
    """Global-as-view evaluation of the mapping set over source snapshots."""
    return _Execution(source_schemas, target_schema, mapping, sources).run()


# --------------------------------------------------------------------------
# per-node views
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ViewResult:
    rows: tuple[dict, ...]
    warnings: tuple[str, ...] = ()


def run_query_view(source_schemas: Mapping[str, TypedGraphSchema],
                   target_schema: TypedGraphSchema,
                   mapping: MappingSet,
                   sources: list[InstanceGraph],
                   target_label: str) -> ViewResult:
    """Execute only the rule slice feeding one target node (plus the nodes
    its reference edges require) and return its instances as rows."""
    if target_schema.nodes_by_label.get(target_label) is None:
        raise TgmError("UNKNOWN_TARGET",
                       f"target schema has no node labeled {target_label!r}")

    labels = {target_label}
    # pull in reference parents so 1..1 edges stay satisfiable
    changed = True
    while changed:
        changed = False
        for edge in target_schema.edges:
            if len(edge.endpoints) != 2:
                continue
            if edge.kind is EdgeKind.FUNCTION:
                child, parent = edge.endpoints
            elif edge.kind is EdgeKind.AGGREGATION:
                parent, child = edge.endpoints
            else:
                continue
            child_label = target_schema.nodes_by_id[child.node].label
            parent_label = target_schema.nodes_by_id[parent.node].label
            if child_label in labels and parent_label not in labels:
                labels.add(parent_label)
                changed = True

    relevant = tuple(r for r in mapping.rules
                     if r.target.kind in ("node", "property")
                     and r.target.node_label in labels)
    warnings = ()
    if not any(r.target.node_label == target_label for r in relevant):
        warnings = (f"UNMAPPED_TARGET: no mapping rules target {target_label!r}",)
    sliced = MappingSet(relevant, tuple((label, props) for label, props
                                        in mapping.keys if label in labels))
    result = execute(source_schemas, target_schema, sliced, sources)

    node = target_schema.node(target_label)
    rows = []
    for inode in result.target.inodes:
        if inode.node != node.id:
            continue
        rows.append({p: inode.values.get(p) for p in node.property_names})
    rows.sort(key=lambda r: tuple(str(r[p]) for p in node.property_names))
    return ViewResult(tuple(rows), warnings)
