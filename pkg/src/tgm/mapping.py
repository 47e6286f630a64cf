"""Mapping rules: the closed transform set, rule compilation, mapping paths
and the extensional commutativity check.

A rule maps one or more source elements onto one target element.  Its kind
is derived, never stored: SPLIT makes it ONE_TO_MANY, multiple sources or
an AGGREGATE make it MANY_TO_ONE, anything else is ONE_TO_ONE.  Rules over
several sources follow merge semantics at execution time: translate each
value into target coding (``per_source``), drop duplicates, then resolve
remaining conflicts by policy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Any, Mapping, Sequence

from .errors import TgmError, parse_error
from .matching import ElementRef
from .model import DataType, InstanceGraph, TypedGraphSchema, nfc, value_conforms


class RuleKind(str, Enum):
    ONE_TO_ONE = "ONE_TO_ONE"
    MANY_TO_ONE = "MANY_TO_ONE"
    ONE_TO_MANY = "ONE_TO_MANY"


# --------------------------------------------------------------------------
# scalar JSON encoding (type-tagged where JSON is ambiguous)
# --------------------------------------------------------------------------


def scalar_to_json(value: Any) -> Any:
    if isinstance(value, Decimal):
        return {"decimal": str(value)}
    if isinstance(value, date):
        return {"date": value.isoformat()}
    if isinstance(value, Fraction):
        return {"fraction": f"{value.numerator}/{value.denominator}"}
    return value


def scalar_from_json(doc: Any) -> Any:
    if isinstance(doc, dict):
        if set(doc) == {"decimal"}:
            return Decimal(doc["decimal"])
        if set(doc) == {"date"}:
            return date.fromisoformat(doc["date"])
        if set(doc) == {"fraction"}:
            num, den = doc["fraction"].split("/")
            return Fraction(int(num), int(den))
        raise parse_error(f"unknown tagged scalar {sorted(doc)}")
    if isinstance(doc, float):
        return Decimal(str(doc))
    return doc


def _rational_to_json(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}" if f.denominator != 1 else str(f.numerator)


def _rational_from_json(doc: Any) -> Fraction:
    if isinstance(doc, bool):
        raise parse_error("rational must be a number or \"num/den\" string")
    if isinstance(doc, int):
        return Fraction(doc)
    if isinstance(doc, (str, Decimal)):
        return Fraction(str(doc))
    raise parse_error("rational must be a number or \"num/den\" string")


# --------------------------------------------------------------------------
# transforms
# --------------------------------------------------------------------------


class AggregateFn(str, Enum):
    SUM = "sum"
    COUNT = "count"
    MEAN = "mean"
    MIN = "min"
    MAX = "max"


@dataclass(frozen=True)
class Identity:
    kind: str = "identity"


@dataclass(frozen=True)
class Cast:
    to: DataType
    kind: str = "cast"


@dataclass(frozen=True)
class Translate:
    """Value recoding; a missing key uses the default or surfaces
    TRANSLATE_MISS when no default exists."""

    table: tuple[tuple[Any, Any], ...]
    default: Any = None
    has_default: bool = False
    kind: str = "translate"

    def __post_init__(self) -> None:
        keys = [k for k, _ in self.table]
        if len(set(map(_norm_key, keys))) != len(keys):
            raise ValueError("translate table keys must be pairwise distinct")

    def lookup(self, value: Any) -> tuple[bool, Any]:
        needle = _norm_key(value)
        for k, v in self.table:
            if _norm_key(k) == needle:
                return True, v
        if self.has_default:
            return True, self.default
        return False, None


def _norm_key(value: Any) -> Any:
    if isinstance(value, str):
        return nfc(value)
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, Decimal)):
        return Fraction(value)
    return value


@dataclass(frozen=True)
class Scale:
    factor: Fraction
    offset: Fraction = Fraction(0)
    kind: str = "scale"


@dataclass(frozen=True)
class Aggregate:
    fn: AggregateFn
    group_by: tuple[str, ...] = ()
    count_nulls: bool = False
    kind: str = "aggregate"


@dataclass(frozen=True)
class SplitPart:
    """One output of a SPLIT: either token `index` after cutting at
    `delimiter`, or the fixed-width slice [start, end)."""

    property: str
    delimiter: str | None = None
    index: int | None = None
    start: int | None = None
    end: int | None = None

    def __post_init__(self) -> None:
        by_delim = self.delimiter is not None and self.index is not None
        by_width = self.start is not None and self.end is not None
        if by_delim == by_width:
            raise ValueError("split part needs either delimiter+index or start+end")

    def extract(self, text: str) -> str | None:
        if self.delimiter is not None:
            tokens = text.split(self.delimiter)
            if 0 <= self.index < len(tokens):
                return tokens[self.index]
            return None
        return text[self.start:self.end]


@dataclass(frozen=True)
class Split:
    parts: tuple[SplitPart, ...]
    kind: str = "split"

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValueError("split needs at least one part")
        widths = sorted((p.start, p.end) for p in self.parts
                        if p.start is not None)
        for (s1, e1), (s2, _) in zip(widths, widths[1:]):
            if s2 < e1:
                raise ValueError("fixed-width split ranges must not overlap")
        names = [p.property for p in self.parts]
        if len(set(names)) != len(names):
            raise ValueError("split parts must target distinct properties")


@dataclass(frozen=True)
class Constant:
    value: Any
    kind: str = "constant"


Transform = Identity | Cast | Translate | Scale | Aggregate | Split | Constant


def transform_to_json(t: Transform) -> dict:
    if isinstance(t, Identity):
        return {"kind": "identity"}
    if isinstance(t, Cast):
        from .formats import _type_to_json  # late import avoids a cycle
        return {"kind": "cast", "to": _type_to_json(t.to, {})}
    if isinstance(t, Translate):
        out: dict[str, Any] = {
            "kind": "translate",
            "table": [{"from": scalar_to_json(k), "to": scalar_to_json(v)}
                      for k, v in t.table],
        }
        if t.has_default:
            out["default"] = scalar_to_json(t.default)
        return out
    if isinstance(t, Scale):
        return {"kind": "scale", "factor": _rational_to_json(t.factor),
                "offset": _rational_to_json(t.offset)}
    if isinstance(t, Aggregate):
        out = {"kind": "aggregate", "fn": t.fn.value, "groupBy": list(t.group_by)}
        if t.count_nulls:
            out["countNulls"] = True
        return out
    if isinstance(t, Split):
        parts = []
        for p in t.parts:
            if p.delimiter is not None:
                parts.append({"property": p.property, "delimiter": p.delimiter,
                              "index": p.index})
            else:
                parts.append({"property": p.property, "start": p.start, "end": p.end})
        return {"kind": "split", "parts": parts}
    if isinstance(t, Constant):
        return {"kind": "constant", "value": scalar_to_json(t.value)}
    raise TgmError("PARSE_ERROR", f"unknown transform {t!r}")


def transform_from_json(doc: Any, pointer: str = "/transform") -> Transform:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise parse_error("transform must be an object with a kind", pointer=pointer)
    kind = doc["kind"]
    try:
        if kind == "identity":
            _check_keys(doc, {"kind"}, pointer)
            return Identity()
        if kind == "cast":
            _check_keys(doc, {"kind", "to"}, pointer)
            from .formats import _type_from_json
            return Cast(to=_type_from_json(doc["to"], {}, f"{pointer}/to"))
        if kind == "translate":
            _check_keys(doc, {"kind", "table", "default"}, pointer)
            raw = doc["table"]
            if isinstance(raw, dict):
                table = tuple((k, scalar_from_json(v)) for k, v in raw.items())
            elif isinstance(raw, list):
                table = tuple((scalar_from_json(e["from"]), scalar_from_json(e["to"]))
                              for e in raw)
            else:
                raise parse_error("translate table must be an object or pair list",
                                  pointer=f"{pointer}/table")
            if "default" in doc:
                return Translate(table, scalar_from_json(doc["default"]), True)
            return Translate(table)
        if kind == "scale":
            _check_keys(doc, {"kind", "factor", "offset"}, pointer)
            return Scale(factor=_rational_from_json(doc["factor"]),
                         offset=_rational_from_json(doc.get("offset", 0)))
        if kind == "aggregate":
            _check_keys(doc, {"kind", "fn", "groupBy", "countNulls"}, pointer)
            return Aggregate(fn=AggregateFn(doc["fn"]),
                             group_by=tuple(doc.get("groupBy", [])),
                             count_nulls=bool(doc.get("countNulls", False)))
        if kind == "split":
            _check_keys(doc, {"kind", "parts"}, pointer)
            parts = []
            for i, p in enumerate(doc["parts"]):
                _check_keys(p, {"property", "delimiter", "index", "start", "end"},
                            f"{pointer}/parts/{i}")
                parts.append(SplitPart(property=p["property"],
                                       delimiter=p.get("delimiter"),
                                       index=p.get("index"),
                                       start=p.get("start"), end=p.get("end")))
            return Split(tuple(parts))
        if kind == "constant":
            _check_keys(doc, {"kind", "value"}, pointer)
            return Constant(scalar_from_json(doc["value"]))
    except ValueError as exc:
        raise parse_error(str(exc), pointer=pointer) from exc
    raise parse_error(f"unknown transform kind {kind!r}", pointer=f"{pointer}/kind")


def _check_keys(doc: dict, allowed: set, pointer: str) -> None:
    for key in doc:
        if key not in allowed:
            raise parse_error(f"unknown field {key!r}", pointer=f"{pointer}/{key}")


# --------------------------------------------------------------------------
# conflict policies
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConflictPolicy:
    """PRIORITY carries an ordered preference list matched against source
    refs ("schema:ref") or bare schema names."""

    kind: str  # priority|mean|first_non_null|fail
    order: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("priority", "mean", "first_non_null", "fail"):
            raise ValueError(f"unknown conflict policy {self.kind!r}")
        if self.kind == "priority" and not self.order:
            raise ValueError("priority policy needs an order list")

    def rank(self, source: ElementRef) -> int:
        for i, entry in enumerate(self.order):
            if entry == str(source) or entry == source.schema:
                return i
        return len(self.order)

    def to_json(self) -> Any:
        if self.kind == "priority":
            return {"priority": list(self.order)}
        return self.kind

    @staticmethod
    def from_json(doc: Any, pointer: str = "/conflictPolicy") -> "ConflictPolicy":
        if isinstance(doc, str):
            try:
                return ConflictPolicy(doc)
            except ValueError as exc:
                raise parse_error(str(exc), pointer=pointer) from exc
        if isinstance(doc, dict) and set(doc) == {"priority"}:
            return ConflictPolicy("priority", tuple(doc["priority"]))
        raise parse_error("conflictPolicy must be a name or {\"priority\": [...]}",
                          pointer=pointer)


FAIL_POLICY = ConflictPolicy("fail")


# --------------------------------------------------------------------------
# rules
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MappingRule:
    id: str
    sources: tuple[ElementRef, ...]
    target: ElementRef
    transform: Transform = Identity()
    conflict_policy: ConflictPolicy = FAIL_POLICY
    reliability: int | None = None  # 1..3, ONE_TO_MANY only
    per_source: tuple[Transform, ...] = ()  # value recoding before merge/aggregate
    endpoint_map: tuple[str, ...] = ()  # entity rule ids, for edge targets

    def __post_init__(self) -> None:
        if not self.sources:
            raise ValueError(f"rule {self.id}: sources must be non-empty")
        if self.per_source and len(self.per_source) != len(self.sources):
            raise ValueError(f"rule {self.id}: perSource must align with sources")
        if self.reliability is not None and not (1 <= self.reliability <= 3):
            raise ValueError(f"rule {self.id}: reliability must be 1..3")

    @property
    def kind(self) -> RuleKind:
        if isinstance(self.transform, Split):
            return RuleKind.ONE_TO_MANY
        if len(self.sources) > 1 or isinstance(self.transform, Aggregate):
            return RuleKind.MANY_TO_ONE
        return RuleKind.ONE_TO_ONE

    @property
    def effective_reliability(self) -> int:
        return self.reliability if self.reliability is not None else 2

    def source_transform(self, index: int) -> Transform:
        return self.per_source[index] if self.per_source else Identity()

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "id": self.id,
            "sources": [s.to_json() for s in self.sources],
            "target": self.target.to_json(),
            "transform": transform_to_json(self.transform),
            "conflictPolicy": self.conflict_policy.to_json(),
        }
        if self.reliability is not None:
            out["reliability"] = self.reliability
        if self.per_source:
            out["perSource"] = [transform_to_json(t) for t in self.per_source]
        if self.endpoint_map:
            out["endpointMap"] = list(self.endpoint_map)
        return out

    @staticmethod
    def from_json(doc: dict, pointer: str = "") -> "MappingRule":
        allowed = {"id", "sources", "target", "transform", "conflictPolicy",
                   "reliability", "perSource", "endpointMap"}
        for key in doc:
            if key not in allowed:
                raise parse_error(f"unknown field {key!r}", pointer=f"{pointer}/{key}")
        for key in ("id", "sources", "target", "transform", "conflictPolicy"):
            if key not in doc:
                raise parse_error(f"missing field {key!r}", pointer=pointer)
        try:
            return MappingRule(
                id=doc["id"],
                sources=tuple(ElementRef.from_json(s) for s in doc["sources"]),
                target=ElementRef.from_json(doc["target"]),
                transform=transform_from_json(doc["transform"], f"{pointer}/transform"),
                conflict_policy=ConflictPolicy.from_json(doc["conflictPolicy"],
                                                         f"{pointer}/conflictPolicy"),
                reliability=doc.get("reliability"),
                per_source=tuple(transform_from_json(t, f"{pointer}/perSource/{i}")
                                 for i, t in enumerate(doc.get("perSource", []))),
                endpoint_map=tuple(doc.get("endpointMap", [])),
            )
        except ValueError as exc:
            raise parse_error(str(exc), pointer=pointer) from exc


@dataclass(frozen=True)
class MappingSet:
    """The project's rule collection plus per-target-node dedup keys."""

    rules: tuple[MappingRule, ...] = ()
    keys: tuple[tuple[str, tuple[str, ...]], ...] = ()  # target label -> key props

    def __post_init__(self) -> None:
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ValueError("rule ids must be unique")

    def rule(self, rule_id: str) -> MappingRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise TgmError("UNKNOWN_CORRESPONDENCE", f"no mapping rule {rule_id!r}")

    def key_for(self, target_label: str) -> tuple[str, ...] | None:
        for label, props in self.keys:
            if label == target_label:
                return props
        return None

    def to_json(self) -> dict:
        return {"rules": [r.to_json() for r in self.rules],
                "keys": {label: list(props) for label, props in self.keys}}

    @staticmethod
    def from_json(doc: Any) -> "MappingSet":
        if not isinstance(doc, dict):
            raise parse_error("mapping file must be an object")
        for key in doc:
            if key not in ("rules", "keys"):
                raise parse_error(f"unknown field {key!r}", pointer=f"/{key}")
        if "rules" not in doc:
            raise parse_error("missing field 'rules'")
        rules = tuple(MappingRule.from_json(r, f"/rules/{i}")
                      for i, r in enumerate(doc["rules"]))
        keys = tuple((label, tuple(props))
                     for label, props in doc.get("keys", {}).items())
        try:
            return MappingSet(rules, keys)
        except ValueError as exc:
            raise parse_error(str(exc)) from exc


def parse_mapping(text: str, filename: str | None = None) -> MappingSet:
    try:
        doc = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise parse_error(f"invalid JSON{': ' + filename if filename else ''}: {exc.msg}",
                          line=exc.lineno, column=exc.colno) from exc
    return MappingSet.from_json(doc)


def dumps_mapping(mapping: MappingSet) -> str:
    return json.dumps(mapping.to_json(), indent=2, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# compilation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CompileContext:
    schemas: Mapping[str, TypedGraphSchema]  # sources and target, by name
    target_schema: str
    accepted: frozenset[tuple[ElementRef, ElementRef]] = frozenset()


@dataclass(frozen=True)
class CompiledRule:
    rule: MappingRule
    warnings: tuple[str, ...] = ()


def _resolve(ref: ElementRef, ctx: CompileContext) -> DataType | None:
    """Check the ref resolves; return the property type when it names one."""
    schema = ctx.schemas.get(ref.schema)
    if schema is None:
        raise TgmError("UNRESOLVED_REFERENCE", f"unknown schema {ref.schema!r}")
    if ref.kind == "edge":
        schema.edge(ref.ref)
        return None
    node = schema.nodes_by_label.get(ref.node_label)
    if node is None:
        raise TgmError("UNRESOLVED_REFERENCE",
                       f"schema {ref.schema}: no node labeled {ref.node_label!r}")
    if ref.kind == "property":
        dtype = node.property_type(ref.property_name)
        if dtype is None:
            raise TgmError("UNRESOLVED_REFERENCE",
                           f"schema {ref.schema}: no property {ref.ref!r}")
        return dtype
    return None


def compile_rule(rule: MappingRule, ctx: CompileContext) -> CompiledRule:
    """Resolve references, type-check the transform against the endpoint
    types and report UNMATCHED_RULE warnings for pairs the expert never
    accepted."""
    source_types = [_resolve(s, ctx) for s in rule.sources]
    target_type = _resolve(rule.target, ctx)
    if rule.target.schema != ctx.target_schema.name:
        raise TgmError("UNRESOLVED_REFERENCE",
                       f"rule {rule.id}: target must live in schema "
                       f"{ctx.target_schema.name!r}")

    t = rule.transform
    if isinstance(t, Split):
        if len(rule.sources) != 1:
            raise TgmError("ARITY_MISMATCH",
                           f"rule {rule.id}: SPLIT takes exactly one source")
        if rule.target.kind != "node":
            raise TgmError("ARITY_MISMATCH",
                           f"rule {rule.id}: SPLIT targets a node whose properties "
                           "the parts name")
        target_node = ctx.schemas[rule.target.schema].node(rule.target.node_label)
        for part in t.parts:
            if target_node.property_type(part.property) is None:
                raise TgmError("UNRESOLVED_REFERENCE",
                               f"rule {rule.id}: split part targets unknown property "
                               f"{rule.target.node_label}.{part.property}")
        if source_types[0] is not None and source_types[0].kind != "string":
            raise TgmError("TYPE_MISMATCH",
                           f"rule {rule.id}: SPLIT needs a string source")
    if isinstance(t, Scale):
        for s, st in zip(rule.sources, source_types):
            if st is not None and not st.is_numeric:
                raise TgmError("TYPE_MISMATCH",
                               f"rule {rule.id}: SCALE over non-numeric source {s}")
        if target_type is not None and not target_type.is_numeric:
            raise TgmError("TYPE_MISMATCH",
                           f"rule {rule.id}: SCALE into non-numeric target {rule.target}")
    if isinstance(t, Aggregate) and t.fn in (AggregateFn.SUM, AggregateFn.MEAN):
        for s, st in zip(rule.sources, source_types):
            if st is not None and not st.is_numeric:
                raise TgmError("TYPE_MISMATCH",
                               f"rule {rule.id}: {t.fn.value.upper()} over "
                               f"non-numeric source {s}")
    if isinstance(t, Cast) and target_type is not None and t.to.kind != target_type.kind:
        raise TgmError("TYPE_MISMATCH",
                       f"rule {rule.id}: CAST to {t.to.kind} but target is "
                       f"{target_type.kind}")
    if isinstance(t, Translate):
        _check_translate(rule.id, t, source_types[0] if len(source_types) == 1 else None,
                         target_type)
    for i, pt in enumerate(rule.per_source):
        if isinstance(pt, Translate):
            _check_translate(rule.id, pt, source_types[i], target_type)
        elif isinstance(pt, (Split, Aggregate)):
            raise TgmError("ARITY_MISMATCH",
                           f"rule {rule.id}: perSource transforms must be value-level")

    if isinstance(t, Aggregate) and t.group_by:
        if rule.sources[0].kind == "node":
            src_node = ctx.schemas[rule.sources[0].schema].node(rule.sources[0].node_label)
            for prop in t.group_by:
                if src_node.property_type(prop) is None:
                    raise TgmError("UNRESOLVED_REFERENCE",
                                   f"rule {rule.id}: groupBy property {prop!r} not in "
                                   f"{rule.sources[0].node_label}")

    if rule.endpoint_map:
        if rule.target.kind != "edge":
            raise TgmError("ARITY_MISMATCH",
                           f"rule {rule.id}: endpointMap only applies to edge targets")
        edge = ctx.schemas[rule.target.schema].edge(rule.target.ref)
        if len(rule.endpoint_map) != len(edge.endpoints):
            raise TgmError("ARITY_MISMATCH",
                           f"rule {rule.id}: endpointMap has {len(rule.endpoint_map)} "
                           f"entries, edge has {len(edge.endpoints)} endpoints")

    warnings = []
    for s in rule.sources:
        if (s, rule.target) not in ctx.accepted:
            warnings.append(f"UNMATCHED_RULE: rule {rule.id}: no accepted "
                            f"correspondence backs {s} -> {rule.target}")
    return CompiledRule(rule, tuple(warnings))


def _check_translate(rule_id: str, t: Translate, source_type: DataType | None,
                     target_type: DataType | None) -> None:
    for k, v in t.table:
        if source_type is not None and value_conforms(k, source_type):
            raise TgmError("TYPE_MISMATCH",
                           f"rule {rule_id}: translate key {k!r} does not conform to "
                           f"the source type ({source_type.kind})")
        if target_type is not None and value_conforms(v, target_type):
            raise TgmError("TYPE_MISMATCH",
                           f"rule {rule_id}: translate value {v!r} does not conform to "
                           f"the target type ({target_type.kind})")


def compile_mapping(mapping: MappingSet, ctx: CompileContext) -> list[CompiledRule]:
    return [compile_rule(r, ctx) for r in mapping.rules]


def make_merge(rule_id: str, sources: Sequence[ElementRef], target: ElementRef,
               policy: ConflictPolicy,
               translations: Sequence[Transform | None] | None = None) -> MappingRule:
    """A MANY_TO_ONE merge: per-source recoding, duplicate removal, then the
    conflict policy over whatever distinct values remain."""
    if len(sources) < 2:
        raise TgmError("ARITY_MISMATCH", f"rule {rule_id}: merge needs at least 2 sources")
    per_source: tuple[Transform, ...] = ()
    if translations is not None:
        if len(translations) != len(sources):
            raise TgmError("ARITY_MISMATCH",
                           f"rule {rule_id}: one translation per source required")
        per_source = tuple(t if t is not None else Identity() for t in translations)
    return MappingRule(id=rule_id, sources=tuple(sources), target=target,
                       transform=Identity(), conflict_policy=policy,
                       per_source=per_source)


# --------------------------------------------------------------------------
# mapping paths
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MappingPath:
    rule_ids: tuple[str, ...]
    from_ref: ElementRef
    to_ref: ElementRef

    def to_json(self) -> dict:
        return {"rules": list(self.rule_ids),
                "from": self.from_ref.to_json(), "to": self.to_ref.to_json()}


DEFAULT_MAX_PATH_LENGTH = 4


def enumerate_paths(mapping: MappingSet, from_ref: ElementRef, to_ref: ElementRef,
                    max_length: int = DEFAULT_MAX_PATH_LENGTH) -> list[MappingPath]:
    """All simple composable rule chains from_ref -> to_ref, shortest first,
    ties broken by the lexicographic rule-id sequence."""
    if max_length < 1:
        raise TgmError("ARITY_MISMATCH", "max path length must be at least 1")
    if from_ref == to_ref:
        return []
    by_source: dict[ElementRef, list[MappingRule]] = {}
    for r in mapping.rules:
        for s in r.sources:
            by_source.setdefault(s, []).append(r)
    for rules in by_source.values():
        rules.sort(key=lambda r: r.id)

    found: list[tuple[str, ...]] = []

    def walk(current: ElementRef, chain: tuple[str, ...], used: frozenset[str]) -> None:
        if len(chain) >= max_length:
            return
        for r in by_source.get(current, []):
            if r.id in used:
                continue
            if r.target == to_ref:
                found.append(chain + (r.id,))
            if len(chain) + 1 < max_length and r.target != to_ref:
                walk(r.target, chain + (r.id,), used | {r.id})

    walk(from_ref, (), frozenset())
    found.sort(key=lambda ids: (len(ids), ids))
    return [MappingPath(ids, from_ref, to_ref) for ids in found]


# --------------------------------------------------------------------------
# chain evaluation and commutativity
# --------------------------------------------------------------------------


class ChainMiss(Exception):
    """A TRANSLATE with no default hit an unmapped value."""

    def __init__(self, value: Any) -> None:
        super().__init__(f"unmapped value {value!r}")
        self.value = value


def apply_value_transform(t: Transform, value: Any) -> Any:
    """One transform over one value, as used along mapping paths.  An
    AGGREGATE over a single value passes it through (COUNT yields 1)."""
    if isinstance(t, Identity):
        return value
    if isinstance(t, Constant):
        return t.value
    if isinstance(t, Cast):
        return cast_value(value, t.to)
    if isinstance(t, Translate):
        hit, out = t.lookup(value)
        if not hit:
            raise ChainMiss(value)
        return out
    if isinstance(t, Scale):
        if isinstance(value, bool) or not isinstance(value, (int, Decimal, Fraction)):
            raise TgmError("TYPE_MISMATCH", f"SCALE over non-numeric value {value!r}")
        return Fraction(value) * t.factor + t.offset
    if isinstance(t, Aggregate):
        return 1 if t.fn is AggregateFn.COUNT else value
    raise TgmError("NON_COMPOSABLE", f"{type(t).__name__} cannot run on a value chain")


def cast_value(value: Any, to: DataType) -> Any:
    kind = to.kind
    try:
        if kind == "string":
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, date):
                return value.isoformat()
            if isinstance(value, Fraction):
                value = fraction_to_decimal(value, to.scale)
            return str(value)
        if kind == "integer":
            if isinstance(value, bool):
                return int(value)
            if isinstance(value, str):
                return int(value.strip())
            if isinstance(value, Decimal):
                if value == value.to_integral_value():
                    return int(value)
                raise ValueError(f"{value} is not integral")
            if isinstance(value, Fraction):
                if value.denominator == 1:
                    return value.numerator
                raise ValueError(f"{value} is not integral")
            return int(value)
        if kind == "decimal":
            if isinstance(value, bool):
                raise ValueError("boolean is not a decimal")
            if isinstance(value, Fraction):
                return fraction_to_decimal(value, to.scale)
            if isinstance(value, (int, str)):
                return Decimal(str(value).strip())
            return value
        if kind == "boolean":
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.strip().lower() in ("true", "false"):
                return value.strip().lower() == "true"
            raise ValueError(f"{value!r} is not a boolean")
        if kind == "date":
            if isinstance(value, date):
                return value
            if isinstance(value, str):
                return date.fromisoformat(value.strip())
            raise ValueError(f"{value!r} is not a date")
        return value  # enum/composite casts pass through; validation reports misuse
    except (ValueError, ArithmeticError) as exc:
        raise TgmError("TYPE_MISMATCH", f"cannot cast {value!r} to {kind}: {exc}") from exc


DEFAULT_DECIMAL_PLACES = 6


def fraction_to_decimal(value: Fraction, scale: int | None) -> Decimal:
    """Exact when the denominator is 10-smooth; otherwise rounds half-even
    to the declared scale (or 6 places when none is declared)."""
    num, den = value.numerator, value.denominator
    d = den
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d == 1 and scale is None:
        return Decimal(num) / Decimal(den)
    places = scale if scale is not None else DEFAULT_DECIMAL_PLACES
    q = Decimal(1).scaleb(-places)
    return (Decimal(num) / Decimal(den)).quantize(q)


def normalize_value(value: Any) -> Any:
    """Comparison form: numerics as Fraction, strings NFC-normalized.
    Booleans carry a tag so they never collide with 0/1."""
    if isinstance(value, bool):
        return ("b", value)
    if isinstance(value, (int, Decimal, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return nfc(value)
    return value


def values_equal(a: Any, b: Any) -> bool:
    return normalize_value(a) == normalize_value(b)


@dataclass(frozen=True)
class CommutativityResult:
    commutes: bool
    vacuous: bool = False
    counterexamples: tuple[dict, ...] = ()

    def to_json(self) -> dict:
        return {"commutes": self.commutes, "vacuous": self.vacuous,
                "counterexamples": list(self.counterexamples)}


MAX_COUNTEREXAMPLES = 100


def path_from_rule_ids(mapping: MappingSet, rule_ids: Sequence[str],
                       from_ref: ElementRef | None = None) -> MappingPath:
    """Reconstruct a path from its rule-id chain.  Without an explicit start
    the first rule must have exactly one source."""
    ids = tuple(rule_ids)
    if not ids:
        raise TgmError("NON_COMPOSABLE", "a path needs at least one rule")
    first = mapping.rule(ids[0])
    if from_ref is None:
        if len(first.sources) != 1:
            raise TgmError("NON_COMPOSABLE",
                           f"rule {first.id} has {len(first.sources)} sources; "
                           "pass the start element explicitly")
        from_ref = first.sources[0]
    last = mapping.rule(ids[-1])
    path = MappingPath(ids, from_ref, last.target)
    _chain_rules(mapping, path)  # validates composability
    return path


def _chain_rules(mapping: MappingSet, path: MappingPath) -> list[MappingRule]:
    rules = [mapping.rule(rid) for rid in path.rule_ids]
    current = path.from_ref
    for r in rules:
        if current not in r.sources:
            raise TgmError("NON_COMPOSABLE",
                           f"rule {r.id} does not consume {current}")
        current = r.target
    if rules and current != path.to_ref:
        raise TgmError("NON_COMPOSABLE",
                       f"path ends at {current}, declared to end at {path.to_ref}")
    if not rules:
        raise TgmError("NON_COMPOSABLE", "a path needs at least one rule")
    return rules


def _evaluate_chain(rules: list[MappingRule], start: ElementRef, value: Any) -> Any:
    current_ref = start
    current = value
    for r in rules:
        idx = r.sources.index(current_ref)
        try:
            current = apply_value_transform(r.source_transform(idx), current)
            current = apply_value_transform(r.transform, current)
        except ChainMiss as miss:
            return {"error": "TRANSLATE_MISS", "value": scalar_to_json(miss.value)}
        current_ref = r.target
    return current


def check_commutativity(mapping: MappingSet, p1: MappingPath, p2: MappingPath,
                        witness: InstanceGraph,
                        schema: TypedGraphSchema) -> CommutativityResult:
    """Evaluate both paths over every applicable witness element; they
    commute iff every element yields equal values on both routes."""
    if p1.from_ref != p2.from_ref or p1.to_ref != p2.to_ref:
        raise TgmError("NON_COMPOSABLE",
                       "paths must share their start and end elements")
    if p1.from_ref.kind != "property":
        raise TgmError("NON_COMPOSABLE",
                       "commutativity is checked over property value chains")
    rules1 = _chain_rules(mapping, p1)
    rules2 = _chain_rules(mapping, p2)

    node = schema.nodes_by_label.get(p1.from_ref.node_label)
    if node is None:
        raise TgmError("UNRESOLVED_REFERENCE",
                       f"witness schema has no node {p1.from_ref.node_label!r}")
    prop = p1.from_ref.property_name

    applicable = [n for n in witness.inodes
                  if n.node == node.id and n.values.get(prop) is not None]
    if not applicable:
        return CommutativityResult(commutes=True, vacuous=True)

    counterexamples = []
    for inode in sorted(applicable, key=lambda n: n.id):
        v1 = _evaluate_chain(rules1, p1.from_ref, inode.values[prop])
        v2 = _evaluate_chain(rules2, p2.from_ref, inode.values[prop])
        if isinstance(v1, dict) or isinstance(v2, dict):
            equal = v1 == v2  # both unmapped in the same way counts as agreement
        else:
            equal = values_equal(v1, v2)
        if not equal and len(counterexamples) < MAX_COUNTEREXAMPLES:
            counterexamples.append({
                "element": inode.id,
                "input": scalar_to_json(inode.values[prop]),
                "via1": _result_json(v1),
                "via2": _result_json(v2),
            })
    return CommutativityResult(commutes=not counterexamples,
                               counterexamples=tuple(counterexamples))


def _result_json(value: Any) -> Any:
    if isinstance(value, dict):
        return value
    if isinstance(value, Fraction):
        return scalar_to_json(fraction_to_decimal(value, None)
                              if value.denominator != 1 else value.numerator)
    return scalar_to_json(value)
