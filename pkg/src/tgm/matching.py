"""Schema matching: similarity signals, match proposal and expert decisions.

Matching is many-to-many at proposal time; an expert accepts or rejects each
proposed correspondence, and at most one ACCEPTED record may exist per
(source element, target element) pair.  All scores are exact rationals in
[0, 1] so proposal order is reproducible bit-for-bit.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable

from .errors import TgmError
from .model import DataType, SchemaEdge, SchemaNode, TypedGraphSchema

NUMERIC_CHAIN = ("integer", "decimal", "string")


# --------------------------------------------------------------------------
# element references and correspondences
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ElementRef:
    """Points at a node (by label), a property ("Label.prop") or an edge (by id)."""

    schema: str
    kind: str  # node|property|edge
    ref: str

    def __post_init__(self) -> None:
        if self.kind not in ("node", "property", "edge"):
            raise ValueError(f"unknown element kind {self.kind!r}")
        if self.kind == "property" and "." not in self.ref:
            raise ValueError(f"property ref {self.ref!r} must be Label.property")

    @property
    def node_label(self) -> str:
        return self.ref.split(".", 1)[0] if self.kind == "property" else self.ref

    @property
    def property_name(self) -> str:
        return self.ref.split(".", 1)[1]

    def __str__(self) -> str:
        return f"{self.schema}:{self.ref}"

    def to_json(self) -> dict:
        return {"schema": self.schema, "kind": self.kind, "ref": self.ref}

    @staticmethod
    def from_json(doc: dict) -> "ElementRef":
        return ElementRef(doc["schema"], doc["kind"], doc["ref"])

    @staticmethod
    def parse(text: str, kind: str | None = None) -> "ElementRef":
        """Inverse of str(): "schema:Label", "schema:Label.prop", "schema:edge_id".
        Without an explicit kind, a dotted ref reads as a property."""
        schema, sep, ref = text.partition(":")
        if not sep or not schema or not ref:
            raise ValueError(f"element reference {text!r} must be schema:ref")
        if kind is None:
            kind = "property" if "." in ref else "node"
        return ElementRef(schema, kind, ref)


class Status(str, Enum):
    PROPOSED = "PROPOSED"
    ACCEPTED = "ACCEPTED"
    REJECTED = "REJECTED"


@dataclass(frozen=True)
class Correspondence:
    id: str
    source: ElementRef
    target: ElementRef
    confidence: Fraction
    evidence: tuple[tuple[str, Fraction], ...]
    status: Status = Status.PROPOSED
    decided_by: str | None = None

    def __post_init__(self) -> None:
        if not (0 <= self.confidence <= 1):
            raise ValueError("confidence must lie in [0, 1]")
        for name, score in self.evidence:
            if not (0 <= score <= 1):
                raise ValueError(f"evidence {name} score must lie in [0, 1]")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "confidence": _fraction_to_json(self.confidence),
            "evidence": [{"signal": n, "score": _fraction_to_json(s)}
                         for n, s in self.evidence],
            "status": self.status.value,
            "decidedBy": self.decided_by,
        }

    @staticmethod
    def from_json(doc: dict) -> "Correspondence":
        return Correspondence(
            id=doc["id"],
            source=ElementRef.from_json(doc["source"]),
            target=ElementRef.from_json(doc["target"]),
            confidence=_fraction_from_json(doc["confidence"]),
            evidence=tuple((e["signal"], _fraction_from_json(e["score"]))
                           for e in doc["evidence"]),
            status=Status(doc["status"]),
            decided_by=doc.get("decidedBy"),
        )


def _fraction_to_json(f: Fraction) -> dict:
    return {"num": f.numerator, "den": f.denominator}


def _fraction_from_json(doc) -> Fraction:
    if isinstance(doc, dict):
        return Fraction(doc["num"], doc["den"])
    return Fraction(doc)


# --------------------------------------------------------------------------
# synonym table
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SynonymTable:
    """Expert vocabulary: groups force similarity 1, distinct pairs force 0."""

    groups: tuple[tuple[str, ...], ...] = ()
    distinct: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        for g in self.groups + self.distinct:
            if not g:
                raise ValueError("synonym groups must be non-empty")

    def same_group(self, a: str, b: str) -> bool:
        na, nb = normalize_name(a), normalize_name(b)
        for g in self.groups:
            terms = {normalize_name(t) for t in g}
            if na in terms and nb in terms:
                return True
        return False

    def forced_distinct(self, a: str, b: str) -> bool:
        na, nb = normalize_name(a), normalize_name(b)
        if na == nb:
            return False  # a distinct list separates different names only
        for g in self.distinct:
            terms = {normalize_name(t) for t in g}
            if na in terms and nb in terms:
                return True
        return False

    def to_json(self) -> dict:
        return {"groups": [list(g) for g in self.groups],
                "distinct": [list(g) for g in self.distinct]}

    @staticmethod
    def from_json(doc: dict) -> "SynonymTable":
        for key in doc:
            if key not in ("groups", "distinct"):
                raise TgmError("PARSE_ERROR", f"unknown synonym field {key!r}")
        return SynonymTable(
            groups=tuple(tuple(g) for g in doc.get("groups", [])),
            distinct=tuple(tuple(g) for g in doc.get("distinct", [])),
        )


EMPTY_SYNONYMS = SynonymTable()


# --------------------------------------------------------------------------
# similarity signals
# --------------------------------------------------------------------------

_CAMEL_SPLIT = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")
_NON_ALNUM = re.compile(r"[^0-9a-zA-Z]+")


def tokenize_name(name: str) -> list[str]:
    """camelCase/snake_case/punctuation split, case-folded, NFC-normalized."""
    text = unicodedata.normalize("NFC", name)
    parts = _NON_ALNUM.split(text)
    tokens = []
    for part in parts:
        for tok in _CAMEL_SPLIT.split(part):
            if tok:
                tokens.append(tok.casefold())
    return tokens


def normalize_name(name: str) -> str:
    return "".join(tokenize_name(name))


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[len(b)]


def name_similarity(a: str, b: str, synonyms: SynonymTable = EMPTY_SYNONYMS) -> Fraction:
    """1 for equal normalized forms or synonym-group members, 0 for forced
    homonyms, otherwise 1 - Levenshtein/maxlen on the normalized forms."""
    if synonyms.forced_distinct(a, b):
        return Fraction(0)
    if synonyms.same_group(a, b):
        return Fraction(1)
    na, nb = normalize_name(a), normalize_name(b)
    if na == nb:
        return Fraction(1)
    if not na or not nb:
        return Fraction(0)
    dist = levenshtein(na, nb)
    return Fraction(1) - Fraction(dist, max(len(na), len(nb)))


def type_compatibility(a: DataType, b: DataType) -> Fraction:
    """Fixed table: same kind 1, widening-chain kinds 4/5, string vs
    enumeration 1/2, disjoint 0."""
    if a.kind == b.kind:
        return Fraction(1)
    if a.kind in NUMERIC_CHAIN and b.kind in NUMERIC_CHAIN:
        return Fraction(4, 5)
    if {a.kind, b.kind} == {"string", "enum"}:
        return Fraction(1, 2)
    return Fraction(0)


def _incidence(schema: TypedGraphSchema, node_id: str) -> tuple[list[tuple[str, str]], list[str]]:
    """Incident (kind, direction) signature multiset and neighbor labels."""
    signature: list[tuple[str, str]] = []
    neighbors: list[str] = []
    for edge, idx in schema.incident_edges(node_id):
        direction = "out" if idx == 0 else "in"
        signature.append((edge.kind.value, direction))
        for j, ep in enumerate(edge.endpoints):
            if j != idx:
                neighbors.append(schema.nodes_by_id[ep.node].label)
    return signature, neighbors


def _multiset_jaccard(a: list, b: list) -> Fraction:
    if not a and not b:
        return Fraction(1)
    counts_a: dict = {}
    counts_b: dict = {}
    for x in a:
        counts_a[x] = counts_a.get(x, 0) + 1
    for x in b:
        counts_b[x] = counts_b.get(x, 0) + 1
    inter = sum(min(counts_a.get(k, 0), counts_b.get(k, 0)) for k in counts_a)
    union = sum(max(counts_a.get(k, 0), counts_b.get(k, 0))
                for k in set(counts_a) | set(counts_b))
    return Fraction(inter, union)


_ASSIGN_CAP = 12


def best_pairing_mean(a: list[str], b: list[str],
                      synonyms: SynonymTable = EMPTY_SYNONYMS) -> Fraction:
    """Optimal one-to-one pairing of two label lists, scored by mean name
    similarity over max(|a|, |b|); unpaired labels contribute 0."""
    if not a and not b:
        return Fraction(1)
    if not a or not b:
        return Fraction(0)
    if len(a) > len(b):
        a, b = b, a
    scores = [[name_similarity(x, y, synonyms) for y in b] for x in a]
    if len(a) <= _ASSIGN_CAP:
        best = _assign_exact(scores, len(b))
    else:
        best = _assign_greedy(scores)
    return best / max(len(a), len(b))


def _assign_exact(scores: list[list[Fraction]], n_cols: int) -> Fraction:
    """Maximum-weight assignment by bitmask DP over the column set."""
    dp: dict[int, Fraction] = {0: Fraction(0)}
    for row in scores:
        nxt: dict[int, Fraction] = {}
        for mask, total in dp.items():
            for j in range(n_cols):
                bit = 1 << j
                if mask & bit:
                    continue
                cand = total + row[j]
                key = mask | bit
                if key not in nxt or cand > nxt[key]:
                    nxt[key] = cand
        dp = nxt
    return max(dp.values())


def _assign_greedy(scores: list[list[Fraction]]) -> Fraction:
    pairs = sorted(
        ((s, i, j) for i, row in enumerate(scores) for j, s in enumerate(row)),
        key=lambda t: (-t[0], t[1], t[2]))
    used_rows: set[int] = set()
    used_cols: set[int] = set()
    total = Fraction(0)
    for s, i, j in pairs:
        if i in used_rows or j in used_cols:
            continue
        used_rows.add(i)
        used_cols.add(j)
        total += s
    return total


def structural_similarity(source: TypedGraphSchema, a_label: str,
                          target: TypedGraphSchema, b_label: str,
                          synonyms: SynonymTable = EMPTY_SYNONYMS) -> Fraction:
    """Average of incident-signature multiset Jaccard and the best-pairing
    mean of neighbor label similarities."""
    a = source.node(a_label)
    b = target.node(b_label)
    sig_a, nb_a = _incidence(source, a.id)
    sig_b, nb_b = _incidence(target, b.id)
    jaccard = _multiset_jaccard(sig_a, sig_b)
    neighbor = best_pairing_mean(nb_a, nb_b, synonyms)
    return (jaccard + neighbor) / 2


# --------------------------------------------------------------------------
# proposal
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MatchConfig:
    name_weight: Fraction = Fraction(1, 2)
    type_weight: Fraction = Fraction(3, 10)
    structure_weight: Fraction = Fraction(1, 5)
    threshold: Fraction = Fraction(45, 100)
    property_gate_bonus: Fraction = Fraction(1, 5)
    max_path_length: int = 4

    def __post_init__(self) -> None:
        if self.name_weight + self.type_weight + self.structure_weight != 1:
            raise ValueError("signal weights must sum to 1")
        if not (0 <= self.threshold <= 1):
            raise ValueError("threshold must lie in [0, 1]")
        if self.max_path_length < 1:
            raise ValueError("max path length must be at least 1")

    def to_json(self) -> dict:
        return {
            "nameWeight": _fraction_to_json(self.name_weight),
            "typeWeight": _fraction_to_json(self.type_weight),
            "structureWeight": _fraction_to_json(self.structure_weight),
            "threshold": _fraction_to_json(self.threshold),
            "propertyGateBonus": _fraction_to_json(self.property_gate_bonus),
            "maxPathLength": self.max_path_length,
        }

    @staticmethod
    def from_json(doc: dict) -> "MatchConfig":
        default = MatchConfig()

        def fraction(key: str, fallback: Fraction) -> Fraction:
            return _fraction_from_json(doc[key]) if key in doc else fallback

        return MatchConfig(
            name_weight=fraction("nameWeight", default.name_weight),
            type_weight=fraction("typeWeight", default.type_weight),
            structure_weight=fraction("structureWeight", default.structure_weight),
            threshold=fraction("threshold", default.threshold),
            property_gate_bonus=fraction("propertyGateBonus",
                                         default.property_gate_bonus),
            max_path_length=doc.get("maxPathLength", default.max_path_length),
        )


DEFAULT_CONFIG = MatchConfig()


def _property_kind_signature(node: SchemaNode) -> list[str]:
    return [t.kind for _, t in node.properties]


def _edge_structure(source: TypedGraphSchema, a: SchemaEdge,
                    target: TypedGraphSchema, b: SchemaEdge,
                    synonyms: SynonymTable) -> Fraction:
    if len(a.endpoints) != len(b.endpoints):
        return Fraction(0)
    total = Fraction(0)
    for ea, eb in zip(a.endpoints, b.endpoints):
        total += name_similarity(source.nodes_by_id[ea.node].label,
                                 target.nodes_by_id[eb.node].label, synonyms)
    return total / len(a.endpoints)


def propose_matches(source: TypedGraphSchema, target: TypedGraphSchema,
                    synonyms: SynonymTable = EMPTY_SYNONYMS,
                    config: MatchConfig = DEFAULT_CONFIG) -> list[Correspondence]:
    """Score every like-kind element pair; emit those at or above threshold,
    sorted by descending score then id."""
    w_name, w_type, w_struct = config.name_weight, config.type_weight, config.structure_weight
    out: list[Correspondence] = []

    node_scores: dict[tuple[str, str], Fraction] = {}
    structure_cache: dict[tuple[str, str], Fraction] = {}

    def struct(a_label: str, b_label: str) -> Fraction:
        key = (a_label, b_label)
        if key not in structure_cache:
            structure_cache[key] = structural_similarity(source, a_label,
                                                         target, b_label, synonyms)
        return structure_cache[key]

    for a in source.nodes:
        for b in target.nodes:
            s_name = name_similarity(a.label, b.label, synonyms)
            s_type = _multiset_jaccard(_property_kind_signature(a),
                                       _property_kind_signature(b))
            s_struct = struct(a.label, b.label)
            score = w_name * s_name + w_type * s_type + w_struct * s_struct
            node_scores[(a.label, b.label)] = score
            if score >= config.threshold:
                out.append(_correspondence(source.name, "node", a.label,
                                           target.name, "node", b.label,
                                           score, s_name, s_type, s_struct))

    for a in source.nodes:
        for b in target.nodes:
            owner_ok = node_scores[(a.label, b.label)] >= config.threshold
            for pa, ta in a.properties:
                for pb, tb in b.properties:
                    s_name = name_similarity(pa, pb, synonyms)
                    s_type = type_compatibility(ta, tb)
                    s_struct = struct(a.label, b.label)
                    score = w_name * s_name + w_type * s_type + w_struct * s_struct
                    if score < config.threshold:
                        continue
                    if not owner_ok and score < config.threshold + config.property_gate_bonus:
                        continue
                    out.append(_correspondence(
                        source.name, "property", f"{a.label}.{pa}",
                        target.name, "property", f"{b.label}.{pb}",
                        score, s_name, s_type, s_struct))

    for ea in source.edges:
        for eb in target.edges:
            s_name = name_similarity(ea.label, eb.label, synonyms)
            s_type = Fraction(1) if ea.kind == eb.kind else Fraction(0)
            s_struct = _edge_structure(source, ea, target, eb, synonyms)
            score = w_name * s_name + w_type * s_type + w_struct * s_struct
            if score >= config.threshold:
                out.append(_correspondence(source.name, "edge", ea.id,
                                           target.name, "edge", eb.id,
                                           score, s_name, s_type, s_struct))

    out.sort(key=lambda c: (-c.confidence, c.id))
    return out


def _correspondence(s_schema: str, kind: str, s_ref: str,
                    t_schema: str, t_kind: str, t_ref: str,
                    score: Fraction, s_name: Fraction, s_type: Fraction,
                    s_struct: Fraction) -> Correspondence:
    cid = f"m-{kind}-{s_schema}:{s_ref}--{t_schema}:{t_ref}"
    return Correspondence(
        id=cid,
        source=ElementRef(s_schema, kind, s_ref),
        target=ElementRef(t_schema, t_kind, t_ref),
        confidence=score,
        evidence=(("name", s_name), ("type", s_type), ("structure", s_struct)),
    )


# --------------------------------------------------------------------------
# decisions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DecisionResult:
    correspondence: Correspondence
    warnings: tuple[str, ...] = ()


def decide(correspondences: list[Correspondence], corr_id: str, verdict: str,
           who: str, dependent_rule_ids: Iterable[str] = ()) -> DecisionResult:
    """Apply an expert verdict in place (the list is mutated at the record's
    position).  ``dependent_rule_ids`` are the mapping rules referencing the
    correspondence's element pair; they trigger a warning on ACCEPTED→REJECTED.
    """
    if verdict not in ("ACCEPT", "REJECT"):
        raise TgmError("PARSE_ERROR", f"unknown verdict {verdict!r}")
    index = next((i for i, c in enumerate(correspondences) if c.id == corr_id), None)
    if index is None:
        raise TgmError("UNKNOWN_CORRESPONDENCE", f"no correspondence {corr_id!r}")
    current = correspondences[index]
    new_status = Status.ACCEPTED if verdict == "ACCEPT" else Status.REJECTED

    if new_status is Status.ACCEPTED:
        for other in correspondences:
            if (other.id != corr_id and other.status is Status.ACCEPTED
                    and other.source == current.source and other.target == current.target):
                raise TgmError(
                    "CONFLICTING_ACCEPT",
                    f"pair {current.source} -> {current.target} already accepted "
                    f"as {other.id}")

    warnings: tuple[str, ...] = ()
    if current.status is Status.ACCEPTED and new_status is Status.REJECTED:
        dependents = sorted(dependent_rule_ids)
        if dependents:
            warnings = (f"rejected correspondence {corr_id} is referenced by "
                        f"mapping rule(s): {', '.join(dependents)}",)

    updated = replace(current, status=new_status, decided_by=who)
    correspondences[index] = updated
    return DecisionResult(updated, warnings)


def accepted_pairs(correspondences: Iterable[Correspondence]) -> set[tuple[ElementRef, ElementRef]]:
    return {(c.source, c.target) for c in correspondences if c.status is Status.ACCEPTED}
