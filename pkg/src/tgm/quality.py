"""Integration quality: coverage by bipartite matching, Hall-condition
witnesses, semantic rule/path scores and commutativity findings.

Coverage is measured over schema nodes: every ACCEPTED node correspondence
is a link from a source vertex to a target vertex.  The integration covers
its sources perfectly when a matching saturates all source vertices; by
Hall's theorem that holds iff every source subset R has |neighborhood(R)|
at least |R|, and when it fails a deficient witness set is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .mapping import (
    CommutativityResult,
    MappingPath,
    MappingRule,
    MappingSet,
    RuleKind,
    check_commutativity,
    enumerate_paths,
)
from .matching import Correspondence, ElementRef, Status
from .model import InstanceGraph, TypedGraphSchema

DEFAULT_MAX_PATH_LENGTH = 4


# --------------------------------------------------------------------------
# bipartite matching
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BipartiteMatchGraph:
    """Vertices are element refs; links only cross sides."""

    sources: tuple[str, ...]
    targets: tuple[str, ...]
    links: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        src = set(self.sources)
        tgt = set(self.targets)
        for s, t in self.links:
            if s not in src or t not in tgt:
                raise ValueError(f"link ({s}, {t}) leaves the declared vertex sets")

    def adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {s: [] for s in self.sources}
        seen = set()
        for s, t in self.links:
            if (s, t) not in seen:
                seen.add((s, t))
                adj[s].append(t)
        return adj


_INF = float("inf")


def maximum_matching(graph: BipartiteMatchGraph) -> dict[str, str]:
    """Hopcroft-Karp; returns the source->target assignment.  Deterministic:
    vertices are processed in declaration order."""
    adj = graph.adjacency()
    match_s: dict[str, str | None] = {s: None for s in graph.sources}
    match_t: dict[str, str | None] = {t: None for t in graph.targets}
    dist: dict[str, float] = {}

    def bfs() -> bool:
        queue = []
        for s in graph.sources:
            if match_s[s] is None:
                dist[s] = 0
                queue.append(s)
            else:
                dist[s] = _INF
        found = False
        head = 0
        while head < len(queue):
            s = queue[head]
            head += 1
            for t in adj[s]:
                nxt = match_t[t]
                if nxt is None:
                    found = True
                elif dist[nxt] == _INF:
                    dist[nxt] = dist[s] + 1
                    queue.append(nxt)
        return found

    def dfs(s: str) -> bool:
        for t in adj[s]:
            nxt = match_t[t]
            if nxt is None or (dist[nxt] == dist[s] + 1 and dfs(nxt)):
                match_s[s] = t
                match_t[t] = s
                return True
        dist[s] = _INF
        return False

    while bfs():
        for s in graph.sources:
            if match_s[s] is None:
                dfs(s)

    return {s: t for s, t in match_s.items() if t is not None}


@dataclass(frozen=True)
class HallResult:
    perfect: bool
    matching: tuple[tuple[str, str], ...]
    deficient_sources: tuple[str, ...] = ()
    neighborhood: tuple[str, ...] = ()


def check_hall(graph: BipartiteMatchGraph) -> HallResult:
    """Perfect iff a matching saturates every source vertex.  On failure the
    witness R comes from alternating-path reachability out of an unmatched
    source; |neighborhood(R)| < |R| is re-verified before returning."""
    matching = maximum_matching(graph)
    if len(matching) == len(graph.sources):
        return HallResult(True, tuple(sorted(matching.items())))

    adj = graph.adjacency()
    match_t: dict[str, str] = {t: s for s, t in matching.items()}
    reachable_s = [s for s in graph.sources if s not in matching]
    seen_s = set(reachable_s)
    seen_t: set[str] = set()
    queue = list(reachable_s)
    head = 0
    while head < len(queue):
        s = queue[head]
        head += 1
        for t in adj[s]:
            if t in seen_t:
                continue
            seen_t.add(t)
            back = match_t.get(t)
            if back is not None and back not in seen_s:
                seen_s.add(back)
                reachable_s.append(back)
                queue.append(back)

    deficient = tuple(s for s in graph.sources if s in seen_s)
    neighborhood = _neighborhood(adj, deficient)
    if len(neighborhood) >= len(deficient):
        raise AssertionError("deficient-set certificate failed verification")
    return HallResult(False, tuple(sorted(matching.items())), deficient, neighborhood)


def _neighborhood(adj: dict[str, list[str]], sources: Iterable[str]) -> tuple[str, ...]:
    out: list[str] = []
    seen = set()
    for s in sources:
        for t in adj[s]:
            if t not in seen:
                seen.add(t)
                out.append(t)
    return tuple(sorted(out))


# --------------------------------------------------------------------------
# semantic scores
# --------------------------------------------------------------------------


def score_rule(rule: MappingRule) -> int:
    """3 points for a 1-1 rule, 2 for n-1, reliability (1..3) for 1-n."""
    kind = rule.kind
    if kind is RuleKind.ONE_TO_ONE:
        return 3
    if kind is RuleKind.MANY_TO_ONE:
        return 2
    return rule.effective_reliability


def score_path(mapping: MappingSet, path: MappingPath) -> int:
    return sum(score_rule(mapping.rule(rid)) for rid in path.rule_ids)


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathScore:
    path: MappingPath
    score: int

    def to_json(self) -> dict:
        return {"from": self.path.from_ref.to_json(), "to": self.path.to_ref.to_json(),
                "rules": list(self.path.rule_ids), "score": self.score}


@dataclass(frozen=True)
class CommutativityFinding:
    from_ref: ElementRef
    to_ref: ElementRef
    path1: tuple[str, ...]
    path2: tuple[str, ...]
    score1: int
    score2: int
    status: str  # EQUAL_SCORE_COMMUTATIVE|COMMUTATIVE|CONSISTENCY_ERROR|VACUOUS|UNCHECKED
    recommendation: str | None = None
    counterexamples: tuple[dict, ...] = ()

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "from": self.from_ref.to_json(),
            "to": self.to_ref.to_json(),
            "path1": list(self.path1),
            "path2": list(self.path2),
            "score1": self.score1,
            "score2": self.score2,
            "status": self.status,
        }
        if self.recommendation is not None:
            out["recommendation"] = self.recommendation
        if self.counterexamples:
            out["counterexamples"] = list(self.counterexamples)
        return out


@dataclass(frozen=True)
class QualityReport:
    maximum_matching_size: int
    perfect: bool
    deficient_sources: tuple[str, ...]
    deficient_neighborhood: tuple[str, ...]
    rule_scores: tuple[tuple[str, int], ...]
    overall_score: int
    path_scores: tuple[PathScore, ...]
    findings: tuple[CommutativityFinding, ...]
    unmatched_sources: tuple[str, ...]
    unmatched_targets: tuple[str, ...]
    source_properties: int
    matched_source_properties: int

    @property
    def has_consistency_errors(self) -> bool:
        return any(f.status == "CONSISTENCY_ERROR" for f in self.findings)

    def to_json(self) -> dict:
        deficient = None
        if not self.perfect:
            deficient = {"sources": list(self.deficient_sources),
                         "neighborhood": list(self.deficient_neighborhood)}
        return {
            "maximumMatchingSize": self.maximum_matching_size,
            "perfect": self.perfect,
            "deficientSet": deficient,
            "ruleScores": {rid: pts for rid, pts in self.rule_scores},
            "overallScore": self.overall_score,
            "pathScores": [p.to_json() for p in self.path_scores],
            "commutativityFindings": [f.to_json() for f in self.findings],
            "unmatchedSources": list(self.unmatched_sources),
            "unmatchedTargets": list(self.unmatched_targets),
            "propertyCoverage": {
                "sourceProperties": self.source_properties,
                "matchedSourceProperties": self.matched_source_properties,
            },
        }


def build_match_graph(source_schemas: Iterable[TypedGraphSchema],
                      target_schema: TypedGraphSchema,
                      correspondences: Iterable[Correspondence]) -> BipartiteMatchGraph:
    sources = tuple(f"{s.name}:{n.label}" for s in source_schemas for n in s.nodes)
    targets = tuple(f"{target_schema.name}:{n.label}" for n in target_schema.nodes)
    links = []
    seen = set()
    for c in correspondences:
        if c.status is not Status.ACCEPTED or c.source.kind != "node":
            continue
        link = (f"{c.source.schema}:{c.source.ref}", f"{c.target.schema}:{c.target.ref}")
        if link not in seen:
            seen.add(link)
            links.append(link)
    return BipartiteMatchGraph(sources, targets, tuple(links))


def _path_endpoints(mapping: MappingSet) -> tuple[list[ElementRef], list[ElementRef]]:
    """Chain starts: rule sources that no rule produces.  Ends: rule targets."""
    produced = {r.target for r in mapping.rules}
    starts: list[ElementRef] = []
    for r in mapping.rules:
        for s in r.sources:
            if s not in produced and s not in starts and s.kind == "property":
                starts.append(s)
    ends: list[ElementRef] = []
    for r in mapping.rules:
        if r.target not in ends and r.target.kind == "property":
            ends.append(r.target)
    return starts, ends


def quality_report(source_schemas: list[TypedGraphSchema],
                   target_schema: TypedGraphSchema,
                   correspondences: list[Correspondence],
                   mapping: MappingSet,
                   witnesses: Mapping[str, InstanceGraph] | None = None,
                   max_path_length: int = DEFAULT_MAX_PATH_LENGTH) -> QualityReport:
    """Pure function of the project decision state.  ``witnesses`` provides
    instance data per source schema name for extensional commutativity
    checks; pairs without a witness are reported UNCHECKED."""
    graph = build_match_graph(source_schemas, target_schema, correspondences)
    hall = check_hall(graph)
    matched_sources = {s for s, _ in hall.matching}
    matched_targets = {t for _, t in hall.matching}

    rule_scores = tuple((r.id, score_rule(r)) for r in mapping.rules)
    overall = sum(pts for _, pts in rule_scores)

    starts, ends = _path_endpoints(mapping)
    path_scores: list[PathScore] = []
    findings: list[CommutativityFinding] = []
    schemas_by_name = {s.name: s for s in source_schemas}

    for start in starts:
        for end in ends:
            paths = enumerate_paths(mapping, start, end, max_path_length)
            for p in paths:
                path_scores.append(PathScore(p, score_path(mapping, p)))
            for i in range(len(paths)):
                for j in range(i + 1, len(paths)):
                    findings.append(_pair_finding(
                        mapping, paths[i], paths[j],
                        witnesses.get(start.schema) if witnesses else None,
                        schemas_by_name.get(start.schema)))

    source_props = [f"{s.name}:{n.label}.{p}" for s in source_schemas
                    for n in s.nodes for p in n.property_names]
    accepted_props = {f"{c.source.schema}:{c.source.ref}" for c in correspondences
                      if c.status is Status.ACCEPTED and c.source.kind == "property"}

    return QualityReport(
        maximum_matching_size=len(hall.matching),
        perfect=hall.perfect,
        deficient_sources=hall.deficient_sources,
        deficient_neighborhood=hall.neighborhood,
        rule_scores=rule_scores,
        overall_score=overall,
        path_scores=tuple(path_scores),
        findings=tuple(findings),
        unmatched_sources=tuple(s for s in graph.sources if s not in matched_sources),
        unmatched_targets=tuple(t for t in graph.targets if t not in matched_targets),
        source_properties=len(source_props),
        matched_source_properties=sum(1 for p in source_props if p in accepted_props),
    )


def _pair_finding(mapping: MappingSet, p1: MappingPath, p2: MappingPath,
                  witness: InstanceGraph | None,
                  schema: TypedGraphSchema | None) -> CommutativityFinding:
    s1 = score_path(mapping, p1)
    s2 = score_path(mapping, p2)
    recommendation = None
    if s1 != s2:
        better = p1 if s1 > s2 else p2
        recommendation = (f"prefer path [{', '.join(better.rule_ids)}] "
                          f"(score {max(s1, s2)} over {min(s1, s2)})")

    if witness is None or schema is None:
        return CommutativityFinding(p1.from_ref, p1.to_ref, p1.rule_ids, p2.rule_ids,
                                    s1, s2, "UNCHECKED", recommendation)

    result: CommutativityResult = check_commutativity(mapping, p1, p2, witness, schema)
    if not result.commutes:
        return CommutativityFinding(p1.from_ref, p1.to_ref, p1.rule_ids, p2.rule_ids,
                                    s1, s2, "CONSISTENCY_ERROR",
                                    counterexamples=result.counterexamples)
    if result.vacuous:
        status = "VACUOUS"
    elif s1 == s2:
        status = "EQUAL_SCORE_COMMUTATIVE"
    else:
        status = "COMMUTATIVE"
    return CommutativityFinding(p1.from_ref, p1.to_ref, p1.rule_ids, p2.rule_ids,
                                s1, s2, status, recommendation)
