"""Integration project: the named bundle of source schemas, target schema,
correspondences, mapping rules, synonyms and matcher configuration that the
CLI and the HTTP service operate on.

Every mutation bumps the revision counter by exactly one; persistence is
canonical JSON written atomically (temp file, then rename).
"""

from __future__ import annotations

import json
import os
import tempfile

from .errors import TgmError, parse_error
from .formats import schema_from_json, schema_to_json
from .mapping import CompiledRule, MappingSet, compile_mapping
from .matching import (
    Correspondence,
    DecisionResult,
    MatchConfig,
    Status,
    SynonymTable,
    decide,
    propose_matches,
)

FORMAT = "tgm-project/1"


class Project:
    """Mutable workflow state; single-writer by contract."""

    def __init__(self, name: str, sources=None, target=None, correspondences=None,
                 mapping=None, synonyms=None, config=None, revision: int = 0) -> None:
        self.name = name
        self.sources = list(sources or [])
        self.target = target
        self.correspondences = list(correspondences or [])
        self.mapping = mapping if mapping is not None else MappingSet((), ())
        self.synonyms = synonyms if synonyms is not None else SynonymTable()
        self.config = config if config is not None else MatchConfig()
        self.revision = revision

    # -- lookups ---------------------------------------------------------------

    def source(self, name: str):
        for schema in self.sources:
            if schema.name == name:
                return schema
        return None

    def schemas_by_name(self) -> dict:
        out = {s.name: s for s in self.sources}
        if self.target is not None:
            out[self.target.name] = self.target
        return out

    def correspondence(self, corr_id: str) -> Correspondence | None:
        for c in self.correspondences:
            if c.id == corr_id:
                return c
        return None

    # -- mutations (each bumps revision exactly once) -----------------------------

    def add_source(self, schema) -> None:
        if self.source(schema.name) is not None or (
                self.target is not None and self.target.name == schema.name):
            raise TgmError("DUPLICATE_NAME",
                           f"a schema named {schema.name!r} already exists")
        self.sources.append(schema)
        self.revision += 1

    def set_target(self, schema) -> None:
        if self.source(schema.name) is not None:
            raise TgmError("DUPLICATE_NAME",
                           f"a source schema is already named {schema.name!r}")
        self.target = schema
        self.revision += 1

    def set_synonyms(self, table: SynonymTable) -> None:
        self.synonyms = table
        self.revision += 1

    def set_config(self, config: MatchConfig) -> None:
        self.config = config
        self.revision += 1

    def run_match(self) -> list[Correspondence]:
        """Propose matches for every source against the target; decisions
        already taken on a re-proposed pair survive the refresh."""
        if self.target is None:
            raise TgmError("UNRESOLVED_REFERENCE", "project has no target schema")
        decided = {c.id: c for c in self.correspondences
                   if c.status is not Status.PROPOSED}
        fresh: list[Correspondence] = []
        seen: set[str] = set()
        for source in self.sources:
            for c in propose_matches(source, self.target, self.synonyms, self.config):
                seen.add(c.id)
                fresh.append(decided.get(c.id, c))
        for c in self.correspondences:
            if c.status is not Status.PROPOSED and c.id not in seen:
                fresh.append(c)
        self.correspondences = fresh
        self.revision += 1
        return list(self.correspondences)

    def add_correspondences(self, items: list[Correspondence]) -> None:
        known = {c.id for c in self.correspondences}
        for c in items:
            if c.id in known:
                raise TgmError("DUPLICATE_NAME",
                               f"correspondence {c.id!r} already exists")
            known.add(c.id)
        self.correspondences.extend(items)
        self.revision += 1

    def decide(self, corr_id: str, verdict: str, who: str) -> DecisionResult:
        result = decide(self.correspondences, corr_id, verdict, who,
                        dependent_rule_ids=self._dependent_rules(corr_id))
        self.revision += 1
        return result

    def _dependent_rules(self, corr_id: str) -> list[str]:
        corr = self.correspondence(corr_id)
        if corr is None:
            return []
        out = []
        for rule in self.mapping.rules:
            hit = rule.target == corr.target and corr.source in rule.sources
            if not hit and corr.source.kind == "node":
                hit = (rule.target.schema == corr.target.schema
                       and rule.target.node_label == corr.target.node_label
                       and any(s.schema == corr.source.schema
                               and s.node_label == corr.source.node_label
                               for s in rule.sources))
            if hit:
                out.append(rule.id)
        return sorted(out)

    def set_rules(self, mapping: MappingSet) -> list[CompiledRule]:
        """Compile against the current schemas, then replace the rule set."""
        compiled = compile_mapping(mapping, self._compile_context())
        self.mapping = mapping
        self.revision += 1
        return compiled

    def _compile_context(self):
        from .mapping import CompileContext
        if self.target is None:
            raise TgmError("UNRESOLVED_REFERENCE", "project has no target schema")
        accepted = frozenset(
            (c.source, c.target) for c in self.correspondences
            if c.status is Status.ACCEPTED)
        return CompileContext(schemas=self.schemas_by_name(),
                              target_schema=self.target, accepted=accepted)

    # -- serialization --------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "name": self.name,
            "revision": self.revision,
            "sources": [schema_to_json(s) for s in self.sources],
            "target": None if self.target is None else schema_to_json(self.target),
            "correspondences": [c.to_json() for c in self.correspondences],
            "mapping": self.mapping.to_json(),
            "synonyms": self.synonyms.to_json(),
            "config": self.config.to_json(),
        }

    @staticmethod
    def from_json(doc) -> "Project":
        if not isinstance(doc, dict):
            raise parse_error("project file must be a JSON object", pointer="")
        version = doc.get("format")
        if version != FORMAT:
            raise TgmError("VERSION_MISMATCH",
                           f"unknown project format {version!r} (expected {FORMAT!r})")
        allowed = {"format", "name", "revision", "sources", "target",
                   "correspondences", "mapping", "synonyms", "config"}
        unknown = set(doc) - allowed
        if unknown:
            raise parse_error(f"unknown project fields: {sorted(unknown)}", pointer="")
        name = doc.get("name")
        if not isinstance(name, str) or not name:
            raise parse_error("project name must be a non-empty string",
                              pointer="/name")
        revision = doc.get("revision", 0)
        if not isinstance(revision, int) or isinstance(revision, bool) or revision < 0:
            raise parse_error("revision must be a non-negative integer",
                              pointer="/revision")
        sources = [schema_from_json(s) for s in doc.get("sources", [])]
        target_doc = doc.get("target")
        target = None if target_doc is None else schema_from_json(target_doc)
        correspondences = [Correspondence.from_json(c)
                           for c in doc.get("correspondences", [])]
        mapping = MappingSet.from_json(doc.get("mapping", {"rules": []}))
        synonyms = SynonymTable.from_json(doc.get("synonyms",
                                                  {"groups": [], "distinct": []}))
        config = MatchConfig.from_json(doc.get("config", {}))
        return Project(name=name, sources=sources, target=target,
                       correspondences=correspondences, mapping=mapping,
                       synonyms=synonyms, config=config, revision=revision)


def dumps_project(project: Project) -> str:
    return json.dumps(project.to_json(), indent=2, ensure_ascii=False) + "\n"


def save_project(project: Project, path: str) -> None:
    """Atomic write: the previous file stays intact until the rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, temp = tempfile.mkstemp(prefix=".tgm-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(dumps_project(project))
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(temp, path)
    except BaseException:
        try:
            os.unlink(temp)
        except OSError:
            pass
        raise


def parse_project(text: str) -> Project:
    from decimal import Decimal
    try:
        doc = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise parse_error(f"invalid JSON: {exc.msg}",
                          line=exc.lineno, column=exc.colno) from exc
    return Project.from_json(doc)


def load_project(path: str) -> Project:
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise TgmError("PARSE_ERROR", f"cannot read project file: {exc}") from exc
    return parse_project(text)
