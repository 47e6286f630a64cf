"""Command line front end.

Every engine operation is reachable here; the HTTP service is a strict
wrapper around the same calls, so any API response can be reproduced from
a saved project file with one of these commands.
"""

from __future__ import annotations

import csv as csv_module
import io
import json
import sys

import click

from . import executor, formats, inference, mapping as mapping_module, matching, quality, relational
from .errors import TgmError
from .project import Project, load_project, save_project


def _fail(exc: TgmError) -> None:
    click.echo(f"ERROR {exc.code}: {exc.message}", err=True)
    for key in sorted(exc.details):
        click.echo(f"  {key}: {exc.details[key]}", err=True)
    sys.exit(1)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        _fail(TgmError("PARSE_ERROR", f"cannot read {path}: {exc.strerror}"))


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _load_synonyms(path: str | None) -> matching.SynonymTable:
    if path is None:
        return matching.SynonymTable()
    doc = json.loads(_read(path))
    return matching.SynonymTable.from_json(doc)


@click.group()
def main() -> None:
    """Schema mediation over typed graph schemas."""


# -- import / export -----------------------------------------------------------


@main.command("import")
@click.option("--kind", type=click.Choice(["relational", "json", "csv"]), required=True)
@click.option("--in", "in_path", required=True, metavar="FILE")
@click.option("--out", "out_path", required=True, metavar="FILE.tgs.json")
@click.option("--name", default=None, help="Schema name (default: derived from input).")
@click.option("--data-out", default=None, metavar="FILE.data.json",
              help="Also write the instance data extracted from a json/csv source.")
def import_cmd(kind: str, in_path: str, out_path: str, name: str | None,
               data_out: str | None) -> None:
    """Convert a source into a typed graph schema file."""
    try:
        text = _read(in_path)
        default_name = in_path.rsplit("/", 1)[-1].split(".", 1)[0]
        schema_name = name or default_name
        if kind == "relational":
            model = relational.parse_ddl(text)
            schema = relational.model_to_schema(model, name=schema_name)
            warnings: tuple[str, ...] = ()
            instance = None
        elif kind == "json":
            doc = inference.load_json_document(text)
            result = inference.import_hierarchical(doc, schema_name=schema_name)
            schema, warnings = result.schema, result.warnings
            instance = inference.hierarchical_instance(doc, schema) if data_out else None
        else:
            header, rows = inference.parse_csv(text)
            result = inference.import_csv(header, rows, schema_name=schema_name)
            schema, warnings = result.schema, result.warnings
            instance = inference.csv_instance(header, rows, schema) if data_out else None
        _write(out_path, formats.dumps_schema(schema))
        if data_out and instance is not None:
            _write(data_out, formats.dumps_instance(instance))
        for warning in warnings:
            click.echo(f"warning: {warning}", err=True)
        click.echo(f"wrote {out_path}")
    except TgmError as exc:
        _fail(exc)


@main.command("export")
@click.option("--kind", type=click.Choice(["relational"]), required=True)
@click.option("--in", "in_path", required=True, metavar="FILE.tgs.json")
@click.option("--out", "out_path", required=True, metavar="FILE.sql")
def export_cmd(kind: str, in_path: str, out_path: str) -> None:
    """Render a typed graph schema back into DDL."""
    try:
        schema = formats.parse_schema(_read(in_path))
        model = relational.schema_to_model(schema)
        _write(out_path, relational.render_ddl(model))
        click.echo(f"wrote {out_path}")
    except TgmError as exc:
        _fail(exc)


# -- matching --------------------------------------------------------------------


@main.command("match")
@click.option("--project", "project_path", default=None, metavar="P")
@click.option("--source", "source_path", default=None, metavar="S.tgs.json")
@click.option("--target", "target_path", default=None, metavar="G.tgs.json")
@click.option("--synonyms", "synonyms_path", default=None, metavar="syn.json")
@click.option("--out", "out_path", default=None, metavar="matches.json")
def match_cmd(project_path, source_path, target_path, synonyms_path, out_path) -> None:
    """Propose correspondences, either file-to-file or inside a project."""
    try:
        if project_path is not None:
            project = load_project(project_path)
            proposals = project.run_match()
            save_project(project, project_path)
        else:
            if source_path is None or target_path is None:
                raise TgmError("PARSE_ERROR",
                               "either --project or both --source and --target required")
            source = formats.parse_schema(_read(source_path))
            target = formats.parse_schema(_read(target_path))
            synonyms = _load_synonyms(synonyms_path)
            proposals = matching.propose_matches(source, target, synonyms,
                                                 matching.MatchConfig())
        payload = _dump_json([c.to_json() for c in proposals])
        if out_path:
            _write(out_path, payload)
            click.echo(f"wrote {out_path} ({len(proposals)} proposals)")
        else:
            click.echo(payload, nl=False)
    except TgmError as exc:
        _fail(exc)


# -- project plumbing ----------------------------------------------------------------


@main.group("project")
def project_group() -> None:
    """Create and edit project files."""


@project_group.command("init")
@click.option("--name", required=True)
@click.option("--out", "out_path", required=True, metavar="P")
def project_init(name: str, out_path: str) -> None:
    save_project(Project(name), out_path)
    click.echo(f"wrote {out_path}")


@project_group.command("add-source")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--schema", "schema_path", required=True, metavar="S.tgs.json")
def project_add_source(project_path: str, schema_path: str) -> None:
    try:
        project = load_project(project_path)
        project.add_source(formats.parse_schema(_read(schema_path)))
        save_project(project, project_path)
        click.echo(f"revision {project.revision}")
    except TgmError as exc:
        _fail(exc)


@project_group.command("set-target")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--schema", "schema_path", required=True, metavar="G.tgs.json")
def project_set_target(project_path: str, schema_path: str) -> None:
    try:
        project = load_project(project_path)
        project.set_target(formats.parse_schema(_read(schema_path)))
        save_project(project, project_path)
        click.echo(f"revision {project.revision}")
    except TgmError as exc:
        _fail(exc)


@project_group.command("set-synonyms")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--synonyms", "synonyms_path", required=True, metavar="syn.json")
def project_set_synonyms(project_path: str, synonyms_path: str) -> None:
    try:
        project = load_project(project_path)
        project.set_synonyms(_load_synonyms(synonyms_path))
        save_project(project, project_path)
        click.echo(f"revision {project.revision}")
    except TgmError as exc:
        _fail(exc)


@project_group.command("add-matches")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--in", "in_path", required=True, metavar="matches.json")
def project_add_matches(project_path: str, in_path: str) -> None:
    """Load a correspondence list (e.g. a reviewed fixture) into the project."""
    try:
        project = load_project(project_path)
        doc = json.loads(_read(in_path))
        if not isinstance(doc, list):
            raise TgmError("PARSE_ERROR", "matches file must be a JSON array")
        project.add_correspondences([matching.Correspondence.from_json(c) for c in doc])
        save_project(project, project_path)
        click.echo(f"revision {project.revision}")
    except TgmError as exc:
        _fail(exc)


@project_group.command("decide")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--id", "corr_id", required=True)
@click.option("--verdict", type=click.Choice(["ACCEPT", "REJECT"]), required=True)
@click.option("--who", required=True)
def project_decide(project_path: str, corr_id: str, verdict: str, who: str) -> None:
    try:
        project = load_project(project_path)
        result = project.decide(corr_id, verdict, who)
        save_project(project, project_path)
        for warning in result.warnings:
            click.echo(f"warning: {warning}", err=True)
        click.echo(f"{corr_id} -> {result.correspondence.status.value}")
    except TgmError as exc:
        _fail(exc)


# -- mapping -----------------------------------------------------------------------


@main.group("map")
def map_group() -> None:
    """Compile and analyze mapping rules."""


@map_group.command("compile")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--rules", "rules_path", required=True, metavar="R.map.json")
def map_compile(project_path: str, rules_path: str) -> None:
    """Check a rule file against the project schemas and install it."""
    try:
        project = load_project(project_path)
        rules = mapping_module.parse_mapping(_read(rules_path))
        compiled = project.set_rules(rules)
        save_project(project, project_path)
        count = 0
        for item in compiled:
            for warning in item.warnings:
                click.echo(f"warning: {item.rule.id}: {warning}", err=True)
                count += 1
        click.echo(f"compiled {len(compiled)} rules ({count} warnings)")
    except TgmError as exc:
        _fail(exc)


@map_group.command("paths")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--from", "from_ref", required=True, metavar="schema:Element.prop")
@click.option("--to", "to_ref", required=True, metavar="schema:Element.prop")
def map_paths(project_path: str, from_ref: str, to_ref: str) -> None:
    """List rule chains between two property references."""
    try:
        project = load_project(project_path)
        paths = mapping_module.enumerate_paths(
            project.mapping,
            matching.ElementRef.parse(from_ref, kind="property"),
            matching.ElementRef.parse(to_ref, kind="property"))
        click.echo(_dump_json([p.to_json() for p in paths]), nl=False)
    except TgmError as exc:
        _fail(exc)


@map_group.command("commute")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--p1", required=True, help="Comma-separated rule ids of the first path.")
@click.option("--p2", required=True, help="Comma-separated rule ids of the second path.")
@click.option("--from", "from_ref_text", default=None, metavar="schema:Element.prop",
              help="Start element, needed when a chain head reads several sources.")
@click.option("--witness", "witness_path", required=True, metavar="data.json")
def map_commute(project_path: str, p1: str, p2: str, from_ref_text: str | None,
                witness_path: str) -> None:
    """Compare two rule chains on witness instance data."""
    try:
        project = load_project(project_path)
        schemas = project.schemas_by_name()
        start = (matching.ElementRef.parse(from_ref_text, kind="property")
                 if from_ref_text else None)
        path1 = mapping_module.path_from_rule_ids(project.mapping, p1.split(","),
                                                  from_ref=start)
        path2 = mapping_module.path_from_rule_ids(project.mapping, p2.split(","),
                                                  from_ref=start)
        witness = formats.parse_instance_for(_read(witness_path), schemas,
                                             filename=witness_path)
        schema = schemas.get(path1.from_ref.schema)
        if schema is None:
            raise TgmError("UNRESOLVED_REFERENCE",
                           f"project has no schema {path1.from_ref.schema!r}")
        result = mapping_module.check_commutativity(
            project.mapping, path1, path2, witness, schema)
        click.echo(_dump_json(result.to_json()), nl=False)
        if not result.commutes and not result.vacuous:
            sys.exit(2)
    except TgmError as exc:
        _fail(exc)


# -- quality ------------------------------------------------------------------------


@main.command("quality")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--out", "out_path", default=None, metavar="report.json")
@click.option("--witness", "witness_paths", multiple=True, metavar="data.json",
              help="Instance data used to check commutativity findings.")
def quality_cmd(project_path: str, out_path: str | None, witness_paths) -> None:
    """Integration quality report; exit 0 only for a perfect, consistent project."""
    try:
        project = load_project(project_path)
        if project.target is None:
            raise TgmError("UNRESOLVED_REFERENCE", "project has no target schema")
        schemas = project.schemas_by_name()
        witnesses = {}
        for path in witness_paths:
            graph = formats.parse_instance_for(_read(path), schemas, filename=path)
            witnesses[graph.schema_ref] = graph
        report = quality.quality_report(
            project.sources, project.target, project.correspondences,
            project.mapping, witnesses=witnesses or None,
            max_path_length=project.config.max_path_length)
        payload = _dump_json(report.to_json())
        if out_path:
            _write(out_path, payload)
            click.echo(f"wrote {out_path}")
        else:
            click.echo(payload, nl=False)
        if not report.perfect or report.has_consistency_errors:
            sys.exit(2)
    except TgmError as exc:
        _fail(exc)


# -- execution ------------------------------------------------------------------------


def _load_sources(project: Project, paths) -> list:
    schemas = project.schemas_by_name()
    return [formats.parse_instance_for(_read(p), schemas, filename=p) for p in paths]


@main.command("run")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--sources", "source_paths", multiple=True, required=True,
              metavar="a.data.json")
@click.option("--out", "out_path", required=True, metavar="target.data.json")
@click.option("--log", "log_path", default=None, metavar="conflicts.json")
def run_cmd(project_path: str, source_paths, out_path: str, log_path) -> None:
    """Execute the mapping over source snapshots."""
    try:
        project = load_project(project_path)
        if project.target is None:
            raise TgmError("UNRESOLVED_REFERENCE", "project has no target schema")
        result = executor.execute(
            {s.name: s for s in project.sources}, project.target,
            project.mapping, _load_sources(project, source_paths))
        _write(out_path, formats.dumps_instance(result.target))
        if log_path:
            _write(log_path, _dump_json({
                "conflicts": [c.to_json() for c in result.conflicts],
                "provenance": [p.to_json() for p in result.provenance],
            }))
        errors = sum(1 for c in result.conflicts if c.severity == "ERROR")
        click.echo(f"wrote {out_path} ({len(result.target.inodes)} nodes, "
                   f"{len(result.target.iedges)} edges, "
                   f"{len(result.conflicts)} conflicts, {errors} errors)")
    except TgmError as exc:
        _fail(exc)


@main.command("view")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--target", "target_label", required=True, metavar="NodeLabel")
@click.option("--sources", "source_paths", multiple=True, required=True,
              metavar="a.data.json")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="json")
def view_cmd(project_path: str, target_label: str, source_paths, fmt: str) -> None:
    """Rows for one target node, computed from the rule slice that feeds it."""
    try:
        project = load_project(project_path)
        if project.target is None:
            raise TgmError("UNRESOLVED_REFERENCE", "project has no target schema")
        result = executor.run_query_view(
            {s.name: s for s in project.sources}, project.target,
            project.mapping, _load_sources(project, source_paths), target_label)
        for warning in result.warnings:
            click.echo(f"warning: {warning}", err=True)
        node = project.target.node(target_label)
        if fmt == "json":
            rows = [{k: formats.value_to_json(v) for k, v in row.items()}
                    for row in result.rows]
            click.echo(_dump_json(rows), nl=False)
        else:
            buffer = io.StringIO()
            writer = csv_module.writer(buffer, lineterminator="\n")
            writer.writerow(node.property_names)
            for row in result.rows:
                writer.writerow(["" if row[p] is None else str(row[p])
                                 for p in node.property_names])
            click.echo(buffer.getvalue(), nl=False)
    except TgmError as exc:
        _fail(exc)


# -- service --------------------------------------------------------------------------


@main.command("serve")
@click.option("--project", "project_path", required=True, metavar="P")
@click.option("--addr", default="127.0.0.1:8421", metavar="host:port")
@click.option("--ui-dir", "ui_dir", default=None, metavar="DIR",
              help="Serve static UI assets from this directory.")
@click.option("--cors-origin", "cors_origin", default=None,
              help="Allow this browser origin to call the API.")
@click.option("--token", default=None, help="Require this bearer token on the API.")
def serve_cmd(project_path: str, addr: str, ui_dir, cors_origin, token) -> None:
    """Serve the project over HTTP (API under /api/v1)."""
    try:
        import uvicorn

        from .server import create_app

        host, _, port_text = addr.rpartition(":")
        if not host or not port_text.isdigit():
            raise TgmError("PARSE_ERROR", f"--addr must be host:port, got {addr!r}")
        app = create_app(project_path, ui_dir=ui_dir, cors_origin=cors_origin,
                         token=token)
        uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    except TgmError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
