"""Relational DDL import/export.

Supported grammar (one statement per table, case-insensitive keywords):

    CREATE TABLE name (
        column type [NOT NULL] [PRIMARY KEY],
        ...
        [, PRIMARY KEY (col, ...)]
        [, FOREIGN KEY (col, ...) REFERENCES table (col, ...)]
    );

    type: CHAR(n) | VARCHAR(n) | INT | DECIMAL(p,s) | DATE | BOOLEAN

Tables become nodes (columns as typed properties, PRIMARY KEY as a KEY
constraint, NOT NULL as constraints) and each foreign key becomes one
FUNCTION edge directed referencing -> referenced with target multiplicity
1..1.  The endpoint roles carry the comma-joined column lists so that the
export can reconstruct the FOREIGN KEY clause exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import TgmError, parse_error
from .model import (
    ANY,
    BOOLEAN,
    Constraint,
    ConstraintKind,
    DATE,
    DataType,
    EXACTLY_ONE,
    EdgeKind,
    Endpoint,
    INTEGER,
    SchemaEdge,
    SchemaNode,
    TypedGraphSchema,
    decimal_type,
    string_type,
)

KEYWORDS = {"CREATE", "TABLE", "PRIMARY", "KEY", "FOREIGN", "REFERENCES", "NOT", "NULL",
            "CHAR", "VARCHAR", "INT", "DECIMAL", "DATE", "BOOLEAN"}


# --------------------------------------------------------------------------
# relational model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Column:
    name: str
    sql_type: str  # normalized: CHAR(6), VARCHAR(40), INT, DECIMAL(10,2), DATE, BOOLEAN
    not_null: bool = False


@dataclass(frozen=True)
class ForeignKey:
    columns: tuple[str, ...]
    ref_table: str
    ref_columns: tuple[str, ...]


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[Column, ...]
    primary_key: tuple[str, ...] = ()
    foreign_keys: tuple[ForeignKey, ...] = ()

    def column(self, name: str) -> Column | None:
        for c in self.columns:
            if c.name == name:
                return c
        return None


@dataclass(frozen=True)
class RelationalModel:
    tables: tuple[Table, ...] = ()

    def table(self, name: str) -> Table | None:
        for t in self.tables:
            if t.name == name:
                return t
        return None

    def normalized(self) -> dict:
        """Order-insensitive comparison form: table -> (column set, PK, FK set)."""
        return {
            t.name: (
                frozenset((c.name, c.sql_type, c.not_null) for c in t.columns),
                t.primary_key,
                frozenset(t.foreign_keys),
            )
            for t in self.tables
        }


# --------------------------------------------------------------------------
# tokenizer / parser
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # ident|number|punct|eof
    text: str
    line: int
    column: int


def _tokenize(ddl: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(ddl)
    while i < n:
        ch = ddl[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "-" and ddl[i:i + 2] == "--":  # line comment
            while i < n and ddl[i] != "\n":
                i += 1
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (ddl[i].isalnum() or ddl[i] == "_"):
                i += 1
            tokens.append(_Token("ident", ddl[start:i], line, col))
            col += i - start
            continue
        if ch.isdigit():
            start = i
            while i < n and ddl[i].isdigit():
                i += 1
            tokens.append(_Token("number", ddl[start:i], line, col))
            col += i - start
            continue
        if ch in "(),;":
            tokens.append(_Token("punct", ch, line, col))
            i += 1
            col += 1
            continue
        raise parse_error(f"unexpected character {ch!r}", line=line, column=col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def _fail(self, expected: str) -> TgmError:
        tok = self.cur
        got = tok.text or "end of input"
        return parse_error(f"expected {expected}, got {got!r}",
                           line=tok.line, column=tok.column)

    def keyword(self, word: str) -> None:
        if not self.peek_keyword(word):
            raise self._fail(word)
        self.pos += 1

    def peek_keyword(self, word: str) -> bool:
        tok = self.cur
        return tok.kind == "ident" and tok.text.upper() == word

    def punct(self, ch: str) -> None:
        if not (self.cur.kind == "punct" and self.cur.text == ch):
            raise self._fail(repr(ch))
        self.pos += 1

    def try_punct(self, ch: str) -> bool:
        if self.cur.kind == "punct" and self.cur.text == ch:
            self.pos += 1
            return True
        return False

    def identifier(self) -> str:
        tok = self.cur
        if tok.kind != "ident" or tok.text.upper() in KEYWORDS:
            raise self._fail("identifier")
        self.pos += 1
        return tok.text

    def number(self) -> int:
        tok = self.cur
        if tok.kind != "number":
            raise self._fail("number")
        self.pos += 1
        return int(tok.text)


def _parse_sql_type(p: _Parser) -> str:
    tok = p.cur
    word = tok.text.upper() if tok.kind == "ident" else ""
    if word == "CHAR" or word == "VARCHAR":
        p.pos += 1
        p.punct("(")
        n = p.number()
        p.punct(")")
        return f"{word}({n})"
    if word == "INT":
        p.pos += 1
        return "INT"
    if word == "DECIMAL":
        p.pos += 1
        p.punct("(")
        prec = p.number()
        p.punct(",")
        scale = p.number()
        p.punct(")")
        return f"DECIMAL({prec},{scale})"
    if word == "DATE":
        p.pos += 1
        return "DATE"
    if word == "BOOLEAN":
        p.pos += 1
        return "BOOLEAN"
    raise p._fail("a column type (CHAR, VARCHAR, INT, DECIMAL, DATE, BOOLEAN)")


def parse_ddl(ddl: str) -> RelationalModel:
    """Parse DDL text; PK columns are normalized to NOT NULL.

    Reference resolution (FK target tables/columns) is a second pass so
    forward references between tables work.
    """
    p = _Parser(_tokenize(ddl))
    raw_tables: list[tuple[Table, _Token]] = []

    while p.cur.kind != "eof":
        start = p.cur
        p.keyword("CREATE")
        p.keyword("TABLE")
        name = p.identifier()
        p.punct("(")
        columns: list[Column] = []
        pk: tuple[str, ...] = ()
        fks: list[ForeignKey] = []
        while True:
            if p.peek_keyword("PRIMARY"):
                tok = p.cur
                p.keyword("PRIMARY")
                p.keyword("KEY")
                p.punct("(")
                cols = [p.identifier()]
                while p.try_punct(","):
                    cols.append(p.identifier())
                p.punct(")")
                if pk:
                    raise parse_error(f"table {name} declares two primary keys",
                                      line=tok.line, column=tok.column)
                pk = tuple(cols)
            elif p.peek_keyword("FOREIGN"):
                p.keyword("FOREIGN")
                p.keyword("KEY")
                p.punct("(")
                local = [p.identifier()]
                while p.try_punct(","):
                    local.append(p.identifier())
                p.punct(")")
                p.keyword("REFERENCES")
                ref_table = p.identifier()
                p.punct("(")
                ref_cols = [p.identifier()]
                while p.try_punct(","):
                    ref_cols.append(p.identifier())
                p.punct(")")
                fks.append(ForeignKey(tuple(local), ref_table, tuple(ref_cols)))
            else:
                col_tok = p.cur
                col_name = p.identifier()
                sql_type = _parse_sql_type(p)
                not_null = False
                inline_pk = False
                while True:
                    if p.peek_keyword("NOT"):
                        p.keyword("NOT")
                        p.keyword("NULL")
                        not_null = True
                    elif p.peek_keyword("PRIMARY"):
                        p.keyword("PRIMARY")
                        p.keyword("KEY")
                        inline_pk = True
                    else:
                        break
                if any(c.name == col_name for c in columns):
                    raise parse_error(f"duplicate column {col_name} in table {name}",
                                      line=col_tok.line, column=col_tok.column)
                columns.append(Column(col_name, sql_type, not_null))
                if inline_pk:
                    if pk:
                        raise parse_error(f"table {name} declares two primary keys",
                                          line=col_tok.line, column=col_tok.column)
                    pk = (col_name,)
            if not p.try_punct(","):
                break
        p.punct(")")
        p.try_punct(";")
        table = Table(name, tuple(columns), pk, tuple(fks))
        raw_tables.append((table, start))

    names = [t.name for t, _ in raw_tables]
    for (t, tok) in raw_tables:
        if names.count(t.name) > 1:
            raise parse_error(f"duplicate table {t.name}", line=tok.line, column=tok.column)

    # intra-table checks + PK not-null normalization
    normalized: list[Table] = []
    for t, tok in raw_tables:
        col_names = {c.name for c in t.columns}
        for c in t.primary_key:
            if c not in col_names:
                raise parse_error(f"primary key column {c} not in table {t.name}",
                                  line=tok.line, column=tok.column)
        columns = tuple(
            Column(c.name, c.sql_type, True) if c.name in t.primary_key else c
            for c in t.columns)
        normalized.append(Table(t.name, columns, t.primary_key, t.foreign_keys))

    # second pass: FK resolution
    by_name = {t.name: t for t in normalized}
    for t in normalized:
        for fk in t.foreign_keys:
            ref = by_name.get(fk.ref_table)
            if ref is None:
                raise TgmError("UNRESOLVED_REFERENCE",
                               f"table {t.name}: foreign key references unknown table "
                               f"{fk.ref_table}")
            for c in fk.columns:
                if t.column(c) is None:
                    raise TgmError("UNRESOLVED_REFERENCE",
                                   f"table {t.name}: foreign key uses unknown column {c}")
            for c in fk.ref_columns:
                if ref.column(c) is None:
                    raise TgmError("UNRESOLVED_REFERENCE",
                                   f"table {t.name}: foreign key references unknown column "
                                   f"{fk.ref_table}.{c}")
            if len(fk.columns) != len(fk.ref_columns):
                raise TgmError("UNRESOLVED_REFERENCE",
                               f"table {t.name}: foreign key column count mismatch")

    return RelationalModel(tuple(normalized))


# --------------------------------------------------------------------------
# SQL type <-> DataType
# --------------------------------------------------------------------------


def sql_type_to_datatype(sql_type: str) -> DataType:
    upper = sql_type.upper()
    if upper.startswith("CHAR("):
        return string_type(length=int(upper[5:-1]), fixed=True)
    if upper.startswith("VARCHAR("):
        return string_type(length=int(upper[8:-1]))
    if upper == "INT":
        return INTEGER
    if upper.startswith("DECIMAL("):
        prec, scale = upper[8:-1].split(",")
        return decimal_type(precision=int(prec), scale=int(scale))
    if upper == "DATE":
        return DATE
    if upper == "BOOLEAN":
        return BOOLEAN
    raise TgmError("UNSUPPORTED_CONSTRUCT", f"unsupported SQL type {sql_type}")


def datatype_to_sql_type(dtype: DataType) -> str:
    if dtype.kind == "string":
        if dtype.length is not None:
            return f"CHAR({dtype.length})" if dtype.fixed else f"VARCHAR({dtype.length})"
        return "VARCHAR(255)"
    if dtype.kind == "enum":
        return f"VARCHAR({max(len(v) for v in dtype.values)})"
    if dtype.kind == "integer":
        return "INT"
    if dtype.kind == "decimal":
        if dtype.precision is not None and dtype.scale is not None:
            return f"DECIMAL({dtype.precision},{dtype.scale})"
        return "DECIMAL(18,6)"
    if dtype.kind == "date":
        return "DATE"
    if dtype.kind == "boolean":
        return "BOOLEAN"
    raise TgmError("UNSUPPORTED_CONSTRUCT",
                   f"cannot export {dtype.kind} property to a relational column")


# --------------------------------------------------------------------------
# import / export
# --------------------------------------------------------------------------


def model_to_schema(model: RelationalModel, name: str) -> TypedGraphSchema:
    nodes = []
    constraints = []
    for t in model.tables:
        props = tuple((c.name, sql_type_to_datatype(c.sql_type)) for c in t.columns)
        nodes.append(SchemaNode(id=t.name, label=t.name, properties=props))
        if t.primary_key:
            constraints.append(Constraint(ConstraintKind.KEY, t.name, t.primary_key))
        for c in t.columns:
            if c.not_null:
                constraints.append(Constraint(ConstraintKind.NOT_NULL, t.name, (c.name,)))

    edges = []
    for t in model.tables:
        for i, fk in enumerate(t.foreign_keys, start=1):
            edges.append(SchemaEdge(
                id=f"fk_{t.name}_{i}",
                label="references",
                kind=EdgeKind.FUNCTION,
                endpoints=(
                    Endpoint(t.name, ",".join(fk.columns), ANY),
                    Endpoint(fk.ref_table, ",".join(fk.ref_columns), EXACTLY_ONE),
                ),
            ))

    return TypedGraphSchema(name=name, nodes=tuple(nodes), edges=tuple(edges),
                            constraints=tuple(constraints))


def import_relational(ddl: str, name: str = "relational") -> TypedGraphSchema:
    """One node per table, one FUNCTION edge per foreign key."""
    return model_to_schema(parse_ddl(ddl), name)


def schema_to_model(schema: TypedGraphSchema) -> RelationalModel:
    """Lower a schema back to tables; raises UNSUPPORTED_CONSTRUCT for shapes
    with no relational equivalent (hyper-edges, generalization)."""
    keys: dict[str, tuple[str, ...]] = {}
    not_null: dict[str, set[str]] = {}
    for c in schema.constraints:
        label = schema.nodes_by_id[c.node].label
        if c.kind is ConstraintKind.KEY:
            if label in keys:
                raise TgmError("UNSUPPORTED_CONSTRUCT",
                               f"node {label} has more than one KEY constraint")
            keys[label] = c.properties
        elif c.kind is ConstraintKind.NOT_NULL:
            not_null.setdefault(label, set()).add(c.properties[0])

    # columns per table, keyed by node label; synthesized FK columns appended
    columns: dict[str, list[Column]] = {}
    for n in schema.nodes:
        cols = []
        nn = not_null.get(n.label, set())
        pk = set(keys.get(n.label, ()))
        for pname, ptype in n.properties:
            cols.append(Column(pname, datatype_to_sql_type(ptype),
                               pname in nn or pname in pk))
        columns[n.label] = cols

    fks: dict[str, list[ForeignKey]] = {n.label: [] for n in schema.nodes}
    synthetic_pk: dict[str, tuple[str, ...]] = {}

    for e in schema.edges:
        if len(e.endpoints) != 2:
            raise TgmError("UNSUPPORTED_CONSTRUCT",
                           f"edge {e.id} has {len(e.endpoints)} endpoints; "
                           "reify hyper-edges before export")
        if e.kind is EdgeKind.GENERALIZATION:
            raise TgmError("UNSUPPORTED_CONSTRUCT",
                           f"edge {e.id} is a generalization; reify before export")
        if e.kind is EdgeKind.FUNCTION:
            child_ep, parent_ep = e.endpoints[0], e.endpoints[1]
        else:  # association and aggregation export child -> parent
            parent_ep, child_ep = e.endpoints[0], e.endpoints[1]
        child = schema.nodes_by_id[child_ep.node]
        parent = schema.nodes_by_id[parent_ep.node]

        local = tuple(child_ep.role.split(","))
        ref = tuple(parent_ep.role.split(","))
        child_cols = {c.name for c in columns[child.label]}
        parent_cols = {c.name for c in columns[parent.label]}
        if (len(local) == len(ref) and all(c in child_cols for c in local)
                and all(c in parent_cols for c in ref)):
            fks[child.label].append(ForeignKey(local, parent.label, ref))
            continue

        # roles are not column lists: synthesize the join columns
        ref_key = keys.get(parent.label) or synthetic_pk.get(parent.label)
        if ref_key is None:
            surrogate = _fresh_column_name("id", parent_cols)
            columns[parent.label].append(Column(surrogate, "INT", True))
            keys[parent.label] = (surrogate,)
            synthetic_pk[parent.label] = (surrogate,)
            ref_key = (surrogate,)
        local_names = []
        parent_by_name = {c.name: c for c in columns[parent.label]}
        for prop in ref_key:
            fresh = _fresh_column_name(f"{parent.label}_{prop}", child_cols)
            child_cols.add(fresh)
            columns[child.label].append(Column(fresh, parent_by_name[prop].sql_type, False))
            local_names.append(fresh)
        fks[child.label].append(ForeignKey(tuple(local_names), parent.label, ref_key))

    tables = tuple(
        Table(n.label, tuple(columns[n.label]), keys.get(n.label, ()),
              tuple(fks[n.label]))
        for n in schema.nodes)
    return RelationalModel(tables)


def _fresh_column_name(base: str, taken: set[str]) -> str:
    name = base
    i = 1
    while name in taken:
        i += 1
        name = f"{base}{i}"
    return name


def render_ddl(model: RelationalModel) -> str:
    parts = []
    for t in model.tables:
        lines = []
        for c in t.columns:
            suffix = " NOT NULL" if c.not_null else ""
            lines.append(f"  {c.name} {c.sql_type}{suffix}")
        if t.primary_key:
            lines.append(f"  PRIMARY KEY ({', '.join(t.primary_key)})")
        for fk in t.foreign_keys:
            lines.append(f"  FOREIGN KEY ({', '.join(fk.columns)}) "
                         f"REFERENCES {fk.ref_table} ({', '.join(fk.ref_columns)})")
        body = ",\n".join(lines)
        parts.append(f"CREATE TABLE {t.name} (\n{body}\n);")
    return "\n\n".join(parts) + ("\n" if parts else "")


def export_relational(schema: TypedGraphSchema) -> str:
    """DDL text; parse(export(import(ddl))) equals parse(ddl) structurally."""
    return render_ddl(schema_to_model(schema))
