"""DDL subset: parser, schema conversion, DDL rendering, round trips."""

import random

import pytest

from tgm.errors import TgmError
from tgm.model import ConstraintKind, EdgeKind
from tgm.relational import (
    Column,
    ForeignKey,
    RelationalModel,
    Table,
    datatype_to_sql_type,
    import_relational,
    model_to_schema,
    parse_ddl,
    render_ddl,
    schema_to_model,
    sql_type_to_datatype,
)

SIMPLE = """
CREATE TABLE Person (
    id INT PRIMARY KEY,
    name VARCHAR(40) NOT NULL,
    born DATE,
    active BOOLEAN
);
"""

WITH_FK = SIMPLE + """
CREATE TABLE Account (
    acc_no CHAR(10),
    owner INT NOT NULL,
    balance DECIMAL(12,2),
    PRIMARY KEY (acc_no),
    FOREIGN KEY (owner) REFERENCES Person (id)
);
"""


class TestParser:
    def test_columns_and_modifiers(self):
        model = parse_ddl(SIMPLE)
        person = model.table("Person")
        assert [c.name for c in person.columns] == ["id", "name", "born", "active"]
        assert person.column("id").sql_type == "INT"
        assert person.column("name").sql_type == "VARCHAR(40)"
        assert person.column("name").not_null
        assert person.primary_key == ("id",)
        # PRIMARY KEY normalizes to NOT NULL
        assert person.column("id").not_null

    def test_table_level_pk_and_fk(self):
        model = parse_ddl(WITH_FK)
        account = model.table("Account")
        assert account.primary_key == ("acc_no",)
        assert account.foreign_keys == (
            ForeignKey(("owner",), "Person", ("id",)),)

    def test_comments_and_case_insensitive_keywords(self):
        model = parse_ddl("-- header\ncreate table T (\n a int -- trailing\n);")
        assert model.table("T").column("a").sql_type == "INT"

    def test_parse_error_carries_position(self):
        with pytest.raises(TgmError) as err:
            parse_ddl("CREATE TABLE X (\n  a BANANA\n);")
        assert err.value.code == "PARSE_ERROR"
        assert err.value.details.get("line") == 2

    def test_duplicate_table_rejected(self):
        with pytest.raises(TgmError):
            parse_ddl("CREATE TABLE A (x INT); CREATE TABLE A (y INT);")

    def test_duplicate_column_rejected(self):
        with pytest.raises(TgmError):
            parse_ddl("CREATE TABLE A (x INT, x INT);")

    def test_two_primary_keys_rejected(self):
        with pytest.raises(TgmError):
            parse_ddl("CREATE TABLE A (x INT PRIMARY KEY, y INT PRIMARY KEY);")

    def test_unresolved_fk_rejected(self):
        with pytest.raises(TgmError) as err:
            parse_ddl("CREATE TABLE A (x INT, "
                      "FOREIGN KEY (x) REFERENCES Ghost (id));")
        assert err.value.code == "UNRESOLVED_REFERENCE"

    def test_fk_arity_mismatch_rejected(self):
        ddl = SIMPLE + ("CREATE TABLE B (x INT, y INT, "
                        "FOREIGN KEY (x, y) REFERENCES Person (id));")
        with pytest.raises(TgmError):
            parse_ddl(ddl)


class TestTypeMapping:
    @pytest.mark.parametrize("sql,kind", [
        ("INT", "integer"), ("CHAR(3)", "string"), ("VARCHAR(10)", "string"),
        ("DECIMAL(6,2)", "decimal"), ("DATE", "date"), ("BOOLEAN", "boolean"),
    ])
    def test_sql_to_datatype_kinds(self, sql, kind):
        assert sql_type_to_datatype(sql).kind == kind

    def test_char_is_fixed_length(self):
        dtype = sql_type_to_datatype("CHAR(4)")
        assert dtype.fixed and dtype.length == 4

    def test_decimal_precision_scale(self):
        dtype = sql_type_to_datatype("DECIMAL(6,2)")
        assert (dtype.precision, dtype.scale) == (6, 2)

    @pytest.mark.parametrize("sql", ["INT", "CHAR(3)", "VARCHAR(10)",
                                     "DECIMAL(6,2)", "DATE", "BOOLEAN"])
    def test_type_round_trip(self, sql):
        assert datatype_to_sql_type(sql_type_to_datatype(sql)) == sql


class TestSchemaConversion:
    def test_fk_becomes_function_edge(self):
        schema = model_to_schema(parse_ddl(WITH_FK), name="bank")
        edge = schema.edges[0]
        assert edge.kind is EdgeKind.FUNCTION
        assert edge.label == "references"
        child, parent = edge.endpoints
        assert child.node == "Account" and child.role == "owner"
        assert parent.node == "Person" and parent.role == "id"
        assert (parent.multiplicity.min, parent.multiplicity.max) == (1, 1)

    def test_pk_becomes_key_and_not_null(self):
        schema = model_to_schema(parse_ddl(SIMPLE), name="s")
        kinds = {(c.kind, c.properties) for c in schema.constraints
                 if c.node == "Person"}
        assert (ConstraintKind.KEY, ("id",)) in kinds
        assert (ConstraintKind.NOT_NULL, ("id",)) in kinds
        assert (ConstraintKind.NOT_NULL, ("name",)) in kinds

    def test_multi_key_not_exportable(self):
        schema = model_to_schema(parse_ddl(SIMPLE), name="s")
        from tgm.model import Constraint, TypedGraphSchema
        doubled = TypedGraphSchema(
            name="s", nodes=schema.nodes, edges=schema.edges,
            types=schema.types,
            constraints=schema.constraints + (
                Constraint(ConstraintKind.KEY, "Person", ("name",)),))
        with pytest.raises(TgmError) as err:
            schema_to_model(doubled)
        assert err.value.code == "UNSUPPORTED_CONSTRUCT"


class TestRoundTrip:
    def test_mediated_schema_round_trips(self):
        from conftest import MEDIATED_DDL
        model = parse_ddl(MEDIATED_DDL)
        again = parse_ddl(render_ddl(schema_to_model(model_to_schema(
            model, name="mediated"))))
        assert again.normalized() == model.normalized()

    def test_export_of_import_is_stable_text(self):
        schema = import_relational(WITH_FK, name="bank")
        text1 = render_ddl(schema_to_model(schema))
        text2 = render_ddl(schema_to_model(import_relational(text1, name="bank")))
        assert text1 == text2


# --------------------------------------------------------------------------
# randomized DDL fixtures
# --------------------------------------------------------------------------

TYPES = ["INT", "VARCHAR(20)", "VARCHAR(255)", "CHAR(2)", "CHAR(8)",
         "DECIMAL(10,2)", "DECIMAL(18,6)", "DATE", "BOOLEAN"]


def random_model(rng: random.Random) -> RelationalModel:
    tables = []
    for t in range(rng.randint(1, 5)):
        name = f"T{t}_{rng.choice('abcdef')}"
        n_cols = rng.randint(1, 6)
        columns = []
        for c in range(n_cols):
            columns.append(Column(
                name=f"c{c}", sql_type=rng.choice(TYPES),
                not_null=rng.random() < 0.3))
        pk: tuple[str, ...] = ()
        if rng.random() < 0.8:
            k = rng.randint(1, min(2, n_cols))
            pk_cols = rng.sample(range(n_cols), k)
            pk = tuple(f"c{i}" for i in sorted(pk_cols))
            # PK implies NOT NULL in the parsed form
            columns = [Column(col.name, col.sql_type,
                              col.not_null or col.name in pk)
                       for col in columns]
        fks = []
        if tables and pk and rng.random() < 0.6:
            parent = rng.choice(tables)
            if parent.primary_key:
                child_cols = tuple(
                    f"c{i}" for i in rng.sample(range(n_cols),
                                                min(len(parent.primary_key),
                                                    n_cols)))
                if len(child_cols) == len(parent.primary_key):
                    fks.append(ForeignKey(child_cols, parent.name,
                                          parent.primary_key))
        tables.append(Table(name=name, columns=tuple(columns),
                            primary_key=pk, foreign_keys=tuple(fks)))
    return RelationalModel(tuple(tables))


@pytest.mark.parametrize("seed", range(25))
def test_randomized_ddl_round_trip(seed):
    """parse(render(model)) == model and the full schema round trip
    parse(export(import(ddl))) preserves the relational model."""
    model = random_model(random.Random(seed))
    ddl = render_ddl(model)
    parsed = parse_ddl(ddl)
    assert parsed.normalized() == model.normalized()

    schema = model_to_schema(parsed, name=f"fixture{seed}")
    back = parse_ddl(render_ddl(schema_to_model(schema)))
    assert back.normalized() == parsed.normalized()
