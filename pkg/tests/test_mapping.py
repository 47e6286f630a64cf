"""Transform semantics, rule compilation, path enumeration, commutativity."""

from datetime import date
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import build_admin, build_hospital, build_mediated, example_rules, ref
from tgm.errors import TgmError
from tgm.mapping import (
    Aggregate,
    AggregateFn,
    Cast,
    ChainMiss,
    CompileContext,
    ConflictPolicy,
    Constant,
    Identity,
    MappingRule,
    MappingSet,
    RuleKind,
    Scale,
    Split,
    SplitPart,
    Translate,
    apply_value_transform,
    cast_value,
    check_commutativity,
    compile_mapping,
    compile_rule,
    dumps_mapping,
    enumerate_paths,
    fraction_to_decimal,
    normalize_value,
    parse_mapping,
    path_from_rule_ids,
    transform_from_json,
    transform_to_json,
    values_equal,
)
from tgm.matching import ElementRef
from tgm.model import (
    BOOLEAN,
    DATE,
    INTEGER,
    INode,
    InstanceGraph,
    STRING,
    SchemaNode,
    TypedGraphSchema,
    decimal_type,
)


class TestTransforms:
    @pytest.mark.parametrize("t", [
        Identity(),
        Cast(to=decimal_type(6, 2)),
        Translate(table=(("a", "b"),), default="z", has_default=True),
        Scale(factor=Fraction(5, 9), offset=Fraction(-160, 9)),
        Aggregate(AggregateFn.COUNT, group_by=("hospital",), count_nulls=True),
        Split(parts=(SplitPart("a", delimiter="-", index=0),
                     SplitPart("b", start=0, end=3))),
        Constant(value=Decimal("1.50")),
    ])
    def test_round_trip(self, t):
        assert transform_from_json(transform_to_json(t)) == t

    def test_translate_lookup(self):
        t = Translate(table=(("north", "N"), (Decimal("1.50"), "x")))
        assert t.lookup("north") == (True, "N")
        assert t.lookup(Fraction(3, 2)) == (True, "x")  # numeric keys unify
        assert t.lookup("west") == (False, None)

    def test_translate_default(self):
        t = Translate(table=(("a", 1),), default=0, has_default=True)
        assert t.lookup("zzz") == (True, 0)

    def test_translate_duplicate_keys_rejected(self):
        with pytest.raises(ValueError):
            Translate(table=((Decimal("1.0"), "a"), (1, "b")))

    def test_split_part_extract(self):
        by_delim = SplitPart("a", delimiter="-", index=1)
        assert by_delim.extract("x-y-z") == "y"
        assert by_delim.extract("plain") is None
        by_width = SplitPart("b", start=2, end=5)
        assert by_width.extract("abcdefg") == "cde"

    def test_split_part_needs_exactly_one_mode(self):
        with pytest.raises(ValueError):
            SplitPart("a")
        with pytest.raises(ValueError):
            SplitPart("a", delimiter="-", index=0, start=0, end=2)

    def test_split_overlapping_ranges_rejected(self):
        with pytest.raises(ValueError):
            Split(parts=(SplitPart("a", start=0, end=4),
                         SplitPart("b", start=3, end=6)))

    def test_split_duplicate_targets_rejected(self):
        with pytest.raises(ValueError):
            Split(parts=(SplitPart("a", delimiter="-", index=0),
                         SplitPart("a", delimiter="-", index=1)))

    def test_unknown_transform_kind(self):
        with pytest.raises(TgmError) as err:
            transform_from_json({"kind": "frobnicate"})
        assert err.value.code == "PARSE_ERROR"


class TestRuleKind:
    def test_split_is_one_to_many(self):
        rule = MappingRule("r", (ref("s", "property", "A.p"),),
                           ref("t", "node", "B"),
                           Split(parts=(SplitPart("q", delimiter="-", index=0),)))
        assert rule.kind is RuleKind.ONE_TO_MANY
        assert rule.effective_reliability == 2

    def test_multi_source_is_many_to_one(self):
        rule = MappingRule("r", (ref("s", "property", "A.p"),
                                 ref("s", "property", "A.q")),
                           ref("t", "property", "B.r"))
        assert rule.kind is RuleKind.MANY_TO_ONE

    def test_aggregate_is_many_to_one(self):
        rule = MappingRule("r", (ref("s", "property", "A.p"),),
                           ref("t", "property", "B.r"),
                           Aggregate(AggregateFn.SUM))
        assert rule.kind is RuleKind.MANY_TO_ONE

    def test_plain_rule_is_one_to_one(self):
        rule = MappingRule("r", (ref("s", "property", "A.p"),),
                           ref("t", "property", "B.r"))
        assert rule.kind is RuleKind.ONE_TO_ONE

    def test_declared_reliability(self):
        rule = MappingRule("r", (ref("s", "property", "A.p"),),
                           ref("t", "node", "B"),
                           Split(parts=(SplitPart("q", delimiter="-", index=0),)),
                           reliability=1)
        assert rule.effective_reliability == 1
        with pytest.raises(ValueError):
            MappingRule("r", (ref("s", "property", "A.p"),),
                        ref("t", "property", "B.r"), reliability=4)


class TestConflictPolicy:
    def test_parse_forms(self):
        assert ConflictPolicy.from_json("mean") == ConflictPolicy("mean")
        assert ConflictPolicy.from_json({"priority": ["a", "b"]}) == \
            ConflictPolicy("priority", ("a", "b"))

    def test_priority_needs_order(self):
        with pytest.raises(ValueError):
            ConflictPolicy("priority")

    def test_unknown_kind(self):
        with pytest.raises(TgmError):
            ConflictPolicy.from_json("vote")

    def test_rank_matches_full_ref_or_schema(self):
        policy = ConflictPolicy("priority", ("clinic:CStats.beds", "office"))
        assert policy.rank(ref("clinic", "property", "CStats.beds")) == 0
        assert policy.rank(ref("office", "property", "OStats.beds")) == 1
        assert policy.rank(ref("other", "property", "X.y")) == 2


class TestSerialization:
    def test_mapping_set_round_trip(self, example_mapping):
        text = dumps_mapping(example_mapping)
        assert parse_mapping(text) == example_mapping

    def test_rule_extras_survive(self):
        rule = MappingRule(
            "r", (ref("s", "edge", "e"),), ref("t", "edge", "f"),
            endpoint_map=("r1", "r2"))
        assert MappingRule.from_json(rule.to_json()) == rule
        merged = MappingRule(
            "m", (ref("a", "property", "A.p"), ref("b", "property", "B.q")),
            ref("t", "property", "C.r"),
            conflict_policy=ConflictPolicy("priority", ("a",)),
            per_source=(Translate(table=(("x", "y"),)), Identity()))
        assert MappingRule.from_json(merged.to_json()) == merged

    def test_unknown_field_rejected(self):
        doc = MappingRule("r", (ref("s", "property", "A.p"),),
                          ref("t", "property", "B.q")).to_json()
        doc["extra"] = 1
        with pytest.raises(TgmError) as err:
            MappingRule.from_json(doc)
        assert err.value.code == "PARSE_ERROR"

    def test_missing_field_rejected(self):
        with pytest.raises(TgmError):
            MappingRule.from_json({"id": "r"})

    def test_parse_error_carries_location(self):
        with pytest.raises(TgmError) as err:
            parse_mapping('{"rules": [{"id": "r"}], "keys": []}')
        assert err.value.code == "PARSE_ERROR"


@pytest.fixture(scope="module")
def compile_ctx():
    hospital_schema, _ = build_hospital()
    admin_schema, _ = build_admin()
    mediated = build_mediated()
    schemas = {s.name: s for s in (hospital_schema, admin_schema, mediated)}
    return CompileContext(schemas=schemas, target_schema=mediated)


class TestCompile:
    def test_example_mapping_compiles(self, compile_ctx, example_mapping):
        accepted = set()
        from conftest import ACCEPTED_NODE_PAIRS, ACCEPTED_PROPERTY_PAIRS
        for schema, src, target in ACCEPTED_NODE_PAIRS:
            accepted.add((ref(schema, "node", src), ref("mediated", "node", target)))
        for schema, src, target in ACCEPTED_PROPERTY_PAIRS:
            accepted.add((ref(schema, "property", src),
                          ref("mediated", "property", target)))
        ctx = CompileContext(compile_ctx.schemas, compile_ctx.target_schema,
                             frozenset(accepted))
        compiled = compile_mapping(example_mapping, ctx)
        warned = {c.rule.id for c in compiled if c.warnings}
        # rules touching refs outside the accepted set are flagged, not refused
        assert warned == {"r08_pop_country", "r11_region_name",
                          "r12_name_code", "r14_stats_pop"}
        assert all("UNMATCHED_RULE" in w for c in compiled for w in c.warnings)

    def test_unknown_schema(self, compile_ctx):
        rule = MappingRule("r", (ref("nope", "property", "A.p"),),
                           ref("mediated", "property", "Country.name"))
        with pytest.raises(TgmError) as err:
            compile_rule(rule, compile_ctx)
        assert err.value.code == "UNRESOLVED_REFERENCE"

    def test_unknown_property(self, compile_ctx):
        rule = MappingRule("r", (ref("hospital", "property", "Record.ghost"),),
                           ref("mediated", "property", "Country.name"))
        with pytest.raises(TgmError) as err:
            compile_rule(rule, compile_ctx)
        assert err.value.code == "UNRESOLVED_REFERENCE"

    def test_target_must_live_in_target_schema(self, compile_ctx):
        rule = MappingRule("r", (ref("hospital", "property", "Record.icd"),),
                           ref("hospital", "property", "Record.region"))
        with pytest.raises(TgmError) as err:
            compile_rule(rule, compile_ctx)
        assert err.value.code == "UNRESOLVED_REFERENCE"

    def test_split_needs_single_string_source(self, compile_ctx):
        split = Split(parts=(SplitPart("name", delimiter="-", index=0),))
        two = MappingRule("r", (ref("hospital", "property", "Record.icd"),
                                ref("hospital", "property", "Record.region")),
                          ref("mediated", "node", "Country"), split)
        with pytest.raises(TgmError) as err:
            compile_rule(two, compile_ctx)
        assert err.value.code == "ARITY_MISMATCH"
        numeric = MappingRule("r", (ref("hospital", "property", "Record.patients"),),
                              ref("mediated", "node", "Country"), split)
        with pytest.raises(TgmError) as err:
            compile_rule(numeric, compile_ctx)
        assert err.value.code == "TYPE_MISMATCH"

    def test_split_part_must_name_target_property(self, compile_ctx):
        split = Split(parts=(SplitPart("ghost", delimiter="-", index=0),))
        rule = MappingRule("r", (ref("hospital", "property", "Record.icd"),),
                           ref("mediated", "node", "Country"), split)
        with pytest.raises(TgmError) as err:
            compile_rule(rule, compile_ctx)
        assert err.value.code == "UNRESOLVED_REFERENCE"

    def test_scale_requires_numeric_endpoints(self, compile_ctx):
        rule = MappingRule("r", (ref("hospital", "property", "Record.region"),),
                           ref("mediated", "property", "Population.population"),
                           Scale(factor=Fraction(2)))
        with pytest.raises(TgmError) as err:
            compile_rule(rule, compile_ctx)
        assert err.value.code == "TYPE_MISMATCH"

    def test_sum_requires_numeric_source(self, compile_ctx):
        rule = MappingRule("r", (ref("hospital", "property", "Record.region"),),
                           ref("mediated", "property", "Population.population"),
                           Aggregate(AggregateFn.SUM))
        with pytest.raises(TgmError) as err:
            compile_rule(rule, compile_ctx)
        assert err.value.code == "TYPE_MISMATCH"

    def test_cast_must_land_on_target_kind(self, compile_ctx):
        rule = MappingRule("r", (ref("hospital", "property", "Record.patients"),),
                           ref("mediated", "property", "Population.population"),
                           Cast(to=STRING))
        with pytest.raises(TgmError) as err:
            compile_rule(rule, compile_ctx)
        assert err.value.code == "TYPE_MISMATCH"

    def test_translate_entries_checked_against_endpoint_types(self, compile_ctx):
        rule = MappingRule("r", (ref("hospital", "property", "Record.region"),),
                           ref("mediated", "property",
                               "PatientStatistics.regionCode"),
                           Translate(table=((7, "N01"),)))
        with pytest.raises(TgmError) as err:
            compile_rule(rule, compile_ctx)
        assert err.value.code == "TYPE_MISMATCH"
        rule = MappingRule("r", (ref("hospital", "property", "Record.region"),),
                           ref("mediated", "property",
                               "PatientStatistics.regionCode"),
                           Translate(table=(("N. Region", 1),)))
        with pytest.raises(TgmError) as err:
            compile_rule(rule, compile_ctx)
        assert err.value.code == "TYPE_MISMATCH"

    def test_group_by_must_resolve(self, compile_ctx):
        rule = MappingRule("r", (ref("hospital", "node", "Record"),),
                           ref("mediated", "node", "PatientStatistics"),
                           Aggregate(AggregateFn.COUNT, group_by=("ghost",)))
        with pytest.raises(TgmError) as err:
            compile_rule(rule, compile_ctx)
        assert err.value.code == "UNRESOLVED_REFERENCE"

    def test_endpoint_map_arity(self, aggregation_scenario):
        source, target, mapping, _ = aggregation_scenario
        ctx = CompileContext({"clinic": source, "med": target}, target)
        bad = MappingRule("r", (ref("clinic", "edge", "treats"),),
                          ref("med", "edge", "about"), endpoint_map=("a4_stats",))
        with pytest.raises(TgmError) as err:
            compile_rule(bad, ctx)
        assert err.value.code == "ARITY_MISMATCH"
        not_edge = MappingRule("r", (ref("clinic", "property", "Hospital.hid"),),
                               ref("med", "property", "Hospital2.hid"),
                               endpoint_map=("a", "b"))
        with pytest.raises(TgmError) as err:
            compile_rule(not_edge, ctx)
        assert err.value.code == "ARITY_MISMATCH"

    def test_edge_rule_compiles(self, aggregation_scenario):
        source, target, mapping, _ = aggregation_scenario
        ctx = CompileContext({"clinic": source, "med": target}, target)
        compiled = compile_mapping(mapping, ctx)
        assert [c.rule.id for c in compiled] == [r.id for r in mapping.rules]


REGION_REF = ref("hospital", "property", "Record.region")
CODE_REF = ref("mediated", "property", "Population.regionCode")


class TestPaths:
    def test_example_paths(self, example_mapping):
        paths = enumerate_paths(example_mapping, REGION_REF, CODE_REF)
        assert [p.rule_ids for p in paths] == [
            ("r10_stat_region", "r14_stats_pop"),
            ("r11_region_name", "r12_name_code"),
        ]

    def test_max_length_cuts_enumeration(self, example_mapping):
        assert enumerate_paths(example_mapping, REGION_REF, CODE_REF,
                               max_length=1) == []

    def test_identical_endpoints_give_no_paths(self, example_mapping):
        assert enumerate_paths(example_mapping, REGION_REF, REGION_REF) == []

    def test_path_from_rule_ids(self, example_mapping):
        path = path_from_rule_ids(example_mapping,
                                  ["r10_stat_region", "r14_stats_pop"])
        assert path.from_ref == REGION_REF
        assert path.to_ref == CODE_REF

    def test_multi_source_head_needs_explicit_start(self, example_mapping):
        with pytest.raises(TgmError):
            path_from_rule_ids(example_mapping,
                               ["r11_region_name", "r12_name_code"])
        path = path_from_rule_ids(example_mapping,
                                  ["r11_region_name", "r12_name_code"],
                                  from_ref=REGION_REF)
        assert path.to_ref == CODE_REF

    def test_broken_chain_rejected(self, example_mapping):
        with pytest.raises(TgmError) as err:
            path_from_rule_ids(example_mapping, ["r10_stat_region", "r13_icd"])
        assert err.value.code == "NON_COMPOSABLE"


def region_witness(*regions):
    nodes = tuple(INode(f"R{i}", "Record",
                        {"hospital": "Mercy", "region": r, "icd": "A01",
                         "patients": 1, "costFactor": Decimal("1.00")})
                  for i, r in enumerate(regions))
    return InstanceGraph("hospital", nodes, ())


class TestCommutativity:
    def two_paths(self, mapping):
        p1 = path_from_rule_ids(mapping, ["r10_stat_region", "r14_stats_pop"])
        p2 = path_from_rule_ids(mapping, ["r11_region_name", "r12_name_code"],
                                from_ref=REGION_REF)
        return p1, p2

    def test_example_paths_commute(self, example_mapping, hospital):
        schema, data = hospital
        p1, p2 = self.two_paths(example_mapping)
        result = check_commutativity(example_mapping, p1, p2, data, schema)
        assert result.commutes and not result.vacuous
        assert result.counterexamples == ()

    def test_perturbed_table_breaks_commutativity(self, example_mapping, hospital):
        schema, _ = hospital
        rules = []
        for r in example_mapping.rules:
            if r.id == "r12_name_code":
                r = MappingRule(r.id, r.sources, r.target,
                                Translate(table=(("N. Region", "N99"),
                                                 ("S. Region", "S02"))))
            rules.append(r)
        perturbed = MappingSet(tuple(rules), example_mapping.keys)
        p1, p2 = self.two_paths(perturbed)
        result = check_commutativity(perturbed, p1, p2,
                                     region_witness("N. Region"), schema)
        assert not result.commutes
        assert len(result.counterexamples) == 1
        ce = result.counterexamples[0]
        assert ce["input"] == "N. Region"
        assert ce["via1"] == "N01"
        assert ce["via2"] == "N99"

    def test_vacuous_when_no_witness_values(self, example_mapping, hospital):
        schema, _ = hospital
        p1, p2 = self.two_paths(example_mapping)
        empty = InstanceGraph("hospital", (), ())
        result = check_commutativity(example_mapping, p1, p2, empty, schema)
        assert result.commutes and result.vacuous

    def test_shared_translate_miss_counts_as_agreement(self, example_mapping,
                                                       hospital):
        schema, _ = hospital
        p1, p2 = self.two_paths(example_mapping)
        result = check_commutativity(example_mapping, p1, p2,
                                     region_witness("W. Region"), schema)
        assert result.commutes and not result.vacuous

    def test_endpoint_mismatch_rejected(self, example_mapping, hospital):
        schema, data = hospital
        p1, _ = self.two_paths(example_mapping)
        other = path_from_rule_ids(example_mapping, ["r13_icd"])
        with pytest.raises(TgmError) as err:
            check_commutativity(example_mapping, p1, other, data, schema)
        assert err.value.code == "NON_COMPOSABLE"


class TestValueHelpers:
    @pytest.mark.parametrize("value,dtype,expected", [
        ("12", INTEGER, 12),
        (" 7 ", INTEGER, 7),
        (Decimal("3.00"), INTEGER, 3),
        (True, STRING, "true"),
        (date(2024, 5, 1), STRING, "2024-05-01"),
        ("2024-05-01", DATE, date(2024, 5, 1)),
        ("false", BOOLEAN, False),
        (5, decimal_type(6, 2), Decimal("5")),
    ])
    def test_cast_value(self, value, dtype, expected):
        assert cast_value(value, dtype) == expected

    def test_cast_rejects_fractional_integer(self):
        with pytest.raises(TgmError) as err:
            cast_value(Decimal("3.5"), INTEGER)
        assert err.value.code == "TYPE_MISMATCH"

    def test_fraction_to_decimal_exact_when_ten_smooth(self):
        assert fraction_to_decimal(Fraction(1, 8), None) == Decimal("0.125")

    def test_fraction_to_decimal_rounds_half_even(self):
        assert fraction_to_decimal(Fraction(1, 8), 2) == Decimal("0.12")
        assert fraction_to_decimal(Fraction(3, 8), 2) == Decimal("0.38")
        assert fraction_to_decimal(Fraction(1, 3), 2) == Decimal("0.33")

    def test_values_equal_across_numeric_types(self):
        assert values_equal(Decimal("12.50"), Fraction(25, 2))
        assert values_equal(12, Decimal("12.000"))
        assert not values_equal(True, 1)  # booleans stay booleans

    def test_values_equal_unicode_normalization(self):
        assert values_equal("café", "café")

    def test_apply_scale(self):
        out = apply_value_transform(Scale(factor=Fraction(5, 9),
                                          offset=Fraction(-160, 9)), 32)
        assert out == Fraction(0)

    def test_apply_translate_miss_raises_chain_miss(self):
        with pytest.raises(ChainMiss):
            apply_value_transform(Translate(table=(("a", "b"),)), "zzz")

    def test_apply_aggregate_on_single_value(self):
        assert apply_value_transform(Aggregate(AggregateFn.COUNT), "x") == 1
        assert apply_value_transform(Aggregate(AggregateFn.MIN), 9) == 9

    def test_split_cannot_run_on_value_chain(self):
        split = Split(parts=(SplitPart("a", delimiter="-", index=0),))
        with pytest.raises(TgmError) as err:
            apply_value_transform(split, "x-y")
        assert err.value.code == "NON_COMPOSABLE"

    @given(st.integers(min_value=-10**12, max_value=10**12))
    def test_integer_string_round_trip(self, n):
        assert cast_value(cast_value(n, STRING), INTEGER) == n

    @given(st.fractions(min_value=-1000, max_value=1000, max_denominator=997),
           st.integers(min_value=0, max_value=8))
    def test_quantized_fraction_error_bound(self, f, scale):
        out = fraction_to_decimal(f, scale)
        # half-even keeps the result within half an ulp of the exact value
        assert abs(Fraction(out) - f) * 2 <= Fraction(1, 10 ** scale)
