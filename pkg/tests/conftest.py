"""Shared fixtures: the hospital/admin-office running example and the two
small merge and aggregation scenarios used across test modules."""

from __future__ import annotations

import pytest

from tgm import inference, relational
from tgm.mapping import (
    Aggregate,
    AggregateFn,
    ConflictPolicy,
    Identity,
    MappingRule,
    MappingSet,
    Translate,
    make_merge,
)
from tgm.matching import ElementRef, SynonymTable
from tgm.model import (
    Constraint,
    ConstraintKind,
    EdgeKind,
    Endpoint,
    IEdge,
    INode,
    InstanceGraph,
    INTEGER,
    Multiplicity,
    STRING,
    SchemaEdge,
    SchemaNode,
    TypedGraphSchema,
)
from tgm.project import Project

HOSPITAL_CSV = """\
hospital,region,icd,patients,costFactor
Mercy,N. Region,A01,12,1.50
Mercy,S. Region,B20,7,2.25
City,N. Region,A01,9,1.10
"""

ADMIN_JSON = """\
{
  "country": {
    "name": "Jakobsland",
    "code": "JL",
    "regions": [
      {"code": "N01", "label": "N. Region", "population": 230000},
      {"code": "S02", "label": "S. Region", "population": 180000}
    ]
  }
}
"""

MEDIATED_DDL = """\
-- mediated schema for the integration example
CREATE TABLE Country (
    code CHAR(2) PRIMARY KEY,
    name VARCHAR(80) NOT NULL
);

CREATE TABLE Population (
    regionCode CHAR(3) PRIMARY KEY,
    regionName VARCHAR(80),
    countryCode CHAR(2) NOT NULL,
    population INT,
    FOREIGN KEY (countryCode) REFERENCES Country (code)
);

CREATE TABLE PatientStatistics (
    hospital VARCHAR(80) NOT NULL,
    regionCode CHAR(3) NOT NULL,
    icd CHAR(3) NOT NULL,
    numPatients INT,
    avgCostFactor DECIMAL(6,2),
    PRIMARY KEY (hospital, regionCode, icd),
    FOREIGN KEY (regionCode) REFERENCES Population (regionCode)
);

CREATE TABLE IcdCatalog (
    icd CHAR(3) PRIMARY KEY,
    description VARCHAR(200)
);
"""

REGION_TABLE = (("N. Region", "N01"), ("S. Region", "S02"))

SYNONYMS = SynonymTable(
    groups=(
        ("record", "patientStatistics"),
        ("regions", "population"),
        ("region", "regionCode"),
        ("patients", "numPatients"),
        ("costFactor", "avgCostFactor"),
    ),
    distinct=(
        ("icd", "code"),
    ),
)


def build_hospital():
    header, rows = inference.parse_csv(HOSPITAL_CSV)
    result = inference.import_csv(header, rows, name="Record", schema_name="hospital")
    data = inference.csv_instance(header, rows, result.schema)
    return result.schema, data


def build_admin():
    doc = inference.load_json_document(ADMIN_JSON)
    result = inference.import_hierarchical(doc, schema_name="admin")
    data = inference.hierarchical_instance(doc, result.schema)
    return result.schema, data


def build_mediated():
    return relational.model_to_schema(relational.parse_ddl(MEDIATED_DDL),
                                      name="mediated")


def ref(schema: str, kind: str, target: str) -> ElementRef:
    return ElementRef(schema, kind, target)


def example_rules() -> MappingSet:
    region_translate = Translate(table=REGION_TABLE)
    rules = (
        MappingRule("r01_country", (ref("admin", "node", "country"),),
                    ref("mediated", "node", "Country"), Identity()),
        MappingRule("r02_population", (ref("admin", "node", "regions"),),
                    ref("mediated", "node", "Population"), Identity()),
        MappingRule("r03_stats", (ref("hospital", "node", "Record"),),
                    ref("mediated", "node", "PatientStatistics"), Identity()),
        MappingRule("r04_country_code", (ref("admin", "property", "country.code"),),
                    ref("mediated", "property", "Country.code"), Identity()),
        MappingRule("r05_country_name", (ref("admin", "property", "country.name"),),
                    ref("mediated", "property", "Country.name"), Identity()),
        MappingRule("r06_region_code", (ref("admin", "property", "regions.code"),),
                    ref("mediated", "property", "Population.regionCode"), Identity()),
        MappingRule("r07_region_pop",
                    (ref("admin", "property", "regions.population"),),
                    ref("mediated", "property", "Population.population"), Identity()),
        MappingRule("r08_pop_country", (ref("admin", "property", "country.code"),),
                    ref("mediated", "property", "Population.countryCode"), Identity()),
        MappingRule("r09_hospital", (ref("hospital", "property", "Record.hospital"),),
                    ref("mediated", "property", "PatientStatistics.hospital"),
                    Identity()),
        MappingRule("r10_stat_region", (ref("hospital", "property", "Record.region"),),
                    ref("mediated", "property", "PatientStatistics.regionCode"),
                    region_translate),
        make_merge("r11_region_name",
                   (ref("hospital", "property", "Record.region"),
                    ref("admin", "property", "regions.label")),
                   ref("mediated", "property", "Population.regionName"),
                   ConflictPolicy("priority", ("admin", "hospital"))),
        MappingRule("r12_name_code",
                    (ref("mediated", "property", "Population.regionName"),),
                    ref("mediated", "property", "Population.regionCode"),
                    region_translate),
        MappingRule("r13_icd", (ref("hospital", "property", "Record.icd"),),
                    ref("mediated", "property", "PatientStatistics.icd"), Identity()),
        MappingRule("r14_stats_pop",
                    (ref("mediated", "property", "PatientStatistics.regionCode"),),
                    ref("mediated", "property", "Population.regionCode"),
                    Aggregate(AggregateFn.MIN)),
        MappingRule("r15_patients", (ref("hospital", "property", "Record.patients"),),
                    ref("mediated", "property", "PatientStatistics.numPatients"),
                    Identity()),
        MappingRule("r16_cost", (ref("hospital", "property", "Record.costFactor"),),
                    ref("mediated", "property", "PatientStatistics.avgCostFactor"),
                    Identity()),
    )
    keys = (
        ("Country", ("code",)),
        ("Population", ("regionCode",)),
        ("PatientStatistics", ("hospital", "regionCode", "icd")),
    )
    return MappingSet(rules, keys)


ACCEPTED_NODE_PAIRS = (
    ("hospital", "Record", "PatientStatistics"),
    ("admin", "country", "Country"),
    ("admin", "regions", "Population"),
)

ACCEPTED_PROPERTY_PAIRS = (
    ("hospital", "Record.hospital", "PatientStatistics.hospital"),
    ("hospital", "Record.region", "PatientStatistics.regionCode"),
    ("hospital", "Record.icd", "PatientStatistics.icd"),
    ("hospital", "Record.patients", "PatientStatistics.numPatients"),
    ("hospital", "Record.costFactor", "PatientStatistics.avgCostFactor"),
    ("admin", "country.code", "Country.code"),
    ("admin", "country.name", "Country.name"),
    ("admin", "regions.code", "Population.regionCode"),
    ("admin", "regions.population", "Population.population"),
)


def corr_id(kind: str, schema: str, src: str, target: str) -> str:
    return f"m-{kind}-{schema}:{src}--mediated:{target}"


def build_example_project() -> Project:
    hospital_schema, _ = build_hospital()
    admin_schema, _ = build_admin()
    project = Project("running-example")
    project.add_source(hospital_schema)
    project.add_source(admin_schema)
    project.set_target(build_mediated())
    project.set_synonyms(SYNONYMS)
    project.run_match()
    for schema, src, target in ACCEPTED_NODE_PAIRS:
        project.decide(corr_id("node", schema, src, target), "ACCEPT", "expert")
    for schema, src, target in ACCEPTED_PROPERTY_PAIRS:
        project.decide(corr_id("property", schema, src, target), "ACCEPT", "expert")
    project.set_rules(example_rules())
    return project


@pytest.fixture(scope="session")
def hospital():
    return build_hospital()


@pytest.fixture(scope="session")
def admin():
    return build_admin()


@pytest.fixture(scope="session")
def mediated_schema():
    return build_mediated()


@pytest.fixture()
def example_project():
    return build_example_project()


@pytest.fixture(scope="session")
def example_mapping():
    return example_rules()


# --------------------------------------------------------------------------
# merge scenario: two overlapping statistics sources, one merged target
# --------------------------------------------------------------------------


def _stats_schema(name: str, node: str, region_prop: str) -> TypedGraphSchema:
    n = SchemaNode(id=node, label=node, properties=(
        ("sid", INTEGER), (region_prop, STRING), ("beds", INTEGER)))
    return TypedGraphSchema(
        name=name, nodes=(n,), edges=(),
        constraints=(Constraint(ConstraintKind.KEY, node, ("sid",)),))


def build_merge_scenario():
    clinic = _stats_schema("clinic", "CStats", "cregion")
    office = _stats_schema("office", "OStats", "oregion")
    merged_node = SchemaNode(id="Merged", label="Merged", properties=(
        ("sid", INTEGER), ("region", STRING), ("beds", INTEGER)))
    target = TypedGraphSchema(
        name="merged", nodes=(merged_node,), edges=(),
        constraints=(Constraint(ConstraintKind.KEY, "Merged", ("sid",)),))
    clinic_translate = Translate(table=(("north", "N"), ("south", "S")))
    office_translate = Translate(table=(("Nord", "N"), ("Sud", "S")))
    rules = (
        MappingRule("m1_clinic", (ref("clinic", "node", "CStats"),),
                    ref("merged", "node", "Merged"), Identity()),
        MappingRule("m2_office", (ref("office", "node", "OStats"),),
                    ref("merged", "node", "Merged"), Identity()),
        MappingRule("m3_sid_clinic", (ref("clinic", "property", "CStats.sid"),),
                    ref("merged", "property", "Merged.sid"), Identity()),
        MappingRule("m4_sid_office", (ref("office", "property", "OStats.sid"),),
                    ref("merged", "property", "Merged.sid"), Identity()),
        make_merge("m5_region",
                   (ref("clinic", "property", "CStats.cregion"),
                    ref("office", "property", "OStats.oregion")),
                   ref("merged", "property", "Merged.region"),
                   ConflictPolicy("priority", ("clinic", "office")),
                   translations=(clinic_translate, office_translate)),
        make_merge("m6_beds",
                   (ref("clinic", "property", "CStats.beds"),
                    ref("office", "property", "OStats.beds")),
                   ref("merged", "property", "Merged.beds"),
                   ConflictPolicy("mean")),
    )
    mapping = MappingSet(rules, keys=(("Merged", ("sid",)),))
    return {"clinic": clinic, "office": office}, target, mapping


def merge_sources(clinic_region="north", office_region="Nord",
                  clinic_beds=10, office_beds=12):
    clinic_graph = InstanceGraph("clinic", (
        INode("C1", "CStats", {"sid": 7, "cregion": clinic_region,
                               "beds": clinic_beds}),), ())
    office_graph = InstanceGraph("office", (
        INode("O1", "OStats", {"sid": 7, "oregion": office_region,
                               "beds": office_beds}),), ())
    return [clinic_graph, office_graph]


@pytest.fixture(scope="session")
def merge_scenario():
    return build_merge_scenario()


# --------------------------------------------------------------------------
# aggregation scenario: patients grouped per hospital, edges mapped along
# --------------------------------------------------------------------------


def build_aggregation_scenario():
    hospital_node = SchemaNode(id="Hospital", label="Hospital",
                               properties=(("hid", INTEGER), ("name", STRING)))
    patient_node = SchemaNode(id="Patient", label="Patient",
                              properties=(("pid", INTEGER), ("hospital", INTEGER)))
    treats = SchemaEdge(id="treats", label="treats", kind=EdgeKind.ASSOCIATION,
                        endpoints=(Endpoint("Hospital", "treating", Multiplicity(0, None)),
                                   Endpoint("Patient", "treated", Multiplicity(0, None))))
    source = TypedGraphSchema(
        name="clinic", nodes=(hospital_node, patient_node), edges=(treats,),
        constraints=(Constraint(ConstraintKind.KEY, "Hospital", ("hid",)),
                     Constraint(ConstraintKind.KEY, "Patient", ("pid",))))

    target_hospital = SchemaNode(id="Hospital2", label="Hospital2",
                                 properties=(("hid", INTEGER), ("name", STRING)))
    stats_node = SchemaNode(id="Stats", label="Stats",
                            properties=(("hid", INTEGER), ("numPatients", INTEGER)))
    about = SchemaEdge(id="about", label="about", kind=EdgeKind.ASSOCIATION,
                       endpoints=(Endpoint("Stats", "stat", Multiplicity(0, None)),
                                  Endpoint("Hospital2", "subject", Multiplicity(0, None))))
    target = TypedGraphSchema(
        name="med", nodes=(target_hospital, stats_node), edges=(about,),
        constraints=(Constraint(ConstraintKind.KEY, "Hospital2", ("hid",)),))

    rules = (
        MappingRule("a1_hospital", (ref("clinic", "node", "Hospital"),),
                    ref("med", "node", "Hospital2"), Identity()),
        MappingRule("a2_hid", (ref("clinic", "property", "Hospital.hid"),),
                    ref("med", "property", "Hospital2.hid"), Identity()),
        MappingRule("a3_name", (ref("clinic", "property", "Hospital.name"),),
                    ref("med", "property", "Hospital2.name"), Identity()),
        MappingRule("a4_stats", (ref("clinic", "node", "Patient"),),
                    ref("med", "node", "Stats"),
                    Aggregate(AggregateFn.COUNT, group_by=("hospital",))),
        MappingRule("a5_count", (ref("clinic", "property", "Patient.pid"),),
                    ref("med", "property", "Stats.numPatients"),
                    Aggregate(AggregateFn.COUNT)),
        MappingRule("a6_stat_hid", (ref("clinic", "property", "Patient.hospital"),),
                    ref("med", "property", "Stats.hid"), Identity()),
        MappingRule("a7_edge", (ref("clinic", "edge", "treats"),),
                    ref("med", "edge", "about"),
                    endpoint_map=("a4_stats", "a1_hospital")),
    )
    mapping = MappingSet(rules, keys=(("Hospital2", ("hid",)), ("Stats", ("hid",))))

    graph = InstanceGraph("clinic", (
        INode("H1", "Hospital", {"hid": 1, "name": "General"}),
        INode("P1", "Patient", {"pid": 100, "hospital": 1}),
        INode("P2", "Patient", {"pid": 200, "hospital": 1})),
        (IEdge("t1", "treats", ("H1", "P1")),
         IEdge("t2", "treats", ("H1", "P2"))))
    return source, target, mapping, graph


@pytest.fixture(scope="session")
def aggregation_scenario():
    return build_aggregation_scenario()
