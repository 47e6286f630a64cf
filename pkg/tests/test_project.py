"""Project state, revision accounting, persistence."""

import os

import pytest

from conftest import SYNONYMS, build_admin, build_hospital, build_mediated
from tgm import project as project_mod
from tgm.errors import TgmError
from tgm.mapping import MappingRule, MappingSet
from tgm.matching import MatchConfig, Status, SynonymTable
from tgm.project import (
    Project,
    dumps_project,
    load_project,
    parse_project,
    save_project,
)


def fresh_project():
    p = Project("demo")
    p.add_source(build_hospital()[0])
    p.add_source(build_admin()[0])
    p.set_target(build_mediated())
    return p


class TestMutations:
    def test_every_mutation_bumps_revision_once(self):
        p = Project("demo")
        assert p.revision == 0
        p.add_source(build_hospital()[0])
        assert p.revision == 1
        p.set_target(build_mediated())
        assert p.revision == 2
        p.set_synonyms(SYNONYMS)
        assert p.revision == 3
        p.set_config(MatchConfig())
        assert p.revision == 4
        p.run_match()
        assert p.revision == 5
        accepted = p.correspondences[0].id
        p.decide(accepted, "ACCEPT", "expert")
        assert p.revision == 6
        p.set_rules(MappingSet((), ()))
        assert p.revision == 7

    def test_duplicate_source_name_rejected(self):
        p = fresh_project()
        before = p.revision
        with pytest.raises(TgmError) as err:
            p.add_source(build_hospital()[0])
        assert err.value.code == "DUPLICATE_NAME"
        assert p.revision == before

    def test_target_name_cannot_shadow_source(self):
        p = Project("demo")
        p.add_source(build_hospital()[0])
        schema = build_mediated()
        schema = type(schema)(name="hospital", nodes=schema.nodes,
                              edges=schema.edges, types=schema.types,
                              constraints=schema.constraints)
        with pytest.raises(TgmError) as err:
            p.set_target(schema)
        assert err.value.code == "DUPLICATE_NAME"

    def test_match_requires_target(self):
        p = Project("demo")
        with pytest.raises(TgmError):
            p.run_match()

    def test_rerunning_match_preserves_decisions(self):
        p = fresh_project()
        p.set_synonyms(SYNONYMS)
        p.run_match()
        chosen = p.correspondences[0].id
        p.decide(chosen, "ACCEPT", "alice")
        rejected = p.correspondences[1].id
        p.decide(rejected, "REJECT", "alice")
        p.run_match()
        assert p.correspondence(chosen).status is Status.ACCEPTED
        assert p.correspondence(chosen).decided_by == "alice"
        assert p.correspondence(rejected).status is Status.REJECTED

    def test_decided_pairs_survive_even_when_not_reproposed(self):
        p = fresh_project()
        p.set_synonyms(SYNONYMS)
        p.run_match()
        chosen = p.correspondences[0].id
        p.decide(chosen, "ACCEPT", "alice")
        # raising the bar discards the proposal, not the decision
        p.set_config(MatchConfig(threshold=type(MatchConfig().threshold)(99, 100)))
        p.run_match()
        assert p.correspondence(chosen) is not None
        assert p.correspondence(chosen).status is Status.ACCEPTED

    def test_set_rules_compiles_before_committing(self):
        from conftest import ref
        p = fresh_project()
        bad = MappingSet((MappingRule(
            "r", (ref("ghost", "property", "A.p"),),
            ref("mediated", "property", "Country.name")),), ())
        before = p.revision
        with pytest.raises(TgmError):
            p.set_rules(bad)
        assert p.revision == before
        assert p.mapping.rules == ()

    def test_rejecting_accepted_match_names_dependent_rules(self,
                                                            example_project):
        corr_id = "m-property-hospital:Record.region--mediated:PatientStatistics.regionCode"
        result = example_project.decide(corr_id, "REJECT", "bob")
        assert len(result.warnings) == 1
        assert "r10_stat_region" in result.warnings[0]

    def test_rejecting_node_match_names_entity_rules(self, example_project):
        result = example_project.decide(
            "m-node-hospital:Record--mediated:PatientStatistics",
            "REJECT", "bob")
        assert any("r03_stats" in w for w in result.warnings)


class TestSerialization:
    def test_round_trip_is_identity_on_text(self, example_project):
        text = dumps_project(example_project)
        again = dumps_project(parse_project(text))
        assert text == again

    def test_round_trip_preserves_state(self, example_project):
        clone = parse_project(dumps_project(example_project))
        assert clone.name == example_project.name
        assert clone.revision == example_project.revision
        assert [s.name for s in clone.sources] == ["hospital", "admin"]
        assert clone.target == example_project.target
        assert clone.correspondences == example_project.correspondences
        assert clone.mapping == example_project.mapping
        assert clone.synonyms == example_project.synonyms
        assert clone.config == example_project.config

    def test_version_mismatch(self):
        with pytest.raises(TgmError) as err:
            parse_project('{"format": "tgm-project/9", "name": "x"}')
        assert err.value.code == "VERSION_MISMATCH"

    def test_unknown_field_rejected(self):
        with pytest.raises(TgmError) as err:
            parse_project('{"format": "tgm-project/1", "name": "x", "zz": 1}')
        assert err.value.code == "PARSE_ERROR"

    def test_truncated_file_is_a_parse_error(self, example_project):
        text = dumps_project(example_project)
        with pytest.raises(TgmError) as err:
            parse_project(text[: len(text) // 2])
        assert err.value.code == "PARSE_ERROR"

    def test_bad_revision_rejected(self):
        with pytest.raises(TgmError):
            parse_project('{"format": "tgm-project/1", "name": "x",'
                          ' "revision": -2}')


class TestPersistence:
    def test_save_and_load(self, example_project, tmp_path):
        path = tmp_path / "demo.tgm.json"
        save_project(example_project, str(path))
        loaded = load_project(str(path))
        assert dumps_project(loaded) == dumps_project(example_project)

    def test_missing_file_reports_parse_error(self, tmp_path):
        with pytest.raises(TgmError) as err:
            load_project(str(tmp_path / "absent.json"))
        assert err.value.code == "PARSE_ERROR"

    def test_interrupted_save_keeps_previous_file(self, example_project,
                                                  tmp_path, monkeypatch):
        path = tmp_path / "demo.tgm.json"
        save_project(example_project, str(path))
        original = path.read_text(encoding="utf-8")

        def explode(src, dst):
            raise OSError("disk pulled")

        monkeypatch.setattr(project_mod.os, "replace", explode)
        example_project.set_synonyms(SynonymTable())
        with pytest.raises(OSError):
            save_project(example_project, str(path))
        monkeypatch.undo()
        assert path.read_text(encoding="utf-8") == original
        leftovers = [f for f in os.listdir(tmp_path) if f.endswith(".tmp")]
        assert leftovers == []

    def test_saved_file_ends_with_newline(self, example_project, tmp_path):
        path = tmp_path / "demo.tgm.json"
        save_project(example_project, str(path))
        assert path.read_text(encoding="utf-8").endswith("}\n")
