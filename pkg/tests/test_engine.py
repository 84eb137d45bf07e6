from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest

from conftest import make_ruleset, rule
from dqeval.dataset import Entity, Repository, load_snapshot
from dqeval.engine import RecordRef, eval_all, eval_rule
from dqeval.errors import EvalError
from dqeval.rules import parse_ruleset
from oracle import naive_measure


def _single(rs):
    return rs.rules[0]


def _measure(document: str, repo, rule_index: int = 0):
    rs = parse_ruleset(document)
    return eval_rule(rs.rules[rule_index], repo, rs), rs


# --------------------------------------------------------------------------
# worked examples

def test_syntax_over_person_ids(person_snapshot, table3_ruleset):
    m = eval_rule(table3_ruleset.rules[0], person_snapshot, table3_ruleset)
    assert (m.a, m.b) == (3, 4)
    assert m.ratio == Fraction(3, 4)
    assert [(r.entity, r.row) for r in m.failing] == [("person", 2)]
    assert m.failing[0].key == (("id", "1234"),)


def test_domain_over_warning_types(person_snapshot, table3_ruleset):
    m = eval_rule(table3_ruleset.rules[1], person_snapshot, table3_ruleset)
    assert (m.a, m.b) == (4, 5)
    assert [(r.entity, r.row) for r in m.failing] == [("warning", 4)]


def test_empty_entity_not_applicable(person_catalog, tmp_path: Path):
    snap = tmp_path / "s"
    snap.mkdir()
    (snap / "person.csv").write_text(
        "id,ipaddress,age,balance,active,updated\n")
    (snap / "warning.csv").write_text("wid,type,person_id\n")
    repo = load_snapshot(snap, person_catalog)
    for kind, cols, prop, params in [
        ("syntax", ["id"], "EXAC_SINT", {"pattern": "x"}),
        ("min_count", [], "COMP_FICH", {"threshold": 1}),
        ("frequency", [], "FREC_ACT",
         {"timestamp_column": "updated", "max_gap": 1}),
    ]:
        m, _ = _measure(make_ruleset([rule("r", "person", cols, prop, kind,
                                           params)]), repo)
        assert (m.a, m.b) == (0, 0)
        assert m.ratio is None and m.not_applicable


# --------------------------------------------------------------------------
# per-kind semantics

def test_null_counts_in_b_never_in_a(person_snapshot):
    # null id: with skip_null=false it stays applicable and fails
    snap_cols = dict(person_snapshot.entities["person"]._columns)
    snap_cols["id"] = ["12345678A", None, "1234", "11111111B"]
    entity = Entity(person_snapshot.entities["person"].schema, snap_cols)
    repo = Repository(person_snapshot.catalog,
                      dict(person_snapshot.entities, person=entity), "fp")
    doc = make_ruleset([rule("r", "person", ["id"], "EXAC_SINT", "syntax",
                             {"pattern": "^[0-9]{8}[A-Z]$"})])
    m, _ = _measure(doc, repo)
    assert (m.a, m.b) == (2, 4)
    doc = make_ruleset([rule("r", "person", ["id"], "EXAC_SINT", "syntax",
                             {"pattern": "^[0-9]{8}[A-Z]$"}, skip_null=True)])
    m, _ = _measure(doc, repo)
    assert (m.a, m.b) == (2, 3)


def test_range_with_exclusive_bounds(person_snapshot):
    doc = make_ruleset([rule("r", "person", ["age"], "RAN_EXAC", "range",
                             {"min": 17, "max": 51, "min_inclusive": False,
                              "max_inclusive": True})])
    m, _ = _measure(doc, person_snapshot)  # ages 34, 51, 17, 28
    assert (m.a, m.b) == (3, 4)


def test_range_on_decimal_is_boundary_exact(person_snapshot):
    doc = make_ruleset([rule("r", "person", ["balance"], "RAN_EXAC", "range",
                             {"min": 0, "max": 99.99})])
    m, _ = _measure(doc, person_snapshot)  # 10.50, 0.00, 99.99, 5.25
    assert (m.a, m.b) == (4, 4)


def test_not_null_and_no_default(person_snapshot):
    cols = dict(person_snapshot.entities["person"]._columns)
    cols["ipaddress"] = ["1.1.1.1", None, "N/A", "2.2.2.2"]
    entity = Entity(person_snapshot.entities["person"].schema, cols)
    repo = Repository(person_snapshot.catalog,
                      dict(person_snapshot.entities, person=entity), "fp")
    m, _ = _measure(make_ruleset([
        rule("r", "person", ["ipaddress"], "COMP_REG", "not_null", {})]), repo)
    assert (m.a, m.b) == (3, 4)
    m, _ = _measure(make_ruleset([
        rule("r", "person", ["ipaddress"], "COMP_VAL_ESP", "no_default",
             {"placeholders": ["N/A"]})]), repo)
    assert (m.a, m.b) == (2, 4)


def test_unique_flags_every_group_member(person_snapshot):
    cols = dict(person_snapshot.entities["warning"]._columns)
    cols["type"] = ["HR", "HR", "IT", "HR", "OPS"]
    entity = Entity(person_snapshot.entities["warning"].schema, cols)
    repo = Repository(person_snapshot.catalog,
                      dict(person_snapshot.entities, warning=entity), "fp")
    m, _ = _measure(make_ruleset([
        rule("r", "warning", [], "RIES_INCO", "unique", {"key": ["type"]})]), repo)
    assert (m.a, m.b) == (2, 5)
    assert [r.row for r in m.failing] == [0, 1, 3]
    assert m.failing_total == 3


def test_foreign_key_nulls_fail_unless_skipped(person_snapshot):
    doc = make_ruleset([rule("r", "warning", ["person_id"], "INT_REF",
                             "foreign_key", {"referenced": "person.id"})])
    m, _ = _measure(doc, person_snapshot)
    # person ids: 12345678A, 87654321Z, 1234, 11111111B; w4 references 99999999X
    assert (m.a, m.b) == (4, 5)


def test_domain_by_reference(person_snapshot):
    doc = make_ruleset([rule("r", "warning", ["person_id"], "EXAC_SEMAN",
                             "domain", {"reference": "person.id"})])
    m, _ = _measure(doc, person_snapshot)
    assert (m.a, m.b) == (4, 5)


def test_min_count(person_snapshot):
    m, _ = _measure(make_ruleset([
        rule("r", "person", [], "COMP_FICH", "min_count", {"threshold": 4})]),
        person_snapshot)
    assert (m.a, m.b) == (1, 1) and not m.failing
    m, _ = _measure(make_ruleset([
        rule("r", "person", [], "COMP_FICH", "min_count", {"threshold": 5})]),
        person_snapshot)
    assert (m.a, m.b) == (0, 1)
    assert m.failing == (RecordRef("person", None),)


def test_freshness_and_frequency(person_snapshot):
    # reference_time 2024-06-01; updated values span 2024-03-01 .. 2024-05-30
    m, _ = _measure(make_ruleset([
        rule("r", "person", [], "CONV_ACT", "freshness",
             {"timestamp_column": "updated", "max_age": "40d"})]),
        person_snapshot)
    assert (m.a, m.b) == (3, 4)
    m, _ = _measure(make_ruleset([
        rule("r", "person", [], "FREC_ACT", "frequency",
             {"timestamp_column": "updated", "max_gap": "61d"})]),
        person_snapshot)
    assert (m.a, m.b) == (1, 1)
    m, _ = _measure(make_ruleset([
        rule("r", "person", [], "FREC_ACT", "frequency",
             {"timestamp_column": "updated", "max_gap": "10d"})]),
        person_snapshot)
    assert (m.a, m.b) == (0, 1)


def test_freshness_condition_filters_applicability(person_snapshot):
    m, _ = _measure(make_ruleset([
        rule("r", "person", [], "CONV_ACT", "freshness",
             {"timestamp_column": "updated", "max_age": "40d",
              "condition": "age >= 30"})]), person_snapshot)
    assert m.b == 2  # ages 34 and 51


def test_predicate_null_operand_fails(person_snapshot):
    cols = dict(person_snapshot.entities["person"]._columns)
    cols["age"] = [30, None, 40, 50]
    entity = Entity(person_snapshot.entities["person"].schema, cols)
    repo = Repository(person_snapshot.catalog,
                      dict(person_snapshot.entities, person=entity), "fp")
    m, _ = _measure(make_ruleset([
        rule("r", "person", [], "CONS_SEMAN", "predicate",
             {"expr": "age >= 18"})]), repo)
    assert (m.a, m.b) == (3, 4)


def test_where_filter_limits_b(person_snapshot):
    doc = make_ruleset([rule("r", "person", ["id"], "EXAC_SINT", "syntax",
                             {"pattern": "^[0-9]{8}[A-Z]$"},
                             where="age >= 28")])
    m, _ = _measure(doc, person_snapshot)  # ages 34, 51, 28 pass the filter
    assert (m.a, m.b) == (3, 3)


def test_format_class_sums_targets(person_snapshot):
    doc = make_ruleset(
        [rule("r", "person", ["id"], "CONS_FORM", "format_class",
              {"class": "alnum", "extra_targets": [["warning", "wid"]]})],
        format_classes={"alnum": "^[0-9A-Za-z]+$"})
    m, _ = _measure(doc, person_snapshot)
    assert m.b == 9  # 4 person rows + 5 warning rows
    assert m.a == 9


def test_failing_cap_keeps_true_total(person_snapshot, table3_ruleset):
    m = eval_rule(table3_ruleset.rules[1], person_snapshot, table3_ruleset, cap=0)
    assert m.failing == ()
    assert m.failing_total == 1


def test_eval_error_for_missing_entity(person_snapshot):
    rs = parse_ruleset(make_ruleset([
        rule("r", "ghost", ["id"], "EXAC_SINT", "syntax", {"pattern": "x"})]))
    with pytest.raises(EvalError):
        eval_rule(rs.rules[0], person_snapshot, rs)


# --------------------------------------------------------------------------
# eval_all

def test_eval_all_covers_every_rule(person_snapshot, table3_ruleset):
    ms = eval_all(table3_ruleset, person_snapshot)
    assert list(ms.measures) == ["r1", "r3"]
    assert ms.snapshot_fingerprint == person_snapshot.fingerprint


def test_eval_all_single_rule_equals_eval_rule(person_snapshot, table3_ruleset):
    ms = eval_all(table3_ruleset, person_snapshot)
    assert ms.measures["r1"] == eval_rule(table3_ruleset.rules[0],
                                          person_snapshot, table3_ruleset)


def test_eval_all_deterministic(person_snapshot, table3_ruleset):
    assert eval_all(table3_ruleset, person_snapshot) == \
        eval_all(table3_ruleset, person_snapshot)


def test_eval_all_parallel_equals_sequential(person_snapshot, table3_ruleset):
    assert eval_all(table3_ruleset, person_snapshot, jobs=4) == \
        eval_all(table3_ruleset, person_snapshot)


# --------------------------------------------------------------------------
# oracle equivalence on randomized fixtures

def _random_repo(seed: int, person_catalog, tmp_path: Path):
    rng = random.Random(seed)
    n = rng.randint(0, 300)
    ids = [f"{rng.randint(0, 99999999):08d}{rng.choice('ABZ')}"
           if rng.random() > 0.2 else rng.choice(["1234", "", "x"])
           for _ in range(n)]
    lines = ["id,ipaddress,age,balance,active,updated"]
    for i in range(n):
        ip = rng.choice(["1.2.3.4", "10.0.0.1", "N/A", ""])
        age = rng.choice(["", str(rng.randint(0, 99))])
        balance = rng.choice(["", f"{rng.randint(0, 9999)}.{rng.randint(0, 99):02d}"])
        active = rng.choice(["true", "false", ""])
        updated = rng.choice(
            ["", f"2024-0{rng.randint(1, 5)}-1{rng.randint(0, 9)}T06:00:00Z"])
        quoted = '"' + ids[i] + '"' if ids[i] else ""
        lines.append(f"{quoted},{ip},{age},{balance},{active},{updated}")
    snap = tmp_path / f"snap{seed}"
    snap.mkdir()
    (snap / "person.csv").write_text("\n".join(lines) + "\n")
    (snap / "warning.csv").write_text(
        "wid,type,person_id\n" + "".join(
            f"w{i},{rng.choice(['HR', 'IT GENERAL', 'HR2'])},{rng.choice(ids) if ids else ''}\n"
            for i in range(rng.randint(0, 50))))
    return load_snapshot(snap, person_catalog)


ORACLE_RULES = [
    rule("syn", "person", ["id"], "EXAC_SINT", "syntax",
         {"pattern": "^[0-9]{8}[A-Z]$"}),
    rule("syn_skip", "person", ["id"], "EXAC_SINT", "syntax",
         {"pattern": "^[0-9]{8}[A-Z]$"}, skip_null=True),
    rule("rng", "person", ["age"], "RAN_EXAC", "range", {"min": 18, "max": 65}),
    rule("dom", "warning", ["type"], "EXAC_SEMAN", "domain",
         {"allowed": ["HR", "IT GENERAL"]}),
    rule("domref", "warning", ["person_id"], "EXAC_SEMAN", "domain",
         {"reference": "person.id"}),
    rule("nn", "person", ["ipaddress"], "COMP_REG", "not_null", {}),
    rule("nd", "person", ["ipaddress"], "COMP_VAL_ESP", "no_default",
         {"placeholders": ["N/A"]}),
    rule("unq", "person", [], "FAL_COMP_FICH", "unique", {"key": ["id"]}),
    rule("mc", "person", [], "COMP_FICH", "min_count", {"threshold": 100}),
    rule("fk", "warning", ["person_id"], "INT_REF", "foreign_key",
         {"referenced": "person.id"}),
    rule("fc", "person", ["id"], "CONS_FORM", "format_class",
         {"class": "alnum", "extra_targets": [["warning", "wid"]]}),
    rule("prd", "person", [], "CONS_SEMAN", "predicate",
         {"expr": "age >= 18 and len(id) = 9"}),
    rule("prd_where", "person", [], "CONS_SEMAN", "predicate",
         {"expr": "balance >= 0.00"}, where="active = true"),
    rule("fresh", "person", [], "CONV_ACT", "freshness",
         {"timestamp_column": "updated", "max_age": "45d"}),
    rule("freq", "person", [], "FREC_ACT", "frequency",
         {"timestamp_column": "updated", "max_gap": "15d"}),
]


@pytest.mark.parametrize("seed", range(12))
def test_engine_matches_naive_oracle(seed, person_catalog, tmp_path):
    repo = _random_repo(seed, person_catalog, tmp_path)
    rs = parse_ruleset(make_ruleset(ORACLE_RULES,
                                    format_classes={"alnum": "^[0-9A-Za-z]+$"}))
    ms = eval_all(rs, repo)
    for r in rs.rules:
        assert (ms.measures[r.id].a, ms.measures[r.id].b) == \
            naive_measure(r, repo, rs), f"rule {r.id} (seed {seed})"


# --------------------------------------------------------------------------
# repair monotonicity

def test_repair_increases_a_by_one(person_snapshot, table3_ruleset):
    syntax_rule = table3_ruleset.rules[0]
    before = eval_rule(syntax_rule, person_snapshot, table3_ruleset)
    cols = dict(person_snapshot.entities["person"]._columns)
    ids = list(cols["id"])
    ids[before.failing[0].row] = "22222222C"  # compliant replacement
    cols["id"] = ids
    entity = Entity(person_snapshot.entities["person"].schema, cols)
    repo = Repository(person_snapshot.catalog,
                      dict(person_snapshot.entities, person=entity), "fp2")
    after = eval_rule(syntax_rule, repo, table3_ruleset)
    assert after.a == before.a + 1
    assert after.b == before.b
