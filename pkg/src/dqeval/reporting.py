"""Evaluation reports, improvement manifests, and report comparison.

Reports serialize canonically (stable key order, exact decimal rendering,
no wall-clock timestamps), so identical inputs always produce byte-identical
documents. Improvement manifests locate every non-compliant record, grouped
by (entity, property); each failing rule also carries a negated selector
expression where the row-expression language can express the violation
(cross-row and cross-entity kinds rely on the explicit record refs).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from pathlib import Path

from . import canonical
from .dataset import Repository
from .engine import MeasureSet, RecordRef, RuleMeasure
from .errors import FingerprintMismatch, ParseError, ScopeMismatch
from .expr import Literal, unparse
from .rules import (Domain, FormatClass, Freshness, NoDefault, Predicate,
                    Range, Rule, RuleSet, Syntax)
from .scoring import ScoreResult, ScoringConfig
from .taxonomy import Characteristic, Property, parse_characteristic, parse_property
from .values import format_timestamp, parse_timestamp

_FOUR_PLACES = Decimal("0.0001")


def _render_value(value: Fraction | None) -> Decimal | None:
    if value is None:
        return None
    return (Decimal(value.numerator) / Decimal(value.denominator)).quantize(
        _FOUR_PLACES, rounding=ROUND_HALF_EVEN)


def _render_ratio(m: RuleMeasure) -> Decimal | None:
    if m.b == 0:
        return None
    return (Decimal(m.a) / Decimal(m.b)).quantize(_FOUR_PLACES,
                                                  rounding=ROUND_HALF_EVEN)


# --------------------------------------------------------------------------
# Report document model

@dataclass(frozen=True)
class ReportMetadata:
    ruleset_name: str
    ruleset_version: str
    ruleset_fingerprint: str
    snapshot_fingerprint: str
    reference_time: datetime
    tool_version: str
    config: tuple  # canonicalized config echo, as nested tuples


@dataclass(frozen=True)
class MeasureSummary:
    rule_id: str
    entity: str
    property: Property
    kind: str
    a: int
    b: int
    ratio: Decimal | None
    failing_total: int
    selector: str | None


@dataclass(frozen=True)
class PropertyReport:
    property: Property
    value: Decimal | None
    level: int | None
    sum_a: int
    sum_b: int
    rule_count: int


@dataclass(frozen=True)
class CharacteristicReport:
    characteristic: Characteristic
    profile: tuple[int, int, int, int, int]
    level: int | None
    strengths: tuple[Property, ...]
    weaknesses: tuple[Property, ...]


@dataclass(frozen=True)
class EvaluationReport:
    metadata: ReportMetadata
    entity_rows: tuple[tuple[str, int], ...]
    rule_counts: tuple[tuple[Characteristic, int], ...]
    measures: tuple[MeasureSummary, ...]
    properties: tuple[PropertyReport, ...]
    characteristics: tuple[CharacteristicReport, ...]
    eligible: bool
    reasons: tuple[tuple[Characteristic, int], ...]

    def characteristic(self, c: Characteristic) -> CharacteristicReport | None:
        for r in self.characteristics:
            if r.characteristic is c:
                return r
        return None


# --------------------------------------------------------------------------
# Selector expressions (violating-row selectors, negations of the checks)

def _literal_text(value, datatype: str) -> str:
    lit = value
    if datatype == "timestamp" and isinstance(value, str):
        lit = parse_timestamp(value)
    if isinstance(lit, Decimal) and lit == lit.to_integral_value() \
            and "." not in str(lit):
        lit = int(lit)
    return unparse(Literal(lit))


def _selector(rule: Rule, entity_name: str, repo: Repository) -> str | None:
    """Expression selecting the violating rows of `rule` within one entity,
    or None when the kind cannot be expressed row-locally."""
    k = rule.kind
    schema = repo.catalog.get(entity_name)

    def dtype(column: str) -> str:
        return schema.column(column).datatype

    body: str | None = None
    if isinstance(k, Syntax):
        body = f"not regex_match({rule.columns[0]}, {_literal_text(k.pattern, 'text')})"
    elif isinstance(k, FormatClass):
        if entity_name == rule.entity:
            columns = list(rule.columns)
        else:
            columns = [c for e, c in k.extra_targets if e == entity_name]
        checks = [f"not regex_match({c}, {_literal_text(k.pattern, 'text')})"
                  for c in columns]
        body = " or ".join(checks) if checks else None
    elif isinstance(k, Range):
        col = rule.columns[0]
        parts = []
        if k.min is not None:
            op = ">=" if k.min_inclusive else ">"
            parts.append(f"{col} {op} {_literal_text(k.min, dtype(col))}")
        if k.max is not None:
            op = "<=" if k.max_inclusive else "<"
            parts.append(f"{col} {op} {_literal_text(k.max, dtype(col))}")
        body = f"not ({' and '.join(parts)})"
    elif isinstance(k, Domain) and k.reference is None:
        col = rule.columns[0]
        members = ", ".join(_literal_text(v, dtype(col)) for v in k.allowed)
        body = f"not in_set({col}, {members})"
    elif isinstance(k, NoDefault):
        col = rule.columns[0]
        members = ", ".join(_literal_text(v, dtype(col)) for v in k.placeholders)
        body = f"in_set({col}, {members})"
    elif isinstance(k, Predicate):
        body = f"not ({unparse(k.expr)})"
    elif isinstance(k, Freshness):
        age = f"age_days({k.timestamp_column}) > {_decimal_text(k.max_age_days)}"
        if k.condition is not None:
            body = f"({unparse(k.condition)}) and {age}"
        else:
            body = age
    if body is None:
        return None
    if rule.where is not None:
        body = f"({unparse(rule.where)}) and ({body})"
    return body


def _decimal_text(d: Decimal) -> str:
    if d == d.to_integral_value():
        return str(int(d))
    return str(d)


# --------------------------------------------------------------------------
# Building

def build_report(rs: RuleSet, repo: Repository, ms: MeasureSet,
                 result: ScoreResult, config: ScoringConfig,
                 tool_version: str) -> EvaluationReport:
    """Assemble the complete, canonical evaluation report."""
    rule_counts = {c: 0 for c in Characteristic}
    for rule in rs.rules:
        rule_counts[rule.characteristic] += 1

    measures = []
    for rule in rs.rules:
        m = ms.measures[rule.id]
        measures.append(MeasureSummary(
            rule.id, rule.entity, rule.property, rule.kind_name,
            m.a, m.b, _render_ratio(m), m.failing_total,
            _selector(rule, rule.entity, repo)))

    return EvaluationReport(
        metadata=ReportMetadata(
            rs.name, rs.version, ms.ruleset_fingerprint, ms.snapshot_fingerprint,
            rs.reference_time, tool_version, _freeze(config.to_json())),
        entity_rows=tuple((name, repo.entities[name].n_rows)
                          for name in sorted(repo.entities)),
        rule_counts=tuple((c, rule_counts[c]) for c in Characteristic),
        measures=tuple(measures),
        properties=tuple(PropertyReport(s.property, _render_value(s.value), s.level,
                                        s.sum_a, s.sum_b, s.rule_count)
                         for s in result.property_scores),
        characteristics=tuple(CharacteristicReport(
            r.characteristic, r.profile.counts, r.level, r.strengths, r.weaknesses)
            for r in result.characteristic_results),
        eligible=result.verdict.eligible,
        reasons=result.verdict.reasons)


def _freeze(obj):
    if isinstance(obj, dict):
        return tuple((k, _freeze(v)) for k, v in obj.items())
    if isinstance(obj, list):
        return tuple(_freeze(v) for v in obj)
    return obj


def _thaw(obj):
    if isinstance(obj, tuple) and all(isinstance(e, tuple) and len(e) == 2
                                      and isinstance(e[0], str) for e in obj):
        return {k: _thaw(v) for k, v in obj}
    if isinstance(obj, tuple):
        return [_thaw(v) for v in obj]
    return obj


# --------------------------------------------------------------------------
# Serialization

def serialize_report(report: EvaluationReport) -> str:
    md = report.metadata
    doc = {
        "metadata": {
            "ruleset_name": md.ruleset_name,
            "ruleset_version": md.ruleset_version,
            "ruleset_fingerprint": md.ruleset_fingerprint,
            "snapshot_fingerprint": md.snapshot_fingerprint,
            "reference_time": format_timestamp(md.reference_time),
            "tool_version": md.tool_version,
            "config": _thaw(md.config),
        },
        "scope": {
            "entity_count": len(report.entity_rows),
            "row_counts": {name: n for name, n in report.entity_rows},
            "rule_counts": {c.value: n for c, n in report.rule_counts},
            "total_rules": sum(n for _, n in report.rule_counts),
        },
        "measures": [
            {
                "rule_id": m.rule_id,
                "entity": m.entity,
                "property": m.property.value,
                "kind": m.kind,
                "a": m.a,
                "b": m.b,
                "ratio": m.ratio,
                "failing_total": m.failing_total,
                "selector": m.selector,
            }
            for m in report.measures
        ],
        "properties": [
            {
                "property": p.property.value,
                "characteristic": p.property.characteristic.value,
                "value": p.value,
                "level": p.level,
                "sum_a": p.sum_a,
                "sum_b": p.sum_b,
                "rule_count": p.rule_count,
            }
            for p in report.properties
        ],
        "characteristics": [
            {
                "characteristic": c.characteristic.value,
                "profile": list(c.profile),
                "level": c.level,
                "strengths": [p.value for p in c.strengths],
                "weaknesses": [p.value for p in c.weaknesses],
            }
            for c in report.characteristics
        ],
        "verdict": {
            "eligible": report.eligible,
            "reasons": [{"characteristic": c.value, "level": lv}
                        for c, lv in report.reasons],
        },
    }
    return canonical.dumps(doc)


def parse_report(text: str) -> EvaluationReport:
    try:
        data = canonical.loads(text)
    except ValueError as exc:
        raise ParseError(f"malformed report: {exc}") from None
    try:
        md = data["metadata"]
        metadata = ReportMetadata(
            md["ruleset_name"], md["ruleset_version"], md["ruleset_fingerprint"],
            md["snapshot_fingerprint"], parse_timestamp(md["reference_time"]),
            md["tool_version"], _freeze(md["config"]))
        scope = data["scope"]
        measures = tuple(MeasureSummary(
            m["rule_id"], m["entity"], parse_property(m["property"]), m["kind"],
            m["a"], m["b"],
            None if m["ratio"] is None else Decimal(m["ratio"]),
            m["failing_total"], m["selector"]) for m in data["measures"])
        properties = tuple(PropertyReport(
            parse_property(p["property"]),
            None if p["value"] is None else Decimal(p["value"]),
            p["level"], p["sum_a"], p["sum_b"], p["rule_count"])
            for p in data["properties"])
        characteristics = tuple(CharacteristicReport(
            parse_characteristic(c["characteristic"]), tuple(c["profile"]),
            c["level"],
            tuple(parse_property(p) for p in c["strengths"]),
            tuple(parse_property(p) for p in c["weaknesses"]))
            for c in data["characteristics"])
        verdict = data["verdict"]
        return EvaluationReport(
            metadata,
            tuple(sorted(scope["row_counts"].items())),
            tuple((parse_characteristic(name), n)
                  for name, n in scope["rule_counts"].items()),
            measures, properties, characteristics,
            verdict["eligible"],
            tuple((parse_characteristic(r["characteristic"]), r["level"])
                  for r in verdict["reasons"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid report document: {exc}") from None


# --------------------------------------------------------------------------
# Measures document (full failing refs; feeds the improvement manifests)

def serialize_measures(ms: MeasureSet) -> str:
    doc = {
        "ruleset_fingerprint": ms.ruleset_fingerprint,
        "snapshot_fingerprint": ms.snapshot_fingerprint,
        "measures": [
            {
                "rule_id": m.rule_id,
                "a": m.a,
                "b": m.b,
                "failing_total": m.failing_total,
                "failing": [
                    {"entity": ref.entity, "row": ref.row,
                     "key": {k: v for k, v in ref.key}}
                    for ref in m.failing
                ],
            }
            for m in ms
        ],
    }
    return canonical.dumps(doc)


def parse_measures(text: str) -> MeasureSet:
    try:
        data = canonical.loads(text)
        measures = {}
        for m in data["measures"]:
            refs = tuple(RecordRef(r["entity"], r["row"],
                                   tuple(r["key"].items())) for r in m["failing"])
            measures[m["rule_id"]] = RuleMeasure(
                m["rule_id"], m["a"], m["b"], refs, m["failing_total"])
        return MeasureSet(measures, data["ruleset_fingerprint"],
                          data["snapshot_fingerprint"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid measures document: {exc}") from None


# --------------------------------------------------------------------------
# Improvement manifests

@dataclass(frozen=True)
class ManifestRule:
    rule_id: str
    kind: str
    selector: str | None
    failing_total: int
    records: tuple[RecordRef, ...]


@dataclass(frozen=True)
class ImprovementManifest:
    entity: str
    property: Property
    rules: tuple[ManifestRule, ...]


def build_improvement(report: EvaluationReport,
                      ms: MeasureSet) -> list[ImprovementManifest]:
    """Manifests for every rule with failures, grouped by (entity, property).

    format_class failures may span entities; each ref lands in its own
    entity's manifest.
    """
    if (report.metadata.ruleset_fingerprint != ms.ruleset_fingerprint
            or report.metadata.snapshot_fingerprint != ms.snapshot_fingerprint):
        raise FingerprintMismatch(
            "report and measures were produced from different inputs")

    groups: dict[tuple[str, Property], list[ManifestRule]] = {}
    for summary in report.measures:
        measure = ms.measures.get(summary.rule_id)
        if measure is None or measure.failing_total == 0:
            continue
        by_entity: dict[str, list[RecordRef]] = {}
        for ref in measure.failing:
            by_entity.setdefault(ref.entity, []).append(ref)
        for entity, refs in by_entity.items():
            groups.setdefault((entity, summary.property), []).append(ManifestRule(
                summary.rule_id, summary.kind, summary.selector,
                measure.failing_total, tuple(refs)))

    return [ImprovementManifest(entity, prop, tuple(rules))
            for (entity, prop), rules in sorted(
                groups.items(), key=lambda kv: (kv[0][0], kv[0][1].value))]


def serialize_manifest(manifest: ImprovementManifest, report: EvaluationReport) -> str:
    doc = {
        "entity": manifest.entity,
        "property": manifest.property.value,
        "characteristic": manifest.property.characteristic.value,
        "ruleset_fingerprint": report.metadata.ruleset_fingerprint,
        "snapshot_fingerprint": report.metadata.snapshot_fingerprint,
        "rules": [
            {
                "rule_id": r.rule_id,
                "kind": r.kind,
                "selector": r.selector,
                "failing_total": r.failing_total,
                "failing_listed": len(r.records),
                "records": [{"row": ref.row, "key": {k: v for k, v in ref.key}}
                            for ref in r.records],
            }
            for r in manifest.rules
        ],
    }
    return canonical.dumps(doc)


def write_improvement(manifests: list[ImprovementManifest],
                      report: EvaluationReport, directory: Path) -> list[str]:
    """Write one manifest file per (entity, property) plus index.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for manifest in manifests:
        name = f"{manifest.entity}.{manifest.property.value}.manifest.json"
        (directory / name).write_text(serialize_manifest(manifest, report),
                                      encoding="utf-8")
        entries.append({
            "entity": manifest.entity,
            "property": manifest.property.value,
            "path": name,
            "rule_count": len(manifest.rules),
            "failing_listed": sum(len(r.records) for r in manifest.rules),
        })
    index = {
        "ruleset_fingerprint": report.metadata.ruleset_fingerprint,
        "snapshot_fingerprint": report.metadata.snapshot_fingerprint,
        "manifests": entries,
    }
    (directory / "index.json").write_text(canonical.dumps(index), encoding="utf-8")
    return [e["path"] for e in entries]


# --------------------------------------------------------------------------
# Comparison

@dataclass(frozen=True)
class PropertyDelta:
    property: Property
    first_value: Decimal | None
    second_value: Decimal | None
    value_delta: Decimal | None
    first_level: int | None
    second_level: int | None
    level_delta: int | None


@dataclass(frozen=True)
class CharacteristicDelta:
    characteristic: Characteristic
    first_level: int | None
    second_level: int | None
    level_delta: int | None


@dataclass(frozen=True)
class ComparisonReport:
    ruleset_name: str
    first_version: str
    second_version: str
    properties: tuple[PropertyDelta, ...]
    added_properties: tuple[Property, ...]
    removed_properties: tuple[Property, ...]
    characteristics: tuple[CharacteristicDelta, ...]
    verdict_first: bool
    verdict_second: bool
    regression: bool

    def characteristic_delta(self, c: Characteristic) -> CharacteristicDelta | None:
        for d in self.characteristics:
            if d.characteristic is c:
                return d
        return None


def compare(first: EvaluationReport, second: EvaluationReport) -> ComparisonReport:
    """Per-property and per-characteristic deltas, second minus first."""
    if first.metadata.ruleset_name != second.metadata.ruleset_name:
        raise ScopeMismatch(
            f"reports describe different rulesets: "
            f"{first.metadata.ruleset_name!r} vs {second.metadata.ruleset_name!r}")
    first_chars = {c.characteristic for c in first.characteristics if c.level is not None}
    second_chars = {c.characteristic for c in second.characteristics if c.level is not None}
    if first_chars and second_chars and not (first_chars & second_chars):
        raise ScopeMismatch("reports share no evaluated characteristic")

    first_props = {p.property: p for p in first.properties if p.value is not None}
    second_props = {p.property: p for p in second.properties if p.value is not None}

    deltas = []
    regression = False
    for prop in Property:
        if prop in first_props and prop in second_props:
            a, b = first_props[prop], second_props[prop]
            value_delta = b.value - a.value
            level_delta = b.level - a.level
            regression = regression or value_delta < 0 or level_delta < 0
            deltas.append(PropertyDelta(prop, a.value, b.value, value_delta,
                                        a.level, b.level, level_delta))
    added = tuple(p for p in Property if p in second_props and p not in first_props)
    removed = tuple(p for p in Property if p in first_props and p not in second_props)

    char_deltas = []
    for characteristic in Characteristic:
        a = first.characteristic(characteristic)
        b = second.characteristic(characteristic)
        a_level = a.level if a else None
        b_level = b.level if b else None
        if a_level is None and b_level is None:
            continue
        level_delta = None
        if a_level is not None and b_level is not None:
            level_delta = b_level - a_level
            regression = regression or level_delta < 0
        char_deltas.append(CharacteristicDelta(characteristic, a_level, b_level,
                                               level_delta))

    return ComparisonReport(
        first.metadata.ruleset_name,
        first.metadata.ruleset_version, second.metadata.ruleset_version,
        tuple(deltas), added, removed, tuple(char_deltas),
        first.eligible, second.eligible, regression)


def serialize_comparison(cmp: ComparisonReport) -> str:
    doc = {
        "ruleset_name": cmp.ruleset_name,
        "first_version": cmp.first_version,
        "second_version": cmp.second_version,
        "properties": [
            {
                "property": d.property.value,
                "first_value": d.first_value,
                "second_value": d.second_value,
                "value_delta": d.value_delta,
                "first_level": d.first_level,
                "second_level": d.second_level,
                "level_delta": d.level_delta,
            }
            for d in cmp.properties
        ],
        "added_properties": [p.value for p in cmp.added_properties],
        "removed_properties": [p.value for p in cmp.removed_properties],
        "characteristics": [
            {
                "characteristic": d.characteristic.value,
                "first_level": d.first_level,
                "second_level": d.second_level,
                "level_delta": d.level_delta,
            }
            for d in cmp.characteristics
        ],
        "verdict_transition": {"first": cmp.verdict_first, "second": cmp.verdict_second},
        "regression": cmp.regression,
    }
    return canonical.dumps(doc)


# --------------------------------------------------------------------------
# Text rendering

def _fmt(value) -> str:
    if value is None:
        return "-"
    return str(value)


def render_text(document) -> str:
    """Fixed-width human rendering of a report or comparison."""
    if isinstance(document, EvaluationReport):
        return _render_report(document)
    if isinstance(document, ComparisonReport):
        return _render_comparison(document)
    raise TypeError(f"cannot render {type(document).__name__}")


def _render_report(report: EvaluationReport) -> str:
    md = report.metadata
    lines = [
        "DATA QUALITY EVALUATION REPORT",
        f"ruleset:        {md.ruleset_name} v{md.ruleset_version}",
        f"reference time: {format_timestamp(md.reference_time)}",
        f"entities:       {len(report.entity_rows)}  "
        f"rows: {sum(n for _, n in report.entity_rows)}  "
        f"rules: {sum(n for _, n in report.rule_counts)}",
        "",
        "CHARACTERISTICS",
        f"  {'characteristic':<15} {'level':>5}  {'profile':<17} "
        f"{'strengths':<12} weaknesses",
    ]
    for c in report.characteristics:
        profile = "<" + ",".join(str(n) for n in c.profile) + ">"
        lines.append(f"  {c.characteristic.value:<15} {_fmt(c.level):>5}  "
                     f"{profile:<17} {str(len(c.strengths)):<12} {len(c.weaknesses)}")
    lines += [
        "",
        "PROPERTIES",
        f"  {'property':<14} {'characteristic':<15} {'value':>9} {'level':>5} "
        f"{'A':>10} {'B':>10} {'rules':>6}",
    ]
    for p in report.properties:
        lines.append(
            f"  {p.property.value:<14} {p.property.characteristic.value:<15} "
            f"{_fmt(p.value):>9} {_fmt(p.level):>5} {p.sum_a:>10} {p.sum_b:>10} "
            f"{p.rule_count:>6}")
    lines.append("")
    if report.eligible:
        lines.append("VERDICT: ELIGIBLE (min level 3 rule)")
    else:
        lines.append("VERDICT: NOT ELIGIBLE (min level 3 rule)")
        for characteristic, level in report.reasons:
            lines.append(f"  below threshold: {characteristic.value} at level {level}")
    lines.append("")
    return "\n".join(lines)


def _render_comparison(cmp: ComparisonReport) -> str:
    lines = [
        "DATA QUALITY COMPARISON",
        f"ruleset: {cmp.ruleset_name} (v{cmp.first_version} -> v{cmp.second_version})",
        "",
        "CHARACTERISTIC LEVELS",
        f"  {'characteristic':<15} {'before':>6} {'after':>6} {'delta':>6}",
    ]
    for d in cmp.characteristics:
        delta = f"{d.level_delta:+d}" if d.level_delta is not None else "-"
        lines.append(f"  {d.characteristic.value:<15} {_fmt(d.first_level):>6} "
                     f"{_fmt(d.second_level):>6} {delta:>6}")
    lines += [
        "",
        "PROPERTY VALUES",
        f"  {'property':<14} {'before':>9} {'after':>9} {'delta':>10} "
        f"{'lvl before':>10} {'lvl after':>9}",
    ]
    for d in cmp.properties:
        lines.append(
            f"  {d.property.value:<14} {_fmt(d.first_value):>9} "
            f"{_fmt(d.second_value):>9} {_fmt(d.value_delta):>10} "
            f"{_fmt(d.first_level):>10} {_fmt(d.second_level):>9}")
    for label, props in (("added", cmp.added_properties),
                         ("removed", cmp.removed_properties)):
        if props:
            lines.append(f"  {label}: " + ", ".join(p.value for p in props))
    lines += [
        "",
        f"verdict: {'ELIGIBLE' if cmp.verdict_first else 'NOT ELIGIBLE'} -> "
        f"{'ELIGIBLE' if cmp.verdict_second else 'NOT ELIGIBLE'}",
        f"regression: {'yes' if cmp.regression else 'no'}",
        "",
    ]
    return "\n".join(lines)
