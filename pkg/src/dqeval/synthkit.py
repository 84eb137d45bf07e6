"""Deterministic synthetic snapshots with exact per-rule violation counts.

A synth spec fixes a seed, per-entity row counts, per-column generators that
produce rule-compliant baselines, and per-rule violation plans. For a plan
with rate r over n applicable items, exactly round(r·n) items (half-up) are
rewritten to violate the rule and the rest stay compliant, so the expected
(A, B) of every rule is known by construction. Generation refuses specs it
cannot honor exactly rather than producing an unsound oracle:

- rules in the ruleset may not carry `where`/`condition` filters (B must be
  a construction-time constant);
- a column written by one plan may not be read by any other rule;
- columns read by rules may not have a null_rate;
- unique keys need serial generators (duplicates are made by copying the
  first group member's key); a unique plan needs round(r·n) != 1;
- min_count takes no plan (its outcome follows from the row count).

Every planned rule is re-verified value-by-value after the writes, with
local checks independent of the evaluation engine.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass
from datetime import timedelta
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from . import canonical
from .dataset import Entity, SchemaCatalog, write_entity
from .engine import MeasureSet
from .errors import ConflictingPlan, ParseError, SynthError
from .expr import columns_referenced, evaluate
from .rules import (Domain, ForeignKey, FormatClass, Frequency, Freshness,
                    MinCount, NoDefault, NotNull, Predicate, Range, Rule,
                    RuleSet, Syntax, Unique, parse_duration_days)
from .values import coerce_literal

GENERATOR_KINDS = ("serial", "choice", "int_uniform", "decimal_uniform",
                   "timestamp_uniform", "timestamp_spaced", "const")


@dataclass(frozen=True)
class ColumnGen:
    kind: str
    params: tuple  # frozen (key, value) pairs
    null_rate: Decimal = Decimal(0)

    def param(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class EntityPlan:
    rows: int
    columns: tuple[tuple[str, ColumnGen], ...]


@dataclass(frozen=True)
class ViolationPlan:
    rule_id: str
    rate: Decimal
    violating: tuple = ()  # explicit violating values (or (column, value) pairs
    #                        for predicate plans)


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    entities: tuple[tuple[str, EntityPlan], ...]
    violations: tuple[ViolationPlan, ...]

    def entity(self, name: str) -> EntityPlan | None:
        for n, plan in self.entities:
            if n == name:
                return plan
        return None


@dataclass(frozen=True)
class ExpectedMeasures:
    measures: tuple[tuple[str, int, int], ...]  # (rule_id, a, b)

    def get(self, rule_id: str) -> tuple[int, int] | None:
        for rid, a, b in self.measures:
            if rid == rule_id:
                return a, b
        return None


@dataclass(frozen=True)
class Discrepancy:
    rule_id: str
    expected: tuple[int, int] | None
    actual: tuple[int, int] | None

    def __str__(self) -> str:
        return (f"{self.rule_id}: expected {self.expected}, "
                f"engine measured {self.actual}")


def round_half_up(rate: Decimal, n: int) -> int:
    return int((rate * n).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _sub_rng(seed: int, tag: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}|{tag}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


# --------------------------------------------------------------------------
# Spec parsing

def parse_synthspec(document: str) -> SynthSpec:
    try:
        data = canonical.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", line=exc.lineno,
                         column=exc.colno) from None
    if not isinstance(data, dict):
        raise ParseError("synth spec must be a JSON object")
    seed = data.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ParseError("seed must be an integer", context="$.seed")

    raw_entities = data.get("entities")
    if not isinstance(raw_entities, dict) or not raw_entities:
        raise ParseError("entities must be a non-empty object", context="$.entities")
    entities = []
    for name, raw in raw_entities.items():
        ctx = f"entities.{name}"
        if not isinstance(raw, dict):
            raise ParseError("entity plans must be objects", context=ctx)
        rows = raw.get("rows")
        if not isinstance(rows, int) or isinstance(rows, bool) or rows < 0:
            raise ParseError("rows must be a non-negative integer", context=f"{ctx}.rows")
        raw_cols = raw.get("columns", {})
        if not isinstance(raw_cols, dict):
            raise ParseError("columns must be an object", context=f"{ctx}.columns")
        columns = []
        for cname, rawgen in raw_cols.items():
            cctx = f"{ctx}.columns.{cname}"
            if not isinstance(rawgen, dict) or rawgen.get("generator") not in GENERATOR_KINDS:
                raise ParseError("generator must be one of " + ", ".join(GENERATOR_KINDS),
                                 context=cctx)
            null_rate = rawgen.get("null_rate", 0)
            if isinstance(null_rate, bool) or not isinstance(null_rate, (int, Decimal)) \
                    or not 0 <= null_rate <= 1:
                raise ParseError("null_rate must be a number in [0, 1]", context=cctx)
            params = tuple((k, _freeze_param(v)) for k, v in sorted(rawgen.items())
                           if k not in ("generator", "null_rate"))
            columns.append((cname, ColumnGen(rawgen["generator"], params,
                                             Decimal(null_rate))))
        entities.append((name, EntityPlan(rows, tuple(columns))))

    violations = []
    raw_violations = data.get("violations", [])
    if not isinstance(raw_violations, list):
        raise ParseError("violations must be an array", context="$.violations")
    for i, raw in enumerate(raw_violations):
        ctx = f"violations[{i}]"
        if not isinstance(raw, dict) or not isinstance(raw.get("rule"), str):
            raise ParseError("violation plans must name a rule", context=ctx)
        rate = raw.get("rate")
        if isinstance(rate, bool) or not isinstance(rate, (int, Decimal)) \
                or not 0 <= rate <= 1:
            raise ParseError("rate must be a number in [0, 1]", context=f"{ctx}.rate")
        violating = raw.get("violating", [])
        if isinstance(violating, dict):  # predicate plans: column -> value
            frozen = tuple((k, _freeze_param(v)) for k, v in sorted(violating.items()))
        elif isinstance(violating, list):
            frozen = tuple(_freeze_param(v) for v in violating)
        else:
            raise ParseError("violating must be an array or an object",
                             context=f"{ctx}.violating")
        violations.append(ViolationPlan(raw["rule"], Decimal(rate), frozen))
    return SynthSpec(seed, tuple(entities), tuple(violations))


def _freeze_param(v):
    if isinstance(v, list):
        return tuple(_freeze_param(x) for x in v)
    if isinstance(v, dict):
        return tuple((k, _freeze_param(x)) for k, x in sorted(v.items()))
    return v


# --------------------------------------------------------------------------
# Column generators

def _generate_column(gen: ColumnGen, datatype: str, n: int,
                     rng: random.Random, context: str) -> list:
    kind = gen.kind
    if kind == "serial":
        if datatype == "integer":
            start = gen.param("start", 0)
            values = [start + i for i in range(n)]
        elif datatype == "text":
            fmt = gen.param("format")
            if not isinstance(fmt, str) or "{n" not in fmt:
                raise SynthError(f"{context}: serial text generators need a "
                                 "format with an {n} placeholder")
            values = [fmt.format(n=i) for i in range(n)]
        else:
            raise SynthError(f"{context}: serial supports integer or text columns")
    elif kind == "choice":
        pool = gen.param("values")
        if not isinstance(pool, tuple) or not pool:
            raise SynthError(f"{context}: choice needs a non-empty values pool")
        coerced = [_coerce(v, datatype, context) for v in pool]
        values = [coerced[rng.randrange(len(coerced))] for _ in range(n)]
    elif kind == "int_uniform":
        lo, hi = gen.param("min"), gen.param("max")
        if not isinstance(lo, int) or not isinstance(hi, int) or lo > hi:
            raise SynthError(f"{context}: int_uniform needs integer min <= max")
        values = [rng.randint(lo, hi) for _ in range(n)]
    elif kind == "decimal_uniform":
        places = gen.param("places", 2)
        lo = _coerce(gen.param("min"), "decimal", context)
        hi = _coerce(gen.param("max"), "decimal", context)
        if lo > hi:
            raise SynthError(f"{context}: decimal_uniform needs min <= max")
        units = int(((hi - lo) * (10 ** places)).to_integral_value())
        quantum = Decimal(1).scaleb(-places)
        values = [lo + rng.randint(0, units) * quantum for _ in range(n)]
    elif kind == "timestamp_uniform":
        start = _coerce(gen.param("start"), "timestamp", context)
        end = _coerce(gen.param("end"), "timestamp", context)
        if start > end:
            raise SynthError(f"{context}: timestamp_uniform needs start <= end")
        span = int((end - start).total_seconds())
        values = [start + timedelta(seconds=rng.randint(0, span)) for _ in range(n)]
    elif kind == "timestamp_spaced":
        start = _coerce(gen.param("start"), "timestamp", context)
        step = parse_duration_days(gen.param("step"), context)
        delta = timedelta(microseconds=int(step * 86_400_000_000))
        values = [start + i * delta for i in range(n)]
    elif kind == "const":
        value = _coerce(gen.param("value"), datatype, context)
        values = [value] * n
    else:  # pragma: no cover
        raise SynthError(f"{context}: unknown generator {kind!r}")

    if gen.null_rate > 0:
        nulls = round_half_up(gen.null_rate, n)
        for i in rng.sample(range(n), nulls):
            values[i] = None
    return values


def _coerce(value, datatype: str, context: str):
    try:
        return coerce_literal(value, datatype)
    except ValueError as exc:
        raise SynthError(f"{context}: {exc}") from None


# --------------------------------------------------------------------------
# Plan checking

def _columns_read(rule: Rule) -> set[tuple[str, str]]:
    """Every (entity, column) whose cells influence this rule's outcome."""
    out = {(rule.entity, c) for c in rule.columns}
    k = rule.kind
    if isinstance(k, Unique):
        out |= {(rule.entity, c) for c in k.key}
    elif isinstance(k, FormatClass):
        out |= set(k.extra_targets)
    elif isinstance(k, Predicate):
        out |= {(rule.entity, c) for c in columns_referenced(k.expr)}
    elif isinstance(k, (Freshness, Frequency)):
        out.add((rule.entity, k.timestamp_column))
    elif isinstance(k, Domain) and k.reference is not None:
        out.add(k.reference)
    elif isinstance(k, ForeignKey):
        out.add(k.referenced)
    if rule.where is not None:
        out |= {(rule.entity, c) for c in columns_referenced(rule.where)}
    return out


def _columns_written(rule: Rule, plan: ViolationPlan) -> set[tuple[str, str]]:
    k = rule.kind
    if isinstance(k, Unique):
        return {(rule.entity, c) for c in k.key}
    if isinstance(k, FormatClass):
        return {(rule.entity, c) for c in rule.columns} | set(k.extra_targets)
    if isinstance(k, Predicate):
        return {(rule.entity, str(c)) for c, _ in plan.violating}
    if isinstance(k, (Freshness, Frequency)):
        return {(rule.entity, k.timestamp_column)}
    return {(rule.entity, c) for c in rule.columns}


def _check_spec(spec: SynthSpec, catalog: SchemaCatalog, rs: RuleSet) -> None:
    rule_ids = {r.id for r in rs.rules}
    for plan in spec.violations:
        if plan.rule_id not in rule_ids:
            raise SynthError(f"violation plan references unknown rule {plan.rule_id!r}")
    seen_plans: set[str] = set()
    for plan in spec.violations:
        if plan.rule_id in seen_plans:
            raise ConflictingPlan(f"two plans target rule {plan.rule_id!r}")
        seen_plans.add(plan.rule_id)

    for rule in rs.rules:
        if rule.where is not None:
            raise SynthError(f"rule {rule.id!r} has a where filter; synthetic "
                             "oracles require unconditional rules")
        if isinstance(rule.kind, Freshness) and rule.kind.condition is not None:
            raise SynthError(f"rule {rule.id!r} has a freshness condition; "
                             "synthetic oracles require unconditional rules")

    for schema in catalog.entities:
        plan = spec.entity(schema.name)
        if plan is None:
            raise SynthError(f"spec has no entity plan for {schema.name!r}")
        planned = {name for name, _ in plan.columns}
        missing = [c.name for c in schema.columns if c.name not in planned]
        if missing:
            raise SynthError(f"entity {schema.name!r} is missing generators for: "
                             + ", ".join(missing))

    # cells read by rules must stay deterministic: no null_rate there
    read_map: dict[tuple[str, str], set[str]] = {}
    for rule in rs.rules:
        for cell in _columns_read(rule):
            read_map.setdefault(cell, set()).add(rule.id)
    for name, plan in spec.entities:
        for cname, gen in plan.columns:
            if gen.null_rate > 0 and (name, cname) in read_map:
                raise SynthError(f"column {name}.{cname} is read by rules "
                                 f"{sorted(read_map[(name, cname)])} and cannot "
                                 "have a null_rate")

    written: dict[tuple[str, str], str] = {}
    for plan in spec.violations:
        rule = rs.rule(plan.rule_id)
        if isinstance(rule.kind, MinCount):
            raise SynthError("min_count rules take no violation plan; their "
                             "outcome follows from the row count")
        for cell in _columns_written(rule, plan):
            if cell in written:
                raise ConflictingPlan(
                    f"plans for rules {written[cell]!r} and {plan.rule_id!r} "
                    f"both write {cell[0]}.{cell[1]}")
            written[cell] = plan.rule_id
            readers = read_map.get(cell, set()) - {plan.rule_id}
            if readers:
                raise ConflictingPlan(
                    f"plan for rule {plan.rule_id!r} writes {cell[0]}.{cell[1]}, "
                    f"which rules {sorted(readers)} also read")


# --------------------------------------------------------------------------
# Violating values

def _derive_violating(rule: Rule, plan: ViolationPlan, schema, rs: RuleSet,
                      parent_values: set | None):
    """One value that violates the rule (used when the plan gives no pool)."""
    k = rule.kind
    if isinstance(k, NotNull):
        return None

    def column_type() -> str:
        return schema.column(rule.columns[0]).datatype

    if isinstance(k, NoDefault):
        return coerce_literal(k.placeholders[0], column_type())
    if isinstance(k, Range):
        dtype = column_type()
        if k.max is not None:
            hi = coerce_literal(k.max, dtype)
            if not k.max_inclusive:
                return hi
            return hi + (timedelta(days=1) if dtype == "timestamp" else 1)
        lo = coerce_literal(k.min, dtype)
        if not k.min_inclusive:
            return lo
        return lo - (timedelta(days=1) if dtype == "timestamp" else 1)
    if isinstance(k, Domain) and k.reference is None:
        dtype = column_type()
        allowed = {coerce_literal(v, dtype) for v in k.allowed}
        if dtype == "text":
            return f"__violates_{rule.id}"
        if dtype in ("integer", "decimal"):
            return max(allowed) + 1
        if dtype == "timestamp":
            return max(allowed) + timedelta(seconds=1)
        if dtype == "boolean":
            leftover = {True, False} - allowed
            if leftover:
                return leftover.pop()
        raise SynthError(f"rule {rule.id!r}: cannot derive a violating value; "
                         "give the plan an explicit 'violating' pool")
    if isinstance(k, (Domain, ForeignKey)):  # reference-based membership
        dtype = column_type()
        if dtype == "text":
            return f"__missing_{rule.id}"
        if dtype in ("integer", "decimal") and parent_values:
            return max(parent_values) + 1
        raise SynthError(f"rule {rule.id!r}: cannot derive a violating value; "
                         "give the plan an explicit 'violating' pool")
    if isinstance(k, Freshness):
        cutoff = rs.reference_time - timedelta(
            microseconds=int(k.max_age_days * 86_400_000_000))
        return cutoff - timedelta(days=1)
    if isinstance(k, (Syntax, FormatClass, Predicate)):
        raise SynthError(f"rule {rule.id!r}: {k.name} plans need an explicit "
                         "'violating' pool")
    raise SynthError(f"rule {rule.id!r}: no violating value for kind {k.name}")


# --------------------------------------------------------------------------
# Local compliance checks (independent of the engine)

def _value_passes(rule: Rule, value, schema, rs: RuleSet,
                  parent_values: set | None) -> bool:
    k = rule.kind
    if isinstance(k, (Syntax, FormatClass)):
        return value is not None and re.fullmatch(k.pattern, value) is not None
    if isinstance(k, NotNull):
        return value is not None
    if isinstance(k, NoDefault):
        dtype = schema.column(rule.columns[0]).datatype
        return value is not None and value not in {coerce_literal(p, dtype)
                                                   for p in k.placeholders}
    if isinstance(k, Range):
        if value is None:
            return False
        dtype = schema.column(rule.columns[0]).datatype
        if k.min is not None:
            lo = coerce_literal(k.min, dtype)
            if value < lo if k.min_inclusive else value <= lo:
                return False
        if k.max is not None:
            hi = coerce_literal(k.max, dtype)
            if value > hi if k.max_inclusive else value >= hi:
                return False
        return True
    if isinstance(k, Domain):
        if value is None:
            return False
        if k.reference is not None:
            return value in (parent_values or set())
        dtype = schema.column(rule.columns[0]).datatype
        return value in {coerce_literal(v, dtype) for v in k.allowed}
    if isinstance(k, ForeignKey):
        return value is not None and value in (parent_values or set())
    if isinstance(k, Freshness):
        if value is None:
            return False
        cutoff = rs.reference_time - timedelta(
            microseconds=int(k.max_age_days * 86_400_000_000))
        return value >= cutoff
    raise SynthError(f"no per-value check for kind {k.name}")  # pragma: no cover


_VALUE_CHECKED = (Syntax, Range, Domain, NotNull, NoDefault, ForeignKey, Freshness)


# --------------------------------------------------------------------------
# Generation

@dataclass(frozen=True)
class SynthResult:
    repository_columns: dict[str, dict[str, list]]
    expected: ExpectedMeasures


def generate(spec: SynthSpec, catalog: SchemaCatalog, rs: RuleSet,
             out_dir: Path | None = None) -> ExpectedMeasures:
    """Build the snapshot and its exact expected measures.

    Writes `<entity>.csv` files plus expected_measures.json into out_dir
    when given; a pure function of (spec, catalog, ruleset) either way.
    """
    result = _generate_tables(spec, catalog, rs)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for schema in catalog.entities:
            entity = Entity(schema, result.repository_columns[schema.name])
            write_entity(entity, out_dir / f"{schema.name}.csv")
        (out_dir / "expected_measures.json").write_text(
            serialize_expected(result.expected), encoding="utf-8")
    return result.expected


def _generate_tables(spec: SynthSpec, catalog: SchemaCatalog,
                     rs: RuleSet) -> SynthResult:
    _check_spec(spec, catalog, rs)

    tables: dict[str, dict[str, list]] = {}
    for schema in catalog.entities:
        plan = spec.entity(schema.name)
        columns: dict[str, list] = {}
        for cname, gen in plan.columns:
            col_schema = schema.column(cname)
            if col_schema is None:
                raise SynthError(f"{schema.name}.{cname} is not in the catalog")
            rng = _sub_rng(spec.seed, f"col|{schema.name}|{cname}")
            columns[cname] = _generate_column(gen, col_schema.datatype, plan.rows,
                                              rng, f"{schema.name}.{cname}")
        tables[schema.name] = columns

    expected: dict[str, tuple[int, int]] = {}
    plans = {p.rule_id: p for p in spec.violations}
    for rule in rs.rules:
        expected[rule.id] = _apply_rule(rule, plans.get(rule.id), spec, catalog,
                                        rs, tables)
    return SynthResult(tables, ExpectedMeasures(
        tuple((r.id, *expected[r.id]) for r in rs.rules)))


def _parent_values(rule: Rule, tables) -> set | None:
    k = rule.kind
    ref = None
    if isinstance(k, Domain) and k.reference is not None:
        ref = k.reference
    elif isinstance(k, ForeignKey):
        ref = k.referenced
    if ref is None:
        return None
    return set(tables[ref[0]][ref[1]]) - {None}


def _apply_rule(rule: Rule, plan: ViolationPlan | None, spec: SynthSpec,
                catalog: SchemaCatalog, rs: RuleSet, tables) -> tuple[int, int]:
    schema = catalog.get(rule.entity)
    columns = tables[rule.entity]
    n = spec.entity(rule.entity).rows
    k = rule.kind

    if isinstance(k, MinCount):
        if n == 0:
            return 0, 0
        return (1 if n >= k.threshold else 0), 1

    if isinstance(k, Frequency):
        if n == 0:
            return 0, 0
        col = columns[k.timestamp_column]
        max_gap = timedelta(microseconds=int(k.max_gap_days * 86_400_000_000))
        violate = plan is not None and round_half_up(plan.rate, 1) == 1
        if violate:
            split = max(n // 2, 1)
            shift = max_gap + timedelta(days=1)
            for i in range(split, n):
                col[i] = col[i] + shift
        stamps = sorted(v for v in col if v is not None)
        gaps = [b - a for a, b in zip(stamps, stamps[1:])]
        widest = max(gaps, default=timedelta(0))
        if violate and widest <= max_gap:
            raise SynthError(f"rule {rule.id!r}: could not construct a gap "
                             f"wider than {k.max_gap_days} days")
        if not violate and widest > max_gap:
            raise SynthError(f"rule {rule.id!r}: baseline timestamps violate the "
                             "max gap; use a timestamp_spaced generator")
        return (0 if violate else 1), 1

    if n == 0:
        return 0, 0

    if isinstance(k, Unique):
        v = round_half_up(plan.rate, n) if plan else 0
        if v == 1:
            raise SynthError(f"rule {rule.id!r}: a single row cannot violate "
                             "uniqueness; adjust the rate")
        if v:
            rng = _sub_rng(spec.seed, f"plan|{rule.id}")
            chosen = sorted(rng.sample(range(n), v))
            groups = [chosen[i:i + 2] for i in range(0, len(chosen), 2)]
            if len(groups[-1]) == 1:  # odd count: fold the leftover into a triple
                groups[-2].extend(groups.pop())
            for group in groups:
                first = group[0]
                for member in group[1:]:
                    for c in k.key:
                        columns[c][member] = columns[c][first]
        counts: dict[tuple, int] = {}
        for i in range(n):
            key = tuple(columns[c][i] for c in k.key)
            counts[key] = counts.get(key, 0) + 1
        actual_violations = sum(c for c in counts.values() if c > 1)
        if actual_violations != v:
            raise SynthError(f"rule {rule.id!r}: baseline keys are not unique; "
                             "use serial generators for key columns")
        return n - v, n

    if isinstance(k, Predicate):
        v = round_half_up(plan.rate, n) if plan else 0
        chosen: set[int] = set()
        if v:
            if not plan.violating:
                _derive_violating(rule, plan, schema, rs, None)  # raises
            overrides = {str(c): val for c, val in plan.violating}
            for cname, value in overrides.items():
                dtype = schema.column(cname).datatype
                coerced = None if value is None else coerce_literal(value, dtype)
                overrides[cname] = coerced
            rng = _sub_rng(spec.seed, f"plan|{rule.id}")
            chosen = set(rng.sample(range(n), v))
            for cname, value in overrides.items():
                col = columns[cname]
                for i in chosen:
                    col[i] = value
        row = _DictRow(columns)
        for i in range(n):
            row.ordinal = i
            ok = evaluate(k.expr, row, rs.reference_time) is True
            if i in chosen and ok:
                raise SynthError(f"rule {rule.id!r}: the violating overrides still "
                                 "satisfy the predicate")
            if i not in chosen and not ok:
                raise SynthError(f"rule {rule.id!r}: baseline row {i} does not "
                                 "satisfy the predicate")
        return n - v, n

    if isinstance(k, FormatClass):
        targets = [(rule.entity, c) for c in rule.columns] + list(k.extra_targets)
        slots: list[tuple[str, str, int]] = []
        for ent, cname in targets:
            rows = spec.entity(ent).rows
            slots.extend((ent, cname, i) for i in range(rows))
        b = len(slots)
        v = round_half_up(plan.rate, b) if plan else 0
        chosen_slots: list[tuple[str, str, int]] = []
        if v:
            if not plan.violating:
                _derive_violating(rule, plan, schema, rs, None)  # raises
            pool = tuple(_coerce(p, "text", f"rule {rule.id}") for p in plan.violating)
            rng = _sub_rng(spec.seed, f"plan|{rule.id}")
            chosen_slots = [slots[i] for i in sorted(rng.sample(range(b), v))]
            for j, (ent, cname, i) in enumerate(chosen_slots):
                tables[ent][cname][i] = pool[j % len(pool)]
        chosen_set = set(chosen_slots)
        for ent, cname, i in slots:
            ok = _value_passes(rule, tables[ent][cname][i], schema, rs, None)
            if (ent, cname, i) in chosen_set and ok:
                raise SynthError(f"rule {rule.id!r}: violating value still matches "
                                 "the format pattern")
            if (ent, cname, i) not in chosen_set and not ok:
                raise SynthError(f"rule {rule.id!r}: baseline cell "
                                 f"{ent}.{cname}[{i}] fails the format pattern")
        return b - v, b

    if isinstance(k, _VALUE_CHECKED):
        column = rule.columns[0] if rule.columns else k.timestamp_column \
            if isinstance(k, Freshness) else None
        col = columns[column]
        parents = _parent_values(rule, tables)
        v = round_half_up(plan.rate, n) if plan else 0
        chosen = set()
        if v:
            rng = _sub_rng(spec.seed, f"plan|{rule.id}")
            chosen = set(rng.sample(range(n), v))
            pool = plan.violating or (_derive_violating(rule, plan, schema, rs,
                                                        parents),)
            dtype = schema.column(column).datatype
            pool = tuple(None if p is None else coerce_literal(p, dtype)
                         for p in pool)
            for j, i in enumerate(sorted(chosen)):
                col[i] = pool[j % len(pool)]
        for i in range(n):
            ok = _value_passes(rule, col[i], schema, rs, parents)
            if i in chosen and ok:
                raise SynthError(f"rule {rule.id!r}: planned violating value "
                                 f"{col[i]!r} passes the check")
            if i not in chosen and not ok:
                raise SynthError(f"rule {rule.id!r}: baseline value {col[i]!r} "
                                 f"at row {i} fails the check")
        return n - v, n

    raise SynthError(f"rule {rule.id!r}: unsupported kind {k.name}")  # pragma: no cover


class _DictRow:
    """Row view over column lists, reused across ordinals during verification."""

    __slots__ = ("_columns", "ordinal")

    def __init__(self, columns: dict[str, list]):
        self._columns = columns
        self.ordinal = 0

    def __getitem__(self, name: str):
        return self._columns[name][self.ordinal]


# --------------------------------------------------------------------------
# Expected-measure documents and the engine cross-check

def serialize_expected(expected: ExpectedMeasures) -> str:
    return canonical.dumps({
        "rules": {rid: {"a": a, "b": b} for rid, a, b in expected.measures}
    })


def parse_expected(text: str) -> ExpectedMeasures:
    try:
        data = canonical.loads(text)
        return ExpectedMeasures(tuple(
            (rid, entry["a"], entry["b"]) for rid, entry in data["rules"].items()))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid expected-measures document: {exc}") from None


def expected_vs_actual(expected: ExpectedMeasures,
                       ms: MeasureSet) -> list[Discrepancy]:
    """Empty iff the engine's counts equal the construction's counts exactly."""
    out: list[Discrepancy] = []
    seen: set[str] = set()
    for rid, a, b in expected.measures:
        seen.add(rid)
        measure = ms.measures.get(rid)
        if measure is None:
            out.append(Discrepancy(rid, (a, b), None))
        elif (measure.a, measure.b) != (a, b):
            out.append(Discrepancy(rid, (a, b), (measure.a, measure.b)))
    for rid, measure in ms.measures.items():
        if rid not in seen:
            out.append(Discrepancy(rid, None, (measure.a, measure.b)))
    return out
