"""Naive row-by-row reference interpreter for rule measures.

Deliberately independent of dqeval.engine: plain loops, linear scans, no
indexes, no column-major shortcuts. Used to cross-check the engine's
(A, B) counts on small fixtures.
"""

from __future__ import annotations

import re
from datetime import timedelta

from dqeval.expr import columns_referenced, evaluate
from dqeval.rules import (Domain, ForeignKey, FormatClass, Frequency,
                          Freshness, MinCount, NoDefault, NotNull, Predicate,
                          Range, Rule, RuleSet, Syntax, Unique)
from dqeval.values import coerce_literal


def _rows_of(entity) -> list[dict]:
    names = entity.schema.column_names()
    return [{c: entity.column(c)[i] for c in names} for i in range(entity.n_rows)]


def _applicable(rule: Rule, rows: list[dict], rs: RuleSet,
                subject: list[str]) -> list[dict]:
    out = []
    for row in rows:
        if rule.where is not None and evaluate(rule.where, row, rs.reference_time) is not True:
            continue
        if rule.skip_null and any(row[c] is None for c in subject):
            continue
        out.append(row)
    return out


def _duration(days) -> timedelta:
    return timedelta(microseconds=int(days * 86_400_000_000))


def naive_measure(rule: Rule, repo, rs: RuleSet) -> tuple[int, int]:
    """Recompute (A, B) for one rule the slow, obvious way."""
    entity = repo.entities[rule.entity]
    rows = _rows_of(entity)
    k = rule.kind

    if isinstance(k, MinCount):
        if not rows:
            return 0, 0
        return (1 if len(rows) >= k.threshold else 0), 1

    if isinstance(k, Frequency):
        if not rows:
            return 0, 0
        stamps = sorted(r[k.timestamp_column] for r in rows
                        if r[k.timestamp_column] is not None)
        worst = timedelta(0)
        for i in range(1, len(stamps)):
            worst = max(worst, stamps[i] - stamps[i - 1])
        return (1 if worst <= _duration(k.max_gap_days) else 0), 1

    if isinstance(k, FormatClass):
        a = b = 0
        targets = [(rule.entity, c) for c in rule.columns] + list(k.extra_targets)
        for ent_name, column in targets:
            target = repo.entities[ent_name]
            for row in _applicable(rule, _rows_of(target), rs, [column]):
                b += 1
                v = row[column]
                if v is not None and re.fullmatch(k.pattern, v):
                    a += 1
        return a, b

    if isinstance(k, Unique):
        applicable = _applicable(rule, rows, rs, list(k.key))
        keys = [tuple(r[c] for c in k.key) for r in applicable]
        a = sum(1 for key in keys if keys.count(key) == 1)
        return a, len(applicable)

    if isinstance(k, Predicate):
        subject = sorted(columns_referenced(k.expr))
        applicable = _applicable(rule, rows, rs, subject)
        a = sum(1 for r in applicable
                if evaluate(k.expr, r, rs.reference_time) is True)
        return a, len(applicable)

    if isinstance(k, Freshness):
        applicable = _applicable(rule, rows, rs, [k.timestamp_column])
        if k.condition is not None:
            applicable = [r for r in applicable
                          if evaluate(k.condition, r, rs.reference_time) is True]
        cutoff = rs.reference_time - _duration(k.max_age_days)
        a = sum(1 for r in applicable
                if r[k.timestamp_column] is not None
                and r[k.timestamp_column] >= cutoff)
        return a, len(applicable)

    column = rule.columns[0]
    dtype = entity.schema.column(column).datatype
    applicable = _applicable(rule, rows, rs, [column])

    if isinstance(k, Syntax):
        def check(v):
            return v is not None and re.fullmatch(k.pattern, v) is not None
    elif isinstance(k, NotNull):
        def check(v):
            return v is not None
    elif isinstance(k, NoDefault):
        bad = [coerce_literal(p, dtype) for p in k.placeholders]
        def check(v):
            return v is not None and v not in bad
    elif isinstance(k, Range):
        lo = coerce_literal(k.min, dtype) if k.min is not None else None
        hi = coerce_literal(k.max, dtype) if k.max is not None else None
        def check(v):
            if v is None:
                return False
            if lo is not None and (v < lo if k.min_inclusive else v <= lo):
                return False
            if hi is not None and (v > hi if k.max_inclusive else v >= hi):
                return False
            return True
    elif isinstance(k, Domain):
        if k.reference is not None:
            parent = repo.entities[k.reference[0]]
            pool = [v for v in parent.column(k.reference[1]) if v is not None]
        else:
            pool = [coerce_literal(v, dtype) for v in k.allowed]
        def check(v):
            return v is not None and v in pool
    elif isinstance(k, ForeignKey):
        parent = repo.entities[k.referenced[0]]
        pool = [v for v in parent.column(k.referenced[1]) if v is not None]
        def check(v):
            return v is not None and v in pool
    else:  # pragma: no cover
        raise AssertionError(f"no oracle for kind {k.name}")

    a = sum(1 for r in applicable if check(r[column]))
    return a, len(applicable)
