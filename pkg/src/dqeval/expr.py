"""Row-predicate expression language.

Small, typed expression language used for rule `where` filters and
`predicate` checks. Values follow the cell model in `values`; evaluation is
pure (same row + same reference time always gives the same result) and
total over data: null operands propagate (three-valued logic for the
boolean connectives) and arithmetic faults such as division by zero yield
null instead of raising. A predicate passes only when it evaluates to
exactly true.

Grammar (EBNF) is documented in docs/expression-language.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal, InvalidOperation, localcontext

from .errors import ParseError
from .values import format_timestamp, parse_timestamp, value_type

__all__ = [
    "Expr", "Literal", "Column", "Compare", "And", "Or", "Not", "Arith",
    "Neg", "Call", "parse_expr", "unparse", "typecheck", "evaluate",
    "columns_referenced", "validate_pattern", "ExprTypeError",
]

_SECONDS_PER_DAY = Decimal(86400)

KEYWORDS = {"and", "or", "not", "true", "false", "null", "ts"}

FUNCTIONS = ("len", "upper", "lower", "substr", "abs", "regex_match",
             "date_diff_days", "age_days", "in_set")


class ExprTypeError(ValueError):
    """Expression does not type-check against the entity schema."""


# --------------------------------------------------------------------------
# AST

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Literal(Expr):
    value: object  # None | str | int | Decimal | bool | datetime


@dataclass(frozen=True)
class Column(Expr):
    name: str


@dataclass(frozen=True)
class Compare(Expr):
    op: str  # = != < <= > >=
    left: Expr
    right: Expr


@dataclass(frozen=True)
class And(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Or(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


@dataclass(frozen=True)
class Arith(Expr):
    op: str  # + - * / %
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: tuple[Expr, ...]


# --------------------------------------------------------------------------
# Regex dialect guard

_BACKREF_RE = re.compile(r"\\[1-9]|\(\?P=")


def validate_pattern(pattern: str) -> None:
    """Reject backreferences and uncompilable patterns.

    The portable dialect allows character classes, quantifiers, anchors,
    alternation, and grouping only.
    """
    if _BACKREF_RE.search(pattern):
        raise ValueError(f"pattern {pattern!r} uses backreferences, which are not portable")
    try:
        re.compile(pattern)
    except re.error as exc:
        raise ValueError(f"invalid pattern {pattern!r}: {exc}") from None


# --------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<decimal>[0-9]+\.[0-9]+)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'(?:[^']|'')*')
  | (?P<op><=|>=|!=|[=<>+\-*/%(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r} in expression",
                             column=pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, message: str):
        raise ParseError(f"{message} in expression {self.source!r}",
                         column=self.tok.pos + 1)

    def expect_op(self, text: str) -> None:
        if self.tok.kind != "op" or self.tok.text != text:
            self.fail(f"expected {text!r}")
        self.advance()

    def at_op(self, *texts: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in texts

    def at_keyword(self, word: str) -> bool:
        return self.tok.kind == "ident" and self.tok.text == word

    # precedence climbing, lowest first
    def parse(self) -> Expr:
        e = self.or_expr()
        if self.tok.kind != "eof":
            self.fail(f"unparsed input starting at {self.tok.text!r}")
        return e

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.at_keyword("or"):
            self.advance()
            e = Or(e, self.and_expr())
        return e

    def and_expr(self) -> Expr:
        e = self.not_expr()
        while self.at_keyword("and"):
            self.advance()
            e = And(e, self.not_expr())
        return e

    def not_expr(self) -> Expr:
        if self.at_keyword("not"):
            self.advance()
            return Not(self.not_expr())
        return self.comparison()

    def comparison(self) -> Expr:
        e = self.sum_expr()
        if self.at_op("=", "!=", "<", "<=", ">", ">="):
            op = self.advance().text
            return Compare(op, e, self.sum_expr())
        return e

    def sum_expr(self) -> Expr:
        e = self.term()
        while self.at_op("+", "-"):
            op = self.advance().text
            e = Arith(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.at_op("*", "/", "%"):
            op = self.advance().text
            e = Arith(op, e, self.factor())
        return e

    def factor(self) -> Expr:
        if self.at_op("-"):
            self.advance()
            return Neg(self.factor())
        return self.primary()

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Literal(int(t.text))
        if t.kind == "decimal":
            self.advance()
            return Literal(Decimal(t.text))
        if t.kind == "string":
            self.advance()
            return Literal(t.text[1:-1].replace("''", "'"))
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.or_expr()
            self.expect_op(")")
            return e
        if t.kind == "ident":
            word = t.text
            if word == "true":
                self.advance()
                return Literal(True)
            if word == "false":
                self.advance()
                return Literal(False)
            if word == "null":
                self.advance()
                return Literal(None)
            if word == "ts":
                self.advance()
                if self.tok.kind != "string":
                    self.fail("expected quoted timestamp after ts")
                raw = self.advance().text[1:-1].replace("''", "'")
                try:
                    return Literal(parse_timestamp(raw))
                except ValueError as exc:
                    raise ParseError(str(exc), column=t.pos + 1) from None
            if word in KEYWORDS:
                self.fail(f"keyword {word!r} cannot be used here")
            self.advance()
            if self.at_op("("):
                return self.call(word, t)
            return Column(word)
        self.fail(f"unexpected token {t.text!r}" if t.kind != "eof"
                  else "unexpected end of expression")

    def call(self, name: str, tok: _Token) -> Expr:
        if name not in FUNCTIONS:
            raise ParseError(f"unknown function {name!r} in expression {self.source!r}",
                             column=tok.pos + 1)
        self.expect_op("(")
        args: list[Expr] = []
        if not self.at_op(")"):
            args.append(self.or_expr())
            while self.at_op(","):
                self.advance()
                args.append(self.or_expr())
        self.expect_op(")")
        expr = Call(name, tuple(args))
        _check_call_shape(expr, self.source, tok.pos)
        return expr


def _check_call_shape(call: Call, source: str, pos: int) -> None:
    lo, hi = _FUNC_ARITY[call.func]
    if not (lo <= len(call.args) <= hi):
        expected = str(lo) if lo == hi else f"{lo}..{hi}"
        raise ParseError(
            f"{call.func} takes {expected} argument(s), got {len(call.args)}"
            f" in expression {source!r}", column=pos + 1)
    if call.func == "regex_match":
        pat = call.args[1]
        if not (isinstance(pat, Literal) and isinstance(pat.value, str)):
            raise ParseError(
                f"regex_match pattern must be a text literal in expression {source!r}",
                column=pos + 1)
        try:
            validate_pattern(pat.value)
        except ValueError as exc:
            raise ParseError(str(exc), column=pos + 1) from None


_FUNC_ARITY = {
    "len": (1, 1),
    "upper": (1, 1),
    "lower": (1, 1),
    "substr": (2, 3),
    "abs": (1, 1),
    "regex_match": (2, 2),
    "date_diff_days": (2, 2),
    "age_days": (1, 1),
    "in_set": (2, 64),
}


def parse_expr(source: str) -> Expr:
    """Parse expression text; syntax and function-shape errors raise ParseError."""
    return _Parser(source).parse()


# --------------------------------------------------------------------------
# Unparser (canonical text; parse(unparse(e)) == e)

_LEVEL = {"or": 1, "and": 2, "not": 3, "cmp": 4, "sum": 5, "term": 6, "neg": 7, "atom": 8}


def _quote(text: str) -> str:
    return "'" + text.replace("'", "''") + "'"


def _unparse(e: Expr) -> tuple[str, int]:
    if isinstance(e, Literal):
        v = e.value
        if v is None:
            return "null", _LEVEL["atom"]
        if v is True:
            return "true", _LEVEL["atom"]
        if v is False:
            return "false", _LEVEL["atom"]
        if isinstance(v, str):
            return _quote(v), _LEVEL["atom"]
        if isinstance(v, datetime):
            return "ts" + _quote(format_timestamp(v)), _LEVEL["atom"]
        return str(v), _LEVEL["atom"]
    if isinstance(e, Column):
        return e.name, _LEVEL["atom"]
    if isinstance(e, Call):
        args = ", ".join(_wrap(a, 0) for a in e.args)
        return f"{e.func}({args})", _LEVEL["atom"]
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, _LEVEL["neg"]), _LEVEL["neg"]
    if isinstance(e, Arith):
        lvl = _LEVEL["term"] if e.op in "*/%" else _LEVEL["sum"]
        left = _wrap(e.left, lvl)
        right = _wrap(e.right, lvl + 1)  # left-assoc: parenthesize equal-level right
        return f"{left} {e.op} {right}", lvl
    if isinstance(e, Compare):
        lvl = _LEVEL["cmp"]
        return f"{_wrap(e.left, lvl + 1)} {e.op} {_wrap(e.right, lvl + 1)}", lvl
    if isinstance(e, Not):
        return "not " + _wrap(e.operand, _LEVEL["not"]), _LEVEL["not"]
    if isinstance(e, And):
        lvl = _LEVEL["and"]
        return f"{_wrap(e.left, lvl)} and {_wrap(e.right, lvl + 1)}", lvl
    if isinstance(e, Or):
        lvl = _LEVEL["or"]
        return f"{_wrap(e.left, lvl)} or {_wrap(e.right, lvl + 1)}", lvl
    raise TypeError(f"not an expression node: {e!r}")


def _wrap(e: Expr, min_level: int) -> str:
    text, level = _unparse(e)
    return f"({text})" if level < min_level else text


def unparse(e: Expr) -> str:
    return _unparse(e)[0]


# --------------------------------------------------------------------------
# Type checking

_NUMERIC = ("integer", "decimal")


def _comparable(a: str, b: str) -> bool:
    if a == b:
        return True
    return a in _NUMERIC and b in _NUMERIC


def typecheck(e: Expr, columns: dict[str, str]) -> str:
    """Infer the expression's datatype against a column→datatype mapping.

    Returns one of the datatype names, or "null" for the bare null literal.
    Raises ExprTypeError on any mismatch.
    """
    if isinstance(e, Literal):
        return "null" if e.value is None else value_type(e.value)
    if isinstance(e, Column):
        try:
            return columns[e.name]
        except KeyError:
            raise ExprTypeError(f"unknown column {e.name!r}") from None
    if isinstance(e, Compare):
        lt = typecheck(e.left, columns)
        rt = typecheck(e.right, columns)
        if "null" in (lt, rt):
            return "boolean"  # comparison with null is legal and yields null
        if not _comparable(lt, rt):
            raise ExprTypeError(f"cannot compare {lt} {e.op} {rt}")
        if e.op not in ("=", "!=") and lt == "boolean":
            raise ExprTypeError("booleans have no ordering")
        return "boolean"
    if isinstance(e, (And, Or)):
        for side in (e.left, e.right):
            t = typecheck(side, columns)
            if t not in ("boolean", "null"):
                raise ExprTypeError(f"boolean connective applied to {t}")
        return "boolean"
    if isinstance(e, Not):
        t = typecheck(e.operand, columns)
        if t not in ("boolean", "null"):
            raise ExprTypeError(f"not applied to {t}")
        return "boolean"
    if isinstance(e, Neg):
        t = typecheck(e.operand, columns)
        if t == "null":
            return "decimal"
        if t not in _NUMERIC:
            raise ExprTypeError(f"unary minus applied to {t}")
        return t
    if isinstance(e, Arith):
        lt = typecheck(e.left, columns)
        rt = typecheck(e.right, columns)
        for t in (lt, rt):
            if t not in _NUMERIC and t != "null":
                raise ExprTypeError(f"arithmetic {e.op!r} applied to {t}")
        if e.op == "/":
            return "decimal"
        if "decimal" in (lt, rt) or "null" in (lt, rt):
            return "decimal"
        return "integer"
    if isinstance(e, Call):
        return _typecheck_call(e, columns)
    raise TypeError(f"not an expression node: {e!r}")


def _typecheck_call(e: Call, columns: dict[str, str]) -> str:
    kinds = [typecheck(a, columns) for a in e.args]

    def need(i: int, *allowed: str) -> None:
        if kinds[i] != "null" and kinds[i] not in allowed:
            raise ExprTypeError(
                f"{e.func} argument {i + 1} must be {' or '.join(allowed)}, got {kinds[i]}")

    if e.func in ("upper", "lower"):
        need(0, "text")
        return "text"
    if e.func == "len":
        need(0, "text")
        return "integer"
    if e.func == "substr":
        need(0, "text")
        for i in range(1, len(e.args)):
            need(i, "integer")
        return "text"
    if e.func == "abs":
        need(0, *_NUMERIC)
        return kinds[0] if kinds[0] in _NUMERIC else "decimal"
    if e.func == "regex_match":
        need(0, "text")
        return "boolean"
    if e.func == "date_diff_days":
        need(0, "timestamp")
        need(1, "timestamp")
        return "decimal"
    if e.func == "age_days":
        need(0, "timestamp")
        return "decimal"
    if e.func == "in_set":
        first = kinds[0]
        for i in range(1, len(e.args)):
            if kinds[i] == "null" or first == "null":
                continue
            if not _comparable(first, kinds[i]):
                raise ExprTypeError(
                    f"in_set member {i + 1} has type {kinds[i]}, incompatible with {first}")
        return "boolean"
    raise ExprTypeError(f"unknown function {e.func!r}")  # pragma: no cover


def columns_referenced(e: Expr) -> set[str]:
    if isinstance(e, Column):
        return {e.name}
    if isinstance(e, (Literal,)):
        return set()
    if isinstance(e, Compare):
        return columns_referenced(e.left) | columns_referenced(e.right)
    if isinstance(e, (And, Or)):
        return columns_referenced(e.left) | columns_referenced(e.right)
    if isinstance(e, (Not, Neg)):
        return columns_referenced(e.operand)
    if isinstance(e, Arith):
        return columns_referenced(e.left) | columns_referenced(e.right)
    if isinstance(e, Call):
        out: set[str] = set()
        for a in e.args:
            out |= columns_referenced(a)
        return out
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# Evaluation

def evaluate(e: Expr, row, reference_time: datetime):
    """Evaluate against one row (column→value mapping). Returns a value or None.

    Pure: depends only on the row contents and reference_time.
    """
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, Column):
        return row[e.name]
    if isinstance(e, And):
        left = evaluate(e.left, row, reference_time)
        if left is False:
            return False
        right = evaluate(e.right, row, reference_time)
        if right is False:
            return False
        if left is None or right is None:
            return None
        return True
    if isinstance(e, Or):
        left = evaluate(e.left, row, reference_time)
        if left is True:
            return True
        right = evaluate(e.right, row, reference_time)
        if right is True:
            return True
        if left is None or right is None:
            return None
        return False
    if isinstance(e, Not):
        v = evaluate(e.operand, row, reference_time)
        return None if v is None else not v
    if isinstance(e, Compare):
        left = evaluate(e.left, row, reference_time)
        right = evaluate(e.right, row, reference_time)
        if left is None or right is None:
            return None
        op = e.op
        if op == "=":
            return left == right
        if op == "!=":
            return left != right
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        return left >= right
    if isinstance(e, Neg):
        v = evaluate(e.operand, row, reference_time)
        return None if v is None else -v
    if isinstance(e, Arith):
        left = evaluate(e.left, row, reference_time)
        right = evaluate(e.right, row, reference_time)
        if left is None or right is None:
            return None
        try:
            if e.op == "+":
                return left + right
            if e.op == "-":
                return left - right
            if e.op == "*":
                return left * right
            if e.op == "/":
                with localcontext() as ctx:
                    ctx.prec = 28
                    return Decimal(left) / Decimal(right)
            return left % right
        except (ZeroDivisionError, InvalidOperation):
            return None  # arithmetic faults are data conditions, not errors
    if isinstance(e, Call):
        return _eval_call(e, row, reference_time)
    raise TypeError(f"not an expression node: {e!r}")


def _eval_call(e: Call, row, reference_time: datetime):
    args = [evaluate(a, row, reference_time) for a in e.args]
    f = e.func
    if f == "in_set":
        if args[0] is None:
            return None
        return any(m is not None and _same_kind(args[0], m) and args[0] == m
                   for m in args[1:])
    if f == "age_days":
        if args[0] is None:
            return None
        delta = reference_time - args[0]
        return _days(delta)
    if f == "date_diff_days":
        if args[0] is None or args[1] is None:
            return None
        return _days(args[0] - args[1])
    if any(a is None for a in args):
        return None
    if f == "len":
        return len(args[0])
    if f == "upper":
        return args[0].upper()
    if f == "lower":
        return args[0].lower()
    if f == "substr":
        start = max(args[1], 1) - 1  # 1-based start, clamped
        if len(args) == 2:
            return args[0][start:]
        if args[2] <= 0:
            return ""
        return args[0][start:start + args[2]]
    if f == "abs":
        return abs(args[0])
    if f == "regex_match":
        return re.fullmatch(e.args[1].value, args[0]) is not None
    raise TypeError(f"unknown function {f!r}")  # pragma: no cover


def _same_kind(a, b) -> bool:
    num = (int, Decimal)
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool)
    if isinstance(a, num) and isinstance(b, num):
        return True
    return type(a) is type(b)


def _days(delta) -> Decimal:
    seconds = Decimal(delta.days) * _SECONDS_PER_DAY + Decimal(delta.seconds)
    if delta.microseconds:
        seconds += Decimal(delta.microseconds) / Decimal(1_000_000)
    with localcontext() as ctx:
        ctx.prec = 28
        return seconds / _SECONDS_PER_DAY
