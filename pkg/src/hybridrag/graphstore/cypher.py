"""A small Cypher subset: lexer, recursive-descent parser, printer, executor.

Supported shape::

    MATCH pattern [, pattern ...]
    [WHERE expr]
    RETURN item [, item ...] [;]

where ``pattern`` is a node ``(var:Label)`` optionally followed by one hop
``-[:TYPE]->``, ``<-[:TYPE]-``, ``-[:TYPE]-`` (the type may be omitted, and
``-->``/``<--``/``--`` are accepted). Labels with spaces need backticks.
``expr`` combines ``var.prop = literal`` and ``var.prop CONTAINS 'text'``
with AND, OR and parentheses. ``item`` is ``var`` or ``var.prop``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Iterator, Union

from .store import GraphStore, NodeRecord

KEYWORDS = frozenset({"MATCH", "WHERE", "RETURN", "AND", "OR", "CONTAINS", "TRUE", "FALSE"})

OUT, IN, BOTH = "OUT", "IN", "BOTH"


class CypherError(Exception):
    """Base class for query errors; carries a source position."""

    def __init__(self, message: str, line: int = 1, column: int = 1, offset: int = 0) -> None:
        self.line = line
        self.column = column
        self.offset = offset
        super().__init__(f"{message} (line {line}, column {column} (offset: {offset}))")


class CypherSyntaxError(CypherError):
    def __init__(self, found: str, expected: frozenset[str], line: int, column: int, offset: int) -> None:
        self.found = found
        self.expected = expected
        super().__init__(
            f"Invalid input '{found}': expected {_format_expected(expected)}", line, column, offset
        )


class CypherSemanticError(CypherError):
    pass


def _format_expected(expected: frozenset[str]) -> str:
    items = sorted(expected)
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + ", or " + items[-1]


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class NodePattern:
    var: str | None = None
    label: str | None = None


@dataclass(frozen=True)
class RelPattern:
    rel_type: str | None = None
    direction: str = OUT


@dataclass(frozen=True)
class Pattern:
    start: NodePattern
    rel: RelPattern | None = None
    end: NodePattern | None = None

    def nodes(self) -> tuple[NodePattern, ...]:
        return (self.start,) if self.end is None else (self.start, self.end)


@dataclass(frozen=True)
class Comparison:
    var: str
    prop: str
    op: str  # "=" or "CONTAINS"
    value: Any


@dataclass(frozen=True)
class BoolOp:
    op: str  # "AND" or "OR"
    operands: tuple["Expr", ...]


Expr = Union[Comparison, BoolOp]


@dataclass(frozen=True)
class ReturnItem:
    var: str
    prop: str | None = None

    @property
    def column(self) -> str:
        return self.var if self.prop is None else f"{self.var}.{_print_name(self.prop)}"


@dataclass(frozen=True)
class CypherAst:
    patterns: tuple[Pattern, ...]
    where: Expr | None
    returns: tuple[ReturnItem, ...]


# -- lexer -------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, BQ, STRING, NUMBER, SYM, EOF
    text: str
    value: Any
    offset: int


_NUMBER_RE = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_SYMBOLS = ("->", "<-", "(", ")", "[", "]", ":", ".", ",", "=", "-", ";")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "'\"":
            j, buf = i + 1, []
            while j < n and text[j] != ch:
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                _raise_at(text, i, text[i:], frozenset({"a closing quote"}))
            tokens.append(Token("STRING", text[i : j + 1], "".join(buf), i))
            i = j + 1
            continue
        if ch == "`":
            j, buf = i + 1, []
            while True:
                if j >= n:
                    _raise_at(text, i, text[i:], frozenset({"a closing backtick"}))
                if text[j] == "`":
                    if j + 1 < n and text[j + 1] == "`":
                        buf.append("`")
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            if not buf:
                _raise_at(text, i, "``", frozenset({"a name"}))
            tokens.append(Token("BQ", text[i : j + 1], "".join(buf), i))
            i = j + 1
            continue
        m = _NUMBER_RE.match(text, i)
        if m:
            raw = m.group(0)
            value: Any = float(raw) if (m.group(1) or m.group(2)) else int(raw)
            tokens.append(Token("NUMBER", raw, value, i))
            i = m.end()
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(Token("IDENT", m.group(0), m.group(0), i))
            i = m.end()
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("SYM", sym, sym, i))
                i += len(sym)
                break
        else:
            _raise_at(text, i, ch, frozenset({"a valid token"}))
    tokens.append(Token("EOF", "", None, n))
    return tokens


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def _raise_at(text: str, offset: int, found: str, expected: frozenset[str]) -> None:
    line, column = _position(text, offset)
    raise CypherSyntaxError(found, expected, line, column, offset)


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, *expected: str) -> None:
        tok = self.tok
        _raise_at(self.text, tok.offset, tok.text, frozenset(expected))

    def is_kw(self, word: str) -> bool:
        return self.tok.kind == "IDENT" and self.tok.text.upper() == word

    def is_sym(self, sym: str) -> bool:
        return self.tok.kind == "SYM" and self.tok.text == sym

    def expect_kw(self, word: str) -> Token:
        if not self.is_kw(word):
            self.fail(f'"{word}"')
        return self.advance()

    def expect_sym(self, sym: str, *alternatives: str) -> Token:
        if not self.is_sym(sym):
            self.fail(f'"{sym}"', *alternatives)
        return self.advance()

    def parse(self) -> CypherAst:
        self.expect_kw("MATCH")
        patterns = [self.pattern()]
        while self.is_sym(","):
            self.advance()
            patterns.append(self.pattern())
        where = None
        if self.is_kw("WHERE"):
            self.advance()
            where = self.or_expr()
        if not self.is_kw("RETURN"):
            if where is None:
                self.fail('","', '"WHERE"', '"RETURN"')
            self.fail('"AND"', '"OR"', '"RETURN"')
        self.advance()
        returns = [self.return_item()]
        while self.is_sym(","):
            self.advance()
            returns.append(self.return_item())
        if self.is_sym(";"):
            self.advance()
        if self.tok.kind != "EOF":
            self.fail('","', '";"', "end of input")
        ast = CypherAst(tuple(patterns), where, tuple(returns))
        _check_bound(ast, self.text)
        return ast

    def pattern(self) -> Pattern:
        start = self.node()
        if self.is_sym("-") or self.is_sym("<-"):
            rel = self.rel()
            end = self.node()
            return Pattern(start, rel, end)
        return Pattern(start)

    def node(self) -> NodePattern:
        self.expect_sym("(")
        var = label = None
        if self.tok.kind == "IDENT" and self.tok.text.upper() not in KEYWORDS:
            var = self.advance().text
        if self.is_sym(":"):
            self.advance()
            label = self.name("a label")
        if not self.is_sym(")"):
            expected = ['")"']
            if label is None:
                expected.append('":"')
                if var is None:
                    expected.append("a variable")
            self.fail(*expected)
        self.advance()
        return NodePattern(var, label)

    def rel(self) -> RelPattern:
        incoming = self.advance().text == "<-"
        rel_type = None
        if self.is_sym("["):
            self.advance()
            if self.is_sym(":"):
                self.advance()
                rel_type = self.name("a relationship type")
            self.expect_sym("]", *(('":"',) if rel_type is None else ()))
        elif not self.is_sym("-") and not self.is_sym("->"):
            self.fail('"["', '"-"', '"->"')
        if incoming:
            self.expect_sym("-")
            return RelPattern(rel_type, IN)
        if self.is_sym("->"):
            self.advance()
            return RelPattern(rel_type, OUT)
        self.expect_sym("-", '"->"')
        return RelPattern(rel_type, BOTH)

    def name(self, what: str) -> str:
        if self.tok.kind in ("IDENT", "BQ"):
            return self.advance().value
        self.fail(what)
        raise AssertionError  # unreachable

    def or_expr(self) -> Expr:
        operands = [self.and_expr()]
        while self.is_kw("OR"):
            self.advance()
            operands.append(self.and_expr())
        return operands[0] if len(operands) == 1 else BoolOp("OR", tuple(operands))

    def and_expr(self) -> Expr:
        operands = [self.atom()]
        while self.is_kw("AND"):
            self.advance()
            operands.append(self.atom())
        return operands[0] if len(operands) == 1 else BoolOp("AND", tuple(operands))

    def atom(self) -> Expr:
        if self.is_sym("("):
            self.advance()
            inner = self.or_expr()
            self.expect_sym(")", '"AND"', '"OR"')
            return inner
        if self.tok.kind != "IDENT" or self.tok.text.upper() in KEYWORDS:
            self.fail('"("', "a variable")
        var = self.advance().text
        self.expect_sym(".")
        prop = self.name("a property name")
        if self.is_sym("="):
            op = "="
        elif self.is_kw("CONTAINS"):
            op = "CONTAINS"
        else:
            self.fail('"="', '"CONTAINS"')
        self.advance()
        value = self.literal()
        if op == "CONTAINS" and not isinstance(value, str):
            raise CypherSemanticError("CONTAINS requires a string literal", *self._pos_of(self.pos - 1))
        return Comparison(var, prop, op, value)

    def literal(self) -> Any:
        tok = self.tok
        if tok.kind in ("STRING", "NUMBER"):
            self.advance()
            return tok.value
        if self.is_sym("-") and self.tokens[self.pos + 1].kind == "NUMBER":
            self.advance()
            return -self.advance().value
        if self.is_kw("TRUE") or self.is_kw("FALSE"):
            self.advance()
            return tok.text.upper() == "TRUE"
        self.fail("a literal")

    def return_item(self) -> ReturnItem:
        if self.tok.kind != "IDENT" or self.tok.text.upper() in KEYWORDS:
            self.fail("a variable")
        var = self.advance().text
        if self.is_sym("."):
            self.advance()
            return ReturnItem(var, self.name("a property name"))
        return ReturnItem(var)

    def _pos_of(self, index: int) -> tuple[int, int, int]:
        offset = self.tokens[index].offset
        line, column = _position(self.text, offset)
        return line, column, offset


def _expr_vars(expr: Expr | None) -> Iterator[str]:
    if expr is None:
        return
    if isinstance(expr, Comparison):
        yield expr.var
    else:
        for operand in expr.operands:
            yield from _expr_vars(operand)


def _check_bound(ast: CypherAst, text: str = "") -> None:
    bound = {n.var for p in ast.patterns for n in p.nodes() if n.var}
    for var in list(_expr_vars(ast.where)) + [r.var for r in ast.returns]:
        if var not in bound:
            offset = max(text.find(var), 0) if text else 0
            line, column = _position(text, offset) if text else (1, 1)
            raise CypherSemanticError(f"Variable `{var}` not defined", line, column, offset)


def parse_cypher(text: str) -> CypherAst:
    """Parse ``text`` into a CypherAst.

    Raises:
        CypherSyntaxError: with line/column/offset and the expected-token set.
        CypherSemanticError: when WHERE or RETURN uses an unbound variable.
    """
    return _Parser(text).parse()


# -- printer -----------------------------------------------------------------


def _print_name(name: str) -> str:
    if _IDENT_RE.fullmatch(name) and name.upper() not in KEYWORDS:
        return name
    return "`" + name.replace("`", "``") + "`"


def _print_literal(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    escaped = str(value).replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def _print_node(node: NodePattern) -> str:
    inner = node.var or ""
    if node.label is not None:
        inner += ":" + _print_name(node.label)
    return f"({inner})"


def _print_rel(rel: RelPattern) -> str:
    body = "[]" if rel.rel_type is None else f"[:{_print_name(rel.rel_type)}]"
    if rel.direction == OUT:
        return f"-{body}->"
    if rel.direction == IN:
        return f"<-{body}-"
    return f"-{body}-"


def _print_expr(expr: Expr) -> str:
    if isinstance(expr, Comparison):
        return f"{expr.var}.{_print_name(expr.prop)} {expr.op} {_print_literal(expr.value)}"
    parts = [
        f"({_print_expr(o)})" if isinstance(o, BoolOp) else _print_expr(o) for o in expr.operands
    ]
    return f" {expr.op} ".join(parts)


def print_cypher(ast: CypherAst) -> str:
    """Canonical text for ``ast``; ``parse_cypher(print_cypher(a)) == a``."""
    patterns = []
    for p in ast.patterns:
        text = _print_node(p.start)
        if p.rel is not None and p.end is not None:
            text += _print_rel(p.rel) + _print_node(p.end)
        patterns.append(text)
    out = "MATCH " + ", ".join(patterns)
    if ast.where is not None:
        out += " WHERE " + _print_expr(ast.where)
    out += " RETURN " + ", ".join(r.column for r in ast.returns)
    return out


# -- execution ---------------------------------------------------------------


@dataclass(frozen=True)
class NodeValue:
    """Read-only view of a node returned for a bare ``RETURN var`` item."""

    node_id: str
    labels: tuple[str, ...]
    properties: tuple[tuple[str, Any], ...]

    @classmethod
    def of(cls, node: NodeRecord) -> "NodeValue":
        return cls(node.node_id, tuple(node.labels), tuple(sorted(node.properties.items())))

    def render(self) -> str:
        labels = "".join(":" + _print_name(l) for l in self.labels)
        props = ", ".join(f"{k}: {render_value(v)}" for k, v in self.properties)
        return f"({labels} {{{props}}})"


def render_value(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, NodeValue):
        return value.render()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    return str(value)


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple[Any, ...]]

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list[Any]:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def to_text(self) -> str:
        """One line per row, ``column: value`` pairs joined by ``; ``."""
        return "\n".join(
            "; ".join(f"{c}: {render_value(v)}" for c, v in zip(self.columns, row))
            for row in self.rows
        )


def _equals(actual: Any, literal: Any) -> bool:
    if actual is None:
        return False
    if isinstance(actual, bool) or isinstance(literal, bool):
        return isinstance(actual, bool) and isinstance(literal, bool) and actual == literal
    if isinstance(actual, (int, float)) and isinstance(literal, (int, float)):
        return actual == literal
    if isinstance(actual, str) and isinstance(literal, str):
        return actual == literal
    return False


def evaluate(expr: Expr | None, lookup) -> bool:
    """Evaluate a WHERE tree; ``lookup(var, prop)`` returns a property or None."""
    if expr is None:
        return True
    if isinstance(expr, BoolOp):
        results = (evaluate(o, lookup) for o in expr.operands)
        return all(results) if expr.op == "AND" else any(results)
    actual = lookup(expr.var, expr.prop)
    if expr.op == "=":
        return _equals(actual, expr.value)
    return isinstance(actual, str) and expr.value.lower() in actual.lower()


def _pattern_bindings(store: GraphStore, pattern: Pattern, bound: dict[str, str]):
    """Yield (node ids, edge id or None) for one pattern given current bindings."""

    def candidates(node: NodePattern) -> list[str]:
        if node.var is not None and node.var in bound:
            nid = bound[node.var]
            if node.label is None or node.label in store._raw_node(nid).labels:
                return [nid]
            return []
        return sorted(store._node_ids_for(node.label))

    for start_id in candidates(pattern.start):
        if pattern.rel is None or pattern.end is None:
            yield (start_id,), None
            continue
        rel = pattern.rel
        hops: list[tuple[str, str]] = []
        if rel.direction in (OUT, BOTH):
            hops += [(e.to_id, e.edge_id) for e in store._raw_out(start_id)
                     if rel.rel_type is None or e.rel_type == rel.rel_type]
        if rel.direction in (IN, BOTH):
            hops += [(e.from_id, e.edge_id) for e in store._raw_in(start_id)
                     if (rel.rel_type is None or e.rel_type == rel.rel_type)
                     and not (rel.direction == BOTH and e.from_id == e.to_id)]
        end = pattern.end
        for end_id, edge_id in sorted(hops):
            if end.label is not None and end.label not in store._raw_node(end_id).labels:
                continue
            if end.var is not None:
                want = bound.get(end.var)
                if want is not None and want != end_id:
                    continue
                if end.var == pattern.start.var and end_id != start_id:
                    continue
            yield (start_id, end_id), edge_id


def execute(store: GraphStore, ast: CypherAst) -> ResultTable:
    """Run ``ast`` against ``store``.

    Rows are every binding that satisfies the patterns and the WHERE tree,
    ordered by the tuple of matched node ids (pattern order), then edge ids.
    Missing properties read as null; unknown labels simply match nothing.
    """
    _check_bound(ast)
    columns = [r.column for r in ast.returns]
    with store._lock:
        # each partial: (var bindings, node id tuple, edge id tuple)
        partials: list[tuple[dict[str, str], tuple[str, ...], tuple[str, ...]]] = [({}, (), ())]
        for pattern in ast.patterns:
            extended = []
            for bound, node_ids, edge_ids in partials:
                for ids, edge_id in _pattern_bindings(store, pattern, bound):
                    new_bound = dict(bound)
                    for node, nid in zip(pattern.nodes(), ids):
                        if node.var is not None:
                            new_bound[node.var] = nid
                    extended.append(
                        (new_bound, node_ids + ids, edge_ids + ((edge_id,) if edge_id else ()))
                    )
            partials = extended

        def lookup_in(bound: dict[str, str]):
            return lambda var, prop: store._raw_node(bound[var]).properties.get(prop)

        matched = [p for p in partials if evaluate(ast.where, lookup_in(p[0]))]
        matched.sort(key=lambda p: (p[1], p[2]))
        rows = []
        for bound, _, _ in matched:
            row = []
            for item in ast.returns:
                node = store._raw_node(bound[item.var])
                if item.prop is None:
                    row.append(NodeValue.of(node))
                else:
                    value = node.properties.get(item.prop)
                    row.append(list(value) if isinstance(value, list) else value)
            rows.append(tuple(row))
    return ResultTable(columns, rows)


def run_query(store: GraphStore, text: str) -> ResultTable:
    return execute(store, parse_cypher(text))


__all__ = [
    "BOTH", "IN", "OUT", "BoolOp", "Comparison", "CypherAst", "CypherError",
    "CypherSemanticError", "CypherSyntaxError", "NodePattern", "NodeValue",
    "Pattern", "RelPattern", "ResultTable", "ReturnItem", "evaluate", "execute",
    "parse_cypher", "print_cypher", "render_value", "run_query", "tokenize",
]
