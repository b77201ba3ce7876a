"""Recursive-descent parser for the Cypher-style query subset.

Supported shape:

    MATCH pattern (, pattern)*
    [WHERE boolean-expression]
    RETURN item (, item)*
    [LIMIT n]

Patterns are chains of node patterns ``(var:Label {prop: literal})`` joined by
relationships ``-[var:TYPE*min..max]->``, ``<-[...]-`` or undirected ``-[...]-``
(also the bare arrows ``-->``, ``<--``, ``--``). Errors carry line/column and
the expected-token set; parsing never crashes on malformed input.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import QuerySemanticError, QuerySyntaxError
from .ast import (
    BoolOp,
    Comparison,
    CountCall,
    LabelTest,
    Literal,
    NodePattern,
    NotOp,
    PathPattern,
    PropertyAccess,
    QueryAst,
    RelPattern,
    ReturnItem,
    VariableRef,
)

KEYWORDS = {"MATCH", "WHERE", "RETURN", "LIMIT", "AND", "OR", "NOT", "AS", "COUNT", "TRUE", "FALSE", "NULL"}

_PUNCT_TWO = ("<>", "<=", ">=", "..")
_PUNCT_ONE = "()[]{}:,.*=<>-|+/"


@dataclass
class Token:
    kind: str  # IDENT | STRING | INT | FLOAT | KEYWORD | PUNCT | EOF
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1

    def error(message: str):
        raise QuerySyntaxError(message, line, col)

    while i < len(text):
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "KEYWORD" if word.upper() in KEYWORDS else "IDENT"
            tokens.append(Token(kind, word.upper() if kind == "KEYWORD" else word, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch == "`":
            j = i + 1
            while j < len(text) and text[j] != "`":
                j += 1
            if j >= len(text):
                error("unterminated backtick identifier")
            tokens.append(Token("IDENT", text[i + 1 : j], start_line, start_col))
            col += j - i + 1
            i = j + 1
            continue
        if ch in "'\"":
            quote = ch
            j = i + 1
            out = []
            while j < len(text):
                c = text[j]
                if c == "\\":
                    if j + 1 >= len(text):
                        error("unterminated string escape")
                    nxt = text[j + 1]
                    out.append({"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"'}.get(nxt, nxt))
                    j += 2
                    continue
                if c == quote:
                    break
                if c == "\n":
                    error("unterminated string literal")
                out.append(c)
                j += 1
            if j >= len(text) or text[j] != quote:
                error("unterminated string literal")
            tokens.append(Token("STRING", "".join(out), start_line, start_col))
            col += j - i + 1
            i = j + 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            is_float = False
            # '..' is a range, not a decimal point
            if j < len(text) and text[j] == "." and not text.startswith("..", j) and j + 1 < len(text) and text[j + 1].isdigit():
                is_float = True
                j += 1
                while j < len(text) and text[j].isdigit():
                    j += 1
            if j < len(text) and text[j] in "eE":
                k = j + 1
                if k < len(text) and text[k] in "+-":
                    k += 1
                if k < len(text) and text[k].isdigit():
                    is_float = True
                    j = k
                    while j < len(text) and text[j].isdigit():
                        j += 1
            tokens.append(Token("FLOAT" if is_float else "INT", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        two = text[i : i + 2]
        if two in _PUNCT_TWO:
            tokens.append(Token("PUNCT", two, start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT_ONE:
            tokens.append(Token("PUNCT", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        error(f"unexpected character {ch!r}")
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def fail(self, expected: tuple[str, ...]):
        tok = self.current
        shown = tok.text or "end of input"
        raise QuerySyntaxError(f"unexpected {shown!r}", tok.line, tok.column, expected)

    def at_punct(self, text: str) -> bool:
        return self.current.kind == "PUNCT" and self.current.text == text

    def at_keyword(self, word: str) -> bool:
        return self.current.kind == "KEYWORD" and self.current.text == word

    def take(self) -> Token:
        tok = self.current
        self.pos += 1
        return tok

    def expect_punct(self, text: str) -> Token:
        if not self.at_punct(text):
            self.fail((repr(text),))
        return self.take()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            self.fail((word,))
        return self.take()

    def expect_ident(self) -> Token:
        if self.current.kind != "IDENT":
            self.fail(("identifier",))
        return self.take()

    # -- grammar ----------------------------------------------------------

    def parse_query(self) -> QueryAst:
        self.expect_keyword("MATCH")
        patterns = [self.parse_pattern()]
        while self.at_punct(","):
            self.take()
            patterns.append(self.parse_pattern())
        where = None
        if self.at_keyword("WHERE"):
            self.take()
            where = self.parse_expression()
        self.expect_keyword("RETURN")
        items = [self.parse_return_item()]
        while self.at_punct(","):
            self.take()
            items.append(self.parse_return_item())
        limit = None
        if self.at_keyword("LIMIT"):
            self.take()
            if self.current.kind != "INT":
                self.fail(("integer",))
            limit = int(self.take().text)
            if limit < 1:
                raise QuerySemanticError("LIMIT must be positive")
        if self.current.kind != "EOF":
            self.fail(("end of query",))
        return QueryAst(patterns, where, items, limit)

    def parse_pattern(self) -> PathPattern:
        elements: list = [self.parse_node_pattern()]
        while self.at_punct("-") or self.at_punct("<"):
            elements.append(self.parse_rel_pattern())
            elements.append(self.parse_node_pattern())
        return PathPattern(elements)

    def parse_node_pattern(self) -> NodePattern:
        self.expect_punct("(")
        variable = None
        labels: list[str] = []
        properties: dict = {}
        if self.current.kind == "IDENT":
            variable = self.take().text
        while self.at_punct(":"):
            self.take()
            labels.append(self.expect_ident().text)
        if self.at_punct("{"):
            properties = self.parse_property_map()
        self.expect_punct(")")
        return NodePattern(variable, labels, properties)

    def parse_property_map(self) -> dict:
        self.expect_punct("{")
        properties: dict = {}
        if not self.at_punct("}"):
            while True:
                name = self.expect_ident().text
                self.expect_punct(":")
                properties[name] = self.parse_literal_value()
                if self.at_punct(","):
                    self.take()
                    continue
                break
        self.expect_punct("}")
        return properties

    def parse_literal_value(self):
        negate = False
        if self.at_punct("-"):
            self.take()
            negate = True
        tok = self.current
        if tok.kind == "INT":
            self.take()
            return -int(tok.text) if negate else int(tok.text)
        if tok.kind == "FLOAT":
            self.take()
            return -float(tok.text) if negate else float(tok.text)
        if negate:
            self.fail(("number",))
        if tok.kind == "STRING":
            self.take()
            return tok.text
        if tok.kind == "KEYWORD" and tok.text in ("TRUE", "FALSE"):
            self.take()
            return tok.text == "TRUE"
        if tok.kind == "KEYWORD" and tok.text == "NULL":
            self.take()
            return None
        self.fail(("literal",))

    def parse_rel_pattern(self) -> RelPattern:
        rel = RelPattern()
        if self.at_punct("<"):
            self.take()
            self.expect_punct("-")
            rel.direction = "in"
            if self.at_punct("["):
                self._parse_rel_body(rel)
            self.expect_punct("-")
            return rel
        self.expect_punct("-")
        if self.at_punct("["):
            self._parse_rel_body(rel)
        self.expect_punct("-")
        if self.at_punct(">"):
            self.take()
            rel.direction = "out"
        else:
            rel.direction = "any"
        return rel

    def _parse_rel_body(self, rel: RelPattern) -> None:
        self.expect_punct("[")
        if self.current.kind == "IDENT":
            rel.variable = self.take().text
        if self.at_punct(":"):
            self.take()
            rel.edge_type = self.expect_ident().text
        if self.at_punct("*"):
            self.take()
            rel.var_length = True
            rel.min_hops = 1
            rel.max_hops = None
            if self.current.kind == "INT":
                rel.min_hops = int(self.take().text)
                rel.max_hops = rel.min_hops
            if self.at_punct(".."):
                self.take()
                rel.max_hops = None
                if self.current.kind == "INT":
                    rel.max_hops = int(self.take().text)
            if rel.max_hops is not None and rel.max_hops < rel.min_hops:
                raise QuerySemanticError(
                    f"hop range {rel.min_hops}..{rel.max_hops} is empty"
                )
        self.expect_punct("]")

    def parse_expression(self):
        return self.parse_or()

    def parse_or(self):
        left = self.parse_and()
        while self.at_keyword("OR"):
            self.take()
            left = BoolOp("OR", left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.at_keyword("AND"):
            self.take()
            left = BoolOp("AND", left, self.parse_not())
        return left

    def parse_not(self):
        if self.at_keyword("NOT"):
            self.take()
            return NotOp(self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self):
        left = self.parse_value()
        for op in ("<>", "<=", ">=", "=", "<", ">"):
            if self.at_punct(op):
                self.take()
                return Comparison(op, left, self.parse_value())
        return left

    def parse_value(self):
        if self.at_punct("("):
            self.take()
            inner = self.parse_expression()
            self.expect_punct(")")
            return inner
        if self.current.kind == "IDENT":
            name = self.take().text
            if self.at_punct("."):
                self.take()
                return PropertyAccess(name, self.expect_ident().text)
            if self.at_punct(":"):
                self.take()
                return LabelTest(name, self.expect_ident().text)
            return VariableRef(name)
        return Literal(self.parse_literal_value())

    def parse_return_item(self) -> ReturnItem:
        if self.at_keyword("COUNT"):
            self.take()
            self.expect_punct("(")
            if self.at_punct("*"):
                self.take()
                argument = None
            else:
                name = self.expect_ident().text
                if self.at_punct("."):
                    self.take()
                    argument = PropertyAccess(name, self.expect_ident().text)
                else:
                    argument = VariableRef(name)
            self.expect_punct(")")
            expression: object = CountCall(argument)
        else:
            expression = self.parse_value()
        alias = None
        if self.at_keyword("AS"):
            self.take()
            alias = self.expect_ident().text
        return ReturnItem(expression, alias)


def _bound_variables(ast: QueryAst) -> set[str]:
    bound = set()
    for pattern in ast.match_patterns:
        for element in pattern.elements:
            if element.variable:
                bound.add(element.variable)
    return bound


def _referenced_variables(expr) -> set[str]:
    if isinstance(expr, VariableRef):
        return {expr.name}
    if isinstance(expr, (PropertyAccess, LabelTest)):
        return {expr.variable}
    if isinstance(expr, Comparison):
        return _referenced_variables(expr.left) | _referenced_variables(expr.right)
    if isinstance(expr, BoolOp):
        return _referenced_variables(expr.left) | _referenced_variables(expr.right)
    if isinstance(expr, NotOp):
        return _referenced_variables(expr.operand)
    if isinstance(expr, CountCall):
        return _referenced_variables(expr.argument) if expr.argument else set()
    return set()


def parse_query(text: str) -> QueryAst:
    """Parse query text into an AST; every variable used must be bound."""
    ast = _Parser(tokenize(text)).parse_query()
    bound = _bound_variables(ast)
    used: set[str] = set()
    if ast.where_clause is not None:
        used |= _referenced_variables(ast.where_clause)
    for item in ast.return_items:
        used |= _referenced_variables(item.expression)
    unbound = sorted(used - bound)
    if unbound:
        raise QuerySemanticError(f"unbound variable(s): {', '.join(unbound)}")
    return ast
