"""
Reading rational functions, forms, matrices and problem files.

Grammar for rational expressions (recursive descent, one method per rule):
    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('+' | '-') unary | power
    power := atom ('^' '-'? INT)?
    atom  := INT | IDENT | '(' expr ')'
A negative exponent is only accepted on a bare variable. Positions in errors are 1-based.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from csrr_app.errors import DivisionByZeroError, EngineError, ParseError, SchemaError
from csrr_app.exterior import Form, GenUniverse
from csrr_app.logconn_p1 import FIBER, LogConnectionP1, Point, p1_universe
from csrr_app.matform import MatForm
from csrr_app.numeric_oracle import NumericConfig
from csrr_app.pushforward import FiniteAlgebra
from csrr_app.ratfun import RatFun, VarUniverse

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()])")
_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    text = text.replace("−", "-")
    tokens = []
    position, line, line_start = 0, 1, 0
    while position < len(text):
        char = text[position]
        if char == "\n":
            line += 1
            position += 1
            line_start = position
            continue
        if char.isspace():
            position += 1
            continue
        match = _TOKEN.match(text, position)
        if not match:
            raise ParseError(f"unexpected character {char!r}", line, position - line_start + 1)
        tokens.append(Token(match.lastgroup, match.group(), line, position - line_start + 1))
        position = match.end()
    tokens.append(Token("end", "", line, position - line_start + 1))
    return tokens


class _ExpressionParser:
    def __init__(self, text: str, universe: VarUniverse):
        self.tokens = tokenize(text)
        self.index = 0
        self.universe = universe

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def fail(self, message: str, token: Token | None = None):
        token = token or self.current
        raise ParseError(message, token.line, token.column)

    def parse(self) -> RatFun:
        value = self.expression()
        if self.current.kind != "end":
            self.fail(f"unexpected {self.current.text!r}")
        return value

    def expression(self) -> RatFun:
        value = self.term()
        while self.current.text in ("+", "-") and self.current.kind == "op":
            sign = self.advance().text
            right = self.term()
            value = value + right if sign == "+" else value - right
        return value

    def term(self) -> RatFun:
        value = self.unary()
        while self.current.text in ("*", "/") and self.current.kind == "op":
            operator = self.advance()
            right = self.unary()
            if operator.text == "*":
                value = value * right
            else:
                try:
                    value = value / right
                except DivisionByZeroError:
                    self.fail("division by zero", operator)
        return value

    def unary(self) -> RatFun:
        if self.current.kind == "op" and self.current.text in ("+", "-"):
            sign = self.advance().text
            value = self.unary()
            return -value if sign == "-" else value
        return self.power()

    def power(self) -> RatFun:
        start = self.current
        base = self.atom()
        if not (self.current.kind == "op" and self.current.text == "^"):
            return base
        self.advance()
        negative = False
        if self.current.kind == "op" and self.current.text == "-":
            self.advance()
            negative = True
        if self.current.kind != "int":
            self.fail("expected an integer exponent")
        exponent = int(self.advance().text)
        if negative:
            if start.kind != "ident":
                self.fail("negative exponent on a compound base", start)
            return base ** (-exponent)
        return base**exponent

    def atom(self) -> RatFun:
        token = self.current
        if token.kind == "int":
            self.advance()
            return self.universe.const(int(token.text))
        if token.kind == "ident":
            self.advance()
            if token.text not in self.universe:
                self.fail(f"unknown variable {token.text!r}", token)
            return self.universe.var(token.text)
        if token.kind == "op" and token.text == "(":
            self.advance()
            value = self.expression()
            if not (self.current.kind == "op" and self.current.text == ")"):
                self.fail("expected ')'")
            self.advance()
            return value
        if token.kind == "end":
            self.fail("unexpected end of input")
        self.fail(f"unexpected {token.text!r}")


def parse_ratfun(text: str, universe: VarUniverse) -> RatFun:
    return _ExpressionParser(text, universe).parse()


def parse_form(terms: Any, universe: GenUniverse) -> Form:
    """A form is "0", a rational-expression string (0-form) or a list of {"coeff", "gens"} terms."""
    if isinstance(terms, str):
        return Form.scalar(universe, parse_ratfun(terms, universe.variables))
    if isinstance(terms, (int, float)) and terms == 0:
        return Form.zero(universe)
    if not isinstance(terms, list):
        raise SchemaError(["a form is a list of {coeff, gens} terms"])
    parsed = []
    for term in terms:
        if not isinstance(term, Mapping) or "coeff" not in term:
            raise SchemaError(["each form term needs a 'coeff'"])
        gens = term.get("gens", [])
        if not isinstance(gens, list) or not all(isinstance(g, str) for g in gens):
            raise SchemaError(["'gens' must be a list of generator names"])
        parsed.append((parse_ratfun(str(term["coeff"]), universe.variables), gens))
    return Form.from_terms(universe, parsed)


def parse_matrix(rows: Any, universe: GenUniverse) -> MatForm:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise SchemaError(["a matrix is a non-empty list of rows"])
    return MatForm(universe, [[parse_form(entry, universe) for entry in row] for row in rows])


@dataclass
class ProblemFile:
    connection: LogConnectionP1 | None = None
    pushforward: FiniteAlgebra | None = None
    numeric: NumericConfig = field(default_factory=NumericConfig)


class _ProblemReader:
    """Walks a decoded problem document, collecting every schema error before giving up."""

    def __init__(self, document: Any):
        self.document = document
        self.errors: list[str] = []

    def error(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}")

    def names(self, value: Any, path: str) -> list[str]:
        if value is None:
            return []
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            self.error(path, "expected a list of variable names")
            return []
        bad = [v for v in value if not _IDENTIFIER.match(v)]
        if bad:
            self.error(path, f"invalid names {bad}")
            return []
        return value

    def guarded(self, path: str, build):
        try:
            return build()
        except SchemaError as exc:
            for message in exc.errors:
                self.error(path, message)
        except (ParseError, EngineError, ValueError) as exc:
            self.error(path, str(exc))
        return None

    def read(self) -> ProblemFile:
        if not isinstance(self.document, Mapping):
            raise SchemaError(["problem: expected a JSON object"])
        unknown = set(self.document) - {"connection", "pushforward", "numeric", "parameters", "variables"}
        for key in sorted(unknown):
            self.error(key, "unknown top-level key")
        parameters = self.names(self.document.get("parameters"), "parameters")
        variables = self.names(self.document.get("variables"), "variables")
        problem = ProblemFile()
        if "numeric" in self.document:
            problem.numeric = self.numeric(self.document["numeric"]) or problem.numeric
        if "connection" in self.document:
            problem.connection = self.connection(self.document["connection"], parameters, variables)
        if "pushforward" in self.document:
            problem.pushforward = self.pushforward(self.document["pushforward"])
        if self.errors:
            raise SchemaError(self.errors)
        return problem

    def numeric(self, block: Any) -> NumericConfig | None:
        if not isinstance(block, Mapping):
            self.error("numeric", "expected an object")
            return None
        config = NumericConfig()
        overrides: dict[str, Any] = {}
        for key, kind in (("seed", int), ("samples", int), ("tol", float)):
            if key in block:
                if not isinstance(block[key], (int, float)) or isinstance(block[key], bool):
                    self.error(f"numeric.{key}", "expected a number")
                else:
                    overrides[key] = kind(block[key])
        if "range" in block:
            value = block["range"]
            if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value)) or value[0] > value[1]:
                self.error("numeric.range", "expected [low, high] integers")
            else:
                overrides["sample_range"] = (value[0], value[1])
        return NumericConfig(**{**config.__dict__, **overrides})

    def points(self, value: Any, delta: int) -> list[Point] | None:
        if not isinstance(value, list) or len(value) != delta:
            self.error("connection.points", f"expected {delta} points")
            return None
        points = []
        for i, entry in enumerate(value):
            path = f"connection.points[{i}]"
            if isinstance(entry, Mapping) and isinstance(entry.get("symbol"), str) and "value" not in entry:
                if not _IDENTIFIER.match(entry["symbol"]) or entry["symbol"] == FIBER:
                    self.error(path, f"invalid point symbol {entry['symbol']!r}")
                    continue
                points.append(Point(symbol=entry["symbol"]))
            elif isinstance(entry, Mapping) and "value" in entry and "symbol" not in entry:
                try:
                    points.append(Point(value=Fraction(str(entry["value"]))))
                except (ValueError, ZeroDivisionError):
                    self.error(path, f"invalid rational {entry['value']!r}")
            else:
                self.error(path, "expected {\"symbol\": name} or {\"value\": rational}")
        symbols = [p.symbol for p in points if p.symbol is not None]
        values = [p.value for p in points if p.value is not None]
        clashes = sorted({s for s in symbols if symbols.count(s) > 1}) + sorted(
            {str(v) for v in values if values.count(v) > 1}
        )
        if clashes:
            self.error("connection.points", f"duplicate points {clashes}")
        return points if len(points) == delta and not clashes else None

    def connection(self, block: Any, parameters: list[str], variables: list[str]) -> LogConnectionP1 | None:
        if not isinstance(block, Mapping):
            self.error("connection", "expected an object")
            return None
        rank, delta = block.get("N"), block.get("delta")
        if not isinstance(rank, int) or isinstance(rank, bool) or rank < 1:
            self.error("connection.N", "expected a positive integer")
            return None
        if not isinstance(delta, int) or isinstance(delta, bool) or delta < 1:
            self.error("connection.delta", "expected a positive integer")
            return None
        parameters = parameters + self.names(block.get("parameters"), "connection.parameters")
        points = self.points(block.get("points"), delta)
        if points is None:
            return None
        symbols = {p.symbol for p in points if p.symbol}
        clash = sorted(symbols.intersection(parameters) | symbols.intersection(variables))
        if clash or FIBER in parameters or FIBER in variables:
            self.error("connection", f"variable names clash: {clash or [FIBER]}")
            return None
        universe = self.guarded("connection", lambda: p1_universe(points, parameters, variables))
        if universe is None:
            return None
        residues_block = block.get("residues")
        if not isinstance(residues_block, list) or len(residues_block) != delta:
            self.error("connection.residues", f"expected {delta} matrices")
            return None
        residues = []
        for nu, rows in enumerate(residues_block):
            matrix = self.guarded(f"connection.residues[{nu}]", lambda rows=rows: parse_matrix(rows, universe))
            if matrix is not None and matrix.shape != (rank, rank):
                self.error(f"connection.residues[{nu}]", f"expected a {rank}x{rank} matrix")
                matrix = None
            residues.append(matrix)
        phi = None
        if "phi" in block:
            phi = self.guarded("connection.phi", lambda: parse_matrix(block["phi"], universe))
            if phi is not None and phi.shape != (rank, rank):
                self.error("connection.phi", f"expected a {rank}x{rank} matrix")
                return None
            if phi is None:
                return None
        if any(r is None for r in residues):
            return None
        return self.guarded("connection", lambda: LogConnectionP1(universe, points, residues, phi))

    def pushforward(self, block: Any) -> FiniteAlgebra | None:
        if not isinstance(block, Mapping):
            self.error("pushforward", "expected an object")
            return None
        names = self.names(block.get("variables"), "pushforward.variables")
        variable = block.get("variable", "t")
        if not names:
            self.error("pushforward.variables", "at least one base variable is required")
            return None
        if not isinstance(variable, str) or not _IDENTIFIER.match(variable) or variable in names:
            self.error("pushforward.variable", "expected a fresh variable name")
            return None
        base = GenUniverse(VarUniverse.build(base=names))
        with_t = VarUniverse.build(base=names, parameters=[variable])
        if not isinstance(block.get("phi"), str):
            self.error("pushforward.phi", "expected a polynomial in the algebra variable")
            return None

        def coefficients():
            phi = parse_ratfun(block["phi"], with_t)
            return [c.transfer(base.variables) for c in phi.coefficients_in(variable)]

        phi = self.guarded("pushforward.phi", coefficients)
        if phi is None:
            return None
        connection = []
        for l, rows in enumerate(block.get("connection", [])):
            matrix = self.guarded(f"pushforward.connection[{l}]", lambda rows=rows: parse_matrix(rows, base))
            if matrix is None:
                return None
            connection.append(matrix)
        roots = None
        if "roots" in block:
            if not isinstance(block["roots"], list) or not all(isinstance(r, str) for r in block["roots"]):
                self.error("pushforward.roots", "expected a list of expressions")
                return None
            roots = self.guarded(
                "pushforward.roots",
                lambda: [parse_ratfun(r, base.variables) for r in block["roots"]],
            )
            if roots is None:
                return None
        rank = block.get("N", 1)
        return self.guarded(
            "pushforward",
            lambda: FiniteAlgebra(base, phi, connection or None, roots, rank),
        )


def parse_problem(document: str | Mapping) -> ProblemFile:
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    problem = _ProblemReader(document).read()
    logger.debug("parsed problem: connection=%s pushforward=%s", problem.connection, problem.pushforward)
    return problem


def load_problem(path: str | Path) -> ProblemFile:
    return parse_problem(Path(path).read_text(encoding="utf-8"))
