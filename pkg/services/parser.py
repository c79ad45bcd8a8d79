"""Expression language and derivative-request grammar.

    stmt   := IDENT '=' expr ';'
    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' ['-'] INT)*
    atom   := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'

Names not bound by an earlier statement become input variables.
"""
from dataclasses import dataclass, field
import logging
import re

from errors import GraphError, ParseError, RequestError
from models.graph import Graph, NodeRef
from models.multi_index import MultiIndex, RequestSet, d, product

logger = logging.getLogger(__name__)

FUNCTIONS = frozenset({"exp", "log", "sqrt", "sin", "cos", "tan", "erfc", "cdf_n", "pdf_n"})

TOKEN_PATTERN = re.compile(r"""
    (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<space>[ \t\r]+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^=;()])
""", re.VERBOSE)

REQUEST_TERM = re.compile(r"\s*d\s*(?:<\s*(?P<order>\d+)\s*>)?\s*\(\s*(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*\)\s*")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        match = TOKEN_PATTERN.match(source, pos)
        if match is None:
            raise ParseError(f"Unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        if kind == "newline":
            line, line_start = line + 1, match.end()
        elif kind not in ("space", "comment"):
            tokens.append(Token(kind, match.group(), line, match.start() - line_start + 1))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass
class Program:
    """A parsed source: its graph, every named statement in order, and the input variables."""
    graph: Graph
    outputs: dict[str, NodeRef] = field(default_factory=dict)

    @property
    def variables(self) -> list[str]:
        return list(self.graph.variables)

    @property
    def last_output(self) -> str:
        return next(reversed(self.outputs))

    def output(self, name: str) -> NodeRef:
        ref = self.outputs.get(name)
        if ref is None:
            raise ParseError(f"No statement defines {name!r}")
        return ref


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0
        self.program = Program(Graph())

    @property
    def graph(self) -> Graph:
        return self.program.graph

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, kind: str, text: str | None = None) -> Token:
        token = self.peek()
        if token.kind != kind or (text is not None and token.text != text):
            wanted = repr(text) if text else kind
            found = repr(token.text) if token.text else "end of input"
            raise ParseError(f"Expected {wanted}, found {found}", token.line, token.column)
        return self.advance()

    def at(self, text: str) -> bool:
        token = self.peek()
        return token.kind == "op" and token.text == text

    def parse(self) -> Program:
        while self.peek().kind != "eof":
            self.statement()
        if not self.program.outputs:
            token = self.peek()
            raise ParseError("Source contains no statements", token.line, token.column)
        logger.debug("parsed %d statements into %d nodes", len(self.program.outputs), len(self.graph))
        return self.program

    def statement(self):
        name = self.expect("ident")
        if name.text in FUNCTIONS:
            raise ParseError(f"Cannot assign to function name {name.text!r}", name.line, name.column)
        if name.text in self.program.outputs:
            raise ParseError(f"{name.text!r} is already defined", name.line, name.column)
        if name.text in self.graph.variables:
            raise ParseError(f"{name.text!r} is already used as an input variable", name.line, name.column)
        self.expect("op", "=")
        value = self.expr()
        self.expect("op", ";")
        self.program.outputs[name.text] = value

    def expr(self) -> NodeRef:
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            right = self.term()
            left = self.graph.add(left, right) if op == "+" else self.graph.sub(left, right)
        return left

    def term(self) -> NodeRef:
        left = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            right = self.unary()
            left = self.graph.mul(left, right) if op == "*" else self.graph.div(left, right)
        return left

    def unary(self) -> NodeRef:
        if self.at("-"):
            self.advance()
            return self.graph.neg(self.unary())
        return self.power()

    def power(self) -> NodeRef:
        base = self.atom()
        while self.at("^"):
            caret = self.advance()
            sign = 1
            if self.at("-"):
                self.advance()
                sign = -1
            token = self.peek()
            if token.kind != "number" or not token.text.isdigit():
                raise ParseError("Exponent of '^' must be an integer literal", caret.line, caret.column)
            self.advance()
            base = self.graph.pow(base, sign * int(token.text))
        return base

    def atom(self) -> NodeRef:
        token = self.advance()
        if token.kind == "number":
            return self.graph.new_constant(float(token.text))
        if token.kind == "ident":
            if self.at("("):
                return self.call(token)
            if token.text in FUNCTIONS:
                raise ParseError(f"Function {token.text!r} needs an argument", token.line, token.column)
            bound = self.program.outputs.get(token.text)
            return bound if bound is not None else self.graph.new_variable(token.text)
        if token.kind == "op" and token.text == "(":
            inner = self.expr()
            self.expect("op", ")")
            return inner
        found = repr(token.text) if token.text else "end of input"
        raise ParseError(f"Unexpected {found}", token.line, token.column)

    def call(self, name: Token) -> NodeRef:
        if name.text not in FUNCTIONS:
            raise ParseError(f"Unknown function {name.text!r}", name.line, name.column)
        self.expect("op", "(")
        argument = self.expr()
        self.expect("op", ")")
        match name.text:
            case "cdf_n":
                return self.graph.cdf_n(argument)
            case "pdf_n":
                return self.graph.pdf_n(argument)
            case _:
                return self.graph.unary(name.text, argument)


def parse(source: str) -> Program:
    try:
        return Parser(source).parse()
    except GraphError as e:
        raise ParseError(str(e))


def parse_file(path: str) -> Program:
    try:
        with open(path, encoding="utf-8") as handle:
            source = handle.read()
    except OSError as e:
        raise ParseError(f"Cannot read {path}: {e.strerror}")
    return parse(source)


def parse_request(text: str) -> MultiIndex:
    """`d(V)*d(S)`, `d<2>(V)` and friends."""
    if not text or not text.strip():
        raise RequestError("Empty derivative request")
    result = None
    for part in text.split("*"):
        match = REQUEST_TERM.fullmatch(part)
        if match is None:
            raise RequestError(f"Malformed derivative request {text!r}")
        order = int(match["order"]) if match["order"] is not None else 1
        if order == 0:
            raise RequestError(f"Derivative order must be positive in {text!r}")
        term = d(match["name"], order)
        result = term if result is None else product(result, term)
    return result


def parse_requests(texts) -> RequestSet:
    return RequestSet.of(parse_request(text) for text in texts)
