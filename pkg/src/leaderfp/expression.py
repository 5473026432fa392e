"""Parser and vectorised evaluator for the piecewise expression grammar.

Grammar (see GRAMMAR.md at the repository root)::

    expr     := 'if' compare 'then' expr 'else' expr | additive
    compare  := additive ('<' | '<=' | '=' | '>=' | '>') additive
    additive := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ('^' unary)?
    atom     := NUMBER | NAME | FUNC '(' expr (',' expr)* ')' | '(' expr ')'
              | 'if' compare 'then' expr 'else' expr

Evaluation runs on numpy arrays, so one call evaluates an expression on a
whole grid. Piecewise blocks are evaluated with ``numpy.where``: both branches
are computed and the guard selects, which means a branch that is undefined
where it is not selected (``1/t`` behind ``if t > 0``) is harmless.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import ArityError, ExpressionSyntaxError, UnknownIdentifierError

COMPARISONS = {"<": "<", "<=": "<=", "≤": "<=", "=": "=", "==": "=", ">=": ">=", "≥": ">=", ">": ">"}

# name -> (min args, max args or None for variadic)
FUNCTIONS = {"min": (2, None), "max": (2, None), "abs": (1, 1)}

KEYWORDS = {"if", "then", "else"}

_VAR_PATTERN = re.compile(r"^(t|n|k|x[1-9][0-9]*)$")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class IfElse:
    cond: Compare
    then: "Node"
    orelse: "Node"


Node = Union[Num, Var, Neg, BinOp, Call, IfElse]


# --------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|==|≤|≥|[-+*/^(),<>=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num | name | op | eof
    text: str
    pos: int


def tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(source)))
    return tokens


# --------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, source: str, variables: frozenset[str] | None):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0
        self.variables = variables

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "eof":
            raise ExpressionSyntaxError(
                f"unexpected {self._describe(self.tok)}", self.tok.pos, (repr(text),))
        return self.advance()

    @staticmethod
    def _describe(tok: _Token) -> str:
        return "end of input" if tok.kind == "eof" else f"token {tok.text!r}"

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "eof":
            raise ExpressionSyntaxError(
                f"unexpected {self._describe(self.tok)}", self.tok.pos,
                ("operator", "end of input"))
        return node

    def expr(self) -> Node:
        if self.tok.kind == "name" and self.tok.text == "if":
            return self.ifelse()
        return self.additive()

    def ifelse(self) -> Node:
        self.expect("if")
        cond = self.compare()
        self.expect("then")
        then = self.expr()
        self.expect("else")
        orelse = self.expr()
        return IfElse(cond, then, orelse)

    def compare(self) -> Compare:
        left = self.additive()
        if self.tok.kind == "op" and self.tok.text in COMPARISONS:
            op = COMPARISONS[self.advance().text]
            right = self.additive()
            return Compare(op, left, right)
        raise ExpressionSyntaxError(
            f"unexpected {self._describe(self.tok)}", self.tok.pos,
            ("<", "<=", "=", ">=", ">"))

    def additive(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            if tok.text == "if":
                return self.ifelse()
            if tok.text in KEYWORDS:
                raise ExpressionSyntaxError(f"unexpected keyword {tok.text!r}", tok.pos,
                                            ("number", "name", "("))
            if tok.text in FUNCTIONS:
                return self.call()
            if self.tokens[self.i + 1].text == "(":
                raise UnknownIdentifierError(f"unknown function {tok.text!r}", tok.pos,
                                             tuple(sorted(FUNCTIONS)))
            self._check_variable(tok)
            self.advance()
            return Var(tok.text)
        raise ExpressionSyntaxError(f"unexpected {self._describe(tok)}", tok.pos,
                                    ("number", "name", "("))

    def _check_variable(self, tok: _Token) -> None:
        allowed = self.variables
        ok = tok.text in allowed if allowed is not None else bool(_VAR_PATTERN.match(tok.text))
        if not ok:
            expected = tuple(sorted(allowed)) if allowed is not None else ("t", "n", "k", "x1..xd")
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.pos, expected)

    def call(self) -> Node:
        name_tok = self.advance()
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        lo, hi = FUNCTIONS[name_tok.text]
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = str(lo) if hi == lo else (f"at least {lo}" if hi is None else f"{lo}..{hi}")
            raise ArityError(f"{name_tok.text} takes {want} argument(s), got {len(args)}",
                             name_tok.pos)
        return Call(name_tok.text, tuple(args))


@dataclass(frozen=True)
class Expression:
    """A parsed expression together with its source text."""

    source: str
    root: Node

    @property
    def variables(self) -> frozenset[str]:
        return free_variables(self.root)

    def __call__(self, **env):
        return evaluate(self.root, env)

    def to_source(self) -> str:
        return to_source(self.root)


def parse_expression(source: str, variables: Iterable[str] | None = None) -> Expression:
    """Parse ``source`` into an :class:`Expression`.

    ``variables`` restricts the identifiers that may appear; by default any of
    ``t``, ``n``, ``k`` and ``x1``, ``x2``, ... are accepted.

    >>> parse_expression("t/2").root
    BinOp(op='/', left=Var(name='t'), right=Num(value=2.0))
    """
    if not isinstance(source, str) or not source.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    allowed = frozenset(variables) if variables is not None else None
    return Expression(source, _Parser(source, allowed).parse())


def free_variables(node: Node) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, (BinOp, Compare)):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Call):
        return frozenset().union(*(free_variables(a) for a in node.args))
    if isinstance(node, IfElse):
        return free_variables(node.cond) | free_variables(node.then) | free_variables(node.orelse)
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# evaluation

_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.true_divide,
    "^": np.power,
}

_COMPARE = {
    "<": np.less,
    "<=": np.less_equal,
    "=": np.equal,
    ">=": np.greater_equal,
    ">": np.greater,
}


def _eval(node: Node, env: dict):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnknownIdentifierError(f"variable {node.name!r} has no value") from None
    if isinstance(node, BinOp):
        return _BINARY[node.op](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, Neg):
        return np.negative(_eval(node.operand, env))
    if isinstance(node, IfElse):
        c = node.cond
        mask = _COMPARE[c.op](_eval(c.left, env), _eval(c.right, env))
        return np.where(mask, _eval(node.then, env), _eval(node.orelse, env))
    if isinstance(node, Call):
        args = [_eval(a, env) for a in node.args]
        if node.func == "abs":
            return np.abs(args[0])
        fn = np.minimum if node.func == "min" else np.maximum
        out = args[0]
        for a in args[1:]:
            out = fn(out, a)
        return out
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Node, env: dict):
    """Evaluate ``node`` with numpy broadcasting over the values in ``env``.

    Returns a float array (0-d for scalar inputs). No finiteness check is done
    here; callers enforce their own contracts on the result.
    """
    with np.errstate(all="ignore"):
        out = _eval(node, {k: np.asarray(v, dtype=float) for k, v in env.items()})
    return np.asarray(out, dtype=float)


# --------------------------------------------------------------------------
# serialisation


def _num_source(v: float) -> str:
    text = repr(float(v))
    if text in ("inf", "nan", "-inf"):
        raise ValueError(f"cannot serialise non-finite literal {text}")
    return text


def to_source(node: Node) -> str:
    """Canonical, fully parenthesised source that re-parses to ``node``."""
    if isinstance(node, Num):
        if node.value < 0 or (node.value == 0 and np.signbit(node.value)):
            return f"(-{_num_source(-node.value)})"
        return _num_source(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_source(a) for a in node.args)})"
    if isinstance(node, IfElse):
        c = node.cond
        return (f"(if {to_source(c.left)} {c.op} {to_source(c.right)} "
                f"then {to_source(node.then)} else {to_source(node.orelse)})")
    raise TypeError(f"not an expression node: {node!r}")
