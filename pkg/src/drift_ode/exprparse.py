"""Small math-expression language for coefficient functions.

Scenario configs and CLI flags specify rho(t), b(t), beta(t) and the
perturbation families alpha_i(t), beta_i(t) as text.  The grammar:

    expr    = term , { ("+" | "-") , term } ;
    term    = factor , { ("*" | "/") , factor } ;
    factor  = "-" , factor | power ;
    power   = atom , [ "^" , factor ] ;            (* right-associative *)
    atom    = NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" ;

Identifiers resolve at parse time: variables ``t`` and ``i``, constants
``pi`` and ``e``, functions sin cos tan exp log abs sqrt floor.  ``^`` is
the power operator and binds tighter than unary minus, so ``-2^2 == -4``
while ``2^-2 == 0.25``.  There is no implicit multiplication: ``2t`` is a
syntax error.

Evaluation is plain IEEE double precision and accepts numpy arrays in the
bindings, so parsed coefficients can be sampled on whole grids at once.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import (
    DomainError,
    ExpressionSyntaxError,
    UnboundVariable,
    UnknownIdentifier,
)

__all__ = [
    "Expr", "Num", "Var", "Const", "Call", "Neg", "BinOp",
    "parse", "evaluate", "to_source", "compile_expr",
]


# --- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Var, Const, Call, Neg, BinOp]

VARIABLES = ("t", "i")
CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan,
    "exp": np.exp, "abs": np.abs, "floor": np.floor,
}
# log and sqrt get explicit domain checks in evaluate()
_CHECKED_FUNCTIONS = ("log", "sqrt")

# (left binding power, binding power for the right operand)
_BINARY_BP = {
    "+": (10, 11), "-": (10, 11),
    "*": (20, 21), "/": (20, 21),
    "^": (40, 40),
}
_UNARY_BP = 31  # between "*" and "^": -2^2 parses as -(2^2)


# --- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


@dataclass(frozen=True)
class _Token:
    kind: str   # 'num' | 'ident' | one of + - * / ^ ( ) | 'end'
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            at = len(source) - len(stripped)
            raise ExpressionSyntaxError(
                f"syntax error at byte {at}: unexpected character {stripped[0]!r}",
                at, expected=("number", "identifier", "operator"))
        if m.lastgroup == "num":
            tokens.append(_Token("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(_Token("ident", m.group("ident"), m.start("ident")))
        else:
            op = m.group("op")
            tokens.append(_Token(op, op, m.start("op")))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


# --- parser (precedence climbing) ---------------------------------------------

class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.idx = 0

    def peek(self) -> _Token:
        return self.tokens[self.idx]

    def advance(self) -> _Token:
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def expect(self, kind: str, expected: tuple) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ExpressionSyntaxError(
                f"syntax error at byte {tok.pos}: expected "
                f"{', '.join(expected)}, found {tok.text or 'end of input'!r}",
                tok.pos, expected=expected)
        return self.advance()

    def parse_expr(self, min_bp: int) -> Expr:
        node = self.parse_prefix()
        while True:
            tok = self.peek()
            bp = _BINARY_BP.get(tok.kind)
            if bp is None or bp[0] < min_bp:
                return node
            self.advance()
            rhs = self.parse_expr(bp[1])
            node = BinOp(tok.kind, node, rhs)

    def parse_prefix(self) -> Expr:
        tok = self.peek()
        if tok.kind == "-":
            self.advance()
            return Neg(self.parse_expr(_UNARY_BP))
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExpressionSyntaxError(
                    f"syntax error at byte {tok.pos}: number literal out of range",
                    tok.pos, expected=("number",))
            return Num(value)
        if tok.kind == "(":
            inner = self.parse_expr(0)
            self.expect(")", ("')'",))
            return inner
        if tok.kind == "ident":
            name = tok.text
            if self.peek().kind == "(":
                if name not in FUNCTIONS and name not in _CHECKED_FUNCTIONS:
                    raise UnknownIdentifier(name, tok.pos)
                self.advance()
                arg = self.parse_expr(0)
                self.expect(")", ("')'",))
                return Call(name, arg)
            if name in VARIABLES:
                return Var(name)
            if name in CONSTANTS:
                return Const(name)
            raise UnknownIdentifier(name, tok.pos)
        raise ExpressionSyntaxError(
            f"syntax error at byte {tok.pos}: expected number, identifier, "
            f"'-' or '(', found {tok.text or 'end of input'!r}",
            tok.pos, expected=("number", "identifier", "'-'", "'('"))


def parse(source: str) -> Expr:
    """Parse expression text into an AST; whitespace-insensitive."""
    if not source or not source.strip():
        raise ExpressionSyntaxError("syntax error at byte 0: empty expression",
                                    0, expected=("expression",))
    parser = _Parser(source)
    node = parser.parse_expr(0)
    tok = parser.peek()
    if tok.kind != "end":
        raise ExpressionSyntaxError(
            f"syntax error at byte {tok.pos}: unexpected trailing "
            f"{tok.text!r}", tok.pos, expected=("operator", "end of input"))
    return node


# --- evaluation ---------------------------------------------------------------

def evaluate(expr: Expr, bindings: Mapping[str, object] | None = None):
    """Evaluate an AST under variable bindings (scalars or numpy arrays).

    Scalar bindings give a float back; array bindings give an array.
    """
    bindings = bindings or {}
    result = _eval(expr, bindings)
    if np.ndim(result) == 0:
        return float(result)
    return result


def _eval(expr: Expr, bindings: Mapping[str, object]):
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Const):
        return CONSTANTS[expr.name]
    if isinstance(expr, Var):
        try:
            return bindings[expr.name]
        except KeyError:
            raise UnboundVariable(f"variable '{expr.name}' is not bound") from None
    if isinstance(expr, Neg):
        return -_eval(expr.operand, bindings)
    if isinstance(expr, Call):
        arg = np.asarray(_eval(expr.arg, bindings), dtype=float)
        if expr.func == "log":
            if np.any(arg <= 0):
                raise DomainError("log of a nonpositive value")
            return np.log(arg)
        if expr.func == "sqrt":
            if np.any(arg < 0):
                raise DomainError("sqrt of a negative value")
            return np.sqrt(arg)
        return FUNCTIONS[expr.func](arg)
    # BinOp
    left = np.asarray(_eval(expr.left, bindings), dtype=float)
    right = np.asarray(_eval(expr.right, bindings), dtype=float)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    if expr.op == "/":
        if np.any(right == 0):
            raise DomainError("division by zero")
        return left / right
    # power
    neg_base = left < 0
    if np.any((left == 0) & (right < 0)):
        raise DomainError("zero raised to a negative power")
    if np.any(neg_base & (right != np.floor(right))):
        raise DomainError("negative base raised to a non-integer power")
    return np.power(left, right)


def compile_expr(expr: Expr | str, *names: str):
    """Turn an AST (or source text) into a plain callable of the given
    variables, e.g. ``compile_expr("sin(t)^2", "t")``."""
    node = parse(expr) if isinstance(expr, str) else expr
    if not names:
        names = ("t",)

    def fn(*args):
        return evaluate(node, dict(zip(names, args)))

    return fn


# --- printing -----------------------------------------------------------------

def _prec(expr: Expr) -> int:
    if isinstance(expr, BinOp):
        return _BINARY_BP[expr.op][0]
    if isinstance(expr, Neg):
        return 30
    return 100


def to_source(expr: Expr) -> str:
    """Render an AST back to text; reparsing gives a structurally equal tree."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, (Var, Const)):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    if isinstance(expr, Neg):
        inner = to_source(expr.operand)
        if _prec(expr.operand) < 30:
            inner = f"({inner})"
        return f"-{inner}"
    me = _BINARY_BP[expr.op][0]
    right_assoc = expr.op == "^"
    left = to_source(expr.left)
    if _prec(expr.left) < me or (_prec(expr.left) == me and right_assoc):
        left = f"({left})"
    right = to_source(expr.right)
    if _prec(expr.right) < me or (_prec(expr.right) == me and not right_assoc):
        right = f"({right})"
    return f"{left}{expr.op}{right}"
