"""A small arithmetic expression language for command-line input.

Expressions use variables ``x1..xp``, numeric literals, ``+ - * / ^``,
unary minus and the functions ``exp sin cos log sqrt``. ``^`` binds tighter
than unary minus (``-x1^2`` is ``-(x1^2)``) and is right-associative; its
exponent must fold to an integer constant. Constant subtrees are folded
at parse time, so printing and re-parsing gives back the same tree.

Error positions are byte offsets into the UTF-8 source.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

FUNCTIONS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "log": np.log, "sqrt": np.sqrt}
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    pass


class DomainError(ArithmeticError):
    """Evaluation left the domain of an operation; ``expr`` is the culprit."""

    def __init__(self, message: str, expr: "Expr"):
        super().__init__(f"{message} in {to_source(expr)}")
        self.expr = expr


@dataclass(frozen=True)
class Num:
    value: Fraction
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    index: int  # 1-based
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: "Expr"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expr"
    offset: int = field(default=0, compare=False)


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    byte_at = lambda i: len(src[:i].encode("utf-8"))
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m:
            j = pos
            while src[j].isspace():
                j += 1
            raise ParseError(f"unexpected character {src[j]!r}", byte_at(j))
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), byte_at(m.start(kind))))
        pos = m.end()
    toks.append(_Tok("end", "", len(src.encode("utf-8"))))
    return toks


class _Parser:
    def __init__(self, src: str, p: int):
        self.toks = _tokenize(src)
        self.i = 0
        self.p = p

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.take()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.offset)
        return tok

    def expr(self, min_prec: int = 1) -> Expr:
        left = self.unary()
        while True:
            tok = self.peek()
            prec = _PREC.get(tok.text) if tok.kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.take()
            right = self.expr(prec + 1)
            left = _fold_bin(tok.text, left, right, tok.offset)

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text in "+-":
            self.take()
            arg = self.unary()
            if tok.text == "+":
                return arg
            if isinstance(arg, Num):
                return Num(-arg.value, tok.offset)
            return Neg(arg, tok.offset)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok.text != "^":
            return base
        self.take()
        at = self.peek().offset
        exp = self.unary()  # right-associative, allows x^-1
        if not (isinstance(exp, Num) and exp.value.denominator == 1):
            raise ParseError("exponent must be an integer constant", at)
        k = int(exp.value)
        if isinstance(base, Num) and not (base.value == 0 and k < 0):
            return Num(base.value**k, base.offset)
        return Pow(base, k, tok.offset)

    def atom(self) -> Expr:
        tok = self.take()
        if tok.kind == "num":
            return Num(Fraction(tok.text), tok.offset)
        if tok.kind == "name":
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg, tok.offset)
            m = re.fullmatch(r"x([1-9]\d*)", tok.text)
            if m:
                idx = int(m.group(1))
                if idx > self.p:
                    raise UnknownIdentifierError(f"variable {tok.text} exceeds dimension {self.p}", tok.offset)
                return Var(idx, tok.offset)
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.offset)
        if tok.text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.offset)


def _fold_bin(op: str, a: Expr, b: Expr, offset: int) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num) and not (op == "/" and b.value == 0):
        x, y = a.value, b.value
        val = {"+": lambda: x + y, "-": lambda: x - y, "*": lambda: x * y, "/": lambda: x / y}[op]()
        return Num(val, a.offset)
    return BinOp(op, a, b, offset)


def parse(src: str, p: int) -> Expr:
    """Parse ``src`` over the variables ``x1..xp``."""
    parser = _Parser(src, p)
    tree = parser.expr()
    tok = parser.peek()
    if tok.kind != "end":
        raise ParseError(f"unexpected {tok.text!r}", tok.offset)
    return tree


# printing


def _prec_of(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    if isinstance(e, Num) and (e.value < 0 or e.value.denominator != 1):
        return 0  # always parenthesized
    return 5


def _num_text(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def to_source(e: Expr) -> str:
    """Source text that parses back to ``e``."""
    if isinstance(e, Num):
        s = _num_text(e.value)
        return s
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Call):
        return f"{e.name}({to_source(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, 3)
    if isinstance(e, Pow):
        k = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        return _wrap(e.base, 5) + "^" + k
    prec = _PREC[e.op]
    # left-associative: the right operand needs strictly higher precedence
    return f"{_wrap(e.left, prec)} {e.op} {_wrap(e.right, prec + 1)}"


def _wrap(e: Expr, need: int) -> str:
    s = to_source(e)
    return s if _prec_of(e) >= need else f"({s})"


# evaluation


def variables(e: Expr) -> set[int]:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Num):
        return set()
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.arg)


def is_polynomial(e: Expr) -> bool:
    """No functions, no negative powers, and division only by constants."""
    if isinstance(e, (Num, Var)):
        return True
    if isinstance(e, Call):
        return False
    if isinstance(e, Neg):
        return is_polynomial(e.arg)
    if isinstance(e, Pow):
        return e.exponent >= 0 and is_polynomial(e.base)
    if e.op == "/" and not isinstance(e.right, Num):
        return False
    return is_polynomial(e.left) and is_polynomial(e.right)


def evaluate(e: Expr, point: Sequence) -> object:
    """Floating-point value at ``point`` (floats or broadcastable arrays)."""
    with np.errstate(all="ignore"):
        return _eval(e, point)


def _any(mask) -> bool:
    return bool(np.any(mask))


def _eval(e: Expr, x: Sequence):
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Var):
        return x[e.index - 1]
    if isinstance(e, Neg):
        return -_eval(e.arg, x)
    if isinstance(e, Pow):
        b = _eval(e.base, x)
        if e.exponent < 0 and _any(np.asarray(b) == 0):
            raise DomainError("zero raised to a negative power", e)
        if e.exponent < 0:
            return 1.0 / b ** (-e.exponent)
        return b**e.exponent
    if isinstance(e, Call):
        a = _eval(e.arg, x)
        if e.name == "log" and _any(np.asarray(a) <= 0):
            raise DomainError("log of a nonpositive value", e)
        if e.name == "sqrt" and _any(np.asarray(a) < 0):
            raise DomainError("sqrt of a negative value", e)
        out = FUNCTIONS[e.name](a)
        if not np.all(np.isfinite(out)):
            raise DomainError(f"{e.name} overflowed", e)
        return out
    a = _eval(e.left, x)
    b = _eval(e.right, x)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if _any(np.asarray(b) == 0):
        raise DomainError("division by zero", e)
    return a / b


def evaluate_exact(e: Expr, point: Sequence) -> Fraction:
    """Rational value for function-free expressions."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return Fraction(point[e.index - 1])
    if isinstance(e, Neg):
        return -evaluate_exact(e.arg, point)
    if isinstance(e, Pow):
        b = evaluate_exact(e.base, point)
        if b == 0 and e.exponent < 0:
            raise DomainError("zero raised to a negative power", e)
        return b**e.exponent
    if isinstance(e, Call):
        raise TypeError(f"{e.name} has no exact evaluation")
    a = evaluate_exact(e.left, point)
    b = evaluate_exact(e.right, point)
    if e.op == "/":
        if b == 0:
            raise DomainError("division by zero", e)
        return a / b
    return a + b if e.op == "+" else a - b if e.op == "-" else a * b


def _has_call(e: Expr) -> bool:
    if isinstance(e, Call):
        return True
    if isinstance(e, (Num, Var)):
        return False
    if isinstance(e, BinOp):
        return _has_call(e.left) or _has_call(e.right)
    return _has_call(e.arg if isinstance(e, Neg) else e.base)


def to_callable(e: Expr) -> Callable:
    """``f(x1, ..., xp)``; rational arguments take the exact path when possible."""
    exact_ok = not _has_call(e)

    def f(*xs):
        if exact_ok and xs and all(isinstance(v, (int, Fraction)) for v in xs):
            return evaluate_exact(e, xs)
        if any(isinstance(v, Fraction) for v in xs):
            xs = tuple(float(v) if isinstance(v, Fraction) else v for v in xs)
        out = evaluate(e, xs)
        # constants must still broadcast against array inputs
        if np.ndim(out) == 0 and any(np.ndim(v) for v in xs):
            return np.broadcast_to(float(out), np.broadcast_shapes(*(np.shape(v) for v in xs)))
        return out

    f.expr = e
    return f
