"""Declarative right-hand sides and functionals.

Two small expression languages share one recursive-descent parser:

* scalar expressions in the variables ``t, x, y`` (the right-hand sides), and
* functional expressions over the atoms ``x(c)``, ``y(c)``, ``int(x)``,
  ``int(y)``, ``supnorm(x)``, ``supnorm(y)`` (the nonlocal conditions).

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := number | name | name "(" expr ("," expr)* ")" | "(" expr ")"

so ``^`` binds tighter than unary minus and is right associative.  Names that
are neither variables nor functions are parameters, bound at evaluation time.

Parsed trees are compiled once into closures, with a ``math`` backend for
scalars and a ``numpy`` backend for arrays of nodes.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

from .errors import (
    AbscissaOutOfRange,
    DivisionByZero,
    DomainError,
    ExpressionSyntaxError,
    FreeTimeVariable,
    GridMismatch,
    UnknownIdentifier,
)
from .space import GridFunction

SCALAR_VARIABLES = ("t", "x", "y")
FUNCTIONS = {
    "sin": (1, 1),
    "cos": (1, 1),
    "exp": (1, 1),
    "abs": (1, 1),
    "sqrt": (1, 1),
    "min": (1, None),
    "max": (1, None),
}
FUNCTIONAL_OPERATORS = ("int", "supnorm")
FUNCTION_SYMBOLS = ("x", "y")


# -----------------------------------------------------------------------------
# AST
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True)
class PointEval:
    var: str
    at: float


@dataclass(frozen=True)
class Integral:
    var: str


@dataclass(frozen=True)
class SupNorm:
    var: str


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_source(node) -> str:
    """Render a tree as text that parses back to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        if isinstance(node.operand, BinOp):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        prec = _PRECEDENCE[node.op]
        left, right = to_source(node.left), to_source(node.right)
        if node.op == "^":
            # left operand of ^ must be an atom; right operand is a factor
            if not _is_atomic(node.left):
                left = f"({left})"
            if isinstance(node.right, BinOp) and node.right.op != "^":
                right = f"({right})"
        else:
            if isinstance(node.left, BinOp) and _PRECEDENCE[node.left.op] < prec:
                left = f"({left})"
            if isinstance(node.right, BinOp) and _PRECEDENCE[node.right.op] <= prec:
                right = f"({right})"
        return f"{left} {node.op} {right}"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_source(a) for a in node.args)})"
    if isinstance(node, PointEval):
        return f"{node.var}({node.at!r})"
    if isinstance(node, Integral):
        return f"int({node.var})"
    if isinstance(node, SupNorm):
        return f"supnorm({node.var})"
    raise TypeError(f"not an expression node: {node!r}")


def _is_atomic(node) -> bool:
    return isinstance(node, (Num, Var, Param, Call, PointEval, Integral, SupNorm))


def walk(node):
    yield node
    if isinstance(node, Neg):
        yield from walk(node.operand)
    elif isinstance(node, BinOp):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Call):
        for arg in node.args:
            yield from walk(arg)


# -----------------------------------------------------------------------------
# tokenizer and parser
# -----------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),−])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    offset: int  # byte offset into the UTF-8 encoded source


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExpressionSyntaxError(
                f"unexpected character {src[pos]!r}", _byte_offset(src, pos), ("number", "name", "operator")
            )
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            if text == "−":
                text = "-"
            tokens.append(_Token(kind, text, _byte_offset(src, pos)))
        pos = m.end()
    tokens.append(_Token("end", "", _byte_offset(src, len(src))))
    return tokens


def _byte_offset(src: str, pos: int) -> int:
    return len(src[:pos].encode("utf-8"))


_ATOM_START = ("number", "name", "(", "-")


class _Parser:
    def __init__(self, src, *, functional, variables, params):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0
        self.functional = functional
        self.variables = tuple(variables)
        self.params = None if params is None else set(params)

    # token helpers
    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def _is(self, text):
        return self.tok.kind == "op" and self.tok.text == text

    def _advance(self):
        t = self.tok
        self.pos += 1
        return t

    def _expect(self, text):
        if not self._is(text):
            self._fail(f"expected {text!r}", (text,))
        return self._advance()

    def _fail(self, message, expected):
        got = self.tok.text or "end of input"
        raise ExpressionSyntaxError(f"{message}, got {got!r}", self.tok.offset, expected)

    # grammar
    def parse(self):
        if self.tok.kind == "end":
            self._fail("empty expression", _ATOM_START)
        node = self.expr()
        if self.tok.kind != "end":
            self._fail("unexpected token", ("+", "-", "*", "/", "^", "end of input"))
        return node

    def expr(self):
        node = self.term()
        while self._is("+") or self._is("-"):
            op = self._advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self._is("*") or self._is("/"):
            op = self._advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self._is("-"):
            self._advance()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self._is("^"):
            self._advance()
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "number":
            self._advance()
            return Num(float(tok.text))
        if self._is("("):
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        if tok.kind == "name":
            return self._named_atom()
        self._fail("expected an operand", _ATOM_START)

    def _named_atom(self):
        tok = self._advance()
        name = tok.text
        followed_by_paren = self._is("(")
        if self.functional and name in FUNCTION_SYMBOLS:
            if not followed_by_paren:
                raise ExpressionSyntaxError(
                    f"function symbol {name!r} must be evaluated at a point, as in {name}(0.5)",
                    self.tok.offset, ("(",),
                )
            return self._point_eval(name)
        if self.functional and name in FUNCTIONAL_OPERATORS:
            self._expect("(")
            arg = self.tok
            if arg.kind != "name" or arg.text not in FUNCTION_SYMBOLS:
                self._fail(f"{name}() takes a bare x or y", FUNCTION_SYMBOLS)
            self._advance()
            self._expect(")")
            return Integral(arg.text) if name == "int" else SupNorm(arg.text)
        if name in FUNCTIONS:
            if not followed_by_paren:
                raise ExpressionSyntaxError(f"function {name!r} needs arguments", self.tok.offset, ("(",))
            return self._call(name, tok)
        if followed_by_paren:
            raise UnknownIdentifier(f"unknown function {name!r} at offset {tok.offset}")
        if self.functional and name == "t":
            raise FreeTimeVariable(f"functional refers to the time variable t at offset {tok.offset}")
        if not self.functional and name in self.variables:
            return Var(name)
        if self.params is not None and name not in self.params:
            raise UnknownIdentifier(f"unknown identifier {name!r} at offset {tok.offset}")
        return Param(name)

    def _call(self, name, tok):
        self._expect("(")
        args = [self.expr()]
        while self._is(","):
            self._advance()
            args.append(self.expr())
        self._expect(")")
        lo, hi = FUNCTIONS[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ExpressionSyntaxError(
                f"{name}() takes {lo if hi == lo else f'at least {lo}'} argument(s), got {len(args)}",
                tok.offset,
            )
        return Call(name, tuple(args))

    def _point_eval(self, name):
        self._expect("(")
        start = self.tok.offset
        sub = self.expr()
        self._expect(")")
        if any(isinstance(n, (Var, Param, PointEval, Integral, SupNorm)) for n in walk(sub)):
            raise ExpressionSyntaxError(f"abscissa of {name}(...) must be a numeric constant", start)
        c = _compile_scalar(sub)({})
        if not 0.0 <= c <= 1.0:
            raise AbscissaOutOfRange(f"{name}({c!r}): abscissa outside [0, 1]")
        return PointEval(name, float(c))


# -----------------------------------------------------------------------------
# compilation to closures
# -----------------------------------------------------------------------------

def _lookup(name):
    def get(env):
        try:
            return env[name]
        except KeyError:
            raise UnknownIdentifier(f"unbound identifier {name!r}") from None
    return get


def _removable_pattern(node):
    """Match ``u * sin(v / u)`` or ``u * cos(v / u)``; returns ``(u, v, func)``."""
    if not (isinstance(node, BinOp) and node.op == "*"):
        return None
    call = node.right
    if not (isinstance(call, Call) and call.func in ("sin", "cos") and len(call.args) == 1):
        return None
    quotient = call.args[0]
    if isinstance(quotient, BinOp) and quotient.op == "/" and quotient.right == node.left:
        return node.left, quotient.left, call.func
    return None


def _m_pow(base, expo):
    try:
        return math.pow(base, expo)
    except OverflowError:
        return math.inf if base > 0 or float(expo).is_integer() and expo % 2 == 0 else -math.inf
    except ValueError:
        if base == 0:
            raise DivisionByZero(f"0 raised to negative power {expo!r}") from None
        raise DomainError(f"{base!r} ^ {expo!r} is not real") from None


def _m_exp(v):
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _m_sqrt(v):
    if v < 0:
        raise DomainError(f"sqrt of negative number {v!r}")
    return math.sqrt(v)


_SCALAR_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": _m_exp,
    "abs": abs,
    "sqrt": _m_sqrt,
    "min": lambda *a: min(a),
    "max": lambda *a: max(a),
}


def _compile_scalar(node) -> Callable[[Mapping], float]:
    c = _compile_scalar
    if isinstance(node, Num):
        v = float(node.value)
        return lambda env: v
    if isinstance(node, (Var, Param)):
        return _lookup(node.name)
    if isinstance(node, Neg):
        f = c(node.operand)
        return lambda env: -f(env)
    if isinstance(node, BinOp):
        pattern = _removable_pattern(node)
        if pattern is not None:
            fu, fv, trig = c(pattern[0]), c(pattern[1]), _SCALAR_FUNCS[pattern[2]]

            def removable(env):
                u = fu(env)
                if u == 0:
                    return 0.0
                return u * trig(fv(env) / u)
            return removable
        fl, fr = c(node.left), c(node.right)
        op = node.op
        if op == "+":
            return lambda env: fl(env) + fr(env)
        if op == "-":
            return lambda env: fl(env) - fr(env)
        if op == "*":
            return lambda env: fl(env) * fr(env)
        if op == "/":
            def div(env):
                den = fr(env)
                if den == 0:
                    raise DivisionByZero("division by zero")
                return fl(env) / den
            return div
        if op == "^":
            return lambda env: _m_pow(fl(env), fr(env))
    if isinstance(node, Call):
        fn = _SCALAR_FUNCS[node.func]
        args = [c(a) for a in node.args]
        if len(args) == 1:
            (fa,) = args
            return lambda env: fn(fa(env))
        return lambda env: fn(*(f(env) for f in args))
    if isinstance(node, PointEval):
        key, at = node.var, node.at
        return lambda env: env[key](at)
    if isinstance(node, Integral):
        key = node.var
        return lambda env: trapezoid(env[key])
    if isinstance(node, SupNorm):
        key = node.var
        return lambda env: float(np.max(np.abs(env[key].values)))
    raise TypeError(f"cannot compile {node!r}")


def _a_div(num, den):
    if np.any(np.asarray(den) == 0):
        raise DivisionByZero("division by zero")
    return num / den


def _a_pow(base, expo):
    base, expo = np.asarray(base, dtype=float), np.asarray(expo, dtype=float)
    if np.any((base == 0) & (expo < 0)):
        raise DivisionByZero("0 raised to a negative power")
    if np.any((base < 0) & (expo != np.round(expo))):
        raise DomainError("negative base raised to a non-integer power")
    return np.power(base, expo)


def _a_sqrt(v):
    if np.any(np.asarray(v) < 0):
        raise DomainError("sqrt of negative number")
    return np.sqrt(v)


def _a_min(*args):
    return args[0] if len(args) == 1 else np.minimum.reduce(np.broadcast_arrays(*args))


def _a_max(*args):
    return args[0] if len(args) == 1 else np.maximum.reduce(np.broadcast_arrays(*args))


_ARRAY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "sqrt": _a_sqrt,
    "min": _a_min,
    "max": _a_max,
}


def _compile_array(node) -> Callable[[Mapping], np.ndarray]:
    c = _compile_array
    if isinstance(node, Num):
        v = float(node.value)
        return lambda env: v
    if isinstance(node, (Var, Param)):
        return _lookup(node.name)
    if isinstance(node, Neg):
        f = c(node.operand)
        return lambda env: -f(env)
    if isinstance(node, BinOp):
        pattern = _removable_pattern(node)
        if pattern is not None:
            fu, fv, trig = c(pattern[0]), c(pattern[1]), _ARRAY_FUNCS[pattern[2]]

            def removable(env):
                u = np.asarray(fu(env), dtype=float)
                v = fv(env)
                zero = u == 0
                safe = np.where(zero, 1.0, u)
                return np.where(zero, 0.0, u * trig(v / safe))
            return removable
        fl, fr = c(node.left), c(node.right)
        op = node.op
        if op == "+":
            return lambda env: fl(env) + fr(env)
        if op == "-":
            return lambda env: fl(env) - fr(env)
        if op == "*":
            return lambda env: fl(env) * fr(env)
        if op == "/":
            return lambda env: _a_div(fl(env), fr(env))
        if op == "^":
            return lambda env: _a_pow(fl(env), fr(env))
    if isinstance(node, Call):
        fn = _ARRAY_FUNCS[node.func]
        args = [c(a) for a in node.args]
        return lambda env: fn(*(f(env) for f in args))
    raise TypeError(f"cannot compile {node!r} for array evaluation")


# -----------------------------------------------------------------------------
# public expression types
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarExpr:
    """Parsed scalar expression over ``variables`` and free parameters."""

    ast: object
    variables: tuple = SCALAR_VARIABLES
    source: str = field(default="", compare=False)

    @cached_property
    def parameters(self) -> frozenset:
        return frozenset(n.name for n in walk(self.ast) if isinstance(n, Param))

    @cached_property
    def compiled(self) -> Callable[[Mapping], float]:
        """Closure evaluating the tree on a name->float mapping (no checks)."""
        return _compile_scalar(self.ast)

    @cached_property
    def _array_fn(self):
        return _compile_array(self.ast)

    def evaluate(self, env: Mapping):
        """Evaluate with ``env`` mapping variable and parameter names to values.

        Values may be floats or equally shaped arrays; arrays select the
        vectorised backend and the result is broadcast to their shape.
        """
        arrays = [v for v in env.values() if isinstance(v, np.ndarray)]
        if not arrays:
            return float(self.compiled(env))
        shape = np.broadcast_shapes(*(a.shape for a in arrays))
        with np.errstate(over="ignore", invalid="ignore"):
            out = self._array_fn(env)
        return np.broadcast_to(np.asarray(out, dtype=float), shape)

    def __str__(self):
        return self.source or to_source(self.ast)


@dataclass(frozen=True)
class FunctionalExpr:
    """Parsed functional of the pair ``(x, y)`` of grid functions."""

    ast: object
    source: str = field(default="", compare=False)

    @cached_property
    def parameters(self) -> frozenset:
        return frozenset(n.name for n in walk(self.ast) if isinstance(n, Param))

    @cached_property
    def abscissae(self) -> tuple:
        return tuple(sorted({n.at for n in walk(self.ast) if isinstance(n, PointEval)}))

    @cached_property
    def _fn(self):
        return _compile_scalar(self.ast)

    def __str__(self):
        return self.source or to_source(self.ast)


def parse_scalar(src: str, params=None, variables=SCALAR_VARIABLES) -> ScalarExpr:
    """Parse a right-hand side such as ``"0.25*sin(x) + a*y + t"``.

    With ``params`` given, names that are not variables, parameters or
    functions raise :class:`UnknownIdentifier` immediately; otherwise they
    are checked when the expression is evaluated.
    """
    tree = _Parser(src, functional=False, variables=variables, params=params).parse()
    return ScalarExpr(tree, tuple(variables), src)


def parse_functional(src: str, params=None) -> FunctionalExpr:
    """Parse a nonlocal condition such as ``"0.125*sin(x(0.25) + y(0.25))"``."""
    tree = _Parser(src, functional=True, variables=(), params=params).parse()
    return FunctionalExpr(tree, src)


def eval_scalar(e: ScalarExpr, t, x, y, params: Mapping | None = None):
    env = dict(params or {})
    env.update(t=t, x=x, y=y)
    return e.evaluate(env)


def eval_functional(e: FunctionalExpr, x: GridFunction, y: GridFunction, params: Mapping | None = None) -> float:
    if x.n_intervals != y.n_intervals:
        raise GridMismatch(f"x on N={x.n_intervals} but y on N={y.n_intervals}")
    env = dict(params or {})
    env.update(x=x, y=y)
    return float(e._fn(env))


def trapezoid(g: GridFunction) -> float:
    """Composite trapezoid rule over the whole grid."""
    v = g.values
    return float(g.h * (v.sum() - 0.5 * (v[0] + v[-1])))
