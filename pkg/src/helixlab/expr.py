"""Scalar expression trees: parsing, symbolic differentiation, evaluation.

Grammar (whitespace is insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' factor)?
    base   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

so ``^`` binds tighter than unary minus (``-2^2 == -4``) and is
right-associative (``2^3^2 == 2^9``).

Trees are immutable and compared by identity; derived trees share subtrees
freely, so every traversal below memoizes on ``id(node)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, ParseError, UnknownParameter

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")
CONSTANTS = {"pi": math.pi, "e": math.e}


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Num(Expr):
    value: float


@dataclass(frozen=True, eq=False, repr=False)
class Const(Expr):
    name: str


@dataclass(frozen=True, eq=False, repr=False)
class Param(Expr):
    name: str


@dataclass(frozen=True, eq=False, repr=False)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=False, repr=False)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=False, repr=False)
class Func(Expr):
    name: str
    arg: Expr


ZERO = Num(0.0)
ONE = Num(1.0)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Num(float(x))


def is_num(e, value=None) -> bool:
    return isinstance(e, Num) and (value is None or e.value == value)


# ---------------------------------------------------------------------------
# constant-folding constructors

def _fold(fn, *args):
    try:
        out = fn(*args)
    except (ValueError, ZeroDivisionError, OverflowError, DomainError):
        return None
    if isinstance(out, complex) or not math.isfinite(out):
        return None
    return Num(float(out))


def add(a: Expr, b: Expr) -> Expr:
    if is_num(a) and is_num(b):
        return _fold(lambda x, y: x + y, a.value, b.value) or BinOp("+", a, b)
    if is_num(a, 0.0):
        return b
    if is_num(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if is_num(a) and is_num(b):
        return _fold(lambda x, y: x - y, a.value, b.value) or BinOp("-", a, b)
    if is_num(b, 0.0):
        return a
    if is_num(a, 0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if is_num(a) and is_num(b):
        return _fold(lambda x, y: x * y, a.value, b.value) or BinOp("*", a, b)
    if is_num(a, 0.0) or is_num(b, 0.0):
        return ZERO
    if is_num(a, 1.0):
        return b
    if is_num(b, 1.0):
        return a
    if is_num(a, -1.0):
        return neg(b)
    if is_num(b, -1.0):
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if is_num(a) and is_num(b):
        return _fold(_div, a.value, b.value) or BinOp("/", a, b)
    if is_num(b, 1.0):
        return a
    if is_num(a, 0.0) and not is_num(b, 0.0):
        return ZERO
    return BinOp("/", a, b)


def power(a: Expr, b: Expr) -> Expr:
    if is_num(a) and is_num(b):
        return _fold(_pow, a.value, b.value) or BinOp("^", a, b)
    if is_num(b, 0.0):
        return ONE
    if is_num(b, 1.0):
        return a
    return BinOp("^", a, b)


def neg(a: Expr) -> Expr:
    if is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def func(name: str, a: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise UnknownParameter(name)
    if is_num(a):
        folded = _fold(_SCALAR_FUNCS[name], a.value)
        if folded is not None:
            return folded
    return Func(name, a)


def sin(a):
    return func("sin", as_expr(a))


def cos(a):
    return func("cos", as_expr(a))


def tan(a):
    return func("tan", as_expr(a))


def exp(a):
    return func("exp", as_expr(a))


def log(a):
    return func("log", as_expr(a))


def sqrt(a):
    return func("sqrt", as_expr(a))


# ---------------------------------------------------------------------------
# scalar semantics shared by the tree walker and the compiled scalar backend

def _div(x, y):
    if y == 0.0:
        raise DomainError("division by zero")
    return x / y


def _pow(x, y):
    if x < 0.0 and y != math.floor(y):
        raise DomainError("negative base with non-integer exponent")
    if x == 0.0 and y < 0.0:
        raise DomainError("zero to a negative power")
    try:
        return math.pow(x, y)
    except OverflowError:
        raise DomainError("overflow in power") from None


def _log(x):
    if x <= 0.0:
        raise DomainError("log of non-positive value")
    return math.log(x)


def _sqrt(x):
    if x < 0.0:
        raise DomainError("sqrt of negative value")
    return math.sqrt(x)


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        raise DomainError("overflow in exp") from None


_SCALAR_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
}

_BINOPS = {
    "+": lambda x, y: x + y,
    "-": lambda x, y: x - y,
    "*": lambda x, y: x * y,
    "/": _div,
    "^": _pow,
}


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text, params):
        self.tokens = _tokenize(text)
        self.i = 0
        self.params = params

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.factor())
        return e

    def factor(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.factor())
        b = self.base()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return BinOp("^", b, self.factor())
        return b

    def base(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            is_call = self.peek()[0] == "op" and self.peek()[1] == "("
            if text in FUNCTIONS:
                if not is_call:
                    raise ParseError(f"function {text!r} needs an argument", pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            if is_call:
                if text in self.params or text in CONSTANTS:
                    raise ParseError(f"{text!r} is not a function", pos)
                raise UnknownParameter(text, pos)
            if text in self.params:
                return Param(text)
            if text in CONSTANTS:
                return Const(text)
            raise UnknownParameter(text, pos)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", pos)


def _check_params(params):
    for p in params:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", p):
            raise ParseError(f"invalid parameter name {p!r}", 0)
        if p in FUNCTIONS or p in CONSTANTS:
            raise ParseError(f"parameter {p!r} shadows a built-in name", 0)


def parse(text: str, params: Sequence[str] = ()) -> Expr:
    """Parse ``text`` into an expression over the declared ``params``."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    params = tuple(params)
    _check_params(params)
    return _Parser(text, frozenset(params)).parse()


# ---------------------------------------------------------------------------
# traversal helpers

def _children(e):
    if isinstance(e, Neg) or isinstance(e, Func):
        return (e.arg,)
    if isinstance(e, BinOp):
        return (e.left, e.right)
    return ()


def _postorder(roots):
    """Unique nodes of the DAG under ``roots``, children before parents."""
    seen = set()
    order = []
    stack = [(r, False) for r in reversed(list(roots))]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for c in reversed(_children(node)):
            if id(c) not in seen:
                stack.append((c, False))
    return order


def free_params(e: Expr) -> frozenset:
    return frozenset(n.name for n in _postorder([e]) if isinstance(n, Param))


def node_count(e: Expr) -> int:
    """Number of distinct nodes (shared subtrees counted once)."""
    return len(_postorder([e]))


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace parameters by expressions, folding constants on the way."""
    memo: dict[int, Expr] = {}
    for node in _postorder([e]):
        if isinstance(node, Param):
            out = as_expr(mapping[node.name]) if node.name in mapping else node
        elif isinstance(node, Neg):
            out = neg(memo[id(node.arg)])
        elif isinstance(node, Func):
            out = func(node.name, memo[id(node.arg)])
        elif isinstance(node, BinOp):
            out = _BUILD[node.op](memo[id(node.left)], memo[id(node.right)])
        else:
            out = node
        memo[id(node)] = out
    return memo[id(e)]


_BUILD = {"+": add, "-": sub, "*": mul, "/": div, "^": power}


# ---------------------------------------------------------------------------
# differentiation

def differentiate(e: Expr, p: str, params: Sequence[str] | None = None) -> Expr:
    """Exact derivative of ``e`` with respect to parameter ``p``.

    When ``params`` is given, ``p`` must be one of them.
    """
    if p in FUNCTIONS or p in CONSTANTS:
        raise UnknownParameter(p)
    if params is not None and p not in params:
        raise UnknownParameter(p)

    dep: dict[int, bool] = {}
    d: dict[int, Expr] = {}
    for node in _postorder([e]):
        key = id(node)
        if isinstance(node, Param):
            dep[key] = node.name == p
            d[key] = ONE if dep[key] else ZERO
            continue
        kids = _children(node)
        dep[key] = any(dep[id(c)] for c in kids)
        if not dep[key]:
            d[key] = ZERO
        elif isinstance(node, Neg):
            d[key] = neg(d[id(node.arg)])
        elif isinstance(node, Func):
            d[key] = _dfunc(node, d[id(node.arg)])
        else:
            d[key] = _dbinop(node, d[id(node.left)], d[id(node.right)],
                             dep[id(node.left)], dep[id(node.right)])
    return d[id(e)]


def _dfunc(node, da):
    a = node.arg
    if node.name == "sin":
        inner = func("cos", a)
    elif node.name == "cos":
        inner = neg(func("sin", a))
    elif node.name == "tan":
        inner = div(ONE, power(func("cos", a), Num(2.0)))
    elif node.name == "exp":
        inner = node
    elif node.name == "log":
        return div(da, a)
    else:  # sqrt
        return div(da, mul(Num(2.0), node))
    return mul(inner, da)


def _dbinop(node, dl, dr, left_dep, right_dep):
    f, g = node.left, node.right
    op = node.op
    if op == "+":
        return add(dl, dr)
    if op == "-":
        return sub(dl, dr)
    if op == "*":
        return add(mul(dl, g), mul(f, dr))
    if op == "/":
        if not right_dep:
            return div(dl, g)
        return div(sub(mul(dl, g), mul(f, dr)), power(g, Num(2.0)))
    # power
    if not right_dep:
        return mul(mul(g, power(f, sub(g, ONE))), dl)
    if not left_dep:
        return mul(mul(node, func("log", f)), dr)
    return mul(node, add(mul(dr, func("log", f)), div(mul(g, dl), f)))


# ---------------------------------------------------------------------------
# evaluation

def evaluate(e: Expr, bindings: Mapping[str, float] | None = None) -> float:
    """Evaluate in IEEE double precision.

    Raises DomainError (carrying the offending node) outside a function's
    domain, UnknownParameter for an unbound parameter.
    """
    bindings = bindings or {}
    vals: dict[int, float] = {}
    for node in _postorder([e]):
        try:
            if isinstance(node, Num):
                out = node.value
            elif isinstance(node, Const):
                out = CONSTANTS[node.name]
            elif isinstance(node, Param):
                if node.name not in bindings:
                    raise UnknownParameter(node.name)
                out = float(bindings[node.name])
            elif isinstance(node, Neg):
                out = -vals[id(node.arg)]
            elif isinstance(node, Func):
                out = _SCALAR_FUNCS[node.name](vals[id(node.arg)])
            else:
                out = _BINOPS[node.op](vals[id(node.left)], vals[id(node.right)])
        except DomainError as exc:
            raise DomainError(str(exc), node) from None
        except (ValueError, OverflowError) as exc:
            raise DomainError(str(exc), node) from None
        vals[id(node)] = out
    return vals[id(e)]


# ---------------------------------------------------------------------------
# printing

def to_string(e: Expr) -> str:
    """Fully parenthesized text that parses back to an equivalent tree."""
    memo: dict[int, str] = {}
    for node in _postorder([e]):
        if isinstance(node, Num):
            s = repr(float(node.value))
            if node.value < 0 or s.startswith("-"):
                s = f"({s})"
        elif isinstance(node, (Const, Param)):
            s = node.name
        elif isinstance(node, Neg):
            s = f"(-{memo[id(node.arg)]})"
        elif isinstance(node, Func):
            s = f"{node.name}({memo[id(node.arg)]})"
        else:
            s = f"({memo[id(node.left)]} {node.op} {memo[id(node.right)]})"
        memo[id(node)] = s
    return memo[id(e)]


# ---------------------------------------------------------------------------
# compilation to Python source

_NP_FUNCS = {
    "sin": "np.sin", "cos": "np.cos", "tan": "np.tan",
    "exp": "np.exp", "log": "np.log", "sqrt": "np.sqrt",
}


def compile_exprs(exprs: Iterable[Expr], params: Sequence[str], vectorized=False):
    """Compile several expressions into one function of the parameters.

    The returned callable takes the parameter values positionally and
    returns a tuple with one value per expression. Shared subtrees are
    evaluated once. With ``vectorized=True`` arguments may be numpy arrays
    and the outputs are broadcast against them.
    """
    exprs = list(exprs)
    params = tuple(params)
    names: dict[int, str] = {}
    lines = []
    for k, node in enumerate(_postorder(exprs)):
        if isinstance(node, Num):
            names[id(node)] = repr(float(node.value))
            continue
        if isinstance(node, Const):
            names[id(node)] = repr(CONSTANTS[node.name])
            continue
        if isinstance(node, Param):
            if node.name not in params:
                raise UnknownParameter(node.name)
            names[id(node)] = f"p_{node.name}"
            continue
        if isinstance(node, Neg):
            rhs = f"-({names[id(node.arg)]})"
        elif isinstance(node, Func):
            fn = _NP_FUNCS[node.name] if vectorized else f"_f_{node.name}"
            rhs = f"{fn}({names[id(node.arg)]})"
        else:
            a, b = names[id(node.left)], names[id(node.right)]
            if node.op in "+-*":
                rhs = f"({a}) {node.op} ({b})"
            elif node.op == "/":
                rhs = f"({a}) / ({b})" if vectorized else f"_div({a}, {b})"
            else:
                exp_ = node.right
                if not vectorized and isinstance(exp_, Num) and exp_.value == int(exp_.value) and 0 < exp_.value <= 64:
                    # positive integer powers cannot leave the domain
                    rhs = f"({a}) ** {int(exp_.value)}"
                else:
                    rhs = f"np.power({a}, {b})" if vectorized else f"_pow({a}, {b})"
        name = f"t{k}"
        lines.append(f"    {name} = {rhs}")
        names[id(node)] = name
    args = ", ".join(f"p_{p}" for p in params)
    outs = ", ".join(names[id(e)] for e in exprs)
    src = f"def _compiled({args}):\n" + "\n".join(lines) + f"\n    return ({outs},)\n"
    ns = {"np": np, "_div": _div, "_pow": _pow}
    ns.update({f"_f_{k}": v for k, v in _SCALAR_FUNCS.items()})
    exec(compile(src, "<helixlab-expr>", "exec"), ns)
    raw = ns["_compiled"]

    if vectorized:
        def fn(*args):
            args = [np.asarray(a, dtype=float) for a in args]
            try:
                with np.errstate(divide="raise", invalid="raise", over="raise"):
                    out = raw(*args)
            except FloatingPointError as exc:
                raise DomainError(str(exc)) from None
            shape = np.broadcast_shapes(*(a.shape for a in args)) if args else ()
            return tuple(np.broadcast_to(np.asarray(o, dtype=float), shape) for o in out)
    else:
        def fn(*args):
            try:
                return raw(*args)
            except (ValueError, OverflowError, ZeroDivisionError) as exc:
                raise DomainError(str(exc)) from None

    fn.source = src
    return fn
