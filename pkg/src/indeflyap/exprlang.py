"""Expression language for rates, Lyapunov candidates, vector fields and gains.

Grammar (whitespace-insensitive, ASCII, case-sensitive identifiers)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := atom ("^" unary)?
    atom    := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

``^`` is right-associative and binds tighter than unary minus, so ``-2^2``
is ``-(2^2)``.  Variables are ``t``, ``s``, ``x1..xn`` and ``u1..um``; the
named constants are ``pi`` and ``e``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence, Union

import numpy as np

__all__ = [
    "Num", "Var", "Const", "Neg", "BinOp", "Call", "Expr",
    "ExprError", "ExprSyntaxError", "ExprNameError", "ExprArityError",
    "ExprDomainError", "UnboundVariableError",
    "parse", "to_text", "evaluate", "bind", "free_vars", "substitute",
    "compile_scalar", "compile_numpy", "VectorField", "FUNCTIONS", "CONSTANTS",
]


# --------------------------------------------------------------------------
# errors

class ExprError(Exception):
    """Base class for expression-language errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, expected: Sequence[str] = ()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class ExprNameError(ExprError):
    def __init__(self, name: str, offset: int | None = None, reason: str = "unknown identifier"):
        self.name = name
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{reason} {name!r}{where}")


class ExprArityError(ExprError):
    def __init__(self, func: str, expected: int, got: int, offset: int):
        self.func = func
        self.offset = offset
        super().__init__(f"{func}() takes {expected} argument(s), got {got} at offset {offset}")


class UnboundVariableError(ExprError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"variable {name!r} is not bound")


class ExprDomainError(ExprError, ArithmeticError):
    """Raised for division by zero, ln/sqrt outside their domain, 0^negative, etc."""

    def __init__(self, reason: str, subexpr: str):
        self.reason = reason
        self.subexpr = subexpr
        super().__init__(f"{reason} in {subexpr}")


# --------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v < 0:
            raise ValueError("numeric literals are finite and nonnegative; use Neg for signs")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

FUNCTIONS: dict[str, int] = {
    "sin": 1, "cos": 1, "abs": 1, "exp": 1, "ln": 1, "sqrt": 1, "min": 2, "max": 2,
}
CONSTANTS: dict[str, float] = {"pi": math.pi, "e": math.e}
BINARY_OPS = ("+", "-", "*", "/", "^")

_VAR_RE = re.compile(r"^(t|s|x[1-9][0-9]*|u[1-9][0-9]*)$")


# --------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num", "name", "op", "end"
    text: str
    offset: int


def _tokenize(source: str) -> list[_Tok]:
    if not source.isascii():
        bad = next(i for i, ch in enumerate(source) if not ch.isascii())
        raise ExprSyntaxError("non-ASCII character", len(source[:bad].encode()))
    toks: list[_Tok] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(source)))
    return toks


# --------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, source: str, n: int | None, m: int | None):
        self.toks = _tokenize(source)
        self.i = 0
        self.n = n
        self.m = m

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind != "op":
            raise ExprSyntaxError(f"unexpected {self._describe(self.tok)}", self.tok.offset, [text])
        return self.advance()

    @staticmethod
    def _describe(tok: _Tok) -> str:
        return "end of input" if tok.kind == "end" else f"token {tok.text!r}"

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise ExprSyntaxError("empty expression", 0, ["number", "name", "(", "-", "+"])
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(
                f"unexpected {self._describe(self.tok)}", self.tok.offset,
                ["+", "-", "*", "/", "^", "end of input"],
            )
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(tok)
            if tok.text in CONSTANTS:
                return Const(tok.text)
            if tok.text in FUNCTIONS:
                raise ExprSyntaxError(f"function {tok.text!r} needs arguments", self.tok.offset, ["("])
            self.check_var(tok.text, tok.offset)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {self._describe(tok)}", tok.offset, ["number", "name", "(", "-", "+"])

    def call(self, name_tok: _Tok) -> Expr:
        name = name_tok.text
        if name not in FUNCTIONS:
            raise ExprNameError(name, name_tok.offset, "unknown function")
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if len(args) != FUNCTIONS[name]:
            raise ExprArityError(name, FUNCTIONS[name], len(args), name_tok.offset)
        return Call(name, tuple(args))

    def check_var(self, name: str, offset: int) -> None:
        if not _VAR_RE.match(name):
            raise ExprNameError(name, offset)
        if name[0] == "x" and self.n is not None and int(name[1:]) > self.n:
            raise ExprNameError(name, offset, f"state index out of range (n={self.n}) for")
        if name[0] == "u" and self.m is not None and int(name[1:]) > self.m:
            raise ExprNameError(name, offset, f"input index out of range (m={self.m}) for")


def parse(source: str, n: int | None = None, m: int | None = None) -> Expr:
    """Parse ``source`` into an AST.

    ``n`` and ``m`` bound the admissible state/input indices when given.
    """
    return _Parser(source, n, m).parse()


# --------------------------------------------------------------------------
# printing

def _num_text(v: float) -> str:
    if v.is_integer() and v < 1e16:
        return str(int(v))
    return repr(v)


def to_text(node: Expr) -> str:
    """Canonical fully parenthesized form; ``parse(to_text(a)) == a``."""
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)}{node.op}{to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({','.join(to_text(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# analysis helpers

def iter_nodes(node: Expr) -> Iterator[Expr]:
    yield node
    if isinstance(node, Neg):
        yield from iter_nodes(node.operand)
    elif isinstance(node, BinOp):
        yield from iter_nodes(node.left)
        yield from iter_nodes(node.right)
    elif isinstance(node, Call):
        for a in node.args:
            yield from iter_nodes(a)


def free_vars(node: Expr) -> frozenset[str]:
    return frozenset(n.name for n in iter_nodes(node) if isinstance(n, Var))


def substitute(node: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by sub-expressions."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Call):
        return Call(node.func, tuple(substitute(a, mapping) for a in node.args))
    return node


# --------------------------------------------------------------------------
# scalar evaluation

def _div(a: float, b: float, where: str) -> float:
    if b == 0.0:
        raise ExprDomainError("division by zero", where)
    return a / b


def _pow(a: float, b: float, where: str) -> float:
    if a == 0.0 and b < 0.0:
        raise ExprDomainError("zero raised to a negative power", where)
    if a < 0.0 and not float(b).is_integer():
        raise ExprDomainError("negative base with non-integer exponent", where)
    try:
        return a ** b
    except OverflowError:
        odd = float(b).is_integer() and int(b) % 2 == 1
        return -math.inf if (a < 0.0 and odd) else math.inf


def _ln(a: float, where: str) -> float:
    if a <= 0.0:
        raise ExprDomainError("ln of non-positive value", where)
    return math.log(a)


def _sqrt(a: float, where: str) -> float:
    if a < 0.0:
        raise ExprDomainError("sqrt of negative value", where)
    return math.sqrt(a)


def _exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _min(a: float, b: float) -> float:
    return a if a <= b else b


def _max(a: float, b: float) -> float:
    return a if a >= b else b


_SCALAR_FUNCS: dict[str, Callable[..., float]] = {
    "sin": math.sin, "cos": math.cos, "abs": abs, "exp": _exp, "min": _min, "max": _max,
}


def bind(t: float | None = None, x: Sequence[float] = (), u: Sequence[float] = (),
         s: float | None = None) -> dict[str, float]:
    """Build a variable binding from the usual argument groups."""
    env: dict[str, float] = {}
    if t is not None:
        env["t"] = float(t)
    if s is not None:
        env["s"] = float(s)
    for i, xi in enumerate(x, 1):
        env[f"x{i}"] = float(xi)
    for j, uj in enumerate(u, 1):
        env[f"u{j}"] = float(uj)
    return env


def evaluate(node: Expr, env: Mapping[str, float]) -> float:
    """Evaluate ``node`` in IEEE double precision by direct recursion."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return float(env[node.name])
        except KeyError:
            raise UnboundVariableError(node.name) from None
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    if isinstance(node, BinOp):
        a = evaluate(node.left, env)
        b = evaluate(node.right, env)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return _div(a, b, to_text(node))
        return _pow(a, b, to_text(node))
    if isinstance(node, Call):
        vals = [evaluate(a, env) for a in node.args]
        if node.func == "ln":
            return _ln(vals[0], to_text(node))
        if node.func == "sqrt":
            return _sqrt(vals[0], to_text(node))
        return _SCALAR_FUNCS[node.func](*vals)
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# compilation to Python closures

def _emit(node: Expr, consts: list[str], numpy: bool) -> str:
    """Python source for ``node`` with the same operation order as ``evaluate``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Const):
        return repr(CONSTANTS[node.name])
    if isinstance(node, Neg):
        return f"(-{_emit(node.operand, consts, numpy)})"
    if isinstance(node, BinOp):
        a = _emit(node.left, consts, numpy)
        b = _emit(node.right, consts, numpy)
        if node.op in "+-*":
            return f"({a} {node.op} {b})"
        if numpy:
            return f"({a} / {b})" if node.op == "/" else f"_np.power({a}, {b})"
        consts.append(to_text(node))
        fn = "_div" if node.op == "/" else "_pow"
        return f"{fn}({a}, {b}, _W[{len(consts) - 1}])"
    if isinstance(node, Call):
        args = [_emit(a, consts, numpy) for a in node.args]
        if numpy:
            name = {"ln": "log", "abs": "abs", "min": "minimum", "max": "maximum"}.get(node.func, node.func)
            return f"_np.{name}({', '.join(args)})"
        if node.func in ("ln", "sqrt"):
            consts.append(to_text(node))
            return f"_{node.func}({args[0]}, _W[{len(consts) - 1}])"
        fn = {"sin": "_sin", "cos": "_cos", "abs": "abs", "exp": "_exp", "min": "_min", "max": "_max"}[node.func]
        return f"{fn}({', '.join(args)})"
    raise TypeError(f"not an expression node: {node!r}")


def _scalar_namespace(consts: list[str]) -> dict:
    return {
        "_div": _div, "_pow": _pow, "_ln": _ln, "_sqrt": _sqrt, "_exp": _exp,
        "_min": _min, "_max": _max, "_sin": math.sin, "_cos": math.cos, "_W": tuple(consts),
    }


def compile_scalar(nodes: Expr | Sequence[Expr], params: Sequence[str]) -> Callable[..., object]:
    """Compile one expression (or a tuple of them) into a positional-argument closure.

    The closure performs the same floating-point operations in the same
    order as :func:`evaluate`, so results agree bit for bit.
    """
    single = not isinstance(nodes, (list, tuple))
    seq = [nodes] if single else list(nodes)
    consts: list[str] = []
    bodies = [_emit(nd, consts, numpy=False) for nd in seq]
    _check_params(seq, params)
    ret = bodies[0] if single else "(" + "".join(b + ", " for b in bodies) + ")"
    src = f"def _f({', '.join(params)}):\n    return {ret}\n"
    ns = _scalar_namespace(consts)
    exec(compile(src, "<indeflyap-expr>", "exec"), ns)
    return ns["_f"]


def _check_params(nodes: Sequence[Expr], params: Sequence[str]) -> None:
    have = set(params)
    for nd in nodes:
        missing = free_vars(nd) - have
        if missing:
            raise UnboundVariableError(sorted(missing)[0])


def compile_numpy(node: Expr, params: Sequence[str]) -> Callable[..., np.ndarray]:
    """Vectorized evaluator; domain violations surface as non-finite entries.

    The returned callable raises :class:`ExprDomainError` for the first
    offending element, located by re-evaluating that element with
    :func:`evaluate`.
    """
    _check_params([node], params)
    body = _emit(node, [], numpy=True)
    src = f"def _f({', '.join(params)}):\n    return {body}\n"
    ns: dict = {"_np": np}
    exec(compile(src, "<indeflyap-expr-np>", "exec"), ns)
    raw = ns["_f"]

    def fn(*args):
        arrays = [np.asarray(a, dtype=float) for a in args]
        with np.errstate(all="ignore"):
            out = raw(*arrays)
        out = np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(*arrays).shape if arrays else ())
        bad = ~np.isfinite(out)
        if bad.any():
            for idx in np.argwhere(bad)[:64]:
                point = {p: float(np.broadcast_to(a, out.shape)[tuple(idx)]) for p, a in zip(params, arrays)}
                v = evaluate(node, point)  # raises the precise domain error
                if math.isnan(v) or np.isnan(out[tuple(idx)]):
                    raise ExprDomainError("undefined value", to_text(node))
        return np.array(out)

    return fn


# --------------------------------------------------------------------------
# vector fields

@dataclass(frozen=True)
class VectorField:
    """Right-hand side ``f(t, x, u)`` of an n-state, m-input system."""

    n: int
    m: int
    components: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.components) != self.n:
            raise ValueError(f"expected {self.n} components, got {len(self.components)}")
        allowed = self.params
        for c in self.components:
            extra = free_vars(c) - set(allowed)
            if extra:
                raise ExprNameError(sorted(extra)[0], None, "variable not allowed in vector field:")

    @classmethod
    def parse(cls, sources: Sequence[str], m: int = 0) -> "VectorField":
        n = len(sources)
        return cls(n, m, tuple(parse(s, n=n, m=m) for s in sources))

    @property
    def params(self) -> tuple[str, ...]:
        return ("t",) + tuple(f"x{i}" for i in range(1, self.n + 1)) + tuple(f"u{j}" for j in range(1, self.m + 1))

    def compile(self) -> Callable[[float, Sequence[float], Sequence[float]], tuple[float, ...]]:
        """Return ``f(t, x, u) -> tuple`` evaluated with scalar arithmetic."""
        inner = compile_scalar(tuple(self.components), self.params)

        def f(t, x, u=()):
            return inner(t, *x, *u) if self.m else inner(t, *x)

        return f

    def __call__(self, t: float, x: Sequence[float], u: Sequence[float] = ()) -> tuple[float, ...]:
        env = bind(t, x, u if self.m else ())
        return tuple(evaluate(c, env) for c in self.components)

    def check_origin(self, ts: Sequence[float], atol: float = 1e-12) -> float:
        """Return max |f(t,0,0)| over ``ts``; raise ValueError when it exceeds ``atol``."""
        worst = 0.0
        zero_x = (0.0,) * self.n
        zero_u = (0.0,) * self.m
        for t in ts:
            worst = max(worst, max(abs(v) for v in self(t, zero_x, zero_u)))
        if worst > atol:
            raise ValueError(f"f(t,0,0) is not zero (max |f| = {worst:.3g})")
        return worst
