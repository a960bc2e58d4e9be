"""Expression language and manifold specifications.

Manifold data (metric components, axis field, family parameters) is
written in a small arithmetic language over ``x1``, ``x2``.  The grammar
is fixed: no user functions, no conditionals.  That keeps symbolic
differentiation total and exact, which the geometry layers rely on for
Christoffel symbols, curvature, and connection 1-forms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable

import numpy as np

from . import dual
from .errors import (
    EvalError,
    ExpressionSyntaxError,
    SchemaError,
    UnknownIdentifier,
    ValidationError,
)

__all__ = [
    "Expression", "Num", "Var", "Neg", "Bin", "Call",
    "parse_expression", "diff_expression", "evaluate", "to_source",
    "compile_expression", "fold", "num", "var", "func",
    "MetricKind", "ManifoldSpec", "load_manifold",
]

_FUNCTIONS_1 = ("sin", "cos", "tan", "exp", "ln", "sqrt", "atan", "abs", "sign")
_FUNCTIONS_2 = ("atan2",)
_FUNCTIONS = _FUNCTIONS_1 + _FUNCTIONS_2


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

class Expression:
    """Base node.  Nodes are immutable and hashable; operators build new
    (constant-folded) trees, which keeps derived symbolic geometry small."""

    __slots__ = ()

    def __add__(self, other):
        return fold(Bin("+", self, _coerce(other)))

    def __radd__(self, other):
        return fold(Bin("+", _coerce(other), self))

    def __sub__(self, other):
        return fold(Bin("-", self, _coerce(other)))

    def __rsub__(self, other):
        return fold(Bin("-", _coerce(other), self))

    def __mul__(self, other):
        return fold(Bin("*", self, _coerce(other)))

    def __rmul__(self, other):
        return fold(Bin("*", _coerce(other), self))

    def __truediv__(self, other):
        return fold(Bin("/", self, _coerce(other)))

    def __rtruediv__(self, other):
        return fold(Bin("/", _coerce(other), self))

    def __pow__(self, other):
        return fold(Bin("^", self, _coerce(other)))

    def __neg__(self):
        return fold(Neg(self))


def _coerce(v):
    if isinstance(v, Expression):
        return v
    return Num(float(v))


@dataclass(frozen=True)
class Num(Expression):
    value: float


@dataclass(frozen=True)
class Var(Expression):
    name: str


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression


@dataclass(frozen=True)
class Bin(Expression):
    op: str  # one of + - * / ^
    lhs: Expression
    rhs: Expression


@dataclass(frozen=True)
class Call(Expression):
    fn: str
    args: tuple


def num(v):
    return Num(float(v))


def var(name):
    return Var(name)


def func(fn, *args):
    if fn not in _FUNCTIONS:
        raise UnknownIdentifier(fn)
    return fold(Call(fn, tuple(_coerce(a) for a in args)))


ZERO = Num(0.0)
ONE = Num(1.0)


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str   # num ident op lparen rparen comma end
    text: str
    pos: int


def _tokenize(src):
    tokens = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            seen_e = False
            while j < n:
                c = src[j]
                if c.isdigit() or c == ".":
                    j += 1
                elif c in "eE" and not seen_e:
                    seen_e = True
                    j += 1
                    if j < n and src[j] in "+-":
                        j += 1
                else:
                    break
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ExpressionSyntaxError("malformed number", i, {"number"})
            tokens.append(_Token("num", text, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(_Token("ident", src[i:j], i))
            i = j
            continue
        if ch in "+-*/^":
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        if ch == "(":
            tokens.append(_Token("lparen", ch, i))
            i += 1
            continue
        if ch == ")":
            tokens.append(_Token("rparen", ch, i))
            i += 1
            continue
        if ch == ",":
            tokens.append(_Token("comma", ch, i))
            i += 1
            continue
        raise ExpressionSyntaxError(f"unexpected character {ch!r}", i,
                                    {"operator", "number", "identifier"})
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens, variables):
        self.tokens = tokens
        self.pos = 0
        self.variables = frozenset(variables)

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind, what):
        tok = self.peek()
        if tok.kind != kind:
            raise ExpressionSyntaxError(
                f"expected {what}, found {tok.text or 'end of input'!r}",
                tok.pos, {what})
        return self.advance()

    # expr := term (('+'|'-') term)*
    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = Bin(op, node, self.term())
        return node

    # term := unary (('*'|'/') unary)*
    def term(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = Bin(op, node, self.unary())
        return node

    # unary := '-' unary | power
    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if tok.kind == "op" and tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    # power := atom ('^' unary)?   (right associative)
    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if self.peek().kind == "lparen":
                if name not in _FUNCTIONS:
                    raise UnknownIdentifier(name, tok.pos)
                self.advance()
                args = [self.expr()]
                while self.peek().kind == "comma":
                    self.advance()
                    args.append(self.expr())
                self.expect("rparen", ")")
                arity = 2 if name in _FUNCTIONS_2 else 1
                if len(args) != arity:
                    raise ExpressionSyntaxError(
                        f"{name} takes {arity} argument(s), got {len(args)}",
                        tok.pos, {")"})
                return Call(name, tuple(args))
            if name not in self.variables:
                raise UnknownIdentifier(name, tok.pos)
            return Var(name)
        if tok.kind == "lparen":
            self.advance()
            node = self.expr()
            self.expect("rparen", ")")
            return node
        raise ExpressionSyntaxError(
            f"expected a value, found {tok.text or 'end of input'!r}",
            tok.pos, {"number", "identifier", "("})


def parse_expression(src, variables=("x1", "x2")):
    """Parse ``src`` into an Expression over the given variable names."""
    if not isinstance(src, str):
        raise ExpressionSyntaxError("source must be text", 0, {"text"})
    parser = _Parser(_tokenize(src), variables)
    node = parser.expr()
    tok = parser.peek()
    if tok.kind != "end":
        raise ExpressionSyntaxError(
            f"trailing input {tok.text!r}", tok.pos, {"end of input"})
    return node


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _apply(fn, args):
    if fn == "sin":
        return dual.sin(args[0])
    if fn == "cos":
        return dual.cos(args[0])
    if fn == "tan":
        return dual.tan(args[0])
    if fn == "exp":
        return dual.exp(args[0])
    if fn == "ln":
        return dual.log(args[0])
    if fn == "sqrt":
        return dual.sqrt(args[0])
    if fn == "atan":
        return dual.atan(args[0])
    if fn == "atan2":
        return dual.atan2(args[0], args[1])
    if fn == "abs":
        return dual.fabs(args[0])
    if fn == "sign":
        return dual.sign(args[0])
    raise UnknownIdentifier(fn)


def evaluate(expr, env):
    """Tree-walking evaluation with an {name: value} environment."""
    match expr:
        case Num(value=v):
            return v
        case Var(name=name):
            try:
                return env[name]
            except KeyError:
                raise UnknownIdentifier(name) from None
        case Neg(arg=a):
            return -evaluate(a, env)
        case Bin(op=op, lhs=l, rhs=r):
            lv = evaluate(l, env)
            rv = evaluate(r, env)
            if op == "+":
                return lv + rv
            if op == "-":
                return lv - rv
            if op == "*":
                return lv * rv
            if op == "/":
                return _div(lv, rv)
            if op == "^":
                return _pow(lv, rv)
            raise EvalError(f"unknown operator {op!r}")
        case Call(fn=fn, args=args):
            return _apply(fn, tuple(evaluate(a, env) for a in args))
    raise EvalError(f"cannot evaluate {expr!r}")


# numeric kernels shared by the interpreter and compiled code; they accept
# floats, numpy arrays, and Dual scalars
def _div(a, b):
    if isinstance(b, np.ndarray):
        if np.any(b == 0.0):
            raise EvalError("division by zero")
        return a / b
    if isinstance(b, float) or isinstance(b, int):
        if b == 0:
            raise EvalError("division by zero")
    return a / b


def _pow(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        out = np.power(a, b)
        if np.any(~np.isfinite(out)):
            raise EvalError("power outside real domain")
        return out
    if isinstance(a, dual.Dual) or isinstance(b, dual.Dual):
        return a ** b
    try:
        out = math.pow(a, b)
    except (ValueError, OverflowError) as exc:
        raise EvalError(str(exc)) from None
    return out


def _np_guard_sqrt(v):
    if np.any(v < 0.0):
        raise EvalError("sqrt of negative value")
    return np.sqrt(v)


def _np_guard_ln(v):
    if np.any(v <= 0.0):
        raise EvalError("ln of non-positive value")
    return np.log(v)


_NUMPY_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "ln": _np_guard_ln, "sqrt": _np_guard_sqrt, "atan": np.arctan,
    "atan2": np.arctan2, "abs": np.abs, "sign": np.sign,
}


def _dispatch_fn(fn):
    npf = _NUMPY_FUNCS[fn]

    def call(*args):
        if any(isinstance(a, np.ndarray) for a in args):
            return npf(*args)
        return _apply(fn, args)

    call.__name__ = f"_fn_{fn}"
    return call


_COMPILE_NS = {f"_fn_{fn}": _dispatch_fn(fn) for fn in _FUNCTIONS}
_COMPILE_NS["_div"] = _div
_COMPILE_NS["_pow"] = _pow


def _codegen(expr):
    match expr:
        case Num(value=v):
            return repr(v)
        case Var(name=name):
            return name
        case Neg(arg=a):
            return f"(-{_codegen(a)})"
        case Bin(op=op, lhs=l, rhs=r):
            if op == "/":
                return f"_div({_codegen(l)}, {_codegen(r)})"
            if op == "^":
                return f"_pow({_codegen(l)}, {_codegen(r)})"
            return f"({_codegen(l)} {op} {_codegen(r)})"
        case Call(fn=fn, args=args):
            inner = ", ".join(_codegen(a) for a in args)
            return f"_fn_{fn}({inner})"
    raise EvalError(f"cannot compile {expr!r}")


_COMPILED_CACHE = {}


def compile_expression(expr, variables=("x1", "x2")) -> Callable:
    """Compile to a positional-argument callable (floats, arrays, duals)."""
    key = (expr, tuple(variables))
    fn = _COMPILED_CACHE.get(key)
    if fn is None:
        src = f"lambda {', '.join(variables)}: {_codegen(expr)}"
        fn = eval(src, dict(_COMPILE_NS))  # namespace holds only math shims
        _COMPILED_CACHE[key] = fn
    return fn


# ---------------------------------------------------------------------------
# Constant folding and differentiation
# ---------------------------------------------------------------------------

def _is_num(e, v=None):
    return isinstance(e, Num) and (v is None or e.value == v)


def fold(expr):
    """Fold constant subtrees and drop arithmetic neutral elements."""
    match expr:
        case Num() | Var():
            return expr
        case Neg(arg=a):
            a = fold(a)
            if isinstance(a, Num):
                return Num(-a.value)
            if isinstance(a, Neg):
                return a.arg
            return Neg(a)
        case Bin(op=op, lhs=l, rhs=r):
            l, r = fold(l), fold(r)
            if isinstance(l, Num) and isinstance(r, Num):
                try:
                    if op == "+":
                        return Num(l.value + r.value)
                    if op == "-":
                        return Num(l.value - r.value)
                    if op == "*":
                        return Num(l.value * r.value)
                    if op == "/":
                        return Num(_div(l.value, r.value))
                    if op == "^":
                        return Num(_pow(l.value, r.value))
                except EvalError:
                    pass  # leave for runtime so the error carries context
            if op == "+":
                if _is_num(l, 0.0):
                    return r
                if _is_num(r, 0.0):
                    return l
            elif op == "-":
                if _is_num(r, 0.0):
                    return l
                if _is_num(l, 0.0):
                    return fold(Neg(r))
            elif op == "*":
                if _is_num(l, 0.0) or _is_num(r, 0.0):
                    return ZERO
                if _is_num(l, 1.0):
                    return r
                if _is_num(r, 1.0):
                    return l
                if _is_num(l, -1.0):
                    return fold(Neg(r))
                if _is_num(r, -1.0):
                    return fold(Neg(l))
            elif op == "/":
                if _is_num(l, 0.0) and not _is_num(r, 0.0):
                    return ZERO
                if _is_num(r, 1.0):
                    return l
            elif op == "^":
                if _is_num(r, 1.0):
                    return l
                if _is_num(r, 0.0):
                    return ONE
            return Bin(op, l, r)
        case Call(fn=fn, args=args):
            args = tuple(fold(a) for a in args)
            if all(isinstance(a, Num) for a in args):
                try:
                    return Num(_apply(fn, tuple(a.value for a in args)))
                except EvalError:
                    pass
            return Call(fn, args)
    return expr


def diff_expression(expr, axis):
    """Exact partial derivative.

    ``axis`` is a variable name, or 1/2 as shorthand for x1/x2.
    """
    if axis in (1, 2):
        axis = f"x{axis}"
    return fold(_diff(expr, axis))


def _diff(e, v):
    match e:
        case Num():
            return ZERO
        case Var(name=name):
            return ONE if name == v else ZERO
        case Neg(arg=a):
            return Neg(_diff(a, v))
        case Bin(op="+", lhs=l, rhs=r):
            return Bin("+", _diff(l, v), _diff(r, v))
        case Bin(op="-", lhs=l, rhs=r):
            return Bin("-", _diff(l, v), _diff(r, v))
        case Bin(op="*", lhs=l, rhs=r):
            return Bin("+", Bin("*", _diff(l, v), r), Bin("*", l, _diff(r, v)))
        case Bin(op="/", lhs=l, rhs=r):
            top = Bin("-", Bin("*", _diff(l, v), r), Bin("*", l, _diff(r, v)))
            return Bin("/", top, Bin("*", r, r))
        case Bin(op="^", lhs=l, rhs=r):
            if isinstance(r, Num):
                k = r.value
                return Bin("*", Bin("*", Num(k), Bin("^", l, Num(k - 1.0))),
                           _diff(l, v))
            # u^v = exp(v ln u)
            inner = Bin("+",
                        Bin("*", _diff(r, v), Call("ln", (l,))),
                        Bin("/", Bin("*", r, _diff(l, v)), l))
            return Bin("*", e, inner)
        case Call(fn=fn, args=args):
            return _diff_call(fn, args, e, v)
    raise EvalError(f"cannot differentiate {e!r}")


def _diff_call(fn, args, e, v):
    u = args[0]
    du = _diff(u, v)
    if fn == "sin":
        return Bin("*", Call("cos", (u,)), du)
    if fn == "cos":
        return Neg(Bin("*", Call("sin", (u,)), du))
    if fn == "tan":
        sec2 = Bin("/", ONE, Bin("^", Call("cos", (u,)), Num(2.0)))
        return Bin("*", sec2, du)
    if fn == "exp":
        return Bin("*", e, du)
    if fn == "ln":
        return Bin("/", du, u)
    if fn == "sqrt":
        return Bin("/", du, Bin("*", Num(2.0), e))
    if fn == "atan":
        return Bin("/", du, Bin("+", ONE, Bin("*", u, u)))
    if fn == "atan2":
        a, b = args
        da, db = _diff(a, v), _diff(b, v)
        top = Bin("-", Bin("*", b, da), Bin("*", a, db))
        bottom = Bin("+", Bin("*", a, a), Bin("*", b, b))
        return Bin("/", top, bottom)
    if fn == "abs":
        return Bin("*", Call("sign", (u,)), du)
    if fn == "sign":
        return ZERO
    raise UnknownIdentifier(fn)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(e):
    if isinstance(e, Bin):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC["neg"]
    if isinstance(e, Num) and e.value < 0:
        return _PREC["neg"]
    return 9


def to_source(e):
    """Render to text accepted by :func:`parse_expression`."""
    match e:
        case Num(value=v):
            if v == int(v) and abs(v) < 1e16:
                return repr(int(v))
            return repr(v)
        case Var(name=name):
            return name
        case Neg(arg=a):
            inner = to_source(a)
            if _prec(a) < _PREC["neg"]:
                inner = f"({inner})"
            return f"-{inner}"
        case Bin(op=op, lhs=l, rhs=r):
            ls = to_source(l)
            rs = to_source(r)
            if op == "^":
                if _prec(l) <= _PREC["^"]:
                    ls = f"({ls})"
                if _prec(r) < _PREC["^"]:  # right-assoc; unary exponent ok
                    rs = f"({rs})"
            else:
                if _prec(l) < _PREC[op]:
                    ls = f"({ls})"
                if _prec(r) <= _PREC[op] and op in ("-", "/"):
                    rs = f"({rs})"
                elif _prec(r) < _PREC[op]:
                    rs = f"({rs})"
            return f"{ls} {op} {rs}" if op in "+-" else f"{ls}{op}{rs}"
        case Call(fn=fn, args=args):
            return f"{fn}({', '.join(to_source(a) for a in args)})"
    raise EvalError(f"cannot print {e!r}")


def is_constant(e):
    """True when the expression has no variable dependence."""
    match e:
        case Num():
            return True
        case Var():
            return False
        case Neg(arg=a):
            return is_constant(a)
        case Bin(lhs=l, rhs=r):
            return is_constant(l) and is_constant(r)
        case Call(args=args):
            return all(is_constant(a) for a in args)
    return False


# ---------------------------------------------------------------------------
# Manifold specification
# ---------------------------------------------------------------------------

class MetricKind(str, Enum):
    FINSLEROID = "finsleroid"
    RANDERS = "randers"
    RIEMANNIAN = "riemannian"


@dataclass(frozen=True)
class ManifoldSpec:
    """Expression-backed fields defining the space.

    ``a`` is the background Riemannian metric, ``btilde`` the covariant
    components of the unit axis field, ``g`` the charge, ``c`` the axis
    norm, and ``orientation`` picks the sense of the companion frame
    vector built from the axis.
    """

    a: tuple          # ((a11, a12), (a12, a22)) expressions
    btilde: tuple     # (b1, b2) expressions, covariant
    g: Expression
    c: Expression
    orientation: int
    metric_kind: MetricKind
    domain: tuple     # ((x1lo, x1hi), (x2lo, x2hi))
    name: str = ""

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise SchemaError("orientation must be +1 or -1")

    # -- conveniences ------------------------------------------------------
    @property
    def g_constant(self):
        return is_constant(self.g)

    @property
    def c_constant(self):
        return is_constant(self.c)

    def contains(self, x):
        (lo1, hi1), (lo2, hi2) = self.domain
        return lo1 <= x[0] <= hi1 and lo2 <= x[1] <= hi2

    def grid(self, n=11):
        (lo1, hi1), (lo2, hi2) = self.domain
        xs = np.linspace(lo1, hi1, n)
        ys = np.linspace(lo2, hi2, n)
        return [(float(u), float(v)) for u in xs for v in ys]

    def sample_x(self, rng, margin=0.02):
        (lo1, hi1), (lo2, hi2) = self.domain
        m1 = margin * (hi1 - lo1)
        m2 = margin * (hi2 - lo2)
        return (float(rng.uniform(lo1 + m1, hi1 - m1)),
                float(rng.uniform(lo2 + m2, hi2 - m2)))


def _parse_field(doc, key, arity, where):
    try:
        raw = doc[key]
    except KeyError:
        raise SchemaError(f"missing field {key!r}") from None
    if arity == 0:
        if not isinstance(raw, str):
            raise SchemaError(f"{where}: expected expression text")
        return parse_expression(raw)
    if not isinstance(raw, (list, tuple)) or len(raw) != arity:
        raise SchemaError(f"{where}: expected a list of {arity} entries")
    return raw


def load_manifold(doc, grid=11, tol=1e-9):
    """Build and validate a :class:`ManifoldSpec`.

    ``doc`` is a JSON document (text or already-decoded dict):

    ``{"domain": {"x1": [lo,hi], "x2": [lo,hi]}, "metric_kind": "...",``
    ``"a": [["e11","e12"],["e12","e22"]], "btilde": ["e1","e2"],``
    ``"g": "expr", "c": "expr", "orientation": 1}``

    Invariants (positive-definite metric, unit axis, parameter ranges)
    are checked on a ``grid``\\ ×\\ ``grid`` sample of the domain box;
    smoothness everywhere cannot be checked, so the grid is the stand-in.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("manifold document must be a JSON object")

    try:
        dom = doc["domain"]
        d1 = tuple(float(v) for v in dom["x1"])
        d2 = tuple(float(v) for v in dom["x2"])
    except (KeyError, TypeError, ValueError):
        raise SchemaError("domain must give x1 and x2 as [lo, hi]") from None
    if len(d1) != 2 or len(d2) != 2 or d1[0] >= d1[1] or d2[0] >= d2[1]:
        raise SchemaError("domain bounds must satisfy lo < hi")

    kind_raw = doc.get("metric_kind", "finsleroid")
    try:
        kind = MetricKind(kind_raw)
    except ValueError:
        raise SchemaError(f"unknown metric_kind {kind_raw!r}") from None

    a_rows = _parse_field(doc, "a", 2, "a")
    mat = []
    for r, row in enumerate(a_rows):
        if not isinstance(row, (list, tuple)) or len(row) != 2:
            raise SchemaError("a must be a 2x2 matrix of expressions")
        mat.append(tuple(parse_expression(s) for s in row))
    if mat[0][1] != mat[1][0]:
        raise SchemaError("a must be symmetric: a[0][1] and a[1][0] differ")
    a = (mat[0], mat[1])

    bt_raw = _parse_field(doc, "btilde", 2, "btilde")
    btilde = tuple(parse_expression(s) for s in bt_raw)

    g = parse_expression(doc.get("g", "0"))
    c = parse_expression(doc.get("c", "0.8"))
    orientation = int(doc.get("orientation", 1))
    if orientation not in (1, -1):
        raise SchemaError("orientation must be +1 or -1")

    spec = ManifoldSpec(a=a, btilde=btilde, g=g, c=c,
                        orientation=orientation, metric_kind=kind,
                        domain=(d1, d2), name=str(doc.get("name", "")))
    validate_spec(spec, grid=grid, tol=tol)
    return spec


def validate_spec(spec, grid=11, tol=1e-9):
    """Check the spec invariants on a sample grid; raise ValidationError."""
    fa = [[compile_expression(spec.a[i][j]) for j in range(2)]
          for i in range(2)]
    fb = [compile_expression(b) for b in spec.btilde]
    fg = compile_expression(spec.g)
    fc = compile_expression(spec.c)

    for x in spec.grid(grid):
        x1, x2 = x
        try:
            a11, a12, a22 = fa[0][0](x1, x2), fa[0][1](x1, x2), fa[1][1](x1, x2)
            b1, b2 = fb[0](x1, x2), fb[1](x1, x2)
            gv, cv = fg(x1, x2), fc(x1, x2)
        except EvalError as exc:
            raise ValidationError("field evaluation", x, str(exc)) from None
        det = a11 * a22 - a12 * a12
        if not (det > 0.0 and a11 + a22 > 0.0):
            raise ValidationError("a positive definite", x,
                                  f"det={det:.3e}, trace={a11 + a22:.3e}")
        # unit norm of the axis against the inverse metric
        norm2 = (a22 * b1 * b1 - 2.0 * a12 * b1 * b2 + a11 * b2 * b2) / det
        if abs(norm2 - 1.0) > tol:
            raise ValidationError("btilde unit norm", x,
                                  f"|btilde|^2 = {norm2:.12g}")
        if not (-2.0 < gv < 2.0):
            raise ValidationError("g range (-2, 2)", x, f"g = {gv:.6g}")
        if not (0.0 < cv < 1.0):
            raise ValidationError("c range (0, 1)", x, f"c = {cv:.6g}")
    return True
