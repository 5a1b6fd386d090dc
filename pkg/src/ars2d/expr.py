"""Scalar expressions in the variables x and y.

Small fixed grammar: literals, pi, x, y, the binary operators + - * / ^
(integer exponents only), unary minus and the functions sin, cos, exp,
sqrt, atan.  Expressions are immutable trees; parsing, printing,
evaluation and exact symbolic differentiation are provided, plus
compilation to fast scalar (math) and vectorized (numpy) callables.

The only simplification performed anywhere is constant folding through
the node constructors (literal arithmetic, and the 0/1 identities that
keep derivatives readable).  Derivative correctness is checked against
finite differences in the test suite, not by algebraic massaging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnknownIdentifierError

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Pi",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Call",
    "parse",
    "to_string",
    "evaluate",
    "differentiate",
    "compile_scalar",
    "compile_grid",
]

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "atan")
VARIABLES = ("x", "y")


@dataclass(frozen=True)
class Expr:
    """Base node; concrete nodes subclass this."""

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Pi(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


# ---------------------------------------------------------------------------
# Folding constructors.  Used by the parser and by differentiate(); they
# collapse literal arithmetic and the identities with 0 and 1 so that
# derivatives do not drown in x*0 terms.


def _is_num(e, value=None):
    return isinstance(e, Num) and (value is None or e.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_num(b) and b.value == 0.0:
        raise DomainError("division by literal zero", to_string(Div(a, b)))
    if _is_num(a) and _is_num(b):
        return Num(a.value / b.value)
    if _is_num(b, 1.0):
        return a
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if _is_num(a):
        return Num(-a.value)
    return Neg(a)


def powi(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return Num(1.0)
    if exponent == 1:
        return base
    if _is_num(base) and (base.value != 0.0 or exponent > 0):
        return Num(base.value ** exponent)
    return Pow(base, exponent)


def call(func: str, arg: Expr) -> Expr:
    return Call(func, arg)


# ---------------------------------------------------------------------------
# Tokenizer / recursive-descent parser


_SINGLE = {
    "+": "+",
    "-": "-",
    "−": "-",  # unicode minus, common in copied formulas
    "*": "*",
    "/": "/",
    "^": "^",
    "(": "(",
    ")": ")",
}


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _SINGLE:
            tokens.append((_SINGLE[c], None, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                seen_dot = seen_dot or text[j] == "."
                j += 1
            # optional exponent part: 1e-3
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            lit = text[i:j]
            try:
                value = float(lit)
            except ValueError:
                raise ExprSyntaxError(i, ("number",), "bad numeric literal %r at offset %d" % (lit, i))
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(i, ("expression",), "unexpected character %r at offset %d" % (c, i))
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok[0] != kind:
            raise ExprSyntaxError(tok[2], (kind,))
        return self.advance()

    def parse(self):
        e = self.expression()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(tok[2], ("operator", "end of input"))
        return e

    def expression(self):
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self):
        if self.peek()[0] == "-":
            self.advance()
            return neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.advance()
            sign = 1
            if self.peek()[0] == "-":
                self.advance()
                sign = -1
            tok = self.peek()
            if tok[0] != "num" or tok[1] != int(tok[1]):
                raise ExprSyntaxError(tok[2], ("integer exponent",))
            self.advance()
            return powi(base, sign * int(tok[1]))
        return base

    def atom(self):
        tok = self.peek()
        if tok[0] == "num":
            self.advance()
            return Num(tok[1])
        if tok[0] == "(":
            self.advance()
            e = self.expression()
            self.expect(")")
            return e
        if tok[0] == "ident":
            self.advance()
            name = tok[1]
            if name in VARIABLES:
                return Var(name)
            if name == "pi":
                return Pi()
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expression()
                self.expect(")")
                return call(name, arg)
            raise UnknownIdentifierError(tok[2], name)
        raise ExprSyntaxError(tok[2], ("expression",))


def parse(text: str) -> Expr:
    """Parse expression text into an Expr tree.

    Raises ExprSyntaxError (with byte offset and expected-token set) on
    malformed input, UnknownIdentifierError on names outside the grammar.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printer.  Emits text that reparses to the same tree; minimal parentheses.

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _prec(e):
    if isinstance(e, (Add, Sub)):
        return _PREC_ADD
    if isinstance(e, (Mul, Div)):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_string(e: Expr) -> str:
    def wrap(child, min_prec):
        s = to_string(child)
        if _prec(child) < min_prec:
            return "(" + s + ")"
        return s

    if isinstance(e, Num):
        if e.value < 0:
            return "(" + _fmt_num(e.value) + ")"
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Neg):
        return "-" + wrap(e.a, _PREC_NEG)
    if isinstance(e, Add):
        return wrap(e.a, _PREC_ADD) + " + " + wrap(e.b, _PREC_ADD + 1)
    if isinstance(e, Sub):
        return wrap(e.a, _PREC_ADD) + " - " + wrap(e.b, _PREC_ADD + 1)
    if isinstance(e, Mul):
        return wrap(e.a, _PREC_MUL) + "*" + wrap(e.b, _PREC_MUL + 1)
    if isinstance(e, Div):
        return wrap(e.a, _PREC_MUL) + "/" + wrap(e.b, _PREC_MUL + 1)
    if isinstance(e, Pow):
        base = wrap(e.base, _PREC_ATOM)
        if e.exponent < 0:
            return base + "^-" + str(-e.exponent)
        return base + "^" + str(e.exponent)
    if isinstance(e, Call):
        return e.func + "(" + to_string(e.arg) + ")"
    raise TypeError("not an Expr: %r" % (e,))


# ---------------------------------------------------------------------------
# Evaluation


def evaluate(e: Expr, x: float, y: float) -> float:
    """Evaluate at a point; raises DomainError outside the domain,
    reporting the offending subexpression."""

    def ev(node):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return x if node.name == "x" else y
        if isinstance(node, Pi):
            return math.pi
        if isinstance(node, Neg):
            return -ev(node.a)
        if isinstance(node, Add):
            return ev(node.a) + ev(node.b)
        if isinstance(node, Sub):
            return ev(node.a) - ev(node.b)
        if isinstance(node, Mul):
            return ev(node.a) * ev(node.b)
        if isinstance(node, Div):
            denom = ev(node.b)
            if denom == 0.0:
                raise DomainError("division by zero", to_string(node), (x, y))
            return ev(node.a) / denom
        if isinstance(node, Pow):
            base = ev(node.base)
            if base == 0.0 and node.exponent < 0:
                raise DomainError("zero base with negative exponent", to_string(node), (x, y))
            try:
                return base ** node.exponent
            except OverflowError:
                raise DomainError("overflow", to_string(node), (x, y))
        if isinstance(node, Call):
            arg = ev(node.arg)
            if node.func == "sqrt":
                if arg < 0.0:
                    raise DomainError("sqrt of negative value", to_string(node), (x, y))
                return math.sqrt(arg)
            try:
                return getattr(math, node.func)(arg)
            except OverflowError:
                raise DomainError("overflow", to_string(node), (x, y))
        raise TypeError("not an Expr: %r" % (node,))

    return ev(e)


# ---------------------------------------------------------------------------
# Compilation.  The printed form is a valid Python expression modulo ^, so
# code generation is a small tree walk; compiled callables are cached on
# the printed form.


def _emit(e, ns):
    if isinstance(e, Num):
        return "(" + repr(e.value) + ")"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Pi):
        return "(%s.pi)" % ns
    if isinstance(e, Neg):
        return "(-%s)" % _emit(e.a, ns)
    if isinstance(e, Add):
        return "(%s + %s)" % (_emit(e.a, ns), _emit(e.b, ns))
    if isinstance(e, Sub):
        return "(%s - %s)" % (_emit(e.a, ns), _emit(e.b, ns))
    if isinstance(e, Mul):
        return "(%s * %s)" % (_emit(e.a, ns), _emit(e.b, ns))
    if isinstance(e, Div):
        return "(%s / %s)" % (_emit(e.a, ns), _emit(e.b, ns))
    if isinstance(e, Pow):
        return "(%s ** %d)" % (_emit(e.base, ns), e.exponent)
    if isinstance(e, Call):
        return "(%s.%s(%s))" % (ns, e.func, _emit(e.arg, ns))
    raise TypeError("not an Expr: %r" % (e,))


_scalar_cache: dict = {}
_grid_cache: dict = {}


def compile_scalar(e: Expr):
    """Compile to a fast float callable f(x, y) built on math.*.

    No domain diagnostics: intended for hot loops on points already known
    to be inside the domain (use evaluate() when errors matter).
    """
    key = to_string(e)
    fn = _scalar_cache.get(key)
    if fn is None:
        src = "lambda x, y: " + _emit(e, "math")
        fn = eval(src, {"math": math})
        _scalar_cache[key] = fn
    return fn


def compile_grid(e: Expr):
    """Compile to a vectorized callable f(x, y) on numpy arrays.

    Always returns an array broadcast to the input shape; invalid points
    yield inf/nan (numpy semantics), they are not raised.
    """
    key = to_string(e)
    fn = _grid_cache.get(key)
    if fn is None:
        src = "lambda x, y: " + _emit(e, "np")
        raw = eval(src, {"np": _NP_NAMESPACE})

        def fn(x, y, _raw=raw):
            with np.errstate(all="ignore"):
                out = _raw(np.asarray(x, float), np.asarray(y, float))
            if np.ndim(out) == 0:
                out = np.full(np.shape(x), float(out))
            return out

        _grid_cache[key] = fn
    return fn


class _NumpyFuncs:
    """Namespace adapter so generated code can say np.sin / np.atan / np.pi."""

    pi = np.pi
    sin = staticmethod(np.sin)
    cos = staticmethod(np.cos)
    exp = staticmethod(np.exp)
    sqrt = staticmethod(np.sqrt)
    atan = staticmethod(np.arctan)


_NP_NAMESPACE = _NumpyFuncs


# ---------------------------------------------------------------------------
# Differentiation

_D_TABLE = {
    "sin": lambda u, du: mul(call("cos", u), du),
    "cos": lambda u, du: neg(mul(call("sin", u), du)),
    "exp": lambda u, du: mul(call("exp", u), du),
    "sqrt": lambda u, du: div(du, mul(Num(2.0), call("sqrt", u))),
    "atan": lambda u, du: div(du, add(Num(1.0), powi(u, 2))),
}


def differentiate(e: Expr, var: str) -> Expr:
    """Exact symbolic partial derivative with respect to 'x' or 'y'."""
    if var not in VARIABLES:
        raise ValueError("var must be 'x' or 'y', got %r" % (var,))
    if isinstance(e, (Num, Pi)):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0) if e.name == var else Num(0.0)
    if isinstance(e, Neg):
        return neg(differentiate(e.a, var))
    if isinstance(e, Add):
        return add(differentiate(e.a, var), differentiate(e.b, var))
    if isinstance(e, Sub):
        return sub(differentiate(e.a, var), differentiate(e.b, var))
    if isinstance(e, Mul):
        return add(
            mul(differentiate(e.a, var), e.b),
            mul(e.a, differentiate(e.b, var)),
        )
    if isinstance(e, Div):
        return div(
            sub(
                mul(differentiate(e.a, var), e.b),
                mul(e.a, differentiate(e.b, var)),
            ),
            powi(e.b, 2),
        )
    if isinstance(e, Pow):
        du = differentiate(e.base, var)
        return mul(mul(Num(float(e.exponent)), powi(e.base, e.exponent - 1)), du)
    if isinstance(e, Call):
        return _D_TABLE[e.func](e.arg, differentiate(e.arg, var))
    raise TypeError("not an Expr: %r" % (e,))
