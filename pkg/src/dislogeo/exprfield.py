"""Closed-form scalar fields over Lagrange coordinates.

Expressions are parsed into an immutable AST that can be evaluated on numpy
arrays (one call evaluates a whole batch of points) and differentiated
symbolically.  Vector fields are triples of expressions; the Lie bracket is
formed symbolically.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?
    atom   := number | ident | '(' expr ')' | func '(' expr ')'
    func   := sin | cos | tan | exp | log | sqrt | tanh
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EvaluationError, ExpressionSyntaxError, UnknownIdentifier

COORDS = ("X1", "X2", "X3")
FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh")
CONSTANTS = {"pi": math.pi}


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


class Node:
    __slots__ = ("_dcache", "_free")
    prec = 5

    def __init__(self):
        self._dcache = {}
        self._free = None

    def children(self):
        return ()

    @property
    def free_vars(self) -> frozenset:
        if self._free is None:
            out = frozenset()
            for c in self.children():
                out |= c.free_vars
            self._free = out
        return self._free

    def diff(self, var: str) -> "Node":
        if var not in self.free_vars:
            return ZERO
        try:
            return self._dcache[var]
        except KeyError:
            d = self._diff(var)
            self._dcache[var] = d
            return d

    def count(self) -> int:
        return 1 + sum(c.count() for c in self.children())

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"{type(self).__name__}<{self.to_str()}>"


class Const(Node):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = float(value)
        self._free = frozenset()

    @property
    def prec(self):
        return 3 if self.value < 0 or str(self.value).startswith("-") else 5

    def _diff(self, var):
        return ZERO

    def _eval(self, env, cache):
        return self.value

    def to_str(self):
        v = self.value
        if v.is_integer() and abs(v) < 1e15:
            return str(int(v)) if v != 0 or math.copysign(1, v) > 0 else "0"
        return repr(v)

    def substitute(self, mapping):
        return self


class Param(Node):
    """Named constant; printed by name so parameters survive a round trip."""

    __slots__ = ("name", "value")

    def __init__(self, name, value):
        super().__init__()
        self.name = name
        self.value = float(value)
        self._free = frozenset()

    def _diff(self, var):
        return ZERO

    def _eval(self, env, cache):
        return self.value

    def to_str(self):
        return self.name

    def substitute(self, mapping):
        return self


class Var(Node):
    __slots__ = ("name",)

    def __init__(self, name):
        super().__init__()
        self.name = name
        self._free = frozenset((name,))

    def _diff(self, var):
        return ONE if var == self.name else ZERO

    def _eval(self, env, cache):
        try:
            return env[self.name]
        except KeyError:
            raise EvaluationError(f"no value supplied for variable {self.name!r}") from None

    def to_str(self):
        return self.name

    def substitute(self, mapping):
        return mapping.get(self.name, self)


class Neg(Node):
    __slots__ = ("arg",)
    prec = 3

    def __init__(self, arg):
        super().__init__()
        self.arg = arg

    def children(self):
        return (self.arg,)

    def _diff(self, var):
        return neg(self.arg.diff(var))

    def _eval(self, env, cache):
        return -_ev(self.arg, env, cache)

    def to_str(self):
        return "-" + _wrap(self.arg, 3)

    def substitute(self, mapping):
        return neg(self.arg.substitute(mapping))


class Binary(Node):
    __slots__ = ("left", "right")
    symbol = "?"

    def __init__(self, left, right):
        super().__init__()
        self.left = left
        self.right = right

    def children(self):
        return (self.left, self.right)

    def to_str(self):
        # right operand at equal precedence is always parenthesised so the
        # printed form re-parses to the same tree
        return f"{_wrap(self.left, self.prec)} {self.symbol} {_wrap(self.right, self.prec + 1)}"

    def substitute(self, mapping):
        return _BUILD[type(self)](self.left.substitute(mapping), self.right.substitute(mapping))


class Add(Binary):
    __slots__ = ()
    prec = 1
    symbol = "+"

    def _diff(self, var):
        return add(self.left.diff(var), self.right.diff(var))

    def _eval(self, env, cache):
        return _ev(self.left, env, cache) + _ev(self.right, env, cache)


class Sub(Binary):
    __slots__ = ()
    prec = 1
    symbol = "-"

    def _diff(self, var):
        return sub(self.left.diff(var), self.right.diff(var))

    def _eval(self, env, cache):
        return _ev(self.left, env, cache) - _ev(self.right, env, cache)


class Mul(Binary):
    __slots__ = ()
    prec = 2
    symbol = "*"

    def _diff(self, var):
        f, g = self.left, self.right
        return add(mul(f.diff(var), g), mul(f, g.diff(var)))

    def _eval(self, env, cache):
        return _ev(self.left, env, cache) * _ev(self.right, env, cache)


class Div(Binary):
    __slots__ = ()
    prec = 2
    symbol = "/"

    def _diff(self, var):
        f, g = self.left, self.right
        df, dg = f.diff(var), g.diff(var)
        if dg is ZERO:
            return div(df, g)
        return div(sub(mul(df, g), mul(f, dg)), power(g, TWO))

    def _eval(self, env, cache):
        num = _ev(self.left, env, cache)
        den = _ev(self.right, env, cache)
        if np.any(np.asarray(den) == 0):
            raise EvaluationError(f"division by zero in {self.to_str()}")
        return num / den


class Pow(Binary):
    __slots__ = ()
    prec = 4
    symbol = "^"

    def to_str(self):
        return f"{_wrap(self.left, 5)}^{_wrap(self.right, 3)}"

    def _diff(self, var):
        f, g = self.left, self.right
        df = f.diff(var)
        if var not in g.free_vars:
            if isinstance(g, Const):
                lowered = Const(g.value - 1.0)
            else:
                lowered = sub(g, ONE)
            return mul(mul(g, power(f, lowered)), df)
        # general case f^g = exp(g log f), requires f > 0
        dg = g.diff(var)
        inner = add(mul(dg, call("log", f)), div(mul(g, df), f))
        return mul(self, inner)

    def _eval(self, env, cache):
        b = _ev(self.left, env, cache)
        e = _ev(self.right, env, cache)
        ba, ea = np.asarray(b, dtype=float), np.asarray(e, dtype=float)
        if np.any((ba == 0) & (ea < 0)):
            raise EvaluationError(f"zero raised to a negative power in {self.to_str()}")
        if np.any((ba < 0) & (ea != np.round(ea))):
            raise EvaluationError(f"negative base with non-integer exponent in {self.to_str()}")
        with np.errstate(all="ignore"):
            return np.power(b, e)


def _check_log(x, node):
    if np.any(np.asarray(x) <= 0):
        raise EvaluationError(f"log of nonpositive value in {node.to_str()}")


def _check_sqrt(x, node):
    if np.any(np.asarray(x) < 0):
        raise EvaluationError(f"sqrt of negative value in {node.to_str()}")


_NUMPY_FUNC = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
}
_DOMAIN_CHECK = {"log": _check_log, "sqrt": _check_sqrt}


class Call(Node):
    __slots__ = ("func", "arg")

    def __init__(self, func, arg):
        super().__init__()
        if func not in _NUMPY_FUNC:
            raise UnknownIdentifier(func)
        self.func = func
        self.arg = arg

    def children(self):
        return (self.arg,)

    def _diff(self, var):
        f = self.arg
        df = f.diff(var)
        name = self.func
        if name == "sin":
            outer = call("cos", f)
        elif name == "cos":
            outer = neg(call("sin", f))
        elif name == "tan":
            outer = add(ONE, power(self, TWO))
        elif name == "exp":
            outer = self
        elif name == "log":
            return div(df, f)
        elif name == "sqrt":
            return div(df, mul(TWO, self))
        else:  # tanh
            outer = sub(ONE, power(self, TWO))
        return mul(outer, df)

    def _eval(self, env, cache):
        x = _ev(self.arg, env, cache)
        check = _DOMAIN_CHECK.get(self.func)
        if check is not None:
            check(x, self)
        with np.errstate(all="ignore"):
            return _NUMPY_FUNC[self.func](x)

    def to_str(self):
        return f"{self.func}({self.arg.to_str()})"

    def substitute(self, mapping):
        return call(self.func, self.arg.substitute(mapping))


def _wrap(node, min_prec):
    s = node.to_str()
    return s if node.prec >= min_prec else f"({s})"


def _ev(node, env, cache):
    key = id(node)
    try:
        return cache[key]
    except KeyError:
        val = node._eval(env, cache)
        cache[key] = val
        return val


ZERO = Const(0.0)
ONE = Const(1.0)
TWO = Const(2.0)


# smart constructors: constant folding and the trivial identities only


def _c(node):
    return node.value if isinstance(node, Const) else None


def add(a, b):
    ca, cb = _c(a), _c(b)
    if ca == 0:
        return b
    if cb == 0:
        return a
    if ca is not None and cb is not None:
        return Const(ca + cb)
    return Add(a, b)


def sub(a, b):
    ca, cb = _c(a), _c(b)
    if cb == 0:
        return a
    if ca == 0:
        return neg(b)
    if ca is not None and cb is not None:
        return Const(ca - cb)
    return Sub(a, b)


def mul(a, b):
    ca, cb = _c(a), _c(b)
    if ca == 0 or cb == 0:
        return ZERO
    if ca == 1:
        return b
    if cb == 1:
        return a
    if ca == -1:
        return neg(b)
    if cb == -1:
        return neg(a)
    if ca is not None and cb is not None:
        return Const(ca * cb)
    return Mul(a, b)


def div(a, b):
    ca, cb = _c(a), _c(b)
    if ca == 0 and cb != 0:
        return ZERO
    if cb == 1:
        return a
    if ca is not None and cb is not None and cb != 0:
        return Const(ca / cb)
    return Div(a, b)


def power(a, b):
    ca, cb = _c(a), _c(b)
    if cb == 0:
        return ONE
    if cb == 1:
        return a
    if ca is not None and cb is not None:
        try:
            v = ca**cb
        except (ZeroDivisionError, OverflowError):
            v = None
        if isinstance(v, float) and math.isfinite(v):
            return Const(v)
    return Pow(a, b)


def neg(a):
    if isinstance(a, Const):
        return Const(-a.value) if a.value != 0 else ZERO
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def call(func, a):
    if isinstance(a, Const):
        try:
            v = float(_NUMPY_FUNC[func](a.value)) if _domain_ok(func, a.value) else None
        except (OverflowError, ValueError):
            v = None
        if v is not None and math.isfinite(v):
            return Const(v)
    return Call(func, a)


def _domain_ok(func, x):
    if func == "log":
        return x > 0
    if func == "sqrt":
        return x >= 0
    return True


_BUILD = {Add: add, Sub: sub, Mul: mul, Div: div, Pow: power}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, params, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.params = params
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ExpressionSyntaxError(message, tok[2], self.text)

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] != "op":
            found = tok[1] or "end of input"
            raise self.error(f"expected {value!r}, found {found!r}", tok)

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            inner = self.unary()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Neg(inner)
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Pow(base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, value, pos = tok
        if kind == "num":
            return Const(float(value))
        if kind == "ident":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if value not in FUNCTIONS:
                    raise UnknownIdentifier(value, pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value in FUNCTIONS:
                raise self.error(f"function {value!r} requires an argument", nxt)
            if value in self.variables:
                return Var(value)
            if value in self.params:
                return Param(value, self.params[value])
            if value in CONSTANTS:
                return Const(CONSTANTS[value])
            raise UnknownIdentifier(value, pos)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = value or "end of input"
        raise self.error(f"unexpected {found!r}", tok)


# ---------------------------------------------------------------------------
# Public types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Point:
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        for v in (self.x1, self.x2, self.x3):
            if not math.isfinite(v):
                raise ValueError(f"non-finite coordinate in {self}")

    def as_array(self):
        return np.array([self.x1, self.x2, self.x3], dtype=float)

    def __iter__(self):
        return iter((self.x1, self.x2, self.x3))


@dataclass(frozen=True)
class BoxDomain:
    lo: Point
    hi: Point

    def __post_init__(self):
        if not all(a < b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"box corners must satisfy lo < hi componentwise, got {self.lo}, {self.hi}")

    @classmethod
    def from_bounds(cls, lo, hi):
        return cls(Point(*map(float, lo)), Point(*map(float, hi)))

    @classmethod
    def unit(cls):
        return cls.from_bounds((0, 0, 0), (1, 1, 1))

    @property
    def lo_array(self):
        return self.lo.as_array()

    @property
    def hi_array(self):
        return self.hi.as_array()

    def contains(self, points, tol=1e-12):
        X = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((X >= self.lo_array - tol) & (X <= self.hi_array + tol), axis=1)

    def sample(self, n, rng):
        return self.lo_array + (self.hi_array - self.lo_array) * rng.random((n, 3))

    def grid(self, n):
        """Tensor grid with ``n`` points per axis (endpoints included), X1 slowest."""
        axes = [np.linspace(a, b, n) if n > 1 else np.array([(a + b) / 2]) for a, b in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def as_points(p, dim=3):
    """Coerce ``p`` to an ``(N, dim)`` array; also report whether it was a single point."""
    if isinstance(p, Point):
        return p.as_array()[None, :dim], True
    X = np.asarray(p, dtype=float)
    if X.ndim == 1:
        if X.shape[0] != dim:
            raise ValueError(f"expected a point with {dim} coordinates, got shape {X.shape}")
        return X[None, :], True
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"expected points of shape (N, {dim}), got {X.shape}")
    return X, False


class ExpressionField:
    """A parsed scalar field in the variables ``variables`` (default X1, X2, X3).

    Immutable; evaluation is pure and accepts scalars or numpy arrays.
    """

    __slots__ = ("tree", "variables")

    def __init__(self, tree: Node, variables: Sequence[str] = COORDS):
        object.__setattr__(self, "tree", tree)
        object.__setattr__(self, "variables", tuple(variables))

    def __setattr__(self, key, value):
        raise AttributeError("ExpressionField is immutable")

    @classmethod
    def constant(cls, value, variables=COORDS):
        return cls(Const(value), variables)

    @classmethod
    def variable(cls, name, variables=COORDS):
        return cls(Var(name), variables)

    def __call__(self, *args):
        if len(args) != len(self.variables):
            raise TypeError(f"expected {len(self.variables)} arguments ({', '.join(self.variables)}), got {len(args)}")
        env = dict(zip(self.variables, args))
        shape = np.broadcast_shapes(*(np.shape(a) for a in args))
        with np.errstate(all="ignore"):
            val = _ev(self.tree, env, {})
        val = np.asarray(val, dtype=float)
        if not np.all(np.isfinite(val)):
            raise EvaluationError(f"non-finite value evaluating {self.tree.to_str()}")
        if shape == ():
            return float(val)
        return np.broadcast_to(val, shape).copy() if val.shape != shape else val

    def at(self, points):
        """Evaluate at an ``(N, d)`` array (or a single point)."""
        X, single = as_points(points, len(self.variables))
        out = self(*X.T)
        return float(out[0]) if single else out

    def diff(self, axis) -> "ExpressionField":
        return ExpressionField(self.tree.diff(self._var(axis)), self.variables)

    def _var(self, axis):
        if isinstance(axis, str):
            if axis not in self.variables:
                raise ValueError(f"{axis!r} is not a variable of this field")
            return axis
        if not 1 <= axis <= len(self.variables):
            raise ValueError(f"axis must be in 1..{len(self.variables)}, got {axis}")
        return self.variables[axis - 1]

    def depends_on(self, var) -> bool:
        return self._var(var) in self.tree.free_vars

    def substitute(self, variables=None, **values) -> "ExpressionField":
        """Replace variables by numbers or other fields' trees."""
        mapping = {}
        for k, v in values.items():
            mapping[k] = v.tree if isinstance(v, ExpressionField) else (v if isinstance(v, Node) else Const(v))
        return ExpressionField(self.tree.substitute(mapping), variables or self.variables)

    def with_variables(self, variables) -> "ExpressionField":
        return ExpressionField(self.tree, variables)

    @property
    def is_zero(self):
        return isinstance(self.tree, Const) and self.tree.value == 0

    def __str__(self):
        return self.tree.to_str()

    def __repr__(self):
        return f"ExpressionField({self.tree.to_str()!r})"

    # arithmetic for assembling fields programmatically
    def _lift(self, other):
        if isinstance(other, ExpressionField):
            return other.tree
        if isinstance(other, Node):
            return other
        return Const(other)

    def __add__(self, other):
        return ExpressionField(add(self.tree, self._lift(other)), self.variables)

    __radd__ = __add__

    def __sub__(self, other):
        return ExpressionField(sub(self.tree, self._lift(other)), self.variables)

    def __rsub__(self, other):
        return ExpressionField(sub(self._lift(other), self.tree), self.variables)

    def __mul__(self, other):
        return ExpressionField(mul(self.tree, self._lift(other)), self.variables)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ExpressionField(div(self.tree, self._lift(other)), self.variables)

    def __rtruediv__(self, other):
        return ExpressionField(div(self._lift(other), self.tree), self.variables)

    def __pow__(self, other):
        return ExpressionField(power(self.tree, self._lift(other)), self.variables)

    def __neg__(self):
        return ExpressionField(neg(self.tree), self.variables)

    def apply(self, func: str) -> "ExpressionField":
        return ExpressionField(call(func, self.tree), self.variables)


def parse_expression(text: str, params: Mapping[str, float] | None = None, variables: Sequence[str] = COORDS) -> ExpressionField:
    """Parse ``text`` into an :class:`ExpressionField`.

    Identifiers must be one of ``variables``, a key of ``params``, a function
    name followed by ``(``, or the built-in constant ``pi``.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0, text if isinstance(text, str) else "")
    params = dict(params or {})
    for name in params:
        if name in variables or name in FUNCTIONS:
            raise UnknownIdentifier(f"{name} (parameter name clashes with a variable or function)")
    tree = _Parser(text, params, tuple(variables)).parse()
    return ExpressionField(tree, variables)


def field(value, params=None, variables=COORDS) -> ExpressionField:
    """Coerce a string, number or field to an :class:`ExpressionField`."""
    if isinstance(value, ExpressionField):
        return value
    if isinstance(value, (int, float)):
        return ExpressionField.constant(value, variables)
    return parse_expression(str(value), params, variables)


def differentiate(f: ExpressionField, axis) -> ExpressionField:
    return f.diff(axis)


class VectorField:
    """Contravariant vector field with expression components in the coordinate basis."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence[ExpressionField]):
        comps = tuple(components)
        if not comps:
            raise ValueError("a vector field needs at least one component")
        variables = comps[0].variables
        if len(variables) != len(comps):
            raise ValueError(f"{len(comps)} components but {len(variables)} coordinates")
        if any(c.variables != variables for c in comps):
            raise ValueError("all components must share the same coordinates")
        object.__setattr__(self, "components", comps)

    def __setattr__(self, key, value):
        raise AttributeError("VectorField is immutable")

    @classmethod
    def parse(cls, texts, params=None, variables=COORDS):
        return cls([field(t, params, variables) for t in texts])

    @classmethod
    def coordinate(cls, axis, dim=3):
        variables = COORDS[:dim]
        return cls([ExpressionField.constant(1.0 if i == axis - 1 else 0.0, variables) for i in range(dim)])

    @property
    def dim(self):
        return len(self.components)

    @property
    def variables(self):
        return self.components[0].variables

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __call__(self, points):
        """Components at ``points``; shape (dim,) for a single point or (N, dim)."""
        X, single = as_points(points, self.dim)
        out = np.stack([c(*X.T) for c in self.components], axis=1)
        return out[0] if single else out

    def jacobian(self, points):
        """``J[..., A, B] = d v^A / d X^B``."""
        X, single = as_points(points, self.dim)
        n = self.dim
        J = np.empty((X.shape[0], n, n))
        for a, comp in enumerate(self.components):
            for b in range(n):
                J[:, a, b] = comp.diff(b + 1)(*X.T)
        return J[0] if single else J

    def scaled(self, f: ExpressionField) -> "VectorField":
        return VectorField([c * f for c in self.components])

    def __add__(self, other):
        return VectorField([a + b for a, b in zip(self.components, other.components)])

    def __neg__(self):
        return VectorField([-c for c in self.components])

    def __repr__(self):
        return "VectorField(" + ", ".join(str(c) for c in self.components) + ")"


def lie_bracket(u: VectorField, v: VectorField) -> VectorField:
    """``[u, v]^A = u^B d_B v^A - v^B d_B u^A`` as symbolic expressions."""
    if u.dim != v.dim:
        raise ValueError("vector fields of different dimension")
    n = u.dim
    out = []
    for A in range(n):
        acc = ZERO
        for B in range(n):
            acc = add(acc, mul(u[B].tree, v[A].diff(B + 1).tree))
            acc = sub(acc, mul(v[B].tree, u[A].diff(B + 1).tree))
        out.append(ExpressionField(acc, u.variables))
    return VectorField(out)


def jacobi_residual(u: VectorField, v: VectorField, w: VectorField, p) -> np.ndarray:
    """``[u,[v,w]] + [v,[w,u]] + [w,[u,v]]`` evaluated at ``p``; identically zero."""
    total = lie_bracket(u, lie_bracket(v, w)) + lie_bracket(v, lie_bracket(w, u)) + lie_bracket(w, lie_bracket(u, v))
    return total(p)
