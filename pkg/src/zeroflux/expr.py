"""Safe closed-form expressions used for fluxes, diffusion and data.

A small grammar over numbers, the variables a caller allows (``u``, ``x``,
``y``, ``s``), the constants ``pi`` and ``e``, the operators
``+ - * / ^`` and a fixed set of elementwise functions::

    max(a, b, ...)  min(a, b, ...)  abs  sqrt  exp  log  sin  cos  tanh
    pos(z)          positive part max(z, 0)
    step(z)         1 for z >= 0, else 0
    ind(z, lo, hi)  1 on the closed interval [lo, hi], else 0

Strings are parsed with :mod:`ast` and walked into numpy closures; nothing is
ever passed to ``eval``.  Each expression also carries a forward-mode
derivative.  At kinks it returns the right derivative: ``pos(u - 0.6)`` has
slope 1 at ``u = 0.6``.
"""

import ast
import math

import numpy as np

from .errors import ExpressionError


def _vmax(*args):
    out = args[0]
    for a in args[1:]:
        out = np.maximum(out, a)
    return out


def _vmin(*args):
    out = args[0]
    for a in args[1:]:
        out = np.minimum(out, a)
    return out


_FUNCTIONS = {
    "max": (_vmax, None),
    "min": (_vmin, None),
    "abs": (np.abs, 1),
    "sqrt": (np.sqrt, 1),
    "exp": (np.exp, 1),
    "log": (np.log, 1),
    "sin": (np.sin, 1),
    "cos": (np.cos, 1),
    "tanh": (np.tanh, 1),
    "pos": (lambda z: np.maximum(z, 0.0), 1),
    "step": (lambda z: np.where(z >= 0.0, 1.0, 0.0), 1),
    "ind": (lambda z, lo, hi: np.where((z >= lo) & (z <= hi), 1.0, 0.0), 3),
}

_CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def _compile(node, variables, source):
    if isinstance(node, ast.Expression):
        return _compile(node.body, variables, source)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        value = float(node.value)
        return lambda env: value
    if isinstance(node, ast.Name):
        name = node.id
        if name in variables:
            return lambda env: env[name]
        if name in _CONSTANTS:
            value = _CONSTANTS[name]
            return lambda env: value
        raise ExpressionError(f"unknown name {name!r} in {source!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand, variables, source)
        if isinstance(node.op, ast.USub):
            return lambda env: np.negative(inner(env))
        return inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left = _compile(node.left, variables, source)
        right = _compile(node.right, variables, source)
        return lambda env: op(left(env), right(env))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        if name not in _FUNCTIONS:
            raise ExpressionError(f"unknown function {name!r} in {source!r}")
        fn, arity = _FUNCTIONS[name]
        if arity is not None and len(node.args) != arity:
            raise ExpressionError(f"{name} takes {arity} argument(s) in {source!r}")
        if arity is None and len(node.args) < 1:
            raise ExpressionError(f"{name} needs at least one argument in {source!r}")
        args = [_compile(a, variables, source) for a in node.args]
        return lambda env: fn(*(a(env) for a in args))
    raise ExpressionError(f"unsupported syntax {type(node).__name__} in {source!r}")


def _tie_max(a, b):
    (va, da), (vb, db) = a, b
    return np.maximum(va, vb), np.where(va > vb, da, np.where(vb > va, db, np.maximum(da, db)))


def _tie_min(a, b):
    (va, da), (vb, db) = a, b
    return np.minimum(va, vb), np.where(va < vb, da, np.where(vb < va, db, np.minimum(da, db)))


def _fold(pick):
    def fn(*args):
        out = args[0]
        for a in args[1:]:
            out = pick(out, a)
        return out
    return fn


def _zero_slope(fn):
    def dual(*args):
        v = fn(*(a[0] for a in args))
        return v, np.zeros_like(np.asarray(v, dtype=float))
    return dual


def _unary(value, slope):
    def dual(z):
        v, d = z
        return value(v), slope(v) * d
    return dual


def _abs_dual(z):
    v, d = z
    return np.abs(v), np.where(v > 0, d, np.where(v < 0, -d, np.abs(d)))


def _pos_dual(z):
    v, d = z
    return np.maximum(v, 0.0), np.where(v > 0, d, np.where(v < 0, 0.0, np.maximum(d, 0.0)))


_DUALS = {
    "max": _fold(_tie_max),
    "min": _fold(_tie_min),
    "abs": _abs_dual,
    "sqrt": _unary(np.sqrt, lambda v: 0.5 / np.sqrt(v)),
    "exp": _unary(np.exp, np.exp),
    "log": _unary(np.log, lambda v: 1.0 / v),
    "sin": _unary(np.sin, np.cos),
    "cos": _unary(np.cos, lambda v: -np.sin(v)),
    "tanh": _unary(np.tanh, lambda v: 1.0 - np.tanh(v) ** 2),
    "pos": _pos_dual,
    "step": _zero_slope(_FUNCTIONS["step"][0]),
    "ind": _zero_slope(_FUNCTIONS["ind"][0]),
}


def _dual_binop(op, left, right, const_exponent):
    def fn(env):
        (a, da), (b, db) = left(env), right(env)
        if op is ast.Add:
            return a + b, da + db
        if op is ast.Sub:
            return a - b, da - db
        if op is ast.Mult:
            return a * b, da * b + a * db
        if op is ast.Div:
            return a / b, (da * b - a * db) / (b * b)
        if const_exponent is not None:
            p = const_exponent
            if p == 0.0:
                return np.ones_like(np.asarray(a, dtype=float)), np.zeros_like(np.asarray(a, dtype=float))
            return np.power(a, p), p * np.power(a, p - 1.0) * da
        v = np.power(a, b)
        return v, v * (db * np.log(a) + b * da / a)
    return fn


def _compile_dual(node, variables, wrt):
    """Forward-mode derivative closure: env -> (value, d value / d wrt)."""
    if isinstance(node, ast.Expression):
        return _compile_dual(node.body, variables, wrt)
    if isinstance(node, ast.Constant):
        value = float(node.value)
        return lambda env: (value, 0.0)
    if isinstance(node, ast.Name):
        name = node.id
        if name in variables:
            seed = 1.0 if name == wrt else 0.0
            return lambda env: (env[name], seed)
        value = _CONSTANTS[name]
        return lambda env: (value, 0.0)
    if isinstance(node, ast.UnaryOp):
        inner = _compile_dual(node.operand, variables, wrt)
        if isinstance(node.op, ast.USub):
            def neg(env):
                v, d = inner(env)
                return np.negative(v), np.negative(d)
            return neg
        return inner
    if isinstance(node, ast.BinOp):
        left = _compile_dual(node.left, variables, wrt)
        right = _compile_dual(node.right, variables, wrt)
        exponent = None
        if isinstance(node.op, ast.Pow):
            r = node.right
            if isinstance(r, ast.UnaryOp) and isinstance(r.op, ast.USub) \
                    and isinstance(r.operand, ast.Constant):
                exponent = -float(r.operand.value)
            elif isinstance(r, ast.Constant):
                exponent = float(r.value)
        return _dual_binop(type(node.op), left, right, exponent)
    args = [_compile_dual(a, variables, wrt) for a in node.args]
    fn = _DUALS[node.func.id]
    return lambda env: fn(*(a(env) for a in args))


class Expression:
    """A parsed expression, callable with keyword arrays.

    >>> Expression("u*(1-u)", ("u",))(u=np.array([0.5]))
    array([0.25])

    Instances pickle by source text, so models built from expressions can
    cross process boundaries.
    """

    def __init__(self, source, variables=("u",)):
        if not isinstance(source, str):
            source = repr(float(source))
        self.source = source.strip()
        self.variables = tuple(variables)
        if not self.source:
            raise ExpressionError("empty expression")
        try:
            tree = ast.parse(self.source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.source!r}: {exc.msg}") from None
        self._fn = _compile(tree, self.variables, self.source)
        self._tree = tree
        self._duals = {}

    def __call__(self, **values):
        missing = [v for v in self.variables if v not in values]
        if missing:
            raise ExpressionError(f"missing variable(s) {missing} for {self.source!r}")
        arrays = {k: np.asarray(v, dtype=float) for k, v in values.items()}
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
        with np.errstate(all="ignore"):
            out = self._fn(arrays)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def derivative(self, wrt, **values):
        """Partial derivative with respect to ``wrt`` (right derivative at kinks)."""
        if wrt not in self._duals:
            self._duals[wrt] = _compile_dual(self._tree, self.variables, wrt)
        arrays = {k: np.asarray(v, dtype=float) for k, v in values.items()}
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
        with np.errstate(all="ignore"):
            _, d = self._duals[wrt](arrays)
        return np.broadcast_to(np.asarray(d, dtype=float), shape).copy()

    def __reduce__(self):
        return (Expression, (self.source, self.variables))

    def __repr__(self):
        return f"Expression({self.source!r})"


class StateFunction:
    """Scalar function of the state ``u`` backed by an :class:`Expression`."""

    def __init__(self, source):
        self.expr = source if isinstance(source, Expression) else Expression(source, ("u",))
        self.source = self.expr.source

    def __call__(self, u):
        return self.expr(u=u)

    def derivative(self, u):
        return self.expr.derivative("u", u=u)

    def __reduce__(self):
        return (StateFunction, (self.source,))

    def __repr__(self):
        return f"StateFunction({self.source!r})"


class SpaceFunction:
    """Function of position; called with an ``(npts, dim)`` array or a 1D array."""

    def __init__(self, source):
        self.expr = source if isinstance(source, Expression) else Expression(source, ("x", "y"))
        self.source = self.expr.source

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            x, y = pts, np.zeros_like(pts)
        else:
            x = pts[:, 0]
            y = pts[:, 1] if pts.shape[1] > 1 else np.zeros_like(x)
        return self.expr(x=x, y=y)

    def __reduce__(self):
        return (SpaceFunction, (self.source,))

    def __repr__(self):
        return f"SpaceFunction({self.source!r})"
