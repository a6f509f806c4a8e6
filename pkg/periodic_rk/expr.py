"""Expression trees for problem definitions: evaluation, symbolic differentiation and printing.

Trees are built by `periodic_rk.parser.parse` (or by hand from the node classes below) and are
immutable. Every transformation returns a new tree.
"""

import math
from dataclasses import dataclass
from functools import singledispatch
from typing import Callable, Mapping, Union

import numpy as np
import numpy.typing as npt

from .errors import DomainError, UnboundVariable, Unsupported

Value = Union[float, npt.NDArray[np.float64]]

VARIABLES = frozenset({"t", "y", "y1", "y2", "y3", "pi"})
CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str

    def __post_init__(self) -> None:
        if self.name not in VARIABLES:
            raise ValueError(f"unknown variable {self.name!r}")


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"

    def __post_init__(self) -> None:
        if self.func not in FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self) -> None:
        if self.op not in BINARY_OPERATORS:
            raise ValueError(f"unknown operator {self.op!r}")


Expr = Union[Number, Variable, Call, BinOp]


# Evaluation

def _check_domain(name: str, x: Value, ok: "npt.NDArray[np.bool_] | bool") -> None:
    if not np.all(ok):
        mask = np.asarray(ok)
        bad = np.broadcast_to(np.asarray(x, dtype=float), mask.shape)[~mask].flat[0]
        raise DomainError(f"{name}({float(bad)!r}) is outside the real domain")


def _log(x: Value) -> Value:
    _check_domain("log", x, np.greater(x, 0.0) | np.isnan(x))
    return np.log(x)


def _sqrt(x: Value) -> Value:
    _check_domain("sqrt", x, np.greater_equal(x, 0.0) | np.isnan(x))
    return np.sqrt(x)


def _acosh(x: Value) -> Value:
    _check_domain("acosh", x, np.greater_equal(x, 1.0) | np.isnan(x))
    return np.arccosh(x)


FUNCTIONS: dict[str, Callable[[Value], Value]] = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": _log,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "acosh": _acosh,
    "sqrt": _sqrt,
    "neg": np.negative,
}


def _power(base: Value, exponent: Value) -> Value:
    integral = np.equal(np.floor(exponent), exponent)
    _check_domain("pow", base, np.greater_equal(base, 0.0) | integral | np.isnan(base))
    return np.power(base, exponent)


BINARY_OPERATORS: dict[str, Callable[[Value, Value], Value]] = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": _power,
}


def eval_ast(ast: Expr, env: Mapping[str, Value]) -> Value:
    """Evaluates the tree in IEEE double precision.

    Variables may be bound to scalars or to numpy arrays of a common shape; a tree evaluated on
    scalars returns a Python float. `pi` is always bound. Division by zero and overflow produce
    infinities; arguments outside the real domain of log, sqrt, acosh and of a fractional power
    raise DomainError.
    """
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        result = _evaluate(ast, env)
    if np.ndim(result) == 0:
        return float(result)
    return np.asarray(result, dtype=float)


@singledispatch
def _evaluate(node: Expr, env: Mapping[str, Value]) -> Value:
    raise TypeError(f"not an expression node: {node!r}")


@_evaluate.register
def _(node: Number, env: Mapping[str, Value]) -> Value:
    return node.value


@_evaluate.register
def _(node: Variable, env: Mapping[str, Value]) -> Value:
    if node.name in CONSTANTS:
        return CONSTANTS[node.name]
    try:
        return env[node.name]
    except KeyError:
        raise UnboundVariable(node.name) from None


@_evaluate.register
def _(node: Call, env: Mapping[str, Value]) -> Value:
    return FUNCTIONS[node.func](_evaluate(node.arg, env))


@_evaluate.register
def _(node: BinOp, env: Mapping[str, Value]) -> Value:
    return BINARY_OPERATORS[node.op](_evaluate(node.left, env), _evaluate(node.right, env))


# Constructors with constant folding

def num(value: float) -> Number:
    return Number(float(value))


def _is(node: Expr, value: float) -> bool:
    return isinstance(node, Number) and node.value == value


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Number) and isinstance(b, Number):
        return num(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Number) and isinstance(b, Number):
        return num(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Number) and isinstance(b, Number):
        return num(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return num(0.0)
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0):
        return num(0.0)
    if _is(b, 1.0):
        return a
    return BinOp("/", a, b)


def power(base: Expr, exponent: Expr) -> Expr:
    if _is(exponent, 0.0):
        return num(1.0)
    if _is(exponent, 1.0):
        return base
    return BinOp("^", base, exponent)


def call(func: str, arg: Expr) -> Expr:
    if func == "neg":
        return neg(arg)
    return Call(func, arg)


def neg(a: Expr) -> Expr:
    if isinstance(a, Number):
        return num(-a.value)
    if isinstance(a, Call) and a.func == "neg":
        return a.arg
    return Call("neg", a)


# Queries and rewriting

@singledispatch
def free_variables(node: Expr) -> frozenset[str]:
    raise TypeError(f"not an expression node: {node!r}")


@free_variables.register
def _(node: Number) -> frozenset[str]:
    return frozenset()


@free_variables.register
def _(node: Variable) -> frozenset[str]:
    return frozenset() if node.name in CONSTANTS else frozenset({node.name})


@free_variables.register
def _(node: Call) -> frozenset[str]:
    return free_variables(node.arg)


@free_variables.register
def _(node: BinOp) -> frozenset[str]:
    return free_variables(node.left) | free_variables(node.right)


def depends_on(ast: Expr, var: str) -> bool:
    return var in free_variables(ast)


def substitute(ast: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replaces every occurrence of the mapped variables by the given trees."""
    if isinstance(ast, Variable):
        return mapping.get(ast.name, ast)
    elif isinstance(ast, Call):
        return Call(ast.func, substitute(ast.arg, mapping))
    elif isinstance(ast, BinOp):
        return BinOp(ast.op, substitute(ast.left, mapping), substitute(ast.right, mapping))
    return ast


# Differentiation

def differentiate(ast: Expr, var: str) -> Expr:
    """Returns the exact derivative of the tree with respect to `var`, constant-folded."""
    return _derive(ast, var)


@singledispatch
def _derive(node: Expr, var: str) -> Expr:
    raise TypeError(f"not an expression node: {node!r}")


@_derive.register
def _(node: Number, var: str) -> Expr:
    return num(0.0)


@_derive.register
def _(node: Variable, var: str) -> Expr:
    return num(1.0 if node.name == var else 0.0)


@_derive.register
def _(node: Call, var: str) -> Expr:
    u = node.arg
    du = _derive(u, var)
    if _is(du, 0.0):
        return num(0.0)

    match node.func:
        case "neg":
            return neg(du)
        case "sin":
            outer = Call("cos", u)
        case "cos":
            outer = neg(Call("sin", u))
        case "tan":
            outer = div(num(1.0), power(Call("cos", u), num(2.0)))
        case "exp":
            outer = node
        case "log":
            return div(du, u)
        case "sinh":
            outer = Call("cosh", u)
        case "cosh":
            outer = Call("sinh", u)
        case "tanh":
            outer = div(num(1.0), power(Call("cosh", u), num(2.0)))
        case "acosh":
            outer = div(num(1.0), Call("sqrt", sub(power(u, num(2.0)), num(1.0))))
        case "sqrt":
            return div(du, mul(num(2.0), node))
        case _:
            raise Unsupported(f"cannot differentiate {node.func}")
    return mul(outer, du)


@_derive.register
def _(node: BinOp, var: str) -> Expr:
    u, v = node.left, node.right
    match node.op:
        case "+":
            return add(_derive(u, var), _derive(v, var))
        case "-":
            return sub(_derive(u, var), _derive(v, var))
        case "*":
            return add(mul(_derive(u, var), v), mul(u, _derive(v, var)))
        case "/":
            du, dv = _derive(u, var), _derive(v, var)
            if _is(dv, 0.0):
                return div(du, v)
            return div(sub(mul(du, v), mul(u, dv)), power(v, num(2.0)))
        case "^":
            return _derive_power(u, v, var)
        case _:
            raise Unsupported(f"cannot differentiate operator {node.op!r}")


def _derive_power(base: Expr, exponent: Expr, var: str) -> Expr:
    base_varies = depends_on(base, var)
    exponent_varies = depends_on(exponent, var)

    if base_varies and exponent_varies:
        raise Unsupported(
            f"cannot differentiate {to_text(BinOp('^', base, exponent))}: "
            f"both base and exponent depend on {var}"
        )
    elif exponent_varies:
        # c^v → c^v · log(c) · v'
        return mul(mul(BinOp("^", base, exponent), Call("log", base)), _derive(exponent, var))
    elif not base_varies:
        return num(0.0)

    # u^n → n · u^(n-1) · u', kept as an integer power when n is an integer literal
    reduced = (
        num(exponent.value - 1.0)
        if isinstance(exponent, Number)
        else sub(exponent, num(1.0))
    )
    return mul(mul(exponent, power(base, reduced)), _derive(base, var))


# Printing

_PRECEDENCE = {"+": 10, "-": 10, "*": 20, "/": 20, "neg": 25, "^": 30}
_ATOM = 100


def to_text(ast: Expr) -> str:
    """Prints the tree in the syntax `parse` accepts; parsing the text back gives a tree that
    evaluates identically."""
    return _print(ast)[0]


def _format_number(value: float) -> str:
    if math.isfinite(value) and value.is_integer() and abs(value) < 1e15:
        text = str(int(value))
    else:
        text = repr(value)
    return f"({text})" if value < 0 or text.startswith("-") else text


def _wrap(child: Expr, minimum: int) -> str:
    text, precedence = _print(child)
    return f"({text})" if precedence < minimum else text


def _print(node: Expr) -> tuple[str, int]:
    if isinstance(node, Number):
        return _format_number(node.value), _ATOM
    elif isinstance(node, Variable):
        return node.name, _ATOM
    elif isinstance(node, Call):
        if node.func == "neg":
            return f"-{_wrap(node.arg, _PRECEDENCE['neg'])}", _PRECEDENCE["neg"]
        return f"{node.func}({_print(node.arg)[0]})", _ATOM

    precedence = _PRECEDENCE[node.op]
    if node.op == "^":
        # right-associative
        left, right = _wrap(node.left, precedence + 1), _wrap(node.right, precedence)
        return f"{left}^{right}", precedence

    left, right = _wrap(node.left, precedence), _wrap(node.right, precedence + 1)
    if node.op in "+-":
        return f"{left} {node.op} {right}", precedence
    return f"{left}*{right}" if node.op == "*" else f"{left}/{right}", precedence


class UnivariateFunction:
    """A closed-form function of a single variable with cached symbolic derivatives,
    callable as `f(t, order)`."""

    def __init__(self, expr: Expr, var: str = "t") -> None:
        extra = free_variables(expr) - {var}
        if extra:
            raise UnboundVariable(sorted(extra)[0])
        self.expr = expr
        self.var = var
        self._derivatives: list[Expr] = [expr]

    def derivative(self, order: int) -> Expr:
        if order < 0:
            raise DomainError(f"derivative order must be non-negative, got {order}")
        while len(self._derivatives) <= order:
            self._derivatives.append(differentiate(self._derivatives[-1], self.var))
        return self._derivatives[order]

    def __call__(self, t: Value, order: int = 0) -> Value:
        result = eval_ast(self.derivative(order), {self.var: t})
        if np.ndim(t) > 0 and np.ndim(result) == 0:
            return np.full(np.shape(t), result)
        return result

    def __repr__(self) -> str:
        return f"UnivariateFunction({to_text(self.expr)!r})"
