"""Expression trees for scalar basis functions.

The node set is deliberately small: constants, variables, sums, products,
integer powers, sin/cos/exp, and reciprocals.  Evaluation is vectorized over
batches of sample points, and gradients are propagated with forward-mode dual
numbers (value and directional-derivative arrays move through the tree
together), so derivatives are exact to rounding.

Surface syntax, used by :func:`parse` and :func:`render`::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' int)?
    base   := number | 'x' int | ('sin' | 'cos' | 'exp') '(' expr ')' | '(' expr ')'

Variables are 1-indexed in text (``x1`` is coordinate 0).  Subtraction lowers
to ``Add`` with a negated right operand, division to ``Mul`` with an ``Inv``
factor (or a sign-flipped ``Pow`` exponent when the divisor is a power).
``render`` produces text that reparses to a structurally equal tree for any
tree produced by ``parse``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Add", "Mul", "Pow", "Sin", "Cos", "Exp", "Inv",
    "EvaluationDomainError", "ExpressionSyntaxError",
    "evaluate", "evaluate_many", "gradient", "gradient_many",
    "evaluate_with_gradient_many", "variables", "parse", "render",
]


class ExpressionSyntaxError(ValueError):
    """Malformed expression text; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int, expected: str):
        self.offset = offset
        self.expected = expected
        super().__init__(f"{message} at offset {offset} (expected {expected})")


class EvaluationDomainError(ValueError):
    """Evaluation hit a pole (reciprocal of zero, or zero to a negative power)."""

    def __init__(self, node: "Expr", message: str):
        self.node = node
        super().__init__(f"{message} in '{render(node)}'")


class Expr:
    """Base class for expression nodes.  Nodes are immutable and comparable."""

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def __post_init__(self):
        if not isinstance(self.index, int) or self.index < 0:
            raise ValueError(f"variable index must be a non-negative int, got {self.index!r}")


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or isinstance(self.exponent, bool):
            raise ValueError(f"exponent must be an int, got {self.exponent!r}")


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr


@dataclass(frozen=True)
class Cos(Expr):
    arg: Expr


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True)
class Inv(Expr):
    arg: Expr


# ---------------------------------------------------------------------------
# evaluation


def _as_batch(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"expected a (m, n) sample batch, got shape {x.shape}")
    return x


def _check_var(e: Var, n: int):
    if e.index >= n:
        raise ValueError(
            f"expression references x{e.index + 1} but points have dimension {n}"
        )


def _values(e: Expr, x: np.ndarray) -> np.ndarray:
    if isinstance(e, Const):
        return np.full(x.shape[0], e.value)
    if isinstance(e, Var):
        _check_var(e, x.shape[1])
        return x[:, e.index].copy()
    if isinstance(e, Add):
        return _values(e.left, x) + _values(e.right, x)
    if isinstance(e, Mul):
        return _values(e.left, x) * _values(e.right, x)
    if isinstance(e, Pow):
        base = _values(e.base, x)
        if e.exponent < 0 and np.any(base == 0.0):
            raise EvaluationDomainError(e, "zero raised to a negative power")
        return base ** e.exponent
    if isinstance(e, Sin):
        return np.sin(_values(e.arg, x))
    if isinstance(e, Cos):
        return np.cos(_values(e.arg, x))
    if isinstance(e, Exp):
        return np.exp(_values(e.arg, x))
    if isinstance(e, Inv):
        arg = _values(e.arg, x)
        if np.any(arg == 0.0):
            raise EvaluationDomainError(e, "division by zero")
        return 1.0 / arg
    raise TypeError(f"not an expression node: {e!r}")


def _duals(e: Expr, x: np.ndarray):
    """Forward-mode pass returning (values (m,), jacobian (m, n))."""
    m, n = x.shape
    if isinstance(e, Const):
        return np.full(m, e.value), np.zeros((m, n))
    if isinstance(e, Var):
        _check_var(e, n)
        dot = np.zeros((m, n))
        dot[:, e.index] = 1.0
        return x[:, e.index].copy(), dot
    if isinstance(e, Add):
        lv, ld = _duals(e.left, x)
        rv, rd = _duals(e.right, x)
        return lv + rv, ld + rd
    if isinstance(e, Mul):
        lv, ld = _duals(e.left, x)
        rv, rd = _duals(e.right, x)
        return lv * rv, lv[:, None] * rd + rv[:, None] * ld
    if isinstance(e, Pow):
        bv, bd = _duals(e.base, x)
        k = e.exponent
        if k == 0:
            return np.ones(m), np.zeros((m, n))
        if k < 0 and np.any(bv == 0.0):
            raise EvaluationDomainError(e, "zero raised to a negative power")
        return bv ** k, (k * bv ** (k - 1))[:, None] * bd
    if isinstance(e, Sin):
        av, ad = _duals(e.arg, x)
        return np.sin(av), np.cos(av)[:, None] * ad
    if isinstance(e, Cos):
        av, ad = _duals(e.arg, x)
        return np.cos(av), -np.sin(av)[:, None] * ad
    if isinstance(e, Exp):
        av, ad = _duals(e.arg, x)
        ev = np.exp(av)
        return ev, ev[:, None] * ad
    if isinstance(e, Inv):
        av, ad = _duals(e.arg, x)
        if np.any(av == 0.0):
            raise EvaluationDomainError(e, "division by zero")
        iv = 1.0 / av
        return iv, -(iv * iv)[:, None] * ad
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, x) -> float:
    """Evaluate ``e`` at a single point ``x`` of shape (n,)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a point of shape (n,), got {x.shape}")
    return float(_values(e, x[None, :])[0])


def evaluate_many(e: Expr, x) -> np.ndarray:
    """Evaluate ``e`` at each row of ``x`` (m, n); returns shape (m,)."""
    return _values(e, _as_batch(x))


def gradient(e: Expr, x) -> np.ndarray:
    """Gradient of ``e`` at a single point ``x`` of shape (n,)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a point of shape (n,), got {x.shape}")
    return _duals(e, x[None, :])[1][0]


def gradient_many(e: Expr, x) -> np.ndarray:
    """Row-wise gradients of ``e``; input (m, n), output (m, n)."""
    return _duals(e, _as_batch(x))[1]


def evaluate_with_gradient_many(e: Expr, x):
    """Values and row-wise gradients in one pass: ((m,), (m, n))."""
    return _duals(e, _as_batch(x))


def variables(e: Expr) -> frozenset:
    """Set of variable indices referenced by ``e``."""
    if isinstance(e, Var):
        return frozenset((e.index,))
    if isinstance(e, (Add, Mul)):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Pow):
        return variables(e.base)
    if isinstance(e, (Sin, Cos, Exp, Inv)):
        return variables(e.arg)
    return frozenset()


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"(?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<var>x\d+)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)

_FUNCTIONS = {"sin": Sin, "cos": Cos, "exp": Exp}


@dataclass
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN.match(text, pos)
        if match is None:
            raise ExpressionSyntaxError(
                f"unrecognized character {text[pos]!r}", pos,
                "number, variable, function, or operator")
        tokens.append(_Token(match.lastgroup, match.group(), pos))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


def _negated(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    return Mul(Const(-1.0), e)


def _divide(lhs: Expr, rhs: Expr) -> Expr:
    if isinstance(rhs, Pow):
        inverted: Expr = Pow(rhs.base, -rhs.exponent)
    else:
        inverted = Inv(rhs)
    if lhs == Const(1.0):
        return inverted
    return Mul(lhs, inverted)


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            raise ExpressionSyntaxError(
                f"unexpected {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
                tok.offset, f"'{op}'")
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionSyntaxError(
                "unexpected trailing input", tok.offset, "end of input or an operator")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            rhs = self.term()
            node = Add(node, rhs if op == "+" else _negated(rhs))
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            rhs = self.factor()
            node = Mul(node, rhs) if op == "*" else _divide(node, rhs)
        return node

    def factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return _negated(self.factor())
        node = self.base()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            node = Pow(node, self.exponent())
        return node

    def exponent(self) -> int:
        sign = 1
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            sign = -1
            tok = self.peek()
        if tok.kind != "num" or any(c in tok.text for c in ".eE"):
            raise ExpressionSyntaxError(
                f"bad exponent {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
                tok.offset, "an integer exponent")
        self.advance()
        return sign * int(tok.text)

    def base(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "var":
            self.advance()
            index = int(tok.text[1:])
            if index < 1:
                raise ExpressionSyntaxError(
                    f"bad variable {tok.text!r}", tok.offset, "x1, x2, ... (1-indexed)")
            return Var(index - 1)
        if tok.kind == "name":
            if tok.text not in _FUNCTIONS:
                raise ExpressionSyntaxError(
                    f"unknown function {tok.text!r}", tok.offset, "sin, cos, or exp")
            self.advance()
            self.expect_op("(")
            arg = self.expr()
            self.expect_op(")")
            return _FUNCTIONS[tok.text](arg)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(
            f"unexpected {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
            tok.offset, "number, variable, function, or '('")


def parse(text: str) -> Expr:
    """Parse expression text into a tree.

    Raises :class:`ExpressionSyntaxError` with the byte offset of the failure
    and a hint naming the expected token.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# rendering

_SUM, _TERM, _POW, _ATOM = 1, 2, 3, 4


def _prec(e: Expr) -> int:
    if isinstance(e, Const):
        return _ATOM if e.value >= 0 else _TERM
    if isinstance(e, Add):
        return _SUM
    if isinstance(e, (Mul, Inv)):
        return _TERM
    if isinstance(e, Pow):
        return _POW
    return _ATOM


def _render(e: Expr, min_prec: int) -> str:
    text = _render_node(e)
    if _prec(e) < min_prec:
        return f"({text})"
    return text


def _format_const(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _render_node(e: Expr) -> str:
    if isinstance(e, Const):
        return _format_const(e.value)
    if isinstance(e, Var):
        return f"x{e.index + 1}"
    if isinstance(e, Add):
        left = _render(e.left, _SUM)
        right = e.right
        if isinstance(right, Const) and right.value < 0:
            return f"{left}-{_render(Const(-right.value), _TERM)}"
        if isinstance(right, Mul) and right.left == Const(-1.0):
            return f"{left}-{_render(right.right, _TERM)}"
        return f"{left}+{_render(right, _TERM)}"
    if isinstance(e, Mul):
        if e.left == Const(-1.0):
            return f"-{_render(e.right, _ATOM)}"
        if isinstance(e.right, Inv):
            return f"{_render(e.left, _TERM)}/{_render(e.right.arg, _ATOM)}"
        if isinstance(e.right, Pow) and e.right.exponent < 0:
            flipped = Pow(e.right.base, -e.right.exponent)
            return f"{_render(e.left, _TERM)}/{_render(flipped, _POW)}"
        return f"{_render(e.left, _TERM)}*{_render(e.right, _POW)}"
    if isinstance(e, Pow):
        return f"{_render(e.base, _ATOM)}^{e.exponent}"
    if isinstance(e, Inv):
        return f"1/{_render(e.arg, _ATOM)}"
    if isinstance(e, Sin):
        return f"sin({_render_node(e.arg)})"
    if isinstance(e, Cos):
        return f"cos({_render_node(e.arg)})"
    if isinstance(e, Exp):
        return f"exp({_render_node(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def render(e: Expr) -> str:
    """Render a tree back to surface syntax.

    For any tree returned by :func:`parse`, ``parse(render(tree))`` is
    structurally equal to ``tree``.
    """
    return _render(e, _SUM)
