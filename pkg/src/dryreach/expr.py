"""Whitelisted arithmetic expressions and linear constraints.

Scripted ODE right-hand sides and unsafe-set constraints are written as
strings in scenario files.  They are parsed with :mod:`ast`, checked
against a small whitelist and compiled once.
"""
from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import SchemaError

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARY = (ast.UAdd, ast.USub)


def _check(node: ast.AST, names: set[str]) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, names)
    elif isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
        _check(node.left, names)
        _check(node.right, names)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, _UNARY):
        _check(node.operand, names)
    elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        pass
    elif isinstance(node, ast.Name):
        if node.id not in names and node.id not in CONSTANTS:
            raise SchemaError(f"unknown symbol {node.id!r} in expression")
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS):
            raise SchemaError("only sin, cos and exp may be called")
        if len(node.args) != 1 or node.keywords:
            raise SchemaError(f"{node.func.id} takes exactly one argument")
        _check(node.args[0], names)
    else:
        raise SchemaError(f"unsupported syntax: {ast.dump(node)[:60]}")


def _parse(src: str) -> ast.Expression:
    try:
        return ast.parse(src.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise SchemaError(f"cannot parse expression {src!r}: {exc.msg}") from None


def compile_expression(src: str, names: Sequence[str]) -> Callable[[Mapping[str, object]], object]:
    """Compile ``src`` into a function of a name -> value mapping."""
    tree = _parse(src)
    _check(tree, set(names))
    code = compile(tree, "<expr>", "eval")
    base = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS}

    def evaluate(env: Mapping[str, object]):
        return eval(code, base, dict(env))  # noqa: S307 - tree whitelisted above

    return evaluate


@dataclass(frozen=True)
class LinearConstraint:
    """``coeffs · z + const  (op)  0`` where ``op`` is ``<`` or ``<=``.

    ``coeffs`` is indexed over the augmented vector (state..., t).
    """

    coeffs: tuple[float, ...]
    const: float
    strict: bool

    def holds(self, z) -> bool:
        val = float(np.dot(self.coeffs, z)) + self.const
        return val < 0 if self.strict else val <= 0

    def range_over(self, lo, hi) -> tuple[float, float]:
        """Exact min and max of the linear form over the box ``[lo, hi]``."""
        c = np.asarray(self.coeffs)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        mn = np.where(c >= 0, c * lo, c * hi).sum() + self.const
        mx = np.where(c >= 0, c * hi, c * lo).sum() + self.const
        return float(mn), float(mx)

    def never_holds(self, lo, hi) -> bool:
        mn, _ = self.range_over(lo, hi)
        return mn >= 0 if self.strict else mn > 0

    def always_holds(self, lo, hi) -> bool:
        _, mx = self.range_over(lo, hi)
        return mx < 0 if self.strict else mx <= 0


def _linear(node: ast.AST, index: Mapping[str, int], n: int) -> tuple[np.ndarray, float]:
    if isinstance(node, ast.Expression):
        return _linear(node.body, index, n)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return np.zeros(n), float(node.value)
    if isinstance(node, ast.Name):
        if node.id in CONSTANTS:
            return np.zeros(n), CONSTANTS[node.id]
        if node.id not in index:
            raise SchemaError(f"unknown variable {node.id!r} in constraint")
        c = np.zeros(n)
        c[index[node.id]] = 1.0
        return c, 0.0
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, _UNARY):
        c, k = _linear(node.operand, index, n)
        return (-c, -k) if isinstance(node.op, ast.USub) else (c, k)
    if isinstance(node, ast.BinOp):
        lc, lk = _linear(node.left, index, n)
        rc, rk = _linear(node.right, index, n)
        if isinstance(node.op, ast.Add):
            return lc + rc, lk + rk
        if isinstance(node.op, ast.Sub):
            return lc - rc, lk - rk
        if isinstance(node.op, ast.Mult):
            if not lc.any():
                return rc * lk, rk * lk
            if not rc.any():
                return lc * rk, lk * rk
        if isinstance(node.op, ast.Div) and not rc.any() and rk != 0:
            return lc / rk, lk / rk
    raise SchemaError("constraint is not linear in the state variables")


_NOTIN = re.compile(r"^(?P<lhs>.+?)\s+(?P<neg>not\s*in|notin|in)\s*\[(?P<a>[^,\]]+),(?P<b>[^\]]+)\]\s*$")
_CMP = {ast.Lt: ("<", True), ast.LtE: ("<=", False), ast.Gt: (">", True), ast.GtE: (">=", False)}


def _cmp_constraint(lhs_src: str, op: type, rhs_src: str, index, n) -> LinearConstraint:
    lc, lk = _linear(_parse(lhs_src), index, n)
    rc, rk = _linear(_parse(rhs_src), index, n)
    _, strict = _CMP[op]
    if op in (ast.Lt, ast.LtE):
        c, k = lc - rc, lk - rk
    else:
        c, k = rc - lc, rk - lk
    return LinearConstraint(tuple(float(x) for x in c), float(k), strict)


def parse_constraint(src: str, names: Sequence[str]) -> list[list[LinearConstraint]]:
    """Parse one constraint string into a disjunction of conjunctions.

    Supported forms: ``lhs < rhs`` (any of ``< <= > >=``), ``abs(e) < c``,
    ``abs(e) > c``, ``e in [a, b]`` and ``e notin [a, b]``.
    """
    index = {nm: i for i, nm in enumerate(names)}
    n = len(names)
    m = _NOTIN.match(src.strip())
    if m:
        lhs = m["lhs"]
        a = float(eval(compile(_checked(m["a"]), "<c>", "eval"), {"__builtins__": {}, **CONSTANTS}))
        b = float(eval(compile(_checked(m["b"]), "<c>", "eval"), {"__builtins__": {}, **CONSTANTS}))
        if a > b:
            raise SchemaError(f"empty membership interval in {src!r}")
        low = _cmp_constraint(lhs, ast.Lt, repr(a), index, n)
        high = _cmp_constraint(lhs, ast.Gt, repr(b), index, n)
        if m["neg"].replace(" ", "") == "in":
            inside_lo = _cmp_constraint(lhs, ast.GtE, repr(a), index, n)
            inside_hi = _cmp_constraint(lhs, ast.LtE, repr(b), index, n)
            return [[inside_lo, inside_hi]]
        return [[low], [high]]
    tree = _parse(src)
    body = tree.body
    if not (isinstance(body, ast.Compare) and len(body.ops) == 1 and type(body.ops[0]) in _CMP):
        raise SchemaError(f"constraint {src!r} must be a single comparison")
    op = type(body.ops[0])
    left, right = body.left, body.comparators[0]
    if isinstance(left, ast.Call) and isinstance(left.func, ast.Name) and left.func.id == "abs":
        inner = ast.unparse(left.args[0])
        rhs = ast.unparse(right)
        neg_inner = f"-({inner})"
        if op in (ast.Lt, ast.LtE):
            return [[_cmp_constraint(inner, op, rhs, index, n), _cmp_constraint(neg_inner, op, rhs, index, n)]]
        return [[_cmp_constraint(inner, op, rhs, index, n)], [_cmp_constraint(neg_inner, op, rhs, index, n)]]
    return [[_cmp_constraint(ast.unparse(left), op, ast.unparse(right), index, n)]]


def _checked(src: str) -> ast.Expression:
    tree = _parse(src.strip())
    _check(tree, set())
    return tree
