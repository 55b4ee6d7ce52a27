"""A tiny closed-form expression language for printed table entries.

Expressions are Python-syntax strings over a fixed vocabulary:

    A, B, Abar, Bbar, absA2, absB2     the twist constants and their moduli
    s(k, N)                            (sqrt(k(k-1)) + sqrt((N-k)(N-k+1))) / (4N)
    sqrt(...), integers, N, k, l       with + - * / ** and parentheses

Anything outside this vocabulary is rejected at parse time.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from functools import cached_property

A = (1 + 1j) / 2
B = (1 - 1j) / 2

CONSTANTS = {
    "A": A,
    "B": B,
    "Abar": A.conjugate(),
    "Bbar": B.conjugate(),
    "absA2": (A * A.conjugate()).real,
    "absB2": (B * B.conjugate()).real,
}
VARIABLES = ("N", "k", "l")


def s_value(k: float, N: float) -> float:
    return (math.sqrt(k * (k - 1)) + math.sqrt((N - k) * (N - k + 1))) / (4 * N)


def _sqrt(x):
    if x < 0:
        raise ValueError(f"sqrt of negative value {x}")
    return math.sqrt(x)


FUNCTIONS = {"sqrt": _sqrt, "s": s_value}

_BINOPS = {
    ast.Add: lambda u, v: u + v,
    ast.Sub: lambda u, v: u - v,
    ast.Mult: lambda u, v: u * v,
    ast.Div: lambda u, v: u / v,
    ast.Pow: lambda u, v: u**v,
}


def _check(node: ast.AST) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body)
    elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check(node.left)
        _check(node.right)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        _check(node.operand)
    elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        pass
    elif isinstance(node, ast.Name) and (node.id in CONSTANTS or node.id in VARIABLES):
        pass
    elif (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in FUNCTIONS
        and not node.keywords
    ):
        for arg in node.args:
            _check(arg)
    else:
        raise ValueError(f"unsupported syntax in expression: {ast.dump(node)}")


def _eval(node: ast.AST, env: dict):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, ast.Name):
        if node.id in CONSTANTS:
            return CONSTANTS[node.id]
        try:
            return env[node.id]
        except KeyError:
            raise ValueError(f"variable {node.id} is not bound") from None
    if isinstance(node, ast.Call):
        return FUNCTIONS[node.func.id](*(_eval(x, env) for x in node.args))
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class SymbolicScalar:
    text: str

    @cached_property
    def tree(self) -> ast.Expression:
        tree = ast.parse(self.text, mode="eval")
        _check(tree)
        return tree

    def __post_init__(self):
        self.tree  # validate eagerly

    def evaluate(self, **env) -> complex:
        return complex(_eval(self.tree, env))

    def __str__(self) -> str:
        return self.text
