"""Pytlik-Szwarc representations pi_z of F_d and the radial bound functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linops
from .linops import FinVector, MatrixOnBasis, WindowError
from .words import IDENTITY, Word, ball, gen, invert, multiply, sphere_count

INF = math.inf


@dataclass(frozen=True)
class PSParams:
    z: float
    d: int = 2
    window: int = 6

    def __post_init__(self):
        if not 0.0 <= self.z <= 1.0:
            raise ValueError(f"z must lie in [0, 1], got {self.z}")
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.window < 0:
            raise ValueError("window must be nonnegative")


@dataclass(frozen=True)
class RadialFunction:
    """x -> r^|x| on F_d."""

    base: float
    d: int = 2

    def __post_init__(self):
        if not 0.0 < self.base < 1.0:
            raise ValueError("base must lie in (0, 1)")

    def __call__(self, x: Sequence[int]) -> float:
        return self.base ** len(x)


@dataclass(frozen=True)
class BoundParams:
    p: float
    q: float
    d: int = 2

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if not self.p < self.q:
            raise ValueError(f"need p < q, got p={self.p}, q={self.q}")

    @property
    def conjugate_exponent(self) -> float:
        """r with 1/r + 1/q = 1/p."""
        if self.q == INF:
            return self.p
        return self.p * self.q / (self.q - self.p)


def _letter_image(z: float, letter: int, x: Word) -> list[tuple[Word, float]]:
    """pi_z(letter) delta_x for a single signed generator."""
    i = abs(letter)
    c = math.sqrt(max(0.0, 1.0 - z * z))
    ai, ai_inv = gen(i), gen(-i)
    if letter > 0:
        if x == IDENTITY:
            return [(ai, c), (IDENTITY, z)]
        if x == ai_inv:
            return [(ai, -z), (IDENTITY, c)]
    else:
        # the adjoint of the 2x2 block above, which is its own inverse
        if x == IDENTITY:
            return [(IDENTITY, z), (ai_inv, c)]
        if x == ai:
            return [(IDENTITY, c), (ai_inv, -z)]
    return [(multiply(Word._trusted((letter,)), x), 1.0)]


def pi_z_apply(params: PSParams | float, i: int, v: FinVector) -> FinVector:
    """pi_z(a_i) v; a negative ``i`` applies pi_z(a_i^{-1}) = pi_z(a_i)^*."""
    z = params.z if isinstance(params, PSParams) else float(params)
    if i == 0:
        raise ValueError("generator index must be nonzero")
    terms = []
    for x, c in v.items():
        for y, w in _letter_image(z, i, x):
            terms.append((y, w * c))
    return FinVector.combination(terms)


def pi_z_word(params: PSParams | float, t: Sequence[int], v: FinVector) -> FinVector:
    """pi_z(t) v, applying the letters of t right to left."""
    for letter in reversed(tuple(t)):
        v = pi_z_apply(params, letter, v)
    return v


def lambda_word(t: Sequence[int], v: FinVector) -> FinVector:
    return linops.lambda_apply(Word(t), v)


def matrix_coefficient(params: PSParams, t: Sequence[int]) -> complex:
    """<pi_z(t) delta_e, delta_e>."""
    if len(t) > params.window:
        raise WindowError(f"|t| = {len(t)} exceeds window {params.window}")
    v = pi_z_word(params, t, FinVector.delta(IDENTITY))
    return v[IDENTITY]


def generator_difference(z: float, i: int = 1) -> MatrixOnBasis:
    """pi_z(a_i) - pi_1(a_i) on its support: columns {e, a_i^-1}, rows {e, a_i}."""
    cols = [IDENTITY, gen(-i)]
    rows = [IDENTITY, gen(i)]

    def diff(x):
        dv = FinVector.delta(x)
        return pi_z_apply(z, i, dv) - pi_z_apply(1.0, i, dv)

    return linops.compress(diff, rows, cols)


def generator_gap(z: float, i: int = 1) -> float:
    """||pi_z(a_i) - pi_1(a_i)||, computed from the 2x2 block."""
    if not 0.0 <= z <= 1.0:
        raise ValueError("z must lie in [0, 1]")
    return linops.operator_norm(generator_difference(z, i))


def generator_gap_closed_form(z: float) -> float:
    return math.sqrt(2.0 - 2.0 * z)


def haagerup_gram(r: float, R: int, d: int = 2) -> MatrixOnBasis:
    """[r^{|s^-1 t|}]_{s,t in B_R}."""
    phi = RadialFunction(r, d)
    words = ball(R, d)
    n = len(words)
    G = np.empty((n, n))
    for i, s in enumerate(words):
        si = invert(s)
        for j in range(i, n):
            G[i, j] = G[j, i] = phi(multiply(si, words[j]))
    return MatrixOnBasis(words, G)


def lp_radial_norm(z: float, p: float, d: int = 2) -> float:
    """||z^{|.|}||_p on F_d; returns inf when the series diverges."""
    if not 0.0 <= z < 1.0:
        raise ValueError("z must lie in [0, 1)")
    if p < 1:
        raise ValueError("p must be >= 1")
    if z == 0.0:
        return 1.0
    zp = z**p
    ratio = (2 * d - 1) * zp
    if ratio >= 1.0:
        return INF
    return (1.0 + 2 * d * zp / (1.0 - ratio)) ** (1.0 / p)


def lp_radial_partial(z: float, p: float, d: int, R: int) -> float:
    """(sum over B_R of z^{p|x|})^(1/p), summed sphere by sphere."""
    total = sum(sphere_count(n, d) * z ** (p * n) for n in range(R + 1))
    return total ** (1.0 / p)


def lp_membership_threshold(p: float, d: int = 2) -> float:
    """z^{|.|} is in l^p exactly for z below (2d-1)^(-1/p)."""
    return (2 * d - 1) ** (-1.0 / p)


def qd_upper_bound(p: float, d: int = 2) -> float:
    """sqrt(2 - 2 (2d-1)^(-1/p)); zero at p = inf."""
    if p < 2:
        raise ValueError("p must be >= 2")
    if p == INF:
        return 0.0
    return math.sqrt(2.0 - 2.0 * lp_membership_threshold(p, d))


def _cb_exponent(p: float, q: float) -> float:
    # (p - q) / (pq), i.e. -1/r; at q = inf this is -1/p
    if q == INF:
        return -1.0 / p
    return (p - q) / (p * q)


def cb_upper_bound(params: BoundParams) -> float:
    """1 + d sqrt(2 (1 - (2d-1)^((p-q)/(pq))))."""
    d = params.d
    x = (2 * d - 1) ** _cb_exponent(params.p, params.q)
    return 1.0 + d * math.sqrt(max(0.0, 2.0 * (1.0 - x)))


def level1_check(
    z: float, coeffs: Sequence[complex], window: int = 2
) -> tuple[float, float]:
    """Sampled scalar-level form of ||pi_1(x)|| <= (1 + d sqrt(2-2z)) ||pi_z(x)||.

    x = sum_i c_i a_i.  Both sides are compressed to columns in B_window
    (rows in B_{window+1}, so the columns are exact).  Returns (lhs, rhs).
    """
    d = len(coeffs)
    cols = ball(window, d)
    rows = ball(window + 1, d)

    def op(zz):
        def image(x):
            out = FinVector()
            dv = FinVector.delta(x)
            for i, c in enumerate(coeffs, start=1):
                out = out + pi_z_apply(zz, i, dv) * c
            return out

        return linops.compress(image, rows, cols)

    lhs = linops.operator_norm(op(1.0))
    rhs = (1.0 + d * math.sqrt(2.0 - 2.0 * z)) * linops.operator_norm(op(z))
    return lhs, rhs


def bound_table(d: int, ps: Sequence[float], qs: Sequence[float] | None = None) -> list[dict]:
    """Rows (d, p, q, qd_upper, cb_upper); q defaults to inf."""
    rows = []
    for i, p in enumerate(ps):
        q = INF if qs is None else qs[i]
        cb = cb_upper_bound(BoundParams(p, q, d)) if p < q else None
        rows.append(
            {"d": d, "p": p, "q": q, "qd_upper": qd_upper_bound(p, d), "cb_upper": cb}
        )
    return rows

