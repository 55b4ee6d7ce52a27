"""Twisted Berg-window projections on l^2(F_2).

P projects onto span{eta'(k, x)}, two-point tapers along the cosets of <a>;
Q = V P V^* where V acts as 1 on the symmetric and as i on the
antisymmetric part of the a <-> b swap.  Everything here is for d = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import linops
from .linops import FinVector, FiniteRankOperator, MatrixOnBasis, WordIndex
from .words import (
    IDENTITY,
    Word,
    a,
    alpha,
    b,
    ball,
    gpow,
    invert,
    multiply,
    prefix_member,
    word_key,
)

A_COEF = (1 + 1j) / 2
B_COEF = (1 - 1j) / 2
SQRT3_2 = math.sqrt(3) / 2
SLACK = 1e-10


@dataclass(frozen=True)
class PVVParams:
    N: int
    R: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"window length N must be >= 2, got {self.N}")
        if self.R < 1:
            raise ValueError(f"radius R must be >= 1, got {self.R}")

    @property
    def regime_ok(self) -> bool:
        # R 4^R <= N^(1/4), checked in integers
        return (self.R * 4**self.R) ** 4 <= self.N


@dataclass(frozen=True, order=True)
class IndexPair:
    k: int
    x: Word

    def __str__(self) -> str:
        return f"({self.k},{self.x!s})"

    def __iter__(self):
        return iter((self.k, self.x))


def base_words(R: int) -> list[Word]:
    """B_R intersected with W_{b, b^-1, e}, in word order."""
    return [x for x in ball(R, 2) if prefix_member(x, (b, invert(b), IDENTITY))]


def build_F(params: PVVParams) -> list[IndexPair]:
    words = base_words(params.R)
    return [IndexPair(k, x) for k in range(params.N) for x in words]


def in_F(pair: IndexPair, params: PVVParams) -> bool:
    k, x = pair
    return (
        0 <= k < params.N
        and len(x) <= params.R
        and prefix_member(x, (b, invert(b), IDENTITY))
    )


def eta_prime(k: int, x: Word, N: int) -> FinVector:
    return FinVector.combination(
        [
            (multiply(gpow(1, k - N), x), math.sqrt(k / N)),
            (multiply(gpow(1, k), x), math.sqrt((N - k) / N)),
        ]
    )


def apply_V(v: FinVector) -> FinVector:
    """V(delta_x) = A delta_x + B delta_alpha(x), extended linearly."""
    terms = []
    for x, c in v.items():
        terms.append((x, A_COEF * c))
        terms.append((alpha(x), B_COEF * c))
    return FinVector.combination(terms)


def apply_V_adjoint(v: FinVector) -> FinVector:
    terms = []
    for x, c in v.items():
        terms.append((x, A_COEF.conjugate() * c))
        terms.append((alpha(x), B_COEF.conjugate() * c))
    return FinVector.combination(terms)


def eta_closed_form(k: int, x: Word, N: int) -> FinVector:
    """The explicit two- or four-term formula for eta(k, x)."""
    ax = alpha(x)
    if k == 0:
        return FinVector.combination([(x, A_COEF), (ax, B_COEF)])
    s, t = math.sqrt(k / N), math.sqrt((N - k) / N)
    return FinVector.combination(
        [
            (multiply(gpow(1, k - N), x), s * A_COEF),
            (multiply(gpow(2, k - N), ax), s * B_COEF),
            (multiply(gpow(1, k), x), t * A_COEF),
            (multiply(gpow(2, k), ax), t * B_COEF),
        ]
    )


def s_set(params: PVVParams, pairs: Iterable[IndexPair] | None = None) -> frozenset:
    N, R = params.N, params.R
    pairs = build_F(params) if pairs is None else pairs
    return frozenset(
        p for p in pairs if p.k + len(p.x) <= R - 1 or N - p.k + len(p.x) <= R - 1
    )


def in_S(pair: IndexPair, params: PVVParams) -> bool:
    k, x = pair
    return k + len(x) <= params.R - 1 or params.N - k + len(x) <= params.R - 1


@dataclass(frozen=True)
class EtaBasis:
    params: PVVParams
    pairs: tuple
    vectors: tuple
    A: complex = A_COEF
    B: complex = B_COEF
    _pos: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._pos.update({p: i for i, p in enumerate(self.pairs)})

    def __len__(self) -> int:
        return len(self.pairs)

    def position(self, pair: IndexPair) -> int:
        return self._pos[pair]

    def __contains__(self, pair) -> bool:
        return pair in self._pos

    def vector(self, pair: IndexPair) -> FinVector:
        return self.vectors[self._pos[pair]]

    @cached_property
    def window(self) -> WordIndex:
        return WordIndex(
            (w for v in self.vectors for w in v.support()), sort_key=word_key
        )

    def frame(self, index: WordIndex | None = None) -> sp.csc_matrix:
        """Sparse matrix whose columns are the eta vectors."""
        return linops.to_sparse(self.vectors, index or self.window)

    def translated(self, g: Word) -> list[FinVector]:
        return [linops.lambda_apply(g, v) for v in self.vectors]

    def projection(self) -> FiniteRankOperator:
        return linops.projection_from_orthonormal(self.vectors)


def build_eta_prime_basis(params: PVVParams) -> EtaBasis:
    pairs = build_F(params)
    vecs = [eta_prime(p.k, p.x, params.N) for p in pairs]
    return EtaBasis(params, tuple(pairs), tuple(vecs))


def build_eta_basis(params: PVVParams) -> EtaBasis:
    pairs = build_F(params)
    vecs = [apply_V(eta_prime(p.k, p.x, params.N)) for p in pairs]
    return EtaBasis(params, tuple(pairs), tuple(vecs))


def t_matrix(basis: EtaBasis, g: Word) -> MatrixOnBasis:
    """Entry ((k,x),(j,y)) = <eta(k,x), lambda_g eta(j,y)>."""
    moved = basis.translated(g)
    index = WordIndex(
        [w for v in basis.vectors for w in v.support()]
        + [w for v in moved for w in v.support()]
    )
    E = linops.to_sparse(basis.vectors, index)
    Eg = linops.to_sparse(moved, index)
    T = (E.T @ Eg.conj()).toarray()
    return MatrixOnBasis(basis.pairs, T)


def _restricted_min_eig(T: np.ndarray, cols: Sequence[int]) -> float:
    if len(cols) == 0:
        return float("inf")
    Tc = T[:, cols]
    return linops.min_eig_psd(Tc.conj().T @ Tc)


def commutator_operator(basis: EtaBasis, g: Word) -> FiniteRankOperator:
    return linops.commutator(g, basis.projection())


def commutator_norm_direct(basis: EtaBasis, g: Word) -> float:
    """||[lambda_g, Q]|| from the dyad factors of the commutator.

    [lambda_g, Q] = (lambda_g E) E^* - E (lambda_{g^-1} E)^*, so with
    U = [lambda_g E, -E] and V = [E, lambda_{g^-1} E] the norm is
    ||U V^*||.  The window holding every support is explicit.
    """
    gi = invert(g)
    moved = basis.translated(g)
    back = basis.translated(gi)
    index = WordIndex(
        [w for v in basis.vectors for w in v.support()]
        + [w for v in moved for w in v.support()]
        + [w for v in back for w in v.support()]
    )
    E = linops.to_sparse(basis.vectors, index)
    U = sp.hstack([linops.to_sparse(moved, index), -E]).tocsc()
    V = sp.hstack([E, linops.to_sparse(back, index)]).tocsc()
    return linops.factor_norm(U, V)


def commutator_norm_via_t(basis: EtaBasis, g: Word) -> dict:
    """max over h in {g, g^-1} of sqrt(1 - lambda_min(T_h^* T_h))."""
    out = {}
    for h in (g, invert(g)):
        T = t_matrix(basis, h).data
        lam = linops.min_eig_psd(T.conj().T @ T)
        out[str(h)] = math.sqrt(max(0.0, 1.0 - lam))
    return out


def commutator_norm_Q(basis: EtaBasis, g: Word) -> dict:
    if g not in (a, b):
        raise ValueError("g must be one of the generators a, b")
    direct = commutator_norm_direct(basis, g)
    via_t = commutator_norm_via_t(basis, g)
    return {
        "path_direct": direct,
        "path_t_matrix": max(via_t.values()),
        "per_direction": via_t,
    }


def commutator_norm_P(params: PVVParams) -> float:
    """||[P, lambda_a]|| for the untwisted Berg projection, exactly."""
    basis = build_eta_prime_basis(params)
    op = linops.commutator(a, basis.projection())
    window = WordIndex(
        [w for v in basis.vectors for w in v.support()] + op.support(),
        sort_key=word_key,
    )
    M = linops.compress(op, window.labels)
    return linops.operator_norm(M)


def coloredtable_check(basis: EtaBasis, S: Iterable[IndexPair] | None = None) -> dict:
    """Per-pair values <Q lambda_a eta, lambda_a eta> on S and the
    restricted minimum eigenvalue of T_a^* T_a over the columns in S."""
    params = basis.params
    S = s_set(params, basis.pairs) if S is None else frozenset(S)
    T = t_matrix(basis, a).data
    cols = [basis.position(p) for p in basis.pairs if p in S]
    col_norms = np.sum(np.abs(T) ** 2, axis=0)
    per_pair = {str(basis.pairs[j]): float(col_norms[j]) for j in cols}
    lam = _restricted_min_eig(T, cols)
    N, R = params.N, params.R
    pair_bound = (N - R) / N
    lam_bound = 1 - N**-0.25
    return {
        "size": len(cols),
        "per_pair": per_pair,
        "per_pair_min": min(per_pair.values(), default=float("inf")),
        "per_pair_bound": pair_bound,
        "lambda_min_S": lam,
        "lambda_min_bound": lam_bound,
        "ok": (
            all(v >= pair_bound - SLACK for v in per_pair.values())
            and lam >= lam_bound - SLACK
        ),
    }


def claim_bound(N: int) -> float:
    return (1 - N ** (-1 / 9)) / 4


def claim_check(basis: EtaBasis, S: Iterable[IndexPair] | None = None) -> dict:
    params = basis.params
    S = s_set(params, basis.pairs) if S is None else frozenset(S)
    T = t_matrix(basis, a).data
    rest = [basis.position(p) for p in basis.pairs if p not in S]
    lam = _restricted_min_eig(T, rest)
    bound = claim_bound(params.N)
    return {"lambda_min_F_minus_S": lam, "claimed_bound": bound, "ok": lam > bound}


def witness_report(params: PVVParams) -> dict:
    """Everything the qd-witness command prints for one (N, R)."""
    basis = build_eta_basis(params)
    na = commutator_norm_Q(basis, a)
    nb = commutator_norm_Q(basis, b)
    T = t_matrix(basis, a).data
    lam_full = linops.min_eig_psd(T.conj().T @ T)
    S = s_set(params, basis.pairs)
    cols_S = [basis.position(p) for p in basis.pairs if p in S]
    rest = [basis.position(p) for p in basis.pairs if p not in S]
    return {
        "N": params.N,
        "R": params.R,
        "regime_ok": params.regime_ok,
        "norm_comm_a": na["path_direct"],
        "norm_comm_b": nb["path_direct"],
        "norm_comm_a_t_path": na["path_t_matrix"],
        "norm_comm_b_t_path": nb["path_t_matrix"],
        "lambda_min_full": lam_full,
        "lambda_min_S": _restricted_min_eig(T, cols_S) if cols_S else None,
        "lambda_min_F_minus_S": _restricted_min_eig(T, rest) if rest else None,
        "bound_sqrt3_over_2": SQRT3_2,
        "claimed_bound": claim_bound(params.N),
    }
