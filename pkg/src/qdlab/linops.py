"""Finitely supported vectors in l^2(F_d) and finite compressions of operators."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .words import Word, invert, multiply

log = logging.getLogger(__name__)

PRUNE = 1e-15
DENSE_LIMIT = 1500
POWER_TOL = 1e-12
POWER_MAXITER = 100_000
HERMITIAN_TOL = 1e-10


class WindowError(ValueError):
    """A word needed by an exact compression is missing from the basis."""


class ConvergenceError(RuntimeError):
    pass


class FinVector:
    """A finitely supported function on the group (or any hashable labels).

    Entries with modulus below ``PRUNE`` are dropped on construction.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[Hashable, complex] | None = None):
        self._entries = {
            k: complex(v) for k, v in (entries or {}).items() if abs(v) >= PRUNE
        }

    @classmethod
    def delta(cls, x: Hashable, coef: complex = 1.0) -> "FinVector":
        return cls({x: coef})

    @classmethod
    def combination(cls, terms: Iterable[tuple[Hashable, complex]]) -> "FinVector":
        acc: dict = {}
        for k, v in terms:
            acc[k] = acc.get(k, 0.0) + v
        return cls(acc)

    @property
    def entries(self) -> dict:
        return dict(self._entries)

    def support(self) -> list:
        return list(self._entries)

    def items(self):
        return self._entries.items()

    def __getitem__(self, x) -> complex:
        return self._entries.get(x, 0.0)

    def __len__(self) -> int:
        return len(self._entries)

    def __add__(self, other: "FinVector") -> "FinVector":
        acc = dict(self._entries)
        for k, v in other._entries.items():
            acc[k] = acc.get(k, 0.0) + v
        return FinVector(acc)

    def __sub__(self, other: "FinVector") -> "FinVector":
        return self + other * -1.0

    def __mul__(self, c: complex) -> "FinVector":
        return FinVector({k: c * v for k, v in self._entries.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "FinVector":
        return self * -1.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, FinVector):
            return NotImplemented
        return self._entries == other._entries

    def __repr__(self) -> str:
        body = ", ".join(f"{k!s}: {v:.6g}" for k, v in self._entries.items())
        return f"FinVector({{{body}}})"

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(v) ** 2 for v in self._entries.values())))

    def conj(self) -> "FinVector":
        return FinVector({k: v.conjugate() for k, v in self._entries.items()})

    def map_support(self, f: Callable[[Hashable], Hashable]) -> "FinVector":
        """Push forward along an injective relabelling of the support."""
        return FinVector.combination((f(k), v) for k, v in self._entries.items())


def inner(u: FinVector, v: FinVector) -> complex:
    """<u, v>, linear in the first argument."""
    if len(u) > len(v):
        return sum((u[k] * w.conjugate() for k, w in v.items()), 0j)
    return sum((w * v[k].conjugate() for k, w in u.items()), 0j)


def lambda_apply(g: Word, v: FinVector) -> FinVector:
    """Left regular representation: (lambda_g v)(x) = v(g^{-1} x)."""
    return FinVector({multiply(g, x): c for x, c in v.items()})


def gram(vectors: Sequence[FinVector]) -> np.ndarray:
    """Matrix of <v_j, v_i> (entry (i, j) = <v_j, v_i>, i.e. V^* V)."""
    index = WordIndex(w for v in vectors for w in v.support())
    M = to_sparse(vectors, index)
    return (M.conj().T @ M).toarray()


class WordIndex:
    """Stable bijection between a finite label set and 0..n-1.

    Labels keep first-seen order unless ``sort_key`` is given.
    """

    def __init__(self, labels: Iterable[Hashable] = (), sort_key=None):
        seen: dict = {}
        for w in labels:
            if w not in seen:
                seen[w] = len(seen)
        if sort_key is not None:
            ordered = sorted(seen, key=sort_key)
            seen = {w: i for i, w in enumerate(ordered)}
        self._pos = seen
        self.labels = list(seen)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, w) -> bool:
        return w in self._pos

    def __iter__(self):
        return iter(self.labels)

    def position(self, w) -> int:
        try:
            return self._pos[w]
        except KeyError:
            raise WindowError(f"{w!s} is outside the compression window") from None

    def get(self, w, default=None):
        return self._pos.get(w, default)


def to_sparse(vectors: Sequence[FinVector], index: WordIndex) -> sp.csc_matrix:
    """Columns are the coordinate vectors of ``vectors`` in ``index``."""
    rows, cols, vals = [], [], []
    for j, v in enumerate(vectors):
        for w, c in v.items():
            rows.append(index.position(w))
            cols.append(j)
            vals.append(c)
    return sp.csc_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)),
        shape=(len(index), len(vectors)),
    )


@dataclass(frozen=True)
class MatrixOnBasis:
    """A finite matrix whose rows (and columns) are labelled by words.

    ``col_basis`` defaults to ``basis`` for square compressions.
    """

    basis: tuple
    data: np.ndarray
    col_basis: tuple | None = None

    def __post_init__(self):
        basis = tuple(self.basis)
        object.__setattr__(self, "basis", basis)
        cols = basis if self.col_basis is None else tuple(self.col_basis)
        object.__setattr__(self, "col_basis", cols)
        data = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "data", data)
        if len(set(basis)) != len(basis) or len(set(cols)) != len(cols):
            raise ValueError("basis labels must be distinct")
        if data.shape != (len(basis), len(cols)):
            raise ValueError(
                f"matrix shape {data.shape} does not match basis sizes "
                f"({len(basis)}, {len(cols)})"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def adjoint(self) -> "MatrixOnBasis":
        return MatrixOnBasis(self.col_basis, self.data.conj().T, self.basis)

    def entry(self, row, col) -> complex:
        return self.data[self.basis.index(row), self.col_basis.index(col)]


def _as_array(M) -> np.ndarray:
    if isinstance(M, MatrixOnBasis):
        return M.data
    if sp.issparse(M):
        return M.toarray()
    return np.asarray(M, dtype=complex)


def power_iteration_norm(
    M: np.ndarray,
    tol: float = POWER_TOL,
    maxiter: int = POWER_MAXITER,
    seed: int = 0,
) -> float:
    """Largest singular value by power iteration on M^* M.

    Stops when the Rayleigh quotient changes by less than ``tol``
    (relative).  Raises ConvergenceError after ``maxiter`` steps.
    """
    if M.size == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
    x /= np.linalg.norm(x)
    MH = M.conj().T
    prev = -1.0
    for it in range(1, maxiter + 1):
        y = MH @ (M @ x)
        rq = float(np.real(np.vdot(x, y)))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(rq - prev) <= tol * max(rq, 1e-300):
            log.debug("power iteration converged after %d steps", it)
            return float(np.sqrt(max(rq, 0.0)))
        prev = rq
    raise ConvergenceError(
        f"power iteration did not reach tol={tol} in {maxiter} steps "
        f"(last estimate {np.sqrt(max(prev, 0.0)):.12g})"
    )


def operator_norm(M, method: str = "auto") -> float:
    """Largest singular value.

    ``method`` is ``"svd"``, ``"power"`` or ``"auto"`` (SVD below
    DENSE_LIMIT rows/columns, power iteration above).
    """
    data = _as_array(M)
    if data.size == 0:
        return 0.0
    if method == "auto":
        method = "svd" if max(data.shape) < DENSE_LIMIT else "power"
    if method == "svd":
        return float(scipy.linalg.svdvals(data, check_finite=False)[0])
    if method == "power":
        return power_iteration_norm(data)
    raise ValueError(f"unknown method {method!r}")


def check_hermitian(data: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    if data.shape[0] != data.shape[1]:
        raise ValueError("matrix is not square")
    asym = np.max(np.abs(data - data.conj().T), initial=0.0)
    if asym > tol:
        raise ValueError(f"matrix is not Hermitian (asymmetry {asym:.3g})")


def min_eig_psd(M) -> float:
    """Smallest eigenvalue of a Hermitian (PSD) matrix."""
    data = _as_array(M)
    check_hermitian(data)
    if data.size == 0:
        return float("inf")
    h = (data + data.conj().T) / 2
    return float(scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=[0, 0])[0])


def max_eig_hermitian(data: np.ndarray) -> float:
    data = np.asarray(data)
    check_hermitian(data, tol=1e-8 * max(1.0, np.max(np.abs(data), initial=0.0)))
    n = data.shape[0]
    if n == 0:
        return 0.0
    h = (data + data.conj().T) / 2
    return float(
        scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0]
    )


def psd_sqrt(G: np.ndarray) -> np.ndarray:
    w, V = scipy.linalg.eigh((G + G.conj().T) / 2)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (V * w) @ V.conj().T


@dataclass(frozen=True)
class FiniteRankOperator:
    """sum_i |u_i><v_i|, i.e. x -> sum_i <x, v_i> u_i."""

    dyads: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "dyads", tuple(self.dyads))

    def apply(self, x: FinVector) -> FinVector:
        out = FinVector()
        for u, v in self.dyads:
            c = inner(x, v)
            if c != 0:
                out = out + u * c
        return out

    def support(self) -> list:
        labels: dict = {}
        for u, v in self.dyads:
            for w in u.support():
                labels[w] = None
            for w in v.support():
                labels[w] = None
        return list(labels)

    def __add__(self, other: "FiniteRankOperator") -> "FiniteRankOperator":
        return FiniteRankOperator(self.dyads + other.dyads)

    def scaled(self, c: complex) -> "FiniteRankOperator":
        return FiniteRankOperator(tuple((u * c, v) for u, v in self.dyads))

    def left_mul(self, g: Word) -> "FiniteRankOperator":
        """lambda_g o T"""
        return FiniteRankOperator(tuple((lambda_apply(g, u), v) for u, v in self.dyads))

    def right_mul(self, g: Word) -> "FiniteRankOperator":
        """T o lambda_g (since <lambda_g x, v> = <x, lambda_{g^-1} v>)"""
        gi = invert(g)
        return FiniteRankOperator(tuple((u, lambda_apply(gi, v)) for u, v in self.dyads))

    def factors(self, index: WordIndex | None = None):
        """Sparse factor matrices (U, V) with T = U V^*."""
        if index is None:
            index = WordIndex(self.support())
        U = to_sparse([u for u, _ in self.dyads], index)
        V = to_sparse([v for _, v in self.dyads], index)
        return U, V


def projection_from_orthonormal(vectors: Sequence[FinVector]) -> FiniteRankOperator:
    return FiniteRankOperator(tuple((v, v) for v in vectors))


def commutator(g: Word, T: FiniteRankOperator) -> FiniteRankOperator:
    """[lambda_g, T] = lambda_g T - T lambda_g as a finite-rank operator."""
    return T.left_mul(g) + T.right_mul(g).scaled(-1.0)


def factor_norm(U, V) -> float:
    """||U V^*|| from the Gram matrices U^*U and V^*V.

    ||U V^*||^2 = lambda_max(G_U^{1/2} G_V G_U^{1/2}).
    """
    GU = U.conj().T @ U
    GV = V.conj().T @ V
    GU = GU.toarray() if sp.issparse(GU) else np.asarray(GU)
    GV = GV.toarray() if sp.issparse(GV) else np.asarray(GV)
    if GU.size == 0:
        return 0.0
    S = psd_sqrt(GU)
    return float(np.sqrt(max(max_eig_hermitian(S @ GV @ S), 0.0)))


def finite_rank_norm(T: FiniteRankOperator) -> float:
    """Exact operator norm via dyad Gram algebra (no window needed)."""
    if not T.dyads:
        return 0.0
    U, V = T.factors()
    return factor_norm(U, V)


def generator_action(g: Word) -> Callable[[Hashable], FinVector]:
    return lambda x: FinVector.delta(multiply(g, x))


def compress(op, basis: Sequence, col_basis: Sequence | None = None) -> MatrixOnBasis:
    """Matrix of ``op`` with rows ``basis`` and columns ``col_basis``.

    ``op`` is a FiniteRankOperator, a Word (acting by lambda) or a
    callable sending a column label to its image FinVector.  Raises
    WindowError if an image leaves the row basis, so the compression is
    never a silent truncation.
    """
    rows = WordIndex(basis)
    cols = list(basis if col_basis is None else col_basis)
    if isinstance(op, FiniteRankOperator):
        index = WordIndex(list(rows) + cols + op.support())
        U, V = op.factors(index)
        n = len(rows)
        outside = U.tocsr()[n:, :]
        if outside.nnz and np.max(np.abs(outside.data)) >= PRUNE:
            raise WindowError("operator range leaves the compression window")
        Ur = U.tocsr()[:n, :].toarray()
        Vc = V.tocsr()[[index.position(w) for w in cols], :].toarray()
        return MatrixOnBasis(rows.labels, Ur @ Vc.conj().T, cols)
    if isinstance(op, Word):
        op = generator_action(op)
    data = np.zeros((len(rows), len(cols)), dtype=complex)
    for j, w in enumerate(cols):
        for x, c in op(w).items():
            data[rows.position(x), j] += c
    return MatrixOnBasis(rows.labels, data, cols)
