"""Witness values for the modulus of quasidiagonality.

A single finite-rank projection P gives one sample max_g ||[U_g, P]|| of the
liminf that defines qd; everything here is an upper-bound sample, never qd
itself.  Generators are basis maps (left translations, shifts): each sends a
basis label to another label, or to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import linops, pvv
from .linops import WindowError
from .words import Word, invert, multiply, to_text, word_key

ORTHO_TOL = 1e-12
RANK_TOL = 1e-9


# ---------------------------------------------------------------- generators


@dataclass(frozen=True)
class Generator:
    """A unitary or isometry acting on labels: forward(x) is U delta_x's label.

    ``backward`` realises U^*: it returns the label y with U delta_y = delta_x,
    or None when delta_x is orthogonal to the range of U.
    """

    name: str
    forward: Callable[[Hashable], Hashable]
    backward: Callable[[Hashable], Optional[Hashable]]


def word_generator(g: Word) -> Generator:
    gi = invert(g)
    return Generator(
        f"lambda_{to_text(g)}", lambda x: multiply(g, x), lambda x: multiply(gi, x)
    )


def bilateral_shift() -> Generator:
    return Generator("bilateral_shift", lambda n: n + 1, lambda n: n - 1)


def unilateral_shift() -> Generator:
    return Generator("unilateral_shift", lambda n: n + 1, lambda n: n - 1 if n > 0 else None)


def _dense_action(gen: Generator, labels: Sequence, pos: dict, adjoint=False) -> np.ndarray:
    """Matrix of U (or U^*) compressed to the ambient labels."""
    n = len(labels)
    M = np.zeros((n, n))
    f = gen.backward if adjoint else gen.forward
    for j, x in enumerate(labels):
        y = f(x)
        if y is not None and y in pos:
            M[pos[y], j] = 1.0
    return M


# ---------------------------------------------------------------- candidates


@dataclass(frozen=True)
class ProjectionCandidate:
    ambient: tuple
    frame: np.ndarray
    generators: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "ambient", tuple(self.ambient))
        F = np.asarray(self.frame, dtype=complex)
        if F.ndim != 2 or F.shape[0] != len(self.ambient):
            raise ValueError("frame must have one row per ambient label")
        object.__setattr__(self, "frame", F)
        object.__setattr__(self, "generators", tuple(self.generators))
        err = self.orthonormality_error()
        if err > ORTHO_TOL * max(1, F.shape[1]):
            raise ValueError(f"frame columns are not orthonormal (error {err:.3g})")

    @property
    def rank(self) -> int:
        return self.frame.shape[1]

    @cached_property
    def position(self) -> dict:
        return {x: i for i, x in enumerate(self.ambient)}

    def orthonormality_error(self) -> float:
        F = self.frame
        return float(np.max(np.abs(F.conj().T @ F - np.eye(F.shape[1])), initial=0.0))

    def support(self) -> list:
        rows = np.flatnonzero(np.max(np.abs(self.frame), axis=1, initial=0.0) > 0)
        return [self.ambient[i] for i in rows]

    @property
    def window_ok(self) -> bool:
        """Range and its images under every generator and adjoint stay inside."""
        pos = self.position
        for x in self.support():
            for g in self.generators:
                for y in (g.forward(x), g.backward(x)):
                    if y is not None and y not in pos:
                        return False
        return True

    def with_frame(self, frame: np.ndarray) -> "ProjectionCandidate":
        return ProjectionCandidate(self.ambient, frame, self.generators)


def interior_mask(ambient: Sequence, generators: Sequence[Generator]) -> np.ndarray:
    """Labels whose images under every generator and adjoint stay in ambient."""
    pos = set(ambient)
    mask = np.ones(len(ambient), dtype=bool)
    for i, x in enumerate(ambient):
        for g in generators:
            for y in (g.forward(x), g.backward(x)):
                if y is not None and y not in pos:
                    mask[i] = False
    return mask


def orthonormalize(M: np.ndarray) -> np.ndarray:
    Q, Rf = np.linalg.qr(M)
    # fix the phase so the retraction is a function of M alone
    d = np.diag(Rf)
    ph = np.where(np.abs(d) > 0, d / np.maximum(np.abs(d), 1e-300), 1.0)
    return Q * ph.conj()


def candidate_from_vectors(
    vectors: Sequence[linops.FinVector],
    generators: Sequence[Generator],
    sort_key=None,
) -> ProjectionCandidate:
    """Ambient = supports of the vectors plus their images under the generators."""
    labels = [w for v in vectors for w in v.support()]
    extra = []
    for x in labels:
        for g in generators:
            for y in (g.forward(x), g.backward(x)):
                if y is not None:
                    extra.append(y)
    index = linops.WordIndex(labels + extra, sort_key=sort_key)
    F = linops.to_sparse(vectors, index).toarray()
    return ProjectionCandidate(tuple(index.labels), F, tuple(generators))


def q_candidate(params: pvv.PVVParams, generators=None) -> ProjectionCandidate:
    from .words import a, b

    gens = generators or (word_generator(a), word_generator(b))
    basis = pvv.build_eta_basis(params)
    return candidate_from_vectors(basis.vectors, gens, sort_key=word_key)


def p_candidate(params: pvv.PVVParams, generators=None) -> ProjectionCandidate:
    from .words import a

    gens = generators or (word_generator(a),)
    basis = pvv.build_eta_prime_basis(params)
    return candidate_from_vectors(basis.vectors, gens, sort_key=word_key)


def berg_taper_vectors(K: int) -> list[linops.FinVector]:
    """sqrt(k/K) delta_{k-K} + sqrt((K-k)/K) delta_k, k = 0..K-1, on Z."""
    if K < 1:
        raise ValueError("K must be positive")
    return [
        linops.FinVector.combination(
            [(k - K, math.sqrt(k / K)), (k, math.sqrt((K - k) / K))]
        )
        for k in range(K)
    ]


def z_window(K: int) -> tuple:
    """The 4K integers -2K .. 2K-1."""
    return tuple(range(-2 * K, 2 * K))


def berg_taper_candidate(K: int) -> ProjectionCandidate:
    ambient = z_window(K)
    pos = {x: i for i, x in enumerate(ambient)}
    F = np.zeros((len(ambient), K), dtype=complex)
    for j, v in enumerate(berg_taper_vectors(K)):
        for x, c in v.items():
            F[pos[x], j] = c
    return ProjectionCandidate(ambient, F, (bilateral_shift(),))


# ----------------------------------------------------------------- estimates


@dataclass(frozen=True)
class QDEstimate:
    label: str
    witness: ProjectionCandidate
    value: float
    per_generator: dict = field(default_factory=dict)
    method: str = "dense"

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("a witness value cannot be negative")


def commutator_dense(gen: Generator, cand: ProjectionCandidate) -> np.ndarray:
    """[U, P] on the ambient labels; exact when the window is ok."""
    U = _dense_action(gen, cand.ambient, cand.position)
    F = cand.frame
    P = F @ F.conj().T
    return U @ P - P @ U


def _commutator_factors(gen: Generator, cand: ProjectionCandidate):
    # [U, P] = (U F) F^* - F (U^* F)^*
    U = _dense_action(gen, cand.ambient, cand.position)
    Ut = _dense_action(gen, cand.ambient, cand.position, adjoint=True)
    F = cand.frame
    return np.hstack([U @ F, -F]), np.hstack([F, Ut @ F])


def commutator_norm(gen: Generator, cand: ProjectionCandidate, method: str = "auto") -> float:
    if method == "auto":
        method = "dense" if len(cand.ambient) <= linops.DENSE_LIMIT else "dyad"
    if method == "dense":
        return linops.operator_norm(commutator_dense(gen, cand), method="svd")
    if method == "dyad":
        Uf, Vf = _commutator_factors(gen, cand)
        return linops.factor_norm(Uf, Vf)
    raise ValueError(f"unknown method {method!r}")


def certified_upper_bound(
    generators: Sequence[Generator] | None,
    witness: ProjectionCandidate,
    method: str = "auto",
    label: str | None = None,
) -> QDEstimate:
    """Exact max_g ||[U_g, P]|| for one witness P."""
    gens = tuple(generators) if generators is not None else witness.generators
    if not gens:
        raise ValueError("need at least one generator")
    w = ProjectionCandidate(witness.ambient, witness.frame, gens)
    if not w.window_ok:
        raise WindowError("the witness range or its images leave the ambient window")
    if method == "auto":
        method = "dense" if len(w.ambient) <= linops.DENSE_LIMIT else "dyad"
    per = {g.name: commutator_norm(g, w, method) for g in gens}
    return QDEstimate(
        label or "{" + ", ".join(g.name for g in gens) + "}",
        w,
        max(per.values()),
        per,
        method,
    )


# ------------------------------------------------------- proper isometry demo


def _num_rank(M: np.ndarray) -> int:
    s = scipy.linalg.svdvals(M)
    return int(np.sum(s > RANK_TOL))


def shift_obstruction_demo(
    dim: int = 64, trials: int = 200, rank_max: int = 20, seed: int = 0
) -> dict:
    """Random projections P fixing eta = e_0 against the truncated unilateral shift."""
    if rank_max < 1 or trials < 1:
        raise ValueError("need rank_max >= 1 and trials >= 1")
    if dim < 3 * rank_max:
        raise ValueError(f"need dim >= 3*rank_max, got dim={dim}, rank_max={rank_max}")
    top = dim - rank_max - 2  # frames live on coordinates 0..top
    if top < rank_max:
        raise ValueError("isometry window too small for the requested rank")
    rng = np.random.default_rng(seed)
    S = np.eye(dim, k=-1)  # S e_i = e_{i+1}, truncated at the end
    results = []
    for t in range(trials):
        r = int(rng.integers(1, rank_max + 1))
        M = np.zeros((dim, r), dtype=complex)
        M[0, 0] = 1.0
        if r > 1:
            M[1 : top + 1, 1:] = rng.standard_normal((top, r - 1)) + 1j * rng.standard_normal(
                (top, r - 1)
            )
        F = orthonormalize(M)
        P = F @ F.conj().T
        rank_P = _num_rank(P)
        rank_SP = _num_rank(S @ P)
        rank_PS = _num_rank(P @ S)
        norm = float(scipy.linalg.svdvals(S @ P - P @ S)[0])
        results.append(
            {
                "trial": t,
                "rank": r,
                "rank_P": rank_P,
                "rank_SP": rank_SP,
                "rank_PS": rank_PS,
                "fixes_eta": bool(abs(P[0, 0] - 1) < 1e-12),
                "commutator_norm": norm,
            }
        )
    min_norm = min(x["commutator_norm"] for x in results)
    ranks_ok = all(
        x["rank_SP"] == x["rank_P"] == x["rank"] and x["rank_PS"] < x["rank_P"]
        for x in results
    )
    return {
        "dim": dim,
        "trials": trials,
        "rank_max": rank_max,
        "seed": seed,
        "min_commutator_norm": min_norm,
        "rank_identities_ok": ranks_ok,
        "all_fix_eta": all(x["fixes_eta"] for x in results),
        "ok": ranks_ok and min_norm >= 1 - 1e-9,
        "trials_detail": results,
    }


# ----------------------------------------------------------------- optimizer


@dataclass(frozen=True)
class OptimizerConfig:
    temperature: float = 1e-3
    step0: float = 0.1
    min_step: float = 1e-14
    rel_tol: float = 1e-9
    patience: int = 50
    maxiter: int = 500

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _lse(s: np.ndarray, zeros: int, tau: float) -> tuple[float, np.ndarray, float]:
    """tau log sum exp(sigma / tau) over s plus ``zeros`` zero singular values."""
    m = float(s.max(initial=0.0))
    w = np.exp((s - m) / tau)
    Z = float(w.sum()) + zeros * math.exp(-m / tau)
    return m + tau * math.log(Z), w / Z, m


class _Problem:
    """Smoothed objective and gradient for frames F on a fixed ambient window.

    [U, FF^*] = X Y^* with X = [UF, -F], Y = [F, U^*F] has rank <= 2r, so
    its singular values come from the small core R_X R_Y^* after thin QRs.
    """

    def __init__(self, gens, ambient, mask):
        pos = {x: i for i, x in enumerate(ambient)}
        self.Us = [sp.csr_matrix(_dense_action(g, ambient, pos)) for g in gens]
        self.mask = mask
        self.n = len(ambient)

    def evaluate(self, F, tau):
        parts = []
        for U in self.Us:
            UF, UtF = U @ F, U.T @ F
            Qx, Rx = np.linalg.qr(np.hstack([UF, -F]))
            Qy, Ry = np.linalg.qr(np.hstack([F, UtF]))
            W, s, Zh = np.linalg.svd(Rx @ Ry.conj().T)
            parts.append((U, UF, UtF, Qx @ W, Qy @ Zh.conj().T, s))
        s_all = np.concatenate([p[-1] for p in parts])
        zeros = sum(self.n - len(p[-1]) for p in parts)
        value, w_all, exact = _lse(s_all, zeros, tau)
        state, off = [], 0
        for U, UF, UtF, Lx, Ly, s in parts:
            w = w_all[off : off + len(s)]
            off += len(s)
            state.append((U, UF, UtF, Lx * w, Ly))
        return value, state, exact

    def gradient(self, F, state):
        # Euclidean gradient of Re tr(G^*[U, FF^*]) in F is (H + H^*) F with
        # H = U^* G - G U^* and G = A B^* the weighted singular dyads
        out = np.zeros_like(F)
        for U, UF, UtF, A, B in state:
            GF = A @ (B.conj().T @ F)
            GUtF = A @ (B.conj().T @ UtF)
            GsUF = B @ (A.conj().T @ UF)
            GsF = B @ (A.conj().T @ F)
            out += U.T @ GF - GUtF + GsUF - U @ GsF
        out -= F @ (F.conj().T @ out)
        out[~self.mask] = 0
        return out


def random_candidate(
    ambient: Sequence, rank: int, generators: Sequence[Generator], seed: int
) -> ProjectionCandidate:
    mask = interior_mask(ambient, generators)
    if mask.sum() < rank:
        raise ValueError("not enough interior coordinates for the requested rank")
    rng = np.random.default_rng(seed)
    k = int(mask.sum())
    M = np.zeros((len(ambient), rank), dtype=complex)
    # orthonormalise the interior block only, so rows outside stay exactly zero
    M[mask] = orthonormalize(rng.standard_normal((k, rank)) + 1j * rng.standard_normal((k, rank)))
    return ProjectionCandidate(ambient, M, tuple(generators))


@dataclass
class OptimizeResult:
    estimate: QDEstimate
    init_value: float
    iterations: int
    converged: bool
    history: list
    config: OptimizerConfig
    seed: Optional[int]
    baseline_value: Optional[float] = None

    def to_json(self) -> dict:
        w = self.estimate.witness
        return {
            "generators": [g.name for g in w.generators],
            "rank": w.rank,
            "window": len(w.ambient),
            "seed": self.seed,
            "iterations": self.iterations,
            "value": self.estimate.value,
            "baseline_value": self.baseline_value,
            "converged": self.converged,
            "init_value": self.init_value,
            "config": self.config.to_json(),
        }


def optimize_projection(
    generators: Sequence[Generator],
    ambient: Sequence | None = None,
    rank: int | None = None,
    init: ProjectionCandidate | None = None,
    config: OptimizerConfig | None = None,
    seed: int | None = 0,
    baseline_value: float | None = None,
) -> OptimizeResult:
    """Locally minimise max_g ||[U_g, P]|| over rank-fixed projections.

    Gradient descent on a smoothed max, frames retracted by QR, step size by
    backtracking.  Returns the best exactly evaluated frame seen, so the
    result is never worse than ``init``.
    """
    cfg = config or OptimizerConfig()
    gens = tuple(generators)
    if init is None:
        if ambient is None or rank is None:
            raise ValueError("give either init or both ambient and rank")
        init = random_candidate(ambient, rank, gens, seed)
    else:
        init = ProjectionCandidate(init.ambient, init.frame, gens)
        if rank is not None and rank != init.rank:
            raise ValueError("rank does not match init")
    if not init.window_ok:
        raise WindowError("initial frame leaves the interior of the window")
    mask = interior_mask(init.ambient, gens)
    prob = _Problem(gens, init.ambient, mask)

    F = init.frame.copy()
    f, state, exact = prob.evaluate(F, cfg.temperature)
    best_F, best_exact = F, exact
    init_value = exact
    history = [f]
    step = cfg.step0
    converged = False
    it = 0
    while it < cfg.maxiter:
        it += 1
        D = prob.gradient(F, state)
        if not np.any(D):
            converged = True
            break
        t = step
        accepted = False
        while t >= cfg.min_step:
            Fn = orthonormalize(F - t * D)
            Fn[~mask] = 0  # QR keeps the zero rows; this guards round-off
            fn, sn, en = prob.evaluate(Fn, cfg.temperature)
            if fn < f:
                accepted = True
                break
            t /= 2
        if not accepted:
            converged = True
            break
        F, f, state = Fn, fn, sn
        # allow the step to grow back after successful steps
        step = min(cfg.step0, 2 * t)
        history.append(f)
        if en < best_exact:
            best_F, best_exact = F, en
        if len(history) > cfg.patience:
            old = history[-1 - cfg.patience]
            if abs(old - f) <= cfg.rel_tol * abs(old):
                converged = True
                break
    best = ProjectionCandidate(init.ambient, best_F, gens)
    est = certified_upper_bound(gens, best, method="dense")
    if est.value > init_value:
        # re-orthonormalising can move the value by round-off; fall back to init
        est = certified_upper_bound(gens, init, method="dense")
    return OptimizeResult(est, init_value, it, converged, history, cfg, seed, baseline_value)


def z_baseline_run(K: int, config: OptimizerConfig | None = None) -> OptimizeResult:
    """Optimise from the Berg taper on the bilateral shift, rank K, window 4K."""
    cand = berg_taper_candidate(K)
    base = certified_upper_bound(None, cand).value
    return optimize_projection(
        cand.generators, init=cand, config=config, seed=None, baseline_value=base
    )
