"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.  Frozen oracle values were produced by
the same code on the reference machine before these tests were written.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from qdlab import linops, lp_reps, pvv, qdmod, tables
from qdlab.linops import FinVector
from qdlab.lp_reps import INF, BoundParams, PSParams
from qdlab.pvv import PVVParams
from qdlab.qdmod import OptimizerConfig
from qdlab.words import ball, gen, multiply

SQRT3_2 = math.sqrt(3) / 2

# commutator norms ||[lambda_a, Q]|| at R = 1 from the oracle run
NORM_ORACLE = {
    50: 0.8665349718507707,
    100: 0.8662765655033449,
    200: 0.8661500988457049,
    400: 0.86608753227337054,
}
# tighter N = 400 window fixed from the oracle: just above sqrt(3)/2
N400_WINDOW = (SQRT3_2, SQRT3_2 + 1e-4)

# Z baseline schedule: rank K, window 4K, Berg taper init, maxiter 300
Z_SCHEDULE_CONFIG = OptimizerConfig(maxiter=300)
Z_ORACLE = {
    25: (0.2, 0.0679855843746763),
    50: (50**-0.5, 0.04227405595165597),
    100: (0.1, 0.027321418832049183),
}
Z_ORACLE_RTOL = 1e-6


class Outcome:
    def __init__(self, number: str, title: str):
        self.number, self.title = number, title
        self.checks: list[tuple[str, bool]] = []
        self.started = time.perf_counter()

    def check(self, label: str, ok) -> bool:
        self.checks.append((label, bool(ok)))
        return bool(ok)

    @property
    def ok(self) -> bool:
        return all(ok for _, ok in self.checks)

    @property
    def failed(self) -> list[str]:
        return [label for label, ok in self.checks if not ok]

    def line(self) -> str:
        secs = time.perf_counter() - self.started
        verdict = "PASS" if self.ok else "FAIL"
        tail = "" if self.ok else "  failed: " + "; ".join(self.failed)
        return f"criterion {self.number:>3} {verdict}  {self.title} [{secs:.1f}s]{tail}"


# ----------------------------------------------------------------- criteria


def crit_1_literal() -> Outcome:
    """The closed form exactly as stated, read as the size of the ball."""
    out = Outcome("1a", "|B_R| = 1 + 4*3^(R-1) read literally, R = 1..6")
    for R in range(1, 7):
        n = len(ball(R, 2))
        out.check(f"R={R} |B_R|={n} vs {1 + 4 * 3 ** (R - 1)}", n == 1 + 4 * 3 ** (R - 1))
    return out


def crit_1() -> Outcome:
    # 1 + 4*3^(R-1) is one plus the radius-R sphere; the ball itself has
    # 1 + sum_{n<=R} 4*3^(n-1) = 2*3^R - 1 words (17 at R = 2)
    out = Outcome("1", "ball and sphere counts for d = 2, R = 1..6")
    for R in range(1, 7):
        words = ball(R, 2)
        on_sphere = sum(1 for w in words if len(w) == R)
        out.check(f"R={R} |B_R| = 2*3^R - 1", len(words) == 2 * 3**R - 1)
        out.check(f"R={R} 1 + |S_R| = 1 + 4*3^(R-1)", 1 + on_sphere == 1 + 4 * 3 ** (R - 1))
    out.check("|B_2| = 17", len(ball(2, 2)) == 17)
    out.check("runtime < 1s", time.perf_counter() - out.started < 1)
    return out


def crit_2() -> Outcome:
    out = Outcome("2", "||[P, lambda_a]|| <= N^(-1/2) + 1e-10")
    for N, R in [(64, 1), (100, 1), (256, 1), (64, 2)]:
        v = pvv.commutator_norm_P(PVVParams(N, R))
        out.check(f"(N,R)=({N},{R}) value {v:.12g}", v <= N**-0.5 + 1e-10)
    out.check("runtime < 60s", time.perf_counter() - out.started < 60)
    return out


def crit_3() -> Outcome:
    out = Outcome("3", "Gram of eta family = identity to 1e-12")
    for N, R in [(8, 1), (8, 2), (50, 1)]:
        basis = pvv.build_eta_basis(PVVParams(N, R))
        err = np.max(np.abs(linops.gram(basis.vectors) - np.eye(len(basis))))
        out.check(f"(N,R)=({N},{R}) err {err:.2e}", err <= 1e-12)
    return out


def crit_4_printed() -> Outcome:
    """The tables exactly as printed, against the raw thresholds."""
    out = Outcome("4a", "printed Tables 1-2: sound, complete, covered")
    for N, R in [(32, 1), (32, 2)]:
        rep = tables.audit(PVVParams(N, R), "12")
        out.check(f"({N},{R}) soundness {rep.max_abs_discrepancy:.3g} <= 1e-10", rep.sound)
        out.check(f"({N},{R}) completeness ({len(rep.missing_nonzero)} missing)", rep.complete)
        out.check(f"({N},{R}) coverage (gaps {rep.coverage_gaps})", rep.covered)
    return out


def crit_4() -> Outcome:
    """Brute force as the passing reference, every discrepancy surfaced."""
    out = Outcome("4", "table audit with brute-force reference; conjugation route")
    for N, R in [(32, 1), (32, 2)]:
        params = PVVParams(N, R)
        basis, T = tables.brute_force(params, "12")
        printed = tables.audit(params, "12", basis)
        # every printed entry off by more than the soundness tolerance is
        # listed with its box, row, partner, printed formula and true value
        preds, _, _ = tables._row_predictions(params, "12", basis.pairs)
        expected = set()
        for row, (spec, _, rows) in preds.items():
            i = basis.position(row)
            for ps, col, val in rows:
                if col in basis and abs(val - T[i, basis.position(col)]) > tables.SOUND_TOL:
                    expected.add((str(row), str(col)))
        surfaced = {(d["row"], d["col"]) for d in printed.discrepancies}
        out.check(f"({N},{R}) all {len(expected)} printed discrepancies surfaced",
                  expected == surfaced)
        out.check(f"({N},{R}) discrepancies carry provenance", all(
            {"box", "partner", "printed", "brute_force"} <= set(d) for d in printed.discrepancies))
        ref = tables.audit(params, "12", basis, errata=True)
        out.check(f"({N},{R}) reference soundness {ref.max_abs_discrepancy:.2e}", ref.sound)
        out.check(f"({N},{R}) reference completeness at 1e-12", ref.complete)
        out.check(f"({N},{R}) reference partition coverage exact", ref.covered)
    p8 = PVVParams(8, 1)
    for errata in (False, True):
        direct = tables.audit(p8, "34", errata=errata)
        via = tables.audit_via_conjugation(p8, errata=errata)
        out.check(f"(8,1) Tables 3-4 direct == conjugation route (errata={errata})",
                  direct.signature() == via.signature()
                  and abs(direct.max_abs_discrepancy - via.max_abs_discrepancy) <= 1e-12)
    out.check("(8,1) conjugation identity over F x F to 1e-12", tables.conjugation_gram_gap(p8) <= 1e-12)
    out.check("runtime < 5min", time.perf_counter() - out.started < 300)
    return out


_WITNESS_CACHE: dict = {}


def _witness(N: int) -> dict:
    if N not in _WITNESS_CACHE:
        _WITNESS_CACHE[N] = pvv.witness_report(PVVParams(N, 1))
    return _WITNESS_CACHE[N]


def crit_5() -> Outcome:
    out = Outcome("5", "||[lambda_a,Q]||: paths, symmetry, < 1, N = 400 window, trend")
    values = []
    for N in sorted(NORM_ORACLE):
        r = _witness(N)
        na, nb = r["norm_comm_a"], r["norm_comm_b"]
        values.append(max(na, nb))
        out.check(f"N={N} paths agree", abs(na - r["norm_comm_a_t_path"]) <= 1e-8
                  and abs(nb - r["norm_comm_b_t_path"]) <= 1e-8)
        out.check(f"N={N} a/b symmetry", abs(na - nb) <= 1e-8)
        out.check(f"N={N} value {na:.12f} < 1", max(na, nb) < 1)
        out.check(f"N={N} matches oracle", abs(na - NORM_ORACLE[N]) <= 1e-8)
    v400 = values[-1]
    out.check("N=400 in [0.5, sqrt3/2 + 0.15]", 0.5 <= v400 <= SQRT3_2 + 0.15)
    lo, hi = N400_WINDOW
    out.check(f"N=400 in frozen window [{lo:.10f}, {hi:.10f}]", lo <= v400 <= hi)
    out.check("non-increasing in N (1e-6 slack)", all(y <= x + 1e-6 for x, y in zip(values, values[1:])))
    out.check("runtime < 10min", time.perf_counter() - out.started < 600)
    return out


def crit_6() -> Outcome:
    out = Outcome("6", "per-pair minima over S and restricted lambda_min")
    for N, R in [(50, 2), (100, 2)]:
        rep = pvv.coloredtable_check(pvv.build_eta_basis(PVVParams(N, R)))
        out.check(f"({N},{R}) per-pair min {rep['per_pair_min']:.6f} >= {(N - R) / N:.6f}",
                  rep["per_pair_min"] >= (N - R) / N - 1e-10)
        out.check(f"({N},{R}) lambda_min_S {rep['lambda_min_S']:.6f} >= {1 - N**-0.25:.6f}",
                  rep["lambda_min_S"] >= 1 - N**-0.25 - 1e-10)
    return out


def crit_7() -> Outcome:
    out = Outcome("7", "restricted lambda_min over F\\S exceeds (1 - N^(-1/9))/4")
    for N in (50, 100):
        params = PVVParams(N, 1)
        rep = pvv.claim_check(pvv.build_eta_basis(params))
        lam, bound = rep["lambda_min_F_minus_S"], rep["claimed_bound"]
        out.check(f"N={N} {lam:.6f} > {bound:.6f}", lam > bound)
    return out


def crit_8() -> Outcome:
    out = Outcome("8", "proper isometry: 200 projections, dim 64, rank <= 20")
    rep = qdmod.shift_obstruction_demo(dim=64, trials=200, rank_max=20, seed=0)
    out.check(f"min norm {rep['min_commutator_norm']:.15f} >= 1 - 1e-9",
              rep["min_commutator_norm"] >= 1 - 1e-9)
    out.check("rank identities in every trial", rep["rank_identities_ok"])
    out.check("every projection fixes eta", rep["all_fix_eta"])
    out.check("runtime < 30s", time.perf_counter() - out.started < 30)
    return out


def crit_9() -> Outcome:
    out = Outcome("9", "pi_z identities to 1e-12; generator gap on 11-point grid")
    zs = [0.0, 0.3, 3 ** -0.5, 0.9, 1.0]
    B2, B3 = ball(2), ball(3)
    for z in zs:
        worst = 0.0
        cache = {(t, x): lp_reps.pi_z_word(z, t, FinVector.delta(x)) for t in B3 for x in B2}
        for s in B3:
            for t in B3:
                st = multiply(s, t)
                for x in B2:
                    lhs = lp_reps.pi_z_word(z, s, cache[t, x])
                    worst = max(worst, (lhs - lp_reps.pi_z_word(z, st, FinVector.delta(x))).norm())
        out.check(f"homomorphism z={z:.4f} err {worst:.1e}", worst <= 1e-12)
    rng = np.random.default_rng(0)
    for z in zs:
        worst = 0.0
        for _ in range(20):
            c = rng.standard_normal(len(B2)) + 1j * rng.standard_normal(len(B2))
            v = FinVector(dict(zip(B2, c)))
            for i in (1, -1, 2, -2):
                worst = max(worst, abs(lp_reps.pi_z_apply(z, i, v).norm() - v.norm()))
        out.check(f"isometry z={z:.4f}", worst <= 1e-12)
    exact = all(
        lp_reps.pi_z_apply(0.0, i, FinVector.delta(x)) == FinVector.delta(multiply(gen(i), x))
        for x in B3 for i in (1, -1, 2, -2)
    )
    out.check("pi_0 = lambda exactly", exact)
    B5 = ball(5)
    for z in zs:
        params = PSParams(z, 2, 5)
        worst = max(abs(lp_reps.matrix_coefficient(params, t) - z ** len(t)) for t in B5)
        out.check(f"matrix coefficient z={z:.4f}", worst <= 1e-12)
    grid = np.linspace(0, 1, 11)
    gap = max(abs(lp_reps.generator_gap(z) - math.sqrt(2 - 2 * z)) for z in grid)
    out.check(f"generator gap err {gap:.1e}", gap <= 1e-12)
    return out


def crit_10() -> Outcome:
    out = Outcome("10", "Haagerup Gram on ball(3) is PSD for r = 0.1..0.9")
    for r in np.round(np.arange(1, 10) / 10, 1):
        lam = linops.min_eig_psd(lp_reps.haagerup_gram(float(r), 3))
        out.check(f"r={r} min eig {lam:.3e}", lam >= -1e-10)
    return out


def crit_11() -> Outcome:
    out = Outcome("11", "bound functions: monotone, values, limits")
    qd = [lp_reps.qd_upper_bound(p, 2) for p in range(2, 65)]
    out.check("qd_upper strictly decreasing on p = 2..64", all(y < x for x, y in zip(qd, qd[1:])))
    exact = math.sqrt(2 - 2 / math.sqrt(3))
    out.check(f"qd_upper(2,2) = {qd[0]:.10f} = sqrt(2 - 2/sqrt3)", abs(qd[0] - exact) <= 1e-15)
    out.check("qd_upper(2,2) ~ 0.919403 (6-digit value, 1.3e-6 off)", abs(qd[0] - 0.919403) <= 2e-6)
    out.check("qd_upper(4096,2) < 0.05", lp_reps.qd_upper_bound(4096, 2) < 0.05)
    for p in (2, 3, 8):
        vals = [lp_reps.cb_upper_bound(BoundParams(p, p + 10.0**-j, 2)) for j in range(0, 13, 2)]
        out.check(f"cb_upper -> 1 as q -> p={p}",
                  all(y < x for x, y in zip(vals, vals[1:])) and abs(vals[-1] - 1) < 1e-4)
    return out


def crit_12() -> Outcome:
    out = Outcome("12", "optimizer: never worse than init; Z schedule matches oracle")
    cand = qdmod.q_candidate(PVVParams(50, 1))
    init = qdmod.certified_upper_bound(None, cand).value
    res = qdmod.optimize_projection(cand.generators, init=cand, config=OptimizerConfig(maxiter=20))
    out.check(f"F_2 from Q(50,1): {res.estimate.value:.12f} <= {init:.12f} + 1e-12",
              res.estimate.value <= init + 1e-12)
    z = qdmod.berg_taper_candidate(10)
    for seed in range(3):
        r = qdmod.optimize_projection(z.generators, z.ambient, 10, config=OptimizerConfig(maxiter=40), seed=seed)
        out.check(f"Z random init seed {seed}", r.estimate.value <= r.init_value + 1e-12)
    prev = None
    for K, (base, want) in sorted(Z_ORACLE.items()):
        r = qdmod.z_baseline_run(K, Z_SCHEDULE_CONFIG)
        v = r.estimate.value
        out.check(f"K={K} baseline {r.baseline_value:.12f}", abs(r.baseline_value - base) <= 1e-12)
        out.check(f"K={K} value {v:.12f} below baseline", v <= r.baseline_value)
        out.check(f"K={K} value matches oracle {want:.12f}", abs(v - want) <= Z_ORACLE_RTOL * want)
        if prev is not None:
            out.check(f"K={K} improves on the previous K", v < prev)
        prev = v
    return out


CRITERIA = [crit_1_literal, crit_1, crit_2, crit_3, crit_4_printed, crit_4, crit_5, crit_6,
            crit_7, crit_8, crit_9, crit_10, crit_11, crit_12]


# ------------------------------------------------------------------ pytest


@pytest.fixture
def report(request):
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def emit(out: Outcome) -> Outcome:
        line = out.line()
        lines.append(line)
        print(line)
        return out

    return emit


ACCEPTANCE_KEY = pytest.StashKey[list]()


RAW_FAILURES = (crit_1_literal, crit_4_printed)


@pytest.mark.parametrize("crit", [c for c in CRITERIA if c not in RAW_FAILURES], ids=lambda c: c.__name__)
def test_criterion(crit, report):
    out = report(crit())
    assert out.ok, out.failed


@pytest.mark.xfail(strict=True, reason="the stated closed form counts the sphere plus one, not the ball")
def test_criterion_1_literal_formula(report):
    out = report(crit_1_literal())
    assert out.ok, out.failed


@pytest.mark.xfail(strict=True, reason="printed Tables 1-2 contain wrong entries and miss the row (1,e)")
def test_criterion_4_printed_tables_raw(report):
    out = report(crit_4_printed())
    assert out.ok, out.failed


if __name__ == "__main__":
    for c in CRITERIA:
        print(c().line(), flush=True)
