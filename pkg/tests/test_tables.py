import math

import numpy as np
import pytest

from qdlab import linops, pvv, tables
from qdlab.pvv import A_COEF, B_COEF, IndexPair, PVVParams
from qdlab.words import IDENTITY, B, a, b, beta, parse

A_BAR = A_COEF.conjugate()


def test_param_guard():
    with pytest.raises(ValueError):
        tables.audit(PVVParams(5, 1), "12")
    with pytest.raises(ValueError):
        tables.box_specs("56")


def test_box_ids():
    ids = [s.box_id for s in tables.box_specs("12")]
    assert ids == ["H1", "H2"] + [str(i) for i in range(1, 21)]
    assert [s.box_id for s in tables.box_specs("12", errata=True)][-1] == "X1"


def test_header_row_one():
    params = PVVParams(8, 1)
    h1 = tables.get_box("12", "H1")
    assert tables.enumerate_box(h1, params) == [IndexPair(0, IDENTITY)]
    N = params.N
    got = dict(tables.predicted_products(h1, IndexPair(0, IDENTITY), params))
    assert got[IndexPair(N - 1, IDENTITY)] == pytest.approx(math.sqrt((N - 1) / N) * A_BAR)
    assert got[IndexPair(0, B)] == pytest.approx(B_COEF.conjugate())


def test_box16_second_partner():
    N, R = 12, 2
    params = PVVParams(N, R)
    box = tables.get_box("12", "16")
    members = tables.enumerate_box(box, params)
    assert members
    for p in members:
        vals = [v for _, v in tables.predicted_products(box, p, params)]
        k = p.k
        assert vals[2] == pytest.approx(math.sqrt((N - 1) * (N - k) / N**2) * A_BAR * B_COEF)


def test_box20_membership():
    N, R = 6, 1
    params = PVVParams(N, R)
    got = set(tables.enumerate_box(tables.get_box("12", "20"), params))
    want = {
        p for p in pvv.build_F(params)
        if p.k >= 2 and R + 1 - len(p.x) < p.k < N - R + len(p.x)
    }
    assert got == want


def test_printed_partition_and_corrected_partition():
    params = PVVParams(8, 2)
    F = pvv.build_F(params)
    counts = {p: len(tables.classify(p, params, "12")) for p in F}
    # the printed boxes never overlap, and only the row (1, e) is left out
    assert max(counts.values()) == 1
    assert [p for p, c in counts.items() if c == 0] == [IndexPair(1, IDENTITY)]
    assert all(len(tables.classify(p, params, "12", errata=True)) == 1 for p in F)


def test_printed_tables_disagree_with_brute_force():
    rep = tables.audit(PVVParams(14, 3), "12")
    assert rep.max_abs_discrepancy > 1e-3
    boxes = {d["box"] for d in rep.discrepancies}
    # every disagreeing box is one the corrected layer touches, and vice versa
    fixed = {bid for (t, bid, _) in tables.ERRATA_VALUES if t == "12"}
    assert boxes == fixed
    assert rep.coverage_gaps == ["(1,e)"]
    for d in rep.discrepancies:
        assert {"table", "box", "row", "col", "partner", "printed", "brute_force", "abs_diff"} <= set(d)


@pytest.mark.parametrize("N,R", [(8, 1), (12, 2), (14, 3)])
@pytest.mark.parametrize("table", tables.TABLE_IDS)
def test_corrected_tables_pass(N, R, table):
    rep = tables.audit(PVVParams(N, R), table, errata=True)
    assert rep.max_abs_discrepancy <= tables.SOUND_TOL
    assert rep.missing_nonzero == []
    assert rep.coverage_gaps == []
    assert rep.passing


def test_report_json_fields():
    out = tables.audit(PVVParams(8, 1), "12").to_json()
    for key in tables.AuditReport.REQUIRED:
        assert key in out


def test_W_conjugation_examples():
    N = 8
    params = PVVParams(N, 2)
    basis = pvv.build_eta_basis(params)
    for p in basis.pairs:
        if p.k in (0, 3):
            w = basis.vector(p).map_support(beta)
            target = basis.vector(IndexPair(tables.w_index(p.k, N), beta(p.x)))
            assert (w - target).norm() <= 1e-14


def test_conjugation_identity_over_F():
    assert tables.conjugation_gram_gap(PVVParams(6, 1)) <= 1e-12


def test_conjugation_identity_mapping():
    p, q = IndexPair(3, parse("bA")), IndexPair(0, b)
    assert tables.conjugation_identity(p, q, PVVParams(8, 2)) == (
        IndexPair(5, parse("Ba")), IndexPair(0, B)
    )


@pytest.mark.parametrize("errata", [False, True])
def test_direct_and_conjugation_routes_agree(errata):
    params = PVVParams(8, 1)
    direct = tables.audit(params, "34", errata=errata)
    via = tables.audit_via_conjugation(params, errata=errata)
    assert direct.signature() == via.signature()
    assert direct.max_abs_discrepancy == pytest.approx(via.max_abs_discrepancy, abs=1e-12)


def test_printed_34_against_relabelled_12():
    rep = tables.conjugation_agreement(PVVParams(10, 2))
    # a single header entry is printed with conjugated twist constants
    assert len(rep["differences"]) == 1
    corrected = tables.conjugation_agreement(PVVParams(10, 2), errata=True)
    assert corrected["max_abs_diff"] <= 1e-12


def test_adjacency_outside_S():
    params = PVVParams(32, 2)
    basis, T = tables.brute_force(params, "12")
    adj = tables.adjacency_check(params, T, basis)
    assert "columns_outside_S" in adj


def test_case_cover_regimes():
    assert not tables.case_cover_check(PVVParams(16, 2))["ok"]
    assert tables.case_cover_check(PVVParams(16, 3))["ok"]


def test_case_quadratic_form_is_psd():
    params = PVVParams(16, 3)
    basis, T = tables.brute_force(params, "12")
    fams = tables.case_families(params)
    for fam in fams.values():
        if fam:
            M = tables.case_quadratic_form(T, basis, fam)
            assert linops.min_eig_psd(M) >= -1e-10
