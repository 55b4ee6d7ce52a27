import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qdlab import linops
from qdlab.linops import FinVector, FiniteRankOperator, MatrixOnBasis, WindowError
from qdlab.words import IDENTITY, a, alpha, b, ball, parse

A = (1 + 1j) / 2
B = (1 - 1j) / 2
B3 = ball(3)


def rand_vec(rng, words):
    c = rng.standard_normal(len(words)) + 1j * rng.standard_normal(len(words))
    c /= np.linalg.norm(c)
    return FinVector(dict(zip(words, c)))


def test_inner_examples():
    assert linops.inner(FinVector.delta(a), FinVector.delta(a)) == 1
    assert linops.inner(FinVector.delta(a), FinVector.delta(b)) == 0
    v = FinVector({b: A, alpha(b): B})
    assert linops.inner(v, v) == pytest.approx(1)


def test_inner_is_linear_in_first_slot():
    u, v = FinVector.delta(a), FinVector.delta(a)
    assert linops.inner(u * 1j, v) == pytest.approx(1j)
    assert linops.inner(u, v * 1j) == pytest.approx(-1j)


def test_lambda_apply_examples():
    assert linops.lambda_apply(a, FinVector.delta(b)) == FinVector.delta(parse("ab"))
    v = FinVector({a: 1, b: 2j})
    assert linops.lambda_apply(IDENTITY, v) == v
    assert linops.lambda_apply(parse("A"), FinVector.delta(parse("ab"))) == FinVector.delta(b)


@given(st.integers(0, 2**31 - 1), st.integers(0, len(B3) - 1))
def test_lambda_is_unitary(seed, gi):
    rng = np.random.default_rng(seed)
    g = B3[gi]
    u, v = rand_vec(rng, B3), rand_vec(rng, B3)
    lhs = linops.inner(linops.lambda_apply(g, u), linops.lambda_apply(g, v))
    assert abs(lhs - linops.inner(u, v)) <= 1e-12


def test_operator_norm_examples():
    dyad = FiniteRankOperator(((FinVector.delta(a), FinVector.delta(b)),))
    assert linops.finite_rank_norm(dyad) == pytest.approx(1)
    z = 0.5
    c = math.sqrt(1 - z * z)
    assert linops.operator_norm(np.array([[z - 1, c], [c, 1 - z]])) == pytest.approx(1)
    assert linops.operator_norm(np.zeros((3, 3))) == 0


def test_power_iteration_agrees_with_svd():
    M = np.random.default_rng(1).standard_normal((40, 30))
    assert linops.operator_norm(M, "power") == pytest.approx(linops.operator_norm(M, "svd"), rel=1e-8)


@given(st.integers(0, 2**31 - 1))
def test_norm_of_adjoint(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((7, 5)) + 1j * rng.standard_normal((7, 5))
    mb = MatrixOnBasis(list(range(7)), M, list(range(5)))
    assert abs(linops.operator_norm(mb) - linops.operator_norm(mb.adjoint())) <= 1e-10


def test_min_eig_examples():
    assert linops.min_eig_psd(np.eye(5)) == pytest.approx(1)
    assert linops.min_eig_psd(np.diag([0.25, 1])) == pytest.approx(0.25)
    vecs = [FinVector.delta(w) for w in ball(2)]
    assert linops.min_eig_psd(linops.gram(vecs)) == pytest.approx(1)


def test_min_eig_rejects_non_hermitian():
    with pytest.raises(ValueError):
        linops.min_eig_psd(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_compress_examples():
    P = FiniteRankOperator(((FinVector.delta(a), FinVector.delta(a)),))
    M = linops.compress(P, [IDENTITY, a, b])
    assert np.allclose(M.data, np.diag([0, 1, 0]))
    with pytest.raises(WindowError):
        linops.compress(a, ball(2))
    M = linops.compress(a, ball(3), ball(2))
    assert np.allclose(np.linalg.norm(M.data, axis=0), 1)


@given(st.integers(0, 2**31 - 1))
def test_dyad_norm_matches_compression(seed):
    rng = np.random.default_rng(seed)
    words = ball(2)
    dyads = tuple((rand_vec(rng, words), rand_vec(rng, words)) for _ in range(3))
    T = FiniteRankOperator(dyads)
    M = linops.compress(T, words)
    assert abs(linops.finite_rank_norm(T) - linops.operator_norm(M)) <= 1e-10


def test_pruning_threshold():
    v = FinVector({a: 1e-16, b: 1.0})
    assert v.support() == [b]
