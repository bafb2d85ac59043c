import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bincs import sensing
from bincs.errors import FormatError, NumericalError, ParameterError


def _params(M=64, n=16, nu=4):
    return sensing.LdpcParams.from_sizes(M, n, nu)


@pytest.mark.parametrize("M,n,nu", [(8, 4, 2), (64, 16, 4), (1024, 128, 16), (96, 36, 3)])
def test_biregular_degrees(M, n, nu):
    A = sensing.sample_gallager(_params(M, n, nu), seed=0)
    D = A.to_dense()
    assert D.shape == (n, M)
    assert np.all(D.sum(axis=0) == nu)
    assert np.all(D.sum(axis=1) == nu * M // n)
    A.validate()


def test_each_round_partitions_variables():
    p = _params(64, 16, 4)
    A = sensing.sample_gallager(p, seed=5)
    per = p.factors_per_round
    for r in range(p.var_degree):
        block = A.factor_adj[r * per:(r + 1) * per]
        assert sorted(block.ravel().tolist()) == list(range(p.num_vars))


def test_single_round_is_block_permutation():
    # nu=1, s=1: the matrix is a permutation matrix
    A = sensing.sample_gallager(sensing.LdpcParams(10, 10, 1, 1), seed=2)
    D = A.to_dense()
    assert np.array_equal(D @ D.T, np.eye(10, dtype=D.dtype))


def test_seed_reproducible():
    p = _params()
    a, b = sensing.sample_gallager(p, seed=9), sensing.sample_gallager(p, seed=9)
    assert np.array_equal(a.factor_adj, b.factor_adj)
    c = sensing.sample_gallager(p, seed=10)
    assert not np.array_equal(a.factor_adj, c.factor_adj)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), vec_seed=st.integers(0, 1000))
def test_products_match_dense(seed, vec_seed):
    A = sensing.sample_gallager(_params(64, 16, 4), seed=seed)
    D = A.to_dense().astype(float)
    rng = np.random.default_rng(vec_seed)
    x, r = rng.standard_normal(64), rng.standard_normal(16)
    np.testing.assert_allclose(A.matvec(x), D @ x, atol=1e-12)
    np.testing.assert_allclose(A.matvec_transpose(r), D.T @ r, atol=1e-12)


def test_ones_vector():
    p = _params(128, 32, 4)
    A = sensing.sample_gallager(p, seed=1)
    assert np.all(A.matvec(np.ones(128)) == p.factor_degree)
    assert np.all(A.matvec_transpose(np.ones(32)) == p.var_degree)
    assert A.column_energy() == 4


def test_matvec_shape_check(tiny_matrix):
    with pytest.raises(ParameterError):
        tiny_matrix.matvec(np.zeros(5))
    with pytest.raises(ParameterError):
        tiny_matrix.matvec_transpose(np.zeros(8))


@pytest.mark.parametrize("M,n,nu", [(6, 6, 4), (10, 3, 2), (0, 4, 2), (8, -4, 2)])
def test_invalid_params(M, n, nu):
    with pytest.raises(ParameterError):
        sensing.LdpcParams.from_sizes(M, n, nu)


def test_params_direct_mismatch():
    with pytest.raises(ParameterError):
        sensing.LdpcParams(8, 4, 2, 3)


def test_full_scale_edge_count():
    p = sensing.LdpcParams.from_sizes(2 ** 14, 2 ** 11, 16)
    assert p.factor_degree == 128
    assert p.num_edges == 2 ** 18


def test_binary_entropy():
    assert sensing.binary_entropy(0.0) == 0.0
    assert sensing.binary_entropy(1.0) == 0.0
    assert sensing.binary_entropy(0.5) == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(ParameterError):
        sensing.binary_entropy(1.5)


def test_alpha_star_true_root():
    a = sensing.expansion_alpha_star(16, 128)
    assert 0 < a < 16 / 128
    assert abs(sensing.expansion_equation(a, 16, 128)) < 1e-9
    assert a == pytest.approx(0.0993525, abs=1e-6)
    assert sensing.heuristic_sparsity(a, 2 ** 14, 16) == pytest.approx(101.74, abs=0.01)


def test_alpha_star_brackets_sign_change():
    a = sensing.expansion_alpha_star(16, 128)
    assert sensing.expansion_equation(a * 0.99, 16, 128) * sensing.expansion_equation(a * 1.01, 16, 128) < 0


def test_alpha_star_errors():
    with pytest.raises(ParameterError):
        sensing.expansion_alpha_star(1, 8)
    with pytest.raises(NumericalError):
        sensing.expansion_alpha_star(2, 5)


def test_roundtrip(tmp_path):
    A = sensing.sample_gallager(_params(), seed=4)
    path = tmp_path / "a.el"
    sensing.save(A, path)
    B = sensing.load(path)
    assert B.params == A.params
    assert np.array_equal(A.factor_adj, B.factor_adj)
    assert np.array_equal(A.var_adj, B.var_adj)
    assert sensing.dumps(B) == path.read_text()


@pytest.mark.parametrize("text", [
    "",
    "8 4 2\n",
    "8 4 2 x\n",
    "8 4 2 3\n",
    "8 4 2 4\n0: 0 1 2 3\n",
    "8 4 2 4\n0: 0 1 2 3\n1: 4 5 6 7\n2: 0 1 2 3\n3 4 5 6 7\n",
    "8 4 2 4\n0: 0 1 2 3\n1: 4 5 6 7\n2: 0 1 2 3\n3: 4 5 6 9\n",
    "8 4 2 4\n0: 0 1 2 3\n1: 4 5 6 7\n2: 0 1 2 2\n3: 4 5 6 7\n",
    "8 4 2 4\n0: 0 1 2 3\n1: 4 5 6 7\n3: 0 1 2 3\n2: 4 5 6 7\n",
    "8 4 2 4\n0: 0 1 2 3\n1: 0 1 2 3\n2: 0 1 2 3\n3: 4 5 6 7\n",
])
def test_loads_rejects(text):
    with pytest.raises(FormatError):
        sensing.loads(text)


def test_validate_catches_corruption():
    A = sensing.sample_gallager(_params(), seed=4)
    bad = A.var_adj.copy()
    bad[0, 0], bad[1, 0] = bad[1, 0], bad[0, 0]
    with pytest.raises(ParameterError):
        sensing.SparseBinaryMatrix(A.params, bad, A.factor_adj).validate()
