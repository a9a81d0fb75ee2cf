import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simdeg.matcore import (
    HermitianPD,
    NotPositiveDefiniteError,
    as_cmatrix,
    dagger,
    frac_power,
    haar_unitary,
    kron,
    matrix_from_json,
    matrix_log,
    matrix_to_json,
    op_norm,
    project_to_ball,
    random_contraction,
    weyl_design,
)


def _rand(n, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def test_as_cmatrix_accepts_lists_and_real_arrays():
    m = as_cmatrix([[1, 2], [3, 4]])
    assert m.dtype == complex
    assert m.shape == (2, 2)
    r = as_cmatrix(np.eye(3))
    assert r.dtype == complex


def test_op_norm_matches_svd():
    a = _rand(5, 1)
    assert op_norm(a) == pytest.approx(np.linalg.svd(a, compute_uv=False)[0], abs=1e-12)


def test_op_norm_of_unitary_is_one():
    u = haar_unitary(4, 3)
    assert op_norm(u) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_op_norm_submultiplicative(sa, sb):
    a, b = _rand(3, sa), _rand(3, sb)
    assert op_norm(a @ b) <= op_norm(a) * op_norm(b) + 1e-10


def test_dagger_is_conjugate_transpose_involution():
    a = _rand(4, 2)
    assert np.allclose(dagger(dagger(a)), a)
    assert np.allclose(dagger(a), a.conj().T)


def test_kron_dimensions_and_norm():
    a, b = _rand(2, 4), _rand(3, 5)
    k = kron(a, b)
    assert k.shape == (6, 6)
    assert op_norm(k) == pytest.approx(op_norm(a) * op_norm(b), rel=1e-10)


def test_hermitian_pd_powers_compose():
    a = _rand(4, 6)
    p = HermitianPD(a @ dagger(a) + np.eye(4))
    half = p.power(0.5)
    assert np.allclose(half @ half, p.matrix, atol=1e-10)
    assert np.allclose(p.power(-1.0) @ p.matrix, np.eye(4), atol=1e-10)


def test_hermitian_pd_cond_matches_eigs():
    d = np.diag([4.0, 1.0, 0.5])
    p = HermitianPD(d)
    assert p.cond() == pytest.approx(8.0, rel=1e-12)


def test_hermitian_pd_log_exponentiates_back():
    a = _rand(3, 7)
    p = HermitianPD(a @ dagger(a) + 0.5 * np.eye(3))
    w, v = np.linalg.eigh(p.log())
    assert np.allclose((v * np.exp(w)) @ dagger(v), p.matrix, atol=1e-9)


def test_hermitian_pd_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        HermitianPD(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefiniteError):
        HermitianPD(np.array([[0.0, 1.0], [0.0, 0.0]]))  # not Hermitian


def test_frac_power_and_matrix_log_accept_raw_arrays():
    p = np.diag([4.0, 9.0])
    assert np.allclose(frac_power(p, 0.5), np.diag([2.0, 3.0]))
    assert np.allclose(matrix_log(p), np.diag(np.log([4.0, 9.0])))


def test_haar_unitary_is_unitary_and_seeded():
    u = haar_unitary(5, 11)
    assert np.allclose(u @ dagger(u), np.eye(5), atol=1e-12)
    assert np.allclose(u, haar_unitary(5, 11))
    assert not np.allclose(u, haar_unitary(5, 12))


def test_weyl_design_twirls_to_trace():
    n = 3
    ws = weyl_design(n)
    assert len(ws) == n * n
    for w in ws:
        assert np.allclose(w @ dagger(w), np.eye(n), atol=1e-12)
    x = _rand(n, 5)
    avg = sum(w @ x @ dagger(w) for w in ws) / (n * n)
    assert np.allclose(avg, np.trace(x) / n * np.eye(n), atol=1e-10)


def test_random_contraction_and_projection():
    rng = np.random.default_rng(0)
    for _ in range(10):
        c = random_contraction((3, 3), rng)
        assert op_norm(c) <= 1 + 1e-12
    big = 5 * _rand(3, 9)
    p = project_to_ball(big)
    assert op_norm(p) <= 1 + 1e-12
    small = 0.5 * haar_unitary(3, 1)
    assert np.allclose(project_to_ball(small), small)


def test_matrix_json_roundtrip():
    a = _rand(3, 13)
    b = matrix_from_json(matrix_to_json(a))
    assert np.allclose(a, b)
    json.loads(matrix_to_json(a))  # valid JSON document
