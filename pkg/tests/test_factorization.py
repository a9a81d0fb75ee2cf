import json
import math

import numpy as np
import pytest

from simdeg.matcore import haar_unitary, op_norm, random_contraction
from simdeg.groups import GroupAlgElement, cstar_norm, make_group, word_diameter
from simdeg.factorization import (
    FactorizationCertificate,
    aconv_gauge,
    amenable_certificate,
    bp_gauge,
    coefficient_factorization,
    coefficient_factorization_check,
    ell1_group_algebra,
    l1_decompose,
    verify_certificate,
    weyl_twirl_certificate,
)


def _rand(n, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


# ---------------------------------------------------------------------------
# certificate container


def test_certificate_shapes_must_chain():
    with pytest.raises(ValueError):
        FactorizationCertificate(
            ("matrix", 2), [np.ones((1, 2)), np.ones((3, 1))], [[("mat", np.eye(2))] * 2]
        )
    with pytest.raises(ValueError):
        FactorizationCertificate(("matrix", 2), [np.eye(2)], [[("mat", np.eye(2))]])


def test_certificate_json_parses():
    cert = weyl_twirl_certificate(_rand(2, 0))
    data = json.loads(cert.to_json())
    assert data["ambient"] == {"kind": "matrix", "arg": 2}
    assert data["claimed_bound"] == pytest.approx(cert.claimed_bound)
    assert len(data["diagonals"]) == 2


def test_verify_certificate_shape_mismatch():
    cert = weyl_twirl_certificate(_rand(2, 0))
    with pytest.raises(ValueError):
        verify_certificate(cert, _rand(3, 0))


# ---------------------------------------------------------------------------
# the two explicit constructions


def test_weyl_twirl_exact_with_norm_bound():
    rng = np.random.default_rng(1)
    for n in (2, 3, 4):
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        cert = weyl_twirl_certificate(x)
        res, bound = verify_certificate(cert, x)
        assert res <= 1e-10
        assert bound <= op_norm(x) * (1 + 1e-10)
        assert cert.degree == 2


def test_amenable_certificate_default_vectors():
    g = make_group("cyclic:3")
    rng = np.random.default_rng(2)
    coeffs = {t: rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for t in range(3)}
    x = GroupAlgElement(g, 2, coeffs)
    x = x.scale(0.9 / cstar_norm(x))
    cert = amenable_certificate(g, x)
    res, bound = verify_certificate(cert, x)
    assert res <= 1e-10
    assert bound < 1
    assert abs(cert.a2_norm - cert.y_cstar) <= 1e-10


def test_amenable_certificate_nonabelian():
    g = make_group("sym:3")
    rng = np.random.default_rng(5)
    x = GroupAlgElement(g, 1, {t: rng.standard_normal((1, 1)) for t in range(g.order)})
    x = x.scale(0.9 / cstar_norm(x))
    cert = amenable_certificate(g, x)
    res, bound = verify_certificate(cert, x)
    assert res <= 1e-10
    assert bound < 1


def test_amenable_certificate_rejects_large_inputs():
    g = make_group("cyclic:3")
    x = GroupAlgElement(g, 1, {0: 2.0 * np.eye(1)})
    with pytest.raises(ValueError):
        amenable_certificate(g, x)  # cstar norm >= 1
    small = x.scale(0.4)
    with pytest.raises(ValueError):
        amenable_certificate(g, small, xi=np.ones(3), eta=np.ones(3))  # ||xi|| ||eta|| > 1


# ---------------------------------------------------------------------------
# l1 decomposition and the word-length gauge


def test_l1_decompose_independent_atoms():
    m1 = np.diag([1.0, 0.0]).astype(complex)
    m2 = np.diag([0.0, 1.0]).astype(complex)
    val, coeffs = l1_decompose([m1, m2], 3 * m1 - 4j * m2)
    assert val == pytest.approx(7.0, abs=1e-7)
    assert coeffs[0] == pytest.approx(3.0, abs=1e-6)
    assert coeffs[1] == pytest.approx(-4j, abs=1e-6)
    assert l1_decompose([m1], m2) is None  # outside the span


def test_bp_gauge_single_letter():
    # unit-norm letter: the certified bound for x = c*a is |c| * ||a|| = 2
    a = haar_unitary(2, 3)
    bound, cert = bp_gauge(2.0 * a, [a], 1)
    assert bound == pytest.approx(2.0, abs=1e-6)
    res, b2 = verify_certificate(cert, 2.0 * a)
    assert res <= 1e-8
    assert b2 == pytest.approx(bound)


def test_bp_gauge_bound_scales_with_letter_norm():
    # with a letter of norm 1/2 the same decomposition certifies |c| * 1/2
    a = 0.5 * haar_unitary(2, 3)
    bound, _ = bp_gauge(2.0 * a, [a], 1)
    assert bound == pytest.approx(1.0, abs=1e-6)


def test_bp_gauge_unit_target():
    a = 0.5 * haar_unitary(2, 4)
    bound, cert = bp_gauge(np.eye(2), [a], 2)
    assert bound == pytest.approx(1.0, abs=1e-6)  # the adjoined unit


def test_bp_gauge_monotone_in_length():
    rng = np.random.default_rng(6)
    letters = [0.8 * random_contraction((2, 2), rng) for _ in range(2)]
    x = 0.4 * letters[0] @ letters[1] + 0.3 * letters[0] + 0.2 * np.eye(2)
    values = [bp_gauge(x, letters, d)[0] for d in (2, 3, 4)]
    assert values[1] <= values[0] + 1e-12
    assert values[2] <= values[1] + 1e-12


def test_bp_gauge_span_failure_is_inf():
    a = np.diag([1.0, 0.0]).astype(complex)
    x = np.zeros((2, 2), dtype=complex)
    x[0, 1] = 1.0
    bound, cert = bp_gauge(x, [a], 3)
    assert bound == math.inf and cert is None


def test_bp_gauge_refinement_never_worsens():
    rng = np.random.default_rng(7)
    letters = [0.8 * random_contraction((2, 2), rng) for _ in range(2)]
    x = 0.5 * letters[0] @ letters[1] + 0.25 * letters[1]
    plain, _ = bp_gauge(x, letters, 3)
    refined, cert = bp_gauge(x, letters, 3, iterations=4)
    assert refined <= plain + 1e-12
    res, _ = verify_certificate(cert, x)
    assert res <= 1e-8


# ---------------------------------------------------------------------------
# aconv gauge on l1 of a group


def test_ell1_algebra_is_a_banach_algebra():
    g = make_group("cyclic:4")
    alg = ell1_group_algebra(g)
    rng = np.random.default_rng(8)
    u = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert alg.norm(alg.mul(u, v)) <= alg.norm(u) * alg.norm(v) + 1e-10
    assert np.allclose(alg.mul(alg.unit, u), u)


def test_aconv_gauge_cyclic_diameter_threshold():
    m = 4
    g = make_group(f"cyclic:{m}")
    alg = ell1_group_algebra(g)
    beta = [np.eye(m, dtype=complex)[0], np.eye(m, dtype=complex)[1]]
    diam = word_diameter(g, [0, 1])
    assert diam == m - 1
    assert aconv_gauge(alg, beta, diam - 1, directions=6, refine_steps=2) == math.inf
    val = aconv_gauge(alg, beta, diam, directions=6, refine_steps=2)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_aconv_gauge_trivial_group():
    g = make_group("cyclic:2")
    alg = ell1_group_algebra(g)
    beta = [np.eye(2, dtype=complex)[0], np.eye(2, dtype=complex)[1]]
    assert aconv_gauge(alg, beta, 1, directions=6, refine_steps=2) == pytest.approx(
        1.0, abs=1e-6
    )


# ---------------------------------------------------------------------------
# coefficient factorization


def test_coefficient_factorization_reconstructs():
    g = make_group("cyclic:6")
    rng = np.random.default_rng(9)
    xi = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    eta = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    for nfac in (1, 2, 3):
        rec = coefficient_factorization_check(g, xi, eta, nfac, samples=500)
        assert rec["K"] == pytest.approx(np.linalg.norm(xi) * np.linalg.norm(eta), rel=1e-12)
        assert rec["max_error"] <= 1e-10
        assert all(s <= 1 + 1e-12 for s in rec["factor_sups"])


def test_coefficient_factorization_validates_inputs():
    g = make_group("cyclic:3")
    with pytest.raises(ValueError):
        coefficient_factorization(g, np.zeros(3), np.ones(3), 2)
    with pytest.raises(ValueError):
        coefficient_factorization(g, np.ones(4), np.ones(3), 2)
    with pytest.raises(ValueError):
        coefficient_factorization(g, np.ones(3), np.ones(3), 0)
