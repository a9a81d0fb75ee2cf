import json
import math

import numpy as np
import pytest

from simdeg.matcore import HermitianPD, dagger, haar_unitary, op_norm
from simdeg.groups import GroupRep, make_group, regular_rep, ub_rep_twist
from simdeg.similarity import (
    NonUnitarizableError,
    conditional_expectation,
    derivation_gadget,
    dixmier_unitarize,
    hom_cb_norm,
    interpolation_step,
    phi_sweep,
    random_similarity,
    sim_min,
    similarity_report,
)

GOLDEN_SIM = math.sqrt((3 + math.sqrt(5)) / 2)


def _golden_rep():
    g = make_group("cyclic:2")
    # S^{-1} diag(1,-1) S with S = [[1, 1], [0, 1]]
    return GroupRep(g, [np.eye(2), np.array([[1.0, 1.0], [0.0, -1.0]])])


def _twisted(group, cond, rng):
    rho = regular_rep(group)
    u = haar_unitary(group.order, rng)
    base = GroupRep(group, [dagger(u) @ m @ u for m in rho.images])
    return ub_rep_twist(base, random_similarity(group.order, cond, rng))


def test_dixmier_output_conjugates_to_unitaries():
    rng = np.random.default_rng(0)
    for spec in ("cyclic:3", "dihedral:3"):
        g = make_group(spec)
        pi = _twisted(g, 4.0, rng)
        s, cond = dixmier_unitarize(pi)
        sinv = s.power(-1.0)
        for m in pi.images:
            c = sinv @ m @ s.matrix
            assert op_norm(c @ dagger(c) - np.eye(g.order)) <= 1e-8
        assert cond <= pi.pi_sup**2 * (1 + 1e-6)


def test_sim_min_of_unitary_rep_is_one():
    lam = regular_rep(make_group("sym:3"))
    assert sim_min(lam, 1e-6) == pytest.approx(1.0, abs=1e-4)


def test_sim_min_golden_instance():
    pi = _golden_rep()
    rep = similarity_report(pi)
    assert rep.sim_min == pytest.approx(GOLDEN_SIM, abs=1e-4)
    assert rep.dixmier_cond == pytest.approx(GOLDEN_SIM, abs=1e-4)
    assert rep.pi_sup**2 == pytest.approx(GOLDEN_SIM**2, abs=1e-4)


def test_sim_min_witness_unitarizes():
    pi = _golden_rep()
    _, witness = sim_min(pi, 1e-6, return_witness=True)
    winv = witness.power(-1.0)
    for m in pi.images:
        c = winv @ m @ witness.matrix
        assert op_norm(c @ dagger(c) - np.eye(2)) <= 1e-5


def test_sim_min_never_exceeds_dixmier():
    rng = np.random.default_rng(3)
    g = make_group("cyclic:3")
    for _ in range(3):
        pi = _twisted(g, 5.0, rng)
        _, cond = dixmier_unitarize(pi)
        assert sim_min(pi, 1e-4) <= cond * (1 + 1e-3)


def test_report_serializes():
    rep = similarity_report(_golden_rep())
    data = json.loads(rep.to_json())
    assert data["group"] == "cyclic:2"
    assert data["dim"] == 2
    assert "witness" in data


def test_conditional_expectation_is_idempotent_projection():
    g = make_group("cyclic:3")
    lam = regular_rep(g)
    expect = conditional_expectation(lam.images)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    once = expect(x)
    assert np.allclose(expect(once), once, atol=1e-10)
    for m in lam.images:
        assert np.allclose(expect(m), m, atol=1e-10)
    assert np.trace(once) == pytest.approx(np.trace(x), abs=1e-10)


# ---------------------------------------------------------------------------
# homomorphism cb norms


def test_hom_cb_norm_conjugation_route():
    s = np.diag([2.0, 1.0])
    out = hom_cb_norm(("conjugation", s))
    assert out["value"] == pytest.approx(2.0, abs=1e-5)
    assert out["agreement"] <= 1e-3


def test_hom_cb_norm_group_rep_routes_agree():
    out = hom_cb_norm(_golden_rep())
    assert out["value"] == pytest.approx(GOLDEN_SIM, abs=1e-4)
    assert out["agreement"] <= 1e-3


def test_hom_cb_norm_idempotent_list():
    t = np.array([[1.0, 1.0], [0.0, 1.0]])
    tinv = np.linalg.inv(t)
    qs = [tinv @ np.diag([1.0, 0.0]) @ t, tinv @ np.diag([0.0, 1.0]) @ t]
    out = hom_cb_norm(qs)
    assert out["value"] >= 1.0 - 1e-6


def test_hom_cb_norm_rejects_bad_idempotents():
    with pytest.raises(ValueError):
        hom_cb_norm([np.diag([1.0, 0.0]), np.diag([1.0, 0.0])])  # not orthogonal
    with pytest.raises(ValueError):
        hom_cb_norm([np.diag([1.0, 0.0]), np.diag([0.0, 0.5])])  # sum != identity
    with pytest.raises(TypeError):
        hom_cb_norm(42.0)


# ---------------------------------------------------------------------------
# interpolation and the derivation gadget


def test_interpolation_endpoints_and_midpoint():
    pi = _golden_rep()
    s, _ = dixmier_unitarize(pi)
    c = max(op_norm(pi.images[g]) for g in pi.group.generators)
    at1 = interpolation_step(pi, s, 1.0)
    assert at1["generator_norm"] == pytest.approx(c, rel=1e-10)
    at0 = interpolation_step(pi, s, 0.0)
    assert at0["generator_norm"] <= 1 + 1e-10
    mid = interpolation_step(pi, s, 0.5)
    assert mid["generator_norm"] <= c**0.5 * (1 + 1e-8)
    assert mid["pass"]


def test_interpolation_rejects_bad_inputs():
    pi = _golden_rep()
    s, _ = dixmier_unitarize(pi)
    with pytest.raises(ValueError):
        interpolation_step(pi, s, 1.5)
    with pytest.raises(ValueError):
        interpolation_step(pi, HermitianPD(np.eye(2)), 0.5)  # does not contract


def test_derivation_gadget_diagonal_similarity_is_tight():
    s = HermitianPD(np.diag([4.0, 1.0]))
    out = derivation_gadget(2, s)
    # for diagonal S on M_2 the chain inequality is an equality: both sides
    # equal log cond(S)
    assert out["chain_lhs"] == pytest.approx(math.log(4.0), abs=1e-8)
    assert out["cb_norm"] == pytest.approx(math.log(4.0), abs=1e-4)
    assert out["chain_pass"]
    assert out["norm_lower"] <= out["cb_norm"] + 1e-6
    assert out["cb_norm"] <= out["norm_upper"] + 1e-9


def test_derivation_gadget_group_rep_chain():
    g = make_group("cyclic:2")
    lam = regular_rep(g)
    s = HermitianPD(np.diag([2.0, 1.0]))
    out = derivation_gadget(lam, s)
    assert out["chain_pass"]
    assert out["norm_lower"] <= out["norm_upper"] + 1e-9


def test_derivation_gadget_input_validation():
    with pytest.raises(ValueError):
        derivation_gadget(3, HermitianPD(np.eye(2)))  # dimension mismatch
    with pytest.raises(TypeError):
        derivation_gadget("rep", HermitianPD(np.eye(2)))


# ---------------------------------------------------------------------------
# sweeps


def test_random_similarity_hits_requested_cond():
    rng = np.random.default_rng(2)
    s = random_similarity(4, 7.5, rng)
    assert np.linalg.cond(s) == pytest.approx(7.5, rel=1e-10)
    with pytest.raises(ValueError):
        random_similarity(3, 0.5, rng)


def test_phi_sweep_respects_averaging_bound():
    g = make_group("cyclic:2")
    rows = phi_sweep(g, [1.0, 2.0], samples=2, seed=0)
    assert len(rows) == 2
    for row in rows:
        assert row["bound_pass"]
        assert row["max_sim"] <= row["max_pi"] ** 2 * (1 + 1e-6)
    with pytest.raises(ValueError):
        phi_sweep(g, [], samples=1, seed=0)
