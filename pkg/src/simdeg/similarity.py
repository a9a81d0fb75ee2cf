"""Unitarization and similarity machinery.

Dixmier averaging, exact minimal similarity via invariant-metric SDP
feasibility, complex-interpolation conjugation, homomorphism cb norms
(with an independent cross-check route), the commutator-derivation
gadget, and empirical sweeps of the similarity-vs-bound envelope.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .matcore import HermitianPD, dagger, frac_power, haar_unitary, op_norm
from .opspace import CbMap, cb_norm, cb_norm_level
from .sdp import SdpBuilder, SdpError, quasiconvex_bisect
from .groups import FiniteGroup, GroupRep, make_group, regular_rep, ub_rep_twist


class NonUnitarizableError(RuntimeError):
    """No invertible similarity conjugates the representation to unitaries."""


@dataclass
class SimilarityReport:
    """Summary of the similarity analysis of one representation."""

    group_name: str
    dim: int
    pi_sup: float
    dixmier_cond: float
    sim_min: float
    witness: HermitianPD | None = None

    def to_json(self) -> str:
        d = {
            "group": self.group_name,
            "dim": self.dim,
            "pi_sup": self.pi_sup,
            "dixmier_cond": self.dixmier_cond,
            "sim_min": self.sim_min,
        }
        if self.witness is not None:
            m = self.witness.matrix
            d["witness"] = [[[float(z.real), float(z.imag)] for z in row] for row in m]
        return json.dumps(d)


def dixmier_unitarize(pi: GroupRep) -> tuple[HermitianPD, float]:
    """Averaging unitarizer: with P = (1/|G|) sum_g pi(g)* pi(g), the
    invariance pi(g)* P pi(g) = P makes P^{1/2} pi(g) P^{-1/2} unitary.

    Returns S = P^{-1/2}, so that S^{-1} pi(g) S is unitary for every g,
    with cond(S) = cond(P)^{1/2} <= sup_g ||pi(g)||^2.
    """
    d = pi.dim
    p = np.zeros((d, d), dtype=complex)
    for m in pi.images:
        p += dagger(m) @ m
    p /= pi.group.order
    s = HermitianPD(frac_power(HermitianPD(p), -0.5))
    return s, s.cond()


def _invariant_metric_sdp(pi: GroupRep, gamma: float):
    """max t  s.t.  t I <= P <= gamma I  and  pi(g)* P pi(g) = P on generators.

    P = X + t I with X >= 0; feasibility of the original system <=> t* >= 1.
    """
    d = pi.dim
    bld = SdpBuilder()
    x = bld.add_block(d)  # P - tI
    y = bld.add_block(d)  # gamma I - P
    tb = bld.add_block(1)  # t
    for i in range(d):
        for j in range(i, d):
            rhs = gamma if i == j else 0.0
            terms = [(x, i, j, 1.0), (y, i, j, 1.0)]
            if i == j:
                terms.append((tb, 0, 0, 1.0))
            bld.add_eq(terms, rhs)
    for g in pi.group.generators:
        m = pi.images[g]
        gram = dagger(m) @ m
        for i in range(d):
            for j in range(i, d):
                # (pi* (X + tI) pi - X - tI)[i, j] = 0
                terms = []
                for k in range(d):
                    for l in range(d):
                        w = np.conj(m[k, i]) * m[l, j]
                        if k == i and l == j:
                            w -= 1.0
                        if w != 0:
                            terms.append((x, k, l, w))
                wt = gram[i, j] - (1.0 if i == j else 0.0)
                if wt != 0:
                    terms.append((tb, 0, 0, wt))
                bld.add_eq(terms, 0.0)
    bld.set_objective([(tb, 0, 0, -1.0)])
    return bld.solve()


def sim_min(pi: GroupRep, tol: float = 1e-6, return_witness: bool = False):
    """Least achievable ||S|| ||S^{-1}|| over invertible S making S^{-1} pi S
    unitary: bisect gamma over feasibility of {P : I <= P <= gamma I,
    pi(g)* P pi(g) = P}; the value is sqrt(gamma*), the witness S = P^{1/2}."""
    hold: dict = {}

    def feasible(gamma: float) -> bool:
        sol = _invariant_metric_sdp(pi, gamma)
        if sol.status == "infeasible":
            return False
        if sol.status != "optimal":
            raise SdpError(f"invariant-metric SDP failed: {sol.status}")
        t = -sol.primal_value
        if t >= 1.0 - 1e-7:
            hold["sol"] = sol
            return True
        return False

    # the averaging metric satisfies cond(P) <= |pi|^4 (so Sim <= |pi|^2)
    hi = pi.pi_sup**4 * (1 + 1e-9) + 1e-9
    if not feasible(hi):
        raise NonUnitarizableError(
            "no invariant metric within the averaging bound; "
            "representation not unitarizable at this tolerance"
        )
    gamma = quasiconvex_bisect(feasible, 1.0, hi, tol=tol)
    value = math.sqrt(gamma)
    if not return_witness:
        return value
    sol = hold["sol"]
    t = -sol.primal_value
    p = sol.primal_blocks[0] + t * np.eye(pi.dim)
    # invariant metric P gives the unitarizing similarity S = P^{-1/2}
    witness = HermitianPD(frac_power(HermitianPD(p / t), -0.5))
    return value, witness


def similarity_report(pi: GroupRep, tol: float = 1e-6) -> SimilarityReport:
    _, cond = dixmier_unitarize(pi)
    value, witness = sim_min(pi, tol, return_witness=True)
    return SimilarityReport(
        group_name=pi.group.name,
        dim=pi.dim,
        pi_sup=pi.pi_sup,
        dixmier_cond=cond,
        sim_min=value,
        witness=witness,
    )


# ---------------------------------------------------------------------------
# homomorphism cb norms


def _hs_projection_basis(mats):
    """Orthonormal (Hilbert-Schmidt) basis of the span of `mats`."""
    d = mats[0].shape[0]
    stack = np.array([m.ravel() for m in mats])
    q, r = np.linalg.qr(stack.conj().T)
    rank = int(np.sum(np.abs(np.diagonal(r)) > 1e-10 * max(1.0, np.abs(r).max())))
    return [q[:, i].conj().reshape(d, d) for i in range(rank)]


def conditional_expectation(mats):
    """Hilbert-Schmidt orthogonal projection of M_d onto span(mats).

    When the span is a *-subalgebra containing the identity this is the
    trace-preserving conditional expectation (unital, completely positive).
    """
    basis = _hs_projection_basis(mats)

    def project(x):
        out = np.zeros_like(x, dtype=complex)
        for b in basis:
            out += np.trace(dagger(b) @ x) * b
        return out

    return project


def _rep_linear_extension(pi: GroupRep):
    """u o E : M_|G| -> M_d, where u maps lambda(g) -> pi(g) on the regular
    algebra and E is the conditional expectation onto that algebra."""
    lam = regular_rep(pi.group)
    n = pi.group.order

    def apply(x):
        out = np.zeros((pi.dim, pi.dim), dtype=complex)
        for g in range(n):
            c = np.trace(dagger(lam.images[g]) @ x) / n
            out += c * pi.images[g]
        return out

    return CbMap.from_function(n, pi.dim, apply)


def hom_cb_norm(u, tol: float = 1e-6, cross_check: bool | None = None) -> dict:
    """Completely bounded norm of a unital homomorphism into matrices.

    Accepted forms:
      * GroupRep pi — the extension of pi to the group C*-algebra; the cb
        norm equals the minimal similarity (Paulsen), computed by sim_min
        and cross-checked against the Choi SDP applied to the linear
        extension through the regular algebra.
      * list of commuting idempotent images (q_1..q_d with q_i q_j = 0 for
        i != j and sum = I expected of the preimages) — converted to a
        cyclic-group representation pi(j) = sum_i omega^{ij} q_i.
      * ('conjugation', S) — u(x) = S^{-1} x S on M_n; oracle value
        ||S|| ||S^{-1}||, cross-checked against the Choi SDP.

    Returns {'value', 'primary', 'cross_check', 'agreement'}; a disagreement
    beyond 1e-3 relative raises SdpError (solver fault).
    """
    if isinstance(u, tuple) and len(u) == 2 and u[0] == "conjugation":
        s = np.asarray(u[1], dtype=complex)
        sinv = np.linalg.inv(s)
        oracle = op_norm(s) * op_norm(sinv)
        phi = CbMap.from_function(s.shape[0], s.shape[0], lambda x: sinv @ x @ s)
        sdp = cb_norm(phi)
        out = {"value": sdp, "primary": sdp, "cross_check": oracle}
    elif isinstance(u, GroupRep):
        primary = sim_min(u, tol)
        if cross_check is None:
            cross_check = u.group.order * u.dim <= 24
        if cross_check:
            other = cb_norm(_rep_linear_extension(u))
        else:
            other = primary
        out = {"value": primary, "primary": primary, "cross_check": other}
    elif isinstance(u, (list, tuple)):
        qs = [np.asarray(q, dtype=complex) for q in u]
        d = len(qs)
        tol_q = 1e-8 * max(1.0, max(op_norm(q) for q in qs) ** 2)
        for i, a in enumerate(qs):
            for j, b in enumerate(qs):
                target = a if i == j else np.zeros_like(a)
                if op_norm(a @ b - target) > tol_q:
                    raise ValueError("images are not orthogonal idempotents")
        if op_norm(sum(qs) - np.eye(qs[0].shape[0])) > tol_q:
            raise ValueError("idempotent images must sum to the identity")
        g = make_group(("cyclic", d))
        omega = np.exp(2j * np.pi / d)
        images = []
        for j in range(d):
            images.append(sum(omega ** (i * j) * qs[i] for i in range(d)))
        pi = GroupRep(g, images)
        return hom_cb_norm(pi, tol, cross_check)
    else:
        raise TypeError(f"unsupported homomorphism description: {type(u)!r}")
    a, b = out["primary"], out["cross_check"]
    agreement = abs(a - b) / max(a, b, 1e-12)
    out["agreement"] = agreement
    if agreement > 1e-3:
        raise SdpError(
            f"cb-norm routes disagree: {a:.8f} vs {b:.8f} (rel {agreement:.2e})"
        )
    out["value"] = min(a, b) if b != a else a
    return out


# ---------------------------------------------------------------------------
# interpolation and the derivation gadget


def interpolation_step(u: GroupRep, s: HermitianPD, theta: float) -> dict:
    """Conjugation along the complex-interpolation path: v(a) = S^{theta-1}
    u(a) S^{1-theta}.

    Requires S^{-1} u(g) S contractive on the generators; then the generator
    norms of v interpolate: sup_gamma ||v(gamma)|| <= c^theta where
    c = sup generator norm of u.
    """
    if not (0.0 <= theta <= 1.0):
        raise ValueError("theta must lie in [0, 1]")
    sinv = s.power(-1.0)
    smat = s.matrix
    gens = u.group.generators or [0]
    for g in gens:
        if op_norm(sinv @ u.images[g] @ smat) > 1 + 1e-10:
            raise ValueError("S must make the conjugated generators contractive")
    left = s.power(theta - 1.0)
    right = s.power(1.0 - theta)
    images = {g: left @ u.images[g] @ right for g in gens}
    c = max(op_norm(u.images[g]) for g in gens)
    vnorm = max(op_norm(m) for m in images.values())
    return {
        "images": images,
        "generator_norm": vnorm,
        "bound": c**theta,
        "pass": vnorm <= c**theta * (1 + 1e-8),
    }


def derivation_gadget(pi, s: HermitianPD, tol: float = 1e-6) -> dict:
    """Commutator derivation delta(x) = Log(S) x - x Log(S) on a *-algebra.

    `pi` is either a unitary GroupRep (delta acts on the span of its image,
    extended to M_d through the conditional expectation) or an integer n
    (the identity representation of M_n).  Reports delta on the generating
    set, an ascent lower bound and the 2||Log S||.sup||pi|| upper bound for
    ||delta||, the cb norm, and the chain check
    log ||pi_S||_cb <= ||delta||_cb + tol.
    """
    logs = s.log()
    if isinstance(pi, int):
        n = pi
        if s.dim != n:
            raise ValueError("S must act on the same space")
        delta = CbMap.from_function(n, n, lambda x: logs @ x - x @ logs)
        gen_images = [logs @ e - e @ logs for e in _matrix_units(n)]
        sup_pi = 1.0
        conj_cb = s.cond()
    elif isinstance(pi, GroupRep):
        if not pi.is_unitary(1e-8):
            raise ValueError("representation must be unitary")
        if s.dim != pi.dim:
            raise ValueError("S must act on the representation space")
        expect = conditional_expectation(pi.images)

        def apply(x):
            y = expect(x)
            return logs @ y - y @ logs

        delta = CbMap.from_function(pi.dim, pi.dim, apply)
        gen_images = [
            logs @ pi.images[g] - pi.images[g] @ logs for g in pi.group.generators
        ]
        sup_pi = pi.pi_sup
        conj = ub_rep_twist(pi, s.matrix)
        conj_cb = sim_min(conj, tol)
    else:
        raise TypeError("pi must be a GroupRep or a matrix dimension")
    lower = cb_norm_level(delta, 1, restarts=6, seed=7)
    lower = max([lower] + [op_norm(m) / max(sup_pi, 1e-300) for m in gen_images])
    upper = 2.0 * op_norm(logs) * sup_pi
    cb = cb_norm(delta)
    chain_lhs = math.log(max(conj_cb, 1e-300))
    return {
        "delta_images": gen_images,
        "norm_lower": lower,
        "norm_upper": upper,
        "cb_norm": cb,
        "conjugated_cb": conj_cb,
        "chain_lhs": chain_lhs,
        "chain_pass": chain_lhs <= cb + max(tol, 1e-4),
    }


def _matrix_units(n):
    out = []
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0
            out.append(e)
    return out


# ---------------------------------------------------------------------------
# sweeps


def random_similarity(dim: int, cond: float, rng) -> np.ndarray:
    """Random invertible matrix with condition number exactly `cond`."""
    if cond < 1:
        raise ValueError("condition number must be >= 1")
    u = haar_unitary(dim, rng)
    v = haar_unitary(dim, rng)
    if dim == 1:
        return u @ v
    sv = np.exp(rng.uniform(0.0, math.log(cond), dim)) if cond > 1 else np.ones(dim)
    sv[0], sv[-1] = cond, 1.0
    return (u * sv) @ v


def phi_sweep(group: FiniteGroup, cond_grid, samples: int, seed, tol: float = 1e-4) -> list[dict]:
    """Empirical lower envelope of the similarity-vs-bound curve.

    For each target condition number c, samples twisted representations
    pi = S0^{-1} rho S0 with cond(S0) = c and records max sim_min, max |pi|,
    and whether sim_min <= |pi|^2 throughout (the averaging bound).
    """
    if not list(cond_grid):
        raise ValueError("cond grid must be nonempty")
    rho = regular_rep(group)
    rows = []
    ss = np.random.SeedSequence(seed)
    for c in cond_grid:
        if c < 1:
            raise ValueError("condition grid entries must be >= 1")
        rng = np.random.default_rng(ss.spawn(1)[0])
        max_sim, max_pi = 1.0, 1.0
        ok = True
        for _ in range(samples):
            s0 = random_similarity(group.order, float(c), rng)
            u = haar_unitary(group.order, rng)
            base = GroupRep(group, [dagger(u) @ m @ u for m in rho.images])
            pi = ub_rep_twist(base, s0)
            sim = sim_min(pi, tol)
            max_sim = max(max_sim, sim)
            max_pi = max(max_pi, pi.pi_sup)
            if sim > pi.pi_sup**2 * (1 + 1e-8):
                ok = False
        rows.append(
            {"cond": float(c), "max_sim": max_sim, "max_pi": max_pi, "bound_pass": ok}
        )
    return rows
