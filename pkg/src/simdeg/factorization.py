"""Finite-degree factorization certificates and gauges.

A certificate is the data (alpha_0, D_1, alpha_1, ..., D_d, alpha_d) with
scalar rectangular matrices alpha_i and diagonal matrices D_i whose entries
live in the ambient algebra; it witnesses both membership and the bound
prod ||alpha_i|| * prod ||D_i|| for the product alpha_0 D_1 ... D_d alpha_d.
Diagonal norms use the max-entry convention.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .matcore import as_cmatrix, kron, op_norm, dagger
from .groups import FiniteGroup, GroupAlgElement, cstar_norm, regular_rep
from .sdp import SdpBuilder, SdpError


def _entry_norm(entry, ambient) -> float:
    tag, val = entry
    if tag == "grp":
        return 1.0  # unitary regular-representation image
    return op_norm(val)


def _entry_realize(entry, ambient) -> np.ndarray:
    tag, val = entry
    if tag == "grp":
        group = ambient[1]
        return regular_rep(group).images[val]
    dim = _ambient_dim(ambient)
    m = as_cmatrix(val)
    if m.shape != (dim, dim):
        raise ValueError("matrix entry does not match the ambient dimension")
    return m


def _ambient_dim(ambient) -> int:
    kind, arg = ambient
    if kind == "matrix":
        return int(arg)
    if kind == "group":
        return arg.order
    raise ValueError(f"unknown ambient algebra {kind!r}")


class FactorizationCertificate:
    """Scalar-diagonal product certificate over a matrix or group algebra.

    ambient: ('matrix', m) or ('group', FiniteGroup).
    scalars: d+1 rectangular complex matrices.
    diagonals: d lists of entries, each entry ('mat', CMatrix) or
    ('grp', element index).
    """

    def __init__(self, ambient, scalars, diagonals):
        scalars = [as_cmatrix(a) for a in scalars]
        if len(scalars) != len(diagonals) + 1:
            raise ValueError("need exactly one more scalar factor than diagonals")
        for i, diag in enumerate(diagonals):
            if scalars[i].shape[1] != len(diag) or scalars[i + 1].shape[0] != len(diag):
                raise ValueError(f"factor shapes do not chain at diagonal {i}")
        self.ambient = ambient
        self.scalars = scalars
        self.diagonals = [list(d) for d in diagonals]
        self.degree = len(diagonals)

    @property
    def claimed_bound(self) -> float:
        b = 1.0
        for a in self.scalars:
            b *= op_norm(a)
        for diag in self.diagonals:
            b *= max((_entry_norm(e, self.ambient) for e in diag), default=1.0)
        return b

    def realize(self) -> np.ndarray:
        """Product in M_rows (x) ambient, scalars acting as alpha (x) 1."""
        dim = _ambient_dim(self.ambient)
        prod = kron(self.scalars[0], np.eye(dim))
        for diag, alpha in zip(self.diagonals, self.scalars[1:]):
            blocks = [_entry_realize(e, self.ambient) for e in diag]
            d = np.zeros((len(diag) * dim, len(diag) * dim), dtype=complex)
            for i, blk in enumerate(blocks):
                d[i * dim : (i + 1) * dim, i * dim : (i + 1) * dim] = blk
            prod = prod @ d @ kron(alpha, np.eye(dim))
        return prod

    def to_json(self) -> str:
        def enc_entry(e):
            tag, val = e
            if tag == "grp":
                return {"grp": int(val)}
            return {"mat": [[[float(z.real), float(z.imag)] for z in row] for row in val]}

        kind, arg = self.ambient
        return json.dumps(
            {
                "ambient": {"kind": kind, "arg": arg.name if kind == "group" else arg},
                "scalars": [
                    [[[float(z.real), float(z.imag)] for z in row] for row in a]
                    for a in self.scalars
                ],
                "diagonals": [[enc_entry(e) for e in diag] for diag in self.diagonals],
                "claimed_bound": self.claimed_bound,
            }
        )


def verify_certificate(cert: FactorizationCertificate, target) -> tuple[float, float]:
    """Residual of the certified product against the target, in the ambient
    operator norm, together with the certified bound."""
    if isinstance(target, GroupAlgElement):
        tgt = target.realize()
    else:
        tgt = as_cmatrix(target)
        if cert.ambient[0] == "matrix" and cert.scalars[0].shape[0] == 1:
            pass  # target already lives in the ambient algebra
    prod = cert.realize()
    if prod.shape != tgt.shape:
        raise ValueError(f"shape mismatch: product {prod.shape}, target {tgt.shape}")
    return op_norm(prod - tgt), cert.claimed_bound


# ---------------------------------------------------------------------------
# the two explicit constructions


def amenable_certificate(
    group: FiniteGroup, x: GroupAlgElement, xi=None, eta=None
) -> FactorizationCertificate:
    """Degree-2 certificate for x in M_n(C[G]) with cstar_norm(x) < 1.

    With phi(t) = <lambda(t) xi, eta> and y(t) = x(t)/phi(t):
        A1(i,(s,k)) = conj(eta(s)) delta_ik,   D1((s,k)) = lambda(s),
        A2((s,k),(theta,l)) = y_kl(s theta^{-1}),
        D2((theta,l)) = lambda(theta^{-1}),    A3((theta,l),j) = xi(theta) delta_lj,
    giving x = A1 D1 A2 D2 A3 with bound ||eta|| cstar_norm(y) ||xi||.
    Defaults xi = eta = |G|^{-1/2} * ones, so phi = 1 and y = x.
    """
    ng = group.order
    n = x.k
    if xi is None:
        xi = np.full(ng, ng**-0.5, dtype=complex)
    if eta is None:
        eta = np.full(ng, ng**-0.5, dtype=complex)
    xi = np.asarray(xi, dtype=complex).ravel()
    eta = np.asarray(eta, dtype=complex).ravel()
    if len(xi) != ng or len(eta) != ng:
        raise ValueError("xi, eta must live on the group")
    if np.linalg.norm(xi) * np.linalg.norm(eta) > 1 + 1e-12:
        raise ValueError("need ||xi|| ||eta|| <= 1")
    if cstar_norm(x) >= 1:
        raise ValueError("need cstar_norm(x) < 1; rescale at the call site")
    lam = regular_rep(group)
    phi = np.array([np.conj(eta) @ (lam.images[t] @ xi) for t in range(ng)])
    ycoef = {}
    for t, m in x.coeffs.items():
        if abs(phi[t]) < 1e-12:
            raise ValueError("coefficient function vanishes on the support of x")
        ycoef[t] = m / phi[t]
    y = GroupAlgElement(group, n, ycoef)

    big = ng * n
    a1 = np.zeros((n, big), dtype=complex)
    for s in range(ng):
        for k in range(n):
            a1[k, s * n + k] = np.conj(eta[s])
    a2 = np.zeros((big, big), dtype=complex)
    for t, m in ycoef.items():
        for s in range(ng):
            theta = group.mul(group.inv[t], s)  # t = s theta^{-1}
            # careful: s theta^{-1} = t  <=>  theta = t^{-1} s
            a2[s * n : s * n + n, theta * n : theta * n + n] = m
    a3 = np.zeros((big, n), dtype=complex)
    for theta in range(ng):
        for ell in range(n):
            a3[theta * n + ell, ell] = xi[theta]
    d1 = [("grp", s) for s in range(ng) for _ in range(n)]
    d2 = [("grp", group.inv[theta]) for theta in range(ng) for _ in range(n)]
    cert = FactorizationCertificate(("group", group), [a1, a2, a3], [d1, d2])
    cert.a2_norm = op_norm(a2)
    cert.y_cstar = cstar_norm(y)
    return cert


def weyl_twirl_certificate(x) -> FactorizationCertificate:
    """Degree-2 certificate in M_n with bound exactly ||x||.

    alpha_0 = (1/n)[1..1], D1 = diag(x W_j), alpha_1 = I, D2 = diag(W_j*),
    alpha_2 = (1/n)[1..1]^T over the n^2 Weyl unitaries; reconstruction is
    exact because W_j W_j* = I for every j.
    """
    from .matcore import weyl_design

    x = as_cmatrix(x)
    n = x.shape[0]
    if x.shape != (n, n):
        raise ValueError("target must be square")
    ws = weyl_design(n)
    nn = n * n
    a0 = np.full((1, nn), 1.0 / n, dtype=complex)
    a1 = np.eye(nn, dtype=complex)
    a2 = np.full((nn, 1), 1.0 / n, dtype=complex)
    d1 = [("mat", x @ w) for w in ws]
    d2 = [("mat", dagger(w)) for w in ws]
    return FactorizationCertificate(("matrix", n), [a0, a1, a2], [d1, d2])


# ---------------------------------------------------------------------------
# l1-minimal decompositions (shared by both gauges)


def l1_decompose(mats, target, tol: float = 1e-10):
    """min sum |c_w|  s.t.  sum c_w * mats[w] == target.

    Complex l1 minimization as a cone program with 2x2 blocks
    [[t, c], [conj(c), t]] >= 0.  Returns (value, coefficients) or None when
    the target is outside the span.
    """
    mats = [np.asarray(m, dtype=complex) for m in mats]
    target = np.asarray(target, dtype=complex)
    # quick span check: far cheaper and more robust than SDP infeasibility
    stack = np.array([m.ravel() for m in mats]).T
    coef, res, rank, _ = np.linalg.lstsq(stack, target.ravel(), rcond=None)
    if op_norm((stack @ coef - target.ravel()).reshape(1, -1)) > 1e-9 * max(
        1.0, float(np.abs(target).max(initial=0.0))
    ):
        return None
    bld = SdpBuilder()
    blocks = [bld.add_block(2) for _ in mats]
    for b in blocks:
        bld.add_eq([(b, 0, 0, 1.0), (b, 1, 1, -1.0)], 0.0)
    flat_t = target.ravel()
    for pos in range(flat_t.size):
        terms = []
        for w, b in enumerate(blocks):
            v = mats[w].ravel()[pos]
            if v != 0:
                terms.append((b, 0, 1, v))
        if terms or flat_t[pos] != 0:
            bld.add_eq(terms, flat_t[pos])
    bld.set_objective([(b, 0, 0, 1.0) for b in blocks])
    sol = bld.solve(tol)
    if sol.status != "optimal":
        raise SdpError(f"l1 decomposition SDP failed: {sol.status}")
    coeffs = np.array([sol.primal_blocks[b][0, 1] for b in blocks])
    return sol.primal_value, coeffs


def _words_up_to(letters, d, unit, cap=4096):
    """All products of length exactly d over letters + unit (so every shorter
    word appears via unit padding).  Returns (letter index paths, matrices)."""
    alphabet = [("unit", unit)] + list(enumerate(letters))
    paths = [((), unit)]
    for _ in range(d):
        nxt = []
        for path, m in paths:
            for tag, letter in alphabet:
                nxt.append((path + (tag,), m @ letter))
        paths = nxt
        if len(paths) > cap:
            raise ValueError(f"word count exceeds cap {cap}")
    # dedup identical matrices (unit padding produces many duplicates)
    out_paths, out_mats = [], []
    for path, m in paths:
        if any(np.allclose(m, o, atol=1e-12) for o in out_mats):
            continue
        out_paths.append(path)
        out_mats.append(m)
    return out_paths, out_mats


def bp_gauge(x, letters, d: int, iterations: int = 0, seed=0, tol: float = 1e-10):
    """Certified upper estimate of the length-<= d factorization gauge.

    Decomposes x = sum c_w * w over products of <= d letters (unit adjoined
    for padding) by l1 minimization, packages the result as a certificate
    with balanced |c_w|^{1/2} splits, then optionally refines the middle
    scalar factors by minimum-norm re-solves, keeping the best verified
    certificate.  The value is the min over word lengths 1..d of the
    per-length solves, so it is nonincreasing in d by construction.
    Returns (bound, certificate); (inf, None) when x is not in the span of
    the length-<= d products.
    """
    x = as_cmatrix(x)
    letters = [as_cmatrix(m) for m in letters]
    n = x.shape[0]
    unit = np.eye(n, dtype=complex)
    best_cert, best_bound = None, math.inf
    for length in range(1, d + 1):
        paths, words = _words_up_to(letters, length, unit)
        dec = l1_decompose(words, x, tol)
        if dec is None:
            continue
        _, coeffs = dec
        keep = [w for w in range(len(words)) if abs(coeffs[w]) > 1e-11]
        if not keep:
            keep = [0]
        w_count = len(keep)
        phases = np.array([coeffs[w] / max(abs(coeffs[w]), 1e-300) for w in keep])
        roots = np.array([abs(coeffs[w]) ** 0.5 for w in keep])
        a0 = (phases * roots).reshape(1, w_count)
        a_last = roots.reshape(w_count, 1)
        mids = [np.eye(w_count, dtype=complex) for _ in range(d - 1)]
        diags = []
        for pos in range(d):
            diag = []
            for w in keep:
                tag = paths[w][pos] if pos < length else "unit"
                diag.append(("mat", unit if tag == "unit" else letters[tag]))
            diags.append(diag)
        cert = FactorizationCertificate(("matrix", n), [a0] + mids + [a_last], diags)
        if cert.claimed_bound < best_bound:
            best_cert, best_bound = cert, cert.claimed_bound
    if best_cert is None:
        return math.inf, None
    for it in range(iterations):
        j = 1 + it % max(d - 1, 1) if d > 1 else None
        if j is None:
            break
        improved = _refit_scalar(best_cert, x, j, tol)
        if improved is not None and improved.claimed_bound < best_bound - 1e-12:
            residual, _ = verify_certificate(improved, x)
            if residual <= 1e-8 * max(1.0, op_norm(x)):
                best_cert, best_bound = improved, improved.claimed_bound
    return best_bound, best_cert


def _refit_scalar(cert: FactorizationCertificate, x, j: int, tol: float):
    """Minimum-norm re-solve of scalar factor j with all others fixed."""
    dim = _ambient_dim(cert.ambient)
    left = kron(cert.scalars[0], np.eye(dim))
    for i in range(j):
        diag = cert.diagonals[i]
        d = np.zeros((len(diag) * dim, len(diag) * dim), dtype=complex)
        for t, e in enumerate(diag):
            d[t * dim : (t + 1) * dim, t * dim : (t + 1) * dim] = _entry_realize(e, cert.ambient)
        left = left @ d
        if i + 1 < j:
            left = left @ kron(cert.scalars[i + 1], np.eye(dim))
    # right side: D_{j+1} alpha_{j+1} ... D_d alpha_d
    right_chain = np.eye(cert.scalars[j].shape[1] * dim, dtype=complex)
    for i in range(j, cert.degree):
        diag = cert.diagonals[i]
        d = np.zeros((len(diag) * dim, len(diag) * dim), dtype=complex)
        for t, e in enumerate(diag):
            d[t * dim : (t + 1) * dim, t * dim : (t + 1) * dim] = _entry_realize(e, cert.ambient)
        right_chain = right_chain @ d @ kron(cert.scalars[i + 1], np.eye(dim))
    rows, cols = cert.scalars[j].shape
    # product = left @ (alpha_j (x) I) @ right_chain must equal x
    bld = SdpBuilder()
    tb = bld.add_block(1)
    blk = bld.add_block(rows + cols)  # [[tI, alpha], [alpha*, tI]]
    for i in range(rows):
        bld.add_eq([(blk, i, i, 1.0), (tb, 0, 0, -1.0)], 0.0)
    for i in range(cols):
        bld.add_eq([(blk, rows + i, rows + i, 1.0), (tb, 0, 0, -1.0)], 0.0)
    for i in range(rows):
        for jj in range(i + 1, rows):
            bld.add_eq([(blk, i, jj, 1.0)], 0.0)
    for i in range(cols):
        for jj in range(i + 1, cols):
            bld.add_eq([(blk, rows + i, rows + jj, 1.0)], 0.0)
    xt = as_cmatrix(x)
    for p in range(xt.shape[0]):
        for q in range(xt.shape[1]):
            terms = []
            for a in range(rows):
                for b in range(cols):
                    # coefficient of alpha[a, b] in product[p, q]
                    w = 0.0
                    lblock = left[p, a * dim : (a + 1) * dim]
                    rblock = right_chain[b * dim : (b + 1) * dim, q]
                    w = complex(lblock @ rblock)
                    if w != 0:
                        terms.append((blk, a, rows + b, w))
            bld.add_eq(terms, xt[p, q])
    bld.set_objective([(tb, 0, 0, 1.0)])
    # a loose solve is fine here: the candidate is only accepted after an
    # independent residual check, and the bound comes from the returned alpha
    sol = bld.solve(max(tol, 1e-8))
    if sol.status != "optimal":
        return None
    alpha = sol.primal_blocks[1][:rows, rows:]
    scalars = list(cert.scalars)
    scalars[j] = alpha
    return FactorizationCertificate(cert.ambient, scalars, cert.diagonals)


# ---------------------------------------------------------------------------
# aconv gauge over a finite-dimensional Banach algebra


class FinDimAlgebra:
    """Finite-dimensional Banach algebra given by structure data.

    mul(u, v) multiplies coefficient vectors; norm evaluates the algebra
    norm; unit is the coefficient vector of 1.
    """

    def __init__(self, dim, mul, norm, unit, name=""):
        self.dim = dim
        self.mul = mul
        self.norm = norm
        self.unit = np.asarray(unit, dtype=complex)
        self.name = name


def ell1_group_algebra(group: FiniteGroup) -> FinDimAlgebra:
    """l1(G) with convolution product."""

    def mul(u, v):
        out = np.zeros(group.order, dtype=complex)
        for r in range(group.order):
            if u[r] == 0:
                continue
            for s in range(group.order):
                out[group.mul(r, s)] += u[r] * v[s]
        return out

    unit = np.zeros(group.order, dtype=complex)
    unit[0] = 1.0
    return FinDimAlgebra(
        group.order, mul, lambda v: float(np.sum(np.abs(v))), unit, name=f"l1({group.name})"
    )


def aconv_gauge(
    algebra: FinDimAlgebra,
    beta,
    d: int,
    directions: int = 16,
    seed=0,
    refine_steps: int = 20,
    tol: float = 1e-8,
):
    """Estimated least K' with the unit ball inside K' * aconv(beta u ... u beta^d).

    Per sampled unit-norm direction x, gauge(x) = min sum |c_w| over
    decompositions x = sum c_w w with w in the length-<= d product set; the
    estimate is the max over directions (the canonical basis directions are
    always included) with a local hill-climb refinement.  Returns inf when
    the product set fails to span.
    """
    beta = [np.asarray(b, dtype=complex) for b in beta]
    products = list(beta)
    frontier = list(beta)
    for _ in range(d - 1):
        frontier = [algebra.mul(w, b) for w in frontier for b in beta]
        products.extend(frontier)
    dedup = []
    for p in products:
        if not any(np.allclose(p, q, atol=1e-12) for q in dedup):
            dedup.append(p)
    products = dedup
    stack = np.array([p for p in products]).T
    if np.linalg.matrix_rank(stack, tol=1e-10) < algebra.dim:
        return math.inf

    def gauge(x):
        dec = l1_decompose([p.reshape(1, -1) for p in products], x.reshape(1, -1), tol)
        if dec is None:
            return math.inf
        return dec[0]

    rng = np.random.default_rng(seed)
    cand = [np.eye(algebra.dim, dtype=complex)[i] for i in range(algebra.dim)]
    for _ in range(max(directions - algebra.dim, 0)):
        v = rng.standard_normal(algebra.dim) + 1j * rng.standard_normal(algebra.dim)
        cand.append(v)
    best_val, best_x = -math.inf, None
    for x in cand:
        nx = algebra.norm(x)
        if nx == 0:
            continue
        x = x / nx
        g = gauge(x)
        if g > best_val:
            best_val, best_x = g, x
    for _ in range(refine_steps):
        v = rng.standard_normal(algebra.dim) + 1j * rng.standard_normal(algebra.dim)
        x = best_x + 0.3 * v
        x = x / algebra.norm(x)
        g = gauge(x)
        if g > best_val + 1e-12:
            best_val, best_x = g, x
    return best_val


# ---------------------------------------------------------------------------
# coefficient factorization through the regular representation


def coefficient_factorization(group: FiniteGroup, xi, eta, nfactors: int):
    """Witness for f(t) = <lambda(t) xi, eta> as a length-N product:

        K^{-1} f(t_1 ... t_N) = F_1(t_1) F_2(t_2) ... F_N(t_N)

    with F_1(t) = eta_hat* lambda(t) (row), F_i(t) = lambda(t) for the middle
    factors, F_N(t) = lambda(t) xi_hat (column), where xi_hat, eta_hat are the
    unit normalizations and K = ||xi|| ||eta||.  Every factor has sup norm 1.
    Returns (K, [F_1 .. F_N]) with each F_i a list over group elements.
    """
    if nfactors < 1:
        raise ValueError("need at least one factor")
    xi = np.asarray(xi, dtype=complex).ravel()
    eta = np.asarray(eta, dtype=complex).ravel()
    if len(xi) != group.order or len(eta) != group.order:
        raise ValueError("vectors must live on the group")
    nxi, neta = np.linalg.norm(xi), np.linalg.norm(eta)
    if nxi == 0 or neta == 0:
        raise ValueError("xi, eta must be nonzero")
    k_const = float(nxi * neta)
    xh, eh = xi / nxi, eta / neta
    lam = regular_rep(group)
    if nfactors == 1:
        fs = [[(np.conj(eh) @ (lam.images[t] @ xh)).reshape(1, 1) for t in group.elements()]]
        return k_const, fs
    first = [np.conj(eh)[None, :] @ lam.images[t] for t in group.elements()]
    last = [lam.images[t] @ xh[:, None] for t in group.elements()]
    middle = [[lam.images[t] for t in group.elements()] for _ in range(nfactors - 2)]
    return k_const, [first] + middle + [last]


def coefficient_factorization_check(
    group: FiniteGroup, xi, eta, nfactors: int, samples: int = 10000, seed=0
) -> dict:
    """Exhaustively (or by sampling when |G|^N is large) verifies the product
    identity and the factor sup-norm bounds."""
    k_const, fs = coefficient_factorization(group, xi, eta, nfactors)
    xi = np.asarray(xi, dtype=complex).ravel()
    eta = np.asarray(eta, dtype=complex).ravel()
    lam = regular_rep(group)
    total = group.order**nfactors
    if total <= samples:
        import itertools

        tuples = itertools.product(range(group.order), repeat=nfactors)
    else:
        rng = np.random.default_rng(seed)
        tuples = (tuple(rng.integers(0, group.order, nfactors)) for _ in range(samples))
    max_err = 0.0
    for tup in tuples:
        prod = fs[0][tup[0]]
        for i in range(1, nfactors):
            prod = prod @ fs[i][tup[i]]
        g = 0
        for t in tup:
            g = group.mul(g, t)
        f_val = np.conj(eta) @ (lam.images[g] @ xi)
        max_err = max(max_err, abs(complex(prod[0, 0]) - f_val / k_const))
    sups = [max(op_norm(m) for m in f) for f in fs]
    return {"K": k_const, "max_error": max_err, "factor_sups": sups}
