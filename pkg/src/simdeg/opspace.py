"""Operator-space norms: minimal tensor norms, completely bounded norms via
the Choi-matrix SDP, the gamma_2 row/column factorization norm, Haagerup-norm
upper certificates, and ascent estimators for max(l2^n) pairings.
"""

from __future__ import annotations

import numpy as np

from .matcore import dagger, kron, op_norm
from .sdp import SdpBuilder, SdpError, ascent_lower_bound


class CbMap:
    """Linear map Phi: M_n -> M_k carried by its Choi matrix
    J = sum_ij E_ij (x) Phi(E_ij), with the input index outermost."""

    def __init__(self, n: int, k: int, choi: np.ndarray):
        choi = np.asarray(choi, dtype=complex)
        if choi.shape != (n * k, n * k):
            raise ValueError("Choi matrix has wrong shape")
        self.n = n
        self.k = k
        self.choi = choi

    @classmethod
    def from_function(cls, n: int, k: int, fn) -> "CbMap":
        j = np.zeros((n * k, n * k), dtype=complex)
        for a in range(n):
            for b in range(n):
                e = np.zeros((n, n), dtype=complex)
                e[a, b] = 1.0
                j += kron(e, np.asarray(fn(e), dtype=complex))
        return cls(n, k, j)

    @classmethod
    def from_generator_images(cls, n: int, k: int, pairs, tol: float = 1e-10) -> "CbMap":
        """Build from (input, output) pairs whose inputs span M_n; the Choi
        matrix is checked consistent with the images within tol."""
        ins = np.array([np.asarray(x).ravel() for x, _ in pairs]).T  # n^2 x m
        outs = np.array([np.asarray(y).ravel() for _, y in pairs]).T  # k^2 x m
        if np.linalg.matrix_rank(ins, tol=1e-9) < n * n:
            raise ValueError("generator images do not span the source")
        sup, *_ = np.linalg.lstsq(ins.T, outs.T, rcond=None)  # maps vec(x) -> vec(Phi x)
        sup = sup.T

        def fn(x):
            return (sup @ np.asarray(x).ravel()).reshape(k, k)

        m = cls.from_function(n, k, fn)
        for x, y in pairs:
            if op_norm(m.apply(x) - y) > tol * max(1.0, op_norm(y)):
                raise ValueError("Choi matrix inconsistent with generator images")
        return m

    @classmethod
    def identity(cls, n: int) -> "CbMap":
        return cls.from_function(n, n, lambda x: x)

    @classmethod
    def transpose(cls, n: int) -> "CbMap":
        return cls.from_function(n, n, lambda x: x.T)

    @classmethod
    def sandwich(cls, a, b) -> "CbMap":
        """x -> A x B."""
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        n = a.shape[1]
        k = a.shape[0]
        return cls.from_function(n, k, lambda x: a @ x @ b)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        n, k = self.n, self.k
        j = self.choi.reshape(n, k, n, k)
        return np.einsum("ij,ikjl->kl", x, j)

    def superoperator(self) -> np.ndarray:
        """Matrix acting on row-major vec: vec(Phi(x)) = S vec(x)."""
        n, k = self.n, self.k
        s = np.zeros((k * k, n * n), dtype=complex)
        for a in range(n):
            for b in range(n):
                e = np.zeros((n, n), dtype=complex)
                e[a, b] = 1.0
                s[:, a * n + b] = self.apply(e).ravel()
        return s

    def adjoint(self) -> "CbMap":
        """Hilbert-Schmidt adjoint: tr(Phi(x)^* y) = tr(x^* Phi^*(y))."""
        s = self.superoperator()
        sh = dagger(s)

        def fn(y):
            return (sh @ np.asarray(y).ravel()).reshape(self.n, self.n)

        return CbMap.from_function(self.k, self.n, fn)

    def tensor(self, other: "CbMap") -> "CbMap":
        n = self.n * other.n
        k = self.k * other.k

        def fn(x):
            x4 = np.asarray(x).reshape(self.n, other.n, self.n, other.n)
            out = np.zeros((self.k, other.k, self.k, other.k), dtype=complex)
            for a in range(self.n):
                for b in range(self.n):
                    e = np.zeros((self.n, self.n), dtype=complex)
                    e[a, b] = 1.0
                    out += np.einsum(
                        "ij,kl->ikjl", self.apply(e), other.apply(x4[a, :, b, :])
                    )
            return out.reshape(k, k)

        return CbMap.from_function(n, k, fn)


class MinTensorElement:
    """Finite sum of elementary tensors A_i (x) B_i of concrete matrices."""

    def __init__(self, terms):
        terms = [(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)) for a, b in terms]
        if terms:
            sa = terms[0][0].shape
            sb = terms[0][1].shape
            for a, b in terms:
                if a.shape != sa or b.shape != sb:
                    raise ValueError("inconsistent shapes across summands")
        self.terms = terms

    def realize(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, 0), dtype=complex)
        return sum(kron(a, b) for a, b in self.terms)


def min_tensor_norm(x: MinTensorElement) -> float:
    return op_norm(x.realize())


def cb_trace_norm(phi: CbMap, tol: float = 1e-8) -> float:
    """Completely bounded trace norm (diamond norm) via the Choi-matrix SDP:

        min t  s.t.  [[Y0, J], [J*, Y1]] >= 0,
                     Tr_out Y0 <= t I_n,  Tr_out Y1 <= t I_n,

    where Tr_out traces the target factor.  By rescaling Y0, Y1 this equals
    min ||Tr_out Y0||^(1/2) ||Tr_out Y1||^(1/2)."""
    n, k = phi.n, phi.k
    nk = n * k
    bld = SdpBuilder()
    w = bld.add_block(2 * nk)
    t = bld.add_block(1)
    z0 = bld.add_block(n)  # slack: t I - Tr_out Y0
    z1 = bld.add_block(n)
    bld.fix_submatrix(w, 0, nk, phi.choi)
    for half, z in ((0, z0), (nk, z1)):
        for i in range(n):
            for j in range(i, n):
                terms = [(w, half + i * k + kk, half + j * k + kk, 1.0) for kk in range(k)]
                terms.append((z, i, j, 1.0))
                if i == j:
                    terms.append((t, 0, 0, -1.0))
                bld.add_eq(terms, 0.0)
    bld.set_objective([(t, 0, 0, 1.0)])
    sol = bld.solve(tol)
    if sol.status != "optimal":
        raise SdpError(f"cb-norm SDP failed: {sol.status}")
    return sol.primal_value


def cb_norm(phi: CbMap, tol: float = 1e-8) -> float:
    """Completely bounded (operator-norm) norm: sup over amplifications of
    ||id_m (x) Phi||.  Computed by trace duality as the completely bounded
    trace norm of the Hilbert-Schmidt adjoint."""
    return cb_trace_norm(phi.adjoint(), tol)


def cb_norm_subspace(pairs, n: int, r: int, tol: float = 1e-8) -> float:
    """cb norm of a map defined only on a subspace S of M_n by pairs
    (basis element m, image u(m) in M_r).

    The extension theorem gives a map on all of M_n with the same cb norm,
    so the value is the minimum of the Choi SDP over all extensions: the
    Choi block of the adjoint is left free except for the linear constraints
    pinning the map on S."""
    pairs = [(np.asarray(m, dtype=complex), np.asarray(v, dtype=complex)) for m, v in pairs]
    for m, v in pairs:
        if m.shape != (n, n) or v.shape != (r, r):
            raise ValueError("basis/image shapes must be n x n and r x r")
    rn = r * n
    bld = SdpBuilder()
    w = bld.add_block(2 * rn)  # [[Y0, J], [J*, Y1]] for the adjoint M_r -> M_n
    t = bld.add_block(1)
    z0 = bld.add_block(r)
    z1 = bld.add_block(r)
    for half, z in ((0, z0), (rn, z1)):
        for a in range(r):
            for b in range(a, r):
                terms = [(w, half + a * n + kk, half + b * n + kk, 1.0) for kk in range(n)]
                terms.append((z, a, b, 1.0))
                if a == b:
                    terms.append((t, 0, 0, -1.0))
                bld.add_eq(terms, 0.0)
    # pin the map on the subspace: sum_ij conj(m[i,j]) J[(a,i),(b,j)] = conj(u(m)[a,b])
    for m, v in pairs:
        for a in range(r):
            for b in range(r):
                terms = [
                    (w, a * n + i, rn + b * n + j, np.conj(m[i, j]))
                    for i in range(n)
                    for j in range(n)
                    if m[i, j] != 0
                ]
                bld.add_eq(terms, np.conj(v[a, b]))
    bld.set_objective([(t, 0, 0, 1.0)])
    sol = bld.solve(tol)
    if sol.status != "optimal":
        raise SdpError(f"subspace cb-norm SDP failed: {sol.status}")
    return sol.primal_value


def cb_norm_level(phi: CbMap, m: int, restarts: int = 8, seed=0, iters: int = 80) -> float:
    """Lower bound ||Phi||_m <= ||Phi||_cb by alternating ascent over the unit
    ball of M_m(M_n): for a fixed rank-one output functional the optimal input
    is the polar unitary of the lifted adjoint image."""
    n, k = phi.n, phi.k
    adj = phi.adjoint()

    def amp_apply(mp: CbMap, x, blocks: int):
        src = mp.n
        x4 = x.reshape(blocks, src, blocks, src)
        out = np.zeros((blocks, mp.k, blocks, mp.k), dtype=complex)
        for a in range(blocks):
            for b in range(blocks):
                out[a, :, b, :] = mp.apply(x4[a, :, b, :])
        return out.reshape(blocks * mp.k, blocks * mp.k)

    def run(u, v):
        val = 0.0
        for _ in range(iters):
            g = amp_apply(adj, np.outer(u, np.conj(v)), m)
            uu, ss, vvh = np.linalg.svd(g)
            x = uu @ vvh  # polar part: the norm-attaining contraction
            y = amp_apply(phi, x, m)
            uy, sy, vyh = np.linalg.svd(y)
            new = float(sy[0])
            u, v = uy[:, 0], np.conj(vyh[0, :])
            if new <= val + 1e-13:
                return new
            val = new
        return val

    dim = m * k
    best = 0.0
    seeds = np.random.SeedSequence(seed).spawn(max(restarts, 1))
    # deterministic start
    u0 = np.ones(dim, dtype=complex) / np.sqrt(dim)
    best = max(best, run(u0, u0))
    for ss in seeds[: max(restarts, 0)]:
        rng = np.random.default_rng(ss)
        u = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        best = max(best, run(u / np.linalg.norm(u), v / np.linalg.norm(v)))
    return best


def gamma2_rowcol_norm(m, tol: float = 1e-8, return_witness: bool = False, solvers=None):
    """Factorization norm inf (sup_s ||x(s)||)(sup_t ||y(t)||) over
    M(s,t) = <x(t), y(s)>, computed as

        min g  s.t.  [[P, M], [M*, Q]] >= 0, diag(P) <= g, diag(Q) <= g."""
    m = np.asarray(m, dtype=complex)
    p, q = m.shape
    bld = SdpBuilder()
    w = bld.add_block(p + q)
    g = bld.add_block(1)
    bld.fix_submatrix(w, 0, p, m)
    for i in range(p + q):
        s = bld.add_block(1)
        bld.add_eq_real([(w, i, i, 1.0), (s, 0, 0, 1.0), (g, 0, 0, -1.0)], 0.0)
    bld.set_objective([(g, 0, 0, 1.0)])
    sol = bld.solve(tol, solvers=solvers)
    if sol.status != "optimal":
        raise SdpError(f"gamma2 SDP failed: {sol.status}")
    if not return_witness:
        return sol.primal_value
    big = sol.primal_blocks[0]
    vals, vecs = np.linalg.eigh(big)
    vals = np.clip(vals, 0.0, None)
    f = vecs * np.sqrt(vals)
    ys = f[:p, :]  # row s: y(s)
    xs = f[p:, :]  # row t: x(t)
    return sol.primal_value, (xs, ys)


def hnorm_upper_certificate(pairs) -> float:
    """|| sum a_i a_i* ||^(1/2) || sum b_i* b_i ||^(1/2), an upper bound on the
    Haagerup norm of sum a_i (x) b_i."""
    if not pairs:
        return 0.0
    a0 = np.asarray(pairs[0][0])
    b0 = np.asarray(pairs[0][1])
    left = np.zeros((a0.shape[0], a0.shape[0]), dtype=complex)
    right = np.zeros((b0.shape[1], b0.shape[1]), dtype=complex)
    for a, b in pairs:
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        if a.shape != a0.shape or b.shape != b0.shape:
            raise ValueError("inconsistent shapes in pair list")
        if a.shape[1] != b.shape[0]:
            raise ValueError("pair shapes do not chain")
        left += a @ dagger(a)
        right += dagger(b) @ b
    return float(np.sqrt(op_norm(left)) * np.sqrt(op_norm(right)))


def _tuple_contraction_upper(ts) -> float:
    """Safe upper bound on sup_{|t|<=1} ||sum t_i T_i||: min of the row and
    column square-function norms."""
    col = sum(dagger(t) @ t for t in ts)
    row = sum(t @ dagger(t) for t in ts)
    return float(np.sqrt(min(op_norm(col), op_norm(row))))


def max_l2_pairing_estimate(xs, r: int, restarts: int = 20, seed=0) -> float:
    """Lower-bound estimator of || sum x_i (x) e_i || in X (x)_min max(l2^n):
    maximize || sum x_i (x) T_i || over tuples (T_i) in M_r normalized by a
    certified contraction constant of t -> sum t_i T_i."""
    xs = [np.asarray(x, dtype=complex) for x in xs]
    n = len(xs)
    if r < 1:
        raise ValueError("level r must be >= 1")

    def value(ts):
        c = _tuple_contraction_upper(ts)
        if c <= 1e-14:
            return 0.0
        return op_norm(sum(kron(x, t) for x, t in zip(xs, ts))) / c

    best = 0.0
    # scalar tuple T_i = t_i I aligned by alternating power steps
    t = np.ones(n, dtype=complex) / np.sqrt(n)
    for _ in range(60):
        s = sum(ti * x for ti, x in zip(t, xs))
        u, sv, vh = np.linalg.svd(s)
        w = np.array([np.vdot(u[:, 0], x @ np.conj(vh[0, :])) for x in xs])
        nw = np.linalg.norm(w)
        if nw < 1e-14:
            break
        t = np.conj(w) / nw
    best = max(best, value([ti * np.eye(r, dtype=complex) for ti in t]))
    # column and row matrix-unit tuples when they fit in M_r
    if n <= r:
        best = max(best, value([_unit(r, i, 0) for i in range(n)]))
        best = max(best, value([_unit(r, 0, i) for i in range(n)]))
    # random tuples with hill climbing on the normalized value
    seeds = np.random.SeedSequence(seed).spawn(max(restarts, 1))
    for ss in seeds[:restarts]:
        rng = np.random.default_rng(ss)
        ts = [rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r)) for _ in range(n)]
        val = value(ts)
        step = 0.5
        for _ in range(120):
            cand = [
                t + step * (rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r)))
                for t in ts
            ]
            v = value(cand)
            if v > val:
                ts, val = cand, v
            else:
                step *= 0.97
        best = max(best, val)
    return best


def _unit(r, i, j):
    e = np.zeros((r, r), dtype=complex)
    e[i, j] = 1.0
    return e


def functional_norm(f) -> float:
    """Norm of the functional a -> tr(F a) on a matrix algebra: trace norm."""
    return float(np.sum(np.linalg.svd(np.asarray(f, dtype=complex), compute_uv=False)))


def map_norm_estimate(phi: CbMap, restarts: int = 8, seed=0) -> float:
    """Plain (level-1) norm sup_{||x||<=1} ||Phi(x)||, by alternating ascent."""
    return cb_norm_level(phi, 1, restarts=restarts, seed=seed)


def functional_tuple_norm_estimate(fs, restarts: int = 10, seed=0) -> float:
    """Ascent estimate of sup_{||a||<=1} (sum_i |tr(F_i a)|^2)^(1/2), the
    level-1 norm of a -> (xi_i(a))_i into max(l2^n)."""
    fs = [np.asarray(f, dtype=complex) for f in fs]
    m = fs[0].shape[0]

    def run(w):
        val = 0.0
        for _ in range(80):
            g = sum(wi * f for wi, f in zip(np.conj(w), fs))
            u, s, vh = np.linalg.svd(dagger(g))
            a = u @ vh
            vec = np.array([np.trace(f @ a) for f in fs])
            new = float(np.linalg.norm(vec))
            if new <= val + 1e-13:
                return new
            val = new
            w = vec / new
        return val

    n = len(fs)
    best = run(np.ones(n) / np.sqrt(n))
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        best = max(best, run(w / np.linalg.norm(w)))
    return best


def lemma_const4_record(fs, restarts: int = 10, seed=0) -> dict:
    """For functionals xi_i = tr(F_i .) on M_m, record the square-sum of their
    trace norms against a certified upper bound on || sum xi_i (x) e_i ||
    (triangle inequality certificate) and an ascent lower estimate."""
    lhs = float(np.sqrt(sum(functional_norm(f) ** 2 for f in fs)))
    triangle = float(sum(functional_norm(f) for f in fs))
    estimate = functional_tuple_norm_estimate(fs, restarts=restarts, seed=seed)
    return {"lhs": lhs, "upper_certificate": triangle, "lower_estimate": estimate}


def row_inequality_check(basis, images, xs, mult_tol: float = 1e-8,
                         restarts: int = 10, seed=0):
    """For a homomorphism u given on an algebra basis (u(b_i) = images[i]),
    return (lhs, rhs) with lhs = ||sum u(x_i)* u(x_i)||^(1/2) and
    rhs = ||u||^2 ||sum x_i* x_i||^(1/2).

    Multiplicativity is validated on basis products; x_i must lie in the span
    of the basis.  ||u|| is an ascent lower estimate, which only makes the
    asserted inequality stricter."""
    basis = [np.asarray(b, dtype=complex) for b in basis]
    images = [np.asarray(y, dtype=complex) for y in images]
    n = basis[0].shape[0]
    bmat = np.array([b.ravel() for b in basis]).T

    def u_of(x):
        coeff, res, *_ = np.linalg.lstsq(bmat, np.asarray(x, dtype=complex).ravel(), rcond=None)
        rec = (bmat @ coeff).reshape(n, n)
        if op_norm(rec - x) > 1e-8 * max(1.0, op_norm(x)):
            raise ValueError("element not in the span of the basis")
        return sum(c * y for c, y in zip(coeff, images))

    scale = max(op_norm(y) for y in images) or 1.0
    for bi, yi in zip(basis, images):
        for bj, yj in zip(basis, images):
            if op_norm(u_of(bi @ bj) - yi @ yj) > mult_tol * scale * scale:
                raise ValueError("input map is not multiplicative on the basis")

    uxs = [u_of(x) for x in xs]
    lhs = float(np.sqrt(op_norm(sum(dagger(y) @ y for y in uxs))))
    if np.linalg.matrix_rank(bmat, tol=1e-9) == n * n:
        phi = CbMap.from_generator_images(n, images[0].shape[0],
                                          list(zip(basis, images)))
        unorm = map_norm_estimate(phi, restarts=restarts, seed=seed)
    else:
        unorm = _span_ratio_ascent(basis, images, restarts=restarts, seed=seed)
    rhs = float(unorm ** 2 * np.sqrt(op_norm(sum(dagger(x) @ x for x in xs))))
    return lhs, rhs


def _span_ratio_ascent(basis, images, restarts=10, seed=0):
    """sup ||sum c_i images_i|| / ||sum c_i basis_i|| by random hill climbing
    over coefficient vectors (the map's norm restricted to the span)."""
    n = len(basis)

    def ratio(c):
        x = sum(ci * b for ci, b in zip(c, basis))
        nx = op_norm(x)
        if nx < 1e-12:
            return 0.0
        return op_norm(sum(ci * y for ci, y in zip(c, images))) / nx

    best = 0.0
    seeds = np.random.SeedSequence(seed).spawn(max(restarts, 1))
    for ss in seeds:
        rng = np.random.default_rng(ss)
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        val = ratio(c)
        step = 0.5
        for _ in range(200):
            cand = c + step * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
            v = ratio(cand)
            if v > val:
                c, val = cand, v
            else:
                step *= 0.98
        best = max(best, val)
    return best
