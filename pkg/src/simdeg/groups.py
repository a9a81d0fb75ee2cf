"""Finite group combinatorics, the regular representation, and the three
norms on functions: the full C* norm, the Fourier-Stieltjes norm B(G), and
the Herz-Schur multiplier norm M_0(G).

Finite groups are amenable, so the full C* norm coincides with the
regular-representation norm; every C* norm below is computed on l2(G).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .matcore import dagger, kron, op_norm
from .sdp import SdpBuilder, SdpError

DEFAULT_ORDER_CAP = 64


class FiniteGroup:
    """Cayley-table group. Element 0 is the identity; `generators` is the
    distinguished generating subset."""

    def __init__(self, cayley: np.ndarray, generators, name: str = ""):
        cayley = np.asarray(cayley, dtype=int)
        n = cayley.shape[0]
        if cayley.shape != (n, n):
            raise ValueError("cayley table must be square")
        self.order = n
        self.cayley = cayley
        self.name = name
        self.identity = 0
        if not (np.all(cayley[0, :] == np.arange(n)) and np.all(cayley[:, 0] == np.arange(n))):
            raise ValueError("element 0 must be the identity")
        inv = np.full(n, -1, dtype=int)
        for g in range(n):
            js = np.where(cayley[g, :] == 0)[0]
            if len(js) != 1:
                raise ValueError("table rows must be permutations")
            inv[g] = js[0]
        self.inv = inv
        self._check_associativity()
        self.generators = sorted(set(int(g) for g in generators))
        if not self.generators and n > 1:
            raise ValueError("nontrivial group needs generators")
        if self._reach(self.generators) != set(range(n)):
            raise ValueError("generator set does not generate the group")

    def _check_associativity(self):
        n = self.order
        c = self.cayley
        if n <= 64:
            triples = itertools.product(range(n), repeat=3)
        else:
            rng = np.random.default_rng(0)
            triples = (tuple(rng.integers(0, n, 3)) for _ in range(5000))
        for a, b, d in triples:
            if c[c[a, b], d] != c[a, c[b, d]]:
                raise ValueError("multiplication table is not associative")

    def _reach(self, gens):
        seen = {0}
        frontier = {0}
        while frontier:
            nxt = set()
            for g in frontier:
                for h in gens:
                    p = int(self.cayley[g, h])
                    if p not in seen:
                        seen.add(p)
                        nxt.add(p)
            frontier = nxt
        return seen

    def mul(self, a: int, b: int) -> int:
        return int(self.cayley[a, b])

    def is_abelian(self) -> bool:
        return bool(np.all(self.cayley == self.cayley.T))

    def elements(self):
        return range(self.order)


def _cyclic_table(m):
    idx = np.arange(m)
    return (idx[:, None] + idx[None, :]) % m


def _table_from_perms(perms):
    """Multiplication table for a list of permutations (tuples), identity first.
    Product convention: (p * q)(x) = p(q(x))."""
    index = {p: i for i, p in enumerate(perms)}
    n = len(perms)
    table = np.zeros((n, n), dtype=int)
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            table[i, j] = index[tuple(p[q[x]] for x in range(len(p)))]
    return table


def make_group(spec, order_cap: int = DEFAULT_ORDER_CAP) -> FiniteGroup:
    """Build a group from a spec: ('cyclic', m), ('dihedral', m), ('sym', k),
    ('prod', [spec, ...]), or the CLI string forms 'cyclic:8',
    'prod:cyclic:2,cyclic:2', 'dihedral:4', 'sym:3'."""
    if isinstance(spec, str):
        spec = parse_group_spec(spec)
    kind = spec[0]
    if kind == "cyclic":
        m = int(spec[1])
        if m < 1:
            raise ValueError("cyclic order must be >= 1")
        if m > order_cap:
            raise ValueError(f"order {m} exceeds cap {order_cap}")
        gens = [] if m == 1 else sorted({1, m - 1})
        return FiniteGroup(_cyclic_table(m), gens, name=f"cyclic:{m}")
    if kind == "dihedral":
        m = int(spec[1])
        if m < 1:
            raise ValueError("dihedral parameter must be >= 1")
        if 2 * m > order_cap:
            raise ValueError(f"order {2 * m} exceeds cap {order_cap}")
        # elements r^a s^b, index = a + m*b
        n = 2 * m
        table = np.zeros((n, n), dtype=int)
        for a in range(m):
            for b in range(2):
                for c in range(m):
                    for d in range(2):
                        # (r^a s^b)(r^c s^d) = r^(a + (-1)^b c) s^(b+d)
                        aa = (a + (c if b == 0 else -c)) % m
                        bb = (b + d) % 2
                        table[a + m * b, c + m * d] = aa + m * bb
        gens = sorted({1 % m + 0, (m - 1) % m, m} - {0})
        return FiniteGroup(table, gens, name=f"dihedral:{m}")
    if kind == "sym":
        k = int(spec[1])
        if math.factorial(k) > order_cap:
            raise ValueError(f"order {math.factorial(k)} exceeds cap {order_cap}")
        perms = sorted(itertools.permutations(range(k)))
        # identity is the sorted-first permutation
        table = _table_from_perms(perms)
        index = {p: i for i, p in enumerate(perms)}
        gens = set()
        if k >= 2:
            t = list(range(k))
            t[0], t[1] = t[1], t[0]
            gens.add(index[tuple(t)])
        if k >= 3:
            cyc = tuple(list(range(1, k)) + [0])
            gens.add(index[cyc])
            gens.add(index[tuple(np.argsort(cyc))])
        return FiniteGroup(table, sorted(gens), name=f"sym:{k}")
    if kind == "prod":
        factors = [make_group(s, order_cap=order_cap) for s in spec[1]]
        order = 1
        for f in factors:
            order *= f.order
        if order > order_cap:
            raise ValueError(f"order {order} exceeds cap {order_cap}")
        dims = [f.order for f in factors]

        def enc(tup):
            i = 0
            for d, t in zip(dims, tup):
                i = i * d + t
            return i

        tuples = list(itertools.product(*[range(d) for d in dims]))
        table = np.zeros((order, order), dtype=int)
        for a in tuples:
            for b in tuples:
                table[enc(a), enc(b)] = enc(tuple(f.mul(x, y) for f, x, y in zip(factors, a, b)))
        gens = []
        for i, f in enumerate(factors):
            for g in f.generators:
                tup = [0] * len(factors)
                tup[i] = g
                gens.append(enc(tuple(tup)))
        name = "prod:" + ",".join(f.name for f in factors)
        return FiniteGroup(table, gens, name=name)
    raise ValueError(f"unknown group kind {kind!r}")


def parse_group_spec(text: str):
    text = text.strip()
    if text.startswith("prod:"):
        return ("prod", [parse_group_spec(p) for p in text[len("prod:"):].split(",")])
    kind, _, arg = text.partition(":")
    if kind not in ("cyclic", "dihedral", "sym"):
        raise ValueError(f"unknown group spec {text!r}")
    return (kind, int(arg))


def word_diameter(group: FiniteGroup, gens=None):
    """Max over g of the least L with g a product of exactly L generators
    (identity has length 0).  Positive words only; returns math.inf when the
    generator set fails to reach every element."""
    gens = group.generators if gens is None else sorted(set(gens))
    n = group.order
    dist = np.full(n, -1, dtype=int)
    dist[0] = 0
    frontier = [0]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for g in frontier:
            for h in gens:
                p = group.mul(g, h)
                if dist[p] < 0:
                    dist[p] = d
                    nxt.append(p)
        frontier = nxt
    if np.any(dist < 0):
        return math.inf
    return int(dist.max())


class GroupFunction:
    """Scalar function on a finite group, stored as a length-n vector."""

    def __init__(self, group: FiniteGroup, values):
        values = np.asarray(values, dtype=complex).ravel()
        if len(values) != group.order:
            raise ValueError("value count must match group order")
        self.group = group
        self.values = values

    @classmethod
    def delta(cls, group: FiniteGroup, t: int) -> "GroupFunction":
        v = np.zeros(group.order, dtype=complex)
        v[t] = 1.0
        return cls(group, v)


class GroupAlgElement:
    """Element of M_k(C[G]): finitely supported map t -> M_k."""

    def __init__(self, group: FiniteGroup, k: int, coeffs: dict[int, np.ndarray]):
        self.group = group
        self.k = k
        self.coeffs = {}
        for t, m in coeffs.items():
            m = np.asarray(m, dtype=complex)
            if k == 1 and m.ndim == 0:
                m = m.reshape(1, 1)
            if m.shape != (k, k):
                raise ValueError("coefficient block has wrong shape")
            if np.any(m != 0):
                self.coeffs[int(t)] = m

    @classmethod
    def delta(cls, group: FiniteGroup, t: int, scale: complex = 1.0) -> "GroupAlgElement":
        return cls(group, 1, {t: np.array([[scale]], dtype=complex)})

    def realize(self) -> np.ndarray:
        """Image under id (x) lambda on C^k (x) l2(G)."""
        n = self.group.order
        lam = regular_rep(self.group)
        out = np.zeros((self.k * n, self.k * n), dtype=complex)
        for t, m in self.coeffs.items():
            out += kron(m, lam.images[t])
        return out

    def convolve(self, other: "GroupAlgElement") -> "GroupAlgElement":
        if other.group is not self.group and other.group.order != self.group.order:
            raise ValueError("group mismatch")
        if other.k != self.k:
            raise ValueError("block size mismatch")
        out: dict[int, np.ndarray] = {}
        for r, a in self.coeffs.items():
            for s, b in other.coeffs.items():
                t = self.group.mul(r, s)
                out[t] = out.get(t, 0) + a @ b
        return GroupAlgElement(self.group, self.k, out)

    def scale(self, c: complex) -> "GroupAlgElement":
        return GroupAlgElement(self.group, self.k, {t: c * m for t, m in self.coeffs.items()})


class GroupRep:
    """Map from group elements to invertible matrices."""

    def __init__(self, group: FiniteGroup, images, mult_tol: float = 1e-8):
        images = [np.asarray(m, dtype=complex) for m in images]
        if len(images) != group.order:
            raise ValueError("need one image per group element")
        dim = images[0].shape[0]
        for m in images:
            if m.shape != (dim, dim):
                raise ValueError("images must share a square shape")
        self.group = group
        self.dim = dim
        self.images = images
        sup = max(op_norm(m) for m in images)
        if op_norm(images[0] - np.eye(dim)) > mult_tol:
            raise ValueError("identity element must map to the identity matrix")
        for a in range(group.order):
            for b in range(group.order):
                err = op_norm(images[group.mul(a, b)] - images[a] @ images[b])
                if err > mult_tol * max(1.0, sup * sup):
                    raise ValueError(f"not multiplicative at ({a},{b}): error {err:.2e}")
        self.pi_sup = sup

    def is_unitary(self, tol: float = 1e-10) -> bool:
        return all(
            op_norm(dagger(m) @ m - np.eye(self.dim)) <= tol for m in self.images
        )

    def direct_sum(self, other: "GroupRep") -> "GroupRep":
        d = self.dim + other.dim
        images = []
        for a, b in zip(self.images, other.images):
            m = np.zeros((d, d), dtype=complex)
            m[: self.dim, : self.dim] = a
            m[self.dim :, self.dim :] = b
            images.append(m)
        return GroupRep(self.group, images)


_REG_CACHE: dict[int, GroupRep] = {}


def regular_rep(group: FiniteGroup) -> GroupRep:
    """Left regular representation on l2(G): lambda(g) delta_s = delta_{gs}."""
    key = id(group)
    rep = _REG_CACHE.get(key)
    if rep is not None:
        return rep
    n = group.order
    images = []
    for g in range(n):
        m = np.zeros((n, n), dtype=complex)
        for s in range(n):
            m[group.mul(g, s), s] = 1.0
        images.append(m)
    rep = GroupRep(group, images)
    _REG_CACHE[key] = rep
    return rep


def cstar_norm(x: GroupAlgElement) -> float:
    """Full C*(G) norm of x in M_k(C[G]); equals the regular-representation
    norm because finite groups are amenable."""
    return op_norm(x.realize())


def bg_norm(f: GroupFunction, tol: float = 1e-8) -> float:
    """Fourier-Stieltjes norm by duality with C*(G):

        max Re sum_t f(t) a(t)   s.t.  || sum_t a(t) lambda(t) || <= 1,

    as an LMI [[I, L], [L*, I]] >= 0 with L constrained into span{lambda(t)}."""
    g = f.group
    n = g.order
    bld = SdpBuilder()
    w = bld.add_block(2 * n)
    bld.fix_submatrix(w, 0, 0, np.eye(n))
    bld.fix_submatrix(w, n, n, np.eye(n))
    # L[s, theta] depends only on t = s * theta^{-1}; representative L[t, e]
    for s in range(n):
        for theta in range(n):
            if theta == 0:
                continue
            t = g.mul(s, g.inv[theta])
            bld.add_eq([(w, s, n + theta, 1.0), (w, t, n + 0, -1.0)], 0.0)
    bld.set_objective([(w, t, n + 0, -f.values[t]) for t in range(n)])
    # first-order SCS is markedly faster than interior-point backends on
    # these norm-one LMIs and passes the same recomputed gap check
    sol = bld.solve(tol, solvers=("SCS", "CLARABEL", "CVXOPT"))
    if sol.status != "optimal":
        raise SdpError(f"B(G) SDP failed: {sol.status}")
    return -sol.primal_value


def _abelian_characters(group: FiniteGroup, attempts: int = 8) -> np.ndarray:
    """Character table (rows = characters) of an abelian group, from a joint
    diagonalization of the (commuting, normal) regular representation."""
    if not group.is_abelian():
        raise ValueError("group is not abelian")
    n = group.order
    lam = regular_rep(group)
    for attempt in range(attempts):
        rng = np.random.default_rng(attempt)
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        h = np.zeros((n, n), dtype=complex)
        for t in range(n):
            h += c[t] * lam.images[t] + np.conj(c[t]) * lam.images[group.inv[t]]
        _, u = np.linalg.eigh(h)
        chars = np.empty((n, n), dtype=complex)
        ok = True
        for t in range(n):
            d = dagger(u) @ lam.images[t] @ u
            off = op_norm(d - np.diag(np.diagonal(d)))
            if off > 1e-8:
                ok = False
                break
            chars[:, t] = np.diagonal(d)
        if ok:
            return chars
    raise RuntimeError("failed to diagonalize the abelian regular representation")


def bg_norm_fourier_abelian(f: GroupFunction) -> float:
    """Independent oracle for abelian G: B(G) norm = l1 norm of the Fourier
    coefficients c_chi = |G|^{-1} sum_t f(t) conj(chi(t))."""
    g = f.group
    chars = _abelian_characters(g)
    coeffs = chars.conj() @ f.values / g.order
    return float(np.sum(np.abs(coeffs)))


def herz_schur_norm(phi: GroupFunction, tol: float = 1e-8) -> float:
    """M_0(G) norm: gamma_2 row/column factorization norm of the kernel
    M[s, t] = phi(s^{-1} t)."""
    from .opspace import gamma2_rowcol_norm

    g = phi.group
    n = g.order
    m = np.empty((n, n), dtype=complex)
    for s in range(n):
        for t in range(n):
            m[s, t] = phi.values[g.mul(g.inv[s], t)]
    return gamma2_rowcol_norm(m, tol, solvers=("SCS", "CLARABEL", "CVXOPT"))


def ub_rep_twist(rho: GroupRep, s_matrix, unitary_tol: float = 1e-10) -> GroupRep:
    """pi(g) = S^{-1} rho(g) S: the canonical uniformly bounded test family."""
    if not rho.is_unitary(unitary_tol):
        raise ValueError("base representation must be unitary")
    s = np.asarray(s_matrix, dtype=complex)
    sinv = np.linalg.inv(s)  # raises LinAlgError for singular S
    cond = op_norm(s) * op_norm(sinv)
    images = [sinv @ m @ s for m in rho.images]
    rep = GroupRep(rho.group, images, mult_tol=1e-8 * max(1.0, cond**2))
    return rep


def coefficient_fn(pi: GroupRep, xi, eta) -> GroupFunction:
    """phi(t) = <pi(t) xi, eta> = eta^* pi(t) xi."""
    xi = np.asarray(xi, dtype=complex).ravel()
    eta = np.asarray(eta, dtype=complex).ravel()
    if len(xi) != pi.dim or len(eta) != pi.dim:
        raise ValueError("vector dimension mismatch")
    vals = [np.conj(eta) @ (m @ xi) for m in pi.images]
    return GroupFunction(pi.group, vals)
