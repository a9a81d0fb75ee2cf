"""Dense semidefinite programming engine and nonconvex ascent helpers.

Problems are stated in a single normal form: a list of Hermitian PSD
blocks, a real linear objective sum_b Re tr(C_b X_b) to minimize, and
affine equality constraints sum_b Re tr(A_b X_b) = r.  Everything else
in the package (operator norms, cb norms, gamma_2, B(G), invariant
metrics, l1 gauges) lowers to this form, with inequalities handled by
slack blocks and free complex scalars carried as off-diagonal entries of
PSD blocks.

The numerical core is delegated to interior-point solvers via cvxpy
(CLARABEL first, CVXOPT as fallback); duality gap and KKT residuals are
recomputed here from the returned primal/dual pair, so a solve is never
reported optimal on the solver's word alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import hashlib
import warnings

import numpy as np
import scipy.sparse as sparse
import cvxpy as cp

# cvxpy's complex2real reduction trips its own nested-list warning on 1x1
# Hermitian variables; harmless, and we use those heavily for scalar blocks.
warnings.filterwarnings(
    "ignore",
    message="Initializing a Constant with a nested list.*",
    category=UserWarning,
    module="cvxpy.*",
)
# inaccurate-solution fallbacks are handled by our own gap/KKT checks
warnings.filterwarnings(
    "ignore",
    message="Solution may be inaccurate.*",
    category=UserWarning,
    module="cvxpy.*",
)

from .matcore import dagger

SOLVER_ORDER = ("CLARABEL", "CVXOPT", "SCS")


class SdpError(RuntimeError):
    pass


@dataclass
class SdpProblem:
    """min sum_b Re tr(objective[b] X_b)  s.t.  X_b >= 0 (Hermitian) and
    sum_b Re tr(A[b] X_b) = rhs for every (A, rhs) in constraints."""

    block_dims: list[int]
    objective: list[np.ndarray | None]
    constraints: list[tuple[list[np.ndarray | None], float]] = field(default_factory=list)

    def validate(self, herm_tol: float = 1e-12):
        if len(self.objective) != len(self.block_dims):
            raise SdpError("objective must supply one coefficient per block")
        for coeffs in [self.objective] + [c for c, _ in self.constraints]:
            if len(coeffs) != len(self.block_dims):
                raise SdpError("constraint coefficient count does not match blocks")
            for d, a in zip(self.block_dims, coeffs):
                if a is None:
                    continue
                a = np.asarray(a)
                if a.shape != (d, d):
                    raise SdpError(f"coefficient shape {a.shape} does not match block dim {d}")
                scale = max(float(np.abs(a).max(initial=0.0)), 1.0)
                if np.abs(a - dagger(a)).max(initial=0.0) > herm_tol * scale:
                    raise SdpError("coefficient block is not Hermitian")

    def to_json_dict(self) -> dict:
        """Debug dump for cross-checking against external solvers."""

        def enc(a):
            if a is None:
                return None
            a = np.asarray(a, dtype=complex)
            return [[[z.real, z.imag] for z in row] for row in a]

        return {
            "block_dims": list(self.block_dims),
            "objective": [enc(a) for a in self.objective],
            "constraints": [
                {"coeffs": [enc(a) for a in coeffs], "rhs": rhs}
                for coeffs, rhs in self.constraints
            ],
            "sense": "minimize",
        }


@dataclass
class SdpSolution:
    status: str  # optimal | infeasible | numerical-failure
    primal_blocks: list[np.ndarray] | None = None
    dual: np.ndarray | None = None
    primal_value: float = float("nan")
    dual_value: float = float("nan")
    gap: float = float("inf")
    kkt_residual: float = float("inf")
    solver: str = ""

    @property
    def value(self) -> float:
        return self.primal_value


def _real_trace(a, x):
    return float(np.real(np.trace(a @ x)))


_PROB_CACHE: dict = {}
_PROB_CACHE_MAX = 64


def _compiled_problem(dims, amat, solver):
    """cvxpy problem for the normal form, canonicalized once per constraint
    matrix; objective and right-hand side enter as DPP parameters so that
    families of solves sharing structure (bisections, per-sample norms) skip
    recompilation."""
    ncon, total = amat.shape
    digest = hashlib.blake2b(amat.tobytes(), digest_size=16).digest()
    key = (solver, tuple(dims), ncon, digest)
    entry = _PROB_CACHE.get(key)
    if entry is not None:
        return entry
    xs = [cp.Variable((d, d), hermitian=True) for d in dims]
    cons = [x >> 0 for x in xs]
    stacked = cp.hstack([cp.reshape(x, (d * d,), order="F") for x, d in zip(xs, dims)])
    obj_param = cp.Parameter(total, complex=True)
    objective = cp.Minimize(cp.real(obj_param @ stacked))
    eq = None
    rhs_param = None
    if ncon:
        rhs_param = cp.Parameter(ncon)
        eq = cp.real(sparse.csr_matrix(amat) @ stacked) == rhs_param
        cons.append(eq)
    prob = cp.Problem(objective, cons)
    if len(_PROB_CACHE) >= _PROB_CACHE_MAX:
        _PROB_CACHE.pop(next(iter(_PROB_CACHE)))
    entry = (prob, xs, obj_param, rhs_param, eq)
    _PROB_CACHE[key] = entry
    return entry


def _solve_once(problem: SdpProblem, solver: str, tol: float) -> SdpSolution:
    dims = problem.block_dims
    # Vectorize: tr(A X) = A.ravel('C') . vec_F(X), so the whole affine part
    # becomes one matrix against the stacked column-major block entries.
    offsets = np.concatenate(([0], np.cumsum([d * d for d in dims]))).astype(int)
    total = int(offsets[-1])

    def row_vec(coeffs):
        row = np.zeros(total, dtype=complex)
        for b, a in enumerate(coeffs):
            if a is not None:
                row[offsets[b] : offsets[b + 1]] = np.asarray(a, dtype=complex).ravel()
        return row

    obj_row = row_vec(problem.objective)
    ncon = len(problem.constraints)
    amat = np.zeros((ncon, total), dtype=complex)
    rhs_vec = np.zeros(ncon)
    for j, (coeffs, rhs) in enumerate(problem.constraints):
        amat[j] = row_vec(coeffs)
        rhs_vec[j] = rhs
    prob, xs, obj_param, rhs_param, eq = _compiled_problem(dims, amat, solver)
    obj_param.value = obj_row
    if ncon:
        rhs_param.value = rhs_vec
    kwargs = {}
    if solver == "SCS":
        kwargs = {"eps": min(tol, 1e-9), "max_iters": 100_000}
    elif solver == "CLARABEL" and tol > 1e-8:
        # stop once the solver's own gap is an order below the requested one
        t = tol / 10
        kwargs = {"tol_gap_abs": t, "tol_gap_rel": t, "tol_feas": t}
    # warm starts on the cached problem would make results depend on the call
    # order; cold-start every solve so repeated inputs give identical outputs
    prob.solve(solver=solver, warm_start=False, **kwargs)
    if prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return SdpSolution(status="infeasible", solver=solver)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return SdpSolution(status="numerical-failure", solver=solver)

    primal = [np.asarray(x.value, dtype=complex) for x in xs]
    primal = [(p + dagger(p)) / 2 for p in primal]
    pvec = np.concatenate([p.ravel(order="F") for p in primal])
    pval = float(np.real(obj_row @ pvec))
    if ncon:
        duals = np.asarray(eq.dual_value, dtype=float).ravel()
        dval = -float(duals @ rhs_vec)
    else:
        duals = np.zeros(0)
        dval = 0.0

    # KKT: primal feasibility, dual PSD slack, complementary slackness.
    eq_res = float(np.abs(np.real(amat @ pvec) - rhs_vec).max(initial=0.0))
    psd_res = max(
        (max(0.0, -float(np.linalg.eigvalsh(p)[0])) for p in primal), default=0.0
    )
    zrow = obj_row + (duals @ amat if ncon else 0.0)
    dual_psd_res = 0.0
    comp_res = 0.0
    for b, d in enumerate(dims):
        z = zrow[offsets[b] : offsets[b + 1]].reshape(d, d)
        z = (z + dagger(z)) / 2
        dual_psd_res = max(dual_psd_res, max(0.0, -float(np.linalg.eigvalsh(z)[0])))
        comp_res = max(comp_res, abs(_real_trace(z, primal[b])))
    scale = 1.0 + abs(pval)
    gap = abs(pval - dval) / scale
    kkt = max(eq_res, psd_res, dual_psd_res, comp_res / scale)
    status = "optimal" if (gap <= tol and eq_res <= 10 * tol) else "numerical-failure"
    return SdpSolution(
        status=status,
        primal_blocks=primal,
        dual=duals,
        primal_value=pval,
        dual_value=dval,
        gap=gap,
        kkt_residual=kkt,
        solver=solver,
    )


def sdp_solve(problem: SdpProblem, tol: float = 1e-8, solvers=None) -> SdpSolution:
    """Solve to duality gap <= tol or report an explicit failure status.

    `solvers` overrides the default backend order; every listed backend is
    tried until one passes the recomputed gap check."""
    problem.validate()
    best: SdpSolution | None = None
    for solver in (solvers or SOLVER_ORDER):
        try:
            sol = _solve_once(problem, solver, tol)
        except (cp.SolverError, Exception):  # noqa: BLE001 - solver backends vary
            continue
        if sol.status == "infeasible":
            return sol
        if sol.status == "optimal":
            return sol
        if best is None or sol.gap < best.gap:
            best = sol
    return best if best is not None else SdpSolution(status="numerical-failure")


# ---------------------------------------------------------------------------
# normal-form builder


def entry_re(dim: int, i: int, j: int) -> np.ndarray:
    """Hermitian A with Re tr(A X) = Re X[i, j] for Hermitian X."""
    a = np.zeros((dim, dim), dtype=complex)
    a[i, j] += 0.5
    a[j, i] += 0.5
    return a


def entry_im(dim: int, i: int, j: int) -> np.ndarray:
    """Hermitian A with Re tr(A X) = Im X[i, j] for Hermitian X."""
    a = np.zeros((dim, dim), dtype=complex)
    a[i, j] += 0.5j
    a[j, i] += -0.5j
    return a


class SdpBuilder:
    """Accumulates PSD blocks and scalar equality constraints, then emits an
    SdpProblem in the normal form above.

    Constraint terms are (block, i, j, complex weight) quadruples standing
    for weight * X_b[i, j]; complex-valued equalities are lowered to their
    real and imaginary parts.
    """

    def __init__(self):
        self.block_dims: list[int] = []
        self._obj: list[tuple[int, np.ndarray]] = []
        self._cons: list[tuple[list[tuple[int, np.ndarray]], float]] = []

    def add_block(self, dim: int) -> int:
        self.block_dims.append(dim)
        return len(self.block_dims) - 1

    def _lower_terms(self, terms):
        """[(b, i, j, w)] -> per-block Hermitian coefficient pairs for the real part."""
        acc: dict[int, np.ndarray] = {}
        for b, i, j, w in terms:
            d = self.block_dims[b]
            a = acc.setdefault(b, np.zeros((d, d), dtype=complex))
            w = complex(w)
            if w.real:
                a += w.real * entry_re(d, i, j)
            if w.imag:
                a += -w.imag * entry_im(d, i, j)
        return list(acc.items())

    def _lower_terms_imag(self, terms):
        """Imaginary part of sum w * X[i, j]."""
        acc: dict[int, np.ndarray] = {}
        for b, i, j, w in terms:
            d = self.block_dims[b]
            a = acc.setdefault(b, np.zeros((d, d), dtype=complex))
            w = complex(w)
            if w.real:
                a += w.real * entry_im(d, i, j)
            if w.imag:
                a += w.imag * entry_re(d, i, j)
        return list(acc.items())

    def add_eq(self, terms, rhs: complex):
        """sum of w * X_b[i, j] == rhs (a complex equality; two real rows)."""
        rhs = complex(rhs)
        self._cons.append((self._lower_terms(terms), rhs.real))
        im = self._lower_terms_imag(terms)
        if im or rhs.imag:
            self._cons.append((im, rhs.imag))

    def add_eq_real(self, terms, rhs: float):
        """Real part only: sum Re(w * X_b[i, j]) == rhs."""
        self._cons.append((self._lower_terms(terms), float(rhs)))

    def fix_submatrix(self, b: int, row0: int, col0: int, value: np.ndarray):
        value = np.asarray(value, dtype=complex)
        for i in range(value.shape[0]):
            for j in range(value.shape[1]):
                r, c = row0 + i, col0 + j
                if r > c:
                    continue  # Hermitian block: lower triangle is implied
                self.add_eq([(b, r, c, 1.0)], value[i, j])

    def set_objective(self, terms):
        """Minimize sum Re(w * X_b[i, j])."""
        self._obj = self._lower_terms(terms)

    def build(self) -> SdpProblem:
        nb = len(self.block_dims)

        def expand(pairs):
            out: list[np.ndarray | None] = [None] * nb
            for b, a in pairs:
                out[b] = a
            return out

        return SdpProblem(
            block_dims=list(self.block_dims),
            objective=expand(self._obj),
            constraints=[(expand(pairs), rhs) for pairs, rhs in self._cons],
        )

    def solve(self, tol: float = 1e-8, solvers=None) -> SdpSolution:
        return sdp_solve(self.build(), tol, solvers=solvers)


# ---------------------------------------------------------------------------
# quasiconvex bisection and nonconvex ascent


def quasiconvex_bisect(feasible, lo: float, hi: float, tol: float = 1e-6) -> float:
    """Least feasible gamma, assuming feasibility is monotone in gamma.

    Returns gamma* with feasible(gamma*) true and gamma* within tol of the
    infimum of the feasible set intersected with [lo, hi].
    """
    if not feasible(hi):
        raise ValueError("feasible(hi) must hold")
    if feasible(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _numeric_grad(f, xs, h=1e-6):
    grads = []
    for k, x in enumerate(xs):
        g = np.zeros_like(x, dtype=complex)
        it = np.nditer(np.zeros(x.shape), flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            for part, unit in ((1.0, 1.0), (1j, 1j)):
                xp = [a.copy() for a in xs]
                xm = [a.copy() for a in xs]
                xp[k][idx] += h * unit
                xm[k][idx] -= h * unit
                d = (f(xp) - f(xm)) / (2 * h)
                g[idx] += d * part
        grads.append(g)
    return grads


def ascent_lower_bound(
    f,
    shapes: list[tuple[int, int]],
    restarts: int = 8,
    seed=0,
    iters: int = 40,
    grad=None,
    x0: list[np.ndarray] | None = None,
    step_grid=(0.05, 0.5, 5.0),
) -> float:
    """Maximize f over a product of operator-norm unit balls by projected
    ascent with random restarts.  The returned value is f at a feasible
    iterate, hence always a valid lower bound for the supremum; it is
    nondecreasing in `restarts` for a fixed seed.
    """
    from .matcore import project_to_ball

    seeds = np.random.SeedSequence(seed).spawn(max(restarts, 1))
    if x0 is None:
        rng0 = np.random.default_rng(seeds[0])
        x0 = []
        for shape in shapes:
            g = rng0.standard_normal(shape) + 1j * rng0.standard_normal(shape)
            x0.append(project_to_ball(g))
    best = f(x0)
    if restarts == 0:
        return float(best)

    def climb(xs):
        val = f(xs)
        for _ in range(iters):
            g = grad(xs) if grad is not None else _numeric_grad(f, xs)
            improved = False
            for step in step_grid:
                cand = [project_to_ball(x + step * gg) for x, gg in zip(xs, g)]
                v = f(cand)
                if v > val + 1e-14:
                    xs, val, improved = cand, v, True
            if not improved:
                break
        return val

    best = max(best, climb([x.copy() for x in x0]))
    for ss in seeds[:restarts]:
        rng = np.random.default_rng(ss)
        start = []
        for shape in shapes:
            g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            start.append(project_to_ball(g))
        best = max(best, climb(start))
    return float(best)
