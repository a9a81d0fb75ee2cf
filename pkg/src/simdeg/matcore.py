"""Dense complex matrix numerics.

Matrices are plain numpy arrays (complex128, row-major). This module adds
the spectral machinery the rest of the package relies on: Hermitian
functional calculus, Haar-random unitaries, the Weyl (generalized Pauli)
design, and a JSON exchange format.
"""

from __future__ import annotations

import json

import numpy as np

DEFAULT_HERM_TOL = 1e-12


class NotPositiveDefiniteError(ValueError):
    """Input to the Hermitian functional calculus is not PD (or not Hermitian)."""


def as_cmatrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
        raise ValueError("matrix entries must be finite")
    return a


def op_norm(m) -> float:
    """Operator (largest singular value) norm."""
    a = as_cmatrix(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def kron(a, b) -> np.ndarray:
    return np.kron(as_cmatrix(a), as_cmatrix(b))


def dagger(a) -> np.ndarray:
    return np.conj(np.asarray(a)).T


class HermitianPD:
    """Hermitian positive definite matrix with a cached eigendecomposition.

    Symmetrizes inputs whose asymmetry is below `herm_tol` (relative) and
    rejects anything genuinely non-Hermitian or non-PD, reporting the
    smallest eigenvalue in the diagnostic.
    """

    def __init__(self, m, herm_tol: float = DEFAULT_HERM_TOL):
        a = as_cmatrix(m)
        if a.shape[0] != a.shape[1]:
            raise NotPositiveDefiniteError("matrix is not square")
        scale = max(op_norm(a), 1e-300)
        asym = op_norm(a - dagger(a))
        if asym > herm_tol * scale:
            raise NotPositiveDefiniteError(
                f"matrix is not Hermitian: asymmetry {asym:.3e} exceeds "
                f"{herm_tol:.1e} * norm"
            )
        h = (a + dagger(a)) / 2
        w, v = np.linalg.eigh(h)
        if w[0] <= 0:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite: smallest eigenvalue {w[0]:.6e}"
            )
        self.matrix = h
        self.eigenvalues = w
        self.eigenvectors = v

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def power(self, t: float) -> np.ndarray:
        """Fractional power P^t via spectral calculus."""
        return (self.eigenvectors * self.eigenvalues**t) @ dagger(self.eigenvectors)

    def log(self) -> np.ndarray:
        """Hermitian logarithm."""
        return (self.eigenvectors * np.log(self.eigenvalues)) @ dagger(self.eigenvectors)

    def cond(self) -> float:
        return float(self.eigenvalues[-1] / self.eigenvalues[0])


def frac_power(p: HermitianPD | np.ndarray, t: float) -> np.ndarray:
    if not isinstance(p, HermitianPD):
        p = HermitianPD(p)
    return p.power(t)


def matrix_log(p: HermitianPD | np.ndarray) -> np.ndarray:
    if not isinstance(p, HermitianPD):
        p = HermitianPD(p)
    return p.log()


def haar_unitary(n: int, seed) -> np.ndarray:
    """Haar-distributed n x n unitary.

    QR of a complex Gaussian matrix with the R diagonal phase-corrected;
    deterministic per seed.
    """
    if n < 1:
        raise ValueError("haar_unitary requires n >= 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return q


def weyl_design(n: int) -> list[np.ndarray]:
    """The n^2 Weyl unitaries W_{jk} = X^j Z^k.

    X is the cyclic shift, Z = diag(omega^m) with omega = exp(2 pi i / n).
    Their uniform average reproduces the Haar first moment exactly:
    (1/n^2) sum_W W a W* = (tr a / n) I for every a in M_n.
    """
    if n < 1:
        raise ValueError("weyl_design requires n >= 1")
    omega = np.exp(2j * np.pi / n)
    x = np.roll(np.eye(n, dtype=complex), 1, axis=0)
    z = np.diag(omega ** np.arange(n))
    out = []
    xj = np.eye(n, dtype=complex)
    for _ in range(n):
        zk = np.eye(n, dtype=complex)
        for _ in range(n):
            out.append(xj @ zk)
            zk = zk @ z
        xj = xj @ x
    return out


def random_contraction(shape: tuple[int, int], rng) -> np.ndarray:
    """Random matrix scaled into the closed unit ball of the operator norm."""
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    s = op_norm(g)
    r = rng.uniform(0.2, 1.0)
    return g * (r / s)


def project_to_ball(a: np.ndarray) -> np.ndarray:
    """Nearest point of the operator-norm unit ball (clip singular values)."""
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return (u * np.minimum(s, 1.0)) @ vh


def matrix_to_json(a) -> str:
    a = as_cmatrix(a)
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in a]
    return json.dumps(rows)


def matrix_from_json(text: str) -> np.ndarray:
    rows = json.loads(text)
    if not isinstance(rows, list) or not rows:
        raise ValueError("matrix JSON must be a nonempty array of rows")
    width = None
    out = []
    for row in rows:
        if not isinstance(row, list):
            raise ValueError("matrix JSON rows must be arrays")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValueError("matrix JSON is not rectangular")
        out.append([complex(re, im) for re, im in row])
    return np.array(out, dtype=complex)
