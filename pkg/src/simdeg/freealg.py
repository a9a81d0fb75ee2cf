"""Truncated symbolic model of the free unital operator algebra over a
maximal l1 letter space: noncommutative polynomials with matrix
coefficients, homogeneous projections, scaling automorphisms, evaluations,
and a sampled norm estimator.

Words are tuples of letter indices in range(k); the empty word is the unit.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .matcore import as_cmatrix, haar_unitary, kron, op_norm, random_contraction
from .groups import FiniteGroup, GroupAlgElement

DEGREE_CAP = 6
SUPPORT_CAP = 10_000


class FreePoly:
    """Finitely supported word -> coefficient map over k letters."""

    def __init__(self, k: int, coeffs: dict):
        if k < 1:
            raise ValueError("need at least one letter")
        self.k = k
        clean: dict[tuple[int, ...], np.ndarray] = {}
        shape = None
        for word, c in coeffs.items():
            word = tuple(int(i) for i in word)
            if any(i < 0 or i >= k for i in word):
                raise ValueError(f"letter out of range in word {word}")
            if len(word) > DEGREE_CAP:
                raise ValueError(f"degree cap {DEGREE_CAP} exceeded")
            c = np.asarray(c, dtype=complex)
            if c.ndim == 0:
                c = c.reshape(1, 1)
            if shape is None:
                shape = c.shape
            elif c.shape != shape:
                raise ValueError("coefficients must share one shape")
            if np.any(c != 0):
                clean[word] = c
        if len(clean) > SUPPORT_CAP:
            raise ValueError(f"support cap {SUPPORT_CAP} exceeded")
        self.coeffs = clean
        self.shape = shape if shape is not None else (1, 1)

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.coeffs), default=0)

    def __add__(self, other: "FreePoly") -> "FreePoly":
        if other.k != self.k:
            raise ValueError("alphabet mismatch")
        out = {w: c.copy() for w, c in self.coeffs.items()}
        for w, c in other.coeffs.items():
            out[w] = out.get(w, 0) + c
        return FreePoly(self.k, out)

    def scale(self, c: complex) -> "FreePoly":
        return FreePoly(self.k, {w: c * m for w, m in self.coeffs.items()})

    def to_json(self) -> str:
        return json.dumps(
            {
                "k": self.k,
                "terms": [
                    {
                        "word": list(w),
                        "coeff": [[[float(z.real), float(z.imag)] for z in row] for row in c],
                    }
                    for w, c in sorted(self.coeffs.items())
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "FreePoly":
        data = json.loads(text)
        coeffs = {
            tuple(t["word"]): np.array(
                [[complex(re, im) for re, im in row] for row in t["coeff"]]
            )
            for t in data["terms"]
        }
        return cls(data["k"], coeffs)


def qj_project(p: FreePoly, j: int) -> FreePoly:
    """Degree-j homogeneous part."""
    return FreePoly(p.k, {w: c for w, c in p.coeffs.items() if len(w) == j})


def omega_scale(p: FreePoly, z: complex) -> FreePoly:
    """Scaling automorphism: coefficient of each length-j word times z^j.

    Only |z| <= 1 is allowed (the map is contractive exactly there)."""
    z = complex(z)
    if abs(z) > 1 + 1e-12:
        raise ValueError("scaling parameter must satisfy |z| <= 1")
    return FreePoly(p.k, {w: (z ** len(w)) * c for w, c in p.coeffs.items()})


def eval_letters(p: FreePoly, images) -> np.ndarray:
    """Unital evaluation e_i -> images[i]: sum of coeff (x) word products."""
    images = [as_cmatrix(v) for v in images]
    if len(images) != p.k:
        raise ValueError("need one image per letter")
    r = images[0].shape[0]
    for v in images:
        if v.shape != (r, r):
            raise ValueError("images must be square with a common dimension")
    m = p.shape[0]
    out = np.zeros((m * r, m * r), dtype=complex)
    for w, c in p.coeffs.items():
        prod = np.eye(r, dtype=complex)
        for i in w:
            prod = prod @ images[i]
        out += kron(c, prod)
    return out


def _aligned_scalar_tuple(p: FreePoly, r: int):
    """Unimodular scalars (x) I aligned against the single-letter scalar part:
    attains sum |lambda_i| for linear scalar polynomials."""
    phases = np.ones(p.k, dtype=complex)
    for i in range(p.k):
        c = p.coeffs.get((i,))
        if c is not None and p.shape == (1, 1) and abs(c[0, 0]) > 0:
            phases[i] = np.conj(c[0, 0]) / abs(c[0, 0])
    return [phases[i] * np.eye(r, dtype=complex) for i in range(p.k)]


def oa_norm_estimate(
    p: FreePoly, r: int = 2, trials: int = 24, seed=0, roots: int | None = None
) -> float:
    """Sampled lower bound on the free operator-algebra norm over the maximal
    l1 letter space: max of ||eval|| over k-tuples of contractions in M_r,
    each candidate tuple also evaluated along the circle orbit z * tuple for
    z ranging over roots of unity.

    The circle orbit makes the homogeneous-projection contractivity exact at
    the witness level: with a shared sample stream and shared root count,
    estimate(Q_j P) <= estimate(P) by discrete Fourier averaging.
    Homogeneous polynomials are sampled on unitaries only (where the sup is
    attained); mixed polynomials add random contractions.
    """
    if r < 1:
        raise ValueError("need r >= 1")
    if roots is None:
        roots = max(p.degree, 0) + 1
    zs = np.exp(2j * np.pi * np.arange(roots) / roots)
    homogeneous = len({len(w) for w in p.coeffs}) <= 1
    rng = np.random.default_rng(seed)
    candidates = [
        [np.eye(r, dtype=complex) for _ in range(p.k)],
        _aligned_scalar_tuple(p, r),
    ]
    for _ in range(trials):
        candidates.append([haar_unitary(r, rng) for _ in range(p.k)])
        if not homogeneous:
            candidates.append([random_contraction((r, r), rng) for _ in range(p.k)])
    best = 0.0
    for tup in candidates:
        for z in zs:
            best = max(best, op_norm(eval_letters(p, [z * v for v in tup])))
    return best


def pi_z_eval(p: FreePoly, group: FiniteGroup, assignment, z: complex) -> GroupAlgElement:
    """Product evaluation into M_m(C[G]): the word e_{i1}...e_{iN} maps to
    z^N delta_{g_{i1}...g_{iN}} with g_i = assignment[i]."""
    z = complex(z)
    if abs(z) > 1 + 1e-12:
        raise ValueError("|z| <= 1 required for complete contractivity")
    if len(assignment) != p.k:
        raise ValueError("need one group element per letter")
    m = p.shape[0]
    out: dict[int, np.ndarray] = {}
    for w, c in p.coeffs.items():
        g = group.identity
        for i in w:
            g = group.mul(g, assignment[i])
        out[g] = out.get(g, 0) + (z ** len(w)) * c
    return GroupAlgElement(group, m, out)
