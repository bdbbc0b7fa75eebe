"""Matrix-group elements, Weyl representatives, minors, and block Bruhat
factorizations.

Two groups appear throughout: the big group G = GL(2n, R) and the
subgroup H = GL(2n-1, R), embedded into G as h -> diag(h, 1).  Group
elements carry a side tag ("G" or "H") so that the minor functions and
factorizations can pick the right index conventions.  All index
conventions below are stated 1-based, matching the usual matrix-entry
notation; the code translates to 0-based slices.

The factorizations implemented here are the open-cell (block LU)
decompositions

    g = nbar(X) * [[A, B], [0, S]]            (G, partition (n, n))
    h = nbar_H(X, u, v) * upper-triangular    (H, partition (n-1, 1, n-1))

whose pivot determinants feed the section evaluators.  Points whose
pivots fall below a relative tolerance are flagged ``outside`` -- that is
ordinary data (the complement of the open cell), not an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: default relative singularity tolerance for cell membership
DEFAULT_TOL = 1e-10


# ----------------------------------------------------------------------
# elements
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GroupElement:
    """A concrete invertible matrix tagged with the group it lives in.

    ``side`` is "G" (size 2n) or "H" (size 2n-1); ``n`` is the block
    parameter, so e.g. GL(4) elements have side "G", n = 2 and GL(3)
    elements have side "H", n = 2.
    """

    entries: np.ndarray
    side: str
    n: int

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def group_element(entries, side: str) -> GroupElement:
    """Wrap and validate a dense matrix as a group element."""
    mat = np.array(entries, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DomainError("matrix entries must be finite")
    size = mat.shape[0]
    if side == "G":
        if size % 2 != 0 or size < 2:
            raise DomainError(f"G-side elements have even size, got {size}")
        n = size // 2
    elif side == "H":
        if size % 2 != 1:
            raise DomainError(f"H-side elements have odd size, got {size}")
        n = (size + 1) // 2
    else:
        raise DomainError(f"side must be 'G' or 'H', got {side!r}")
    sign, _ = np.linalg.slogdet(mat)
    if sign == 0.0:
        raise DomainError("matrix is singular")
    mat.setflags(write=False)
    return GroupElement(mat, side, n)


def identity(n: int, side: str) -> GroupElement:
    size = 2 * n if side == "G" else 2 * n - 1
    return group_element(np.eye(size), side)


def weyl_G(n: int) -> GroupElement:
    """The representative [[0, -I_n], [I_n, 0]] of the long swap in G."""
    w = np.zeros((2 * n, 2 * n))
    w[:n, n:] = -np.eye(n)
    w[n:, :n] = np.eye(n)
    return group_element(w, "G")


def weyl_H(n: int) -> GroupElement:
    """The representative [[0,0,-I],[0,1,0],[I,0,0]] of the outer swap in H."""
    k = n - 1
    size = 2 * n - 1
    w = np.zeros((size, size))
    w[:k, k + 1:] = -np.eye(k)
    w[k, k] = 1.0
    w[k + 1:, :k] = np.eye(k)
    return group_element(w, "H")


def x0(n: int) -> GroupElement:
    """Base point I_{2n} + E_{2n,n} of the open H-orbit."""
    return nbar_t(n, 1.0)


def nbar_t(n: int, t: float) -> GroupElement:
    """One-parameter unipotent I_{2n} + t E_{2n,n}."""
    if not np.isfinite(t):
        raise DomainError("t must be finite")
    mat = np.eye(2 * n)
    mat[2 * n - 1, n - 1] = t
    return group_element(mat, "G")


def k_theta(n: int, theta: float) -> GroupElement:
    """Rotation by theta in the (n, 2n) coordinate plane of G."""
    if not np.isfinite(theta):
        raise DomainError("theta must be finite")
    mat = np.eye(2 * n)
    c, s = np.cos(theta), np.sin(theta)
    mat[n - 1, n - 1] = c
    mat[n - 1, 2 * n - 1] = -s
    mat[2 * n - 1, n - 1] = s
    mat[2 * n - 1, 2 * n - 1] = c
    return group_element(mat, "G")


def nbar_G(X) -> GroupElement:
    """Lower block-unipotent [[I, 0], [X, I]] from an n x n cell coordinate."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    mat = np.eye(2 * n)
    mat[n:, :n] = X
    return group_element(mat, "G")


def nbar_H(X, u, v) -> GroupElement:
    """Lower unipotent [[I,0,0],[v^T,1,0],[X,u,I]] from H-cell coordinates."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    u = np.ravel(np.asarray(u, dtype=np.float64))
    v = np.ravel(np.asarray(v, dtype=np.float64))
    k = u.shape[0]
    if X.shape != (k, k) or v.shape != (k,):
        # allow the empty GL(1) case through with consistent shapes
        if not (k == 0 and X.size == 0 and v.size == 0):
            raise DomainError("inconsistent cell coordinate shapes")
        X = X.reshape(0, 0)
    size = 2 * k + 1
    mat = np.eye(size)
    mat[k, :k] = v
    mat[k + 1:, :k] = X
    mat[k + 1:, k] = u
    return group_element(mat, "H")


def iota(h: GroupElement) -> GroupElement:
    """Embed an H element into G as diag(h, 1)."""
    if h.side != "H":
        raise DomainError("iota embeds H-side elements")
    size = h.size + 1
    mat = np.eye(size)
    mat[:h.size, :h.size] = h.entries
    return group_element(mat, "G")


def mid_scaling(n: int, t: float) -> GroupElement:
    """Diagonal H element with t in the middle slot, 1 elsewhere."""
    if t == 0.0 or not np.isfinite(t):
        raise DomainError("t must be finite and nonzero")
    mat = np.eye(2 * n - 1)
    mat[n - 1, n - 1] = t
    return group_element(mat, "H")


# ----------------------------------------------------------------------
# minor functions
# ----------------------------------------------------------------------

def minors(g: GroupElement, which: str, k: int) -> float:
    """Evaluate one of the three minor families on a group element.

    which = "Phi_k":   det of rows 2n+1-k..2n, columns 1..k   (G side)
    which = "Psi_l":   det of rows 2n-l..2n-1, columns 1..l   (either side)
    which = "det_sub": leading principal k x k minor           (either side)

    The Psi family is anchored at row 2n-1, which is the last row of an
    H-side matrix and the second-to-last of a G-side one; this makes
    Psi_l agree across the embedding h -> diag(h, 1).  Index 0 is legal
    everywhere and gives the empty determinant 1.
    """
    mat = g.entries
    size = g.size
    key = which.lower()
    if key in ("phi_k", "phi"):
        if g.side != "G":
            raise DomainError("Phi_k applies to G-side elements")
        if not 0 <= k <= size:
            raise DomainError(f"Phi index {k} out of range for size {size}")
        if k == 0:
            return 1.0
        sub = mat[size - k:, :k]
    elif key in ("psi_l", "psi"):
        last = size - 1 if g.side == "G" else size  # 1-based row 2n-1
        if not 0 <= k <= last:
            raise DomainError(f"Psi index {k} out of range")
        if k == 0:
            return 1.0
        sub = mat[last - k:last, :k]
    elif key == "det_sub":
        if not 0 <= k <= size:
            raise DomainError(f"det_sub index {k} out of range")
        if k == 0:
            return 1.0
        sub = mat[:k, :k]
    else:
        raise DomainError(f"unknown minor family {which!r}")
    return float(np.linalg.det(sub))


# ----------------------------------------------------------------------
# Bruhat (block LU) factorizations
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BruhatG:
    """Open-cell data of g = nbar(X) [[A, B], [0, S]]; zeroed if outside."""

    X: np.ndarray
    A: np.ndarray
    S: np.ndarray
    outside: bool


@dataclass(frozen=True, eq=False)
class BruhatH:
    """Open-cell data of h = nbar_H(X, u, v) * p, pivots (P11, p22, P33)."""

    X: np.ndarray
    u: np.ndarray
    v: np.ndarray
    P11: np.ndarray
    p22: float
    P33: np.ndarray
    outside: bool


def bruhat_G(g: GroupElement, tol: float = DEFAULT_TOL) -> BruhatG:
    """Factor a G element against the (n, n) block partition.

    ``outside`` is set when |det A| <= tol * ||g||_F^n with A the
    upper-left block; the remaining fields are zero-filled in that case.
    """
    if g.side != "G":
        raise DomainError("bruhat_G expects a G-side element")
    n = g.n
    mat = g.entries
    A = mat[:n, :n]
    sign_a, logabs_a = np.linalg.slogdet(A)
    fro = float(np.linalg.norm(mat))
    if sign_a == 0.0 or logabs_a <= np.log(tol) + n * np.log(fro):
        z = np.zeros((n, n))
        return BruhatG(z, z.copy(), z.copy(), True)
    X = np.linalg.solve(A.T, mat[n:, :n].T).T
    S = mat[n:, n:] - X @ mat[:n, n:]
    return BruhatG(X, A.copy(), S, False)


def bruhat_H(h: GroupElement, tol: float = DEFAULT_TOL) -> BruhatH:
    """Factor an H element against the (n-1, 1, n-1) block partition.

    Pivots are the leading block P11, the scalar Schur complement p22,
    and the final Schur block P33; ``outside`` is set when either of the
    first two pivots falls below the relative tolerance.
    """
    if h.side != "H":
        raise DomainError("bruhat_H expects an H-side element")
    n = h.n
    k = n - 1
    mat = h.entries
    fro = float(np.linalg.norm(mat))

    if k == 0:
        p22 = float(mat[0, 0])
        empty = np.zeros((0, 0))
        evec = np.zeros(0)
        if abs(p22) <= tol * fro:
            return BruhatH(empty, evec, evec, empty, 0.0, empty, True)
        return BruhatH(empty, evec, evec, empty, p22, empty, False)

    H11 = mat[:k, :k]
    sign_11, logabs_11 = np.linalg.slogdet(H11)
    bad = sign_11 == 0.0 or logabs_11 <= np.log(tol) + k * np.log(fro)
    if not bad:
        v = np.linalg.solve(H11.T, mat[k, :k])
        X = np.linalg.solve(H11.T, mat[k + 1:, :k].T).T
        p22 = float(mat[k, k] - v @ mat[:k, k])
        bad = abs(p22) <= tol * fro
    if bad:
        z = np.zeros((k, k))
        zv = np.zeros(k)
        return BruhatH(z, zv, zv.copy(), z.copy(), 0.0, z.copy(), True)
    p23 = mat[k, k + 1:] - v @ mat[:k, k + 1:]
    u = (mat[k + 1:, k] - X @ mat[:k, k]) / p22
    P33 = mat[k + 1:, k + 1:] - X @ mat[:k, k + 1:] - np.outer(u, p23)
    return BruhatH(X, u, v, H11.copy(), p22, P33, False)
