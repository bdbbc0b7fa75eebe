"""NumPy implementation of the batched block-factorization kernels.

These two functions are the hot path of every section evaluator: given a
batch of group elements they produce the open-cell coordinates together
with the pivot determinants in signed-log form (sign, log|det|), so the
callers can assemble arbitrary complex powers without overflow.

The compiled backend (``_cyimpl``) implements the same signatures; see
``sbolab._kernels`` for the dispatch rules.
"""

import numpy as np

BACKEND_NAME = "numpy"


def bruhat_g_batch(mats, n, tol):
    """Factor a batch of 2n x 2n matrices against the (n, n) partition.

    Each matrix is written as g = nbar(X) * [[A, B], [0, S]] with nbar(X)
    lower block-unipotent.  Returns the tuple

        (outside, X, sign_a, logabs_a, sign_s, logabs_s)

    where ``outside`` flags matrices whose upper-left block A has
    |det A| <= tol * ||g||_F^n (no cell coordinates there; the other
    fields are zero-filled for those rows).
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    m = mats.shape[0]
    A = mats[:, :n, :n]
    sign_g, logabs_g = np.linalg.slogdet(mats)
    sign_a, logabs_a = np.linalg.slogdet(A)
    fro = np.sqrt(np.einsum("mij,mij->m", mats, mats))
    with np.errstate(divide="ignore", invalid="ignore"):
        outside = (sign_a == 0.0) | (
            logabs_a <= np.log(tol) + n * np.log(fro))
    inside = ~outside
    X = np.zeros((m, n, n))
    if inside.any():
        a_in = A[inside]
        c_in = mats[inside][:, n:, :n]
        # X = C A^{-1}  via  A^T X^T = C^T
        X[inside] = np.linalg.solve(
            a_in.transpose(0, 2, 1), c_in.transpose(0, 2, 1)
        ).transpose(0, 2, 1)
    zero = np.zeros(m)
    sign_s = np.where(inside, sign_g * sign_a, zero)
    logabs_s = np.where(inside, logabs_g - logabs_a, zero)
    sign_a = np.where(inside, sign_a, zero)
    logabs_a = np.where(inside, logabs_a, zero)
    return outside, X, sign_a, logabs_a, sign_s, logabs_s


def bruhat_h_batch(mats, n, tol):
    """Factor a batch of (2n-1) x (2n-1) matrices against (n-1, 1, n-1).

    Each matrix is written as h = nbar_H(X, u, v) * p with nbar_H the
    lower unipotent [[I, 0, 0], [v^T, 1, 0], [X, u, I]] and p block upper
    triangular with pivots (P11, p22, P33).  Returns

        (outside, X, u, v, sign_11, logabs_11, sign_22, logabs_22,
         sign_33, logabs_33)

    with u, v of shape (m, n-1).  ``outside`` flags rows where either
    pivot falls below the relative tolerance.
    """
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    m = mats.shape[0]
    k = n - 1
    fro = np.sqrt(np.einsum("mij,mij->m", mats, mats))
    logtol = np.log(tol)
    sign_h, logabs_h = np.linalg.slogdet(mats)

    if k == 0:
        # GL(1): the factorization is trivially h itself as the scalar pivot
        p22 = mats[:, 0, 0]
        outside = np.abs(p22) <= tol * fro  # never true for tol < 1
        empty_mat = np.zeros((m, 0, 0))
        empty_vec = np.zeros((m, 0))
        ones = np.ones(m)
        zeros = np.zeros(m)
        return (outside, empty_mat, empty_vec, empty_vec,
                ones, zeros, np.sign(p22), np.log(np.abs(p22)),
                ones, zeros)

    H11 = mats[:, :k, :k]
    h12 = mats[:, :k, k:k + 1]
    h21 = mats[:, k:k + 1, :k]
    h22 = mats[:, k, k]
    H31 = mats[:, k + 1:, :k]
    h32 = mats[:, k + 1:, k:k + 1]

    sign_11, logabs_11 = np.linalg.slogdet(H11)
    with np.errstate(divide="ignore", invalid="ignore"):
        bad_11 = (sign_11 == 0.0) | (logabs_11 <= logtol + k * np.log(fro))
    ok_11 = ~bad_11

    X = np.zeros((m, k, k))
    u = np.zeros((m, k))
    v = np.zeros((m, k))
    p22 = np.zeros(m)
    if ok_11.any():
        H11t = H11[ok_11].transpose(0, 2, 1)
        # v^T = h21 H11^{-1} and X = H31 H11^{-1}, both via transposed solves
        vT = np.linalg.solve(H11t, h21[ok_11].transpose(0, 2, 1))
        Xt = np.linalg.solve(H11t, H31[ok_11].transpose(0, 2, 1))
        v[ok_11] = vT[:, :, 0]
        X[ok_11] = Xt.transpose(0, 2, 1)
        p22[ok_11] = h22[ok_11] - np.einsum(
            "mk,mk->m", v[ok_11], h12[ok_11, :, 0])

    with np.errstate(divide="ignore", invalid="ignore"):
        bad_22 = np.abs(p22) <= tol * fro
        outside = bad_11 | bad_22
        inside = ~outside
        if inside.any():
            num = h32[inside, :, 0] - np.einsum(
                "mij,mj->mi", X[inside], h12[inside, :, 0])
            u[inside] = num / p22[inside, None]
        sign_22 = np.where(inside, np.sign(p22), 0.0)
        logabs_22 = np.where(inside, np.log(np.abs(np.where(inside, p22, 1.0))), 0.0)

    zero = np.zeros(m)
    sign_33 = np.where(inside, sign_h * sign_11 * sign_22, zero)
    logabs_33 = np.where(inside, logabs_h - logabs_11 - logabs_22, zero)
    sign_11 = np.where(inside, sign_11, zero)
    logabs_11 = np.where(inside, logabs_11, zero)
    X[outside] = 0.0
    u[outside] = 0.0
    v[outside] = 0.0
    return (outside, X, u, v, sign_11, logabs_11, sign_22, logabs_22,
            sign_33, logabs_33)
