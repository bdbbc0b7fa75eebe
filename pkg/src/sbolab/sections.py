"""Representation-space vectors realized as functions on the open cell.

A section is stored by its restriction to the open Bruhat cell -- a
scalar function phi on the cell coordinates -- together with the induced
character data.  The evaluators extend it to generic group elements
through the equivariance law

    f(g * m a n) = chi(m a)^{-1} f(g),

concretely: factor the argument with the block decompositions from
:mod:`sbolab.matgroup` and multiply phi at the cell coordinate by signed
powers of the pivot determinants.  The exponent convention is

    G side:  (det A)^(-lam1 - n/2) (det S)^(-lam2 + n/2),  parities (xi1, xi2)
    H side:  (det P11)^(-nu1 - n/2) p22^(-nu2) (det P33)^(-nu3 + n/2),
             parities (eta1, eta2, eta3)

with integer powers of the block determinants throughout.

Everything here is batched: ``eval_batch`` takes a stack of matrices and
returns a complex vector, with magnitudes assembled in log space so that
huge pivot powers and a rapidly decaying phi never overflow on the way
to a finite product.

Two section kinds exist.  ``bump`` sections vanish identically outside a
finite radius (and evaluate to exactly 0 off the open cell); ``gaussian``
sections are Schwartz-class on the cell, where off-cell evaluation is
undefined and raises unless the caller explicitly opts into zero-fill
(legitimate inside integrals, where the bad set has measure zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import matgroup
from ._kernels import bruhat_g_batch, bruhat_h_batch
from .errors import DomainError, OutsideCellError
from .quadrature import QuadSpec, integrate_nd
from .specfun import GParams, HParams, par

_LOG_TINY = -700.0  # below this log-magnitude the value is flushed to 0


# ----------------------------------------------------------------------
# deterministic polynomial factors
# ----------------------------------------------------------------------

def _draw_poly(nvars: int, degree: int, seed: int):
    """One random monomial per degree 1..degree, plus the constant 1."""
    if nvars == 0 or degree == 0:
        return []
    rng = np.random.default_rng(seed)
    terms = []
    for d in range(1, degree + 1):
        idx = tuple(int(i) for i in rng.integers(0, nvars, size=d))
        terms.append((float(rng.uniform(-1.0, 1.0)), idx))
    return terms


def _poly_eval(terms, flat):
    out = np.ones(flat.shape[0])
    for coeff, idx in terms:
        out = out + coeff * np.prod(flat[:, list(idx)], axis=1)
    return out


def _envelope(kind: str, q, width: float, radius: float):
    """Envelope value from the squared distance q (batch)."""
    if kind == "gaussian":
        return np.exp(-q / width**2)
    r2 = radius * radius
    out = np.zeros_like(q)
    inside = q < r2 * (1.0 - 1e-14)
    out[inside] = np.exp(-1.0 / (1.0 - q[inside] / r2))
    return out


def _make_cell_function(nvars, kind, width, radius, poly_degree, seed, center):
    terms = _draw_poly(nvars, poly_degree, seed)

    def func(flat):
        z = flat if center is None else flat - center[None, :]
        q = np.einsum("mi,mi->m", z, z)
        return _poly_eval(terms, z) * _envelope(kind, q, width, radius)

    return func


# ----------------------------------------------------------------------
# sections
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CellSectionG:
    """Section of the G-side bundle, stored on the open cell.

    ``phi`` maps a flattened batch of cell coordinates (m, n*n) to real
    values.  ``support_radius`` is finite for bump sections (measured in
    Frobenius norm around ``center``) and inf for gaussian sections.
    """

    params: GParams
    phi: Callable
    kind: str
    support_radius: float
    center: Optional[np.ndarray] = None

    def phi_batch(self, X):
        m = X.shape[0]
        return np.asarray(self.phi(X.reshape(m, -1)), dtype=np.float64)

    def eval_batch(self, mats, outside: str = "error"):
        """Evaluate on a stack (m, 2n, 2n); returns complex (m,).

        outside="error" raises OutsideCellError if any gaussian-kind
        evaluation lands off the open cell; outside="zero" fills those
        entries (and every off-cell bump one) with 0.
        """
        mats = np.asarray(mats, dtype=np.float64)
        n = self.params.n
        off, X, sa, la, ss, ls = bruhat_g_batch(
            mats, n, matgroup.DEFAULT_TOL)
        if off.any() and self.kind == "gaussian" and outside == "error":
            raise OutsideCellError(
                f"{int(off.sum())} of {off.size} points off the open cell")
        lam1, lam2 = self.params.lam
        xi1, xi2 = self.params.xi
        e1 = -lam1 - 0.5 * n
        e2 = -lam2 + 0.5 * n
        return _assemble(self.phi_batch(X), off,
                         [(sa, la, e1, xi1), (ss, ls, e2, xi2)])

    def __call__(self, g: matgroup.GroupElement) -> complex:
        return eval_G(self, g)


@dataclass(frozen=True, eq=False)
class CellSectionH:
    """Section of the H-side bundle; cell coordinates are (X, u, v)."""

    params: HParams
    F: Callable
    kind: str
    support_radius: float
    center: Optional[np.ndarray] = None

    def F_batch(self, X, u, v):
        m = X.shape[0]
        flat = np.concatenate(
            [X.reshape(m, -1), u.reshape(m, -1), v.reshape(m, -1)], axis=1)
        return np.asarray(self.F(flat), dtype=np.float64)

    def eval_batch(self, mats, outside: str = "error"):
        mats = np.asarray(mats, dtype=np.float64)
        n = self.params.n
        (off, X, u, v, s11, l11, s22, l22, s33, l33) = bruhat_h_batch(
            mats, n, matgroup.DEFAULT_TOL)
        if off.any() and self.kind == "gaussian" and outside == "error":
            raise OutsideCellError(
                f"{int(off.sum())} of {off.size} points off the open cell")
        nu1, nu2, nu3 = self.params.nu
        et1, et2, et3 = self.params.eta
        e1 = -nu1 - 0.5 * n
        e2 = -nu2
        e3 = -nu3 + 0.5 * n
        return _assemble(self.F_batch(X, u, v), off,
                         [(s11, l11, e1, et1), (s22, l22, e2, et2),
                          (s33, l33, e3, et3)])

    def __call__(self, h: matgroup.GroupElement) -> complex:
        return eval_H(self, h)


def _assemble(phi_vals, off, pivot_data):
    """Combine real phi values with signed pivot powers, in log space."""
    m = phi_vals.shape[0]
    logmag = np.zeros(m)
    phase = np.zeros(m)
    signfac = np.ones(m)
    for sign, logabs, expo, parity in pivot_data:
        e = complex(expo)
        logmag += e.real * logabs
        phase += e.imag * logabs
        if par(parity):
            signfac = signfac * sign
    good = ~off & (phi_vals != 0.0)
    out = np.zeros(m, dtype=np.complex128)
    lm = logmag[good] + np.log(np.abs(phi_vals[good]))
    keep = lm > _LOG_TINY
    vals = np.zeros(lm.shape[0], dtype=np.complex128)
    idx = np.where(keep)[0]
    vals[idx] = (signfac[good][idx] * np.sign(phi_vals[good][idx])
                 * np.exp(lm[idx] + 1j * phase[good][idx]))
    out[good] = vals
    return out


def eval_G(f: CellSectionG, g: matgroup.GroupElement) -> complex:
    """Value of the section at a single group element."""
    if g.side != "G" or g.n != f.params.n:
        raise DomainError("element does not match the section's group")
    return complex(f.eval_batch(g.entries[None, :, :])[0])


def eval_H(F: CellSectionH, h: matgroup.GroupElement) -> complex:
    if h.side != "H" or h.n != F.params.n:
        raise DomainError("element does not match the section's group")
    return complex(F.eval_batch(h.entries[None, :, :])[0])


# ----------------------------------------------------------------------
# deterministic test vectors
# ----------------------------------------------------------------------

def test_vector_G(params: GParams, kind: str = "gaussian",
                  width: float = 1.0, radius: float = 1.0,
                  poly_degree: int = 0, seed: int = 0,
                  center=None) -> CellSectionG:
    """Deterministic section: phi(X) = p(X - C) * envelope(X - C).

    gaussian kind: envelope exp(-||Z||^2 / width^2); bump kind:
    exp(-1/(1 - ||Z/radius||^2)) inside the radius and 0 outside.  The
    polynomial p has one seeded random monomial per degree 1..poly_degree
    (p = 1 when poly_degree = 0).
    """
    if kind not in ("gaussian", "bump"):
        raise DomainError(f"unknown section kind {kind!r}")
    n = params.n
    cvec = None if center is None else np.ravel(
        np.asarray(center, dtype=np.float64)).copy()
    if cvec is not None and cvec.size != n * n:
        raise DomainError("center must have n*n entries")
    func = _make_cell_function(n * n, kind, width, radius,
                               poly_degree, seed, cvec)
    rad = radius if kind == "bump" else math.inf
    return CellSectionG(params, func, kind, rad, cvec)


def test_vector_H(params: HParams, kind: str = "gaussian",
                  width: float = 1.0, radius: float = 1.0,
                  poly_degree: int = 0, seed: int = 0,
                  center=None) -> CellSectionH:
    """H-side analogue of :func:`test_vector_G` over (X, u, v)."""
    if kind not in ("gaussian", "bump"):
        raise DomainError(f"unknown section kind {kind!r}")
    k = params.n - 1
    nvars = k * k + 2 * k
    cvec = None if center is None else np.ravel(
        np.asarray(center, dtype=np.float64)).copy()
    if cvec is not None and cvec.size != nvars:
        raise DomainError(f"center must have {nvars} entries")
    func = _make_cell_function(nvars, kind, width, radius,
                               poly_degree, seed, cvec)
    rad = radius if kind == "bump" else math.inf
    return CellSectionH(params, func, kind, rad, cvec)


# ----------------------------------------------------------------------
# densities and invariant pairings
# ----------------------------------------------------------------------

def _dual_params_ok(p1, p2) -> bool:
    if type(p1) is not type(p2) or p1.n != p2.n:
        return False
    if isinstance(p1, GParams):
        pars = p1.xi == p2.xi
        lams = all(abs(a + b) < 1e-12 for a, b in zip(p1.lam, p2.lam))
        return pars and lams
    pars = p1.eta == p2.eta
    nus = all(abs(a + b) < 1e-12 for a, b in zip(p1.nu, p2.nu))
    return pars and nus


@dataclass(frozen=True, eq=False)
class DensitySectionG:
    """Product of sections at (xi, lam) and (xi, -lam): a 2-rho density.

    Its restriction to the open cell is an honest Lebesgue-integrable
    function of X, which is what :func:`pairing_G` integrates.
    """

    first: object
    second: object

    def __post_init__(self):
        if not _dual_params_ok(self.first.params, self.second.params):
            raise DomainError("density factors must carry dual parameters")

    def cell_values(self, mats):
        return (self.first.eval_batch(mats, outside="zero")
                * self.second.eval_batch(mats, outside="zero"))


@dataclass(frozen=True, eq=False)
class DensitySectionH:
    first: object
    second: object

    def __post_init__(self):
        if not _dual_params_ok(self.first.params, self.second.params):
            raise DomainError("density factors must carry dual parameters")

    def cell_values(self, mats):
        return (self.first.eval_batch(mats, outside="zero")
                * self.second.eval_batch(mats, outside="zero"))


def _pairing_box(f1, f2, quad: QuadSpec, dim: int):
    radius = quad.truncation_radius
    for f in (f1, f2):
        r = getattr(f, "support_radius", math.inf)
        if np.isfinite(r):
            c = getattr(f, "center", None)
            reach = r + (float(np.max(np.abs(c))) if c is not None else 0.0)
            radius = min(radius, reach)
    return [(-radius, radius)] * dim


def pairing_G(f1, f2, quad: QuadSpec = QuadSpec()) -> complex:
    """Invariant pairing of dual-parameter sections as a cell integral.

    Accepts anything with ``params`` and ``eval_batch`` (plain sections,
    lazily translated sections, operator outputs); integration is
    Lebesgue in the cell coordinate X over the truncation box, which the
    support of a bump factor shrinks accordingly.
    """
    density = DensitySectionG(f1, f2)
    n = f1.params.n
    dim = n * n

    def integrand(pts):
        m = pts.shape[0]
        X = pts.reshape(m, n, n)
        mats = np.broadcast_to(np.eye(2 * n), (m, 2 * n, 2 * n)).copy()
        mats[:, n:, :n] = X
        return density.cell_values(mats)

    res = integrate_nd(integrand, _pairing_box(f1, f2, quad, dim), quad)
    res.require("pairing_G quadrature did not converge")
    return res.value


def pairing_H(F1, F2, quad: QuadSpec = QuadSpec()) -> complex:
    """H-side pairing; the n = 1 cell is a point, so no quadrature there."""
    density = DensitySectionH(F1, F2)
    n = F1.params.n
    k = n - 1
    if k == 0:
        e = np.eye(1)[None, :, :]
        return complex(density.cell_values(e)[0])
    dim = k * k + 2 * k

    def integrand(pts):
        m = pts.shape[0]
        X = pts[:, :k * k].reshape(m, k, k)
        u = pts[:, k * k:k * k + k]
        v = pts[:, k * k + k:]
        mats = np.broadcast_to(
            np.eye(2 * n - 1), (m, 2 * n - 1, 2 * n - 1)).copy()
        mats[:, k, :k] = v
        mats[:, k + 1:, :k] = X
        mats[:, k + 1:, k] = u
        return density.cell_values(mats)

    res = integrate_nd(integrand, _pairing_box(F1, F2, quad, dim), quad)
    res.require("pairing_H quadrature did not converge")
    return res.value


# ----------------------------------------------------------------------
# lazy left translation
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TranslatedSection:
    """L(g0) f, wrapped lazily: evaluates the base section at g0^{-1} g."""

    base: object
    g0_inv: np.ndarray

    @property
    def params(self):
        return self.base.params

    @property
    def kind(self):
        return self.base.kind

    def eval_batch(self, mats, outside: str = "error"):
        shifted = np.einsum("ij,mjk->mik", self.g0_inv, np.asarray(mats))
        return self.base.eval_batch(shifted, outside=outside)


def left_translate(section, g0: matgroup.GroupElement) -> TranslatedSection:
    inv = np.linalg.inv(g0.entries)
    return TranslatedSection(section, inv)


# the factory names start with "test_" for API reasons; keep pytest away
test_vector_G.__test__ = False  # type: ignore[attr-defined]
test_vector_H.__test__ = False  # type: ignore[attr-defined]
