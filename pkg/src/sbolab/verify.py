"""Cross-check battery for the operator families.

Every check computes one identity by two independent numerical routes and
returns a :class:`CheckReport` with per-point errors.  The checks are meant
to be run from the command line driver or from tests; they are deterministic
given (arguments, seed) and never mutate global state.

Conventions shared by all checks
--------------------------------
* ``rel_err = |lhs - rhs| / max(|lhs|, |rhs|, 1e-300)``.
* A report passes when every recorded ``rel_err`` is at or below the
  tolerance(s) stored in ``params`` (a few checks add a stated extra gate,
  e.g. the decay exponent; these document it in their docstring and in
  ``quad_meta``).
* ``constant_scale`` multiplies the theoretical constant of an identity and
  exists so that mutation tests can verify the check actually measures the
  constant (scale 1.01 must flip ``passed``).
* Evaluation points on the small group are open-cell matrices near the
  identity produced by :func:`default_points`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import matgroup
from .errors import DomainError
from .operators import (apply_A, apply_B, apply_B_continued, apply_S, apply_T,
                        bs_D1, bs_D2, bs_kernel_du, bs_kernel_u, transform_B,
                        transform_T)
from .quadrature import (QuadSpec, _gl_rule, _jacobi_rule, integrate_1d,
                         integrate_nd, integrate_nu_line)
from .sections import pairing_G, test_vector_G, test_vector_H
from .specfun import (GParams, HParams, SboParams, fe_constant_BT, gamma,
                      norm_B, norm_S, norm_T, norm_U, par, signed_power)

REL_FLOOR = 1e-300

__all__ = [
    "CheckReport", "NuLineSpec", "CHECKS", "run_check", "rel_err",
    "default_sbo", "default_points", "fit_decay_exponent", "compute_Q",
    "check_fe_SBA", "check_fe_BTA", "check_integral_formula",
    "check_plancherel", "check_final_plancherel", "check_Q_even",
    "check_Q_vanishing", "check_bs_identities", "check_decay",
    "check_hermitian_factorization", "check_positivity_probe",
]


# ---------------------------------------------------------------------------
# report plumbing

@dataclass
class CheckReport:
    """Outcome of one identity check at one parameter set.

    ``lhs``/``rhs``/``abs_err``/``rel_err`` are parallel lists, one entry per
    evaluation point (or per sub-identity; the layout is then described in
    ``quad_meta['layout']``).
    """

    check_id: str
    n: int
    params: dict
    points: list
    lhs: list
    rhs: list
    abs_err: list
    rel_err: list
    quad_meta: dict
    passed: bool


@dataclass(frozen=True)
class NuLineSpec:
    """Truncation and tail model for integrals over the imaginary axis."""

    t_max: float = 14.0
    decay_order: int = 4


def rel_err(lhs: complex, rhs: complex) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), REL_FLOOR)


def _c2l(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _cl_list(vals) -> list:
    return [_c2l(v) for v in vals]


def _identity_H(n: int):
    return matgroup.identity(n, "H")


def default_sbo(n: int) -> SboParams:
    """Well-inside-regime defaults used by the raw-family checks."""
    if n == 1:
        return SboParams(GParams(1, (0, 0), (2.0, -1.0)), 0, 0.0)
    if n == 2:
        return SboParams(GParams(2, (0, 0), (4.6, -4.6)), 0, 0.3)
    gap = 2.3 * n
    return SboParams(GParams(n, (0, 0), (gap, -gap)), 0, 0.3)


def default_points(n: int, seed: int = 0, count: int = 3,
                   scale: float = 0.15) -> list:
    """Identity plus seeded small-group elements near it (open cell)."""
    m = 2 * n - 1
    rng = np.random.default_rng(seed)
    pts = [_identity_H(n)]
    while len(pts) < count:
        e = rng.standard_normal((m, m))
        e *= scale / max(np.linalg.norm(e), 1e-12)
        pts.append(matgroup.group_element(np.eye(m) + e, "H"))
    return pts


def _points_meta(points) -> list:
    return [np.asarray(p.entries, dtype=float).tolist() for p in points]


def _scaled_spec(quad: QuadSpec, anchor: float, frac: float) -> QuadSpec:
    """Loosen tolerances toward frac * anchor; never tighten below quad."""
    return replace(quad,
                   abs_tol=max(quad.abs_tol, abs(anchor) * frac),
                   rel_tol=max(quad.rel_tol, frac))


# ---------------------------------------------------------------------------
# section wrappers

class _ConjugateSection:
    """Pointwise complex conjugate of a section.

    The conjugate of a section with weight (xi, lam) transforms with weight
    (xi, conj lam), which is what ``params`` reports; on the unitary axis
    this is exactly the dual weight, so the wrapped object can be paired
    against the original.
    """

    kind = "operator"

    def __init__(self, base):
        self.base = base

    @property
    def params(self):
        p = self.base.params
        if isinstance(p, GParams):
            return GParams(p.n, p.xi,
                           tuple(complex(z).conjugate() for z in p.lam))
        return HParams(p.n, p.eta,
                       tuple(complex(z).conjugate() for z in p.nu))

    @property
    def support_radius(self):
        return self.base.support_radius

    @property
    def center(self):
        return self.base.center

    def eval_batch(self, mats, outside: str = "zero"):
        return np.conjugate(self.base.eval_batch(mats, outside=outside))


class _PointwiseOperator:
    """Section backed by a per-matrix callable (slow path, small batches)."""

    kind = "operator"
    support_radius = math.inf
    center = None

    def __init__(self, params, fn: Callable, side: str = "G"):
        self.params = params
        self.fn = fn
        self.side = side

    def eval_batch(self, mats, outside: str = "zero"):
        mats = np.asarray(mats, dtype=float)
        if mats.ndim == 2:
            mats = mats[None]
        return np.array([self.fn(m) for m in mats], dtype=complex)


class _ShiftOperatorSection:
    """First-order-operator image of a section, evaluated matrixwise.

    which=1 wraps the lowering combination, which=2 the companion one; the
    stored params are those of the shifted family the image lives in.
    """

    kind = "operator"

    def __init__(self, base, which: int, params: GParams, step: float = 1e-4):
        self.base = base
        self.which = which
        self.params = params
        self.step = step
        self.support_radius = base.support_radius
        self.center = base.center

    def eval_batch(self, mats, outside: str = "zero"):
        mats = np.asarray(mats, dtype=float)
        if mats.ndim == 2:
            mats = mats[None]
        op = bs_D1 if self.which == 1 else bs_D2
        g = self.base.params
        out = np.empty(mats.shape[0], dtype=complex)
        for i, m in enumerate(mats):
            out[i] = op(self.base, g, matgroup.group_element(m, "G"),
                        self.step)
        return out


# ---------------------------------------------------------------------------
# small helpers

def _b_exps(s: SboParams):
    s1 = complex(s.g.lam[0]) - complex(s.nu) + 0.5 * s.n
    s2 = complex(s.nu) - complex(s.g.lam[1]) + 0.5 * s.n
    return s1, s2


def _auto_shifts(s: SboParams) -> tuple:
    """Smallest parameter shifts that land both exponents in the safe region."""
    s1, s2 = _b_exps(s)
    a = max(0, int(math.ceil(0.35 - s1.real)))
    b = max(0, int(math.ceil(0.35 - s2.real)))
    return a, b


def _require_T(g: GParams):
    if (complex(g.lam[0]) - complex(g.lam[1])).real <= g.n - 1:
        raise DomainError("intertwining family outside its convergence "
                          "region: need Re(lam1 - lam2) > n - 1")


def _require_A(s: SboParams):
    n = s.n
    a1 = (complex(s.g.lam[0]) - complex(s.nu)).real
    a2 = (complex(s.nu) - complex(s.g.lam[1])).real
    if a1 <= 0.5 * (n - 2) or a2 <= 0.5 * (n - 2):
        raise DomainError("matrix-kernel family outside its convergence "
                          "region: need Re(lam1-nu), Re(nu-lam2) > (n-2)/2")


def _require_B(s: SboParams):
    s1, s2 = _b_exps(s)
    if s1.real <= 0 or s2.real <= 0:
        raise DomainError("rank-one family outside its convergence region: "
                          "need Re s1, Re s2 > 0")


def _require_S(h: HParams):
    n1, n2, n3 = (complex(z) for z in h.nu)
    lim = 0.5 * h.n - 1
    if (n1 - n2).real <= lim or (n2 - n3).real <= lim:
        raise DomainError("small-group intertwiner outside its convergence "
                          "region: need Re(nu1-nu2), Re(nu2-nu3) > n/2 - 1")


def _reach(F) -> float:
    """Bounding half-width of a compactly supported section, with margin."""
    r = F.support_radius
    if not math.isfinite(r):
        raise DomainError("this route needs a compactly supported section")
    c = F.center
    off = 0.0 if c is None else float(np.max(np.abs(c)))
    return (r + off) * 1.0000001


def fit_decay_exponent(t_values: Sequence[float],
                       magnitudes: Sequence[float]) -> float:
    """Slope of log|value| against log(1+T) — the empirical decay order."""
    ts = np.asarray(t_values, dtype=float)
    ms = np.asarray(magnitudes, dtype=float)
    if ts.size < 2:
        raise DomainError("need at least two samples to fit a decay exponent")
    if np.any(ms <= 0):
        return -math.inf
    return float(np.polyfit(np.log1p(ts), np.log(ms), 1)[0])


def _in_positive_window(mu: float, n: int) -> bool:
    """Membership of (mu, -mu) in the closure of the positivity set."""
    if -0.5 < mu < 0.5:
        return True
    two = 2.0 * mu
    if abs(two - round(two)) < 1e-9 and 1 <= round(two) <= n - 1:
        return True
    k = -(mu + 0.5)
    if abs(k - round(k)) < 1e-9 and round(k) >= 0:
        return True
    return False


def _panel_nodes(a: float, b: float, order: int,
                 exp_left: float = 0.0, exp_right: float = 0.0):
    """Gauss nodes on [a, b] whose weights absorb |x-a|^el |b-x|^er.

    With el = er = 0 this is a plain Gauss-Legendre panel.  The returned
    weights integrate g against the absorbed endpoint powers, i.e.
    sum(w * g(x)) ~ integral of |x-a|^el (b-x)^er g(x).
    """
    if b <= a:
        return np.empty(0), np.empty(0)
    if exp_left == 0.0 and exp_right == 0.0:
        x, w = _gl_rule(order)
        scale = 1.0
    else:
        x, w = _jacobi_rule(order, exp_right, exp_left)
        scale = 1.0
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid + half * x
    return pts, w * half ** (1.0 + exp_left + exp_right) * scale


# ---------------------------------------------------------------------------
# functional equation checks

def check_fe_SBA(n: int = 2, s: Optional[SboParams] = None, f=None,
                 points=None, quad: Optional[QuadSpec] = None,
                 tol: Optional[float] = None, constant_scale: float = 1.0,
                 b_radius: Optional[float] = None,
                 b_order: Optional[int] = None, b_levels: int = 14,
                 seed: int = 0) -> CheckReport:
    """Small-group intertwiner composed with the rank-one family.

    lhs: normalized intertwiner applied to the normalized rank-one image,
    evaluated at each point.  rhs: the normalized matrix-kernel family
    divided by the rank-one normalizer.  Equality is the first functional
    equation between the two symmetry breaking families.
    """
    if s is None:
        s = default_sbo(n)
    n = s.n
    quad = quad or QuadSpec()
    if tol is None:
        tol = 1e-6 if n == 1 else 1e-3
    _require_B(s)
    _require_A(s)
    _require_S(s.target_B())
    if f is None:
        f = test_vector_G(s.g, "gaussian", poly_degree=2, seed=seed)
    if points is None:
        points = default_points(n, seed)
    br = b_radius if b_radius is not None else (20.0 if n == 1 else 14.0)
    bo = b_order if b_order is not None else (48 if n == 1 else 32)

    bf = transform_B(s, f, quad, normalized=True, radius=br, order=bo,
                     levels=b_levels)
    h = s.target_B()
    nb = norm_B(s)

    lhs, rhs = [], []
    for pt in points:
        r_val = constant_scale * apply_A(s, f, pt, quad, normalized=True) / nb
        sq = _scaled_spec(quad, abs(r_val), tol / 30.0)
        l_val = apply_S(h, bf, pt, sq, normalized=True)
        lhs.append(l_val)
        rhs.append(r_val)
    ae = [abs(a - b) for a, b in zip(lhs, rhs)]
    re_ = [rel_err(a, b) for a, b in zip(lhs, rhs)]
    params = {"n": n, "xi": list(s.g.xi), "lam": _cl_list(s.g.lam),
              "eta": s.eta, "nu": _c2l(s.nu), "tol": tol,
              "constant_scale": constant_scale, "seed": seed}
    meta = {"b_radius": br, "b_order": bo, "b_levels": b_levels,
            "order": quad.order}
    return CheckReport("fe_SBA", n, params, _points_meta(points),
                       lhs, rhs, ae, re_, meta, all(r <= tol for r in re_))


def check_fe_BTA(n: int = 2, s: Optional[SboParams] = None, f=None,
                 points=None, quad: Optional[QuadSpec] = None,
                 tol: Optional[float] = None, constant_scale: float = 1.0,
                 t_radius: Optional[float] = None,
                 t_order: Optional[int] = None,
                 shifts: Optional[tuple] = None, seed: int = 0) -> CheckReport:
    """Rank-one family after the big-group intertwiner vs the matrix kernel.

    lhs: the continued rank-one family at swapped weight, applied to the
    normalized intertwiner image of f.  rhs: an explicit constant (square
    root of pi, a parity sign and one reciprocal gamma factor) times the
    normalized matrix-kernel family.
    """
    if s is None:
        s = default_sbo(n)
    n = s.n
    quad = quad or QuadSpec()
    if tol is None:
        tol = 1e-6 if n == 1 else 1e-3
    _require_T(s.g)
    _require_A(s)
    if f is None:
        f = test_vector_G(s.g, "gaussian", poly_degree=2, seed=seed)
    if points is None:
        points = default_points(n, seed)
    tr = t_radius if t_radius is not None else (20.0 if n == 1 else 9.0)
    to = t_order if t_order is not None else (48 if n == 1 else 12)

    tf = transform_T(s.g, f, quad, normalized=True, radius=tr, order=to)
    ssw = s.swap_g()
    sh = shifts if shifts is not None else _auto_shifts(ssw)
    c_bt = fe_constant_BT(s)

    lhs, rhs = [], []
    for pt in points:
        r_val = constant_scale * c_bt * apply_A(s, f, pt, quad,
                                                normalized=True)
        l_val = apply_B_continued(ssw, tf, pt, sh, quad, normalized=True)
        lhs.append(l_val)
        rhs.append(r_val)
    ae = [abs(a - b) for a, b in zip(lhs, rhs)]
    re_ = [rel_err(a, b) for a, b in zip(lhs, rhs)]
    params = {"n": n, "xi": list(s.g.xi), "lam": _cl_list(s.g.lam),
              "eta": s.eta, "nu": _c2l(s.nu), "tol": tol,
              "constant_scale": constant_scale, "seed": seed}
    meta = {"t_radius": tr, "t_order": to, "shifts": list(sh),
            "constant": _c2l(c_bt)}
    return CheckReport("fe_BTA", n, params, _points_meta(points),
                       lhs, rhs, ae, re_, meta, all(r <= tol for r in re_))


# ---------------------------------------------------------------------------
# integral formula over the open cell

def _embedded_cell_mats(X, u, v, t):
    """4x4 matrices: embedded small-group cell point times the t-line factor."""
    m = X.shape[0]
    out = np.broadcast_to(np.eye(4), (m, 4, 4)).copy()
    out[:, 1, 0] = v
    out[:, 2, 0] = X
    out[:, 2, 1] = u
    out[:, 3, 1] = t
    return out


def check_integral_formula(n: int = 2, f1=None, f2=None,
                           quad: Optional[QuadSpec] = None,
                           tol: Optional[float] = None, radius: float = 1.2,
                           v0_factor: float = 3.0, seed: int = 0) -> CheckReport:
    """Fubini factorization of the big-group cell integral.

    lhs: invariant pairing of two dual compactly supported sections,
    computed directly over the big cell.  rhs: iterated integral over the
    small-group cell and the extra line factor with weight |t|^{n-1},
    split into a central box and two mapped tail pieces along the last
    cell coordinate (the mass of the product density escapes along a
    ridge X ~ u v at large v, so a fixed box misses it).
    """
    quad = quad or QuadSpec(order=10, abs_tol=1e-13, rel_tol=1e-7,
                            max_depth=12)
    if tol is None:
        tol = 1e-6 if n == 1 else 1e-4
    if n > 2:
        raise DomainError("integral-formula check implemented for n <= 2")
    g0 = GParams(n, (0, 0), (0.3, -0.8))
    gd = GParams(n, (0, 0), (-0.3, 0.8))
    if f1 is None:
        f1 = test_vector_G(g0, "bump", radius=radius, poly_degree=2,
                           seed=seed + 1)
    if f2 is None:
        f2 = test_vector_G(gd, "bump", radius=radius, poly_degree=1,
                           seed=seed + 2)
    lhs = pairing_G(f1, f2, quad)
    ry = max(_reach(f1), _reach(f2))

    def dens(mats):
        return (np.asarray(f1.eval_batch(mats, outside="zero"), complex)
                * np.asarray(f2.eval_batch(mats, outside="zero"), complex))

    meta = {"order": quad.order, "radius": ry}
    if n == 1:
        def f_line(ts):
            m = ts.shape[0]
            mats = np.broadcast_to(np.eye(2), (m, 2, 2)).copy()
            mats[:, 1, 0] = ts
            return dens(mats)

        res = integrate_1d(f_line, (-ry, ry), quad)
        rhs = res.require("cell factorization")
        meta["evaluations"] = res.evaluations
    else:
        v0 = v0_factor * ry
        rt = ry / v0 * 1.05

        def f_central(pts):
            xt, u, v, t = (pts[:, i] for i in range(4))
            vals = dens(_embedded_cell_mats(xt + u * v, u, v, t))
            return vals * np.abs(t)

        def f_tail(sign):
            def inner(pts):
                xt, u, sg, tt = (pts[:, i] for i in range(4))
                v = sign * v0 / sg
                vals = dens(_embedded_cell_mats(xt + u * v, u, v, tt * sg))
                return vals * np.abs(tt) * v0
            return inner

        box_c = [(-ry, ry), (-ry, ry), (-v0, v0), (-ry, ry)]
        box_t = [(-ry, ry), (-ry, ry), (0.0, 1.0), (-rt, rt)]
        evals = 0
        res = integrate_nd(f_central, box_c, quad)
        rhs = res.require("cell factorization, central box")
        evals += res.evaluations
        for sign in (1.0, -1.0):
            res = integrate_nd(f_tail(sign), box_t, quad)
            rhs += res.require("cell factorization, tail")
            evals += res.evaluations
        meta.update({"v0": v0, "evaluations": evals})

    ae = [abs(lhs - rhs)]
    re_ = [rel_err(lhs, rhs)]
    params = {"n": n, "tol": tol, "radius": radius, "v0_factor": v0_factor,
              "seed": seed}
    return CheckReport("integral_formula", n, params, [["cell"]],
                       [lhs], [rhs], ae, re_, meta, re_[0] <= tol)


# ---------------------------------------------------------------------------
# spectral line: unnormalized rank-one family as a unitary dictionary

def _hcell_l2(F, r: float, v0: float, order_c: int, order_t: int) -> float:
    """L2 mass of F over the small-group cell, ridge-adapted.

    Central piece in straightened coordinates (X - u v, u, v) over a fixed
    box, plus two mapped tails v = +-v0/sigma.  F is an evaluator on 3x3
    matrices (images of compactly supported sections under the rank-one
    transform decay only algebraically along the ridge, so the tails carry
    a 1/v0-size share of the total).
    """
    xg, xw = _gl_rule(order_c)

    def mats_from(xt, u, v):
        m = xt.shape[0]
        out = np.broadcast_to(np.eye(3), (m, 3, 3)).copy()
        out[:, 1, 0] = v
        out[:, 2, 0] = xt + u * v
        out[:, 2, 1] = u
        return out

    # central box
    xt = np.repeat(r * xg, order_c * order_c)
    u = np.tile(np.repeat(r * xg, order_c), order_c)
    v = np.tile(v0 * xg, order_c * order_c)
    w = (np.repeat(r * xw, order_c * order_c)
         * np.tile(np.repeat(r * xw, order_c), order_c)
         * np.tile(v0 * xw, order_c * order_c))
    vals = np.asarray(F.eval_batch(mats_from(xt, u, v), outside="zero"),
                      dtype=complex)
    total = float(np.sum(w * np.abs(vals) ** 2))

    # tails: v = sign * v0 / sigma, dv = v0/sigma^2 dsigma
    tg, tw = _gl_rule(order_t)
    sg = 0.5 * (tg + 1.0)
    sw = 0.5 * tw
    for sign in (1.0, -1.0):
        xt = np.repeat(r * tg, order_t * order_t)
        u = np.tile(np.repeat(r * tg, order_t), order_t)
        s = np.tile(sg, order_t * order_t)
        w = (np.repeat(r * tw, order_t * order_t)
             * np.tile(np.repeat(r * tw, order_t), order_t)
             * np.tile(sw, order_t * order_t))
        v = sign * v0 / s
        vals = np.asarray(F.eval_batch(mats_from(xt, u, v), outside="zero"),
                          dtype=complex)
        total += float(np.sum(w * (v0 / s ** 2) * np.abs(vals) ** 2))
    return total


def check_plancherel(n: int = 1, g: Optional[GParams] = None, f=None,
                     quad: Optional[QuadSpec] = None,
                     nu_spec: Optional[NuLineSpec] = None,
                     tol: Optional[float] = None, constant_scale: float = 1.0,
                     cell_order: int = 14, tail_order: int = 10,
                     tb_order: int = 6, tb_levels: int = 12,
                     tb_radius: float = 10.0, v0_factor: float = 3.0,
                     seed: int = 0) -> CheckReport:
    """Spectral completeness of the unnormalized rank-one family.

    For unitary-axis weight, the squared big-cell L2 norm of f equals
    1/(4 pi) times the integral over the imaginary axis, summed over the
    two parities, of the squared small-cell L2 norm of the rank-one image.
    The fitted proportionality constant is recorded in
    ``quad_meta['fitted_constant']`` (target value 1/(4 pi)).
    """
    quad = quad or QuadSpec()
    nu_spec = nu_spec or NuLineSpec()
    if tol is None:
        tol = 1e-3 if n == 1 else 0.05
    if g is None:
        g = GParams(n, (0, 0), (0.7j, -0.3j))
    if max(abs(complex(z).real) for z in g.lam) > 1e-12:
        raise DomainError("spectral-line check needs unitary-axis weight")
    if f is None:
        if n == 1:
            f = test_vector_G(g, "gaussian", poly_degree=2, seed=seed)
        else:
            f = test_vector_G(g, "bump", radius=1.0, poly_degree=1,
                              seed=seed)
    if n > 1 and not math.isfinite(f.support_radius):
        raise DomainError("for n >= 2 the cell L2 route needs a compactly "
                          "supported test vector")

    lhs = pairing_G(f, _ConjugateSection(f), quad)
    e1 = _identity_H(n)
    r = _reach(f) if math.isfinite(f.support_radius) else 0.0
    v0 = v0_factor * r if n > 1 else 0.0
    inner = replace(quad, rel_tol=max(quad.rel_tol, 1e-8))

    def density_at(nu: complex) -> float:
        out = 0.0
        for eta in (0, 1):
            s = SboParams(g, eta, nu)
            if n == 1:
                fe = apply_B(s, f, e1, quad=inner)
                out += abs(fe) ** 2
            else:
                bf = transform_B(s, f, inner, radius=tb_radius,
                                 order=tb_order, levels=tb_levels)
                out += _hcell_l2(bf, r, v0, cell_order, tail_order)
        return out

    def integrand(nus):
        return np.array([density_at(complex(nu)) for nu in np.atleast_1d(nus)],
                        dtype=complex)

    nu_quad = replace(quad, rel_tol=max(quad.rel_tol, tol / 30.0))
    res = integrate_nu_line(integrand, nu_spec.t_max, nu_spec.decay_order,
                            nu_quad)
    raw = res.require("spectral-line integral").real
    rhs = constant_scale * raw / (4.0 * math.pi)
    lr = lhs.real

    fitted = raw / lr if abs(lr) > REL_FLOOR else math.nan
    ae = [abs(lr - rhs)]
    re_ = [rel_err(lr, rhs)]
    params = {"n": n, "lam": _cl_list(g.lam), "tol": tol,
              "constant_scale": constant_scale, "t_max": nu_spec.t_max,
              "seed": seed}
    meta = {"fitted_constant": (fitted / (4.0 * math.pi)
                                if math.isfinite(fitted) else fitted),
            "target_constant": 1.0 / (4.0 * math.pi),
            "evaluations": res.evaluations,
            "err_estimate": res.err_estimate,
            "lhs_imag": lhs.imag}
    if n > 1:
        meta.update({"v0": v0, "cell_order": cell_order,
                     "tb_order": tb_order, "tb_radius": tb_radius})
    return CheckReport("plancherel", n, params, [["norm"]],
                       [lr], [rhs], ae, re_, meta, re_[0] <= tol)


def check_final_plancherel(delta: int = 0, mu: float = 0.2, f=None,
                           quad: Optional[QuadSpec] = None,
                           t_max: float = 12.0, tol: float = 1e-2,
                           constant_scale: float = 1.0,
                           seed: int = 0) -> CheckReport:
    """Weighted spectral expansion of the invariant Hermitian form (n = 1).

    lhs: the big-group Hermitian form (f paired against the normalized
    intertwiner applied to its conjugate).  rhs: a gamma prefactor times
    the half-line integral, over both parities, of the normalized rank-one
    data weighted by three normalizer factors and the small-group
    Hermitian form.  All weights are real and nonnegative on the half
    line, so the rhs also certifies positivity; ``passed`` requires both
    the match and lhs > 0.
    """
    quad = quad or QuadSpec()
    delta = par(delta)
    if not 0.0 < mu < 0.5:
        raise DomainError("weighted spectral expansion probe needs "
                          "0 < mu < 1/2")
    g = GParams(1, (delta, delta), (mu, -mu))
    if f is None:
        f = test_vector_G(g, "gaussian", poly_degree=2, seed=seed + 3)
    fbar = _ConjugateSection(f)
    tq = replace(quad, max_depth=max(quad.max_depth, 26))

    t_sec = _PointwiseOperator(
        g.swapped(),
        lambda m: apply_T(g, fbar, matgroup.group_element(m, "G"), tq,
                          normalized=True))
    lhs = pairing_G(f, t_sec, quad)

    e1 = _identity_H(1)
    g_neg = GParams(1, g.xi, (-mu, mu))
    const = 1.0 / (2.0 * math.sqrt(math.pi) * gamma((1.0 - 2.0 * mu) / 2.0))

    def weight_at(eta: int, nu: complex) -> complex:
        s = SboParams(g, eta, nu)
        fe = apply_B(s, f, e1, quad=quad, normalized=True)
        pair = fe * (fe / norm_S(s.target_B())).conjugate()
        w = norm_B(s) ** 2 * norm_B(SboParams(g_neg, eta, -nu))
        return w * pair

    def integrand(ts):
        ts = np.atleast_1d(ts)
        out = np.empty(ts.shape[0], dtype=complex)
        for i, t in enumerate(ts):
            nu = 1j * float(t.real)
            out[i] = weight_at(0, nu) + weight_at(1, nu)
        return out

    res = integrate_1d(integrand, (0.0, t_max), quad)
    rhs = constant_scale * const * res.require("weighted spectral expansion")

    lr, rr = lhs.real, rhs.real
    ae = [abs(lhs - rhs)]
    re_ = [rel_err(lhs, rhs)]
    params = {"n": 1, "delta": delta, "mu": mu, "tol": tol,
              "constant_scale": constant_scale, "t_max": t_max, "seed": seed}
    meta = {"evaluations": res.evaluations, "err_estimate": res.err_estimate,
            "lhs_imag": lhs.imag, "rhs_imag": rhs.imag,
            "lhs_positive": lr > 0.0}
    passed = re_[0] <= tol and lr > 0.0
    return CheckReport("final_plancherel", 1, params, [["form"]],
                       [lhs], [rhs], ae, re_, meta, passed)


# ---------------------------------------------------------------------------
# boundary pairing Q: evenness and lattice vanishing

def compute_Q(delta: int, mu: complex, nu: complex, f=None, fprime=None,
              quad: Optional[QuadSpec] = None, route: str = "auto",
              seed: int = 0) -> complex:
    """Boundary pairing of the two symmetry breaking images at rank one.

    Q(delta, mu, nu) pairs the normalized rank-one image of f at (eta, nu)
    with the normalized matrix-kernel image of f' at (eta, -nu); for n = 1
    the small-cell pairing degenerates to the product of the two values at
    the identity.  ``route='direct'`` uses the convergent integrals,
    ``route='continued'`` the finite-part continuation of the rank-one
    family for both factors (the two agree on the overlap because the
    normalized matrix-kernel value at the identity coincides with the
    normalized rank-one value there at this rank).
    """
    quad = quad or QuadSpec()
    delta = par(delta)
    mu = complex(mu)
    nu = complex(nu)
    g = GParams(1, (0, 0), (mu, -mu))
    s_b = SboParams(g, delta, nu)
    s_a = SboParams(g, delta, -nu)
    if f is None:
        f = test_vector_G(g, "gaussian", poly_degree=2, seed=seed + 5)
    if fprime is None:
        fprime = test_vector_G(g, "gaussian", width=0.8, poly_degree=1,
                               seed=seed + 6)
    e1 = _identity_H(1)
    if route == "auto":
        margin = min((mu + nu).real, (mu - nu).real)
        route = "direct" if margin > -0.45 else "continued"
    if route == "direct":
        _require_B(s_b)
        _require_A(s_a)
        vb = apply_B(s_b, f, e1, quad=quad, normalized=True)
        va = apply_A(s_a, fprime, e1, quad, normalized=True)
        return vb * va
    if route == "continued":
        vb = apply_B_continued(s_b, f, e1, _auto_shifts(s_b), quad,
                               normalized=True)
        va = apply_B_continued(s_a, fprime, e1, _auto_shifts(s_a), quad,
                               normalized=True)
        return vb * va
    raise DomainError(f"unknown route {route!r}")


def check_Q_even(count: int = 10, seed: int = 11,
                 quad: Optional[QuadSpec] = None,
                 tol: float = 1e-3) -> CheckReport:
    """Q(delta, mu, nu) = Q(delta, mu, -nu) at seeded unitary-axis samples.

    The two sides exchange the roles of the two families, so they are
    genuinely independent integrals.
    """
    quad = quad or QuadSpec()
    rng = np.random.default_rng(seed)
    points, lhs, rhs = [], [], []
    for i in range(count):
        delta = i % 2
        mu = float(rng.uniform(0.05, 0.45))
        t = float(rng.uniform(0.1, 2.0))
        f = test_vector_G(GParams(1, (0, 0), (mu, -mu)), "gaussian",
                          poly_degree=2, seed=seed + 5)
        fp = test_vector_G(GParams(1, (0, 0), (mu, -mu)), "gaussian",
                           width=0.8, poly_degree=1, seed=seed + 6)
        lhs.append(compute_Q(delta, mu, 1j * t, f, fp, quad, route="direct"))
        rhs.append(compute_Q(delta, mu, -1j * t, f, fp, quad, route="direct"))
        points.append([delta, mu, t])
    ae = [abs(a - b) for a, b in zip(lhs, rhs)]
    re_ = [rel_err(a, b) for a, b in zip(lhs, rhs)]
    params = {"n": 1, "count": count, "tol": tol, "seed": seed}
    return CheckReport("Q_even", 1, params, points, lhs, rhs, ae, re_,
                       {"route": "direct"}, all(r <= tol for r in re_))


def check_Q_vanishing(delta: int = 0, k: int = 1, nu: complex = 0.5j,
                      quad: Optional[QuadSpec] = None, tol: float = 1e-3,
                      curvature_window: float = 0.4,
                      seed: int = 0) -> CheckReport:
    """Vanishing of Q on the shifted even lattice, by continuation.

    Part one: at mu* = nu - 1/2 - [delta] - 2k the continued value must
    vanish relative to the scale of Q at nearby regular mu.  Part two
    (soft, recorded in ``quad_meta['curvature_fit']`` only): at nu = 0 and
    mu near -1/2 - [delta], a cubic fit of Q along real mu should show a
    double zero — constant and linear coefficients below the fit noise.
    """
    quad = quad or QuadSpec()
    delta = par(delta)
    nu = complex(nu)
    mu_star = nu - 0.5 - delta - 2.0 * k
    g_seed = seed

    q_star = compute_Q(delta, mu_star, nu, quad=quad, route="continued",
                       seed=g_seed)
    offsets = (0.5, -0.5, 0.25, -0.25)
    near = [compute_Q(delta, mu_star + d, nu, quad=quad, route="continued",
                      seed=g_seed) for d in offsets]
    scale = max(abs(v) for v in near)

    # soft curvature probe at the first double point on the real axis
    mu0 = -0.5 - delta
    xs = np.linspace(-curvature_window, curvature_window, 9)
    vals = np.array([compute_Q(delta, mu0 + float(x), 0.0, quad=quad,
                               route="continued", seed=g_seed).real
                     for x in xs])
    coef = np.polynomial.polynomial.polyfit(xs, vals, 3)
    fit = np.polynomial.polynomial.polyval(xs, coef)
    resid = float(np.max(np.abs(fit - vals)))
    scale2 = float(np.max(np.abs(vals))) or 1.0
    curvature = {
        "mu0": mu0,
        "coefficients": [float(c) for c in coef],
        "fit_residual": resid,
        "double_zero_consistent": bool(
            abs(coef[0]) <= max(1e-2 * scale2, 10.0 * resid)
            and abs(coef[1]) <= max(5e-2 * scale2, 10.0 * resid)),
    }

    ae = [abs(q_star)]
    re_ = [abs(q_star) / max(scale, REL_FLOOR)]
    params = {"n": 1, "delta": delta, "k": k, "nu": _c2l(nu), "tol": tol,
              "seed": seed}
    meta = {"mu_star": _c2l(mu_star), "scale": scale,
            "offsets": list(offsets), "curvature_fit": curvature}
    return CheckReport("Q_vanishing", 1, params,
                       [[_c2l(mu_star)]], [q_star], [0.0], ae, re_, meta,
                       re_[0] <= tol)


# ---------------------------------------------------------------------------
# kernel recurrences and their operator form

def check_bs_identities(n: int = 2, s: Optional[SboParams] = None, f=None,
                        points=None, quad: Optional[QuadSpec] = None,
                        kernel_tol: float = 1e-10, tol: float = 1e-4,
                        theta_count: int = 200, constant_scale: float = 1.0,
                        step: float = 1e-4, seed: int = 0) -> CheckReport:
    """First-order recurrences of the compact-picture kernel, two levels.

    Kernel level: the two first-order combinations of the kernel and its
    derivative reproduce the parameter-shifted kernels with eigenvalues
    s1 - 1 and s2 - 1, checked pointwise on a theta grid (closed forms,
    tolerance ``kernel_tol``).  Operator level: conjugating by the family
    integral turns the recurrences into intertwining relations — applying
    the rank-one family at the up-shifted parameters to the first-order
    operator image of f equals s1 (resp. s2) times the family at the base
    parameters (finite differences enter here, tolerance ``tol``).

    Report layout: rows 0-1 are the kernel residual maxima for the two
    recurrences (rhs 0, rel_err measured against the largest term of the
    combination); the remaining rows are operator values per point, first
    recurrence then second.
    """
    if s is None:
        s = default_sbo(n)
    n = s.n
    quad = quad or QuadSpec()
    if f is None:
        f = test_vector_G(s.g, "gaussian", poly_degree=2, seed=seed)
    if points is None:
        points = default_points(n, seed, count=2)
    s1, s2 = _b_exps(s)
    c = complex(s.g.lam[0]) - complex(s.g.lam[1]) + n - 2

    thetas = np.linspace(-1.5, 1.5, theta_count)
    down1, down2 = s.shifted(-1, 0), s.shifted(0, -1)
    res1 = res2 = sc1 = sc2 = 0.0
    for th in thetas:
        u = bs_kernel_u(s, th)
        du = bs_kernel_du(s, th)
        sn, cs = math.sin(th), math.cos(th)
        lhs1 = cs * du + c * sn * u
        rhs1 = constant_scale * (s1 - 1.0) * bs_kernel_u(down1, th)
        lhs2 = -sn * du + c * cs * u
        rhs2 = constant_scale * (s2 - 1.0) * bs_kernel_u(down2, th)
        res1 = max(res1, abs(lhs1 - rhs1))
        res2 = max(res2, abs(lhs2 - rhs2))
        sc1 = max(sc1, abs(cs * du), abs(c * sn * u), abs(rhs1))
        sc2 = max(sc2, abs(sn * du), abs(c * cs * u), abs(rhs2))
    kr1 = res1 / max(sc1, REL_FLOOR)
    kr2 = res2 / max(sc2, REL_FLOOR)

    up1, up2 = s.shifted(1, 0), s.shifted(0, 1)
    for sx in (s, up1, up2):
        _require_B(sx)
    d1 = _ShiftOperatorSection(f, 1, up1.g, step)
    d2 = _ShiftOperatorSection(f, 2, up2.g, step)
    lhs = [res1, res2]
    rhs = [0.0, 0.0]
    re_ = [kr1, kr2]
    op_rel = []
    for pt in points:
        base = apply_B(s, f, pt, quad=quad)
        l1 = apply_B(up1, d1, pt, quad=quad)
        r1 = constant_scale * s1 * base
        l2 = apply_B(up2, d2, pt, quad=quad)
        r2 = constant_scale * s2 * base
        for lv, rv in ((l1, r1), (l2, r2)):
            lhs.append(lv)
            rhs.append(rv)
            op_rel.append(rel_err(lv, rv))
            re_.append(op_rel[-1])
    ae = [abs(a - b) for a, b in zip(lhs, rhs)]
    passed = (kr1 <= kernel_tol and kr2 <= kernel_tol
              and all(r <= tol for r in op_rel))
    params = {"n": n, "xi": list(s.g.xi), "lam": _cl_list(s.g.lam),
              "eta": s.eta, "nu": _c2l(s.nu), "kernel_tol": kernel_tol,
              "tol": tol, "constant_scale": constant_scale, "step": step,
              "seed": seed}
    meta = {"layout": "rows 0-1 kernel residual maxima; then per point "
                      "(recurrence 1, recurrence 2) operator values",
            "theta_count": theta_count,
            "eigенvalues": [_c2l(s1), _c2l(s2)]}
    return CheckReport("bs_identities", n, params, _points_meta(points),
                       lhs, rhs, ae, re_, meta, passed)


# ---------------------------------------------------------------------------
# decay along the spectral line

def check_decay(n: int = 1, s_base: Optional[SboParams] = None, f=None,
                t_values: Sequence[float] = (5.0, 10.0, 20.0, 40.0),
                quad: Optional[QuadSpec] = None, gate: float = -2.0,
                seed: int = 0, _measured=None) -> CheckReport:
    """Decay of the rank-one value at the identity along the imaginary axis.

    Fits |B f(e)| at nu = iT against (1+T) in log-log and passes when the
    fitted exponent is at or below ``gate`` and the magnitudes decrease
    monotonically.  ``rel_err`` rows measure the quality of the power-law
    fit and are informational; the pass criterion is the exponent gate.
    ``_measured`` injects magnitudes directly (testing hook for the fit
    logic).
    """
    if s_base is None:
        s_base = default_sbo(n)
    n = s_base.n
    quad = quad or QuadSpec()
    dq = replace(quad, order=max(quad.order, 24),
                 abs_tol=min(quad.abs_tol, 1e-15),
                 rel_tol=min(quad.rel_tol, 1e-12),
                 max_depth=max(quad.max_depth, 24))
    if f is None:
        f = test_vector_G(s_base.g, "gaussian", poly_degree=2, seed=seed)
    e1 = _identity_H(n)
    ts = [float(t) for t in t_values]
    if _measured is None:
        mags = [abs(apply_B(SboParams(s_base.g, s_base.eta, 1j * t), f, e1,
                            quad=dq)) for t in ts]
    else:
        mags = [float(v) for v in _measured]
    expo = fit_decay_exponent(ts, mags)
    if math.isfinite(expo):
        anchor = mags[0] if mags[0] > 0 else 1.0
        model = [anchor * ((1.0 + t) / (1.0 + ts[0])) ** expo for t in ts]
    else:
        model = [0.0 for _ in ts]
    ae = [abs(a - b) for a, b in zip(mags, model)]
    re_ = [rel_err(a, b) for a, b in zip(mags, model)]
    monotone = all(mags[i + 1] < mags[i] for i in range(len(mags) - 1))
    passed = expo <= gate and monotone
    params = {"n": n, "lam": _cl_list(s_base.g.lam), "eta": s_base.eta,
              "gate": gate, "seed": seed}
    meta = {"decay_exponent": expo, "monotone": monotone,
            "magnitudes": [float(m) for m in mags]}
    return CheckReport("decay", n, params, [[t] for t in ts],
                       mags, model, ae, re_, meta, passed)


# ---------------------------------------------------------------------------
# invariant Hermitian form and its factorization through the flag fibration

def _hermitian_pair_S(h: HParams, F1, F2, *, y_order: int = 14,
                      x_order: int = 14, z_order: int = 20,
                      t_order: int = 12, tail_order: int = 16,
                      z0_factor: float = 3.0) -> complex:
    """Hermitian form of two compactly supported small-group sections (n = 2).

    Computed through the flag fibration: unipotent-averaging both sections
    (one explicit singular integral in the middle cell coordinate), then
    pairing across the rank-one intertwiner of the derived size-2 family.
    In straightened fibration coordinates (y, X, z2) the two averaged
    sections live over a compact (y, X) box, the intertwiner acts by a pure
    y-shift with a window forced by the support of F2, and only the z2 axis
    needs tails (algebraic decay |z2|^{-2}, handled by the map z2 = Z0/w).

    Requires eta1 = eta3, nu1 = -nu3 = mu in (0, 1/2) real and nu2 on the
    imaginary axis; everything else raises DomainError.
    """
    if h.n != 2:
        raise DomainError("fibration pairing implemented for n = 2")
    e1, e2, e3 = (par(e) for e in h.eta)
    n1, n2, n3 = (complex(z) for z in h.nu)
    if e1 != e3:
        raise DomainError("fibration pairing needs matching outer parities")
    mu = n1.real
    if abs(n1.imag) > 1e-12 or abs(n1 + n3) > 1e-12 or abs(n2.real) > 1e-12:
        raise DomainError("fibration pairing needs nu1 = -nu3 real and "
                          "nu2 imaginary")
    if not 0.0 < mu < 0.5:
        raise DomainError("fibration pairing needs 0 < nu1 < 1/2")
    d = n2 - n3 - 1.0           # averaging kernel exponent, Re d = mu - 1
    p23 = par(e2 + e3)
    p13 = par(e1 + e3)
    r = max(_reach(F1), _reach(F2))
    z0 = z0_factor * r
    c_u = 1.0 / norm_U(h)
    norm_r = norm_T(GParams(1, (e1, e3), (mu, -mu)))

    yn, yw = _panel_nodes(-r, r, y_order)
    xn, xw = _panel_nodes(-r, r, y_order)

    # z2 axis: two central panels and two mapped tails
    z_nodes, z_weights = [], []
    for a, b in ((-z0, 0.0), (0.0, z0)):
        p, w = _panel_nodes(a, b, z_order)
        z_nodes.append(p)
        z_weights.append(w)
    wt_n, wt_w = _panel_nodes(0.0, 1.0, tail_order)
    for sign in (1.0, -1.0):
        z_nodes.append(sign * z0 / wt_n)
        z_weights.append(wt_w * z0 / wt_n ** 2)
    z_nodes = np.concatenate(z_nodes)
    z_weights = np.concatenate(z_weights)

    # standard one-sided rule for the y-shift variable (singular at t = 0)
    tj, twj = _jacobi_rule(t_order, 0.0, 2.0 * mu - 1.0)

    ny = yn.size
    total = 0.0 + 0.0j
    ygrid = yn[:, None]
    xgrid = xn[None, :]
    for z2, wz in zip(z_nodes, z_weights):
        # shared u-axis rule for this z2: kernel singular at u = z2
        if abs(z2) < r * (1.0 - 1e-12):
            pa, wa = _panel_nodes(-r, float(z2), x_order,
                                  exp_right=d.real)
            pb, wb = _panel_nodes(float(z2), r, x_order,
                                  exp_left=d.real)
            un = np.concatenate([pa, pb])
            uw = np.concatenate([wa, wb])
            kres = np.array([signed_power(float(x - z2), d, p23)
                             / abs(x - z2) ** d.real for x in un])
        else:
            un, uw = _panel_nodes(-r, r, 2 * x_order)
            kres = np.array([signed_power(float(x - z2), d, p23)
                             for x in un])
        ku = uw * kres
        nu_ = un.size

        # averaged section 1 on the (y, X) grid
        xa = np.broadcast_to(xgrid[:, :, None], (ny, ny, nu_)).ravel()
        ua = np.broadcast_to(un[None, None, :], (ny, ny, nu_)).ravel()
        va = np.broadcast_to(ygrid[:, :, None], (ny, ny, nu_)).ravel()
        f1v = F1.F_batch(xa, ua, va).reshape(ny, ny, nu_)
        w1 = f1v @ ku                                   # (ny, ny)

        # shift windows for section 2: need |X + z2 t| <= r and |y + t| <= r
        if z2 > 0:
            lo_x, hi_x = (-r - xgrid) / z2, (r - xgrid) / z2
        else:
            lo_x, hi_x = (r - xgrid) / z2, (-r - xgrid) / z2
        wa_t = np.maximum(-r - ygrid, lo_x)
        wb_t = np.minimum(r - ygrid, hi_x)
        # two one-sided panels per (y, X): [wa, 0] and [0, wb]
        parts = []
        for lo, hi, flip in ((wa_t, 0.0, True), (0.0, wb_t, False)):
            if flip:
                half = np.maximum(-wa_t, 0.0) * 0.5      # (ny, ny)
                mid = wa_t * 0.5
                tt = mid[:, :, None] - half[:, :, None] * tj[None, None, :]
            else:
                half = np.maximum(wb_t, 0.0) * 0.5
                mid = wb_t * 0.5
                tt = mid[:, :, None] + half[:, :, None] * tj[None, None, :]
            ww = (half[:, :, None] ** (1.0 + (2.0 * mu - 1.0))
                  * twj[None, None, :])
            if p13 and flip:
                ww = -ww                                # sign(t)^{p13} on t<0
            parts.append((tt, ww))
        tt = np.concatenate([p[0] for p in parts], axis=2)  # (ny, ny, nt)
        ww = np.concatenate([p[1] for p in parts], axis=2)
        nt = tt.shape[2]

        x2 = (xgrid[:, :, None, None] + z2 * tt[:, :, :, None])
        u2 = np.broadcast_to(un[None, None, None, :], (ny, ny, nt, nu_))
        v2 = np.broadcast_to((ygrid[:, :, None] + tt)[:, :, :, None],
                             (ny, ny, nt, nu_))
        x2 = np.broadcast_to(x2, (ny, ny, nt, nu_))
        f2v = F2.F_batch(x2.ravel(), np.ascontiguousarray(u2).ravel(),
                         np.ascontiguousarray(v2).ravel())
        f2v = f2v.reshape(ny, ny, nt, nu_)
        g2 = np.einsum("yxts,s,yxt->yx", f2v, ku, ww)

        total += wz * np.einsum("y,x,yx,yx->", yw, xw, w1, np.conjugate(g2))

    return complex(abs(c_u) ** 2 * (1.0 / norm_r).conjugate() * total)


def _s_pair_lhs(h: HParams, F1, F2, *, p_order: int = 14,
                uv_order: int = 14, x_order: int = 12,
                chunk: int = 2_000_000) -> complex:
    """(F1 | conj(normalized S F2)) over the small cell, composed form (n=2).

    Folds the cell pairing and the intertwiner integral into a correlation
    C(w') = int F1(p) conj(F2(p o w')) dp (cell composition law
    (X,u,v) o (X',u',v') = (X+X'+u v', u+u', v+v')) against the conjugated
    two-factor kernel.  The kernel's cross singularity at u'v' contributes
    |u'v'|^{2 mu - 1}, absorbed by per-quadrant Jacobi rules on the u' and
    v' axes; the x' axis is split at its two singular points per node.
    """
    if h.n != 2:
        raise DomainError("composed pairing implemented for n = 2")
    e1, e2, e3 = (par(e) for e in h.eta)
    n1, n2, n3 = (complex(z) for z in h.nu)
    mu = n1.real
    if not 0.0 < mu < 0.5:
        raise DomainError("composed pairing needs 0 < nu1 < 1/2")
    d1 = n1 - n2 - 1.0
    d2 = n2 - n3 - 1.0
    p12 = par(e1 + e2)
    p23 = par(e2 + e3)
    r1 = _reach(F1)
    rr = max(r1, _reach(F2))
    rx = (2.0 * rr + 4.0 * rr * rr) * 1.2

    # p grid over the support of F1
    pg, pw = _panel_nodes(-r1, r1, p_order)
    m = p_order
    xp = np.repeat(pg, m * m)
    up = np.tile(np.repeat(pg, m), m)
    vp = np.tile(pg, m * m)
    wp = (np.repeat(pw, m * m) * np.tile(np.repeat(pw, m), m)
          * np.tile(pw, m * m))
    f1p = np.asarray(F1.F_batch(xp, up, vp), dtype=complex) * wp

    # u', v' axes with the collision exponent absorbed at 0
    alpha = 2.0 * mu - 1.0
    ua, uwa = _panel_nodes(-2.0 * rr, 0.0, uv_order, exp_right=alpha)
    ub, uwb = _panel_nodes(0.0, 2.0 * rr, uv_order, exp_left=alpha)
    uv_nodes = np.concatenate([ua, ub])
    uv_w = np.concatenate([uwa, uwb])

    inv_ns = (1.0 / norm_S(h)).conjugate()
    total = 0.0 + 0.0j
    for iu, u_ in enumerate(uv_nodes):
        for iv, v_ in enumerate(uv_nodes):
            mcol = u_ * v_
            lo, hi = (mcol, 0.0) if mcol < 0 else (0.0, mcol)
            exp_lo = d2.real if mcol < 0 else d1.real
            exp_hi = d1.real if mcol < 0 else d2.real
            pans = [_panel_nodes(-rx, lo, x_order, exp_right=exp_lo),
                    _panel_nodes(lo, hi, x_order, exp_left=exp_lo,
                                 exp_right=exp_hi),
                    _panel_nodes(hi, rx, x_order, exp_left=exp_hi)]
            xs = np.concatenate([p[0] for p in pans])
            ws = np.concatenate([p[1] for p in pans])
            # kernel residual after the absorbed magnitudes
            kr = np.empty(xs.size, dtype=complex)
            for j, x_ in enumerate(xs):
                val = (signed_power(float(x_), d1, p12)
                       * signed_power(float(x_ - mcol), d2, p23))
                kr[j] = val / (abs(x_) ** d1.real
                               * abs(x_ - mcol) ** d2.real)
            # correlation against the shifted copy of F2
            nx = xs.size
            npts = f1p.size
            x2 = xp[None, :] + xs[:, None] + up[None, :] * v_
            u2 = np.broadcast_to(up[None, :] + u_, (nx, npts))
            v2 = np.broadcast_to(vp[None, :] + v_, (nx, npts))
            f2v = F2.F_batch(np.ascontiguousarray(x2).ravel(),
                             np.ascontiguousarray(u2).ravel(),
                             np.ascontiguousarray(v2).ravel())
            cvals = np.conjugate(f2v.reshape(nx, npts)) @ f1p
            contrib = np.sum(ws * np.conjugate(kr) * cvals)
            total += (uv_w[iu] * uv_w[iv]
                      * abs(u_ * v_) ** (1.0 - 2.0 * mu) * contrib
                      / (abs(u_) ** alpha * abs(v_) ** alpha
                         / (abs(u_ * v_) ** alpha)))
    return complex(inv_ns * total)


def check_hermitian_factorization(h: Optional[HParams] = None, F1=None,
                                  F2=None, quad: Optional[QuadSpec] = None,
                                  tol: float = 1e-2,
                                  constant_scale: float = 1.0,
                                  seed: int = 0) -> CheckReport:
    """Invariant Hermitian form vs its flag-fibration factorization (n = 2).

    lhs: the form computed from its definition, pairing F1 against the
    conjugated normalized small-group intertwiner image of F2.  rhs: the
    factorized expression through unipotent averaging and the derived
    size-2 rank-one intertwiner.  No extra constant relates the two.
    """
    quad = quad or QuadSpec()
    if h is None:
        h = HParams(2, (0, 0, 0), (0.3, 0.4j, -0.3))
    if F1 is None:
        F1 = test_vector_H(h, "bump", radius=1.0, poly_degree=2,
                           seed=seed + 7)
    if F2 is None:
        F2 = test_vector_H(h, "bump", radius=1.0, poly_degree=1,
                           seed=seed + 8)
    lhs = _s_pair_lhs(h, F1, F2)
    rhs = constant_scale * _hermitian_pair_S(h, F1, F2)
    ae = [abs(lhs - rhs)]
    re_ = [rel_err(lhs, rhs)]
    params = {"n": 2, "eta": list(h.eta), "nu": _cl_list(h.nu), "tol": tol,
              "constant_scale": constant_scale, "seed": seed}
    meta = {"lhs": _c2l(lhs), "rhs": _c2l(rhs)}
    return CheckReport("hermitian_factorization", 2, params, [["form"]],
                       [lhs], [rhs], ae, re_, meta, re_[0] <= tol)


# ---------------------------------------------------------------------------
# positivity probe

def check_positivity_probe(n: int = 1, mu: float = 0.2, parity: int = 0,
                           family=None, quad: Optional[QuadSpec] = None,
                           tol: float = 1e-6, nu_probe: complex = 0.4j,
                           seed: int = 0) -> CheckReport:
    """Sign probe of the invariant Hermitian form on a small test family.

    Inside the positivity window the recorded form values must all be
    nonnegative (up to ``tol`` times the value scale).  Outside it the
    probe hunts for a negative witness; not finding one is inconclusive
    and the check still passes, with the outcome recorded in
    ``quad_meta['witness_found']``.

    Routes: mu = 0 uses plain L2 norms; n = 1 pairs f against the
    normalized intertwiner image of its conjugate; n = 2 inside the window
    probes the small-group factor forms the big form disintegrates into
    (parameters (mu, nu_probe, -mu), both middle parities); n = 2 with
    2 mu > 1 uses a grid intertwiner probe.
    """
    quad = quad or QuadSpec()
    parity = par(parity)
    g = GParams(n, (parity, parity), (mu, -mu))
    inside = _in_positive_window(mu, n)
    values, labels = [], []
    route = ""
    if mu == 0.0:
        route = "l2"
        fam = family or _default_g_family(g, seed)
        for i, f in enumerate(fam):
            values.append(pairing_G(f, _ConjugateSection(f), quad).real)
            labels.append(["l2", i])
    elif n == 1:
        if mu <= 0:
            raise DomainError("n = 1 probe needs mu > 0 for the "
                              "intertwiner route")
        route = "intertwiner"
        tq = replace(quad, max_depth=max(quad.max_depth, 26))
        fam = family or _default_g_family(g, seed)
        for i, f in enumerate(fam):
            fbar = _ConjugateSection(f)
            t_sec = _PointwiseOperator(
                g.swapped(),
                lambda mmat, fb=fbar: apply_T(
                    g, fb, matgroup.group_element(mmat, "G"), tq,
                    normalized=True))
            values.append(pairing_G(f, t_sec, quad).real)
            labels.append(["form", i])
    elif n == 2 and 2.0 * mu > n - 1:
        route = "grid_intertwiner"
        fam = family or _default_g_family(g, seed)
        for i, f in enumerate(fam):
            tf = transform_T(g, _ConjugateSection(f), quad, normalized=True,
                             radius=8.0, order=20)
            values.append(pairing_G(f, tf, quad).real)
            labels.append(["form", i])
    elif n == 2:
        route = "fibration_factors"
        if family is None:
            family = [test_vector_H(
                HParams(2, (parity, 0, parity), (mu, nu_probe, -mu)),
                "bump", radius=1.0, poly_degree=dg, seed=seed + 9 + dg)
                for dg in (0, 2)]
        for eta_mid in (0, 1):
            hh = HParams(2, (parity, eta_mid, parity), (mu, nu_probe, -mu))
            for i, F in enumerate(family):
                values.append(_hermitian_pair_S(hh, F, F).real)
                labels.append([eta_mid, i])
    else:
        raise DomainError("no probe route for these parameters")

    scale = max(1.0, max(abs(v) for v in values))
    vmin = min(values)
    witness = vmin < -tol * scale
    passed = (not witness) if inside else True
    ae = [max(0.0, -v) for v in values]
    re_ = [max(0.0, -v) / scale for v in values]
    params = {"n": n, "mu": mu, "parity": parity, "tol": tol, "seed": seed,
              "nu_probe": _c2l(nu_probe)}
    meta = {"route": route, "inside_window": inside, "min_value": vmin,
            "witness_found": witness}
    return CheckReport("positivity_probe", n, params, labels, values,
                       [0.0] * len(values), ae, re_, meta, passed)


def _default_g_family(g: GParams, seed: int) -> list:
    n = g.n
    shift = np.full(n * n, 0.35)
    return [
        test_vector_G(g, "gaussian", poly_degree=2, seed=seed + 1),
        test_vector_G(g, "gaussian", width=0.6, seed=seed + 2, center=shift),
        test_vector_G(g, "bump", radius=1.2, poly_degree=1, seed=seed + 3),
    ]


# ---------------------------------------------------------------------------
# registry

CHECKS: dict = {
    "fe_SBA": check_fe_SBA,
    "fe_BTA": check_fe_BTA,
    "integral_formula": check_integral_formula,
    "plancherel": check_plancherel,
    "final_plancherel": check_final_plancherel,
    "Q_even": check_Q_even,
    "Q_vanishing": check_Q_vanishing,
    "bs_identities": check_bs_identities,
    "decay": check_decay,
    "hermitian_factorization": check_hermitian_factorization,
    "positivity_probe": check_positivity_probe,
}

# cheap-by-default argument sets used by the command line driver
CHECK_DEFAULTS: dict = {
    "fe_SBA": {"n": 1},
    "fe_BTA": {"n": 1},
    "integral_formula": {"n": 1},
    "plancherel": {"n": 1},
    "final_plancherel": {},
    "Q_even": {"count": 4},
    "Q_vanishing": {},
    "bs_identities": {"n": 1},
    "decay": {},
    "hermitian_factorization": {},
    "positivity_probe": {"n": 1},
}


def run_check(check_id: str, **kwargs) -> CheckReport:
    """Dispatch one check by id with CHECK_DEFAULTS merged under kwargs."""
    if check_id not in CHECKS:
        raise KeyError(f"unknown check id {check_id!r}")
    merged = dict(CHECK_DEFAULTS.get(check_id, {}))
    merged.update(kwargs)
    return CHECKS[check_id](**merged)
