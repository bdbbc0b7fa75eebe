"""Deterministic numerical integration.

Three entry points: ``integrate_1d``, ``integrate_nd`` (adaptive dyadic
subdivision with tensor Gauss-Legendre cells), and ``integrate_nu_line``
(truncated imaginary-axis integrals with a certified tail).  A fixed-grid
helper ``graded_nodes`` serves the operator module, which needs static node
sets so that compositions and parameter-shift ladders see a smooth function
of their own variables.

Integrands must be vectorized: ``f(x)`` receives an ``(m,)`` array (1D) or
an ``(m, d)`` array (nD) and returns an ``(m,)`` array of complex values.
Everything is accumulated in a fixed order (numpy reductions inside a cell,
``math.fsum`` across cells), so results are bit-for-bit reproducible for a
given spec regardless of how many worker processes the caller uses.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, QuadratureError, TailError

__all__ = [
    "QuadResult",
    "QuadSpec",
    "graded_nodes",
    "integrate_1d",
    "integrate_nd",
    "integrate_nu_line",
]


@dataclass(frozen=True)
class QuadSpec:
    """Integration policy.

    scheme : "gauss_legendre" | "gauss_jacobi" | "adaptive"
        "adaptive" and "gauss_legendre" are synonyms here (the adaptive
        driver always uses Gauss-Legendre cells); "gauss_jacobi" folds
        endpoint weights (1-x)^alpha (x-a)^beta into the rule, in which
        case the integrand callback must supply only the smooth factor.
    order : points per axis per cell.
    truncation_radius : default half-width for callers that build boxes.
    max_depth : dyadic subdivision depth limit (0 = single fixed cell).
    abs_tol, rel_tol : convergence targets for the global error estimate.
    jacobi_alpha, jacobi_beta : exponents for the "gauss_jacobi" scheme.
    """

    scheme: str = "adaptive"
    order: int = 16
    truncation_radius: float = 8.0
    max_depth: int = 18
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    jacobi_alpha: float = 0.0
    jacobi_beta: float = 0.0

    def __post_init__(self):
        if self.order < 2:
            raise DomainError("quadrature order must be >= 2")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.truncation_radius <= 0:
            raise DomainError("truncation_radius must be positive")
        if self.scheme not in ("adaptive", "gauss_legendre", "gauss_jacobi"):
            raise DomainError(f"unknown scheme {self.scheme!r}")

    def with_(self, **kw) -> "QuadSpec":
        data = self.__dict__.copy()
        data.update(kw)
        return QuadSpec(**data)


@dataclass
class QuadResult:
    value: complex
    err_estimate: float
    evaluations: int
    converged: bool

    def require(self, what: str = "integral") -> complex:
        if not self.converged:
            raise QuadratureError(
                f"{what} did not converge (estimate {self.value}, "
                f"error {self.err_estimate:.3e})",
                estimate=self.value, err_estimate=self.err_estimate)
        return self.value


_rule_cache: dict = {}

# global per-call budget on integrand evaluations; refinement that would
# exceed it stops and reports converged=False instead of spinning
_EVAL_BUDGET = 60_000_000


def _gl_rule(order: int):
    key = ("gl", order)
    if key not in _rule_cache:
        _rule_cache[key] = leggauss(order)
    return _rule_cache[key]


def _jacobi_rule(order: int, alpha: float, beta: float):
    key = ("jac", order, alpha, beta)
    if key not in _rule_cache:
        from scipy.special import roots_jacobi

        _rule_cache[key] = roots_jacobi(order, alpha, beta)
    return _rule_cache[key]


def _fsum_complex(values) -> complex:
    vals = list(values)
    return complex(math.fsum(v.real for v in vals),
                   math.fsum(v.imag for v in vals))


# ----------------------------------------------------------------------
# 1D
# ----------------------------------------------------------------------

def _cell_pair_1d(f, a, b, spec):
    """Embedded Gauss pair on one cell: value at order p and at ~3p/2."""
    lo_val = _gl_cell_1d(f, a, b, spec.order)
    hi_val = _gl_cell_1d(f, a, b, spec.order + (spec.order + 1) // 2)
    return hi_val, abs(hi_val - lo_val)


def _gl_cell_1d(f, a, b, order):
    x, w = _gl_rule(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid + half * x
    vals = np.asarray(f(pts), dtype=complex)
    return complex(np.sum(vals * w)) * half


def integrate_1d(f, interval, spec: QuadSpec) -> QuadResult:
    """Integrate a vectorized scalar function over a finite interval.

    With scheme "gauss_jacobi" the weight (b-x)^alpha (x-a)^beta is part
    of the rule and ``f`` must return the remaining smooth factor only;
    no subdivision happens in that mode.
    """
    a, b = float(interval[0]), float(interval[1])
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integrate_1d needs a finite interval")

    if spec.scheme == "gauss_jacobi":
        x, w = _jacobi_rule(spec.order, spec.jacobi_alpha, spec.jacobi_beta)
        half = 0.5 * (b - a)
        pts = 0.5 * (a + b) + half * x
        vals = np.asarray(f(pts), dtype=complex)
        # the rule is exact on [-1,1] with weight (1-x)^a(1+x)^b; rescale
        scale = half ** (1.0 + spec.jacobi_alpha + spec.jacobi_beta)
        value = complex(np.sum(vals * w)) * scale
        x2, w2 = _jacobi_rule(spec.order + (spec.order + 1) // 2,
                              spec.jacobi_alpha, spec.jacobi_beta)
        pts2 = 0.5 * (a + b) + half * x2
        vals2 = np.asarray(f(pts2), dtype=complex)
        value2 = complex(np.sum(vals2 * w2)) * scale
        err = abs(value2 - value)
        tol = max(spec.abs_tol, spec.rel_tol * abs(value2))
        return QuadResult(value2, err, len(x) + len(x2), err <= tol)

    return _adaptive(lambda c: _cell_pair_1d(f, c[0], c[1], spec),
                     [(a, b)], spec,
                     evals_per_cell=2 * spec.order + (spec.order + 1) // 2)


# ----------------------------------------------------------------------
# adaptive driver (shared by 1D and nD)
# ----------------------------------------------------------------------

def _adaptive(cell_pair, initial_cells, spec, evals_per_cell) -> QuadResult:
    """Refine-the-worst-cell loop with deterministic tie-breaking.

    ``cell_pair(cell)`` returns (value, error) for one cell descriptor
    ((a, b) in 1D, a tuple of per-axis intervals in nD).  Cells split
    dyadically, in nD along their longest axis.  Running totals steer the
    refinement; the returned value is an exact ``fsum`` over the final
    cells, so the result depends only on the (deterministic) subdivision
    sequence.
    """
    heap = []
    frozen = []  # cells at max depth (or with zero error): kept, not split
    counter = 0
    evaluations = 0
    running_value = 0.0 + 0.0j
    running_err = 0.0

    def push(cell, depth):
        nonlocal counter, evaluations, running_value, running_err
        value, err = cell_pair(cell)
        evaluations += evals_per_cell
        heapq.heappush(heap, (-err, counter, depth, cell, value, err))
        counter += 1
        running_value += value
        running_err += err

    for cell in initial_cells:
        push(cell, 0)

    while True:
        tol = max(spec.abs_tol, spec.rel_tol * abs(running_value))
        if running_err <= tol or not heap or evaluations >= _EVAL_BUDGET:
            break
        item = heapq.heappop(heap)
        _, _, depth, cell, value, err = item
        if depth >= spec.max_depth or err == 0.0:
            frozen.append(item)
            continue
        running_value -= value
        running_err -= err
        for child in _split(cell):
            push(child, depth + 1)

    cells = heap + frozen
    total = _fsum_complex(item[4] for item in cells)
    total_err = math.fsum(item[5] for item in cells)
    converged = total_err <= max(spec.abs_tol, spec.rel_tol * abs(total))
    return QuadResult(total, total_err, evaluations, converged)


def _split(cell):
    if isinstance(cell, tuple) and np.isscalar(cell[0]):  # 1D (a, b)
        a, b = cell
        m = 0.5 * (a + b)
        return [(a, m), (m, b)]
    # nD: list of (a, b) per axis; split the longest axis
    widths = [b - a for (a, b) in cell]
    axis = int(np.argmax(widths))
    a, b = cell[axis]
    m = 0.5 * (a + b)
    left = list(cell)
    right = list(cell)
    left[axis] = (a, m)
    right[axis] = (m, b)
    return [tuple(left), tuple(right)]


# ----------------------------------------------------------------------
# nD
# ----------------------------------------------------------------------

def _tensor_cell(f, box, order):
    dim = len(box)
    x, w = _gl_rule(order)
    axes_pts = []
    axes_w = []
    for (a, b) in box:
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        axes_pts.append(mid + half * x)
        axes_w.append(w * half)
    mesh = np.meshgrid(*axes_pts, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    vals = np.asarray(f(pts), dtype=complex).reshape([order] * dim)
    for axis in range(dim - 1, -1, -1):
        vals = np.tensordot(vals, axes_w[axis], axes=([axis], [0]))
    return complex(vals)


def _cell_pair_nd(f, box, spec):
    lo = _tensor_cell(f, box, spec.order)
    hi_order = spec.order + max(2, spec.order // 2)
    hi = _tensor_cell(f, box, hi_order)
    return hi, abs(hi - lo)


def integrate_nd(f, box, spec: QuadSpec) -> QuadResult:
    """Adaptive tensor-product integration over a product of intervals.

    ``box`` is a sequence of (a, b) pairs, dimension <= 6.  ``f`` maps an
    (m, d) array of points to (m,) complex values.
    """
    box = tuple((float(a), float(b)) for (a, b) in box)
    if len(box) == 0:
        raise DomainError("integrate_nd needs at least one axis")
    if len(box) > 6:
        raise DomainError("integrate_nd supports dimension <= 6")
    order = spec.order
    hi_order = order + max(2, order // 2)
    per_cell = order ** len(box) + hi_order ** len(box)
    return _adaptive(lambda b: _cell_pair_nd(f, b, spec), [box], spec,
                     evals_per_cell=per_cell)


# ----------------------------------------------------------------------
# fixed graded grids (for operator compositions)
# ----------------------------------------------------------------------

def graded_nodes(radius: float, order: int, levels: int,
                 include_negative: bool = True):
    """Static dyadically graded Gauss-Legendre nodes on (0, radius] (and
    mirrored to the negative side when requested).

    Panels are [radius/2^{k+1}, radius/2^k] for k = 0..levels-1 plus the
    innermost [0, radius/2^levels]; power singularities |t|^s at the origin
    with Re s > -1 are then integrated with geometrically decaying panel
    error while the node set stays fixed, which keeps anything built on top
    of it (parameter-shift ladders, nested operators) smooth in its own
    variables.  On the innermost panel the rule is applied through the
    substitution t = eps * u^10, so that |t|^s becomes u^{10s+9} there --
    polynomial for the common half-integer powers and mild for everything
    down to s ~ -0.9.

    Returns (nodes, weights) as flat arrays, deterministic order.
    """
    if radius <= 0:
        raise DomainError("radius must be positive")
    x, w = _gl_rule(order)
    edges = [radius * 0.5 ** k for k in range(levels + 1)]
    nodes = []
    weights = []
    for hi, lo in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        nodes.append(mid + half * x)
        weights.append(w * half)
    eps = edges[-1]
    u = 0.5 * (x + 1.0)  # GL nodes mapped to (0, 1)
    nodes.append(eps * u**10)
    weights.append(eps * 10.0 * u**9 * (0.5 * w))
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    if include_negative:
        nodes = np.concatenate([-nodes, nodes])
        weights = np.concatenate([weights, weights])
    return nodes, weights


# ----------------------------------------------------------------------
# truncated imaginary-axis integrals
# ----------------------------------------------------------------------

def integrate_nu_line(f, t_max: float, decay_order: int,
                      spec: QuadSpec) -> QuadResult:
    """Integral over the imaginary axis, nu = iT, as a real T-integral
    over [-t_max, t_max] with a certified tail.

    ``f`` receives an array of purely imaginary nu values.  The decay
    precondition |f(i t_max)| <= rel_tol * max |f| is checked empirically
    on the sample grid; the tail bound |f(i t_max)| * t_max/(decay_order-1)
    (a crude integral comparison for |f| ~ T^{-decay_order}) is folded
    into the error estimate.
    """
    if decay_order < 2:
        raise DomainError("decay_order must be >= 2 for a finite tail bound")

    def on_line(t):
        return f(1j * np.asarray(t))

    inner = integrate_1d(on_line, (-t_max, t_max), spec)

    # empirical decay probe
    probe_t = np.linspace(-t_max, t_max, 65)
    probe = np.abs(np.asarray(f(1j * probe_t), dtype=complex))
    peak = float(np.max(probe))
    edge = float(max(probe[0], probe[-1]))
    if peak > 0 and edge > spec.rel_tol * peak * 10:
        raise TailError(
            f"integrand has not decayed at |Im nu| = {t_max} "
            f"(edge/peak = {edge / peak:.2e}); increase t_max",
            suggested_t_max=2 * t_max)
    tail = edge * t_max / (decay_order - 1)
    err = inner.err_estimate + tail
    return QuadResult(inner.value, err, inner.evaluations + probe_t.size,
                      inner.converged)
