import math

import numpy as np
import pytest

from sbolab.errors import DomainError, TailError
from sbolab.quadrature import (
    QuadSpec,
    graded_nodes,
    integrate_1d,
    integrate_nd,
    integrate_nu_line,
)

from conftest import as_complex

SPEC = QuadSpec(order=16, max_depth=16, abs_tol=1e-12, rel_tol=1e-11)


def test_polynomial_exact():
    res = integrate_1d(lambda x: x**2, (0, 1), SPEC)
    assert res.converged
    assert res.value == pytest.approx(1 / 3, abs=1e-14)


def test_oscillatory():
    res = integrate_1d(lambda x: np.cos(10 * x), (0, 2 * math.pi), SPEC)
    assert res.converged
    assert abs(res.value) <= 1e-10


def test_exp_reference(oracles):
    res = integrate_1d(np.exp, (-1, 1), SPEC)
    assert res.value == pytest.approx(
        as_complex(oracles["quad_refs"]["exp_pm1"]), abs=1e-13)


def test_jacobi_sqrt_singularity(oracles):
    # int_0^1 x^{-1/2} dx = 2, weight folded into the rule
    spec = QuadSpec(scheme="gauss_jacobi", order=12, jacobi_alpha=0.0,
                    jacobi_beta=-0.5)
    res = integrate_1d(lambda x: np.ones_like(x), (0, 1), spec)
    assert res.converged
    assert res.value == pytest.approx(oracles["quad_refs"]["sqrt_singular"][0],
                                      abs=1e-12)


def test_adaptive_handles_interior_kink():
    # |x|^{0.3} has a kink at 0; dyadic refinement must dig it out
    spec = QuadSpec(order=12, max_depth=40, abs_tol=1e-12, rel_tol=1e-10)
    res = integrate_1d(lambda x: np.abs(x) ** 0.3, (-1, 2), spec)
    want = 1 / 1.3 + 2**1.3 / 1.3
    assert res.converged
    assert res.value == pytest.approx(want, rel=1e-9)


def test_complex_exponent_endpoint():
    # |x|^{gamma} with complex gamma: graded adaptive handles it too
    gamma_exp = -0.4 + 0.6j
    spec = QuadSpec(order=14, max_depth=48, abs_tol=1e-12, rel_tol=1e-10)
    res = integrate_1d(lambda x: np.abs(x) ** gamma_exp, (0, 1), spec)
    assert res.converged
    assert res.value == pytest.approx(1 / (gamma_exp + 1), rel=1e-8)


def test_nd_cube(oracles):
    spec = QuadSpec(order=8, max_depth=12, abs_tol=1e-11, rel_tol=1e-10)
    res = integrate_nd(lambda p: p[:, 0] * p[:, 1], [(0, 1), (0, 1)], spec)
    assert res.converged
    assert res.value == pytest.approx(0.25, abs=1e-12)

    res = integrate_nd(
        lambda p: 1.0 / (1.0 + p.sum(axis=1)),
        [(0, 1)] * 3, spec)
    assert res.value == pytest.approx(
        as_complex(oracles["quad_refs"]["cube_inv_linear"]), rel=1e-9)


def test_nd_gaussian_4d():
    # 4d is the costliest case the operator stack uses; moderate tolerances
    # keep this test quick while still exercising the refinement loop
    spec = QuadSpec(order=8, max_depth=40, abs_tol=1e-9, rel_tol=1e-8)
    res = integrate_nd(
        lambda p: np.exp(-np.sum(p**2, axis=1)), [(-6, 6)] * 4, spec)
    assert res.converged
    assert res.value == pytest.approx(math.pi**2, rel=1e-7)


def test_nonconvergence_is_flagged():
    spec = QuadSpec(order=4, max_depth=2, abs_tol=1e-14, rel_tol=1e-14)
    res = integrate_1d(lambda x: np.abs(x) ** 0.3, (-1, 1), spec)
    assert not res.converged
    with pytest.raises(Exception):
        res.require()


def test_doubling_order_stays_within_estimate():
    spec = QuadSpec(order=10, max_depth=12, abs_tol=1e-12, rel_tol=1e-10)

    def f(x):
        return np.exp(-(x**2)) * np.cos(3 * x)

    res = integrate_1d(f, (-5, 5), spec)
    res2 = integrate_1d(f, (-5, 5), spec.with_(order=20))
    assert res.converged
    assert abs(res2.value - res.value) <= 10 * max(res.err_estimate, 1e-15)


def test_determinism():
    spec = QuadSpec(order=9, max_depth=20, abs_tol=1e-12, rel_tol=1e-11)

    def f(x):
        return np.abs(x) ** 0.7 * np.exp(-(x**2))

    a = integrate_1d(f, (-3, 3), spec)
    b = integrate_1d(f, (-3, 3), spec)
    assert a.value == b.value  # bitwise identical
    assert a.err_estimate == b.err_estimate


def test_graded_nodes_integrate_singular_power():
    nodes, weights = graded_nodes(2.0, 16, 30)
    for s in (0.3, -0.5, -0.7):
        val = np.sum(weights * np.abs(nodes) ** s)
        want = 2 * 2.0 ** (s + 1) / (s + 1)
        assert val == pytest.approx(want, rel=1e-9)


def test_nu_line_gaussian():
    spec = QuadSpec(order=16, max_depth=14, abs_tol=1e-12, rel_tol=1e-10)
    # f(nu) = e^{nu^2} restricted to nu = iT is e^{-T^2}
    res = integrate_nu_line(lambda nu: np.exp(nu**2), 6.0, 4, spec)
    assert res.converged
    assert res.value == pytest.approx(math.sqrt(math.pi), rel=1e-8)


def test_nu_line_tail_error():
    spec = QuadSpec(order=8, max_depth=8, abs_tol=1e-10, rel_tol=1e-8)
    with pytest.raises(TailError):
        integrate_nu_line(lambda nu: np.ones_like(nu), 10.0, 4, spec)


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadSpec(order=1)
    with pytest.raises(DomainError):
        QuadSpec(abs_tol=0)
    with pytest.raises(DomainError):
        integrate_nd(lambda p: p[:, 0], [(0, 1)] * 7,
                     QuadSpec(order=4))
