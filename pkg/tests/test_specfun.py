import cmath
import math

import numpy as np
import pytest

from sbolab import specfun
from sbolab.errors import DomainError, PoleError
from sbolab.specfun import GParams, HParams, SboParams

from conftest import as_complex


def test_signed_power_basics():
    assert specfun.signed_power(-2.0, 3, 1) == pytest.approx(-8.0)
    assert specfun.signed_power(-1.5, 0, 0) == pytest.approx(1.0)
    val = specfun.signed_power(2.0, 1j, 0)
    assert val == pytest.approx(cmath.exp(1j * math.log(2.0)))
    with pytest.raises(DomainError):
        specfun.signed_power(0.0, 1.0, 0)


def test_signed_power_is_multiplicative():
    # character property in both the exponent and the parity
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = float(rng.uniform(-3, 3))
        if x == 0.0:
            continue
        mu1 = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        mu2 = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        e1, e2 = int(rng.integers(0, 2)), int(rng.integers(0, 2))
        lhs = specfun.signed_power(x, mu1, e1) * specfun.signed_power(x, mu2, e2)
        rhs = specfun.signed_power(x, mu1 + mu2, e1 + e2)
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_log_gamma_small_values():
    assert specfun.log_gamma(1.0) == pytest.approx(0.0, abs=1e-14)
    assert specfun.log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)))
    assert specfun.log_gamma(4.0) == pytest.approx(math.log(6.0))


def test_log_gamma_against_frozen_grid(oracles):
    # spec accuracy strip: |Re z| <= 50, |Im z| <= 100, rel error <= 1e-13
    worst = 0.0
    for rec in oracles["loggamma_grid"]:
        z = complex(rec["z"][0], rec["z"][1])
        want = as_complex(rec["lg"])
        got = specfun.log_gamma(z)
        rel = abs(got - want) / max(abs(want), 1e-300)
        worst = max(worst, rel)
    assert worst <= 1e-13


def test_log_gamma_recurrence_property():
    rng = np.random.default_rng(11)
    for _ in range(200):
        z = complex(rng.uniform(-20, 20), rng.uniform(-30, 30))
        if abs(z.imag) < 0.2:
            z += 0.5j
        lhs = cmath.exp(specfun.log_gamma(z + 1))
        rhs = z * cmath.exp(specfun.log_gamma(z))
        assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def test_log_gamma_poles():
    for k in (0, -1, -2, -7):
        with pytest.raises(PoleError):
            specfun.log_gamma(k)
        assert specfun.rgamma(k) == 0
    # just off the pole is fine
    assert specfun.rgamma(-3.6) != 0


def test_gamma_reflection_sign():
    # Gamma at negative non-integer reals must come out real with the
    # classical alternating sign
    g = specfun.gamma(-3.6)
    assert abs(g.imag) <= 1e-13 * abs(g)
    # alternation: negative on (-1,0), positive on (-2,-1), ... so positive
    # on (-4,-3)
    assert g.real > 0
    assert g.real == pytest.approx(
        math.pi / (math.sin(-3.6 * math.pi) * 13.38128587093245), rel=1e-12)
    g2 = specfun.gamma(-0.5)
    assert g2.real == pytest.approx(-2 * math.sqrt(math.pi))


def test_pochhammer():
    assert specfun.pochhammer(3.0, 0) == 1
    assert specfun.pochhammer(3.0, 3) == pytest.approx(3 * 4 * 5)
    z = 0.3 + 0.2j
    assert specfun.pochhammer(z, 2) == pytest.approx(z * (z + 1))


def test_continuation_coeff_matches_gamma_ratio():
    # the coefficient is the closed form of
    #   norm(s + 2k) / ((s)_{2k} * norm(s)) with norm(s) = Gamma((s+eps)/2)
    for s in (2.3, 0.7 + 0.4j, -0.35):
        for eps in (0, 1):
            for k in (0, 1, 2, 3):
                want = cmath.exp(
                    specfun.log_gamma((s + 2 * k + eps) / 2)
                    - specfun.log_gamma((s + eps) / 2)
                ) / specfun.pochhammer(s, 2 * k)
                got = specfun.continuation_coeff(s, eps, k)
                assert abs(got - want) <= 1e-11 * abs(want)


def test_continuation_coeff_finite_at_vanishing_points():
    # at s = -2m (eps 0) the Gamma-ratio route is 0/0 but the closed form
    # stays finite
    val = specfun.continuation_coeff(-2.0, 0, 2)
    assert np.isfinite(abs(val))
    val = specfun.continuation_coeff(-3.0, 1, 2)
    assert np.isfinite(abs(val))


def test_norm_T(oracles):
    got = specfun.norm_T(GParams(1, (0, 0), (2, -1)))
    assert got == pytest.approx(as_complex(oracles["norms"]["norm_T_n1"]))
    got = specfun.norm_T(GParams(2, (0, 0), (4, -4)))
    assert got == pytest.approx(as_complex(oracles["norms"]["norm_T_n2"]))
    with pytest.raises(PoleError):
        specfun.norm_T(GParams(2, (0, 0), (0, 0)))  # Gamma(0) at i = 2


def test_norm_S(oracles):
    got = specfun.norm_S(HParams(2, (0, 0, 0), (3, 0, -3)))
    assert got == pytest.approx(as_complex(oracles["norms"]["norm_S_n2"]))
    # n = 1: the i = 2..n product is empty, the two leading factors remain
    got = specfun.norm_S(HParams(1, (0, 0, 0), (2, 0, -1)))
    want = (specfun.gamma((2 + 0.5) / 2) * specfun.gamma((1 + 0.5) / 2))
    assert got == pytest.approx(want)
    with pytest.raises(PoleError):
        specfun.norm_S(HParams(2, (0, 0, 0), (0, 0, 0)))


def test_norm_A_norm_B(oracles):
    s = SboParams(GParams(2, (0, 0), (4.6, -4.6)), 0, 0.3)
    assert specfun.norm_A(s) == pytest.approx(
        as_complex(oracles["norms"]["norm_A_n2_default"]))
    assert specfun.norm_B(s) == pytest.approx(
        as_complex(oracles["norms"]["norm_B_n2_default"]))

    s0 = SboParams(GParams(2, (0, 0), (0, 0)), 0, 0)
    assert specfun.norm_B(s0) == pytest.approx(math.pi)
    s1 = SboParams(GParams(2, (1, 0), (0, 0)), 0, 0)
    assert specfun.norm_B(s1) == pytest.approx(math.sqrt(math.pi))


def test_a_factor(oracles):
    assert specfun.a_factor(0, 0, 0, 2) == pytest.approx(
        as_complex(oracles["norms"]["a_factor_zero_n2"]))
    # exact evenness in nu (the two factors swap)
    rng = np.random.default_rng(3)
    for _ in range(20):
        mu = complex(rng.uniform(-0.4, 0.4))
        nu = complex(0, rng.uniform(-3, 3))
        d = int(rng.integers(0, 2))
        assert specfun.a_factor(d, mu, nu, 2) == specfun.a_factor(d, mu, -nu, 2)


def test_a_factor_is_norm_B_product():
    # a = norm_B(s) * norm_B(s with lam -> -lam, nu -> -nu); note the flip
    # negates the ordered pair (the component order is NOT reversed).
    # delta sits inside the Gamma arguments via [xi_i + eta], so the
    # realization must not cancel it mod 2 -- cover both parities.
    for (mu, nu, n, d) in [(0.2, 0.4j, 2, 0), (0.23, 0.4j, 2, 1),
                           (-0.31, 1.1j, 1, 1)]:
        s = SboParams(GParams(n, (d, d), (mu, -mu)), 0, nu)
        s_flip = SboParams(GParams(n, (d, d), (-mu, mu)), 0, -nu)
        prod = specfun.norm_B(s) * specfun.norm_B(s_flip)
        assert abs(prod - specfun.a_factor(d, mu, nu, n)) <= 1e-12 * abs(prod)
        four = (specfun.gamma((mu + nu + n / 2 + d) / 2)
                * specfun.gamma((mu - nu + n / 2 + d) / 2)
                * specfun.gamma((-mu + nu + n / 2 + d) / 2)
                * specfun.gamma((-mu - nu + n / 2 + d) / 2))
        assert abs(four - specfun.a_factor(d, mu, nu, n)) <= 1e-12 * abs(four)


def test_fe_constant_BT(oracles):
    s0 = SboParams(GParams(2, (0, 0), (0, 0)), 0, 0)
    assert specfun.fe_constant_BT(s0) == pytest.approx(
        as_complex(oracles["norms"]["fe_BT_n2_zero"]))
    s = SboParams(GParams(2, (0, 0), (4.6, -4.6)), 0, 0.3)
    assert specfun.fe_constant_BT(s) == pytest.approx(
        as_complex(oracles["norms"]["fe_BT_n2_default"]))
    # reciprocal-Gamma zero: lam2 - lam1 + n + [xi1+xi2] = 0
    sz = SboParams(GParams(2, (0, 0), (1, -1)), 0, 0)
    assert specfun.fe_constant_BT(sz) == 0


def test_signed_beta_frozen_values(oracles):
    for rec in oracles["signed_beta"]:
        got = specfun.signed_beta(
            as_complex(rec["a"]), rec["eps"], as_complex(rec["b"]), rec["delta"])
        want = as_complex(rec["value"])
        assert abs(got - want) <= 1e-12 * abs(want)


def test_signed_beta_rejects_outside_strip():
    with pytest.raises(DomainError):
        specfun.signed_beta(0.5, 0, 0.5, 0)  # boundary Re(a+b) = 1 diverges
    with pytest.raises(DomainError):
        specfun.signed_beta(-0.1, 0, 0.5, 0)
    with pytest.raises(DomainError):
        specfun.signed_beta(0.3, 0, 0.9, 0)


def test_signed_beta_against_quadrature():
    # property: agrees with direct adaptive quadrature of the defining
    # integral on random admissible samples.  Plain Gauss panels stall on the
    # t^(a-1) endpoint behaviour, so each singular endpoint gets a power
    # substitution t = (offset +-) w^8 that flattens it, and the far zones go
    # through t -> +-1/u first.
    from sbolab.quadrature import QuadSpec, integrate_1d

    rng = np.random.default_rng(17)
    spec = QuadSpec(order=20, max_depth=24, abs_tol=1e-12, rel_tol=1e-12)
    half = 0.5 ** 0.125  # w-coordinate of |t| = 1/2 under t = w^8
    checked = 0
    while checked < 12:
        a = complex(rng.uniform(0.3, 0.6), rng.uniform(-0.3, 0.3))
        b = complex(rng.uniform(0.3, 0.6), rng.uniform(-0.3, 0.3))
        if (a + b).real >= 0.8:
            continue
        eps = int(rng.integers(0, 2))
        delta = int(rng.integers(0, 2))

        def defining(t, a=a, b=b, eps=eps, delta=delta):
            t = np.asarray(t)
            sgn = np.where(t < 0, -1.0, 1.0) ** eps
            sgn1 = np.where(1 + t < 0, -1.0, 1.0) ** delta
            return (sgn * np.abs(t) ** complex(a - 1)
                    * sgn1 * np.abs(1 + t) ** complex(b - 1))

        se, sd = (-1.0) ** eps, (-1.0) ** delta

        # each substituted piece written directly in w so that no factor is
        # lost to floating-point absorption (1 - w^8 + 1 never cancels)
        def quad(g, hi=half):
            return integrate_1d(
                lambda w: g(np.asarray(w)), (0.0, hi), spec).value

        val = quad(lambda w: 8 * w ** (8 * a - 1)      # t = w^8 in (0, 1)
                   * (1.0 + w**8) ** (b - 1), 1.0)
        val += quad(lambda w: se * 8 * w ** (8 * a - 1)   # t = -w^8
                    * (1.0 - w**8) ** (b - 1))
        val += quad(lambda w: se * 8 * w ** (8 * b - 1)   # t = -1 + w^8
                    * (1.0 - w**8) ** (a - 1))
        val += quad(lambda w: se * sd * 8 * w ** (8 * b - 1)  # t = -1 - w^8
                    * (1.0 + w**8) ** (a - 1), 1.0)
        val += integrate_1d(defining, (1.0, 2.0), spec).value
        # far zones via t = sign/u, u = w^8
        val += quad(lambda w: 8 * w ** (7 - 8 * (a + b))
                    * (1.0 + w**8) ** (b - 1))
        val += quad(lambda w: se * sd * 8 * w ** (7 - 8 * (a + b))
                    * (1.0 - w**8) ** (b - 1))
        want = specfun.signed_beta(a, eps, b, delta)
        assert abs(val - want) <= 1e-8 * max(1.0, abs(want))
        checked += 1


def test_param_helpers():
    g = GParams(2, (3, 2), (1 + 2j, 0.5))
    assert g.xi == (1, 0)  # parities normalized mod 2
    assert g.rho == (1.0, -1.0)
    assert g.swapped().lam == (0.5, 1 + 2j)

    s = SboParams(GParams(2, (1, 0), (4.6, -4.6)), 1, 0.3)
    tb = s.target_B()
    assert tb.eta == (1, 1, 0)
    assert tb.nu == (4.6, 0.3, -4.6)
    ta = s.target_A()
    assert ta.eta == (0, 1, 1)
    assert ta.nu == (-4.6, 0.3, 4.6)

    h = HParams(2, (0, 1, 0), (1, 2, 3))
    assert h.swapped().nu == (3, 2, 1)

    sh = s.shifted(2, 4)
    assert sh.g.lam == (6.6, -8.6)
    assert sh.g.xi == (1, 0)  # parity shifts are mod 2
