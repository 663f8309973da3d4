import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tgsta.ansatz import (Ansatz, AnsatzIntegrals, ansatz_integrals, gaussian_integrals,
                          tf_chemical_potential, tf_integrals, tf_particle_number, tf_radius)
from tgsta.errors import ConfigError
from tgsta.experiments import integral_slopes, integral_table, loglog_slope


def quad(f, a, b):
    val, _ = integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=500)
    return val


# ---------------------------------------------------------------- oracles

def gaussian_oracle(N):
    """Brute-force moments of phi = sqrt(N) (2/pi)^(1/4) exp(-y^2)."""
    c = math.sqrt(N) * (2 / math.pi) ** 0.25
    phi = lambda y: c * math.exp(-y * y)
    dphi = lambda y: -2 * y * phi(y)
    inf = np.inf
    return {"W": quad(lambda y: y * y * phi(y) ** 2, -inf, inf),
            "F": quad(lambda y: dphi(y) ** 2, -inf, inf),
            "J": quad(lambda y: y ** 4 * phi(y) ** 2, -inf, inf),
            "K": quad(lambda y: phi(y) ** 6, -inf, inf),
            "N": quad(lambda y: phi(y) ** 2, -inf, inf)}


def tf_oracle(N, gamma):
    """Plain (unweighted) quadrature of the TF profile moments."""
    mu = tf_chemical_potential(N, gamma)
    R = tf_radius(mu, gamma)
    rho = lambda y: math.sqrt(max(0.0, 2 * mu - y * y - gamma * y ** 4)) / math.pi
    return {"N": quad(rho, -R, R), "W": quad(lambda y: y * y * rho(y), -R, R),
            "J": quad(lambda y: y ** 4 * rho(y), -R, R),
            "K": quad(lambda y: rho(y) ** 3, -R, R)}


def tf_F_by_cutoff(N, gamma):
    """Finite part of int (phi')^2 via a symmetric cutoff eps at the edges.

    The cut integral behaves as 2 c eps^(-1/2) + FP + a1 eps^(1/2) + a3 eps^(3/2) + ...
    with c = |P'(R)|^(1/2) / (16 pi); subtract the divergence and extrapolate.
    """
    mu = tf_chemical_potential(N, gamma)
    R = tf_radius(mu, gamma)
    # P(y) = 2 mu - y^2 - gamma y^4 = (R - y) Q(y); the factored form avoids cancellation near R
    Q = lambda y: (R + y) * (1 + gamma * (R * R + y * y))
    dP = lambda y: -2 * y - 4 * gamma * y ** 3
    c = math.sqrt(abs(dP(R))) / (16 * math.pi)

    def cut(eps):
        # u = R - y = exp(s), integrate y in [0, R - eps]
        def g(s):
            u = math.exp(s)
            return dP(R - u) ** 2 / (16 * math.pi * (u * Q(R - u)) ** 1.5) * u
        return quad(g, math.log(eps), math.log(R))

    eps = np.geomspace(1e-3, 1e-7, 9)
    s = np.sqrt(eps)
    vals = np.array([cut(e) - 2 * c / math.sqrt(e) for e in eps])
    A = np.column_stack([np.ones_like(s), s, s ** 3, s ** 5])
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    return 2 * coef[0]


# ---------------------------------------------------------------- Gaussian

def test_gaussian_unit_values():
    I = gaussian_integrals(1)
    assert (I.W, I.F, I.J) == (0.25, 1.0, 0.1875)
    assert I.K == pytest.approx(0.3676, abs=1e-4)


@pytest.mark.parametrize("N", [1, 2.5, 10, 30])
def test_gaussian_matches_quadrature(N):
    I = gaussian_integrals(N)
    ref = gaussian_oracle(N)
    assert ref["N"] == pytest.approx(N, rel=1e-10)
    for key in "WFJK":
        assert getattr(I, key) == pytest.approx(ref[key], rel=1e-8)


def test_gaussian_scaling():
    assert gaussian_integrals(4).K / gaussian_integrals(2).K == pytest.approx(8.0, rel=1e-14)
    rows = integral_table(range(2, 31), 0.25, "gaussian")
    s = integral_slopes(rows)
    for key, target in (("W", 1), ("F", 1), ("J", 1), ("K", 3)):
        assert abs(s[key] - target) < 0.01


def test_gaussian_rejects_nonpositive_N():
    with pytest.raises(ConfigError):
        gaussian_integrals(0)


# ---------------------------------------------------------------- chemical potential

def test_mu_harmonic_closed_form():
    assert tf_chemical_potential(10, 0.0) == 10.0
    assert tf_radius(10.0, 0.0) == pytest.approx(math.sqrt(20), rel=1e-15)
    assert tf_particle_number(10.0, 0.0) == pytest.approx(10.0, rel=1e-12)
    assert tf_chemical_potential(3, 0.0, omega_sq=4.0) == pytest.approx(6.0)


def test_mu_small_N_limit():
    mus = [tf_chemical_potential(n, 0.25) for n in (1e-2, 1e-4, 1e-6)]
    assert mus[0] > mus[1] > mus[2] > 0
    assert mus[2] < 1e-5


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.1, max_value=200), st.floats(min_value=0.0, max_value=2.0))
def test_mu_inverts_particle_number(N, gamma):
    mu = tf_chemical_potential(N, gamma)
    assert tf_particle_number(mu, gamma) == pytest.approx(N, rel=1e-10)
    assert tf_oracle(N, gamma)["N"] == pytest.approx(N, rel=1e-8)


def test_mu_rejects_bad_input():
    with pytest.raises(ConfigError):
        tf_chemical_potential(-1, 0.0)
    with pytest.raises(ConfigError):
        tf_chemical_potential(1, -0.1)


# ---------------------------------------------------------------- Thomas-Fermi moments

def test_tf_harmonic_values_N10():
    I = tf_integrals(10, 0.0)
    assert I.W == pytest.approx(50.0, rel=1e-12)
    assert I.J == pytest.approx(500.0, rel=1e-12)
    assert I.K == pytest.approx(15.198, abs=1e-3)
    assert I.K == pytest.approx(3 * 100 / (2 * np.pi ** 2), rel=1e-12)
    assert I.F == pytest.approx(-0.25, abs=1e-12)


@pytest.mark.parametrize("N", [1, 7, 30, 100])
def test_tf_harmonic_closed_forms(N):
    I = tf_integrals(N, 0.0)
    assert I.W == pytest.approx(N ** 2 / 2, rel=1e-12)
    assert I.J == pytest.approx(N ** 3 / 2, rel=1e-12)
    assert I.K / I.W == pytest.approx(3 / np.pi ** 2, rel=1e-12)
    assert I.F == pytest.approx(-0.25, rel=1e-10)


def test_paper_printed_harmonic_constants_are_off_by_sqrt2():
    # Printed: W = N^2/(2 sqrt2), K = 3 N^2 / (pi^2 sqrt2), F = -1/(2 sqrt2).
    # Direct quadrature disagrees by sqrt(2) factors, and the printed K/W = 6/pi^2
    # would break the reduction to the Ermakov ramp, which needs K/W = 3/pi^2.
    N = 10
    I = tf_integrals(N, 0.0)
    printed = {"W": N ** 2 / (2 * math.sqrt(2)), "K": 3 * N ** 2 / (np.pi ** 2 * math.sqrt(2)),
               "F": -1 / (2 * math.sqrt(2))}
    assert I.W / printed["W"] == pytest.approx(math.sqrt(2), rel=1e-12)
    assert I.K / printed["K"] == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    assert I.F / printed["F"] == pytest.approx(1 / math.sqrt(2), rel=1e-10)
    assert printed["K"] / printed["W"] == pytest.approx(6 / np.pi ** 2)
    assert I.K / I.W == pytest.approx(3 / np.pi ** 2)


@pytest.mark.parametrize("N,gamma", [(2, 0.25), (10, 0.25), (30, 0.25), (30, 1.0), (5, 0.0)])
def test_tf_moments_match_plain_quadrature(N, gamma):
    I = tf_integrals(N, gamma)
    ref = tf_oracle(N, gamma)
    for key in "WJK":
        assert getattr(I, key) == pytest.approx(ref[key], rel=1e-8)


@pytest.mark.parametrize("N,gamma", [(10, 0.0), (2, 0.25), (30, 0.25), (30, 1.0)])
def test_tf_finite_part_matches_cutoff_extrapolation(N, gamma):
    F = tf_integrals(N, gamma).F
    assert F == pytest.approx(tf_F_by_cutoff(N, gamma), rel=1e-7, abs=1e-9)


def test_tf_slopes_anharmonic():
    rows = integral_table(np.arange(10, 101, 5), 0.25, "tf")
    s = integral_slopes(rows)
    assert abs(s["W"] - 1.745) < 0.1
    assert abs(s["K"] - 2.285) < 0.1
    assert abs(s["J"] - 2.458) < 0.1


def test_tf_slopes_harmonic():
    s = integral_slopes(integral_table(range(2, 31), 0.0, "tf"))
    assert s["W"] == pytest.approx(2.0, abs=1e-10)
    assert s["J"] == pytest.approx(3.0, abs=1e-10)
    assert s["K"] == pytest.approx(2.0, abs=1e-10)


def test_loglog_slope_exact_power():
    x = np.array([1.0, 2.0, 5.0, 9.0])
    assert loglog_slope(x, 3 * x ** 1.7) == pytest.approx(1.7, abs=1e-12)


def test_tf_drive_positive():
    for N in (1, 2, 10, 30):
        for gamma in (0.0, 0.25, 1.0):
            assert tf_integrals(N, gamma).drive > 0


# ---------------------------------------------------------------- misc

def test_ansatz_parse():
    assert Ansatz.parse("G") is Ansatz.GAUSSIAN
    assert Ansatz.parse("thomas-fermi") is Ansatz.THOMAS_FERMI
    assert Ansatz.parse(Ansatz.GAUSSIAN) is Ansatz.GAUSSIAN
    with pytest.raises(ConfigError):
        Ansatz.parse("lorentzian")


def test_ansatz_integrals_dispatch_and_validation():
    assert ansatz_integrals("gaussian", 3, 0.5).ansatz is Ansatz.GAUSSIAN
    assert ansatz_integrals("tf", 3, 0.5).ansatz is Ansatz.THOMAS_FERMI
    with pytest.raises(ConfigError):
        AnsatzIntegrals(N=1, mu=1, W=-1, F=0, J=0, K=1, ansatz=Ansatz.GAUSSIAN, gamma=0)
