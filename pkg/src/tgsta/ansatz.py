"""Variational ansatz profiles and the moment integrals entering the ramp formula.

Both profiles live in the scaled coordinate y = x / b of a trap with
omega^2 = 1:

* Gaussian:       phi(y) = sqrt(N) (2/pi)^(1/4) exp(-y^2)
* Thomas-Fermi:   phi(y) = ((2 mu - y^2 - gamma y^4) / pi^2)^(1/4) on its support

with moments W = int y^2 phi^2, F = int (phi')^2, J = int y^4 phi^2 and
K = int phi^6.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import ConfigError, ConvergenceError

QUAD_EPS = 1e-13


class Ansatz(str, enum.Enum):
    GAUSSIAN = "gaussian"
    THOMAS_FERMI = "tf"

    @classmethod
    def parse(cls, value) -> "Ansatz":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"g": cls.GAUSSIAN, "gauss": cls.GAUSSIAN, "gaussian": cls.GAUSSIAN,
                   "tf": cls.THOMAS_FERMI, "thomas_fermi": cls.THOMAS_FERMI,
                   "thomasfermi": cls.THOMAS_FERMI, "thomas-fermi": cls.THOMAS_FERMI}
        try:
            return aliases[key]
        except KeyError:
            raise ConfigError(f"unknown ansatz {value!r}") from None


@dataclass(frozen=True)
class AnsatzIntegrals:
    N: float
    mu: float
    W: float
    F: float
    J: float
    K: float
    ansatz: Ansatz
    gamma: float

    def __post_init__(self):
        if not (self.N > 0 and self.W > 0 and self.J >= 0 and self.K > 0):
            raise ConfigError(f"invalid ansatz integrals {self}")

    @property
    def drive(self) -> float:
        """F + pi^2 K / 3, the numerator constant of the ramp formula."""
        return self.F + np.pi ** 2 * self.K / 3.0


def gaussian_integrals(N: float, gamma: float = 0.0) -> AnsatzIntegrals:
    """Closed-form moments of the Gaussian ansatz (independent of gamma)."""
    if not N > 0:
        raise ConfigError(f"N must be positive, got {N}")
    return AnsatzIntegrals(
        N=float(N), mu=float("nan"),
        W=N / 4.0, F=float(N), J=3.0 * N / 16.0,
        K=2.0 * N ** 3 / (math.sqrt(3.0) * np.pi),
        ansatz=Ansatz.GAUSSIAN, gamma=float(gamma),
    )


def tf_radius(mu: float, gamma: float, omega_sq: float = 1.0) -> float:
    """Edge R of the Thomas-Fermi support: omega^2 (R^2 + gamma R^4) = 2 mu."""
    if mu <= 0:
        return 0.0
    a = 2.0 * mu / omega_sq
    # rationalised root of gamma R^4 + R^2 - a = 0, stable as gamma -> 0
    return math.sqrt(2.0 * a / (1.0 + math.sqrt(1.0 + 4.0 * gamma * a)))


def _quad(func, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(func, a, b, epsabs=0.0, epsrel=QUAD_EPS, limit=200, **kw)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature did not converge: {exc}") from exc
    if not np.isfinite(val) or err > 1e-9 * max(1.0, abs(val)):
        raise ConvergenceError(f"quadrature error estimate {err:.2e} too large (value {val:.6g})")
    return val


def _moment(R, gamma, omega_sq, power, weight_exp, prefactor):
    """prefactor * int_{-R}^{R} y^power (omega^2 (1 + gamma (R^2+y^2)))^{weight_exp} (R^2-y^2)^{weight_exp} dy."""
    def f(y):
        return y ** power * (omega_sq * (1.0 + gamma * (R * R + y * y))) ** weight_exp
    return prefactor * _quad(f, -R, R, weight="alg", wvar=(weight_exp, weight_exp))


def tf_particle_number(mu: float, gamma: float, omega_sq: float = 1.0) -> float:
    """N(mu) = (1/pi) int sqrt(2 mu - omega^2 (y^2 + gamma y^4)) dy over the support."""
    R = tf_radius(mu, gamma, omega_sq)
    if R == 0.0:
        return 0.0
    return _moment(R, gamma, omega_sq, 0, 0.5, 1.0 / np.pi)


def tf_chemical_potential(N: float, gamma: float, omega_sq: float = 1.0,
                          max_iter: int = 200) -> float:
    """Chemical potential of the Thomas-Fermi profile holding N particles.

    N(mu) is strictly increasing, so a bracket [0, mu_hi] is grown by
    doubling and the root refined by Brent's bracketing method.
    """
    if not N > 0:
        raise ConfigError(f"N must be positive, got {N}")
    if gamma < 0 or omega_sq <= 0:
        raise ConfigError(f"need gamma >= 0 and omega_sq > 0, got {gamma}, {omega_sq}")
    if gamma == 0.0:
        return N * math.sqrt(omega_sq)
    hi = max(N * math.sqrt(omega_sq), 1e-300)
    for _ in range(max_iter):
        if tf_particle_number(hi, gamma, omega_sq) >= N:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket the chemical potential")
    try:
        mu, info = optimize.brentq(lambda m: tf_particle_number(m, gamma, omega_sq) - N,
                                   0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                   maxiter=max_iter, full_output=True)
    except RuntimeError as exc:
        raise ConvergenceError(f"chemical potential search failed: {exc}") from exc
    if not info.converged:
        raise ConvergenceError("chemical potential search did not converge")
    return mu


def tf_kinetic_finite_part(R: float, gamma: float) -> float:
    """Hadamard finite part of int (phi_TF')^2 dy.

    With P(y) = 2 mu - y^2 - gamma y^4 = (R - y) Q(y) and
    Q(y) = (R + y)(1 + gamma (R^2 + y^2)), the integrand on [0, R] is
    m(y) (R - y)^{-3/2} with m = P'^2 / (16 pi Q^{3/2}) smooth and m(0) = 0.
    Integrating by parts discards only the pure edge divergence
    2 m(R) eps^{-1/2}, leaving -2 int_0^R m'(y) (R - y)^{-1/2} dy.
    """
    def dm(y):
        dp = -2.0 * y - 4.0 * gamma * y ** 3
        ddp = -2.0 - 12.0 * gamma * y * y
        s = 1.0 + gamma * (R * R + y * y)
        q = (R + y) * s
        dq = s + 2.0 * gamma * y * (R + y)
        return (2.0 * dp * ddp * q - 1.5 * dp * dp * dq) / (16.0 * np.pi * q ** 2.5)

    half = -2.0 * _quad(dm, 0.0, R, weight="alg", wvar=(0.0, -0.5))
    return 2.0 * half


def tf_integrals(N: float, gamma: float) -> AnsatzIntegrals:
    """Moments of the Thomas-Fermi ansatz at unit trap frequency.

    F diverges as an ordinary integral at the support edges and is taken as
    its finite part; at gamma = 0 the closed forms are W = N^2/2, J = N^3/2,
    K = 3 N^2 / (2 pi^2) and F = -1/4.
    """
    if gamma < 0:
        raise ConfigError(f"gamma must be >= 0, got {gamma}")
    mu = tf_chemical_potential(N, gamma)
    R = tf_radius(mu, gamma)
    W = _moment(R, gamma, 1.0, 2, 0.5, 1.0 / np.pi)
    J = _moment(R, gamma, 1.0, 4, 0.5, 1.0 / np.pi)
    K = _moment(R, gamma, 1.0, 0, 1.5, 1.0 / np.pi ** 3)
    F = tf_kinetic_finite_part(R, gamma)
    return AnsatzIntegrals(N=float(N), mu=mu, W=W, F=F, J=J, K=K,
                           ansatz=Ansatz.THOMAS_FERMI, gamma=float(gamma))


def ansatz_integrals(ansatz, N: float, gamma: float) -> AnsatzIntegrals:
    ansatz = Ansatz.parse(ansatz)
    if ansatz is Ansatz.GAUSSIAN:
        return gaussian_integrals(N, gamma)
    return tf_integrals(N, gamma)
