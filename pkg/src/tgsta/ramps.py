"""Trap-frequency schedules built from a quintic scaling polynomial b(t).

Three schedules share the same b(t):

* ``ermakov``      omega^2 = omega0^2 / b^4 - b'' / b              (harmonic, exact)
* ``variational``  omega^2 = [(F + pi^2 K / 3) - b'' b^3 W] / (b^4 [W + 2 b^2 gamma J])
* ``reference``    either of the above with the b'' term dropped

Schedules carry omega^2, never omega: fast ramps pass through expulsive
(negative omega^2) stretches, which are kept as they are.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize

from .ansatz import Ansatz, AnsatzIntegrals, ansatz_integrals
from .errors import ConfigError, ConvergenceError


class RampKind(str, enum.Enum):
    ERMAKOV = "ermakov"
    VARIATIONAL = "variational"
    REFERENCE = "reference"


@dataclass(frozen=True)
class TrapSpec:
    """V(x, t) = 0.5 omega^2(t) (x^2 + gamma x^4), driven from omega0^2 to omegaf^2 in t_f."""

    omega0_sq: float = 1.0
    omegaf_sq: float = 10.0
    gamma: float = 0.0
    t_f: float = 1.0

    def __post_init__(self):
        for name in ("omega0_sq", "omegaf_sq", "t_f"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigError(f"{name} must be positive and finite, got {val!r}")
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise ConfigError(f"gamma must be >= 0, got {self.gamma!r}")


@dataclass(frozen=True)
class ScalingPoly:
    """b(t) = b0 + (bf - b0) (10 s^3 - 15 s^4 + 6 s^5), s = t / t_f.

    The unique quintic with b(0) = b0, b(t_f) = bf and vanishing first and
    second derivatives at both ends.
    """

    b0: float
    bf: float
    t_f: float

    @property
    def coefficients(self) -> np.ndarray:
        """a_0..a_5 of b(t) = sum a_i t^i."""
        d, T = self.bf - self.b0, self.t_f
        return np.array([self.b0, 0.0, 0.0, 10 * d / T ** 3, -15 * d / T ** 4, 6 * d / T ** 5])

    def _s(self, t):
        return np.asarray(t, dtype=float) / self.t_f

    def b(self, t):
        s = self._s(t)
        return self.b0 + (self.bf - self.b0) * s ** 3 * (10 - 15 * s + 6 * s * s)

    def b_dot(self, t):
        s = self._s(t)
        return (self.bf - self.b0) * 30 * s * s * (1 - s) ** 2 / self.t_f

    def b_ddot(self, t):
        s = self._s(t)
        return (self.bf - self.b0) * 60 * s * (1 - s) * (1 - 2 * s) / self.t_f ** 2

    def minimum(self) -> float:
        # b is monotone between its end values
        return min(self.b0, self.bf)


def build_scaling_poly(b0: float, bf: float, t_f: float) -> ScalingPoly:
    if not (b0 > 0 and bf > 0 and t_f > 0):
        raise ConfigError(f"need b0, bf, t_f > 0, got {b0}, {bf}, {t_f}")
    return ScalingPoly(float(b0), float(bf), float(t_f))


@dataclass(frozen=True)
class RampSchedule:
    kind: RampKind
    trap: TrapSpec
    poly: ScalingPoly
    integrals: AnsatzIntegrals | None = None

    @property
    def t_f(self) -> float:
        return self.trap.t_f

    def omega_sq(self, t):
        """Squared trap frequency at time(s) t, evaluated analytically."""
        p = self.poly
        b = p.b(t)
        include_bdd = self.kind is not RampKind.REFERENCE
        bdd = p.b_ddot(t) if include_bdd else 0.0
        if self.integrals is None:
            return self.trap.omega0_sq / b ** 4 - bdd / b
        I = self.integrals
        num = I.drive - bdd * b ** 3 * I.W
        return num / (b ** 4 * (I.W + 2.0 * b * b * self.trap.gamma * I.J))

    __call__ = omega_sq

    def sample(self, n: int = 1001) -> dict:
        t = np.linspace(0.0, self.t_f, n)
        return {"t": t, "b": self.poly.b(t), "b_dot": self.poly.b_dot(t),
                "b_ddot": self.poly.b_ddot(t), "omega_sq": self.omega_sq(t)}

    def extreme_omega_sq(self, n: int = 4001) -> float:
        """max_t |omega^2(t)| from dense sampling."""
        t = np.linspace(0.0, self.t_f, n)
        return float(np.max(np.abs(self.omega_sq(t))))

    def metadata(self) -> dict:
        I = self.integrals
        return {
            "kind": self.kind.value,
            "N": I.N if I is not None else "",
            "gamma": self.trap.gamma,
            "t_f": self.trap.t_f,
            "omega0_sq": self.trap.omega0_sq,
            "omegaf_sq": self.trap.omegaf_sq,
            "ansatz": I.ansatz.value if I is not None else "",
            "b0": self.poly.b0,
            "bf": self.poly.bf,
        }


def harmonic_boundary_b(trap: TrapSpec) -> tuple[float, float]:
    return 1.0, (trap.omega0_sq / trap.omegaf_sq) ** 0.25


def ermakov_ramp(trap: TrapSpec) -> RampSchedule:
    if trap.gamma != 0:
        raise ConfigError("the Ermakov ramp is only defined for a harmonic trap (gamma = 0)")
    b0, bf = harmonic_boundary_b(trap)
    return RampSchedule(RampKind.ERMAKOV, trap, build_scaling_poly(b0, bf, trap.t_f))


def boundary_poly(b: float, omega_sq: float, integrals: AnsatzIntegrals, gamma: float) -> float:
    """2 gamma J b^6 + W b^4 - (F + pi^2 K / 3) / omega^2."""
    I = integrals
    return 2.0 * gamma * I.J * b ** 6 + I.W * b ** 4 - I.drive / omega_sq


def _solve_boundary(omega_sq, integrals, gamma, label):
    I = integrals
    c = I.drive / omega_sq
    if not c > 0:
        raise ConvergenceError(
            f"no positive root for b at the {label} endpoint: F + pi^2 K/3 = {I.drive:.6g} <= 0")
    # cubic in u = b^2 with positive coefficients: unique positive root below both bounds
    hi = math.sqrt(c / I.W)
    if gamma == 0.0:
        return math.sqrt(hi)
    hi = min(hi, (c / (2.0 * gamma * I.J)) ** (1.0 / 3.0)) if I.J > 0 else hi

    def cubic(u):
        return 2.0 * gamma * I.J * u ** 3 + I.W * u * u - c

    u = optimize.brentq(cubic, 0.0, hi * (1 + 1e-12), xtol=1e-300, rtol=4 * np.finfo(float).eps)
    b = math.sqrt(u)
    for _ in range(3):
        f = boundary_poly(b, omega_sq, I, gamma)
        df = 12.0 * gamma * I.J * b ** 5 + 4.0 * I.W * b ** 3
        b -= f / df
    return b


def boundary_b(trap: TrapSpec, integrals: AnsatzIntegrals) -> tuple[float, float]:
    """Scaling factors (b0, bf) at which the ansatz is stationary in the initial and final traps."""
    b0 = _solve_boundary(trap.omega0_sq, integrals, trap.gamma, "initial")
    bf = _solve_boundary(trap.omegaf_sq, integrals, trap.gamma, "final")
    return b0, bf


def variational_ramp(trap: TrapSpec, ansatz="tf", N: float = 30,
                     integrals: AnsatzIntegrals | None = None) -> RampSchedule:
    if integrals is None:
        integrals = ansatz_integrals(ansatz, N, trap.gamma)
    b0, bf = boundary_b(trap, integrals)
    return RampSchedule(RampKind.VARIATIONAL, trap, build_scaling_poly(b0, bf, trap.t_f), integrals)


def reference_ramp(trap: TrapSpec, N: float | None = None, ansatz="tf",
                   integrals: AnsatzIntegrals | None = None) -> RampSchedule:
    """Adiabatic-limit schedule: the STA formula with b'' set to zero.

    In a harmonic trap with no particle number given this is
    omega0^2 / b^4 with the harmonic end values of b. Otherwise the ansatz
    integrals define the stationary relation between b and omega^2.
    """
    if integrals is None and N is not None:
        integrals = ansatz_integrals(ansatz, N, trap.gamma)
    if integrals is None:
        if trap.gamma != 0:
            raise ConfigError("an anharmonic reference ramp needs N (or ansatz integrals)")
        b0, bf = harmonic_boundary_b(trap)
    else:
        b0, bf = boundary_b(trap, integrals)
    return RampSchedule(RampKind.REFERENCE, trap, build_scaling_poly(b0, bf, trap.t_f), integrals)


def make_ramp(kind, trap: TrapSpec, N: float | None = None, ansatz="tf") -> RampSchedule:
    """Dispatch on a ramp name: ``sta``/``ermakov``, ``tf``, ``gaussian``/``g``, ``ref``."""
    key = str(getattr(kind, "value", kind)).lower()
    if key in ("sta", "ermakov"):
        return ermakov_ramp(trap)
    if key in ("ref", "reference"):
        return reference_ramp(trap, N=None if trap.gamma == 0 and N is None else N, ansatz=ansatz)
    if key == "variational":
        return variational_ramp(trap, ansatz, N)
    if key in ("tf", "gaussian", "g"):
        return variational_ramp(trap, Ansatz.parse(key), N)
    raise ConfigError(f"unknown ramp kind {kind!r}")


def write_ramp_csv(path, schedule: RampSchedule, n: int = 1001):
    path = Path(path)
    data = schedule.sample(n)
    cols = ["t", "b", "b_dot", "b_ddot", "omega_sq"]
    with path.open("w") as fh:
        for key, val in schedule.metadata().items():
            fh.write(f"# {key}: {val}\n")
        fh.write(",".join(cols) + "\n")
        np.savetxt(fh, np.column_stack([data[c] for c in cols]), delimiter=",", fmt="%.17g")
    return path
