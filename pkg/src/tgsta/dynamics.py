"""Ground states and real-time propagation for the quintic mean-field equation
and for the N single-particle orbitals of the Tonks-Girardeau gas.

Both models are advanced with second-order Strang splitting on the periodic
grid: a half step of potential phase evaluated at the step midpoint, a full
kinetic step in Fourier space, and a second potential half step.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft
from scipy import linalg

from .ansatz import tf_chemical_potential
from .errors import ConfigError, ConvergenceError
from .grid import ComplexField, SpatialGrid, check_resolution
from .ramps import RampKind, RampSchedule, TrapSpec, build_scaling_poly

log = logging.getLogger(__name__)

QUINTIC = np.pi ** 2 / 2.0
DT_CAP = 1e-3
STEPS_PER_RAMP = 2000
KINETIC_PHASE = 0.1          # kinetic phase per step at the resolved band edge, in units of pi/2
POTENTIAL_PHASE = 0.5        # max potential phase per step inside the occupied region
OCCUPIED_TAIL = 1e-10        # mass fraction outside the "occupied" region / band


class Model(str, enum.Enum):
    QUINTIC = "quintic"
    SINGLE_PARTICLE = "single_particle"


def trap_potential(grid: SpatialGrid, omega_sq: float, gamma: float) -> np.ndarray:
    x2 = grid.x ** 2
    return 0.5 * omega_sq * (x2 + gamma * x2 * x2)


def static_schedule(omega_sq: float, gamma: float, t_f: float) -> RampSchedule:
    """A schedule holding omega^2 fixed for a time t_f."""
    trap = TrapSpec(omega_sq, omega_sq, gamma, t_f)
    return RampSchedule(RampKind.REFERENCE, trap, build_scaling_poly(1.0, 1.0, t_f))


@dataclass(frozen=True)
class MeanFieldState:
    field: ComplexField
    N: float
    t: float = 0.0

    @property
    def grid(self) -> SpatialGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values


@dataclass(frozen=True, eq=False)
class OrbitalSet:
    """N single-particle orbitals stored as rows of a read-only (N, n_points) array."""

    grid: SpatialGrid
    values: np.ndarray
    t: float = 0.0
    energies: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, ndmin=2)
        if v.shape[1] != self.grid.n_points:
            raise ConfigError(f"orbital array has shape {v.shape}, grid has {self.grid.n_points} points")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def orbitals(self) -> list[ComplexField]:
        return [ComplexField(self.grid, row) for row in self.values]

    def gram(self) -> np.ndarray:
        return self.grid.dx * (self.values.conj() @ self.values.T)

    def gram_error(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.N))))


# ---------------------------------------------------------------- energies

def _kinetic(values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """0.5 int |psi'|^2 for each row, via Parseval."""
    spec = np.abs(sfft.fft(np.atleast_2d(values), axis=1)) ** 2
    return 0.5 * grid.dx / grid.n_points * (spec @ grid.k ** 2)


def mf_energy(psi: np.ndarray | ComplexField | MeanFieldState, grid: SpatialGrid | None = None,
              omega_sq: float = 1.0, gamma: float = 0.0) -> float:
    """E = int [ |psi'|^2 / 2 + V |psi|^2 + pi^2 |psi|^6 / 6 ] dx."""
    psi, grid = _raw(psi, grid)
    rho = np.abs(psi) ** 2
    V = trap_potential(grid, omega_sq, gamma)
    pot = grid.dx * np.sum(V * rho + np.pi ** 2 / 6.0 * rho ** 3)
    return float(_kinetic(psi, grid)[0] + pot)


def orbital_energy(orbitals: OrbitalSet, omega_sq: float = 1.0, gamma: float = 0.0) -> float:
    """Total single-particle energy sum_j <phi_j| -d^2/2 + V |phi_j>."""
    grid = orbitals.grid
    V = trap_potential(grid, omega_sq, gamma)
    pot = grid.dx * np.sum(np.abs(orbitals.values) ** 2 @ V)
    return float(np.sum(_kinetic(orbitals.values, grid)) + pot)


def _raw(psi, grid):
    if isinstance(psi, MeanFieldState):
        psi = psi.field
    if isinstance(psi, ComplexField):
        return psi.values, psi.grid
    if grid is None:
        raise ConfigError("a raw array needs its grid")
    return np.asarray(psi), grid


# ---------------------------------------------------------------- ground states

def tf_guess(grid: SpatialGrid, N: float, omega_sq: float, gamma: float) -> np.ndarray:
    mu = tf_chemical_potential(N, gamma, omega_sq)
    x2 = grid.x ** 2
    rho = np.sqrt(np.maximum(0.0, 2.0 * mu - omega_sq * (x2 + gamma * x2 * x2))) / np.pi
    psi = np.sqrt(rho).astype(complex)
    return psi * math.sqrt(N / (grid.dx * np.sum(rho)))


def ground_state_mf(grid: SpatialGrid, N: float, omega_sq: float = 1.0, gamma: float = 0.0,
                    dtaus=(1e-2, 1e-3), tol: float = 1e-12, max_steps: int = 200_000,
                    check_every: int = 10, newton_tol: float = 1e-11, max_newton: int = 20,
                    history: list | None = None) -> MeanFieldState:
    """Mean-field ground state: imaginary-time relaxation, then Newton polishing.

    The Thomas-Fermi profile seeds imaginary-time split-step evolution on a
    ladder of steps ``dtaus``, renormalising to N after every step; each
    rung stops once the energy changes by less than ``tol`` (relative) per
    step. Steps are capped at 0.5 / mu_TF to keep the iteration stable.
    Energies sampled along the way are appended to ``history``.

    The split-step fixed point is biased by O(dtau^2), so the result is
    refined by Newton iterations on the discrete stationary problem
    (T + V + pi^2 psi^4 / 2 - mu) psi = 0 with dx sum psi^2 = N, until the
    residual norm falls below ``newton_tol`` * mu * sqrt(N).
    """
    if not N > 0:
        raise ConfigError(f"N must be positive, got {N}")
    if omega_sq <= 0:
        raise ConfigError("the ground state needs a confining trap (omega_sq > 0)")
    V = trap_potential(grid, omega_sq, gamma)
    k2 = grid.k ** 2
    psi = tf_guess(grid, N, omega_sq, gamma)
    # the explicit density feedback exp(-pi^2 rho^2 dtau / 2) overshoots unless dtau * mu < 1
    dtau_max = 0.5 / tf_chemical_potential(N, gamma, omega_sq)
    dtaus = sorted({min(d, dtau_max) for d in dtaus}, reverse=True)
    steps = 0
    energy = mf_energy(psi, grid, omega_sq, gamma)
    if history is not None:
        history.append(energy)
    for dtau in dtaus:
        kin = np.exp(-0.5 * k2 * dtau)
        converged = False
        while steps < max_steps:
            for _ in range(check_every):
                psi = psi * np.exp(-0.5 * dtau * (V + QUINTIC * np.abs(psi) ** 4))
                psi = sfft.ifft(kin * sfft.fft(psi))
                psi = psi * np.exp(-0.5 * dtau * (V + QUINTIC * np.abs(psi) ** 4))
                psi *= math.sqrt(N / (grid.dx * np.sum(np.abs(psi) ** 2)))
            steps += check_every
            new = mf_energy(psi, grid, omega_sq, gamma)
            if history is not None:
                history.append(new)
            change = abs(new - energy) / (check_every * abs(new))
            energy = new
            if change < tol:
                converged = True
                break
        if not converged:
            raise ConvergenceError(f"imaginary-time evolution not converged after {steps} steps")
    psi = _newton_polish(np.abs(psi), grid, N, V, newton_tol, max_newton)
    psi = np.abs(psi).astype(complex)
    log.debug("mean-field ground state: N=%g after %d imaginary-time steps", N, steps)
    return MeanFieldState(ComplexField(grid, psi), float(N), 0.0)


def _newton_polish(psi, grid, N, V, tol, max_iter):
    """Bordered Newton solve for a real stationary state of fixed norm."""
    n = grid.n_points
    T = kinetic_matrix(grid)
    scale = None
    for _ in range(max_iter):
        h_psi = T @ psi + (V + QUINTIC * psi ** 4) * psi
        mu = float(psi @ h_psi / (psi @ psi))
        res = h_psi - mu * psi
        if scale is None:
            scale = abs(mu) * math.sqrt(N)
        if math.sqrt(grid.dx * res @ res) < tol * scale:
            return psi
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = T
        J[np.arange(n), np.arange(n)] += V + 5.0 * QUINTIC * psi ** 4 - mu
        J[:n, n] = -psi
        J[n, :n] = 2.0 * grid.dx * psi
        rhs = -np.concatenate([res, [grid.dx * psi @ psi - N]])
        try:
            step = linalg.solve(J, rhs, assume_a="gen", check_finite=False)
        except linalg.LinAlgError as exc:
            raise ConvergenceError(f"Newton polish failed: {exc}") from exc
        psi = psi + step[:n]
    raise ConvergenceError(f"Newton polish did not reach residual {tol:g} in {max_iter} iterations")


def kinetic_matrix(grid: SpatialGrid) -> np.ndarray:
    """Dense Fourier-spectral matrix of -d^2/dx^2 / 2 (real symmetric circulant)."""
    col = sfft.ifft(0.5 * grid.k ** 2).real
    return linalg.circulant(col)


def ground_orbitals(grid: SpatialGrid, N: int, omega_sq: float = 1.0, gamma: float = 0.0,
                    check: bool = True) -> OrbitalSet:
    """The N lowest eigenstates of -d^2/2 + V by dense diagonalisation.

    Orbitals are real, normalised on the grid and sign-fixed so that their
    leftmost lobe is positive.
    """
    N = int(N)
    if N < 1 or N > grid.n_points:
        raise ConfigError(f"need 1 <= N <= n_points, got {N}")
    H = kinetic_matrix(grid)
    H[np.diag_indices_from(H)] += trap_potential(grid, omega_sq, gamma)
    try:
        evals, evecs = linalg.eigh(H, subset_by_index=[0, N - 1], driver="evr")
    except (linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"eigen-solver failed: {exc}") from exc
    phis = evecs.T / math.sqrt(grid.dx)
    for row in phis:
        amp = np.abs(row)
        lead = np.argmax(amp > 1e-2 * amp.max())
        if row[lead] < 0:
            row *= -1.0
    if check:
        check_resolution(phis, grid, what=f"ground orbitals (N={N})")
    return OrbitalSet(grid, phis.astype(complex), 0.0, energies=evals)


# ---------------------------------------------------------------- propagation

def _occupied_radius(values: np.ndarray, grid: SpatialGrid) -> float:
    rho = np.sum(np.abs(np.atleast_2d(values)) ** 2, axis=0)
    order = np.argsort(np.abs(grid.x))[::-1]          # outermost first
    outside = np.cumsum(rho[order]) / rho.sum()
    idx = np.searchsorted(outside, OCCUPIED_TAIL)
    return float(abs(grid.x[order[min(idx, len(order) - 1)]]))


def _occupied_wavenumber(values: np.ndarray, grid: SpatialGrid) -> float:
    spec = np.sum(np.abs(sfft.fft(np.atleast_2d(values), axis=1)) ** 2, axis=0)
    order = np.argsort(np.abs(grid.k))[::-1]
    outside = np.cumsum(spec[order]) / spec.sum()
    idx = np.searchsorted(outside, OCCUPIED_TAIL)
    return float(max(abs(grid.k[order[min(idx, len(order) - 1)]]), grid.k[1]))


def time_step(schedule: RampSchedule, grid: SpatialGrid, values: np.ndarray,
              model=Model.SINGLE_PARTICLE, safety: float = 1.0) -> float:
    """Step size for propagating ``values`` under ``schedule``.

    Always dt <= min(1e-3, t_f / 2000), with the potential phase per step
    kept below 0.5 over the region the state occupies (x_edge, measured on
    the initial state and stretched by the expansion ratio of b(t)).

    The kinetic bound depends on the model. The quintic equation couples
    all grid modes, and split-step Fourier becomes parametrically unstable
    once k^2 dt / 2 nears pi anywhere on the grid, so it uses
    dt <= 0.1 dx^2 / pi * safety. The linear orbital equations are exactly
    unitary mode by mode; only the band the state occupies (k_edge,
    stretched by the compression ratio) needs resolving, so
    dt <= 0.1 pi / k_edge^2 * safety.
    """
    model = Model(model)
    p = schedule.poly
    b_start, b_lo, b_hi = p.b0, p.minimum(), max(p.b0, p.bf)
    x_edge = _occupied_radius(values, grid) * max(1.0, b_hi / b_start)
    gamma = schedule.trap.gamma
    dt_pot = POTENTIAL_PHASE / (schedule.extreme_omega_sq() * (x_edge ** 2 + gamma * x_edge ** 4))
    if model is Model.QUINTIC:
        dt_kin = KINETIC_PHASE * grid.dx ** 2 / np.pi * safety
    else:
        k_edge = _occupied_wavenumber(values, grid) * max(1.0, b_start / b_lo)
        dt_kin = KINETIC_PHASE * np.pi / k_edge ** 2 * safety
    return min(DT_CAP, schedule.t_f / STEPS_PER_RAMP, dt_kin, dt_pot)


@dataclass
class Propagator:
    """Strang split-step integrator for one model under one schedule."""

    grid: SpatialGrid
    schedule: RampSchedule
    dt: float
    model: Model = Model.SINGLE_PARTICLE
    monitor_every: int = 1000
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        self.model = Model(self.model)
        self._x2 = self.grid.x ** 2
        self._quartic = self.schedule.trap.gamma * self._x2 * self._x2

    def potential(self, t: float) -> np.ndarray:
        return 0.5 * float(self.schedule.omega_sq(t)) * (self._x2 + self._quartic)

    def run(self, values: np.ndarray, t0: float = 0.0, t1: float | None = None,
            snapshot=None, snapshot_every: int = 0) -> np.ndarray:
        t1 = self.schedule.t_f if t1 is None else t1
        n_steps = max(1, int(math.ceil((t1 - t0) / self.dt - 1e-9)))
        dt = (t1 - t0) / n_steps
        kin = np.exp(-0.5j * dt * self.grid.k ** 2)
        psi = np.array(values, dtype=complex)
        quintic = self.model is Model.QUINTIC
        check_resolution(psi, self.grid, what="initial state")
        if snapshot is not None and snapshot_every:
            snapshot(t0, psi)
        for step in range(n_steps):
            t = t0 + step * dt
            v = self.potential(t + 0.5 * dt)
            if quintic:
                psi = _phase_kick(psi, v, -0.5 * dt)
                psi = sfft.ifft(kin * sfft.fft(psi, overwrite_x=True), overwrite_x=True)
                psi = _phase_kick(psi, v, -0.5 * dt)
            else:
                th = -0.5 * dt * v
                half = np.cos(th) + 1j * np.sin(th)
                psi *= half
                psi = sfft.ifft(kin * sfft.fft(psi, axis=-1, overwrite_x=True), axis=-1,
                                overwrite_x=True)
                psi *= half
            if self.monitor_every and (step + 1) % self.monitor_every == 0:
                check_resolution(psi, self.grid, what=f"state at t={t + dt:.6g}")
            if snapshot is not None and snapshot_every and (step + 1) % snapshot_every == 0:
                snapshot(t + dt, psi)
        edge, tail = check_resolution(psi, self.grid, what=f"final state at t={t1:.6g}")
        self.stats.update(n_steps=n_steps, dt=dt, edge_mass=edge, spectral_tail=tail)
        return psi


def _phase_kick(psi, v, tau):
    """psi * exp(i tau (v + pi^2 |psi|^4 / 2)), in place; |psi| is unchanged by the kick."""
    rho = psi.real * psi.real + psi.imag * psi.imag
    th = tau * (v + QUINTIC * rho * rho)
    psi *= np.cos(th) + 1j * np.sin(th)
    return psi


def _resolve_dt(schedule, grid, values, dt, safety, model):
    if dt is None:
        return time_step(schedule, grid, values, model, safety)
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    return float(dt)


def evolve_mf(state: MeanFieldState, schedule: RampSchedule, dt: float | None = None,
              safety: float = 1.0, snapshot=None, snapshot_every: int = 0,
              stats: dict | None = None) -> MeanFieldState:
    grid = state.grid
    dt = _resolve_dt(schedule, grid, state.values, dt, safety, Model.QUINTIC)
    prop = Propagator(grid, schedule, dt, Model.QUINTIC)
    psi = prop.run(state.values, snapshot=snapshot, snapshot_every=snapshot_every)
    if stats is not None:
        stats.update(prop.stats)
    return MeanFieldState(ComplexField(grid, psi), state.N, schedule.t_f)


def evolve_orbitals(orbitals: OrbitalSet, schedule: RampSchedule, dt: float | None = None,
                    safety: float = 1.0, snapshot=None, snapshot_every: int = 0,
                    stats: dict | None = None) -> OrbitalSet:
    """Propagate every orbital under the same schedule; no re-orthogonalisation is done."""
    grid = orbitals.grid
    dt = _resolve_dt(schedule, grid, orbitals.values, dt, safety, Model.SINGLE_PARTICLE)
    prop = Propagator(grid, schedule, dt, Model.SINGLE_PARTICLE)
    psi = prop.run(orbitals.values, snapshot=snapshot, snapshot_every=snapshot_every)
    if stats is not None:
        stats.update(prop.stats)
    return OrbitalSet(grid, psi, schedule.t_f)


class SnapshotWriter:
    """Callable that appends (t, x, density) rows to a CSV file."""

    def __init__(self, path, grid: SpatialGrid, metadata: dict | None = None):
        self.path = Path(path)
        self.grid = grid
        with self.path.open("w") as fh:
            for key, val in (metadata or {}).items():
                fh.write(f"# {key}: {val}\n")
            fh.write("t,x,density\n")

    def __call__(self, t, values):
        rho = np.sum(np.abs(np.atleast_2d(values)) ** 2, axis=0)
        with self.path.open("a") as fh:
            np.savetxt(fh, np.column_stack([np.full_like(rho, t), self.grid.x, rho]),
                       delimiter=",", fmt="%.12g")
