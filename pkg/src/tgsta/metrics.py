"""Densities and the two figures of merit: density overlap and many-body fidelity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ansatz import tf_chemical_potential
from .dynamics import MeanFieldState, OrbitalSet
from .errors import ConfigError
from .grid import SpatialGrid

NEGATIVE_ROUNDOFF = 1e-14


@dataclass(frozen=True, eq=False)
class DensityProfile:
    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        rho = np.array(self.values, dtype=float)
        if rho.shape != (self.grid.n_points,):
            raise ConfigError(f"density has shape {rho.shape}, grid needs ({self.grid.n_points},)")
        if np.min(rho, initial=0.0) < -NEGATIVE_ROUNDOFF * max(1.0, np.max(np.abs(rho))):
            raise ConfigError(f"density has negative values down to {rho.min():.3e}")
        rho = np.clip(rho, 0.0, None)
        rho.flags.writeable = False
        object.__setattr__(self, "values", rho)

    @property
    def total(self) -> float:
        return float(self.grid.dx * np.sum(self.values))

    def normalized(self) -> np.ndarray:
        total = self.total
        if not total > 0:
            raise ConfigError("cannot normalise a density with zero total")
        return self.values / total


def density_mf(state: MeanFieldState) -> DensityProfile:
    return DensityProfile(state.grid, np.abs(state.values) ** 2)


def density_tg(orbitals: OrbitalSet) -> DensityProfile:
    return DensityProfile(orbitals.grid, np.sum(np.abs(orbitals.values) ** 2, axis=0))


def tf_density(grid: SpatialGrid, N: float, omega_sq: float = 1.0, gamma: float = 0.0) -> DensityProfile:
    """Thomas-Fermi density (1/pi) sqrt(2 mu - omega^2 (x^2 + gamma x^4)), renormalised to N on the grid."""
    mu = tf_chemical_potential(N, gamma, omega_sq)
    x2 = grid.x ** 2
    rho = np.sqrt(np.maximum(0.0, 2.0 * mu - omega_sq * (x2 + gamma * x2 * x2))) / np.pi
    total = grid.dx * rho.sum()
    if total > 0:
        rho *= N / total
    return DensityProfile(grid, rho)


def density_overlap(a: DensityProfile, b: DensityProfile) -> float:
    """Bhattacharyya overlap (int sqrt(rho_a rho_b) dx)^2 of unit-normalised densities."""
    a.grid.check_same(b.grid)
    pa, pb = a.normalized(), b.normalized()
    val = (a.grid.dx * np.sum(np.sqrt(pa * pb))) ** 2
    return float(min(1.0, val))


def overlap_matrix(final: OrbitalSet, target: OrbitalSet) -> np.ndarray:
    """A[l, m] = int conj(phi_l(x, t_f)) phi_m^T(x) dx."""
    final.grid.check_same(target.grid)
    if final.N != target.N:
        raise ConfigError(f"orbital counts differ: {final.N} vs {target.N}")
    return final.grid.dx * (final.values.conj() @ target.values.T)


def log_fidelity(final: OrbitalSet, target: OrbitalSet) -> float:
    """log |det A|^2 from a pivoted LU factorisation; -inf for a singular overlap matrix."""
    sign, logabs = np.linalg.slogdet(overlap_matrix(final, target))
    if sign == 0:
        return -math.inf
    return 2.0 * float(logabs)


def many_body_fidelity(final: OrbitalSet, target: OrbitalSet) -> float:
    """|det A|^2, the overlap of the two Slater determinants (and of the mapped bosonic states)."""
    lf = log_fidelity(final, target)
    return float(min(1.0, max(0.0, math.exp(lf)))) if lf > -math.inf else 0.0


def count_maxima(profile: DensityProfile, rel_height: float = 1e-3) -> int:
    """Number of strict interior local maxima above rel_height * max."""
    rho = profile.values
    mid = rho[1:-1]
    peaks = (mid > rho[:-2]) & (mid > rho[2:]) & (mid > rel_height * rho.max())
    return int(np.count_nonzero(peaks))
