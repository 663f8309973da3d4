"""Uniform periodic grids, sampled complex fields and their spectral calculus.

Units are scaled throughout: hbar = m = omega0 = 1, lengths in a0, times in
1/omega0, energies in hbar*omega0.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError, MonitorTrip

EDGE_FRACTION = 0.05          # share of nodes (both ends together) watched by the edge monitor
TAIL_FRACTION = 0.10          # share of the |k| band watched by the spectral-tail monitor
MONITOR_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Uniform grid on the periodic box [x_min, x_max)."""

    x_min: float
    x_max: float
    n_points: int
    dx: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False)
    k: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ConfigError(f"n_points must be a power of two >= 8, got {n!r}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)) or self.x_min >= self.x_max:
            raise ConfigError(f"need x_min < x_max, got ({self.x_min}, {self.x_max})")
        dx = (self.x_max - self.x_min) / n
        x = self.x_min + dx * np.arange(n)
        k = 2.0 * np.pi * sfft.fftfreq(n, d=dx)
        x.flags.writeable = False
        k.flags.writeable = False
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "k", k)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def k_max(self) -> float:
        return np.pi / self.dx

    def same_as(self, other: "SpatialGrid") -> bool:
        return (self.n_points == other.n_points and self.x_min == other.x_min
                and self.x_max == other.x_max)

    def check_same(self, other: "SpatialGrid"):
        if not self.same_as(other):
            raise ConfigError(f"grid mismatch: {self} vs {other}")

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points}


def make_grid(x_min: float, x_max: float, n_points: int) -> SpatialGrid:
    return SpatialGrid(float(x_min), float(x_max), n_points)


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex amplitudes sampled on a grid; the array is stored read-only."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n_points,):
            raise ConfigError(f"field has shape {v.shape}, grid needs ({self.grid.n_points},)")
        if not np.all(np.isfinite(v)):
            raise ConfigError("field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __mul__(self, c):
        return ComplexField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: "ComplexField"):
        self.grid.check_same(other.grid)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other: "ComplexField"):
        self.grid.check_same(other.grid)
        return ComplexField(self.grid, self.values - other.values)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def norm(f: ComplexField) -> float:
    """Quadrature of |f|^2 (rectangle rule, spectrally accurate for decayed fields)."""
    return float(f.grid.dx * np.sum(np.abs(f.values) ** 2))


def inner_product(f: ComplexField, g: ComplexField) -> complex:
    """<f, g> = integral of conj(f) g, antilinear in the first slot."""
    f.grid.check_same(g.grid)
    return complex(f.grid.dx * np.vdot(f.values, g.values))


def edge_mass_fraction(values: np.ndarray, grid: SpatialGrid) -> float:
    """Fraction of the norm sitting in the outer nodes of the box.

    ``values`` may be one field or a stack of fields along the first axis;
    the fraction is then the worst one.
    """
    v = np.atleast_2d(values)
    m = max(1, int(round(EDGE_FRACTION * grid.n_points / 2)))
    dens = np.abs(v) ** 2
    total = dens.sum(axis=1)
    edge = dens[:, :m].sum(axis=1) + dens[:, -m:].sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(total > 0, edge / total, 0.0)
    return float(frac.max())


def spectral_tail_fraction(values: np.ndarray, grid: SpatialGrid) -> float:
    """Fraction of the spectral weight with |k| in the top of the resolvable band."""
    v = np.atleast_2d(values)
    spec = np.abs(sfft.fft(v, axis=1)) ** 2
    tail = np.abs(grid.k) >= (1.0 - TAIL_FRACTION) * grid.k_max
    total = spec.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(total > 0, spec[:, tail].sum(axis=1) / total, 0.0)
    return float(frac.max())


def check_resolution(values: np.ndarray, grid: SpatialGrid, threshold: float = MONITOR_THRESHOLD,
                     what: str = "field"):
    """Raise MonitorTrip when a field touches the box edges or the top of the k band."""
    edge = edge_mass_fraction(values, grid)
    tail = spectral_tail_fraction(values, grid)
    if edge > threshold or tail > threshold:
        raise MonitorTrip(
            f"{what}: edge mass {edge:.3e}, spectral tail {tail:.3e} (threshold {threshold:.0e}); "
            "enlarge the box or refine the grid",
            {"edge_mass": edge, "spectral_tail": tail, "threshold": threshold},
        )
    return edge, tail


def apply_second_derivative(values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Spectral d^2/dx^2 along the last axis of a raw array."""
    return sfft.ifft(-(grid.k ** 2) * sfft.fft(values, axis=-1), axis=-1)


def second_derivative(f: ComplexField, strict: bool = False) -> ComplexField:
    """Spectral second derivative, ifft(-k^2 fft(f)).

    The periodic representation is only faithful for fields that have
    decayed at the box edges. A warning is issued otherwise; with
    ``strict=True`` a MonitorTrip is raised instead.
    """
    edge = edge_mass_fraction(f.values, f.grid)
    if edge > MONITOR_THRESHOLD:
        msg = f"edge mass fraction {edge:.2e} exceeds {MONITOR_THRESHOLD:.0e}"
        if strict:
            raise MonitorTrip(msg, {"edge_mass": edge})
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return ComplexField(f.grid, apply_second_derivative(f.values, f.grid))


def fourier_interpolate(f: ComplexField, points, periodic: bool = False) -> np.ndarray:
    """Evaluate the band-limited trigonometric interpolant of ``f`` at arbitrary points.

    The Nyquist mode is split evenly between +k and -k so real fields stay
    real. Points outside the box return 0 unless ``periodic`` is set, in
    which case they see the periodic image.
    """
    g = f.grid
    n = g.n_points
    coeff = sfft.fft(f.values) / n
    pts = np.asarray(points, dtype=float)
    shift = pts - g.x_min
    out = np.exp(1j * np.multiply.outer(shift, g.k)) @ coeff
    # fftfreq puts the Nyquist mode at -k_max; add the symmetric half at +k_max
    out += coeff[n // 2] * 1j * np.sin(g.k_max * shift)
    if not periodic:
        out = np.where((pts >= g.x_min) & (pts <= g.x_max), out, 0.0)
    return out


def write_field_csv(path, f: ComplexField, metadata: dict | None = None):
    path = Path(path)
    lines = [f"# {key}: {val}" for key, val in (metadata or {}).items()]
    lines += [f"# grid: {f.grid.x_min!r},{f.grid.x_max!r},{f.grid.n_points}", "x,re,im"]
    body = np.column_stack([f.grid.x, f.values.real, f.values.imag])
    with path.open("w") as fh:
        fh.write("\n".join(lines) + "\n")
        np.savetxt(fh, body, delimiter=",", fmt="%.17g")
    return path


def read_field_csv(path) -> tuple[ComplexField, dict]:
    meta = {}
    grid_spec = None
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                if key.strip() == "grid":
                    grid_spec = val.strip()
                else:
                    meta[key.strip()] = val.strip()
            elif line[0].isalpha():
                continue
            else:
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows)
    if grid_spec is not None:
        x0, x1, n = grid_spec.split(",")
        grid = make_grid(float(x0), float(x1), int(n))
    else:
        x = data[:, 0]
        dx = x[1] - x[0]
        grid = make_grid(x[0], x[0] + len(x) * dx, len(x))
    return ComplexField(grid, data[:, 1] + 1j * data[:, 2]), meta
