"""Uniform periodic 1D grids, complex wave fields, and their observables.

Every solver in this package shares one discretization: ``n_points`` equally
spaced samples on ``[x_min, x_max)`` with periodic boundary conditions, so the
FFT diagonalizes the kinetic operator exactly.  The conjugate wavenumbers
follow the signed FFT ordering, ``k_j = 2*pi*j / (x_max - x_min)`` with the
Nyquist mode reported at ``-pi/dx``.

DFT normalization convention (fixed package-wide): unitary ("ortho"), i.e.
``sum |psi_tilde|^2 == sum |psi|^2`` exactly, and the inverse transform is the
adjoint.  Observables use plain Riemann sums with weight ``dx``, which are
spectrally accurate for smooth periodic fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid1D",
    "WaveField",
    "make_grid",
    "forward_dft",
    "inverse_dft",
    "norm_squared",
    "mean_position",
    "probability_in",
    "write_field_csv",
]

ATOMIC = "atomic"
MICRON = "micron"


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Uniform periodic grid on [x_min, x_max) and its wavenumber grid.

    Immutable; safe to share between threads.  ``x`` holds the sample
    positions, ``k`` the signed FFT-ordered wavenumbers.
    """

    x_min: float
    x_max: float
    n_points: int
    unit_tag: str = ATOMIC
    x: np.ndarray = field(init=False, repr=False)
    k: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.x_max <= self.x_min:
            raise ValueError(f"x_max must exceed x_min, got [{self.x_min}, {self.x_max}]")
        n = self.n_points
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError("n_points must be a power of two >= 8")
        if self.unit_tag not in (ATOMIC, MICRON):
            raise ValueError(f"unknown unit tag {self.unit_tag!r}")
        dx = (self.x_max - self.x_min) / n
        x = self.x_min + dx * np.arange(n)
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
        x.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "k", k)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def k_max(self) -> float:
        """Nyquist wavenumber magnitude, pi/dx."""
        return np.pi / self.dx

    def same_as(self, other: "Grid1D") -> bool:
        return (
            self.n_points == other.n_points
            and self.x_min == other.x_min
            and self.x_max == other.x_max
            and self.unit_tag == other.unit_tag
        )


def make_grid(x_min: float, x_max: float, n_points: int, unit_tag: str = ATOMIC) -> Grid1D:
    """Build a periodic grid with precomputed positions and signed wavenumbers."""
    return Grid1D(float(x_min), float(x_max), int(n_points), unit_tag)


@dataclass(eq=False)
class WaveField:
    """Complex amplitude sampled on a :class:`Grid1D`.

    The values array always has length ``grid.n_points`` and dtype complex128.
    Operations in this package never mutate a field in place; treat instances
    as values.
    """

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.grid.n_points,):
            raise ValueError(
                f"field length {v.shape} does not match grid ({self.grid.n_points},)"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        self.values = v

    def copy(self) -> "WaveField":
        return WaveField(self.grid, self.values.copy())


def forward_dft(f: WaveField) -> WaveField:
    """Unitary DFT of the field; result is indexed by ``grid.k``."""
    return WaveField(f.grid, np.fft.fft(f.values, norm="ortho"))


def inverse_dft(f: WaveField) -> WaveField:
    """Inverse of :func:`forward_dft`."""
    return WaveField(f.grid, np.fft.ifft(f.values, norm="ortho"))


def norm_squared(f: WaveField) -> float:
    """Total probability sum(|psi|^2) dx."""
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.dx)


def mean_position(f: WaveField) -> float:
    """Probability-weighted mean of x."""
    dens = np.abs(f.values) ** 2
    total = np.sum(dens)
    if total == 0.0:
        raise ValueError("cannot take mean position of a zero field")
    return float(np.sum(f.grid.x * dens) / total)


def _cell_weights(grid: Grid1D, a: float, b: float) -> np.ndarray:
    """Fraction of each sample's midpoint cell covered by [a, b].

    Sample j owns [x_j - dx/2, x_j + dx/2); periodically, the first sample's
    cell wraps so the cells tile [x_min, x_max) exactly once.
    """
    dx = grid.dx
    lo = grid.x - 0.5 * dx
    hi = grid.x + 0.5 * dx
    w = np.clip((np.minimum(hi, b) - np.maximum(lo, a)) / dx, 0.0, 1.0)
    # wrapped half-cell of sample 0 lives at the far end of the domain
    wrap_lo, wrap_hi = grid.x_max - 0.5 * dx, grid.x_max
    w[0] = np.clip((min(hi[0], b) - max(grid.x_min, a)) / dx, 0.0, 0.5) + np.clip(
        (min(wrap_hi, b) - max(wrap_lo, a)) / dx, 0.0, 0.5
    )
    return w


def probability_in(f: WaveField, a: float, b: float) -> float:
    """Integral of |psi|^2 over [a, b] by the midpoint rule on grid samples."""
    g = f.grid
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if a < g.x_min or b > g.x_max:
        raise ValueError(f"[{a}, {b}] outside grid domain [{g.x_min}, {g.x_max}]")
    w = _cell_weights(g, a, b)
    return float(np.sum(w * np.abs(f.values) ** 2) * g.dx)


def write_field_csv(f: WaveField, path) -> None:
    """Snapshot export: header ``x,re,im,abs2``, 17 significant digits."""
    v = f.values
    with open(path, "w", newline="") as fh:
        fh.write("x,re,im,abs2\n")
        for x, re, im, a2 in zip(f.grid.x, v.real, v.imag, np.abs(v) ** 2):
            fh.write(f"{x:.17g},{re:.17g},{im:.17g},{a2:.17g}\n")


def write_json(path, payload: dict) -> None:
    """Deterministic JSON dump shared by the exporters."""
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
