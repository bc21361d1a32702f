"""Closed-form and tabulated real potentials (atomic units) and Gaussian packets.

The workhorse is the smoothed truncated inverted power law

    V(x) = -depth * tanh(|x|^p / depth),        p even,

which vanishes at the origin with leading term -|x|^p, descends monotonically,
and saturates at the constant asymptote -depth.  A single analytic form keeps
the scatterer machine-reproducible; in double precision tanh saturates exactly,
so the asymptotic region is flat to the last bit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .grids import ATOMIC, Grid1D, WaveField

__all__ = [
    "SmoothedTruncatedPower",
    "StepPotential",
    "ZeroPotential",
    "TabulatedPotential",
    "PotentialModel",
    "GaussianPacketSpec",
    "eval_potential",
    "sample_potential",
    "gaussian_packet",
    "tabulated_from_csv",
    "asymptotics",
]


@dataclass(frozen=True)
class SmoothedTruncatedPower:
    """V(x) = -depth * tanh(|x|^power / depth); even, bounded in [-depth, 0]."""

    power: int
    depth: float

    def __post_init__(self):
        if self.power < 2 or self.power % 2 != 0:
            raise ValueError("power must be an even integer >= 2")
        if not self.depth > 0:
            raise ValueError("depth must be positive")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return -self.depth * np.tanh(np.abs(x) ** self.power / self.depth)


@dataclass(frozen=True)
class StepPotential:
    """V(x) = v0 for x >= x0, else 0."""

    v0: float
    x0: float = 0.0

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= self.x0, self.v0, 0.0)


@dataclass(frozen=True)
class ZeroPotential:
    """Free particle."""

    def evaluate(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(eq=False)
class TabulatedPotential:
    """Linear interpolation of (x, v) samples; queries outside the table fail."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.x.ndim != 1 or self.x.shape != self.v.shape or self.x.size < 2:
            raise ValueError("need matching 1D x and v arrays with at least two samples")
        if not np.all(np.diff(self.x) > 0):
            raise ValueError("tabulated x values must be strictly increasing")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))):
            raise ValueError("tabulated values must be finite")

    def evaluate(self, x):
        q = np.asarray(x, dtype=float)
        if np.any(q < self.x[0]) or np.any(q > self.x[-1]):
            raise ValueError(
                f"query outside tabulated range [{self.x[0]}, {self.x[-1]}]"
            )
        return np.interp(q, self.x, self.v)


PotentialModel = Union[SmoothedTruncatedPower, StepPotential, ZeroPotential, TabulatedPotential]


def eval_potential(model: PotentialModel, x):
    """Evaluate V at x (scalar or array, atomic units)."""
    return model.evaluate(x)


def sample_potential(model: PotentialModel, grid: Grid1D) -> np.ndarray:
    """Pointwise samples of V on an atomic-units grid."""
    if grid.unit_tag != ATOMIC:
        raise ValueError("potentials are defined in atomic units; grid must be atomic")
    return np.asarray(model.evaluate(grid.x), dtype=float)


def tabulated_from_csv(path) -> TabulatedPotential:
    """Read a tabulated potential from CSV with header ``x,v``."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x,v":
            raise ValueError(f"expected header 'x,v', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return TabulatedPotential(data[:, 0], data[:, 1])


def asymptotics(v: np.ndarray, x: np.ndarray, atol: float = 1e-9):
    """Asymptotic levels and the interval where V departs from them.

    Returns ``(support, v_left, v_right)`` where ``support`` is the smallest
    ``(a, b)`` outside which ``|V - V(edge)| <= atol``, or None if V never
    departs (free particle).
    """
    v = np.asarray(v, dtype=float)
    v_left = float(v[0])
    v_right = float(v[-1])
    dev_l = np.abs(v - v_left) > atol
    dev_r = np.abs(v - v_right) > atol
    if not dev_l.any() and not dev_r.any():
        return None, v_left, v_right
    lo = int(np.argmax(dev_l)) if dev_l.any() else int(np.argmax(dev_r))
    hi = int(len(v) - 1 - np.argmax(dev_r[::-1])) if dev_r.any() else int(
        len(v) - 1 - np.argmax(dev_l[::-1])
    )
    a = x[max(lo - 1, 0)]
    b = x[min(hi + 1, len(v) - 1)]
    return (float(a), float(b)), v_left, v_right


@dataclass(frozen=True)
class GaussianPacketSpec:
    """Gaussian wavepacket parameters in atomic units.

    ``sigma`` is the standard deviation of the position density |psi|^2, so
    the envelope is exp(-(x - center)^2 / (4 sigma^2)).
    """

    mass: float
    center: float
    momentum: float
    sigma: float

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def gaussian_packet(spec: GaussianPacketSpec, grid: Grid1D) -> WaveField:
    """Normalized Gaussian packet (2 pi sigma^2)^(-1/4) e^{-(x-x0)^2/4 sigma^2} e^{i p0 x}.

    Warns when the packet is marginally resolved or close to a boundary;
    raises when more than 1e-6 of its mass falls outside the domain.
    """
    s, x0 = spec.sigma, spec.center
    tail = 0.5 * (
        math.erfc((x0 - grid.x_min) / (s * math.sqrt(2.0)))
        + math.erfc((grid.x_max - x0) / (s * math.sqrt(2.0)))
    )
    if tail > 1e-6:
        raise ValueError(
            f"packet not contained in domain: tail mass {tail:.3e} exceeds 1e-6"
        )
    if s < 4.0 * grid.dx:
        warnings.warn(f"packet sigma={s:g} under-resolved (dx={grid.dx:g})", stacklevel=2)
    if min(x0 - grid.x_min, grid.x_max - x0) < 6.0 * s:
        warnings.warn("packet closer than 6 sigma to a domain edge", stacklevel=2)
    x = grid.x
    amp = (2.0 * np.pi * s**2) ** -0.25
    psi = amp * np.exp(-((x - x0) ** 2) / (4.0 * s**2) + 1j * spec.momentum * x)
    return WaveField(grid, psi)
