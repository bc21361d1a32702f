"""Strang split-operator Fourier propagator.

Integrates the generic drift-diffusion-free Schroedinger form

    i d psi / d tau = [ -A d^2/dx^2 + W(x) ] psi

with the second-order symmetric (Strang) factorization, potential half-steps
on the outside:

    psi <- e^{-i W dtau/2} . IDFT . e^{-i A k^2 dtau} . DFT . e^{-i W dtau/2} psi

The quantum side uses A = 1/(2 m) with W = V(x) and tau = t (atomic units);
the monochromatic-beam side uses A = 1/(2 k_carrier) with W the effective
optical potential and tau = z.  With the absorber off every factor is
unit-modulus, so the norm is conserved to rounding; for W = 0 the single
kinetic exponential is exact for any step size.

Interior half-steps of W are fused pairwise; states recorded in snapshots and
the final state always carry the completed symmetric step, so fusing is
arithmetically identical to naive composition.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .grids import Grid1D, WaveField, write_field_csv, write_json

__all__ = [
    "CapSpec",
    "EvolutionSpec",
    "PropagationResult",
    "NumericalAbortError",
    "make_quantum_spec",
    "make_optical_spec",
    "auto_time_step",
    "cap_profile",
    "strang_step",
    "propagate",
    "dump_snapshots",
]


class NumericalAbortError(RuntimeError):
    """Propagation produced a non-finite field."""

    def __init__(self, step: int):
        super().__init__(f"non-finite field detected at step {step}")
        self.step = step


@dataclass(frozen=True)
class CapSpec:
    """Complex absorbing potential: quartic ramps over an edge fraction.

    Adds -i * strength * ramp(x)^4 to W on each domain edge, where ramp grows
    linearly from 0 at the inner edge of the absorbing region to 1 at the
    boundary.  Off by default everywhere in this package.
    """

    strength: float
    edge_fraction: float = 0.1

    def __post_init__(self):
        if not self.strength > 0:
            raise ValueError("cap strength must be positive")
        if not 0.0 < self.edge_fraction < 0.5:
            raise ValueError("cap edge_fraction must be in (0, 0.5)")


@dataclass(frozen=True, eq=False)
class EvolutionSpec:
    """Kinetic coefficient, sampled potential, step size and step count.

    ``d_tau`` may be negative (time reversal); it must be nonzero.  The
    Nyquist phase sanity bound A k_max^2 |d_tau| < pi is checked against the
    grid when propagation starts.
    """

    a_coeff: float
    potential: np.ndarray
    d_tau: float
    n_steps: int
    snapshot_stride: int = 0
    cap: Optional[CapSpec] = None

    def __post_init__(self):
        if not self.a_coeff > 0:
            raise ValueError("kinetic coefficient must be positive")
        if self.d_tau == 0.0:
            raise ValueError("d_tau must be nonzero")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.snapshot_stride < 0:
            raise ValueError("snapshot_stride must be >= 0")
        w = np.asarray(self.potential, dtype=float)
        if w.ndim != 1:
            raise ValueError("potential must be a 1D array")
        if not np.all(np.isfinite(w)):
            raise ValueError("potential contains non-finite values")
        object.__setattr__(self, "potential", w)


@dataclass(eq=False)
class PropagationResult:
    """Final field, optional snapshots (tau, field), and per-step norms.

    ``norm_history[j]`` is the norm after j steps; with the absorber off it is
    exact, with it on the interior entries are taken mid-fusion (half an
    absorber application ahead) while snapshot and final entries are exact.
    """

    final: WaveField
    snapshots: List[Tuple[float, WaveField]]
    norm_history: np.ndarray


def make_quantum_spec(mass: float, potential: np.ndarray, dt: float, n_steps: int,
                      snapshot_stride: int = 0, cap: Optional[CapSpec] = None) -> EvolutionSpec:
    """Schroedinger instantiation: A = 1/(2 m), W = V, tau = t (atomic units)."""
    if not mass > 0:
        raise ValueError("mass must be positive")
    return EvolutionSpec(1.0 / (2.0 * mass), potential, dt, n_steps, snapshot_stride, cap)


def make_optical_spec(k_carrier: float, v_eff: np.ndarray, dz: float, n_steps: int,
                      snapshot_stride: int = 0, cap: Optional[CapSpec] = None) -> EvolutionSpec:
    """Paraxial instantiation: A = 1/(2 k), W = V_eff, tau = z (microns)."""
    if not k_carrier > 0:
        raise ValueError("carrier wavevector must be positive")
    return EvolutionSpec(1.0 / (2.0 * k_carrier), v_eff, dz, n_steps, snapshot_stride, cap)


def auto_time_step(a_coeff: float, potential: np.ndarray, grid: Grid1D) -> float:
    """Default step: max|W| dtau <= 0.01 and A k_max^2 dtau <= 0.1."""
    kinetic = 0.1 / (a_coeff * grid.k_max**2)
    w_max = float(np.max(np.abs(potential))) if len(potential) else 0.0
    if w_max > 0.0:
        return min(kinetic, 0.01 / w_max)
    return kinetic


def cap_profile(grid: Grid1D, cap: CapSpec) -> np.ndarray:
    """Absorber amplitude Gamma(x) >= 0 (the -i Gamma term of W)."""
    width = cap.edge_fraction * grid.length
    left = grid.x_min + width
    right = grid.x_max - width
    ramp = np.maximum(left - grid.x, grid.x - right) / width
    return cap.strength * np.clip(ramp, 0.0, None) ** 4


def _check_stability(spec: EvolutionSpec, grid: Grid1D) -> None:
    phase = spec.a_coeff * grid.k_max**2 * abs(spec.d_tau)
    if phase >= np.pi:
        raise ValueError(
            f"kinetic phase per step at Nyquist is {phase:.3g} >= pi; reduce d_tau"
        )
    if phase > np.pi / 4.0:
        warnings.warn(
            f"kinetic phase per step at Nyquist is {phase:.3g} (> pi/4)", stacklevel=3
        )


class _Kernel:
    """Precomputed exponential factors for one (grid, spec) pair."""

    def __init__(self, grid: Grid1D, spec: EvolutionSpec):
        if len(spec.potential) != grid.n_points:
            raise ValueError(
                f"potential length {len(spec.potential)} does not match grid {grid.n_points}"
            )
        _check_stability(spec, grid)
        w = spec.potential.astype(complex)
        if spec.cap is not None:
            w = w - 1j * cap_profile(grid, spec.cap)
        self.exp_half_v = np.exp(-0.5j * w * spec.d_tau)
        self.exp_full_v = self.exp_half_v * self.exp_half_v
        self.exp_kinetic = np.exp(-1j * spec.a_coeff * grid.k**2 * spec.d_tau)
        self.dx = grid.dx

    def kinetic(self, psi: np.ndarray) -> np.ndarray:
        return np.fft.ifft(self.exp_kinetic * np.fft.fft(psi, norm="ortho"), norm="ortho")


def strang_step(f: WaveField, spec: EvolutionSpec) -> WaveField:
    """One symmetric split step; norm preserving in exact arithmetic (cap off)."""
    k = _Kernel(f.grid, spec)
    psi = k.exp_half_v * (k.kinetic(k.exp_half_v * f.values))
    return WaveField(f.grid, psi)


def propagate(initial: WaveField, spec: EvolutionSpec) -> PropagationResult:
    """Run n_steps Strang steps with fused interior potential factors.

    Snapshots are recorded at tau = 0, every ``snapshot_stride`` steps when the
    stride is positive, and at the final step.  Aborts with
    :class:`NumericalAbortError` if the field stops being finite.
    """
    grid = initial.grid
    kern = _Kernel(grid, spec)
    n = spec.n_steps
    stride = spec.snapshot_stride

    norms = np.empty(n + 1)
    norms[0] = float(np.sum(np.abs(initial.values) ** 2) * kern.dx)
    snapshots: List[Tuple[float, WaveField]] = [(0.0, initial.copy())]

    psi = kern.exp_half_v * initial.values
    for step in range(1, n + 1):
        psi = kern.kinetic(psi)
        at_boundary = step == n or (stride > 0 and step % stride == 0)
        if at_boundary:
            psi = kern.exp_half_v * psi  # complete the symmetric step
            norm = float(np.sum(np.abs(psi) ** 2) * kern.dx)
            if not np.isfinite(norm):
                raise NumericalAbortError(step)
            norms[step] = norm
            if step < n:
                snapshots.append((step * spec.d_tau, WaveField(grid, psi.copy())))
                psi = kern.exp_half_v * psi  # resume the next half-step
        else:
            norm = float(np.sum(np.abs(psi) ** 2) * kern.dx)
            if not np.isfinite(norm):
                raise NumericalAbortError(step)
            norms[step] = norm
            psi = kern.exp_full_v * psi

    final = WaveField(grid, psi)
    snapshots.append((n * spec.d_tau, final.copy()))
    return PropagationResult(final=final, snapshots=snapshots, norm_history=norms)


def dump_snapshots(result: PropagationResult, directory) -> Path:
    """Write one CSV per snapshot plus a JSON manifest of (tau, step, norm)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    d_tau = None
    if len(result.norm_history) > 1 and len(result.snapshots) > 1:
        d_tau = result.snapshots[-1][0] / (len(result.norm_history) - 1)
    entries = []
    for idx, (tau, f) in enumerate(result.snapshots):
        name = f"snapshot_{idx:05d}.csv"
        write_field_csv(f, directory / name)
        step = int(round(tau / d_tau)) if d_tau else 0
        entries.append(
            {"file": name, "tau": tau, "step": step, "norm": float(result.norm_history[step])}
        )
    write_json(directory / "manifest.json", {"snapshots": entries})
    return directory / "manifest.json"
