"""Dictionary between 1D quantum scattering and a graded-index paraxial beam.

A monochromatic beam envelope U(xi, z) in a medium n(xi) obeys the paraxial
equation  i dU/dz = -(1/2k) d^2U/dxi^2 + (k/2)(1 - n^2) U  with carrier
wavevector k = 2 pi / lambda.  Choosing

    xi = s x,   z = 2 w s^2 t,   k = 2 m w,   w = 2 pi / lambda,

turns it into the time-dependent Schroedinger equation for mass m in the
potential V(x) = 2 w s^2 * V_eff(s x), value-for-value: the beam envelope on
the scaled grid equals the wavefunction, with no amplitude rescaling.  The
index profile realizing a target potential V <= 0 is

    n(xi) = sqrt(1 - V(xi/s) / (2 m s^2 w^2)),

so the maximum index is set by the deepest point of V.  A stationary mode
U(xi) exp(-i kappa z) plays the role of an energy eigenstate with
kappa = E / (2 w s^2); kappa is reported as a magnitude here (with the
propagator sign convention used in this package the carried z-phase of a
positive-energy mode is negative).  Its transverse wavevector obeys
k_x = sqrt(2 k kappa) = sqrt(2 m E)/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grids import MICRON, ATOMIC, Grid1D, WaveField, make_grid, write_json
from .potentials import PotentialModel, eval_potential

__all__ = [
    "OpticalScales",
    "IndexProfile",
    "OpticalSetup",
    "FeasibilityReport",
    "index_profile",
    "effective_potential",
    "to_optical",
    "kappa_of_energy",
    "energy_of_kappa",
    "transverse_wavevector",
    "feasibility_report",
    "write_index_profile",
]

PARAXIAL_MAX_DIVERGENCE_RAD = 0.1
PARAXIAL_MIN_FEATURE_WAVELENGTHS = 4.0


@dataclass(frozen=True)
class OpticalScales:
    """Length scale s (micron per bohr), wavelength (micron), and mass (au).

    ``w`` and ``k_opt`` are derived exactly: w = 2 pi / lambda and
    k_opt = 2 m w, the carrier wavevector that makes the two evolutions
    coincide value-for-value.
    """

    s: float
    lambda_um: float
    mass: float

    def __post_init__(self):
        if not (self.s > 0 and self.lambda_um > 0 and self.mass > 0):
            raise ValueError("scales require s > 0, lambda > 0, mass > 0")

    @property
    def w(self) -> float:
        return 2.0 * np.pi / self.lambda_um

    @property
    def k_opt(self) -> float:
        return 2.0 * self.mass * self.w


@dataclass(eq=False)
class IndexProfile:
    """Refractive index samples n(xi) >= 1 on a micron grid."""

    grid: Grid1D
    n: np.ndarray
    n_max: float
    scales: OpticalScales


@dataclass(eq=False)
class OpticalSetup:
    """Mapped beam problem: micron grid, propagation length, boundary field.

    ``amplitude_scale`` records the overall constant relating boundary values
    to the source wavefunction; this package always uses value-for-value
    mapping, i.e. 1.0.
    """

    grid: Grid1D
    z_max: float
    boundary: WaveField
    amplitude_scale: float = 1.0


def index_profile(model: PotentialModel, scales: OpticalScales, grid_opt: Grid1D) -> IndexProfile:
    """Synthesize n(xi) = sqrt(1 - V(xi/s)/(2 m s^2 w^2)) on a micron grid."""
    if grid_opt.unit_tag != MICRON:
        raise ValueError("index profiles live on micron grids")
    v = np.asarray(eval_potential(model, grid_opt.x / scales.s), dtype=float)
    if np.any(v > 0.0):
        raise ValueError(
            "potential must be <= 0 everywhere; positive V needs an index below one"
        )
    arg = 1.0 - v / (2.0 * scales.mass * scales.s**2 * scales.w**2)
    n = np.sqrt(arg)
    return IndexProfile(grid=grid_opt, n=n, n_max=float(np.max(n)), scales=scales)


def effective_potential(profile: IndexProfile) -> np.ndarray:
    """V_eff(xi) = (k/2)(1 - n^2(xi)); exact algebraic inverse of the synthesis."""
    return 0.5 * profile.scales.k_opt * (1.0 - profile.n**2)


def to_optical(grid_au: Grid1D, t_max: float, packet: WaveField, scales: OpticalScales) -> OpticalSetup:
    """Map a quantum run (grid, duration, initial field) to the beam problem.

    Positions scale as xi = s x, the propagation length as z = 2 w s^2 t, and
    the boundary field keeps the identical complex values.
    """
    if grid_au.unit_tag != ATOMIC:
        raise ValueError("source grid must be in atomic units")
    if packet.grid is not grid_au and not packet.grid.same_as(grid_au):
        raise ValueError("packet must live on the source grid")
    grid_opt = make_grid(
        scales.s * grid_au.x_min, scales.s * grid_au.x_max, grid_au.n_points, MICRON
    )
    z_max = 2.0 * scales.w * scales.s**2 * t_max
    return OpticalSetup(
        grid=grid_opt,
        z_max=z_max,
        boundary=WaveField(grid_opt, packet.values.copy()),
        amplitude_scale=1.0,
    )


def kappa_of_energy(energy: float, scales: OpticalScales) -> float:
    """Propagation-constant magnitude kappa = E / (2 w s^2)."""
    return energy / (2.0 * scales.w * scales.s**2)


def energy_of_kappa(kappa: float, scales: OpticalScales) -> float:
    """Inverse of :func:`kappa_of_energy`."""
    return kappa * 2.0 * scales.w * scales.s**2


def transverse_wavevector(kappa: float, scales: OpticalScales) -> float:
    """Free-mode dispersion k_x = sqrt(2 k kappa), rad/micron."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    return float(np.sqrt(2.0 * scales.k_opt * kappa))


@dataclass
class FeasibilityReport:
    """Paraxial-validity and fabrication flags for a synthesized profile.

    All failures are flags, never exceptions: the profile stays usable, the
    caller decides.  ``divergence_*`` fields are None when no field was
    supplied for the spectral check.
    """

    n_max: float
    n_material_max: float
    index_ok: bool
    feature_size_um: float
    feature_size_limit_um: float
    feature_ok: bool
    divergence_half_angle_rad: Optional[float]
    divergence_ok: Optional[bool]
    max_index_step_per_cell: float
    fabrication_resolution_um: float
    passed: bool = field(init=False)

    def __post_init__(self):
        checks = [self.index_ok, self.feature_ok]
        if self.divergence_ok is not None:
            checks.append(self.divergence_ok)
        self.passed = all(checks)

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "n_material_max": self.n_material_max,
            "index_ok": self.index_ok,
            "feature_size_um": self.feature_size_um,
            "feature_size_limit_um": self.feature_size_limit_um,
            "feature_ok": self.feature_ok,
            "divergence_half_angle_rad": self.divergence_half_angle_rad,
            "divergence_ok": self.divergence_ok,
            "max_index_step_per_cell": self.max_index_step_per_cell,
            "fabrication_resolution_um": self.fabrication_resolution_um,
            "passed": self.passed,
        }


def _spectral_quantile_wavenumber(f: WaveField, fraction: float) -> float:
    """Smallest K such that modes with |k| <= K hold ``fraction`` of spectral mass."""
    density = np.abs(np.fft.fft(f.values, norm="ortho")) ** 2
    order = np.argsort(np.abs(f.grid.k), kind="stable")
    cum = np.cumsum(density[order])
    total = cum[-1]
    idx = int(np.searchsorted(cum, fraction * total))
    idx = min(idx, len(cum) - 1)
    return float(np.abs(f.grid.k)[order][idx])


def feasibility_report(
    profile: IndexProfile,
    beam: Optional[WaveField] = None,
    n_material_max: float = 1.6,
    fabrication_resolution_um: float = 0.1,
) -> FeasibilityReport:
    """Check the profile against material and paraxial-validity limits.

    The smallest feature size is operationalized as max|n - 1| / max|dn/dxi|
    (a length; infinite for a uniform profile) and compared against 4 lambda.
    When a boundary field is supplied, the divergence half-angle is taken as
    the wavenumber containing 99% of its spectral mass over k_opt and
    compared against 0.1 rad.
    """
    scales = profile.scales
    slope = np.gradient(profile.n, profile.grid.x)
    max_slope = float(np.max(np.abs(slope)))
    amplitude = float(np.max(np.abs(profile.n - 1.0)))
    feature = amplitude / max_slope if max_slope > 0.0 else np.inf
    feature_limit = PARAXIAL_MIN_FEATURE_WAVELENGTHS * scales.lambda_um

    divergence = None
    divergence_ok = None
    if beam is not None:
        k99 = _spectral_quantile_wavenumber(beam, 0.99)
        divergence = k99 / scales.k_opt
        divergence_ok = divergence <= PARAXIAL_MAX_DIVERGENCE_RAD

    return FeasibilityReport(
        n_max=profile.n_max,
        n_material_max=n_material_max,
        index_ok=profile.n_max <= n_material_max,
        feature_size_um=feature,
        feature_size_limit_um=feature_limit,
        feature_ok=feature >= feature_limit,
        divergence_half_angle_rad=divergence,
        divergence_ok=divergence_ok,
        max_index_step_per_cell=max_slope * fabrication_resolution_um,
        fabrication_resolution_um=fabrication_resolution_um,
    )


def write_index_profile(profile: IndexProfile, report: FeasibilityReport, csv_path, json_path) -> None:
    """Export ``xi_um,n`` CSV plus a JSON sidecar with scales and feasibility."""
    with open(csv_path, "w", newline="") as fh:
        fh.write("xi_um,n\n")
        for xi, n in zip(profile.grid.x, profile.n):
            fh.write(f"{xi:.17g},{n:.17g}\n")
    sidecar = {
        "s": profile.scales.s,
        "lambda_um": profile.scales.lambda_um,
        "w": profile.scales.w,
        "k_opt": profile.scales.k_opt,
        "m_au": profile.scales.mass,
        "n_max": profile.n_max,
        "feasibility": report.to_dict(),
    }
    write_json(json_path, sidecar)
