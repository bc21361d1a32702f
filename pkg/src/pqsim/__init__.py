"""1D quantum wavepacket scattering and its graded-index paraxial-beam twin.

The package propagates wavepackets with a Strang split-operator Fourier
scheme, maps the quantum problem onto a monochromatic beam in a synthesized
refractive-index profile (and back), and extracts energy-resolved reflection
spectra with reflection-dip detection, cross-checked against an independent
stationary transfer-matrix solver.
"""

__version__ = "0.1.0"

from .grids import (
    Grid1D,
    WaveField,
    forward_dft,
    inverse_dft,
    make_grid,
    mean_position,
    norm_squared,
    probability_in,
    write_field_csv,
)
from .potentials import (
    GaussianPacketSpec,
    SmoothedTruncatedPower,
    StepPotential,
    TabulatedPotential,
    ZeroPotential,
    asymptotics,
    eval_potential,
    gaussian_packet,
    sample_potential,
    tabulated_from_csv,
)
from .evolution import (
    CapSpec,
    EvolutionSpec,
    NumericalAbortError,
    PropagationResult,
    auto_time_step,
    cap_profile,
    dump_snapshots,
    make_optical_spec,
    make_quantum_spec,
    propagate,
    strang_step,
)
from .optics import (
    FeasibilityReport,
    IndexProfile,
    OpticalScales,
    OpticalSetup,
    effective_potential,
    energy_of_kappa,
    feasibility_report,
    index_profile,
    kappa_of_energy,
    to_optical,
    transverse_wavevector,
    write_index_profile,
)
from .spectroscopy import (
    DipFinding,
    NotFullyScatteredError,
    ReflectionSpectrum,
    SpectrumComparison,
    compare_spectra,
    detect_dips,
    oracle_sweep,
    reflection_spectrum,
    stationary_reflection,
    transfer_matrix_rt,
    write_dips_csv,
    write_spectrum_csv,
)
from .config import ConfigError, RunConfig, parse_config, serialize_config
