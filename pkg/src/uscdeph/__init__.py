"""Gauge-correct pure dephasing for ultrastrongly coupled light-matter models."""

from .exceptions import (
    ConfigError,
    ContractViolationError,
    DegenerateTrackingError,
    FitQualityError,
    InstabilityError,
    InvalidCutoffError,
    TraceDriftError,
    TruncationError,
    UscdephError,
)
from .fock import (
    Boson,
    Operator,
    SpaceDescriptor,
    Spectrum,
    TwoLevel,
    annihilation,
    boson_space,
    expm_hermitian_generator,
    hermitian_eig,
    hermitian_matfunc,
    identity,
    number,
    pauli,
    qubit_space,
    tensor,
)
from .hopfield import (
    HopfieldParams,
    PolaritonDecomposition,
    PolaritonRates,
    build_hopfield_hamiltonian,
    dispersion_sweep,
    gauge_map_coefficients,
    polariton_dephasing_rates,
    symplectic_diagonalize,
)
from .lindblad import (
    DensityTrajectory,
    DressedDissipator,
    NoiseRealization,
    build_dressed_dissipator,
    extract_decay_rate,
    oscillator_dephasing_check,
    propagate,
    stochastic_oracle,
    zero_frequency_density,
)
from .rabi import (
    DephasingChannel,
    LabeledSpectrum,
    RabiParams,
    build_coulomb_hamiltonian,
    build_dipole_hamiltonian,
    channel_operator,
    default_cutoff,
    gauge_unitary,
    label_states,
    rate_sweep,
    transition_dephasing_rate,
)
from .sweep import SweepResult, SweepRow

__version__ = "0.1.0"
