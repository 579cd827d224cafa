"""Mueller-matrix polarimetry realized as Kraus channels on truncated Fock spaces."""

from .errors import *  # noqa: F401,F403
from .stokes import (
    EulerAngles,
    StokesVector,
    classify,
    cloude_decompose,
    coherency,
    compose,
    convex_combine,
    degree_of_polarization,
    depolarizer_sym,
    diattenuator,
    diattenuator_jones,
    is_physical,
    jones_to_mueller,
    lu_chipman,
    mueller_apply,
    mueller_from_coherency,
    retarder,
    retarder_jones,
)
from .fock import (
    DensityMatrix,
    FockBasis,
    FockOperator,
    expectation,
    make_basis,
    mode_operators,
    mode_unitary_to_fock,
    rotation_unitary,
    stokes_expectations,
    stokes_operators,
)
from .quadrature import QuadratureGrid, flat_grid, haar_grid
from .channels import (
    KrausChannel,
    PositivityFailure,
    WeightFunctionSpec,
    apply,
    channel_from_ancilla_unitary,
    classify_channel,
    complete_su3,
    compose_channels,
    convex_combine_channels,
    diattenuator_channel_two_vacuum,
    extract_mueller,
    haar_depolarizer,
    is_cptp,
    nondepolarizing_channel_su3,
    polarizer_channel_finite,
    random_nondepolarizing_mueller,
    remix_kraus,
    retarder_channel,
    weighted_rotation_channel,
    weighted_rotation_mueller,
)
from .sim import (
    ExperimentRecord,
    MeasurementSetting,
    ProbeSpec,
    estimate_mueller,
    load,
    make_probe,
    persist,
    sample_stokes,
    standard_probes,
)

__version__ = "0.1.0"
