"""Survival of continuous-variable entanglement over millimeter-wave links.

Three layers compose the library: exact covariance-matrix evolution of
two-mode Gaussian states (``gaussian``), a truncated Fock-space engine
for non-Gaussian states under thermal-loss channels (``fock``), and the
physical link layer mapping frequency/temperature/distance to channel
parameters (``link``).  ``sweeps`` and ``cli`` wire them into
reproducible CSV-producing scenarios.
"""

from .gaussian import (
    DIRECT_RELAY_SYMMETRIC,
    SCHEMES,
    SINGLE,
    SWAP_RELAY_SYMMETRIC,
    NonPhysicalCM,
    Squeezing,
    ThermalChannel,
    TwoModeCM,
    direct_relay_cm,
    eb_transmissivity,
    evolve_single_channel,
    log_negativity_cm,
    nu_minus_pt,
    swap_relay_cm,
    thermal_tms_cm,
    tmsv_cm,
)
from .fock import (
    ConvergenceReport,
    CutoffInsufficient,
    FockDensityOp,
    KrausSet,
    NonConverged,
    TruncationPolicy,
    TruncationTooSmall,
    build_kraus_set,
    dump_triplets,
    evolve_mode2,
    log_negativity_converged,
    log_negativity_fock,
    negativity_fock,
    noon_density,
    partial_transpose,
    pss_coefficients,
    pss_creation_probability,
    pss_density,
    tmsv_fock_density,
)
from .link import (
    AbsorptionModel,
    FrequencyOutOfModelRange,
    LinkEnvironment,
    NoBreakingDistance,
    aperture_gain_dbi,
    channel_from_environment,
    default_absorption_model,
    eb_distance,
    friis_received_power,
    half_beamwidth_deg,
    mean_photon_number,
    thermal_variance,
)
from .sweeps import (
    EBIT_SQUEEZE_DB,
    SCENARIOS,
    ConfigError,
    SweepSpec,
    default_spec,
    from_config_file,
    from_config_text,
    run_sweep,
    to_config_text,
    write_csv,
)

__version__ = "0.1.0"
