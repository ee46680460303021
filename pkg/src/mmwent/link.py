"""Physical link layer for millimeter-wave entanglement distribution.

Connects environment parameters (frequency, temperature, distance,
aperture) to quantum channel parameters: blackbody occupation and noise
variance, atmospheric absorption, free-space power budget, and the
distance at which a link becomes entanglement breaking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import SINGLE, ThermalChannel, eb_transmissivity

__all__ = [
    "H_PLANCK",
    "K_BOLTZMANN",
    "C_LIGHT",
    "FrequencyOutOfModelRange",
    "NoBreakingDistance",
    "LinkEnvironment",
    "AbsorptionModel",
    "default_absorption_model",
    "mean_photon_number",
    "thermal_variance",
    "aperture_gain_dbi",
    "friis_received_power",
    "half_beamwidth_deg",
    "channel_from_environment",
    "eb_distance",
]

# CODATA 2018 defining constants.
H_PLANCK = 6.62607015e-34    # J s
K_BOLTZMANN = 1.380649e-23   # J / K
C_LIGHT = 299792458.0        # m / s


class FrequencyOutOfModelRange(ValueError):
    """Requested frequency lies outside the absorption table's span."""


class NoBreakingDistance(ValueError):
    """The link never reaches the entanglement-breaking transmissivity."""


def mean_photon_number(frequency_hz: float, temperature_k: float) -> float:
    """Blackbody mean photon number per mode, 1/(exp(hf/kT) - 1).

    Returns 0 for zero temperature.
    """
    if frequency_hz <= 0.0:
        raise ValueError(f"frequency must be positive, got {frequency_hz!r}")
    if temperature_k < 0.0:
        raise ValueError(f"temperature must be >= 0, got {temperature_k!r}")
    if temperature_k == 0.0:
        return 0.0
    x = H_PLANCK * frequency_hz / (K_BOLTZMANN * temperature_k)
    if x > 700.0:  # exp would overflow; occupation is numerically zero
        return 0.0
    return 1.0 / math.expm1(x)


def thermal_variance(frequency_hz: float, temperature_k: float) -> float:
    """Thermal quadrature variance omega = 2*nbar + 1 (vacuum units)."""
    return 2.0 * mean_photon_number(frequency_hz, temperature_k) + 1.0


@dataclass(frozen=True)
class LinkEnvironment:
    """Operating point of a free-space link.

    Attributes:
        frequency_hz: carrier frequency (1-300 GHz is the intended range).
        temperature_k: background temperature of the channel environment.
        distance_m: transmitter-receiver separation.
        aperture_m: transmit dish diameter.
        gains_dbi: optional explicit (transmit, receive) antenna gains;
            when absent, both default to the aperture gain at the 3 dB
            contour.
    """

    frequency_hz: float
    temperature_k: float = 300.0
    distance_m: float = 100.0
    aperture_m: float = 1.0
    gains_dbi: tuple | None = None

    def __post_init__(self):
        if self.frequency_hz <= 0.0:
            raise ValueError("frequency must be positive")
        if self.temperature_k < 0.0:
            raise ValueError("temperature must be >= 0")
        if self.distance_m < 0.0:
            raise ValueError("distance must be >= 0")
        if self.aperture_m <= 0.0:
            raise ValueError("aperture must be positive")


@dataclass(frozen=True)
class AbsorptionModel:
    """Atmospheric power absorption versus frequency.

    Piecewise-linear interpolation between calibration points
    (frequency, specific attenuation in dB/km).  Frequencies must be
    strictly increasing and attenuations non-negative.
    """

    frequencies_hz: tuple
    alphas_db_per_km: tuple

    def __post_init__(self):
        f = tuple(float(x) for x in self.frequencies_hz)
        a = tuple(float(x) for x in self.alphas_db_per_km)
        if len(f) != len(a) or len(f) < 2:
            raise ValueError("need at least two (frequency, attenuation) calibration points")
        if any(f2 <= f1 for f1, f2 in zip(f, f[1:])):
            raise ValueError("calibration frequencies must be strictly increasing")
        if any(x < 0.0 for x in a):
            raise ValueError("attenuations must be >= 0")
        object.__setattr__(self, "frequencies_hz", f)
        object.__setattr__(self, "alphas_db_per_km", a)

    @classmethod
    def from_table(cls, path: str) -> "AbsorptionModel":
        """Load from a two-column text table: frequency_ghz alpha_db_per_km.

        Blank lines and lines starting with '#' are skipped.
        """
        freqs, alphas = [], []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
                freqs.append(float(parts[0]) * 1e9)
                alphas.append(float(parts[1]))
        return cls(tuple(freqs), tuple(alphas))

    def covers(self, frequency_hz: float) -> bool:
        return self.frequencies_hz[0] <= frequency_hz <= self.frequencies_hz[-1]

    def alpha_db_per_km(self, frequency_hz: float) -> float:
        """Interpolated specific attenuation at the given frequency."""
        if not self.covers(frequency_hz):
            lo = self.frequencies_hz[0] / 1e9
            hi = self.frequencies_hz[-1] / 1e9
            raise FrequencyOutOfModelRange(
                f"{frequency_hz / 1e9:g} GHz outside the model span [{lo:g}, {hi:g}] GHz")
        return float(np.interp(frequency_hz, self.frequencies_hz, self.alphas_db_per_km))


def default_absorption_model() -> AbsorptionModel:
    """Two-point sea-level absorption model for the 30-300 GHz window.

    Calibrated so that a 100 m path at 30 GHz loses 0.2% of the power and
    a 50 m path at 300 GHz loses 2.3%, with a linear trend in between.
    Replace with a measured table (``AbsorptionModel.from_table``) for
    anything beyond first-order link studies.
    """
    alpha_30 = -10.0 * math.log10(0.998) / 0.1
    alpha_300 = -10.0 * math.log10(0.977) / 0.05
    return AbsorptionModel((30e9, 300e9), (alpha_30, alpha_300))


def aperture_gain_dbi(frequency_hz: float, aperture_m: float,
                      contour_db: float = 3.0, efficiency: float = 1.0) -> float:
    """Antenna gain of a circular aperture at a given beam contour.

    Peak gain is 20*log10(pi*D*f/c) for a uniformly illuminated dish of
    diameter D; the value at the contour is the peak minus the contour
    depth in dB.
    """
    if frequency_hz <= 0.0 or aperture_m <= 0.0:
        raise ValueError("frequency and aperture must be positive")
    if not (0.0 < efficiency <= 1.0):
        raise ValueError("efficiency must lie in (0, 1]")
    peak = 20.0 * math.log10(math.pi * aperture_m * frequency_hz / C_LIGHT)
    return peak + 10.0 * math.log10(efficiency) - contour_db


def friis_received_power(env: LinkEnvironment, pt_dbm: float) -> float:
    """Free-space received power in dBm.

    P_r = P_t + G_t + G_r + 20*log10(c / (4*pi*R*f)).  Gains come from
    ``env.gains_dbi`` when given, otherwise both ends use the aperture
    gain at the 3 dB contour.  This is a classical budget figure used for
    reporting; it does not feed the quantum channel transmissivity.
    """
    if env.distance_m <= 0.0:
        raise ValueError("distance must be positive")
    if env.gains_dbi is not None:
        gt, gr = env.gains_dbi
    else:
        gt = gr = aperture_gain_dbi(env.frequency_hz, env.aperture_m)
    path = 20.0 * math.log10(C_LIGHT / (4.0 * math.pi * env.distance_m * env.frequency_hz))
    return pt_dbm + gt + gr + path


def half_beamwidth_deg(frequency_ghz: float, aperture_m: float) -> float:
    """Half-beamwidth at the 3 dB contour in degrees, ~10/(f*D).

    Takes the frequency in GHz and the aperture diameter in meters.
    """
    if frequency_ghz <= 0.0 or aperture_m <= 0.0:
        raise ValueError("frequency and aperture must be positive")
    return 10.0 / (frequency_ghz * aperture_m)


def channel_from_environment(env: LinkEnvironment, model: AbsorptionModel) -> ThermalChannel:
    """Thermal channel seen by a mode crossing the configured link.

    Transmissivity follows exponential absorption,
    tau = 10^(-alpha(f) * R_km / 10); the injected noise occupation is the
    blackbody value at the environment temperature.
    """
    alpha = model.alpha_db_per_km(env.frequency_hz)
    tau = 10.0 ** (-alpha * (env.distance_m / 1000.0) / 10.0)
    nbar = mean_photon_number(env.frequency_hz, env.temperature_k)
    return ThermalChannel(tau=tau, nbar=nbar)


def eb_distance(env: LinkEnvironment, model: AbsorptionModel, scheme: str = SINGLE) -> float:
    """Distance (m) at which the link reaches the breaking transmissivity.

    Solves 10^(-alpha*R/10) = tau_eb(scheme, omega) for R.  Raises
    ``NoBreakingDistance`` when the threshold is never reached (vacuum
    noise for the single-channel scheme, or zero absorption).
    """
    omega = thermal_variance(env.frequency_hz, env.temperature_k)
    tau_eb = eb_transmissivity(scheme, omega)
    if tau_eb <= 0.0:
        raise NoBreakingDistance("entanglement survives at any transmissivity for this noise")
    alpha = model.alpha_db_per_km(env.frequency_hz)
    if alpha <= 0.0:
        raise NoBreakingDistance("zero absorption: the breaking transmissivity is never reached")
    return 1000.0 * (-10.0 * math.log10(tau_eb) / alpha)
