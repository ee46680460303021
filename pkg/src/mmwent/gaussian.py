"""Two-mode Gaussian states as covariance matrices under thermal-loss channels.

All covariance matrices (CMs) use the convention in which the vacuum
quadrature variance equals 1 (hbar = 2).  A two-mode CM is stored as the
4x4 real symmetric matrix

    M = [[A, C],
         [C.T, B]]

with 2x2 blocks: A and B hold the per-mode quadrature variances, C the
cross-mode correlations.  Mode 2 is always the transmitted mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NonPhysicalCM",
    "Squeezing",
    "ThermalChannel",
    "TwoModeCM",
    "tmsv_cm",
    "thermal_tms_cm",
    "evolve_single_channel",
    "direct_relay_cm",
    "swap_relay_cm",
    "nu_minus_pt",
    "log_negativity_cm",
    "eb_transmissivity",
    "SINGLE",
    "DIRECT_RELAY_SYMMETRIC",
    "SWAP_RELAY_SYMMETRIC",
    "SCHEMES",
]

SINGLE = "single"
DIRECT_RELAY_SYMMETRIC = "direct_relay_symmetric"
SWAP_RELAY_SYMMETRIC = "swap_relay_symmetric"
SCHEMES = (SINGLE, DIRECT_RELAY_SYMMETRIC, SWAP_RELAY_SYMMETRIC)

# Phase-flip block carried by two-mode squeezing correlations.
Z = np.diag([1.0, -1.0])
I2 = np.eye(2)

_SYMMETRY_TOL = 1e-12
_PHYSICALITY_TOL = 1e-9


class NonPhysicalCM(ValueError):
    """The matrix is not the covariance matrix of a physical two-mode state."""


@dataclass(frozen=True)
class Squeezing:
    """Two-mode squeezing strength r >= 0.

    The decibel value follows dB = 10*log10(exp(2r)), so 10 dB squeezing
    gives a quadrature variance cosh(2r) = 5.05 exactly.
    """

    r: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0.0):
            raise ValueError(f"squeezing parameter must be finite and >= 0, got {self.r!r}")

    @classmethod
    def from_db(cls, db: float) -> "Squeezing":
        """Build from the decibel squeezing value."""
        if db < 0.0:
            raise ValueError(f"squeezing in dB must be >= 0, got {db!r}")
        return cls(db * math.log(10.0) / 20.0)

    @classmethod
    def from_variance(cls, v: float) -> "Squeezing":
        """Build from the per-mode quadrature variance v = cosh(2r) >= 1."""
        if v < 1.0:
            raise ValueError(f"quadrature variance must be >= 1, got {v!r}")
        return cls(0.5 * math.acosh(v))

    @property
    def variance(self) -> float:
        """Per-mode quadrature variance v = cosh(2r)."""
        return math.cosh(2.0 * self.r)

    @property
    def db(self) -> float:
        """Squeezing in decibels, 10*log10(exp(2r))."""
        return 20.0 * self.r / math.log(10.0)

    @property
    def schmidt_lambda(self) -> float:
        """Schmidt parameter tanh(r) of the squeezed-vacuum photon ladder."""
        return math.tanh(self.r)


@dataclass(frozen=True)
class ThermalChannel:
    """Fixed-attenuation channel mixing in a thermal state.

    Attributes:
        tau: power transmissivity in [0, 1].
        nbar: mean photon number of the injected thermal noise, >= 0.
    """

    tau: float
    nbar: float

    def __post_init__(self):
        if not (0.0 <= self.tau <= 1.0):
            raise ValueError(f"transmissivity must lie in [0, 1], got {self.tau!r}")
        if not (math.isfinite(self.nbar) and self.nbar >= 0.0):
            raise ValueError(f"thermal occupation must be finite and >= 0, got {self.nbar!r}")

    @property
    def omega(self) -> float:
        """Quadrature variance 2*nbar + 1 of the injected noise."""
        return 2.0 * self.nbar + 1.0


def _det2(block: np.ndarray) -> float:
    return block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]


@dataclass(frozen=True, eq=False)
class TwoModeCM:
    """4x4 covariance matrix of a two-mode Gaussian state.

    Construction verifies symmetry, the vacuum bound on the diagonal and
    the two-mode uncertainty relation (ordinary symplectic eigenvalues
    >= 1 up to a small numerical tolerance).  Instances are immutable.
    """

    matrix: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.validate:
            self._check_physical()

    def _check_physical(self):
        m = self.matrix
        if np.max(np.abs(m - m.T)) > _SYMMETRY_TOL:
            raise NonPhysicalCM("covariance matrix is not symmetric")
        if np.min(np.diag(m)) < 1.0 - _PHYSICALITY_TOL:
            raise NonPhysicalCM("diagonal variance below the vacuum limit")
        # nu_min >= 1 is equivalent to Delta0 >= 2 and det M + 1 >= Delta0;
        # the polynomial form avoids the sqrt amplification of rounding noise
        # when the two symplectic eigenvalues degenerate (pure states).
        delta0 = _det2(self.a_block) + _det2(self.b_block) + 2.0 * _det2(self.c_block)
        dm = float(np.linalg.det(m))
        scale = max(1.0, abs(delta0), abs(dm))
        if delta0 < 2.0 - _PHYSICALITY_TOL * scale:
            raise NonPhysicalCM("uncertainty relation violated (nu_min < 1)")
        if dm + 1.0 - delta0 < -_PHYSICALITY_TOL * scale:
            raise NonPhysicalCM("uncertainty relation violated (nu_min < 1)")

    @classmethod
    def from_blocks(cls, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> "TwoModeCM":
        """Assemble from 2x2 blocks A, B (diagonal) and C (cross)."""
        m = np.block([[np.asarray(a, float), np.asarray(c, float)],
                      [np.asarray(c, float).T, np.asarray(b, float)]])
        return cls(m)

    @property
    def a_block(self) -> np.ndarray:
        return self.matrix[:2, :2]

    @property
    def b_block(self) -> np.ndarray:
        return self.matrix[2:, 2:]

    @property
    def c_block(self) -> np.ndarray:
        return self.matrix[:2, 2:]

    def symplectic_nu_minus(self) -> float:
        """Smallest ordinary symplectic eigenvalue (physicality witness)."""
        da = _det2(self.a_block)
        db = _det2(self.b_block)
        dc = _det2(self.c_block)
        dm = float(np.linalg.det(self.matrix))
        delta = da + db + 2.0 * dc
        disc = delta * delta - 4.0 * dm
        # A near-zero discriminant means degenerate eigenvalues; rounding
        # noise there would be sqrt-amplified, so it is flushed to zero.
        if disc < 1e-12 * (delta * delta + 4.0 * abs(dm)):
            disc = 0.0
        if delta <= 0.0:
            return 0.0
        nu2 = 2.0 * dm / (delta + math.sqrt(disc))
        return math.sqrt(max(nu2, 0.0))


def tmsv_cm(s: Squeezing) -> TwoModeCM:
    """Covariance matrix of a two-mode squeezed vacuum state.

    Diagonal blocks v*I with v = cosh(2r), cross blocks sqrt(v^2-1)*Z.
    """
    v = s.variance
    c = math.sqrt(max(v * v - 1.0, 0.0))
    return TwoModeCM.from_blocks(v * I2, v * I2, c * Z)


def thermal_tms_cm(s: Squeezing, nbar_alpha: float, nbar_beta: float) -> TwoModeCM:
    """Covariance matrix of a two-mode squeezed state seeded by thermal modes.

    Args:
        s: squeezing applied to the two input modes.
        nbar_alpha: mean photon number of the first input thermal mode.
        nbar_beta: mean photon number of the second input thermal mode.

    Reduces to ``tmsv_cm(s)`` for vacuum inputs.
    """
    if nbar_alpha < 0.0 or nbar_beta < 0.0:
        raise ValueError("input thermal occupations must be >= 0")
    ch2 = math.cosh(s.r) ** 2
    sh2 = math.sinh(s.r) ** 2
    a = 2.0 * nbar_alpha * ch2 + 2.0 * nbar_beta * sh2 + math.cosh(2.0 * s.r)
    b = 2.0 * nbar_alpha * sh2 + 2.0 * nbar_beta * ch2 + math.cosh(2.0 * s.r)
    c = (nbar_alpha + nbar_beta + 1.0) * math.sinh(2.0 * s.r)
    return TwoModeCM.from_blocks(a * I2, b * I2, c * Z)


def evolve_single_channel(m: TwoModeCM, ch: ThermalChannel) -> TwoModeCM:
    """Send mode 2 of a two-mode state through a thermal-loss channel.

    Applies the affine CM map of a fixed-attenuation channel to the
    transmitted mode: B -> tau*B + (1-tau)*omega*I, C -> sqrt(tau)*C.
    Works for arbitrary input CMs, so repeated application composes
    multi-hop links.
    """
    st = math.sqrt(ch.tau)
    a = m.a_block
    b = ch.tau * m.b_block + (1.0 - ch.tau) * ch.omega * I2
    c = st * m.c_block
    return TwoModeCM.from_blocks(a, b, c)


def direct_relay_cm(s: Squeezing, ch_a: ThermalChannel, ch_b: ThermalChannel) -> TwoModeCM:
    """Two-hop transmission: mode 2 crosses channel a, is reflected at the
    relay, then crosses channel b.  Closed form of the composed map."""
    v = s.variance
    ta, tb = ch_a.tau, ch_b.tau
    vp = tb * (ta * v + (1.0 - ta) * ch_a.omega) + (1.0 - tb) * ch_b.omega
    c = math.sqrt(ta * tb) * math.sqrt(max(v * v - 1.0, 0.0))
    return TwoModeCM.from_blocks(v * I2, vp * I2, c * Z)


def swap_relay_cm(s: Squeezing, ch_a: ThermalChannel, ch_b: ThermalChannel) -> TwoModeCM:
    """End-to-end state after a Bell measurement at the relay.

    Both parties hold a two-mode squeezed vacuum with the same squeezing;
    one mode of each crosses its channel to the relay, where the received
    modes are mixed on a balanced beam splitter and conjugately homodyned.
    With optimal displacement the conditional state averaged over outcomes
    is Gaussian with the CM returned here.  The cross block is stored with
    the same sign structure as ``tmsv_cm`` (log-negativity only depends on
    its determinant).
    """
    v = s.variance
    ta, tb = ch_a.tau, ch_b.tau
    theta = (ta + tb) * v + (1.0 - ta) * ch_a.omega + (1.0 - tb) * ch_b.omega
    if theta <= 0.0:
        raise ValueError(f"relay normalization must be positive, got {theta!r}")
    k = (v * v - 1.0) / theta
    a = v - k * ta
    b = v - k * tb
    c = k * math.sqrt(ta * tb)
    return TwoModeCM.from_blocks(a * I2, b * I2, c * Z)


def nu_minus_pt(m: TwoModeCM) -> float:
    """Smallest symplectic eigenvalue of the partially transposed CM.

    nu_minus < 1 certifies entanglement of the Gaussian state.
    """
    da = _det2(m.a_block)
    db = _det2(m.b_block)
    dc = _det2(m.c_block)
    dm = float(np.linalg.det(m.matrix))
    delta = da + db - 2.0 * dc
    disc = delta * delta - 4.0 * dm
    if disc < -_PHYSICALITY_TOL * max(1.0, delta * delta):
        raise NonPhysicalCM("partially transposed CM has complex symplectic spectrum")
    # quotient form of (delta - sqrt(disc)) / 2: no cancellation when the
    # two eigenvalues are far apart (strongly entangled states)
    nu2 = 2.0 * dm / (delta + math.sqrt(max(disc, 0.0)))
    if nu2 <= 0.0:
        raise NonPhysicalCM("partially transposed CM has non-positive nu_minus^2")
    return math.sqrt(nu2)


def log_negativity_cm(m: TwoModeCM) -> float:
    """Logarithmic negativity of a two-mode Gaussian state.

    Computes Delta = det A + det B - 2 det C, the smallest symplectic
    eigenvalue nu_minus of the partial transpose from
    nu^2 = (Delta - sqrt(Delta^2 - 4 det M)) / 2, and returns
    max(0, -log2(nu_minus)).
    """
    return max(0.0, -math.log2(nu_minus_pt(m)))


def eb_transmissivity(scheme: str, omega: float) -> float:
    """Transmissivity at and below which entanglement is broken.

    Args:
        scheme: one of ``single``, ``direct_relay_symmetric`` or
            ``swap_relay_symmetric``.  Relay values are per channel in the
            symmetric setting (equal transmissivity and noise both hops).
        omega: thermal noise quadrature variance, >= 1.

    Returns:
        (omega-1)/(omega+1) for a single channel,
        sqrt(omega^2-1)/(omega+1) for the reflecting relay,
        omega/(omega+1) for the swapping relay.
    """
    if omega < 1.0:
        raise ValueError(f"noise variance must be >= 1, got {omega!r}")
    if scheme == SINGLE:
        return (omega - 1.0) / (omega + 1.0)
    if scheme == DIRECT_RELAY_SYMMETRIC:
        return math.sqrt(omega * omega - 1.0) / (omega + 1.0)
    if scheme == SWAP_RELAY_SYMMETRIC:
        return omega / (omega + 1.0)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
