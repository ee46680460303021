"""Truncated two-mode Fock-space engine for non-Gaussian entangled states.

Density operators are dense complex matrices indexed by photon-number
pairs (m1, m2) <-> row, (n1, n2) <-> column with flat index m1*d2 + m2.
Mode 2 is the transmitted mode; a fixed-attenuation channel with thermal
noise acts on it through an operator-sum (Kraus) representation.  Two
independent evaluation routes are provided: materialized Kraus operators
conjugating the state, and a direct sum over the elementary evolution of
each |m'><n'| of the transmitted mode.  Their agreement is part of the
test contract.

Every big sum is assembled in log space (log-gamma accumulation with sign
tracking), so indices well beyond 20 photons stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .gaussian import Squeezing, ThermalChannel

__all__ = [
    "TruncationTooSmall",
    "CutoffInsufficient",
    "NonConverged",
    "TruncationPolicy",
    "FockDensityOp",
    "KrausSet",
    "pss_coefficients",
    "pss_creation_probability",
    "pss_density",
    "tmsv_fock_density",
    "noon_density",
    "build_kraus_set",
    "evolve_mode2",
    "partial_transpose",
    "negativity_fock",
    "log_negativity_fock",
    "ConvergenceReport",
    "log_negativity_converged",
    "dump_triplets",
]

_HERMITICITY_TOL = 1e-12
_TRACE_TOL = 1e-9
# Partial-transpose eigenvalues above this floor count as truncation noise.
_NEGATIVE_EIG_FLOOR = -1e-10
# Thermal summation terms beyond this remaining tail mass are dropped.
_WEIGHT_TAIL_CUT = 1e-15


class TruncationTooSmall(ValueError):
    """The requested cutoff drops too much probability mass."""


class CutoffInsufficient(RuntimeError):
    """Kraus summation cutoffs leave a visible completeness defect."""


class NonConverged(RuntimeError):
    """Log-negativity keeps moving when the truncation is refined."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Cutoffs controlling the truncated evolution.

    Attributes:
        total_photon_cutoff: joint two-mode photon-number cutoff for
            squeezed-ladder states; for states without a joint cutoff
            (number-bounded inputs) it serves as the mode-2 headroom added
            for injected noise.
        thermal_index_cutoff: bound on the thermal summation index; when
            None it defaults to ceil(20 * (nbar + 1)).
        convergence_tol: accepted log-negativity movement under cutoff
            doubling.
        completeness_tol: accepted completeness defect of a materialized
            Kraus set on the interior of its truncated space.
    """

    total_photon_cutoff: int = 16
    thermal_index_cutoff: int | None = None
    convergence_tol: float = 1e-3
    completeness_tol: float = 1e-6

    def __post_init__(self):
        if self.total_photon_cutoff < 1:
            raise ValueError("total_photon_cutoff must be >= 1")
        if self.thermal_index_cutoff is not None and self.thermal_index_cutoff < 1:
            raise ValueError("thermal_index_cutoff must be >= 1 when given")
        if self.convergence_tol <= 0.0 or self.completeness_tol <= 0.0:
            raise ValueError("tolerances must be positive")

    def resolved_thermal_cutoff(self, nbar: float) -> int:
        if self.thermal_index_cutoff is not None:
            return self.thermal_index_cutoff
        return max(1, math.ceil(20.0 * (nbar + 1.0)))


@dataclass(frozen=True, eq=False)
class FockDensityOp:
    """Truncated two-mode density operator.

    Attributes:
        cutoff1, cutoff2: per-mode maximum photon numbers.
        coeffs: dense Hermitian complex matrix, flat index m1*(cutoff2+1)+m2.
        trace_deficit: probability mass lost to truncation so far.
        total_cutoff: optional joint photon-number cutoff; entries with
            m1+m2 above it are kept identically zero.
    """

    cutoff1: int
    cutoff2: int
    coeffs: np.ndarray
    trace_deficit: float = 0.0
    total_cutoff: int | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.cutoff1 < 0 or self.cutoff2 < 0:
            raise ValueError("cutoffs must be >= 0")
        m = np.array(self.coeffs, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"expected coeffs of shape ({self.dim}, {self.dim}), got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "coeffs", m)
        if self.validate:
            if np.max(np.abs(m - m.conj().T)) > _HERMITICITY_TOL:
                raise ValueError("density operator is not Hermitian")
            if self.trace_deficit < -_TRACE_TOL:
                raise ValueError("trace deficit must be >= 0")
            if abs(self.trace() + self.trace_deficit - 1.0) > _TRACE_TOL:
                raise ValueError("trace plus trace deficit must equal 1")

    @property
    def dim1(self) -> int:
        return self.cutoff1 + 1

    @property
    def dim2(self) -> int:
        return self.cutoff2 + 1

    @property
    def dim(self) -> int:
        return self.dim1 * self.dim2

    def as_grid(self) -> np.ndarray:
        """View with axes (m1, m2, n1, n2)."""
        return self.coeffs.reshape(self.dim1, self.dim2, self.dim1, self.dim2)

    def trace(self) -> float:
        return float(np.trace(self.coeffs).real)

    def purity(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def mode2_marginal(self) -> np.ndarray:
        """Reduced density matrix of the transmitted mode."""
        return np.einsum("abac->bc", self.as_grid())

    def check_state(self, psd_tol: float = -1e-9) -> None:
        """Raise if the operator fails the state invariants (PSD included)."""
        if np.max(np.abs(self.coeffs - self.coeffs.conj().T)) > _HERMITICITY_TOL:
            raise ValueError("not Hermitian")
        if abs(self.trace() + self.trace_deficit - 1.0) > _TRACE_TOL:
            raise ValueError("trace accounting broken")
        eig = np.linalg.eigvalsh(self.coeffs)
        if eig.min() < psd_tol:
            raise ValueError(f"negative eigenvalue {eig.min():g} below tolerance")


def pss_coefficients(s: Squeezing, kappa: float, n_max: int) -> np.ndarray:
    """Photon-ladder coefficients of the photon-subtracted squeezed state.

    q_n = sqrt((1 - (lam*kappa)^2)^3 / (1 + (lam*kappa)^2)) * (lam*kappa)^n * (n+1)
    with lam = tanh(r); one photon subtracted from each mode through beam
    splitters of transmissivity kappa.
    """
    if not (0.0 <= kappa <= 1.0):
        raise ValueError(f"kappa must lie in [0, 1], got {kappa!r}")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    lk = s.schmidt_lambda * kappa
    n = np.arange(n_max + 1, dtype=float)
    pref = math.sqrt((1.0 - lk * lk) ** 3 / (1.0 + lk * lk))
    return pref * lk ** n * (n + 1.0)


def pss_creation_probability(s: Squeezing, kappa: float) -> float:
    """Probability of the double photon-subtraction event succeeding."""
    if not (0.0 <= kappa <= 1.0):
        raise ValueError(f"kappa must lie in [0, 1], got {kappa!r}")
    lam = s.schmidt_lambda
    lk2 = (lam * kappa) ** 2
    return lam * lam * (1.0 - lam * lam) * (1.0 + lk2) * (1.0 - kappa) ** 2 / (1.0 - lk2) ** 3


def _schmidt_diagonal_density(q: np.ndarray, total_cutoff: int) -> FockDensityOp:
    """Rank-1 projector onto sum_n q_n |n>|n>, kept coefficients as given."""
    d = q.size
    psi = np.zeros(d * d, dtype=complex)
    psi[np.arange(d) * d + np.arange(d)] = q
    deficit = 1.0 - float(q @ q)
    return FockDensityOp(cutoff1=d - 1, cutoff2=d - 1, coeffs=np.outer(psi, psi.conj()),
                         trace_deficit=deficit, total_cutoff=total_cutoff)


def pss_density(s: Squeezing, kappa: float, policy: TruncationPolicy) -> FockDensityOp:
    """Truncated density operator of the photon-subtracted squeezed state.

    The joint photon number is cut at policy.total_photon_cutoff; the
    dropped ladder weight is recorded as the trace deficit.
    """
    if s.r == 0.0 or kappa == 0.0:
        raise ValueError("photon subtraction succeeds with probability zero at lam*kappa = 0; "
                         "the conditional state is undefined")
    n_keep = policy.total_photon_cutoff // 2
    if n_keep < 1:
        raise TruncationTooSmall("total photon cutoff below one ladder rung")
    q = pss_coefficients(s, kappa, n_keep)
    deficit = 1.0 - float(q @ q)
    if deficit > 0.01:
        raise TruncationTooSmall(f"truncation drops {deficit:.3g} of the state weight")
    return _schmidt_diagonal_density(q, policy.total_photon_cutoff)


def tmsv_fock_density(s: Squeezing, policy: TruncationPolicy) -> FockDensityOp:
    """Truncated two-mode squeezed vacuum in the photon-number basis.

    Ladder coefficients sqrt(1 - lam^2) * lam^n with lam = tanh(r).
    """
    lam = s.schmidt_lambda
    n_keep = policy.total_photon_cutoff // 2
    if n_keep < 1:
        raise TruncationTooSmall("total photon cutoff below one ladder rung")
    n = np.arange(n_keep + 1, dtype=float)
    q = math.sqrt(1.0 - lam * lam) * lam ** n
    deficit = 1.0 - float(q @ q)
    if deficit > 0.01:
        raise TruncationTooSmall(f"truncation drops {deficit:.3g} of the state weight")
    return _schmidt_diagonal_density(q, policy.total_photon_cutoff)


def noon_density(n: int) -> FockDensityOp:
    """Density operator of (|n,0> + |0,n>)/sqrt(2); exact at cutoff n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = n + 1
    rho = np.zeros((d * d, d * d), dtype=complex)
    i_n0 = n * d
    i_0n = n
    for i in (i_n0, i_0n):
        for j in (i_n0, i_0n):
            rho[i, j] = 0.5
    return FockDensityOp(cutoff1=n, cutoff2=n, coeffs=rho)


# ---------------------------------------------------------------------------
# Thermal-loss Kraus machinery
# ---------------------------------------------------------------------------

def _thermal_log_weight(nbar: float, n: int) -> float:
    """log of nbar^n / (nbar+1)^(n+1), the thermal number distribution."""
    if nbar == 0.0:
        return 0.0 if n == 0 else -math.inf
    return n * math.log(nbar) - (n + 1) * math.log(nbar + 1.0)


def _kraus_band(ell: int, n: int, in_dim: int, out_dim: int,
                log_tau: float, log_1mt: float, lf: np.ndarray):
    """Diagonal band of the (ell, n) Kraus operator.

    Returns (m_lo, g) where g[k] is the amplitude taking input level
    m = m_lo + k to output level m + n - ell, or None when the band misses
    the truncated space.  The thermal weight prefactor is not included.
    """
    offset = n - ell
    m_lo = max(0, ell - n)
    m_hi = min(in_dim - 1, out_dim - 1 - offset)
    if m_hi < m_lo:
        return None
    m = np.arange(m_lo, m_hi + 1)
    jmax = min(n, ell)
    j = np.arange(0, jmax + 1)
    idx = m[:, None] - ell + j[None, :]          # m - ell + j
    valid = idx >= 0
    idx_safe = np.where(valid, idx, 0)
    lt = (0.5 * (lf[m + offset] + lf[ell] + lf[m] + lf[n]))[:, None] \
        - lf[idx_safe] - lf[ell - j][None, :] - lf[n - j][None, :] - lf[j][None, :] \
        + 0.5 * ((ell + n - 2 * j)[None, :] * log_1mt + (idx_safe + j[None, :]) * log_tau)
    lt = np.where(valid, lt, -np.inf)
    shift = lt.max(axis=1)
    sign = np.where((n - j) % 2 == 0, 1.0, -1.0)
    g = np.exp(shift) * np.einsum("mj,j->m", np.exp(lt - shift[:, None]), sign)
    return m_lo, g


def _identity_superop(in_dim: int, out_dim: int) -> np.ndarray:
    s = np.zeros((out_dim, out_dim, in_dim, in_dim))
    k = np.arange(min(in_dim, out_dim))
    s[k[:, None], k[None, :], k[:, None], k[None, :]] = 1.0
    return s


def _replacement_superop(nbar: float, in_dim: int, out_dim: int, n_cutoff: int) -> np.ndarray:
    s = np.zeros((out_dim, out_dim, in_dim, in_dim))
    k = np.arange(in_dim)
    for level in range(min(out_dim - 1, n_cutoff) + 1):
        w = math.exp(_thermal_log_weight(nbar, level))
        s[level, level, k, k] = w
    return s


def _superop_tensor(tau: float, nbar: float, in_dim: int, out_dim: int,
                    n_cutoff: int) -> np.ndarray:
    """One-mode channel map S[(M, N), (m', n')], assembled band by band."""
    if tau == 1.0:
        return _identity_superop(in_dim, out_dim)
    if tau == 0.0:
        return _replacement_superop(nbar, in_dim, out_dim, n_cutoff)
    log_tau = math.log(tau)
    log_1mt = math.log1p(-tau)
    lf = gammaln(np.arange(in_dim + out_dim + 2 * n_cutoff + 4, dtype=float) + 1.0)
    ratio = nbar / (nbar + 1.0)
    s = np.zeros((out_dim, out_dim, in_dim, in_dim))
    for n in range(n_cutoff + 1):
        if nbar == 0.0 and n > 0:
            break
        if n > 0 and ratio ** n < _WEIGHT_TAIL_CUT:
            break
        w = math.exp(0.5 * _thermal_log_weight(nbar, n))
        for ell in range(max(0, n - (out_dim - 1)), n + in_dim):
            band = _kraus_band(ell, n, in_dim, out_dim, log_tau, log_1mt, lf)
            if band is None:
                continue
            m_lo, g = band
            g = w * g
            m = np.arange(m_lo, m_lo + g.size)
            big = m + (n - ell)
            s[big[:, None], big[None, :], m[:, None], m[None, :]] += np.outer(g, g)
    return s


@lru_cache(maxsize=4)
def _superop_cached(tau: float, nbar: float, in_dim: int, out_dim: int,
                    n_cutoff: int) -> np.ndarray:
    s = _superop_tensor(tau, nbar, in_dim, out_dim, n_cutoff)
    s.setflags(write=False)
    return s


def _quadsum_superop(tau: float, nbar: float, in_dim: int, out_dim: int,
                     n_cutoff: int) -> np.ndarray:
    """Literal elementary-operator evolution |m'><n'| -> sum over (n, l, j, j').

    Independent of the banded Kraus assembly above; used to cross-check it.
    """
    if tau == 1.0:
        return _identity_superop(in_dim, out_dim)
    if tau == 0.0:
        return _replacement_superop(nbar, in_dim, out_dim, n_cutoff)
    log_tau = math.log(tau)
    log_1mt = math.log1p(-tau)
    lf = gammaln(np.arange(in_dim + out_dim + 2 * n_cutoff + 4, dtype=float) + 1.0)
    s = np.zeros((out_dim, out_dim, in_dim, in_dim))
    for n in range(n_cutoff + 1):
        if nbar == 0.0 and n > 0:
            break
        logw = _thermal_log_weight(nbar, n)
        j = np.arange(0, n + 1)
        sign = np.where(j % 2 == 0, 1.0, -1.0)
        sign2 = sign[None, :, None] * sign[None, None, :]        # (-1)^(j+j')
        for mp in range(in_dim):
            for np_ in range(in_dim):
                lmax = min(mp + n, np_ + n)
                ell = np.arange(0, lmax + 1)
                big_m = mp + n - ell
                big_n = np_ + n - ell
                keep = (big_m <= out_dim - 1) & (big_n <= out_dim - 1)
                if not keep.any():
                    continue
                ea = ell[:, None, None]
                ja = j[None, :, None]
                jb = j[None, None, :]
                valid = (ja <= np.minimum(n, ea)) & (ja >= ea - mp) \
                    & (jb <= np.minimum(n, ea)) & (jb >= ea - np_)
                i1 = np.where(valid, mp - ea + ja, 0)
                i2 = np.where(valid, np_ - ea + jb, 0)
                lt = 0.5 * (lf[big_m][:, None, None] + lf[ea] + lf[mp] + lf[n]) \
                    + 0.5 * (lf[big_n][:, None, None] + lf[ea] + lf[np_] + lf[n]) \
                    - lf[i1] - lf[np.where(valid, ea - ja, 0)] - lf[n - ja] - lf[ja] \
                    - lf[i2] - lf[np.where(valid, ea - jb, 0)] - lf[n - jb] - lf[jb] \
                    + (ea + n - ja - jb) * log_1mt \
                    + 0.5 * (mp + np_ - 2 * ea + 2 * ja + 2 * jb) * log_tau
                lt = np.where(valid, lt, -np.inf)
                shift = lt.max(axis=(1, 2))
                vals = np.exp(shift + logw) * np.einsum(
                    "ljk,ljk->l", np.exp(lt - shift[:, None, None]), np.broadcast_to(sign2, lt.shape))
                s[big_m[keep], big_n[keep], mp, np_] += vals[keep]
    return s


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Materialized thermal-loss Kraus operators on a truncated mode.

    Attributes:
        channel: the (tau, nbar) channel the set realizes.
        mode_cutoff: single-mode photon-number cutoff of each operator.
        ell_cutoff, n_cutoff: loss-index and thermal-index summation bounds.
        indices: (ell, n) pair of each operator in ``operators``.
        completeness_defect: max deviation of sum(G^dag G) from the
            identity on inputs with at most mode_cutoff // 2 photons.
    """

    channel: ThermalChannel
    mode_cutoff: int
    ell_cutoff: int
    n_cutoff: int
    indices: tuple
    operators: tuple
    completeness_defect: float


def build_kraus_set(ch: ThermalChannel, mode_cutoff: int,
                    policy: TruncationPolicy | None = None) -> KrausSet:
    """Materialize the thermal-loss Kraus operators on a truncated mode.

    Operators are built for every thermal index n up to the policy's
    thermal cutoff and every loss index ell that intersects the truncated
    space.  Raises ``CutoffInsufficient`` when the completeness defect on
    the interior subspace (inputs with at most mode_cutoff // 2 photons)
    exceeds the policy tolerance.
    """
    if mode_cutoff < 1:
        raise ValueError("mode_cutoff must be >= 1")
    policy = policy or TruncationPolicy()
    d = mode_cutoff + 1
    n_cut = policy.resolved_thermal_cutoff(ch.nbar)
    ell_cut = mode_cutoff + n_cut
    if ch.tau in (0.0, 1.0):
        # Degenerate channels have trivial closed forms; build them directly.
        ops, idx = [], []
        if ch.tau == 1.0:
            ops.append(np.eye(d))
            idx.append((0, 0))
        else:
            for level in range(min(mode_cutoff, n_cut) + 1):
                w = math.sqrt(math.exp(_thermal_log_weight(ch.nbar, level)))
                for k in range(d):
                    g = np.zeros((d, d))
                    g[level, k] = w
                    idx.append((k, level))
                    ops.append(g)
    else:
        log_tau = math.log(ch.tau)
        log_1mt = math.log1p(-ch.tau)
        lf = gammaln(np.arange(2 * d + 2 * n_cut + 4, dtype=float) + 1.0)
        ops, idx = [], []
        for n in range(n_cut + 1):
            if ch.nbar == 0.0 and n > 0:
                break
            w = math.exp(0.5 * _thermal_log_weight(ch.nbar, n))
            for ell in range(ell_cut + 1):
                band = _kraus_band(ell, n, d, d, log_tau, log_1mt, lf)
                if band is None:
                    continue
                m_lo, g = band
                gm = np.zeros((d, d))
                m = np.arange(m_lo, m_lo + g.size)
                gm[m + (n - ell), m] = w * g
                idx.append((ell, n))
                ops.append(gm)
    total = np.zeros((d, d))
    for g in ops:
        total += g.T @ g
    interior = mode_cutoff // 2 + 1
    defect = float(np.max(np.abs(total[:interior, :interior] - np.eye(interior))))
    if defect > policy.completeness_tol:
        raise CutoffInsufficient(
            f"completeness defect {defect:.3g} exceeds {policy.completeness_tol:g} "
            f"(mode_cutoff={mode_cutoff}, n_cutoff={n_cut})")
    for g in ops:
        g.setflags(write=False)
    return KrausSet(channel=ch, mode_cutoff=mode_cutoff, ell_cutoff=ell_cut,
                    n_cutoff=n_cut, indices=tuple(idx), operators=tuple(ops),
                    completeness_defect=defect)


@lru_cache(maxsize=2)
def _kraus_set_cached(ch: ThermalChannel, mode_cutoff: int,
                      policy: TruncationPolicy) -> "KrausSet":
    return build_kraus_set(ch, mode_cutoff, policy)


def _apply_mode2_superop(s: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Contract the one-mode map over the mode-2 axes of a two-mode grid.

    The map conserves the photon-number offset m2 - n2 of each element,
    so it is applied one diagonal block at a time.
    """
    out_dim = s.shape[0]
    in_dim = s.shape[2]
    d1 = grid.shape[0]
    out = np.zeros((d1, out_dim, d1, out_dim), dtype=grid.dtype)
    for delta in range(-(in_dim - 1), in_dim):
        m2 = np.arange(max(0, delta), min(in_dim, in_dim + delta))
        big = np.arange(max(0, delta), min(out_dim, out_dim + delta))
        if m2.size == 0 or big.size == 0:
            continue
        block = s[big[:, None], big[:, None] - delta, m2[None, :], m2[None, :] - delta]
        x = grid[:, m2, :, m2 - delta]              # (k_in, d1, d1)
        out[:, big, :, big - delta] += np.einsum("oi,iab->oab", block, x)
    return out


def evolve_mode2(rho: FockDensityOp, ch: ThermalChannel, policy: TruncationPolicy,
                 method: str = "superop") -> FockDensityOp:
    """Send mode 2 of a two-mode state through a thermal-loss channel.

    Args:
        rho: input state; mode 1 is untouched.
        ch: channel transmissivity and thermal occupation.
        policy: truncation control; for joint-cutoff states the output
            keeps the same joint cutoff, otherwise mode 2 grows by
            ``policy.total_photon_cutoff`` levels of noise headroom.
        method: "superop" (banded Kraus assembly, default), "quadsum"
            (literal elementary-operator sum) or "kraus" (explicit
            conjugation with a materialized ``KrausSet``).  All three
            agree to floating accuracy.

    Probability flowing above the truncated space is added to the trace
    deficit of the output.
    """
    d1 = rho.dim1
    in2 = rho.dim2
    if rho.total_cutoff is not None:
        out2 = rho.total_cutoff + 1
    else:
        out2 = in2 + policy.total_photon_cutoff
    out2 = max(out2, in2)
    n_cut = policy.resolved_thermal_cutoff(ch.nbar)
    grid = rho.as_grid()
    if method == "superop":
        s = _superop_cached(ch.tau, ch.nbar, in2, out2, n_cut)
        out_grid = _apply_mode2_superop(s, grid)
    elif method == "quadsum":
        s = _quadsum_superop(ch.tau, ch.nbar, in2, out2, n_cut)
        out_grid = _apply_mode2_superop(s, grid)
    elif method == "kraus":
        mc = max(in2, out2) - 1
        ks = _kraus_set_cached(ch, mc, policy)
        big = np.zeros((d1, mc + 1, d1, mc + 1), dtype=complex)
        big[:, :in2, :, :in2] = grid
        acc = np.zeros_like(big)
        for g in ks.operators:
            t = np.tensordot(g, big, axes=(1, 1))          # (i, a, b, l)
            t = np.tensordot(t, g.conj(), axes=(3, 1))     # (i, a, b, k)
            acc += t.transpose(1, 0, 2, 3)
        out_grid = acc[:, :out2, :, :out2]
    else:
        raise ValueError(f"unknown evolution method {method!r}")
    if rho.total_cutoff is not None:
        keep = (np.arange(d1)[:, None] + np.arange(out2)[None, :]) <= rho.total_cutoff
        out_grid = out_grid * keep[:, :, None, None] * keep[None, None, :, :]
    coeffs = np.ascontiguousarray(out_grid.reshape(d1 * out2, d1 * out2))
    lost = rho.trace() - float(np.trace(coeffs).real)
    return FockDensityOp(cutoff1=rho.cutoff1, cutoff2=out2 - 1, coeffs=coeffs,
                         trace_deficit=rho.trace_deficit + lost,
                         total_cutoff=rho.total_cutoff)


def partial_transpose(rho: FockDensityOp) -> np.ndarray:
    """Transpose the bra/ket indices of mode 2; returns a Hermitian matrix."""
    grid = rho.as_grid()
    return np.ascontiguousarray(grid.transpose(0, 3, 2, 1).reshape(rho.dim, rho.dim))


def negativity_fock(rho: FockDensityOp) -> float:
    """Magnitude of the negative part of the partial-transpose spectrum.

    Eigenvalues above -1e-10 are treated as truncation noise.
    """
    eig = np.linalg.eigvalsh(partial_transpose(rho))
    neg = eig[eig < _NEGATIVE_EIG_FLOOR]
    return float(-neg.sum())


def log_negativity_fock(rho: FockDensityOp) -> float:
    """Logarithmic negativity log2(1 + 2 * negativity)."""
    return math.log2(1.0 + 2.0 * negativity_fock(rho))


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of evaluating an evolved state under cutoff doubling."""

    value: float
    converged: bool
    history: tuple
    policy: TruncationPolicy
    trace_deficit: float


def log_negativity_converged(build_state: Callable[[TruncationPolicy], FockDensityOp],
                             ch: ThermalChannel, policy: TruncationPolicy,
                             max_rounds: int = 2, strict: bool = False,
                             method: str = "superop") -> ConvergenceReport:
    """Log-negativity of the evolved state with a cutoff-doubling check.

    Rebuilds the input state and re-evolves it with the joint photon
    cutoff doubled until successive values move by at most the policy's
    convergence tolerance (an explicitly pinned thermal cutoff is doubled
    alongside).  The refined value is reported.  When the budget of
    ``max_rounds`` doublings is exhausted the result is flagged, and with
    ``strict=True`` a ``NonConverged`` error is raised instead.
    """
    pol = policy
    history = []
    deficits = []
    for round_idx in range(max_rounds + 1):
        out = evolve_mode2(build_state(pol), ch, pol, method=method)
        history.append(log_negativity_fock(out))
        deficits.append(out.trace_deficit)
        if len(history) >= 2 and abs(history[-1] - history[-2]) <= policy.convergence_tol:
            return ConvergenceReport(value=history[-1], converged=True,
                                     history=tuple(history), policy=pol,
                                     trace_deficit=deficits[-1])
        if round_idx < max_rounds:
            pol = replace(
                pol,
                total_photon_cutoff=2 * pol.total_photon_cutoff,
                thermal_index_cutoff=(2 * pol.thermal_index_cutoff
                                      if pol.thermal_index_cutoff is not None else None))
    if strict:
        raise NonConverged(
            f"log-negativity still moving by {abs(history[-1] - history[-2]):.3g} "
            f"after {max_rounds} doublings (tol {policy.convergence_tol:g})")
    return ConvergenceReport(value=history[-1], converged=False, history=tuple(history),
                             policy=pol, trace_deficit=deficits[-1])


def dump_triplets(rho: FockDensityOp, path_or_file) -> None:
    """Write the nonzero entries as plain-text (row, col, re, im) triplets."""
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", encoding="utf-8") if own else path_or_file
    try:
        fh.write(f"# two-mode fock density operator, cutoffs ({rho.cutoff1}, {rho.cutoff2})\n")
        fh.write(f"# trace_deficit {rho.trace_deficit!r}\n")
        rows, cols = np.nonzero(rho.coeffs)
        for i, j in zip(rows.tolist(), cols.tolist()):
            v = complex(rho.coeffs[i, j])
            fh.write(f"{i} {j} {v.real!r} {v.imag!r}\n")
    finally:
        if own:
            fh.close()
