"""Acceptance suite: every release criterion at its pinned tolerance.

Each criterion prints one PASS/FAIL line (run with ``pytest -s`` to see
them on success).  Criterion 7 carries two anchor pairs at 30 GHz that no
exponential absorption model can satisfy simultaneously; the default
table is calibrated to the loss-percentage anchors (0.2% over 100 m),
which keeps the breaking-distance anchor inside its window and leaves
the 30 GHz entanglement anchor honestly red.  The numbers are spelled
out in the assertion message.
"""

import math
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import brentq

from mmwent.fock import (
    FockDensityOp,
    TruncationPolicy,
    build_kraus_set,
    evolve_mode2,
    log_negativity_converged,
    log_negativity_fock,
    noon_density,
    pss_density,
    tmsv_fock_density,
)
from mmwent.gaussian import (
    DIRECT_RELAY_SYMMETRIC,
    SINGLE,
    SWAP_RELAY_SYMMETRIC,
    Squeezing,
    ThermalChannel,
    direct_relay_cm,
    eb_transmissivity,
    evolve_single_channel,
    log_negativity_cm,
    nu_minus_pt,
    swap_relay_cm,
    tmsv_cm,
)
from mmwent.link import (
    LinkEnvironment,
    aperture_gain_dbi,
    channel_from_environment,
    default_absorption_model,
    eb_distance,
    half_beamwidth_deg,
    mean_photon_number,
)
from mmwent.sweeps import FIG1, FIG2, FIG3, default_spec, run_sweep, write_csv

NBAR_300GHZ_300K = 20.340618339036453
ONE_EBIT = Squeezing.from_variance(1.25)


@contextmanager
def criterion(num, text):
    try:
        yield
    except Exception:
        print(f"ACCEPTANCE {num} FAIL: {text}")
        raise
    print(f"ACCEPTANCE {num} PASS: {text}")


def test_criterion_1_thermal_preparation_thresholds():
    with criterion(1, "thermal-preparation zero crossings at 70 K +- 5 K and 16 dB +- 0.5 dB"):
        t0 = time.monotonic()
        result = run_sweep(default_spec(FIG1))
        temp_line = next(f for f in result.footers if "temp_crossing_k" in f)
        db_line = next(f for f in result.footers if "squeeze_crossing_db" in f)
        t_star = float(temp_line.rsplit("value=", 1)[1])
        db_star = float(db_line.rsplit("value=", 1)[1])
        elapsed = time.monotonic() - t0
        assert abs(t_star - 70.0) <= 5.0, f"10 dB crossing at {t_star:.2f} K"
        assert abs(db_star - 16.0) <= 0.5, f"300 K crossing at {db_star:.3f} dB"
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def _nu_root(scheme, omega, r):
    s = Squeezing(r)
    nbar = (omega - 1.0) / 2.0

    def nu(tau):
        ch = ThermalChannel(tau, nbar)
        if scheme == SINGLE:
            m = evolve_single_channel(tmsv_cm(s), ch)
        elif scheme == DIRECT_RELAY_SYMMETRIC:
            m = direct_relay_cm(s, ch, ch)
        else:
            m = swap_relay_cm(s, ch, ch)
        return nu_minus_pt(m) - 1.0

    return brentq(nu, 1e-9, 1.0 - 1e-12, xtol=1e-12)


def test_criterion_2_closed_form_breaking_transmissivities():
    with criterion(2, "bisected breaking points match the closed forms (1e-6), "
                      "independent of squeezing (1e-9)"):
        t0 = time.monotonic()
        for omega in (2.0, 41.7, 416.7):
            for scheme in (SINGLE, DIRECT_RELAY_SYMMETRIC, SWAP_RELAY_SYMMETRIC):
                root = _nu_root(scheme, omega, 1.0)
                assert abs(root - eb_transmissivity(scheme, omega)) <= 1e-6, \
                    f"{scheme} at omega={omega}"
        for scheme in (SINGLE, DIRECT_RELAY_SYMMETRIC, SWAP_RELAY_SYMMETRIC):
            roots = [_nu_root(scheme, 41.7, r) for r in (0.1, 0.5, 1.15)]
            assert max(roots) - min(roots) <= 1e-9, f"{scheme} roots {roots}"
        elapsed = time.monotonic() - t0
        assert elapsed < 5.0, f"took {elapsed:.1f}s"


def test_criterion_3_gaussian_fock_oracle_equivalence():
    with criterion(3, "truncated squeezed-vacuum evolution matches the covariance "
                      "pipeline to 1e-3 with the convergence flag set"):
        t0 = time.monotonic()
        pol = TruncationPolicy(total_photon_cutoff=16)
        for tau in (0.99, 0.995):
            ch = ThermalChannel(tau, NBAR_300GHZ_300K)
            e_cm = log_negativity_cm(evolve_single_channel(tmsv_cm(ONE_EBIT), ch))
            rep = log_negativity_converged(
                lambda p: tmsv_fock_density(ONE_EBIT, p), ch, pol)
            assert rep.converged, f"tau={tau} not converged: {rep.history}"
            assert abs(rep.value - e_cm) <= 1e-3, \
                f"tau={tau}: fock {rep.value} vs cm {e_cm}"
        elapsed = time.monotonic() - t0
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_criterion_4_kraus_dual_path_and_completeness():
    with criterion(4, "conjugation and elementary-sum evolutions agree to 1e-9 on "
                      "20 random states; completeness defect below 1e-6"):
        t0 = time.monotonic()
        rng = np.random.default_rng(2024)
        ch = ThermalChannel(0.9, 0.3)
        pol = TruncationPolicy(total_photon_cutoff=10)
        for _ in range(20):
            a = rng.normal(size=(49, 49)) + 1j * rng.normal(size=(49, 49))
            rho_m = a @ a.conj().T
            rho_m /= np.trace(rho_m).real
            rho = FockDensityOp(6, 6, rho_m)
            out_q = evolve_mode2(rho, ch, pol, method="quadsum")
            out_k = evolve_mode2(rho, ch, pol, method="kraus")
            out_s = evolve_mode2(rho, ch, pol, method="superop")
            assert np.max(np.abs(out_q.coeffs - out_k.coeffs)) <= 1e-9
            assert np.max(np.abs(out_q.coeffs - out_s.coeffs)) <= 1e-9
        ks = build_kraus_set(ch, 12, TruncationPolicy(total_photon_cutoff=10))
        assert ks.completeness_defect < 1e-6, f"defect {ks.completeness_defect:g}"
        assert ks.n_cutoff == math.ceil(20.0 * (0.3 + 1.0))
        elapsed = time.monotonic() - t0
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_criterion_5_non_gaussian_ordering():
    with criterion(5, "photon-subtracted and two-photon NOON states beat the "
                      "squeezed vacuum above threshold; pure-state anchors exact"):
        for n in (1, 2, 5):
            assert log_negativity_fock(noon_density(n)) == pytest.approx(1.0, abs=1e-9)
        pss0 = pss_density(ONE_EBIT, 1.0, TruncationPolicy(total_photon_cutoff=24))
        assert log_negativity_fock(pss0) > 1.0
        pol = TruncationPolicy(total_photon_cutoff=10)
        tau_eb = eb_transmissivity(SINGLE, 2.0 * NBAR_300GHZ_300K + 1.0)
        grid = [0.96, 0.97, 0.98, 0.99, 0.995]
        assert all(tau_eb < t <= 1.0 for t in grid)
        for tau in grid:
            ch = ThermalChannel(tau, NBAR_300GHZ_300K)
            e_tmsv = log_negativity_cm(evolve_single_channel(tmsv_cm(ONE_EBIT), ch))
            rep_pss = log_negativity_converged(
                lambda p: pss_density(ONE_EBIT, 1.0, p), ch, pol)
            rep_n2 = log_negativity_converged(lambda p: noon_density(2), ch, pol)
            assert rep_pss.converged and rep_n2.converged
            assert rep_pss.value > e_tmsv, f"tau={tau}"
            assert rep_n2.value > e_tmsv, f"tau={tau}"


def test_criterion_6_relay_comparison():
    with criterion(6, "reflecting relay never loses to swapping; its curve over "
                      "combined transmissivity equals the single channel to 1e-9"):
        s = Squeezing.from_db(10.0)
        combined = np.linspace(0.9, 1.0, 201)
        for f_ghz in (15.0, 30.0, 100.0, 300.0):
            nbar = mean_photon_number(f_ghz * 1e9, 300.0)
            for tc in combined:
                ch = ThermalChannel(math.sqrt(float(tc)), nbar)
                e_d = log_negativity_cm(direct_relay_cm(s, ch, ch))
                e_s = log_negativity_cm(swap_relay_cm(s, ch, ch))
                assert e_d >= e_s - 1e-12
                e_single = log_negativity_cm(
                    evolve_single_channel(tmsv_cm(s), ThermalChannel(float(tc), nbar)))
                assert abs(e_d - e_single) <= 1e-9


_LINK_ANCHORS = [
    ("e_ln_30ghz_100m", 30.0, 100.0, "e_ln", 1.4, 0.1),
    ("e_ln_300ghz_50m", 300.0, 50.0, "e_ln", 0.8, 0.1),
    ("eb_distance_30ghz", 30.0, None, "eb_distance", 200.0, 60.0),
    ("eb_distance_300ghz", 300.0, None, "eb_distance", 100.0, 30.0),
]


@pytest.mark.parametrize("label,f_ghz,dist,kind,target,tol",
                         _LINK_ANCHORS, ids=[a[0] for a in _LINK_ANCHORS])
def test_criterion_7_link_anchors(label, f_ghz, dist, kind, target, tol):
    with criterion(7, f"link anchor {label}: {target} +- {tol}"):
        model = default_absorption_model()
        if kind == "e_ln":
            env = LinkEnvironment(f_ghz * 1e9, 300.0, dist)
            ch = channel_from_environment(env, model)
            e = log_negativity_cm(
                evolve_single_channel(tmsv_cm(Squeezing.from_db(10.0)), ch))
            assert abs(e - target) <= tol, (
                f"{label}: got {e:.4f} with tau={ch.tau:.6f}. At 30 GHz the two "
                f"anchor kinds are incompatible: matching this value needs "
                f"0.056-0.066 dB/km while the 200 m +- 30% breaking distance "
                f"needs 0.080-0.149 dB/km; the default table is pinned to 0.2% "
                f"loss over 100 m (0.087 dB/km), keeping the distance anchor green.")
        else:
            env = LinkEnvironment(f_ghz * 1e9, 300.0)
            r_eb = eb_distance(env, model, SINGLE)
            assert abs(r_eb - target) <= tol, f"{label}: got {r_eb:.1f} m"


def test_criterion_8_antenna_anchors():
    with criterion(8, "aperture gain in [60, 70] dBi and half-beamwidth "
                      "0.0333 +- 0.0005 deg at 300 GHz with a 1 m dish"):
        gain = aperture_gain_dbi(300e9, 1.0, contour_db=3.0)
        assert 60.0 <= gain <= 70.0, f"gain {gain:.2f} dBi"
        bw = half_beamwidth_deg(300.0, 1.0)
        assert abs(bw - 0.0333) <= 0.0005, f"beamwidth {bw:.5f} deg"


def test_criterion_9_byte_identical_reruns(tmp_path):
    with criterion(9, "consecutive runs produce byte-identical CSV"):
        for spec in (default_spec(FIG2),
                     replace(default_spec(FIG3), axis_min=0.99, steps=2,
                             total_photon_cutoff=6)):
            paths = [tmp_path / f"{spec.scenario}-{i}.csv" for i in (0, 1)]
            for p in paths:
                write_csv(run_sweep(spec), str(p))
            assert paths[0].read_bytes() == paths[1].read_bytes(), spec.scenario
