import math
from dataclasses import replace

import numpy as np
import pytest

from mmwent.cli import main
from mmwent.gaussian import Squeezing, ThermalChannel, evolve_single_channel, \
    log_negativity_cm, thermal_tms_cm, tmsv_cm
from mmwent.link import mean_photon_number
from mmwent.sweeps import (
    EB_THRESHOLDS,
    FIG1,
    FIG2,
    FIG3,
    FIG4,
    LINK_BUDGET,
    ConfigError,
    SweepSpec,
    default_spec,
    from_config_text,
    render_link_report,
    run_sweep,
    to_config_text,
    write_csv,
)


def csv_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


def rows_by(result, **match):
    idx = {name: result.header.index(name) for name in match}
    return [r for r in result.rows
            if all(r[idx[k]] == v for k, v in match.items())]


def col(result, row, name):
    return row[result.header.index(name)]


def test_spec_validation():
    with pytest.raises(ConfigError):
        default_spec("fig9")
    with pytest.raises(ConfigError):
        SweepSpec(scenario=FIG2, axis_min=0.9, axis_max=1.0, steps=1)
    with pytest.raises(ConfigError):
        SweepSpec(scenario=FIG2, axis_min=0.9, axis_max=1.2, steps=5)
    with pytest.raises(ConfigError):
        SweepSpec(scenario=FIG2, axis_min=0.9, axis_max=1.0, steps=5, freq_ghz=())
    with pytest.raises(ConfigError):
        SweepSpec(scenario=FIG3, axis_min=0.9, axis_max=1.0, steps=5, kappa=0.0)
    with pytest.raises(ConfigError):
        SweepSpec(scenario=FIG3, axis_min=0.9, axis_max=1.0, steps=5, noon_n=(0,))


def test_fig1_rows_match_direct_evaluation():
    spec = replace(default_spec(FIG1), steps=7, steps2=5)
    result = run_sweep(spec)
    assert len(result.rows) == 7 * 5
    temps = np.linspace(spec.axis_min, spec.axis_max, 7)
    dbs = np.linspace(spec.axis2_min, spec.axis2_max, 5)
    checked = 0
    for row in result.rows:
        t, db = float(col(result, row, "temp_k")), float(col(result, row, "squeeze_db"))
        nbar = mean_photon_number(300e9, t)
        expect = log_negativity_cm(thermal_tms_cm(Squeezing.from_db(db), nbar, nbar))
        # CSV carries 12 significant digits
        assert float(col(result, row, "e_ln_bits")) == pytest.approx(
            expect, rel=1e-11, abs=1e-11)
        checked += 1
    assert checked == len(temps) * len(dbs)
    # zero-temperature rows carry the pure-state value 2 r log2(e)
    for row in rows_by(result, temp_k="0"):
        r = Squeezing.from_db(float(col(result, row, "squeeze_db"))).r
        assert float(col(result, row, "e_ln_bits")) == pytest.approx(
            2.0 * r * math.log2(math.e), rel=1e-10, abs=1e-10)


def test_fig1_threshold_footers():
    result = run_sweep(default_spec(FIG1))
    temp_line = next(f for f in result.footers if "temp_crossing_k" in f)
    db_line = next(f for f in result.footers if "squeeze_crossing_db" in f)
    t_star = float(temp_line.rsplit("value=", 1)[1])
    db_star = float(db_line.rsplit("value=", 1)[1])
    assert t_star == pytest.approx(71.748, abs=0.01)
    assert db_star == pytest.approx(16.199, abs=0.01)


def test_fig2_frequency_ordering_and_lossless_column():
    spec = replace(default_spec(FIG2), steps=51)
    result = run_sweep(spec)
    by_freq = {f: rows_by(result, freq_ghz=f) for f in ("15", "30", "100", "300")}
    # lossless column: all frequencies reach the pure-state entanglement
    for f, rows in by_freq.items():
        row1 = next(r for r in rows if col(result, r, "tau") == "1")
        assert float(col(result, row1, "e_ln_bits")) == pytest.approx(
            math.log2(10.0), abs=1e-9)
    # at fixed tau above every threshold (including 0.9976 at 15 GHz),
    # higher frequency keeps more entanglement
    at_tau = {f: float(col(result, next(r for r in rows
                                        if col(result, r, "tau") == "0.998"), "e_ln_bits"))
              for f, rows in by_freq.items()}
    assert at_tau["300"] > at_tau["100"] > at_tau["30"] > at_tau["15"] > 0.0
    # threshold footers ordered opposite to frequency
    eb = {}
    for line in result.footers:
        f = line.split("freq_ghz=")[1].split(",")[0]
        eb[f] = float(line.split("closed_form=")[1].split(",")[0])
    assert eb["300"] < eb["100"] < eb["30"] < eb["15"]


def test_fig3_small_grid_rows():
    spec = replace(default_spec(FIG3), axis_min=0.98, steps=3, total_photon_cutoff=10)
    result = run_sweep(spec)
    assert result.nonconverged_count == 0
    states = {col(result, r, "state") for r in result.rows}
    assert states == {"tmsv", "pss", "noon2", "noon5"}
    assert all(col(result, r, "converged") == "1" for r in result.rows)
    # lossless anchors: one ebit for the squeezed ladder, more for the
    # photon-subtracted state
    tmsv1 = next(r for r in rows_by(result, state="tmsv") if col(result, r, "tau") == "1")
    assert float(col(result, tmsv1, "e_ln_bits")) == pytest.approx(1.0, abs=1e-9)
    pss1 = next(r for r in rows_by(result, state="pss") if col(result, r, "tau") == "1")
    assert float(col(result, pss1, "e_ln_bits")) > 1.0
    # ordering at an interior grid point
    for r_pss, r_tmsv in zip(rows_by(result, state="pss"), rows_by(result, state="tmsv")):
        tau = col(result, r_pss, "tau")
        if tau != "1":
            assert float(col(result, r_pss, "e_ln_bits")) \
                > float(col(result, r_tmsv, "e_ln_bits"))


def test_fig4_direct_curve_coincides_with_single_channel():
    spec = replace(default_spec(FIG4), steps=11, freq_ghz=(300.0,))
    result = run_sweep(spec)
    s = Squeezing.from_db(10.0)
    nbar = mean_photon_number(300e9, 300.0)
    for row in result.rows:
        tc = float(col(result, row, "tau_combined"))
        e_single = log_negativity_cm(
            evolve_single_channel(tmsv_cm(s), ThermalChannel(tc, nbar)))
        assert float(col(result, row, "e_ln_direct_bits")) == pytest.approx(
            e_single, abs=1e-9)
        assert float(col(result, row, "e_ln_swap_bits")) \
            <= float(col(result, row, "e_ln_direct_bits")) + 1e-12
    schemes = [line.split("scheme=")[1].split(",")[0] for line in result.footers]
    assert schemes == ["direct_relay_symmetric", "swap_relay_symmetric"]


def test_link_budget_margin_flags():
    spec = replace(default_spec(LINK_BUDGET), axis_min=50.0, axis_max=250.0, steps=5,
                   freq_ghz=(300.0,))
    result = run_sweep(spec)
    for row in result.rows:
        margin = float(col(result, row, "tau_margin"))
        entangled = col(result, row, "entangled")
        e = float(col(result, row, "e_ln_bits"))
        r_eb = float(col(result, row, "eb_distance_m"))
        dist = float(col(result, row, "distance_m"))
        if dist > r_eb:
            assert margin < 0.0 and entangled == "0" and e == 0.0
        else:
            assert margin > 0.0 and entangled == "1" and e > 0.0
    report = render_link_report(result)
    assert "freq_ghz" in report and "300" in report


def test_link_budget_rejects_uncovered_frequency():
    spec = replace(default_spec(LINK_BUDGET), freq_ghz=(15.0,))
    with pytest.raises(ConfigError):
        run_sweep(spec)


def test_eb_thresholds_rows():
    result = run_sweep(default_spec(EB_THRESHOLDS))
    row300 = rows_by(result, freq_ghz="300")[0]
    assert float(col(result, row300, "tau_eb_single")) == pytest.approx(0.953141, abs=1e-6)
    assert float(col(result, row300, "eb_distance_single_m")) == pytest.approx(103.13, abs=0.01)
    # 15 GHz lies outside the default absorption table: blank distance fields
    row15 = rows_by(result, freq_ghz="15")[0]
    assert col(result, row15, "alpha_db_per_km") == ""
    assert col(result, row15, "eb_distance_single_m") == ""
    assert float(col(result, row15, "tau_eb_single")) > 0.99


def test_config_roundtrip_and_unknown_key():
    spec = replace(default_spec(FIG2), steps=7, freq_ghz=(30.0, 300.0))
    text = to_config_text(spec)
    spec2 = from_config_text(text, FIG2)
    assert spec2 == spec
    with pytest.raises(ConfigError):
        from_config_text("[fig2-channel]\nwavelength = 3\n", FIG2)
    with pytest.raises(ConfigError):
        from_config_text("[fig2-channel]\nsteps = many\n", FIG2)
    with pytest.raises(ConfigError):
        from_config_text("[other]\nsteps = 5\n", FIG2)


def test_csv_determinism(tmp_path):
    spec = replace(default_spec(FIG2), steps=31)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(run_sweep(spec), str(p1))
    write_csv(run_sweep(spec), str(p2))
    assert csv_bytes(p1) == csv_bytes(p2)
    text = csv_bytes(p1).decode()
    assert text.splitlines()[0] == "freq_ghz,temp_k,squeeze_db,omega,tau,e_ln_bits"


def test_config_roundtrip_reproduces_csv_bytes(tmp_path):
    spec = replace(default_spec(FIG4), steps=9, freq_ghz=(30.0, 300.0))
    text = to_config_text(spec)
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(text)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(run_sweep(spec), str(p1))
    write_csv(run_sweep(from_config_text(cfg.read_text(), FIG4)), str(p2))
    assert csv_bytes(p1) == csv_bytes(p2)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_fig2_success(tmp_path, capsys):
    out = tmp_path / "fig2.csv"
    code = main(["fig2", "--points", "11", "--out", str(out)])
    assert code == 0
    assert out.exists()
    text = out.read_text()
    assert text.startswith("freq_ghz,")
    assert "# threshold,name=tau_eb" in text
    assert "wrote" in capsys.readouterr().out


def test_cli_eb_thresholds_with_flags(tmp_path):
    out = tmp_path / "eb.csv"
    code = main(["eb-thresholds", "--freq-ghz", "30,300", "--temp-k", "250",
                 "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3  # header + two rows


def test_cli_config_file(tmp_path):
    spec = replace(default_spec(FIG2), steps=5, freq_ghz=(300.0,))
    cfg = tmp_path / "run.cfg"
    cfg.write_text(to_config_text(spec))
    out = tmp_path / "out.csv"
    code = main(["fig2", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    assert len(out.read_text().splitlines()) == 1 + 5 + 1  # header + rows + footer


def test_cli_bad_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[fig2-channel]\nsteps = 1\n")
    assert main(["fig2", "--config", str(cfg)]) == 2
    assert main(["fig2", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["link-budget", "--freq-ghz", "15"]) == 2
    err = capsys.readouterr().err
    assert "error:" in err


def test_cli_nonconverged_exits_3_with_flagged_csv(tmp_path, capsys):
    out = tmp_path / "fig3.csv"
    code = main(["fig3", "--points", "2", "--cutoff", "6", "--tol", "1e-15",
                 "--out", str(out)])
    assert code == 3
    text = out.read_text()
    lines = [l for l in text.splitlines() if not l.startswith("#") and l]
    header = lines[0].split(",")
    flags = {row.split(",")[header.index("converged")] for row in lines[1:]}
    assert "0" in flags
    assert "non-converged" in capsys.readouterr().out


def test_cli_renders_link_report(tmp_path, capsys):
    out = tmp_path / "lb.csv"
    code = main(["link-budget", "--out", str(out), "--freq-ghz", "30,300"])
    assert code == 0
    printed = capsys.readouterr().out
    assert "Link budget" in printed
    assert "eb_distance_m" in printed
