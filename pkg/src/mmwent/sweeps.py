"""Named parameter sweeps and their CSV output.

Each scenario composes the covariance-matrix, Fock-space and link-physics
layers into one deterministic table: no randomness enters anywhere, the
row order is fixed by the sweep specification, and float formatting is
pinned, so a given ``SweepSpec`` always produces byte-identical CSV.
Located thresholds (zero crossings of the entanglement) are appended as
'#'-prefixed footer records.

Rows that fail the truncation-convergence check are flagged in their
``converged`` column and are never folded into footer records.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.optimize import brentq

from .gaussian import (
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
    thermal_tms_cm,
    tmsv_cm,
)
from .fock import (
    TruncationPolicy,
    log_negativity_converged,
    noon_density,
    pss_density,
)
from .link import (
    AbsorptionModel,
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

__all__ = [
    "ConfigError",
    "SweepSpec",
    "SweepResult",
    "SCENARIOS",
    "FIG1",
    "FIG2",
    "FIG3",
    "FIG4",
    "LINK_BUDGET",
    "EB_THRESHOLDS",
    "EBIT_SQUEEZE_DB",
    "default_spec",
    "to_config_text",
    "from_config_text",
    "from_config_file",
    "run_sweep",
    "write_csv",
    "render_link_report",
]

FIG1 = "fig1-thermal-prep"
FIG2 = "fig2-channel"
FIG3 = "fig3-nongaussian"
FIG4 = "fig4-relay"
LINK_BUDGET = "link-budget"
EB_THRESHOLDS = "eb-thresholds"
SCENARIOS = (FIG1, FIG2, FIG3, FIG4, LINK_BUDGET, EB_THRESHOLDS)

# Squeezing whose pure two-mode squeezed vacuum carries exactly one ebit.
EBIT_SQUEEZE_DB = 10.0 * math.log10(2.0)


class ConfigError(ValueError):
    """Invalid sweep configuration."""


@dataclass(frozen=True)
class SweepSpec:
    """Declarative description of one scenario run.

    ``axis_*`` is the swept axis (temperature for fig1, transmissivity for
    fig2/fig3, combined transmissivity for fig4, distance in meters for
    the link budget); fig1 additionally sweeps ``axis2_*`` (squeezing dB).
    ``thermal_index_cutoff`` of 0 means the automatic nbar-scaled default.
    """

    scenario: str
    axis_min: float
    axis_max: float
    steps: int
    axis2_min: float = 0.0
    axis2_max: float = 20.0
    steps2: int = 101
    freq_ghz: tuple = (300.0,)
    temp_k: float = 300.0
    squeeze_db: float = 10.0
    kappa: float = 1.0
    noon_n: tuple = (2, 5)
    total_photon_cutoff: int = 10
    thermal_index_cutoff: int = 0
    convergence_tol: float = 1e-3
    aperture_m: float = 1.0
    pt_dbm: float = 0.0
    absorption_table: str = "default"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.steps < 2 or self.steps2 < 2:
            raise ConfigError("sweeps need at least 2 grid points per axis")
        if not (self.axis_min < self.axis_max) or not (self.axis2_min < self.axis2_max):
            raise ConfigError("axis ranges must satisfy min < max")
        if self.axis_min < 0.0 or self.axis2_min < 0.0:
            raise ConfigError("axis ranges must be non-negative")
        if self.scenario in (FIG2, FIG3, FIG4) and self.axis_max > 1.0:
            raise ConfigError("transmissivity axis must stay within [0, 1]")
        if not self.freq_ghz or any(f <= 0.0 for f in self.freq_ghz):
            raise ConfigError("frequency list must be nonempty and positive")
        if self.temp_k < 0.0:
            raise ConfigError("temperature must be >= 0")
        if self.squeeze_db < 0.0:
            raise ConfigError("squeezing in dB must be >= 0")
        if not (0.0 < self.kappa <= 1.0):
            raise ConfigError("kappa must lie in (0, 1]")
        if not self.noon_n or any(n < 1 for n in self.noon_n):
            raise ConfigError("NOON photon numbers must be >= 1")
        if self.total_photon_cutoff < 1:
            raise ConfigError("total_photon_cutoff must be >= 1")
        if self.thermal_index_cutoff < 0:
            raise ConfigError("thermal_index_cutoff must be >= 0 (0 = automatic)")
        if self.convergence_tol <= 0.0:
            raise ConfigError("convergence_tol must be positive")
        if self.aperture_m <= 0.0:
            raise ConfigError("aperture must be positive")

    def truncation_policy(self) -> TruncationPolicy:
        return TruncationPolicy(
            total_photon_cutoff=self.total_photon_cutoff,
            thermal_index_cutoff=self.thermal_index_cutoff or None,
            convergence_tol=self.convergence_tol)


_DEFAULTS = {
    FIG1: dict(axis_min=0.0, axis_max=300.0, steps=101,
               axis2_min=0.0, axis2_max=20.0, steps2=101,
               freq_ghz=(300.0,), squeeze_db=10.0),
    FIG2: dict(axis_min=0.9, axis_max=1.0, steps=201,
               freq_ghz=(15.0, 30.0, 100.0, 300.0), squeeze_db=10.0),
    FIG3: dict(axis_min=0.95, axis_max=1.0, steps=201,
               freq_ghz=(300.0,), squeeze_db=EBIT_SQUEEZE_DB,
               kappa=1.0, noon_n=(2, 5), total_photon_cutoff=10),
    FIG4: dict(axis_min=0.9, axis_max=1.0, steps=201,
               freq_ghz=(15.0, 30.0, 100.0, 300.0), squeeze_db=10.0),
    LINK_BUDGET: dict(axis_min=25.0, axis_max=250.0, steps=10,
                      freq_ghz=(30.0, 300.0), squeeze_db=10.0),
    EB_THRESHOLDS: dict(axis_min=0.0, axis_max=1.0, steps=2,
                        freq_ghz=(15.0, 30.0, 100.0, 300.0)),
}


def default_spec(scenario: str) -> SweepSpec:
    """Built-in spec for a scenario, spanning its range of interest."""
    if scenario not in _DEFAULTS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    return SweepSpec(scenario=scenario, **_DEFAULTS[scenario])


# ---------------------------------------------------------------------------
# Config file round trip (flat key = value, one section per scenario)
# ---------------------------------------------------------------------------

def _render_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_render_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_float_tuple(text: str) -> tuple:
    return tuple(float(x) for x in text.split(","))


def _parse_int_tuple(text: str) -> tuple:
    return tuple(int(x) for x in text.split(","))


_FIELD_PARSERS = {
    "axis_min": float, "axis_max": float, "steps": int,
    "axis2_min": float, "axis2_max": float, "steps2": int,
    "freq_ghz": _parse_float_tuple, "temp_k": float, "squeeze_db": float,
    "kappa": float, "noon_n": _parse_int_tuple,
    "total_photon_cutoff": int, "thermal_index_cutoff": int,
    "convergence_tol": float, "aperture_m": float, "pt_dbm": float,
    "absorption_table": str,
}


def to_config_text(spec: SweepSpec) -> str:
    """Serialize a spec to the flat config format; reloading reproduces it."""
    lines = [f"[{spec.scenario}]"]
    for f in fields(spec):
        if f.name == "scenario":
            continue
        lines.append(f"{f.name} = {_render_value(getattr(spec, f.name))}")
    return "\n".join(lines) + "\n"


def from_config_text(text: str, scenario: str) -> SweepSpec:
    """Parse a config document for the given scenario section."""
    cp = configparser.RawConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if scenario not in cp:
        raise ConfigError(f"config has no [{scenario}] section")
    base = default_spec(scenario)
    merged = {f.name: getattr(base, f.name) for f in fields(base) if f.name != "scenario"}
    for key, raw in cp[scenario].items():
        if key not in _FIELD_PARSERS:
            raise ConfigError(f"unknown config key {key!r} in [{scenario}]")
        try:
            merged[key] = _FIELD_PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return SweepSpec(scenario=scenario, **merged)


def from_config_file(path: str, scenario: str) -> SweepSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return from_config_text(text, scenario)


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    """One finished sweep: formatted rows plus footer records."""

    spec: SweepSpec
    header: list
    rows: list
    footers: list
    nonconverged_count: int = 0


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _grid(lo: float, hi: float, steps: int) -> np.ndarray:
    return np.linspace(lo, hi, steps)


def _bracketed_root(xs, fvals, func):
    """Root of func between the first sign change of the sampled values."""
    for i in range(len(xs) - 1):
        if fvals[i] == 0.0:
            return float(xs[i])
        if fvals[i] * fvals[i + 1] < 0.0:
            return float(brentq(func, xs[i], xs[i + 1], xtol=1e-12))
    if fvals[-1] == 0.0:
        return float(xs[-1])
    return None


def run_fig1(spec: SweepSpec) -> SweepResult:
    """Entanglement of the thermally seeded two-mode squeezed state.

    Grid over (temperature, squeezing dB) at the first configured
    frequency, with both input modes at the same blackbody occupation.
    """
    f_hz = spec.freq_ghz[0] * 1e9
    temps = _grid(spec.axis_min, spec.axis_max, spec.steps)
    dbs = _grid(spec.axis2_min, spec.axis2_max, spec.steps2)
    rows = []
    for t in temps:
        nbar = mean_photon_number(f_hz, float(t))
        for db in dbs:
            s = Squeezing.from_db(float(db))
            e = log_negativity_cm(thermal_tms_cm(s, nbar, nbar))
            rows.append([_fmt(spec.freq_ghz[0]), _fmt(t), _fmt(db), _fmt(nbar), _fmt(e)])
    footers = []

    def nu_at(temp, db):
        s = Squeezing.from_db(db)
        nbar = mean_photon_number(f_hz, temp)
        return nu_minus_pt(thermal_tms_cm(s, nbar, nbar)) - 1.0

    if spec.axis2_min <= spec.squeeze_db <= spec.axis2_max and spec.squeeze_db > 0:
        func = lambda t: nu_at(t, spec.squeeze_db)
        root = _bracketed_root(temps, [func(float(t)) for t in temps], func)
        footers.append(f"# threshold,name=temp_crossing_k,squeeze_db={_fmt(spec.squeeze_db)},"
                       f"value={'' if root is None else _fmt(root)}")
    if spec.axis_min <= spec.temp_k <= spec.axis_max:
        func = lambda db: nu_at(spec.temp_k, db)
        root = _bracketed_root(dbs[::-1], [func(float(db)) for db in dbs[::-1]], func)
        footers.append(f"# threshold,name=squeeze_crossing_db,temp_k={_fmt(spec.temp_k)},"
                       f"value={'' if root is None else _fmt(root)}")
    header = ["freq_ghz", "temp_k", "squeeze_db", "nbar_input", "e_ln_bits"]
    return SweepResult(spec, header, rows, footers)


def run_fig2(spec: SweepSpec) -> SweepResult:
    """Entanglement of a squeezed vacuum sent over one thermal channel,
    swept over transmissivity for each configured frequency."""
    s = Squeezing.from_db(spec.squeeze_db)
    base = tmsv_cm(s)
    taus = _grid(spec.axis_min, spec.axis_max, spec.steps)
    rows = []
    footers = []
    for f in spec.freq_ghz:
        nbar = mean_photon_number(f * 1e9, spec.temp_k)
        omega = 2.0 * nbar + 1.0

        def nu_at(tau):
            return nu_minus_pt(evolve_single_channel(base, ThermalChannel(float(tau), nbar))) - 1.0

        fvals = []
        for tau in taus:
            m = evolve_single_channel(base, ThermalChannel(float(tau), nbar))
            rows.append([_fmt(f), _fmt(spec.temp_k), _fmt(spec.squeeze_db),
                         _fmt(omega), _fmt(tau), _fmt(log_negativity_cm(m))])
            fvals.append(nu_minus_pt(m) - 1.0)
        root = _bracketed_root(taus, fvals, nu_at)
        closed = eb_transmissivity(SINGLE, omega)
        footers.append(f"# threshold,name=tau_eb,scheme={SINGLE},freq_ghz={_fmt(f)},"
                       f"closed_form={_fmt(closed)},"
                       f"bisection={'' if root is None else _fmt(root)}")
    header = ["freq_ghz", "temp_k", "squeeze_db", "omega", "tau", "e_ln_bits"]
    return SweepResult(spec, header, rows, footers)


def run_fig3(spec: SweepSpec) -> SweepResult:
    """Squeezed-vacuum versus non-Gaussian states over one thermal channel.

    The squeezed-vacuum reference is evaluated in closed form on its
    covariance matrix; photon-subtracted and NOON states evolve in the
    truncated photon-number basis with a per-row convergence check.
    """
    f = spec.freq_ghz[0]
    nbar = mean_photon_number(f * 1e9, spec.temp_k)
    omega = 2.0 * nbar + 1.0
    s = Squeezing.from_db(spec.squeeze_db)
    taus = _grid(spec.axis_min, spec.axis_max, spec.steps)
    pol = spec.truncation_policy()
    rows = []
    nonconverged = 0

    base = tmsv_cm(s)
    for tau in taus:
        m = evolve_single_channel(base, ThermalChannel(float(tau), nbar))
        rows.append([_fmt(f), _fmt(spec.temp_k), "tmsv", _fmt(tau),
                     _fmt(log_negativity_cm(m)), "1", "0"])

    builders = [("pss", lambda p: pss_density(s, spec.kappa, p))]
    for n in spec.noon_n:
        builders.append((f"noon{n}", lambda p, n=n: noon_density(n)))
    for label, build in builders:
        for tau in taus:
            ch = ThermalChannel(float(tau), nbar)
            rep = log_negativity_converged(build, ch, pol)
            if not rep.converged:
                nonconverged += 1
            rows.append([_fmt(f), _fmt(spec.temp_k), label, _fmt(tau),
                         _fmt(rep.value), "1" if rep.converged else "0",
                         _fmt(rep.trace_deficit)])
    footers = [f"# threshold,name=tau_eb,scheme={SINGLE},freq_ghz={_fmt(f)},"
               f"closed_form={_fmt(eb_transmissivity(SINGLE, omega))},bisection="]
    header = ["freq_ghz", "temp_k", "state", "tau", "e_ln_bits", "converged", "trace_deficit"]
    return SweepResult(spec, header, rows, footers, nonconverged_count=nonconverged)


def run_fig4(spec: SweepSpec) -> SweepResult:
    """Reflecting relay versus entanglement-swapping relay, symmetric links,
    swept over the combined transmissivity of the two hops."""
    s = Squeezing.from_db(spec.squeeze_db)
    combined = _grid(spec.axis_min, spec.axis_max, spec.steps)
    rows = []
    footers = []
    for f in spec.freq_ghz:
        nbar = mean_photon_number(f * 1e9, spec.temp_k)
        omega = 2.0 * nbar + 1.0

        def nu_direct(tau):
            ch = ThermalChannel(float(tau), nbar)
            return nu_minus_pt(direct_relay_cm(s, ch, ch)) - 1.0

        def nu_swap(tau):
            ch = ThermalChannel(float(tau), nbar)
            return nu_minus_pt(swap_relay_cm(s, ch, ch)) - 1.0

        taus = np.sqrt(combined)
        fd, fs = [], []
        for tc, tau in zip(combined, taus):
            ch = ThermalChannel(float(tau), nbar)
            e_d = log_negativity_cm(direct_relay_cm(s, ch, ch))
            e_s = log_negativity_cm(swap_relay_cm(s, ch, ch))
            rows.append([_fmt(f), _fmt(spec.temp_k), _fmt(spec.squeeze_db), _fmt(omega),
                         _fmt(tc), _fmt(tau), _fmt(e_d), _fmt(e_s)])
            fd.append(nu_direct(float(tau)))
            fs.append(nu_swap(float(tau)))
        for scheme, func, fvals in ((DIRECT_RELAY_SYMMETRIC, nu_direct, fd),
                                    (SWAP_RELAY_SYMMETRIC, nu_swap, fs)):
            root = _bracketed_root(taus, fvals, func)
            closed = eb_transmissivity(scheme, omega)
            footers.append(f"# threshold,name=tau_eb,scheme={scheme},freq_ghz={_fmt(f)},"
                           f"closed_form={_fmt(closed)},"
                           f"bisection={'' if root is None else _fmt(root)}")
    header = ["freq_ghz", "temp_k", "squeeze_db", "omega", "tau_combined",
              "tau_per_channel", "e_ln_direct_bits", "e_ln_swap_bits"]
    return SweepResult(spec, header, rows, footers)


def _resolve_absorption(token: str) -> AbsorptionModel:
    if token == "default":
        return default_absorption_model()
    try:
        return AbsorptionModel.from_table(token)
    except OSError as exc:
        raise ConfigError(f"cannot read absorption table {token!r}: {exc}") from exc


def run_link_budget(spec: SweepSpec) -> SweepResult:
    """Physical link evaluation over distance for each frequency: channel
    parameters, surviving entanglement, breaking distance and the
    classical antenna budget."""
    model = _resolve_absorption(spec.absorption_table)
    s = Squeezing.from_db(spec.squeeze_db)
    base = tmsv_cm(s)
    distances = _grid(spec.axis_min, spec.axis_max, spec.steps)
    rows = []
    for f in spec.freq_ghz:
        f_hz = f * 1e9
        if not model.covers(f_hz):
            raise ConfigError(f"absorption model does not cover {f:g} GHz")
        nbar = mean_photon_number(f_hz, spec.temp_k)
        omega = 2.0 * nbar + 1.0
        alpha = model.alpha_db_per_km(f_hz)
        tau_eb = eb_transmissivity(SINGLE, omega)
        try:
            r_eb = eb_distance(LinkEnvironment(f_hz, spec.temp_k, aperture_m=spec.aperture_m),
                               model, SINGLE)
            r_eb_text = _fmt(r_eb)
        except NoBreakingDistance:
            r_eb_text = ""
        gain = aperture_gain_dbi(f_hz, spec.aperture_m)
        beam = half_beamwidth_deg(f, spec.aperture_m)
        for dist in distances:
            env = LinkEnvironment(f_hz, spec.temp_k, float(dist), spec.aperture_m)
            ch = channel_from_environment(env, model)
            e = log_negativity_cm(evolve_single_channel(base, ch))
            margin = ch.tau - tau_eb
            received = _fmt(friis_received_power(env, spec.pt_dbm)) if dist > 0 else ""
            rows.append([_fmt(f), _fmt(spec.temp_k), _fmt(dist), _fmt(spec.aperture_m),
                         _fmt(nbar), _fmt(omega), _fmt(alpha), _fmt(ch.tau), _fmt(tau_eb),
                         _fmt(margin), "1" if margin > 0 else "0", _fmt(e), r_eb_text,
                         _fmt(gain), _fmt(beam), received])
    header = ["freq_ghz", "temp_k", "distance_m", "aperture_m", "nbar", "omega",
              "alpha_db_per_km", "tau", "tau_eb", "tau_margin", "entangled",
              "e_ln_bits", "eb_distance_m", "gain_dbi", "half_beamwidth_deg",
              "received_power_dbm"]
    return SweepResult(spec, header, rows, [])


def run_eb_thresholds(spec: SweepSpec) -> SweepResult:
    """Breaking transmissivities (all schemes) and, where the absorption
    model applies, the corresponding breaking distances."""
    model = _resolve_absorption(spec.absorption_table)
    rows = []
    for f in spec.freq_ghz:
        f_hz = f * 1e9
        omega = thermal_variance(f_hz, spec.temp_k)
        taus = [eb_transmissivity(scheme, omega)
                for scheme in (SINGLE, DIRECT_RELAY_SYMMETRIC, SWAP_RELAY_SYMMETRIC)]
        if model.covers(f_hz):
            alpha_text = _fmt(model.alpha_db_per_km(f_hz))
            dists = []
            for scheme in (SINGLE, DIRECT_RELAY_SYMMETRIC, SWAP_RELAY_SYMMETRIC):
                try:
                    env = LinkEnvironment(f_hz, spec.temp_k, aperture_m=spec.aperture_m)
                    dists.append(_fmt(eb_distance(env, model, scheme)))
                except NoBreakingDistance:
                    dists.append("")
        else:
            alpha_text = ""
            dists = ["", "", ""]
        rows.append([_fmt(f), _fmt(spec.temp_k), _fmt(omega)]
                    + [_fmt(t) for t in taus] + [alpha_text] + dists)
    header = ["freq_ghz", "temp_k", "omega", "tau_eb_single",
              "tau_eb_direct_per_channel", "tau_eb_swap_per_channel",
              "alpha_db_per_km", "eb_distance_single_m", "eb_distance_direct_m",
              "eb_distance_swap_m"]
    return SweepResult(spec, header, rows, [])


_RUNNERS = {
    FIG1: run_fig1,
    FIG2: run_fig2,
    FIG3: run_fig3,
    FIG4: run_fig4,
    LINK_BUDGET: run_link_budget,
    EB_THRESHOLDS: run_eb_thresholds,
}


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Run the scenario named by the spec."""
    return _RUNNERS[spec.scenario](spec)


def write_csv(result: SweepResult, path: str) -> None:
    """Write header, data rows and footer records with pinned formatting."""
    lines = [",".join(result.header)]
    lines.extend(",".join(row) for row in result.rows)
    lines.extend(result.footers)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def render_link_report(result: SweepResult) -> str:
    """Human-readable table for the link-budget scenario."""
    spec = result.spec
    title = (f"Link budget: T={_fmt(spec.temp_k)} K, squeezing={_fmt(spec.squeeze_db)} dB, "
             f"aperture={_fmt(spec.aperture_m)} m, Pt={_fmt(spec.pt_dbm)} dBm")
    cols = ["freq_ghz", "distance_m", "tau", "tau_eb", "tau_margin", "e_ln_bits",
            "eb_distance_m", "gain_dbi", "half_beamwidth_deg", "received_power_dbm"]
    pick = [result.header.index(c) for c in cols]
    table = [cols] + [[row[i] for i in pick] for row in result.rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(cols))]
    lines = [title, ""]
    for r in table:
        lines.append("  ".join(v.rjust(w) for v, w in zip(r, widths)))
    return "\n".join(lines)
