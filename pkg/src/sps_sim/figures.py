"""Figure presets, figure reproduction and one-parameter sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .coherent import default_time_grid, quantum_efficiency
from .dephasing import dephased_probabilities, modulation_depth, qe_dephased
from .params import GHZ, REFERENCE_PARAMS, SystemParams, derive_rates
from .spectra import (
    default_grid,
    emission_spectrum,
    normal_mode_splittings,
    normalize_spectrum,
    peak_separation,
    peak_widths,
)
from .svg import Series, write_svg

FIGURE_IDS = ("fig2", "fig3", "fig5", "fig6", "fig7")
FIG3_DETUNINGS = (-2.4, -1.6, -0.8, 0.0, 0.8, 1.6, 2.4)
DEPHASING_RATES_GHZ = (0.0, 1.0, 2.5)
FIG6_GAMMA_P_GHZ = 4.0
SWEEP_PARAMS = ("gamma_p", "delta", "g0", "kappa", "gamma")
SWEEP_QUANTITIES = ("eta_q", "splittings", "fwhm")


@dataclass(frozen=True)
class FigurePreset:
    figure: str
    params: SystemParams
    sweep: tuple = ()
    channels: tuple = ()


PRESETS = {
    "fig2": FigurePreset("fig2", REFERENCE_PARAMS),
    "fig3": FigurePreset("fig3", REFERENCE_PARAMS, FIG3_DETUNINGS, ("side", "forward")),
    "fig5": FigurePreset("fig5", REFERENCE_PARAMS, DEPHASING_RATES_GHZ),
    "fig6": FigurePreset("fig6", REFERENCE_PARAMS, (FIG6_GAMMA_P_GHZ,)),
    "fig7": FigurePreset("fig7", REFERENCE_PARAMS, DEPHASING_RATES_GHZ, ("side", "forward")),
}


@dataclass
class RunConfig:
    """Inputs for one CLI task. ``grid`` overrides the primary axis as (min, max, points).

    Time axes are in ns, frequency axes in GHz (Omega/2pi), sweep axes in the
    swept parameter's CLI units.
    """

    params: SystemParams = REFERENCE_PARAMS
    task: str = ""
    output_dir: Path = Path("out")
    seed: int = 0
    grid: tuple | None = None
    extra: dict = field(default_factory=dict)


class Manifest:
    def __init__(self, figure: str, params: SystemParams, out: Path):
        self.out = Path(out)
        self.data = {"figure": figure, "params": params.to_ghz(), "files": [], "summary": {}}

    def add(self, path: Path, kind: str, **meta):
        self.data["files"].append({"path": Path(path).name, "kind": kind,
                                   "sha256": io.sha256(path), **meta})

    def write(self) -> Path:
        return io.write_json(self.out / f"{self.data['figure']}_manifest.json", self.data)


def time_grid(config: RunConfig, t_max: float = 1.25e-9, points: int = 2001) -> np.ndarray:
    if config.grid is None:
        return default_time_grid(points, t_max)
    lo, hi, n = config.grid
    if lo != 0:
        raise ValueError("time grids must start at 0 ns")
    return np.linspace(0.0, hi * 1e-9, int(n))


def frequency_grid(config: RunConfig, params: SystemParams, channel: str):
    if config.grid is None:
        return default_grid(params, channel)
    from .spectra import REFERENCES, FrequencyGrid
    lo, hi, n = config.grid
    return FrequencyGrid.uniform(lo * GHZ, hi * GHZ, int(n), REFERENCES[channel])


def _spectrum_csv(path, spectrum):
    column = "s_side" if spectrum.channel == "side" else "s_forward"
    return io.write_csv(path, ["omega_over_2pi_ghz", column], [spectrum.grid.ghz(), spectrum.values])


def _fig2(config, m):
    p, out = config.params, m.out
    from .coherent import probabilities
    t = time_grid(config)
    tr = probabilities(p, t)
    series = []
    for name, values in (("p_e", tr.p_e), ("p_c", tr.p_c)):
        path = io.write_csv(out / f"fig2_{name}.csv", ["t_ns", name], [t * 1e9, values])
        m.add(path, "csv", curve=name)
        series.append(Series(t * 1e9, values, name))
    for suffix, logy in (("linear", False), ("log", True)):
        path = write_svg(out / f"fig2_{suffix}.svg", series, title=f"Populations ({suffix})",
                         xlabel="t (ns)", ylabel="probability", logy=logy)
        m.add(path, "svg", panel=suffix)
    k = int(np.argmax(tr.p_c))
    g = derive_rates(p).g.real
    m.data["summary"].update(first_pc_max_ns=t[k] * 1e9, pi_over_2g_ns=math.pi / (2 * g) * 1e9,
                             quantum_efficiency=quantum_efficiency(p))


def _fig3(config, m, preset):
    p, out = config.params, m.out
    summary = {}
    for channel in preset.channels:
        series = []
        for d in preset.sweep:
            pd = p.with_(delta=d * p.g0)
            grid = frequency_grid(config, pd, channel)
            s = normalize_spectrum(emission_spectrum(pd, grid, channel), pd)
            path = _spectrum_csv(out / f"fig3_{channel}_delta{d:+.1f}.csv", s)
            m.add(path, "csv", channel=channel, delta_over_g0=d)
            series.append(Series(grid.ghz(), s.values * GHZ, f"delta/g0={d:+.1f}"))
            summary[f"{channel}_peak_separation_ghz_delta{d:+.1f}"] = peak_separation(s) / GHZ
        path = write_svg(out / f"fig3_{channel}.svg", series, title=f"Normalized {channel} spectra",
                         xlabel="offset/2pi (GHz)", ylabel="S (1/GHz)")
        m.add(path, "svg", panel=channel)
    m.data["summary"].update(summary)


def _fig5(config, m, preset):
    p, out = config.params, m.out
    t = time_grid(config)
    panels = {"p_e_avg": [], "p_c_avg": []}
    for gp in preset.sweep:
        pg = p.with_(gamma_p=gp * GHZ)
        tr = dephased_probabilities(pg, t)
        path = io.probabilities_csv(out / f"fig5_gp{gp:.1f}.csv", tr, dephased=True)
        m.add(path, "csv", gamma_p_ghz=gp)
        panels["p_e_avg"].append(Series(t * 1e9, tr.p_e, f"gamma_p/2pi={gp} GHz"))
        panels["p_c_avg"].append(Series(t * 1e9, tr.p_c, f"gamma_p/2pi={gp} GHz"))
        m.data["summary"][f"modulation_depth_pc_gp{gp:.1f}"] = modulation_depth(t, tr.p_c)
    for name, series in panels.items():
        path = write_svg(out / f"fig5_{name}.svg", series, title=f"<{name[:3]}> with dephasing",
                         xlabel="t (ns)", ylabel="probability", logy=True)
        m.add(path, "svg", panel=name)


def _fig6(config, m, preset):
    p, out = config.params, m.out
    gp = preset.sweep[0]
    t = time_grid(config)
    pg = p.with_(gamma_p=gp * GHZ)
    tr = dephased_probabilities(pg, t)
    path = io.write_csv(out / "fig6a_p_out.csv", ["t_ns", "p_out_avg"], [t * 1e9, tr.p_out])
    m.add(path, "csv", curve="p_out", gamma_p_ghz=gp)
    path = write_svg(out / "fig6a.svg", [Series(t * 1e9, tr.p_out, f"gamma_p/2pi={gp} GHz")],
                     title="Forward emission probability", xlabel="t (ns)", ylabel="<P_o>")
    m.add(path, "svg", panel="a")
    rates = np.linspace(0.0, gp, 41)
    eta = np.array([qe_dephased(p.with_(gamma_p=r * GHZ)) for r in rates])
    path = io.write_csv(out / "fig6b_eta_q.csv", ["gamma_p_ghz", "eta_q"], [rates, eta])
    m.add(path, "csv", curve="eta_q")
    path = write_svg(out / "fig6b.svg", [Series(rates, eta, "eta_q")], title="Quantum efficiency",
                     xlabel="gamma_p/2pi (GHz)", ylabel="eta_q")
    m.add(path, "svg", panel="b")
    m.data["summary"].update(eta_q_0=float(eta[0]), eta_q_max=float(eta[-1]),
                             eta_q_drop=float(eta[0] - eta[-1]))


def _fig7(config, m, preset):
    p, out = config.params, m.out
    for channel in preset.channels:
        series = []
        for gp in preset.sweep:
            pg = p.with_(gamma_p=gp * GHZ)
            grid = frequency_grid(config, pg, channel)
            s = normalize_spectrum(emission_spectrum(pg, grid, channel), pg)
            path = _spectrum_csv(out / f"fig7_{channel}_gp{gp:.1f}.csv", s)
            m.add(path, "csv", channel=channel, gamma_p_ghz=gp)
            series.append(Series(grid.ghz(), s.values * GHZ, f"gamma_p/2pi={gp} GHz"))
            widths = peak_widths(s)
            m.data["summary"][f"{channel}_gp{gp:.1f}"] = {
                "peak_height_per_ghz": [w["height"] * GHZ for w in widths],
                "fwhm_ghz": [w["fwhm"] / GHZ for w in widths],
            }
        path = write_svg(out / f"fig7_{channel}.svg", series, title=f"Normalized {channel} spectra",
                         xlabel="offset/2pi (GHz)", ylabel="S (1/GHz)")
        m.add(path, "svg", panel=channel)


def run_figure(figure: str, config: RunConfig) -> dict:
    """Write the CSVs, SVGs and manifest for one figure; returns the manifest."""
    if figure not in PRESETS:
        raise ValueError(f"unknown figure {figure!r}; expected one of {FIGURE_IDS}")
    preset = PRESETS[figure]
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    m = Manifest(figure, config.params, out)
    m.data["sweep"] = list(preset.sweep)
    if figure == "fig2":
        _fig2(config, m)
    elif figure == "fig3":
        _fig3(config, m, preset)
    elif figure == "fig5":
        _fig5(config, m, preset)
    elif figure == "fig6":
        _fig6(config, m, preset)
    else:
        _fig7(config, m, preset)
    m.write()
    return m.data


# -- sweeps ---------------------------------------------------------------

def _with_value(params: SystemParams, name: str, value: float) -> SystemParams:
    if name == "delta":
        return params.with_(delta=value * params.g0)
    if name == "g0":
        # keep the detuning ratio fixed while the coupling changes
        return params.with_(g0=value * GHZ, delta=params.delta / params.g0 * value * GHZ)
    return params.with_(**{name: value * GHZ})


def _sweep_column(name: str) -> str:
    return "delta_over_g0" if name == "delta" else f"{name}_ghz"


def _eta(params):
    if params.gamma_p > 0:
        return qe_dephased(params)
    return quantum_efficiency(params)


def _spectra_pair(params):
    out = {}
    for channel in ("side", "forward"):
        grid = default_grid(params, channel, points=8001)
        out[channel] = normalize_spectrum(emission_spectrum(params, grid, channel), params)
    return out


def sweep(params: SystemParams, name: str, values, quantity: str) -> tuple[list[str], list[np.ndarray]]:
    """Evaluate ``quantity`` along one parameter; returns (header, columns)."""
    if isinstance(name, (list, tuple)):
        raise ValueError("only single-parameter sweeps are supported")
    if name not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {name!r}; expected one of {SWEEP_PARAMS}")
    if quantity not in SWEEP_QUANTITIES:
        raise ValueError(f"unknown sweep quantity {quantity!r}; expected one of {SWEEP_QUANTITIES}")
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("sweep needs at least one value")
    rows = []
    for v in values:
        p = _with_value(params, name, float(v))
        if quantity == "eta_q":
            rows.append([_eta(p)])
        elif quantity == "splittings":
            s = _spectra_pair(p)
            closed = normal_mode_splittings(p)
            rows.append([peak_separation(s["side"]) / GHZ, peak_separation(s["forward"]) / GHZ,
                         closed["delta_omega_s"] / GHZ, closed["delta_omega_f"] / GHZ,
                         closed["two_g"] / GHZ])
        else:
            s = _spectra_pair(p)
            rows.append([w["fwhm"] / GHZ for ch in ("side", "forward") for w in peak_widths(s[ch])])
    if quantity == "eta_q":
        names = ["eta_q"]
    elif quantity == "splittings":
        names = ["peak_separation_side_ghz", "peak_separation_forward_ghz",
                 "delta_omega_s_ghz", "delta_omega_f_ghz", "two_g_ghz"]
    else:
        names = ["fwhm_side_low_ghz", "fwhm_side_high_ghz", "fwhm_forward_low_ghz", "fwhm_forward_high_ghz"]
    table = np.array(rows).T
    return [_sweep_column(name)] + names, [values] + list(table)
