"""Command-line front end.

Subcommands: levels, scatter, fc, dynamics, ensemble, rates.  Each consumes a
scenario config (``--config`` file or shipped ``--preset``), applies
``--set section.key=value`` overrides, and writes its CSV/JSON artifacts
atomically into ``--outdir`` along with a manifest recording the config hash,
tool version and wall time.  Floats are rendered ``%.12e`` so identical
configs give byte-identical data files.  Exit codes: 0 success, 2 config
error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import Scenario, load_scenario, parse_int_list, parse_list, parse_value
from .errors import ConfigError, PapsimError
from .units import HARTREE_INV_CM, KB_AU_PER_K

FLOAT_FMT = "%.12e"


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_csv(path: Path, header: list, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and (math.isinf(obj) or math.isnan(obj)):
        return repr(obj)
    return obj


def _write_json(path: Path, payload: dict) -> None:
    _atomic_write(path, json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")


class _Run:
    """Collects output artifacts and writes the manifest at the end."""

    def __init__(self, scenario: Scenario, outdir: Path, subcommand: str, plot: bool):
        self.scenario = scenario
        self.outdir = outdir
        self.subcommand = subcommand
        self.plot = plot
        self.outputs: list[str] = []
        self.t_start = time.monotonic()
        outdir.mkdir(parents=True, exist_ok=True)

    def out_path(self, key: str, default: str) -> Path:
        name = self.scenario.outputs().get(key, default)
        return self.outdir / name

    def csv(self, key: str, default: str, header, rows) -> Path:
        path = self.out_path(key, default)
        _write_csv(path, header, rows)
        self.outputs.append(path.name)
        return path

    def json(self, payload: dict, key: str = "summary", default: str = "summary.json") -> Path:
        path = self.out_path(key, default)
        _write_json(path, payload)
        self.outputs.append(path.name)
        return path

    def figure(self, render, csv_path: Path):
        if not self.plot:
            return
        from . import plots

        png = csv_path.with_suffix(".png")
        render(png)
        self.outputs.append(png.name)

    def finish(self) -> None:
        manifest = {
            "subcommand": self.subcommand,
            "config_sha256": self.scenario.sha256,
            "config_path": str(self.scenario.path),
            "version": __version__,
            "wall_time_s": time.monotonic() - self.t_start,
            "outputs": sorted(self.outputs),
        }
        _write_json(self.outdir / "manifest.json", manifest)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_levels(run: _Run) -> None:
    from . import spectrum

    sc = run.scenario
    body = sc.section("levels", required=True)
    pot = sc.potential(body.get("surface", "X"))
    j = int(body.get("J", "0"))
    window = (parse_value(body["window_lo"]), parse_value(body["window_hi"]))
    states = spectrum.bound_levels(
        pot, j, window, sc.mass(),
        max_refinements=int(body.get("max_refinements", "2")),
    )
    rows = [
        (str(s.v), str(s.J), _fmt(s.energy), _fmt(s.energy * HARTREE_INV_CM),
         _fmt(s.outer_turning_point))
        for s in states
    ]
    path = run.csv("csv", "levels.csv",
                   ["v", "J", "E[a.u.]", "E[cm^-1]", "outer_turning_point[a.u.]"], rows)
    run.json({
        "n_levels": len(states),
        "surface": body.get("surface", "X"),
        "J": j,
        "energies": [s.energy for s in states],
    })
    from . import plots
    run.figure(lambda png: plots.level_diagram(states, png), path)


def _cmd_scatter(run: _Run) -> None:
    from . import potentials, scattering

    sc = run.scenario
    body = sc.section("scatter", required=True)
    surface = body.get("surface", "X")
    pot = sc.potential(surface)
    mass = sc.mass()
    summary: dict = {"surface": surface}

    rows = []
    es = parse_list(body.get("energies", ""))
    for e in es:
        cw = scattering.continuum_wave(pot, e, 0, mass)
        k = cw.k
        rows.append((e, k, cw.phase_shift, -math.tan(cw.phase_shift) / k))
    path = None
    if rows:
        path = run.csv("csv", "scatter.csv",
                       ["E[a.u.]", "k[a.u.]", "delta[rad]", "a_running[a.u.]"], rows)
        from . import plots
        run.figure(lambda png: plots.phase_scan(rows, png), path)

    sl = scattering.scattering_length(pot, mass)
    summary["scattering_length"] = sl.value
    summary["scattering_length_residual"] = sl.residual

    if "rinterp_scan" in body:
        lo, hi, n = (x.strip() for x in body["rinterp_scan"].split(","))
        ris = np.linspace(float(lo), float(hi), int(n))
        scan_rows = []
        for ri in ris:
            p_ri = potentials.x_model_at(float(ri))
            a = scattering.scattering_length(p_ri, mass).value
            scan_rows.append((float(ri), a, 1.0 / a))
        spath = run.csv("rinterp_csv", "rinterp_scan.csv",
                        ["r_interp[a.u.]", "a[a.u.]", "inv_a[a.u.^-1]"], scan_rows)
        summary["rinterp_scan_sign_changes_of_inv_a"] = int(
            np.count_nonzero(np.diff(np.sign([r[2] for r in scan_rows])) != 0)
        )
        from . import plots
        run.figure(lambda png: plots.rinterp_scan([r[0] for r in scan_rows],
                                                  [r[1] for r in scan_rows], png), spath)

    if "fc_energies" in body:
        from . import spectrum

        upper = sc.potential(body.get("fc_surface", "A"))
        j_up = int(body.get("fc_J", "1"))
        w_lo = parse_value(body.get("fc_window_lo", "-5e-6"))
        w_hi = parse_value(body.get("fc_window_hi", "-1e-12"))
        lv = spectrum.bound_levels(
            upper, j_up, (upper.asymptote + w_lo, upper.asymptote + w_hi), mass,
            max_refinements=1,
        )
        want = int(body.get("fc_level", str(lv[0].v)))
        bound = next(s for s in lv if s.v == want)
        pts, slope = scattering.threshold_scan(
            pot, bound, parse_list(body["fc_energies"]), mass
        )
        wrows = [(e, fc.value) for e, fc in pts]
        wpath = run.csv("wigner_csv", "fc_vs_energy.csv",
                        ["E[a.u.]", "fc[hartree^-1/2]"], wrows)
        summary["wigner_slope"] = slope
        summary["fc_upper_level"] = bound.v
        from . import plots
        run.figure(lambda png: plots.wigner_scan(wrows, slope, png), wpath)

    run.json(summary)


def _cmd_fc(run: _Run) -> None:
    from . import dynamics, franckcondon, scattering, spectrum

    sc = run.scenario
    body = sc.section("fc", required=True)
    mass = sc.mass()
    lower_pot = sc.potential(body.get("lower", "X"))
    upper_pot = sc.potential(body.get("upper", "A"))
    j_lo = int(body.get("lower_J", "0"))
    j_up = int(body.get("upper_J", "1"))

    lo_win = (
        parse_value(body.get("lower_window_lo", "-6e-5")) + lower_pot.asymptote,
        parse_value(body.get("lower_window_hi", "-1e-12")) + lower_pot.asymptote,
    )
    up_win = (
        parse_value(body.get("upper_window_lo", "-9e-5")) + upper_pot.asymptote,
        parse_value(body.get("upper_window_hi", "-1e-12")) + upper_pot.asymptote,
    )
    lower_all = spectrum.bound_levels(lower_pot, j_lo, lo_win, mass, max_refinements=1)
    upper_all = spectrum.bound_levels(upper_pot, j_up, up_win, mass, max_refinements=1)
    if "lower_levels" in body:
        keep = set(parse_int_list(body["lower_levels"]))
        lower_states = [s for s in lower_all if s.v in keep]
    else:
        lower_states = lower_all
    if "upper_levels" in body:
        keep = set(parse_int_list(body["upper_levels"]))
        upper_states = [s for s in upper_all if s.v in keep]
    else:
        upper_states = upper_all

    lower_mixed = list(lower_states)
    for e in parse_list(body.get("continuum_energies", "")):
        lower_mixed.append(scattering.continuum_wave(lower_pot, e, 0, mass))

    table = franckcondon.fc_map(lower_mixed, upper_states)
    rows = [(lo, up, kind.value, _fmt(val)) for lo, up, kind, val in table.rows]
    path = run.csv("csv", "fc.csv", ["lower_id", "upper_id", "kind", "value"], rows)

    summary: dict = {"n_rows": len(rows)}
    if "branching_via" in body:
        via_v = int(body["branching_via"])
        via = next(s for s in upper_states if s.v == via_v)
        tab = dynamics.decay_accumulation(via, lower_states)
        summary["branching_via"] = tab.via_label
        summary["branching_fractions"] = tab.fractions
        summary["branching_fc_squared_sum"] = tab.raw_fc_squared_sum
        summary["incomplete_manifold"] = tab.incomplete_manifold
        if "pi_pulse_duration" in body:
            dur = parse_value(body["pi_pulse_duration"])
            fc_from = sc.value("fc", "pi_pulse_from_fc")
            if fc_from is None:
                fc_from = max(
                    (abs(table.value(f"v{s.v}", f"v{via_v}")) for s in lower_states),
                    default=0.0,
                )
            summary["pi_pulse_intensity_w_cm2"] = dynamics.pi_pulse_intensity(
                fc_from, dur
            )
    run.json(summary)
    from . import plots
    run.figure(lambda png: plots.fc_rows(table, png), path)


def _dynamics_once(sc: Scenario, pulses=None):
    from . import dynamics

    scheme = sc.scheme()
    packet = sc.packet()
    return dynamics.integrate_svca(
        scheme,
        pulses if pulses is not None else sc.pulses(),
        packet,
        e_ref=sc.e_ref(),
    )


def _cmd_dynamics(run: _Run) -> None:
    from . import dynamics as dyn

    sc = run.scenario
    if "scan" in sc.sections:
        body = sc.section("scan")
        pulse_name = body.get("pulse", "pump")
        intensities = parse_list(body["intensities_w_cm2"])
        pulses = sc.pulses()
        target = body.get("target") or sc.get("dynamics", "target", "b1")
        finals = []
        from .units import intensity_to_field

        for inten in intensities:
            mod = [
                p if p.name != pulse_name
                else dyn.PulseEnvelope(
                    name=p.name, shape=p.shape, fwhm=p.fwhm, center=p.center,
                    peak_field=intensity_to_field(inten), detuning=p.detuning,
                    polarization=p.polarization, phase=p.phase,
                )
                for p in pulses
            ]
            finals.append(_dynamics_once(sc, mod).final(target))
        rows = list(zip(intensities, finals))
        path = run.csv("scan_csv", "intensity_scan.csv",
                       ["intensity[W/cm^2]", "final_population"], rows)
        logi, logp = np.log(intensities), np.log(np.maximum(finals, 1e-300))
        n_lo = max(3, len(finals) // 3)
        summary = {
            "target": target,
            "low_intensity_loglog_slope": float(np.polyfit(logi[:n_lo], logp[:n_lo], 1)[0]),
            "top_decade_loglog_slope": float(np.polyfit(logi[-4:], logp[-4:], 1)[0]),
            "max_population": float(np.max(finals)),
        }
        run.json(summary)
        from . import plots
        run.figure(lambda png: plots.intensity_scan(rows, png), path)
        return

    res = _dynamics_once(sc)
    header = ["t[a.u.]"] + [f"P({lab})" for lab in res.labels] + ["F0_squared[a.u.]"]
    pops = res.populations
    rows = [
        tuple([res.times[i]] + [pops[j, i] for j in range(len(res.labels))]
              + [res.source_squared[i]])
        for i in range(res.times.size)
    ]
    path = run.csv("csv", "dynamics.csv", header, rows)
    run.json({
        "final_populations": res.final_populations,
        "diagnostics": res.diagnostics,
    })
    from . import plots
    run.figure(lambda png: plots.population_traces(res, png), path)


def _cmd_ensemble(run: _Run) -> None:
    from . import ensemble as ens

    sc = run.scenario
    spec = sc.ensemble_spec()
    body = sc.section("ensemble", required=True)
    target = body.get("target", "b1")
    t0 = parse_value(sc.get("packet", "t0", "0"))
    e_ref = sc.e_ref()
    if e_ref is None:
        e_ref = parse_value(sc.get("packet", "e0", required=True))
    avg = ens.ensemble_yield_run(
        sc.scheme(), sc.pulses(), spec,
        e_ref=e_ref, t0=t0, target=target,
        n_nodes=int(body.get("nodes", "16")),
    )
    rows = list(zip(avg.nodes, avg.weights, avg.values))
    path = run.csv("csv", "ensemble_nodes.csv",
                   ["E[a.u.]", "weight", "P(E)"], rows)
    budget = ens.campaign_budget(max(avg.value, 1e-300), spec) if avg.value < 1.0 else None
    summary = {
        "target": target,
        "ensemble_averaged_population": avg.value,
        "excluded_low_energy_weight": avg.excluded_weight,
        "n_nodes": avg.n_nodes,
    }
    if budget is not None:
        summary["n_sequences"] = budget.n_sequences
        summary["per_pulse_rate"] = budget.per_pulse_rate
        summary["sequence_period_s"] = budget.sequence_period * _seconds_per_au()
    run.json(summary)
    from . import plots
    run.figure(lambda png: plots.ensemble_nodes(rows, spec.temperature, png), path)


def _seconds_per_au() -> float:
    from .units import TIME_AU_S

    return TIME_AU_S


def _cmd_rates(run: _Run) -> None:
    from . import ensemble as ens

    sc = run.scenario
    spec = sc.ensemble_spec()
    body = sc.section("rates", required=True)
    p_transfer = float(body.get("transfer_probability", "0.6"))
    energy = parse_value(body.get("energy", "100 uK"))
    n = ens.collisions_per_pulse(energy, spec, 0)
    f = ens.fraction_per_pulse(p_transfer, energy, spec)
    r_st, delta_e, f0_sq = ens.wavepacket_params(spec, energy)
    summary = {
        "collision_energy": energy,
        "transfer_probability": p_transfer,
        "collisions_per_pulse": n,
        "fraction_per_pulse_pair": f,
        "r_st": r_st,
        "delta_e": delta_e,
        "f0_squared_peak": f0_sq,
    }
    yld = sc.get("rates", "per_sequence_yield")
    if yld is not None:
        budget = ens.campaign_budget(float(yld), spec)
        summary["n_sequences"] = budget.n_sequences
        summary["sequence_period_s"] = budget.sequence_period * _seconds_per_au()
        summary["wall_time_s"] = budget.wall_time * _seconds_per_au()
        summary["per_pulse_rate"] = budget.per_pulse_rate
        if budget.removal_interval is not None:
            summary["removal_interval_s"] = budget.removal_interval * _seconds_per_au()
        if budget.atoms_in_focus is not None:
            summary["atoms_in_focus"] = budget.atoms_in_focus
            summary["molecules_per_second"] = budget.molecules_per_second / _seconds_per_au()
            summary["molecules_per_second_from_yield"] = (
                budget.molecules_per_second_from_yield / _seconds_per_au()
            )
            summary["yield_tension"] = budget.yield_tension
    run.json(summary)


_COMMANDS = {
    "levels": _cmd_levels,
    "scatter": _cmd_scatter,
    "fc": _cmd_fc,
    "dynamics": _cmd_dynamics,
    "ensemble": _cmd_ensemble,
    "rates": _cmd_rates,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="papsim",
        description="photoassociation adiabatic-passage simulation toolkit",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="scenario config file")
        src.add_argument("--preset", help="shipped scenario preset name")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="SECTION.KEY=VALUE")
        sp.add_argument("--outdir", default=".", help="output directory")
        sp.add_argument("--plot", action="store_true",
                        help="also render PNG figures next to the data files")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.config, args.preset, args.overrides)
        run = _Run(scenario, Path(args.outdir), args.subcommand, args.plot)
        _COMMANDS[args.subcommand](run)
        run.finish()
    except PapsimError as exc:
        print(f"ERROR {exc.tag}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
