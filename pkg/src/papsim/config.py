"""Scenario configuration: flat-sectioned text files with unit suffixes.

Every dimensional value is written as ``<number> <unit>`` (``fwhm = 750 ns``,
``density = 1e11 cm^-3``) and converted to atomic units at parse time; a bare
number is taken as atomic units / dimensionless.  Sections describe one
entity each: ``[pulse.<name>]``, ``[state.<name>]``, ``[coupling.<name>]``,
``[continuum.<name>]``, ``[potential.<name>]``, plus the per-subcommand
blocks (``[levels]``, ``[scatter]``, ``[fc]``, ``[packet]``, ``[ensemble]``,
``[rates]``, ``[scan]``, ``[outputs]``).
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .dynamics import BoundLevel, ContinuumEdge, Coupling, LinkageScheme, PulseEnvelope
from .ensemble import EnsembleSpec
from .errors import ConfigError, ConfigNotFoundError
from .units import RB85_PAIR_REDUCED_MASS, to_atomic

__all__ = ["Scenario", "load_scenario", "parse_value", "preset_path", "PRESETS"]

PRESETS = (
    "fig3_scan",
    "fig5_coherent",
    "fig6_ensemble",
    "fig7_branching",
    "fig8_intensity_scan",
    "rates_paper",
)


def parse_value(text: str) -> float:
    """``"750 ns"`` -> a.u.; bare numbers pass through; ``inf`` allowed."""
    parts = text.strip().split()
    if not parts:
        raise ConfigError("empty value")
    if parts[0] in ("inf", "+inf"):
        return math.inf
    try:
        num = float(parts[0])
    except ValueError:
        raise ConfigError(f"malformed number in {text!r}") from None
    if len(parts) == 1:
        return num
    if len(parts) != 2:
        raise ConfigError(f"expected '<number> <unit>', got {text!r}")
    return to_atomic(num, parts[1]).value


def parse_list(text: str) -> list[float]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if item:
            out.append(parse_value(item))
    return out


def parse_int_list(text: str) -> list[int]:
    """``"0:13"`` expands a range; otherwise comma-separated integers."""
    text = text.strip()
    if ":" in text and "," not in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi)))
    return [int(x) for x in text.split(",") if x.strip()]


@dataclass
class Scenario:
    """Parsed configuration plus typed accessors for the pipeline stages."""

    sections: dict
    source_text: str
    path: str = ""

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()

    def section(self, name: str, required: bool = False) -> dict:
        if name not in self.sections:
            if required:
                raise ConfigError(f"missing required section [{name}]")
            return {}
        return self.sections[name]

    def get(self, section: str, key: str, default=None, required: bool = False):
        sec = self.section(section, required=required and default is None)
        if key not in sec:
            if required:
                raise ConfigError(f"missing key {key!r} in section [{section}]")
            return default
        return sec[key]

    def value(self, section: str, key: str, default=None, required: bool = False):
        raw = self.get(section, key, None, required)
        if raw is None:
            return default
        return parse_value(raw)

    def named_sections(self, prefix: str) -> dict:
        out = {}
        for name, body in self.sections.items():
            if name.startswith(prefix + "."):
                out[name[len(prefix) + 1 :]] = body
        return out

    # -- typed builders -----------------------------------------------------

    def mass(self) -> float:
        return self.value("ensemble", "reduced_mass", RB85_PAIR_REDUCED_MASS)

    def potential(self, name: str):
        from . import potentials

        body = self.section(f"potential.{name}", required=True)
        if "file" in body:
            return potentials.load_potential(body["file"])
        builtin = body.get("builtin", "")
        if builtin == "x_model":
            target = parse_value(body.get("scattering_length", "2500"))
            return potentials.builtin_x_model(target, self.mass())
        if builtin == "excited_model":
            return potentials.builtin_excited_model()
        raise ConfigError(
            f"[potential.{name}] needs 'file' or builtin in (x_model, excited_model)"
        )

    def pulses(self) -> list[PulseEnvelope]:
        out = []
        for name, body in self.named_sections("pulse").items():
            if "intensity" in body:
                peak = parse_value(body["intensity"] if " " in body["intensity"]
                                   else body["intensity"] + " W/cm^2")
            else:
                peak = parse_value(body.get("peak_field", "0"))
            out.append(
                PulseEnvelope(
                    name=name,
                    shape=body.get("shape", "sin_squared"),
                    fwhm=parse_value(body["fwhm"]),
                    center=parse_value(body["center"]),
                    peak_field=peak,
                    detuning=parse_value(body.get("detuning", "0")),
                    polarization=body.get("polarization", ""),
                    phase=parse_value(body.get("phase", "0")),
                )
            )
        if not out:
            raise ConfigError("no [pulse.*] sections found")
        return out

    def scheme(self) -> LinkageScheme:
        states = []
        for name, body in self.named_sections("state").items():
            lifetime = parse_value(body.get("lifetime", "inf"))
            gamma = 0.0 if math.isinf(lifetime) else 1.0 / lifetime
            states.append(
                BoundLevel(label=name, energy=parse_value(body.get("energy", "0")),
                           gamma_f=gamma)
            )
        if not states:
            raise ConfigError("no [state.*] sections found")
        couplings = []
        for name, body in self.named_sections("coupling").items():
            couplings.append(
                Coupling(
                    lower=body["lower"],
                    upper=body["upper"],
                    dipole_fc=parse_value(body["dipole_fc"]),
                    pulse=body["pulse"],
                )
            )
        edges = []
        for name, body in self.named_sections("continuum").items():
            edges.append(
                ContinuumEdge(
                    target=body["target"],
                    dipole_fc=parse_value(body["dipole_fc"]),
                    pulse=body["pulse"],
                )
            )
        # keep declaration order stable for byte-identical outputs
        states.sort(key=lambda s: s.label)
        return LinkageScheme(
            states=tuple(states), couplings=tuple(couplings), continuum_edges=tuple(edges)
        )

    def packet(self):
        from .dynamics import ContinuumPacket

        body = self.section("packet", required=True)
        return ContinuumPacket(
            e0=parse_value(body["e0"]),
            delta_e=parse_value(body["delta_e"]),
            t0=parse_value(body.get("t0", "0")),
        )

    def e_ref(self) -> float | None:
        raw = self.get("packet", "e_ref")
        return None if raw is None else parse_value(raw)

    def ensemble_spec(self) -> EnsembleSpec:
        body = self.section("ensemble", required=True)
        return EnsembleSpec(
            temperature=parse_value(body["temperature"]),
            density=parse_value(body["density"]),
            reduced_mass=parse_value(body.get("reduced_mass", repr(RB85_PAIR_REDUCED_MASS))),
            pulse_duration=parse_value(body["pulse_duration"]),
            singlet_fraction=float(body.get("singlet_fraction", "0.25")),
            trap_length=parse_value(body.get("trap_length", "0")),
            trap_diameter=parse_value(body.get("trap_diameter", "0")),
            lattice_speed=parse_value(body.get("lattice_speed", "0")),
            sequence_duration=parse_value(body.get("sequence_duration", "0")),
            branch_fraction=float(body.get("branch_fraction", "1.0")),
        )

    def outputs(self) -> dict:
        return dict(self.section("outputs"))


def _apply_overrides(sections: dict, overrides) -> None:
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        target, value = item.split("=", 1)
        if "." not in target:
            raise ConfigError(f"override target {target!r} needs 'section.key'")
        sec, key = target.rsplit(".", 1)
        if sec not in sections or key not in sections[sec]:
            raise ConfigError(f"override targets unknown key [{sec}] {key}")
        sections[sec][key] = value.strip()


def _parse_text(text: str, path: str, overrides) -> Scenario:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    sections = {name: dict(cp[name]) for name in cp.sections()}
    _apply_overrides(sections, overrides)
    # overrides are folded back so the hash tracks the effective config
    rendered = []
    for name in sorted(sections):
        rendered.append(f"[{name}]")
        for key in sorted(sections[name]):
            rendered.append(f"{key} = {sections[name][key]}")
    return Scenario(sections=sections, source_text="\n".join(rendered), path=path)


def preset_path(name: str) -> Path:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return Path(str(resources.files("papsim.scenarios").joinpath(f"{name}.cfg")))


def load_scenario(path=None, preset=None, overrides=None) -> Scenario:
    if (path is None) == (preset is None):
        raise ConfigError("exactly one of config path or preset name is required")
    if preset is not None:
        path = preset_path(preset)
    p = Path(path)
    if not p.exists():
        raise ConfigNotFoundError(f"config file not found: {p}")
    return _parse_text(p.read_text(encoding="utf-8"), str(p), overrides)
