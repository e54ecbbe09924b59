"""Thermal-ensemble statistics and campaign arithmetic.

The per-energy transfer probability is averaged over the Maxwell-Boltzmann
distribution with generalized Gauss-Laguerre quadrature (weight
sqrt(x) e^-x), whose nodes double as the energies of the per-energy dynamics
runs.  The remaining operations are the collision bookkeeping that turns a
per-collision probability into a per-pulse-pair fraction, the mono-energetic
wave-packet parameters, and the pulse-train production budget.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, roots_genlaguerre

from .errors import ConvergenceError, DomainError

__all__ = [
    "EnsembleSpec",
    "ThermalAverage",
    "thermal_average",
    "collisions_per_pulse",
    "fraction_per_pulse",
    "wavepacket_params",
    "campaign_budget",
    "CampaignBudget",
    "ensemble_yield_run",
    "worker_count",
]

# nodes below E = kT/100 are excluded from the quadrature: the continuum
# elimination degrades as E -> 0, and the Maxwell-Boltzmann weight there is
# reported instead of integrated
LOW_ENERGY_CUTOFF_FRACTION = 0.01


def worker_count() -> int:
    env = os.environ.get("PAPSIM_WORKERS", "")
    if env.strip():
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"PAPSIM_WORKERS must be an integer, got {env!r}")
        return max(1, n)
    return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class EnsembleSpec:
    """Trap and pulse-train parameters, all in atomic units.

    singlet_fraction is the share of collisions on the optically active
    surface (the remaining collisions are untouched by the chosen
    polarizations and only stretch the pulse budget).
    """

    temperature: float
    density: float
    reduced_mass: float
    pulse_duration: float
    singlet_fraction: float = 0.25
    trap_length: float = 0.0
    trap_diameter: float = 0.0
    lattice_speed: float = 0.0
    sequence_duration: float = 0.0
    branch_fraction: float = 1.0

    def __post_init__(self):
        if min(self.temperature, self.density, self.reduced_mass, self.pulse_duration) < 0:
            raise DomainError("ensemble parameters must be non-negative")
        if not (0.0 < self.singlet_fraction <= 1.0):
            raise DomainError("singlet_fraction must lie in (0, 1]")


@dataclass
class ThermalAverage:
    value: float
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    excluded_weight: float
    n_nodes: int


def _gauss_nodes(kt: float, n: int):
    x, w = roots_genlaguerre(n, 0.5)
    # P_total = (2/sqrt(pi)) * sum w_i P(kT x_i); the weight already carries
    # sqrt(x) exp(-x)
    return kt * x, 2.0 / math.sqrt(math.pi) * w, x


def thermal_average(
    p_of_e,
    temperature: float,
    *,
    n_nodes: int = 24,
    check_convergence: bool = False,
    rel_tol: float = 1e-4,
    executor=None,
) -> ThermalAverage:
    """Maxwell-Boltzmann average of P(E) at temperature T (both in a.u.).

    ``p_of_e`` maps one energy to a probability; nodes below kT/100 are
    skipped (their Boltzmann weight is reported, not integrated).  With
    ``check_convergence`` the node count is doubled once and the two results
    must agree to ``rel_tol``.
    """
    kt = float(temperature)
    if kt <= 0.0:
        raise DomainError("temperature must be positive")

    def evaluate(n):
        energies, weights, x = _gauss_nodes(kt, n)
        keep = x >= LOW_ENERGY_CUTOFF_FRACTION
        excluded = float(
            2.0 / math.sqrt(math.pi)
            * math.gamma(1.5)
            * gammainc(1.5, LOW_ENERGY_CUTOFF_FRACTION)
        ) if not np.all(keep) else 0.0
        es = energies[keep]
        if executor is not None:
            vals = np.fromiter(executor.map(p_of_e, es), dtype=float, count=es.size)
        else:
            vals = np.array([p_of_e(e) for e in es], dtype=float)
        full_vals = np.zeros(energies.size)
        full_vals[keep] = vals
        total = float(np.sum(weights * full_vals))
        return total, energies, weights, full_vals, excluded

    total, energies, weights, vals, excluded = evaluate(n_nodes)
    if check_convergence:
        total2, *_ = evaluate(2 * n_nodes)
        scale = max(abs(total2), 1e-300)
        if abs(total2 - total) > rel_tol * scale:
            raise ConvergenceError(
                f"thermal average unconverged: {total:.6e} vs {total2:.6e} "
                f"at {n_nodes}/{2*n_nodes} nodes"
            )
        total = total2
    return ThermalAverage(
        value=total,
        nodes=energies,
        weights=weights,
        values=vals,
        excluded_weight=excluded,
        n_nodes=n_nodes,
    )


def collisions_per_pulse(energy: float, spec: EnsembleSpec, J: int = 0) -> float:
    """N = rho * pi * b^2 * v * tau with b = (J+1/2)/sqrt(2mE), v = sqrt(2E/m)."""
    if energy < 0.0:
        raise DomainError("collision energy must be non-negative")
    if energy == 0.0 or spec.pulse_duration == 0.0:
        return 0.0
    m = spec.reduced_mass
    b2 = (J + 0.5) ** 2 / (2.0 * m * energy)
    v = math.sqrt(2.0 * energy / m)
    return spec.density * math.pi * b2 * v * spec.pulse_duration


def fraction_per_pulse(p_transfer: float, energy: float, spec: EnsembleSpec) -> float:
    """f(E) = P(E) pi rho tau / (4 m^(3/2) sqrt(2E)), the s-wave (J=0) case."""
    if not (0.0 <= p_transfer <= 1.0):
        raise DomainError("transfer probability must lie in [0, 1]")
    if energy <= 0.0:
        raise DomainError("collision energy must be positive")
    m = spec.reduced_mass
    return (
        p_transfer
        * math.pi
        * spec.density
        * spec.pulse_duration
        / (4.0 * m**1.5 * math.sqrt(2.0 * energy))
    )


def wavepacket_params(spec: EnsembleSpec, energy: float):
    """Mono-energetic packet parameters at collision energy E.

    r_st = 1/(pi rho b^2) is the mean distance between s-wave collision
    partners; the uncertainty relation then fixes the packet energy width
    delta_e = sqrt(E/(2 m r_st^2)) and the peak source density
    |F0|^2 = 2 sqrt(pi) delta_e.
    """
    if energy <= 0.0:
        raise DomainError("collision energy must be positive")
    m = spec.reduced_mass
    b2 = 0.25 / (2.0 * m * energy)
    r_st = 1.0 / (math.pi * spec.density * b2)
    delta_e = math.sqrt(energy / (2.0 * m)) / r_st
    f0_sq_peak = 2.0 * math.sqrt(math.pi) * delta_e
    return r_st, delta_e, f0_sq_peak


@dataclass
class CampaignBudget:
    n_sequences: float
    sequence_period: float
    wall_time: float
    removal_interval: float | None
    atoms_in_focus: float | None
    molecules_per_sequence: float | None
    molecules_per_second: float | None
    molecules_per_second_from_yield: float | None
    per_pulse_rate: float
    yield_tension: bool
    notes: list = field(default_factory=list)


def campaign_budget(per_sequence_yield: float, spec: EnsembleSpec) -> CampaignBudget:
    """Pulse-train budget: sequences to exhaust the ensemble, duty cycle,
    and the ground-state production rate.

    The production rate assumes the focus volume is fully converted over the
    campaign (the optimistic reading); the rate implied by the single-shot
    yield is reported alongside, and ``yield_tension`` flags the gap instead
    of reconciling it.
    """
    if not (0.0 < per_sequence_yield < 1.0):
        raise DomainError("per-sequence yield must lie in (0, 1)")
    n_seq = math.ceil(1.0 / (per_sequence_yield * spec.singlet_fraction))
    removal = None
    if spec.lattice_speed > 0.0 and spec.trap_diameter > 0.0:
        removal = spec.trap_diameter / spec.lattice_speed
    period = max(
        spec.sequence_duration,
        removal if removal is not None else 0.0,
    )
    if period == 0.0:
        period = spec.pulse_duration
    atoms = None
    mol_seq = None
    rate = None
    rate_yield = None
    tension = False
    notes = []
    if spec.trap_length > 0.0 and spec.trap_diameter > 0.0:
        atoms = (
            spec.density
            * math.pi
            * (0.5 * spec.trap_diameter) ** 2
            * spec.trap_length
        )
        mol_seq = atoms * spec.branch_fraction
        rate = mol_seq / period
        rate_yield = atoms * per_sequence_yield * spec.branch_fraction / period
        tension = rate_yield < 0.5 * rate
        if tension:
            notes.append(
                "complete-conversion rate exceeds the single-sequence-yield "
                "rate by more than 2x; both are reported"
            )
    per_pulse_rate = per_sequence_yield * spec.singlet_fraction
    return CampaignBudget(
        n_sequences=float(n_seq),
        sequence_period=float(period),
        wall_time=float(n_seq) * float(period),
        removal_interval=removal,
        atoms_in_focus=atoms,
        molecules_per_sequence=mol_seq,
        molecules_per_second=rate,
        molecules_per_second_from_yield=rate_yield,
        per_pulse_rate=per_pulse_rate,
        yield_tension=tension,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Maxwell-Boltzmann-averaged dynamics runs
# ---------------------------------------------------------------------------


def _node_probability(args):
    """Transfer probability of one quadrature node; must stay picklable."""
    scheme, pulses, spec, e_ref, t0, target, energy = args
    from .dynamics import ContinuumPacket, integrate_svca

    _, delta_e, _ = wavepacket_params(spec, energy)
    packet = ContinuumPacket(e0=energy, delta_e=delta_e, t0=t0)
    res = integrate_svca(scheme, pulses, packet, e_ref=e_ref)
    return res.final(target)


def ensemble_yield_run(
    scheme,
    pulses,
    spec: EnsembleSpec,
    *,
    e_ref: float,
    t0: float,
    target: str,
    n_nodes: int = 16,
    workers: int | None = None,
) -> ThermalAverage:
    """Per-pulse-sequence yield: SVCA runs at the quadrature energies,
    each with the mono-energetic packet parameters of its node, averaged
    over the Maxwell-Boltzmann distribution.

    The node energies double as the packet centre energies; the laser stays
    resonant with ``e_ref``, so off-centre nodes run two-photon detuned
    exactly as the fixed-frequency pulses dictate.
    """
    nproc = worker_count() if workers is None else max(1, workers)
    pulses = tuple(pulses)

    def p_of_e(energy):
        return _node_probability((scheme, pulses, spec, e_ref, t0, target, energy))

    if nproc > 1 and n_nodes > 1:
        kt = spec.temperature
        energies, weights, x = _gauss_nodes(kt, n_nodes)
        keep = x >= LOW_ENERGY_CUTOFF_FRACTION
        argtuples = [
            (scheme, pulses, spec, e_ref, t0, target, e) for e in energies[keep]
        ]
        with ProcessPoolExecutor(max_workers=min(nproc, len(argtuples))) as pool:
            vals = list(pool.map(_node_probability, argtuples))
        full_vals = np.zeros(energies.size)
        full_vals[keep] = vals
        excluded = float(gammainc(1.5, LOW_ENERGY_CUTOFF_FRACTION)) if not np.all(keep) else 0.0
        return ThermalAverage(
            value=float(np.sum(weights * full_vals)),
            nodes=energies,
            weights=weights,
            values=full_vals,
            excluded_weight=excluded,
            n_nodes=n_nodes,
        )
    return thermal_average(p_of_e, spec.temperature, n_nodes=n_nodes)
