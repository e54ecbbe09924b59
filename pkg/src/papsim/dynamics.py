"""Time-dependent amplitude equations for pulse-pair photoassociation.

Two integrators share one linkage-graph description:

* ``integrate_svca`` eliminates the continuum under the slowly-varying-
  continuum approximation: each bound state j carries a damping matrix entry
  Gamma_jk = Gamma_f,j delta_jk + pi * Omega_E,j Omega_E,k* exp(i(D_j-D_k)t)
  and a source i * Omega_E,j(t) * F0_j(t) fed by the initial continuum wave
  packet.  The cross terms make multi-intermediate (double-Lambda)
  interference come out of the same equations.

* ``integrate_full_rwa`` keeps a discretized continuum band explicitly and
  serves as the oracle for the reduced equations.

Fast interaction-picture phases exp(+-i Delta t) are folded analytically
into the couplings, so the integrator only tracks envelope timescales.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DomainError,
    IntegratorToleranceError,
    StiffnessError,
)
from .franckcondon import FcKind, FcValue
from .units import INTENSITY_AU_WCM2

__all__ = [
    "PulseEnvelope",
    "BoundLevel",
    "Coupling",
    "ContinuumEdge",
    "LinkageScheme",
    "ContinuumPacket",
    "SimulationResult",
    "source_function",
    "correlation_kernel",
    "integrate_svca",
    "integrate_full_rwa",
    "integrate_multilinkage",
    "decay_accumulation",
    "branching_fractions",
    "pi_pulse_intensity",
]


@dataclass(frozen=True)
class PulseEnvelope:
    """One laser pulse: envelope shape, FWHM, centre, peak field, detuning.

    sin_squared envelopes have compact support of total length 2*FWHM; the
    FWHM refers to the field envelope.  ``detuning`` is the offset of the
    carrier from the resonance it addresses (stored; carriers themselves are
    only labels).  ``phase`` multiplies the field by exp(i*phase) and is the
    knob for pathway-interference studies.
    """

    name: str
    shape: str = "sin_squared"
    fwhm: float = 0.0
    center: float = 0.0
    peak_field: float = 0.0
    detuning: float = 0.0
    polarization: str = ""
    phase: float = 0.0

    def __post_init__(self):
        if self.shape not in ("sin_squared", "gaussian"):
            raise DomainError(f"unknown pulse shape {self.shape!r}")
        if self.fwhm <= 0.0:
            raise DomainError("pulse FWHM must be positive")

    @property
    def support(self):
        if self.shape == "sin_squared":
            return (self.center - self.fwhm, self.center + self.fwhm)
        return (self.center - 6.0 * self.fwhm, self.center + 6.0 * self.fwhm)

    def envelope(self, t):
        t_arr = np.asarray(t, dtype=float)
        if self.shape == "sin_squared":
            total = 2.0 * self.fwhm
            x = (t_arr - (self.center - self.fwhm)) / total
            env = np.where(
                (x >= 0.0) & (x <= 1.0),
                np.sin(np.pi * np.clip(x, 0.0, 1.0)) ** 2,
                0.0,
            )
        else:
            env = np.exp(-4.0 * math.log(2.0) * (t_arr - self.center) ** 2 / self.fwhm**2)
        out = self.peak_field * env
        return float(out) if t_arr.ndim == 0 else out


@dataclass(frozen=True)
class BoundLevel:
    label: str
    energy: float
    gamma_f: float = 0.0


@dataclass(frozen=True)
class Coupling:
    """Bound-bound edge: lower state gets i*conj(Omega)*b_up*exp(-i D t)."""

    lower: str
    upper: str
    dipole_fc: complex
    pulse: str


@dataclass(frozen=True)
class ContinuumEdge:
    """Continuum edge onto one bound state; dipole_fc carries hartree^-1/2."""

    target: str
    dipole_fc: complex
    pulse: str


@dataclass(frozen=True)
class LinkageScheme:
    states: tuple
    couplings: tuple
    continuum_edges: tuple

    def __post_init__(self):
        labels = [s.label for s in self.states]
        if len(set(labels)) != len(labels):
            raise DomainError("duplicate state labels in linkage scheme")
        lset = set(labels)
        for c in self.couplings:
            if c.lower not in lset or c.upper not in lset:
                raise DomainError(f"coupling references unknown state {c.lower}/{c.upper}")
        for e in self.continuum_edges:
            if e.target not in lset:
                raise DomainError(f"continuum edge targets unknown state {e.target}")
        # connectivity, counting the continuum as one extra node
        if len(labels) > 1:
            adj = {l: set() for l in labels + ["__cont__"]}
            for c in self.couplings:
                adj[c.lower].add(c.upper)
                adj[c.upper].add(c.lower)
            for e in self.continuum_edges:
                adj[e.target].add("__cont__")
                adj["__cont__"].add(e.target)
            seen = set()
            stack = [labels[0]]
            while stack:
                node = stack.pop()
                if node in seen:
                    continue
                seen.add(node)
                stack.extend(adj[node] - seen)
            if not set(labels) <= seen:
                raise DomainError("linkage coupling graph is not connected")

    def index(self, label: str) -> int:
        for i, s in enumerate(self.states):
            if s.label == label:
                return i
        raise KeyError(label)


@dataclass(frozen=True)
class ContinuumPacket:
    """Initial continuum superposition.

    The default is the transform-limited Gaussian
    b_E(0) = (delta_e^2 pi)^(-1/4) exp[-(E-e0)^2/(2 delta_e^2) + i(E-e0) t0];
    an explicit (energy, amplitude) profile may be supplied instead and must
    be unit-normalized.  ``source_scale`` multiplies F0 only and exists for
    amplitude-factorization diagnostics; it deliberately bypasses the
    normalization invariant.
    """

    e0: float
    delta_e: float
    t0: float = 0.0
    profile_energies: np.ndarray | None = None
    profile_amplitudes: np.ndarray | None = None
    source_scale: float = 1.0

    def __post_init__(self):
        if self.profile_energies is not None:
            e = np.asarray(self.profile_energies, dtype=float)
            a = np.asarray(self.profile_amplitudes, dtype=complex)
            if e.shape != a.shape or e.ndim != 1 or e.size < 4:
                raise DomainError("explicit packet profile needs matching 1-d arrays")
            norm = float(np.trapezoid(np.abs(a) ** 2, e))
            if abs(norm - 1.0) > 1e-6:
                raise DomainError(
                    f"packet profile norm {norm:.8f} != 1 (unit total population)"
                )
            object.__setattr__(self, "profile_energies", e)
            object.__setattr__(self, "profile_amplitudes", a)
        elif self.delta_e <= 0.0:
            raise DomainError("packet energy width must be positive")

    def amplitude(self, energies):
        """b_E(0) sampled on the given energies."""
        e = np.asarray(energies, dtype=float)
        if self.profile_energies is not None:
            re = np.interp(e, self.profile_energies, self.profile_amplitudes.real,
                           left=0.0, right=0.0)
            im = np.interp(e, self.profile_energies, self.profile_amplitudes.imag,
                           left=0.0, right=0.0)
            return re + 1j * im
        pref = (self.delta_e**2 * math.pi) ** (-0.25)
        x = e - self.e0
        return pref * np.exp(-(x**2) / (2.0 * self.delta_e**2) + 1j * x * self.t0)


def source_function(packet: ContinuumPacket, t, e_ref: float) -> complex:
    """F0(t) = integral dE b_E(0) exp(i (e_ref - E) t).

    e_ref is the continuum energy the pump is resonant with (the zero of its
    detuning).  Gaussian packets use the closed form; explicit profiles are
    integrated by trapezoid with a half-grid refinement check.
    """
    t_arr = np.asarray(t, dtype=float)
    if packet.profile_energies is None:
        d = packet.delta_e
        pref = (d**2 * math.pi) ** (-0.25) * math.sqrt(2.0 * math.pi) * d
        tau = t_arr - packet.t0
        out = (
            pref
            * np.exp(-0.5 * d**2 * tau**2)
            * np.exp(1j * (e_ref - packet.e0) * t_arr)
        ) * packet.source_scale
        return complex(out) if t_arr.ndim == 0 else out
    e = packet.profile_energies
    b = packet.profile_amplitudes

    def quad(es, bs):
        phases = np.exp(1j * np.multiply.outer(t_arr, e_ref - es))
        return np.trapezoid(phases * bs, es, axis=-1)

    full = quad(e, b)
    half = quad(e[::2], b[::2])
    scale = np.max(np.abs(full)) + 1e-300
    if np.max(np.abs(full - half)) > 1e-3 * scale:
        from .errors import ConvergenceError

        raise ConvergenceError("packet profile quadrature unconverged")
    out = full * packet.source_scale
    return complex(out) if t_arr.ndim == 0 else out


def correlation_kernel(band: tuple, fc_profile, tau, e_ref: float | None = None):
    """Spectral autocorrelation integral dE |mu_2E(E)|^2 exp(i (e_ref-E) tau).

    ``fc_profile`` is either a constant or a callable E -> mu*FC_E.  A flat
    profile over a band of width W returns the analytic W*sinc(W tau / 2)
    (times the flat |mu|^2 and a centre phase); the kernel half-width then
    shrinks as 1/W, which is the delta-kernel limit the reduced equations
    assume.
    """
    e_min, e_max = float(band[0]), float(band[1])
    if not (math.isfinite(e_min) and math.isfinite(e_max)) or e_max < e_min:
        raise DomainError("correlation band must be finite with e_max >= e_min")
    # a zero-width band degenerates to a single frequency: the flat formula
    # returns 0 for all tau, trivially constant in modulus
    if e_ref is None:
        e_ref = 0.5 * (e_min + e_max)
    tau_arr = np.asarray(tau, dtype=float)
    if not callable(fc_profile):
        mu2 = abs(complex(fc_profile)) ** 2
        width = e_max - e_min
        center = 0.5 * (e_min + e_max)
        x = 0.5 * width * tau_arr
        out = mu2 * width * np.sinc(x / math.pi) * np.exp(1j * (e_ref - center) * tau_arr)
        return complex(out) if tau_arr.ndim == 0 else out
    es = np.linspace(e_min, e_max, 4001)
    mu2 = np.abs(np.asarray(fc_profile(es), dtype=complex)) ** 2
    phases = np.exp(1j * np.multiply.outer(tau_arr, e_ref - es))
    out = np.trapezoid(phases * mu2, es, axis=-1)
    return complex(out) if tau_arr.ndim == 0 else out


@dataclass
class SimulationResult:
    times: np.ndarray
    labels: list
    amplitudes: np.ndarray  # (n_states, n_times) complex
    final_populations: dict
    source_squared: np.ndarray | None = None
    continuum_population: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def populations(self):
        return np.abs(self.amplitudes) ** 2

    def population(self, label):
        return np.abs(self.amplitudes[self.labels.index(label)]) ** 2

    def final(self, label):
        return self.final_populations[label]

    @property
    def bound_norm(self):
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)


def _pulse_map(pulses):
    out = {}
    for p in pulses:
        if p.name in out:
            raise DomainError(f"duplicate pulse name {p.name!r}")
        out[p.name] = p
    return out


def _time_span(pulses, packet=None):
    t0 = min(p.support[0] for p in pulses)
    t1 = max(p.support[1] for p in pulses)
    if packet is not None and packet.profile_energies is None:
        # cover the packet envelope if it is the narrow coherent kind
        width = 6.0 / packet.delta_e
        if width < 10.0 * (t1 - t0):
            t0 = min(t0, packet.t0 - 0.5 * width)
            t1 = max(t1, packet.t0 + 0.5 * width)
    return min(t0, 0.0), t1


def integrate_svca(
    scheme: LinkageScheme,
    pulses,
    packet: ContinuumPacket,
    *,
    e_ref: float | None = None,
    t_span: tuple | None = None,
    n_store: int = 1200,
    rtol: float = 1e-9,
    atol: float = 1e-12,
) -> SimulationResult:
    """Integrate the continuum-eliminated amplitude equations.

    e_ref defaults to the packet centre energy (pump resonant with it); pulse
    detunings shift their couplings' phase factors.  Raises
    IntegratorToleranceError when the bound norm exceeds the unit packet norm
    beyond tolerance, StiffnessError on step-size collapse.
    """
    pmap = _pulse_map(pulses)
    n = len(scheme.states)
    labels = [s.label for s in scheme.states]
    gamma_f = np.array([s.gamma_f for s in scheme.states])
    e_ref_val = packet.e0 if e_ref is None else float(e_ref)

    bb = []
    for c in scheme.couplings:
        if c.pulse not in pmap:
            raise DomainError(f"coupling references unknown pulse {c.pulse!r}")
        pu = pmap[c.pulse]
        bb.append(
            (
                scheme.index(c.lower),
                scheme.index(c.upper),
                complex(c.dipole_fc) * cmath.exp(1j * pu.phase),
                pu,
            )
        )
    cont = []
    pulses_with_edges = set()
    for e in scheme.continuum_edges:
        if e.pulse not in pmap:
            raise DomainError(f"continuum edge references unknown pulse {e.pulse!r}")
        if e.pulse in pulses_with_edges:
            raise DomainError(
                f"pulse {e.pulse!r} drives more than one continuum edge"
            )
        pulses_with_edges.add(e.pulse)
        pu = pmap[e.pulse]
        cont.append(
            (scheme.index(e.target), complex(e.dipole_fc) * cmath.exp(1j * pu.phase), pu)
        )

    span = _time_span(pulses, packet) if t_span is None else (float(t_span[0]), float(t_span[1]))

    def rhs(t, y):
        dy = np.zeros(n, dtype=complex)
        # bound-bound exchange
        for i_lo, i_up, mu, pu in bb:
            om = mu * pu.envelope(t)
            if om == 0.0:
                continue
            ph = cmath.exp(1j * pu.detuning * t)
            dy[i_lo] += 1j * np.conj(om) * y[i_up] / ph
            dy[i_up] += 1j * om * y[i_lo] * ph
        # free decay
        dy -= gamma_f * y
        # continuum elimination: damping matrix + source
        if cont:
            oms = []
            for i_t, mu_e, pu in cont:
                om_e = mu_e * pu.envelope(t)
                ph = cmath.exp(1j * pu.detuning * t)
                oms.append((i_t, om_e, ph))
                dy[i_t] += 1j * om_e * source_function(packet, t, e_ref_val + pu.detuning)
            for i_j, om_j, ph_j in oms:
                for i_k, om_k, ph_k in oms:
                    dy[i_j] -= (
                        math.pi * om_j * np.conj(om_k) * ph_j / ph_k * y[i_k]
                    )
        return dy

    t_eval = np.linspace(span[0], span[1], n_store)
    sol = solve_ivp(
        rhs,
        span,
        np.zeros(n, dtype=complex),
        method="RK45",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
        max_step=min(p.fwhm for p in pulses) / 20.0,
    )
    if not sol.success:
        raise StiffnessError(f"integrator failed: {sol.message}")
    pops = np.abs(sol.y) ** 2
    norm = pops.sum(axis=0)
    if np.max(norm) > 1.0 + 1e-4:
        raise IntegratorToleranceError(
            f"bound norm reached {np.max(norm):.6f} > 1 + 1e-4"
        )
    f0_sq = np.abs(source_function(packet, t_eval, e_ref_val)) ** 2
    finals = {lab: float(pops[i, -1]) for i, lab in enumerate(labels)}
    return SimulationResult(
        times=t_eval,
        labels=labels,
        amplitudes=sol.y,
        final_populations=finals,
        source_squared=f0_sq,
        diagnostics={
            "max_populations": {lab: float(np.max(pops[i])) for i, lab in enumerate(labels)},
            "max_bound_norm": float(np.max(norm)),
            "n_rhs_evals": int(sol.nfev),
        },
    )


def integrate_multilinkage(
    scheme: LinkageScheme,
    pulses,
    packet: ContinuumPacket,
    **kwargs,
) -> SimulationResult:
    """Multi-pathway variant: validates a double-Lambda or tripod topology,
    then runs the same integrator (a degenerate topology reduces to the
    plain run exactly)."""
    n_cont = len(scheme.continuum_edges)
    n_final = len(
        {c.lower for c in scheme.couplings}
        - {e.target for e in scheme.continuum_edges}
    )
    if n_cont < 1:
        raise DomainError("multi-linkage scheme needs at least one continuum edge")
    if n_cont < 2 and n_final < 2:
        raise DomainError(
            "multi-linkage scheme must be double-Lambda (two intermediates) "
            "or tripod (two finals)"
        )
    return integrate_svca(scheme, pulses, packet, **kwargs)


def integrate_full_rwa(
    scheme: LinkageScheme,
    pulses,
    packet: ContinuumPacket,
    continuum_grid: tuple,
    *,
    e_ref: float | None = None,
    t_span: tuple | None = None,
    n_store: int = 800,
    rtol: float = 1e-9,
    atol: float = 1e-12,
) -> SimulationResult:
    """Bound amplitudes coupled to an explicitly discretized continuum band.

    continuum_grid is (E_min, E_max, n_points) around the packet.  This is
    the oracle for the reduced equations: no flat-continuum assumption, the
    only approximation is the rotating wave.
    """
    e_min, e_max, n_e = float(continuum_grid[0]), float(continuum_grid[1]), int(continuum_grid[2])
    if n_e < 16:
        raise DomainError("continuum grid needs at least 16 points")
    pmap = _pulse_map(pulses)
    n = len(scheme.states)
    labels = [s.label for s in scheme.states]
    gamma_f = np.array([s.gamma_f for s in scheme.states])
    e_ref_val = packet.e0 if e_ref is None else float(e_ref)

    es = np.linspace(e_min, e_max, n_e)
    de = es[1] - es[0]
    w = np.full(n_e, de)
    w[0] = w[-1] = 0.5 * de

    b_e0 = packet.amplitude(es)
    nrm = float(np.sum(w * np.abs(b_e0) ** 2))
    if nrm <= 0.0:
        raise DomainError("packet has no support on the continuum grid")
    b_e0 = b_e0 / math.sqrt(nrm)

    bb = []
    for c in scheme.couplings:
        pu = pmap[c.pulse]
        bb.append(
            (scheme.index(c.lower), scheme.index(c.upper),
             complex(c.dipole_fc) * cmath.exp(1j * pu.phase), pu)
        )
    cont = []
    for e_edge in scheme.continuum_edges:
        pu = pmap[e_edge.pulse]
        cont.append(
            (scheme.index(e_edge.target),
             complex(e_edge.dipole_fc) * cmath.exp(1j * pu.phase), pu)
        )

    span = _time_span(pulses, packet) if t_span is None else (float(t_span[0]), float(t_span[1]))
    delta2 = e_ref_val - es  # detuning of each continuum level from resonance

    y0 = np.concatenate([np.zeros(n, dtype=complex), b_e0])

    def rhs(t, y):
        b = y[:n]
        be = y[n:]
        db = np.zeros(n, dtype=complex)
        dbe = np.zeros(n_e, dtype=complex)
        for i_lo, i_up, mu, pu in bb:
            om = mu * pu.envelope(t)
            if om == 0.0:
                continue
            ph = cmath.exp(1j * pu.detuning * t)
            db[i_lo] += 1j * np.conj(om) * b[i_up] / ph
            db[i_up] += 1j * om * b[i_lo] * ph
        db -= gamma_f * b
        for i_t, mu_e, pu in cont:
            env = pu.envelope(t)
            if env == 0.0:
                continue
            om_e = mu_e * env
            ph = np.exp(1j * (delta2 + pu.detuning) * t)
            db[i_t] += 1j * om_e * np.sum(w * be * ph)
            dbe += 1j * np.conj(om_e) * b[i_t] / ph
        dbe_full = dbe
        return np.concatenate([db, dbe_full])

    t_eval = np.linspace(span[0], span[1], n_store)
    sol = solve_ivp(
        rhs,
        span,
        y0,
        method="RK45",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
        max_step=min(p.fwhm for p in pulses) / 20.0,
    )
    if not sol.success:
        raise StiffnessError(f"integrator failed: {sol.message}")
    bound = sol.y[:n]
    be_t = sol.y[n:]
    pops = np.abs(bound) ** 2
    cont_pop = np.sum(w[:, None] * np.abs(be_t) ** 2, axis=0)
    finals = {lab: float(pops[i, -1]) for i, lab in enumerate(labels)}
    f0_sq = np.abs(source_function(packet, t_eval, e_ref_val)) ** 2
    return SimulationResult(
        times=t_eval,
        labels=labels,
        amplitudes=bound,
        final_populations=finals,
        source_squared=f0_sq,
        continuum_population=cont_pop,
        diagnostics={
            "max_populations": {lab: float(np.max(pops[i])) for i, lab in enumerate(labels)},
            "norm_drift": float(
                np.max(np.abs(pops.sum(axis=0) + cont_pop - (pops[:, 0].sum() + cont_pop[0])))
            ),
            "n_rhs_evals": int(sol.nfev),
        },
    )


def branching_fractions(fc_values, labels=None):
    """Spontaneous-decay branching weights |FC|^2 / sum |FC|^2.

    Returns (fractions, raw_sum, incomplete): fractions renormalize over the
    supplied manifold; raw_sum below 0.9 flags an incomplete manifold.
    """
    fcs = [f.value if isinstance(f, FcValue) else float(f) for f in fc_values]
    weights = np.array([f * f for f in fcs], dtype=float)
    total = float(weights.sum())
    if total <= 0.0:
        raise DomainError("all branching weights vanish")
    fractions = weights / total
    incomplete = total < 0.9
    if labels is not None:
        fractions = dict(zip(labels, fractions))
    return fractions, total, incomplete


@dataclass
class DecayTable:
    via_label: str
    fractions: dict
    raw_fc_squared_sum: float
    incomplete_manifold: bool


def decay_accumulation(via: "BoundState", lower_manifold) -> DecayTable:
    """Population landing map after a pi-pulse into ``via`` and free decay.

    The pi-pulse stage is unit-probability bookkeeping (only its intensity is
    ever computed, separately); decay then distributes population over the
    lower manifold with renormalized |FC|^2 weights.
    """
    from .franckcondon import bound_bound_fc

    fcs = [bound_bound_fc(via, low) for low in lower_manifold]
    labels = [f"v{low.v}" for low in lower_manifold]
    fractions, total, incomplete = branching_fractions(fcs, labels)
    return DecayTable(
        via_label=f"v{via.v}",
        fractions=fractions,
        raw_fc_squared_sum=total,
        incomplete_manifold=incomplete,
    )


def pi_pulse_intensity(fc, duration: float, dipole: float = 3.0) -> float:
    """Average intensity (W/cm^2) of a rectangular pi pulse on a bound-bound
    line: mu * FC * eps * duration = pi."""
    val = fc.value if isinstance(fc, FcValue) else float(fc)
    if isinstance(fc, FcValue) and fc.kind is not FcKind.BOUND_BOUND:
        raise DomainError("pi pulses are defined for bound-bound transitions")
    if val == 0.0:
        raise DomainError("no pi pulse exists for a vanishing overlap")
    if duration <= 0.0:
        raise DomainError("pulse duration must be positive")
    eps = math.pi / (abs(val) * dipole * duration)
    return eps**2 * INTENSITY_AU_WCM2
