"""Pulse-pair dynamics: source and correlation kernels, the reduced
(continuum-eliminated) integrator against the explicit-continuum oracle,
multi-pathway interference, and the decay/pi-pulse arithmetic."""

import math

import numpy as np
import pytest

from papsim import dynamics as dy
from papsim.errors import DomainError
from papsim.units import KB_AU_PER_K, TIME_AU_S, intensity_to_field

ns = 1e-9 / TIME_AU_S
uK = KB_AU_PER_K * 1e-6


# ---------------------------------------------------------------------------
# envelopes, packets, kernels
# ---------------------------------------------------------------------------


def test_sin_squared_envelope_support_and_fwhm():
    p = dy.PulseEnvelope(name="p", fwhm=10.0, center=50.0, peak_field=2.0)
    assert p.envelope(50.0) == pytest.approx(2.0)
    assert p.envelope(45.0) == pytest.approx(1.0)  # half maximum at +-fwhm/2
    assert p.envelope(55.0) == pytest.approx(1.0)
    assert p.envelope(39.999) == 0.0
    assert p.envelope(60.001) == 0.0
    t = np.linspace(30.0, 70.0, 2000)
    assert np.all(p.envelope(t) >= 0.0)
    assert np.isfinite(np.trapezoid(p.envelope(t), t))


def test_packet_profile_normalization_enforced():
    es = np.linspace(0.0, 1.0, 64)
    amps = 2.0 * np.ones(64, dtype=complex)
    with pytest.raises(DomainError):
        dy.ContinuumPacket(e0=0.5, delta_e=0.0, profile_energies=es,
                           profile_amplitudes=amps)


def test_source_function_gaussian_peak():
    d = 0.2
    packet = dy.ContinuumPacket(e0=1.0, delta_e=d, t0=30.0)
    f0 = dy.source_function(packet, 30.0, 1.0)
    assert abs(f0) ** 2 == pytest.approx(2.0 * math.sqrt(math.pi) * d, rel=1e-12)
    # reference width 1.07e-17 a.u. -> peak density 3.8e-17 a.u.
    packet2 = dy.ContinuumPacket(e0=100 * uK, delta_e=1.07e-17, t0=0.0)
    assert abs(dy.source_function(packet2, 0.0, 100 * uK)) ** 2 == pytest.approx(
        3.8e-17, rel=0.01
    )


def test_source_function_decays_far_from_t0():
    d = 0.2
    packet = dy.ContinuumPacket(e0=1.0, delta_e=d, t0=0.0)
    peak = abs(dy.source_function(packet, 0.0, 1.0))
    far = abs(dy.source_function(packet, 40.0 / d, 1.0))
    assert far < 1e-6 * peak


def test_source_function_explicit_profile_matches_closed_form():
    d, e0, t0 = 0.15, 2.0, 5.0
    es = np.linspace(e0 - 8 * d, e0 + 8 * d, 1500)
    pref = (d**2 * math.pi) ** (-0.25)
    amps = pref * np.exp(-((es - e0) ** 2) / (2 * d**2) + 1j * (es - e0) * t0)
    norm = math.sqrt(np.trapezoid(np.abs(amps) ** 2, es))
    packet_tab = dy.ContinuumPacket(e0=e0, delta_e=d, profile_energies=es,
                                    profile_amplitudes=amps / norm)
    packet_cf = dy.ContinuumPacket(e0=e0, delta_e=d, t0=t0)
    for t in (4.0, 5.0, 7.5):
        a = dy.source_function(packet_tab, t, e0)
        b = dy.source_function(packet_cf, t, e0)
        assert a == pytest.approx(b, rel=1e-3)


def test_correlation_kernel_flat_at_zero_lag():
    mu = 1.7
    out = dy.correlation_kernel((0.0, 0.5), mu, 0.0)
    assert out == pytest.approx(mu**2 * 0.5, rel=1e-12)


def test_correlation_kernel_zero_width_band_constant():
    vals = [abs(dy.correlation_kernel((0.3, 0.3), 2.0, tau)) for tau in (0.0, 5.0, 50.0)]
    assert vals[0] == vals[1] == vals[2]


def test_correlation_kernel_width_scales_inversely():
    """Half-width of |F_corr| versus bandwidth: log-log slope -1 +- 0.1."""
    widths, half = [], []
    taus = np.linspace(0.0, 200.0, 20000)
    for w in (0.5, 1.0, 2.0, 4.0, 8.0):
        mod = np.abs(dy.correlation_kernel((0.0, w), 1.0, taus))
        below = np.nonzero(mod < 0.5 * mod[0])[0]
        half.append(taus[below[0]])
        widths.append(w)
    slope = np.polyfit(np.log(widths), np.log(half), 1)[0]
    assert -1.1 <= slope <= -0.9


# ---------------------------------------------------------------------------
# reduced integrator
# ---------------------------------------------------------------------------


def toy_pulses(fwhm=15.0, delay=12.0):
    stokes = dy.PulseEnvelope(name="stokes", fwhm=fwhm, center=fwhm, peak_field=1.0)
    pump = dy.PulseEnvelope(name="pump", fwhm=fwhm, center=fwhm + delay, peak_field=1.0)
    return stokes, pump


def toy_scheme(mu1=0.662, om_e=0.564, gamma_f=0.0):
    return dy.LinkageScheme(
        states=(dy.BoundLevel("b1", -1.0, 0.0), dy.BoundLevel("b2", 0.5, gamma_f)),
        couplings=(dy.Coupling("b1", "b2", mu1, "stokes"),),
        continuum_edges=(dy.ContinuumEdge("b2", om_e, "pump"),),
    )


def toy_packet(delta_e=0.25, t0=21.0):
    return dy.ContinuumPacket(e0=0.0, delta_e=delta_e, t0=t0)


def test_no_source_stays_empty():
    scheme = toy_scheme(om_e=0.0)
    res = dy.integrate_svca(scheme, toy_pulses(), toy_packet())
    assert res.final("b1") == 0.0
    assert res.final("b2") == 0.0


def test_unknown_pulse_rejected():
    scheme = dy.LinkageScheme(
        states=(dy.BoundLevel("b1", 0.0, 0.0), dy.BoundLevel("b2", 1.0, 0.0)),
        couplings=(dy.Coupling("b1", "b2", 0.1, "nope"),),
        continuum_edges=(dy.ContinuumEdge("b2", 0.1, "pump"),),
    )
    with pytest.raises(DomainError):
        dy.integrate_svca(scheme, list(toy_pulses()), toy_packet())


def test_disconnected_scheme_rejected():
    with pytest.raises(DomainError):
        dy.LinkageScheme(
            states=(dy.BoundLevel("b1", 0.0, 0.0), dy.BoundLevel("b2", 1.0, 0.0)),
            couplings=(),
            continuum_edges=(dy.ContinuumEdge("b2", 0.1, "pump"),),
        )


def test_detuning_symmetry():
    """Delta -> -Delta with conjugated couplings mirrors the trajectories."""
    stokes, pump = toy_pulses()
    pk = toy_packet()

    def run(sign):
        st = dy.PulseEnvelope(name="stokes", fwhm=stokes.fwhm, center=stokes.center,
                              peak_field=1.0, detuning=sign * 0.08)
        scheme = toy_scheme(mu1=0.45)
        return dy.integrate_svca(scheme, [st, pump], pk)

    plus, minus = run(+1.0), run(-1.0)
    assert np.max(np.abs(plus.populations - minus.populations)) < 1e-8


def test_svca_pump_amplitude_factorization():
    """With pi|Omega_E|^2 << Gamma_f, scaling Omega_E by s and the source by
    1/s leaves the target amplitude unchanged."""
    gamma_f = 0.5
    om_e0 = 0.02  # pi om_e^2 stays << gamma_f even after scaling
    s = 2.0
    base = dy.integrate_svca(
        toy_scheme(mu1=0.8, om_e=om_e0, gamma_f=gamma_f), toy_pulses(),
        toy_packet(),
    )
    scaled_packet = dy.ContinuumPacket(e0=0.0, delta_e=0.25, t0=21.0,
                                       source_scale=1.0 / s)
    scaled = dy.integrate_svca(
        toy_scheme(mu1=0.8, om_e=om_e0 * s, gamma_f=gamma_f), toy_pulses(),
        scaled_packet,
    )
    b1 = base.labels.index("b1")
    assert np.max(
        np.abs(np.abs(base.amplitudes[b1]) - np.abs(scaled.amplitudes[b1]))
    ) < 2e-2 * np.max(np.abs(base.amplitudes[b1]))


def test_svca_matches_full_rwa_on_reduced_instance():
    scheme = toy_scheme(gamma_f=0.05)
    pulses = toy_pulses()
    packet = toy_packet()
    red = dy.integrate_svca(scheme, pulses, packet)
    full = dy.integrate_full_rwa(scheme, pulses, packet, (-8.0, 8.0, 400))
    for lab in ("b1",):
        assert full.final(lab) == pytest.approx(red.final(lab), rel=0.05)
    # doubling the continuum grid moves the oracle by < 1%
    full2 = dy.integrate_full_rwa(scheme, pulses, packet, (-8.0, 8.0, 800))
    assert full2.final("b1") == pytest.approx(full.final("b1"), rel=0.01)


def test_full_rwa_norm_conserved_without_decay():
    scheme = toy_scheme(gamma_f=0.0)
    res = dy.integrate_full_rwa(scheme, toy_pulses(), toy_packet(), (-8.0, 8.0, 400))
    assert res.diagnostics["norm_drift"] < 1e-5


def test_full_rwa_stationary_without_pulses():
    scheme = dy.LinkageScheme(
        states=(dy.BoundLevel("b1", 0.0, 0.0), dy.BoundLevel("b2", 1.0, 0.0)),
        couplings=(dy.Coupling("b1", "b2", 0.0, "stokes"),),
        continuum_edges=(dy.ContinuumEdge("b2", 0.0, "pump"),),
    )
    stokes, pump = toy_pulses()
    res = dy.integrate_full_rwa(scheme, [stokes, pump], toy_packet(), (-4.0, 4.0, 64))
    assert res.final("b1") == 0.0 and res.final("b2") == 0.0
    assert res.continuum_population[-1] == pytest.approx(1.0, abs=1e-6)


# ---------------------------------------------------------------------------
# multi-pathway schemes
# ---------------------------------------------------------------------------


def tripod_scheme(ratio, gamma_f=0.05):
    return dy.LinkageScheme(
        states=(
            dy.BoundLevel("f1", -1.0, 0.0),
            dy.BoundLevel("f2", -1.1, 0.0),
            dy.BoundLevel("b2", 0.5, gamma_f),
        ),
        couplings=(
            dy.Coupling("f1", "b2", 0.45, "stokes"),
            dy.Coupling("f2", "b2", 0.45 * ratio, "stokes"),
        ),
        continuum_edges=(dy.ContinuumEdge("b2", 0.564, "pump"),),
    )


@pytest.mark.parametrize("ratio", [0.5, 2.0])
def test_tripod_branch_ratio(ratio):
    res = dy.integrate_multilinkage(tripod_scheme(ratio), toy_pulses(), toy_packet())
    assert res.final("f2") / res.final("f1") == pytest.approx(ratio**2, rel=0.02)


def test_double_lambda_phase_sweep():
    stokes, pump = toy_pulses()

    def run(phase):
        pump_b = dy.PulseEnvelope(name="pump_b", fwhm=pump.fwhm, center=pump.center,
                                  peak_field=1.0, phase=phase)
        stokes_b = dy.PulseEnvelope(name="stokes_b", fwhm=stokes.fwhm,
                                    center=stokes.center, peak_field=1.0)
        scheme = dy.LinkageScheme(
            states=(
                dy.BoundLevel("b1", -1.0, 0.0),
                dy.BoundLevel("i1", 0.5, 0.05),
                dy.BoundLevel("i2", 0.52, 0.05),
            ),
            couplings=(
                dy.Coupling("b1", "i1", 0.4, "stokes"),
                dy.Coupling("b1", "i2", 0.4, "stokes_b"),
            ),
            continuum_edges=(
                dy.ContinuumEdge("i1", 0.282, "pump"),
                dy.ContinuumEdge("i2", 0.282, "pump_b"),
            ),
        )
        return dy.integrate_multilinkage(
            scheme, [stokes, pump, pump_b, stokes_b], toy_packet()
        ).final("b1")

    phases = np.linspace(0.0, 2.0 * math.pi, 9)
    vals = [run(p) for p in phases]
    assert vals[0] == pytest.approx(vals[-1], rel=1e-6)  # 2pi periodic
    assert max(vals) / max(min(vals), 1e-300) > 10.0


def test_zeroed_branch_reduces_to_plain_run():
    plain = dy.integrate_svca(
        dy.LinkageScheme(
            states=(dy.BoundLevel("f1", -1.0, 0.0), dy.BoundLevel("b2", 0.5, 0.05)),
            couplings=(dy.Coupling("f1", "b2", 0.45, "stokes"),),
            continuum_edges=(dy.ContinuumEdge("b2", 0.564, "pump"),),
        ),
        toy_pulses(), toy_packet(),
    )
    zeroed = dy.integrate_multilinkage(tripod_scheme(0.0), toy_pulses(), toy_packet())
    assert zeroed.final("f1") == pytest.approx(plain.final("f1"), rel=1e-6)
    assert zeroed.final("f2") == 0.0


def test_multilinkage_rejects_plain_topology():
    with pytest.raises(DomainError):
        dy.integrate_multilinkage(toy_scheme(), toy_pulses(), toy_packet())


# ---------------------------------------------------------------------------
# branching and pi-pulse arithmetic
# ---------------------------------------------------------------------------


def test_branching_fraction_reference_case():
    """FC 0.27 into a near-complete manifold -> 7.3-7.5% ground-state share."""
    rest = [0.32, 0.45, 0.52, 0.41, 0.28, 0.2, 0.15, 0.1, 0.06]
    rest_sq = sum(f * f for f in rest)
    scale = math.sqrt((0.98 - 0.27**2) / rest_sq)
    fcs = [0.27] + [f * scale for f in rest]
    fractions, total, incomplete = dy.branching_fractions(fcs)
    assert total == pytest.approx(0.98, abs=1e-12)
    assert not incomplete
    assert 0.073 <= fractions[0] <= 0.075


def test_branching_dominant_quarter_scenario():
    """One level takes ~25% while every neighbour stays below 20% of it."""
    n_side = 19
    side = math.sqrt(0.75 / n_side)
    fcs = [math.sqrt(0.25)] + [side] * n_side
    fractions, total, incomplete = dy.branching_fractions(fcs)
    assert fractions[0] == pytest.approx(0.25, abs=1e-12)
    assert all(f < 0.2 * fractions[0] for f in fractions[1:])
    assert not incomplete


def test_branching_single_state():
    fractions, total, incomplete = dy.branching_fractions([1.0])
    assert fractions[0] == 1.0 and not incomplete


def test_branching_incomplete_flag():
    _, total, incomplete = dy.branching_fractions([0.3, 0.2])
    assert incomplete and total < 0.9


def test_pi_pulse_intensity_reference():
    ps = 1e-12 / TIME_AU_S
    i_175 = dy.pi_pulse_intensity(0.175, ps)
    assert 7.4e8 / 2.0 <= i_175 <= 7.4e8 * 2.0
    i_174 = dy.pi_pulse_intensity(0.174, ps)
    assert i_174 == pytest.approx(i_175 * (0.175 / 0.174) ** 2, rel=1e-12)
    # doubling duration quarters the intensity exactly
    assert dy.pi_pulse_intensity(0.175, 2 * ps) == pytest.approx(i_175 / 4.0, rel=1e-12)
    with pytest.raises(DomainError):
        dy.pi_pulse_intensity(0.0, ps)


# ---------------------------------------------------------------------------
# reference-configuration runs (slow)
# ---------------------------------------------------------------------------


def reference_pair(t0_ns=1080.0, fc21=6.0e-4, gamma_inv_ns=30.0):
    stokes = dy.PulseEnvelope(name="stokes", fwhm=750 * ns, center=750 * ns,
                              peak_field=intensity_to_field(7e3))
    pump = dy.PulseEnvelope(name="pump", fwhm=750 * ns, center=1350 * ns,
                            peak_field=intensity_to_field(1e4))
    gamma = 0.0 if gamma_inv_ns == 0 else 1.0 / (gamma_inv_ns * ns)
    scheme = dy.LinkageScheme(
        states=(dy.BoundLevel("b1", -0.01823, 0.0), dy.BoundLevel("b2", 0.042848, gamma)),
        couplings=(dy.Coupling("b1", "b2", 3.0 * fc21, "stokes"),),
        continuum_edges=(dy.ContinuumEdge("b2", 3.0 * 31.5, "pump"),),
    )
    packet = dy.ContinuumPacket(e0=100 * uK, delta_e=70 * uK, t0=t0_ns * ns)
    return scheme, [stokes, pump], packet


@pytest.mark.slow
def test_coherent_run_population_pair():
    scheme, pulses, packet = reference_pair()
    res = dy.integrate_svca(scheme, pulses, packet)
    assert res.final("b1") == pytest.approx(0.60, abs=0.08)
    scheme0, pulses0, packet0 = reference_pair(gamma_inv_ns=0.0)
    res0 = dy.integrate_svca(scheme0, pulses0, packet0)
    assert 0.85 <= res0.final("b1") <= 0.95


@pytest.mark.slow
def test_intermediate_population_suppressed():
    scheme, pulses, packet = reference_pair()
    res = dy.integrate_svca(scheme, pulses, packet)
    assert res.diagnostics["max_populations"]["b2"] < 0.1 * res.final("b1")


@pytest.mark.slow
def test_counterintuitive_ordering_beats_intuitive():
    scheme, pulses, packet = reference_pair()
    ci = dy.integrate_svca(scheme, pulses, packet).final("b1")
    swapped = [
        dy.PulseEnvelope(name=p.name, fwhm=p.fwhm,
                         center=(1350 * ns if p.name == "stokes" else 750 * ns),
                         peak_field=p.peak_field)
        for p in pulses
    ]
    intuitive = dy.integrate_svca(scheme, swapped, packet).final("b1")
    assert ci >= 2.0 * intuitive
