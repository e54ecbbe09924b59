"""Eigensolver oracles: analytic harmonic and Morse spectra, node theorem,
orthonormality, step-size order, and the two-channel degenerate-splitting
check."""

import math

import numpy as np
import pytest

from papsim import potentials, spectrum
from papsim.errors import DomainError
from papsim.units import KB_AU_PER_K


def harmonic(make_analytic, m=1.0, w=1.0, r0=8.0):
    return make_analytic(lambda r: 0.5 * m * w**2 * (r - r0) ** 2, label="harmonic")


def morse(make_analytic, D=10.0, a=0.7, r0=6.0):
    return make_analytic(
        lambda r: D * (1.0 - np.exp(-a * (r - r0))) ** 2,
        asymptote=D,
        label="morse",
    )


def test_harmonic_levels(make_analytic):
    m, w = 1.0, 1.0
    levels = spectrum.bound_levels(harmonic(make_analytic), 0, (0.1, 5.2), m)
    assert [s.v for s in levels] == [0, 1, 2, 3, 4]
    for s in levels:
        assert s.energy == pytest.approx((s.v + 0.5) * w, rel=1e-8)


def test_morse_levels(make_analytic):
    m, D, a, r0 = 1.0, 10.0, 0.7, 6.0
    w0 = a * math.sqrt(2.0 * D / m)
    levels = spectrum.bound_levels(morse(make_analytic), 0, (0.2, D - 1e-6), m)
    assert len(levels) == 6
    for s in levels:
        exact = w0 * (s.v + 0.5) - w0**2 * (s.v + 0.5) ** 2 / (4.0 * D) - D
        assert s.energy == pytest.approx(exact, rel=1e-7)


def test_orthonormality(make_analytic):
    from papsim.franckcondon import bound_bound_fc

    levels = spectrum.bound_levels(morse(make_analytic), 0, (0.2, 9.999999), 1.0)
    for a in levels:
        for b in levels:
            ov = bound_bound_fc(a, b).value
            assert abs(ov - (1.0 if a.v == b.v else 0.0)) < 1e-6


def test_node_theorem(make_analytic):
    for s in spectrum.bound_levels(harmonic(make_analytic), 0, (0.1, 6.9), 1.0):
        interior = s.amplitude[1:-1]
        nodes = int(np.count_nonzero(interior[:-1] * interior[1:] < 0.0))
        assert nodes == s.v


def test_variational_constant_shift(make_analytic):
    m, shift = 1.0, 0.7
    base = spectrum.bound_levels(harmonic(make_analytic), 0, (0.1, 4.2), m)
    shifted_pot = make_analytic(lambda r: 0.5 * (r - 8.0) ** 2 - shift)
    shifted = spectrum.bound_levels(shifted_pot, 0, (0.1 - shift, 4.2 - shift), m)
    assert len(base) == len(shifted)
    for a, b in zip(base, shifted):
        assert b.energy == pytest.approx(a.energy - shift, abs=1e-9)


def test_numerov_order_scan(make_analytic):
    """Raw (un-extrapolated) energies converge as O(h^4)."""
    m, w = 1.0, 1.0
    pot = harmonic(make_analytic)
    exact = 2.5  # v = 2
    hs, errs = [], []
    for ppw in (16.0, 32.0, 64.0, 128.0):
        levels = spectrum.bound_levels(
            pot, 0, (2.2, 2.8), m, ppw=ppw, max_refinements=0
        )
        s = levels[0]
        hs.append(s.grid[1] - s.grid[0])
        errs.append(abs(s.energy - exact))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 3.7 <= slope <= 4.3


def test_centrifugal_term_raises_levels(make_analytic):
    m = 1.0
    pot = harmonic(make_analytic)
    e0 = spectrum.bound_levels(pot, 0, (0.1, 1.2), m)[0].energy
    e1 = spectrum.bound_levels(pot, 1, (0.1, 1.2), m)[0].energy
    # J(J+1)/(2 m r0^2) to first order at r0 = 8
    assert e1 - e0 == pytest.approx(2.0 / (2.0 * 64.0), rel=0.05)


def test_window_above_asymptote_rejected(make_analytic):
    with pytest.raises(DomainError):
        spectrum.bound_levels(morse(make_analytic), 0, (0.2, 10.5), 1.0)


def test_wavefunction_at_grid_nodes_and_normalization(make_analytic):
    s = spectrum.bound_levels(harmonic(make_analytic), 0, (0.1, 1.2), 1.0)[0]
    idx = s.grid.size // 3
    assert spectrum.wavefunction_at(s, float(s.grid[idx])) == pytest.approx(
        s.amplitude[idx], abs=1e-15
    )
    fine = np.linspace(s.grid[0], s.grid[-1], 4 * s.grid.size)
    norm = np.trapezoid(spectrum.wavefunction_at(s, fine) ** 2, fine)
    assert norm == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DomainError):
        spectrum.wavefunction_at(s, s.grid[-1] + 1.0)


def test_ground_state_matches_gaussian(make_analytic):
    m, w, r0 = 1.0, 1.0, 8.0
    s = spectrum.bound_levels(harmonic(make_analytic), 0, (0.1, 1.2), m)[0]
    r = np.linspace(r0 - 4.0, r0 + 4.0, 400)
    exact = (m * w / math.pi) ** 0.25 * np.exp(-0.5 * m * w * (r - r0) ** 2)
    got = spectrum.wavefunction_at(s, r)
    assert np.max(np.abs(np.abs(got) - exact)) < 1e-6


# ---------------------------------------------------------------------------
# two-channel
# ---------------------------------------------------------------------------


def _table_channel(asym=0.0):
    r = np.linspace(2.0, 24.0, 600)
    v = 8.0 * ((1.0 - np.exp(-0.6 * (r - 7.0))) ** 2 - 1.0) + asym
    return potentials.RadialPotential(
        r_table=r, v_table=v, c6=0.0, r_interp=22.0, asymptote=asym
    )


def test_coupled_degenerate_channels_split_by_constant_coupling():
    """Identical channels + constant W: exact eigenvalues E_v +- W."""
    w_const = 0.05
    chan = _table_channel()
    cp = potentials.CoupledPotential(
        channel_a=chan,
        channel_b=chan,
        coupling_r=chan.r_table,
        coupling_w=np.full(chan.r_table.size, w_const),
    )
    m = 1.0
    singles = spectrum.bound_levels(chan, 0, (-7.9, -3.0), m, max_refinements=1)
    window = (-7.9 - w_const, -3.0 + w_const)
    doubles = spectrum.bound_levels(cp, 0, window, m, max_refinements=1)
    # compare absolute energies: the coupled solver reports relative to the
    # lower adiabatic limit, which sits at -W for identical channels
    expected = sorted(
        [s.energy - w_const for s in singles] + [s.energy + w_const for s in singles]
    )
    got = sorted(s.energy + s.asymptote for s in doubles)
    matched = [min(abs(g - e) for g in got) for e in expected]
    assert max(matched) < 1e-6
    # equal channel mixing
    for s in doubles:
        assert s.channel_weights[0] == pytest.approx(0.5, abs=1e-3)
        assert s.channel_weights[1] == pytest.approx(0.5, abs=1e-3)


def test_coupled_zero_coupling_matches_single_channel():
    chan_a = _table_channel()
    chan_b = _table_channel(asym=0.4)
    cp = potentials.CoupledPotential(
        channel_a=chan_a,
        channel_b=chan_b,
        coupling_r=chan_a.r_table,
        coupling_w=np.zeros(chan_a.r_table.size),
    )
    m = 1.0
    singles = spectrum.bound_levels(chan_a, 0, (-7.9, -5.0), m, max_refinements=1)
    # relative to the lower (channel-a) asymptote = cp.asymptote here
    doubles = spectrum.bound_levels(cp, 0, (-7.9, -5.0), m, max_refinements=1)
    got = sorted(s.energy for s in doubles)
    for s in singles:
        assert min(abs(g - s.energy) for g in got) < 1e-6


@pytest.mark.slow
def test_x_model_near_threshold_level(x_resonant, mass_rb):
    """A large positive scattering length forces a level just below threshold."""
    levels = spectrum.bound_levels(
        x_resonant, 0, (-1e-10, -1e-14), mass_rb, max_refinements=1
    )
    assert len(levels) >= 1
    binding = -levels[-1].energy
    assert binding < KB_AU_PER_K * 5e-3  # within a few mK of threshold
    # universal halo estimate 1/(2 m a^2) within a factor of a few
    est = 1.0 / (2.0 * mass_rb * 2500.0**2)
    assert 0.2 * est < binding < 5.0 * est
