"""Energy-normalized s-wave continuum states, phase shifts, scattering length.

Continuum waves are integrated outward with the same Numerov kernel as the
bound solver and matched to free solutions A sin(kr) + B cos(kr) at two radii
a quarter wavelength apart, which fixes (amplitude, phase) linearly without
any derivative estimation.  The normalization convention is the asymptotic
amplitude sqrt(2m/(pi k)), i.e. <E|E'> = delta(E - E'); with it the
field-induced width pi*|Omega_E|^2 in the reduced two-level equations is an
energy with no stray factors.

The scattering length is the k->0 limit of -tan(delta)/k, taken by Richardson
extrapolation over an energy ladder E, E/2, E/4: the running value is linear
in E through the effective-range term, so two extrapolation stages leave
O(E^3) residuals even within a few percent of a pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from ._numerov import sweep_outward
from .errors import ConvergenceError, DomainError, GridError
from .units import KB_AU_PER_K, RB85_PAIR_REDUCED_MASS

__all__ = [
    "ContinuumState",
    "ScatteringLength",
    "continuum_wave",
    "scattering_length",
    "threshold_scan",
]


@dataclass(frozen=True)
class ContinuumState:
    """Energy-normalized s-wave state at energy E above threshold.

    amplitude carries a.u.^(-1/2) * hartree^(-1/2); phase_shift is the
    principal value from the asymptotic match.
    """

    energy: float
    J: int
    grid: np.ndarray
    amplitude: np.ndarray
    phase_shift: float
    mass: float
    interaction_nodes: int = 0
    label: str = ""

    @property
    def k(self) -> float:
        return math.sqrt(2.0 * self.mass * self.energy)

    @cached_property
    def _spline(self):
        return CubicSpline(self.grid, self.amplitude)

    def at(self, r):
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < self.grid[0] - 1e-12) or np.any(r_arr > self.grid[-1] + 1e-12):
            raise DomainError("r outside the stored continuum grid")
        out = self._spline(r_arr)
        return float(out) if r_arr.ndim == 0 else out

    def __repr__(self):
        return (
            f"ContinuumState(E={self.energy:.6e}, J={self.J}, "
            f"delta={self.phase_shift:.6f}, npts={self.grid.size})"
        )


@dataclass(frozen=True)
class ScatteringLength:
    value: float
    residual: float
    ladder_energies: tuple
    ladder_values: tuple


def _is_free(p) -> bool:
    return (
        getattr(p, "c6", None) == 0.0
        and np.all(np.asarray(p.v_table) == p.asymptote)
    )


def _potential_range(p, energy: float) -> float:
    """Radius beyond which |V - asymptote| < energy/100."""
    r_hi = getattr(p, "r_interp", p.r_min) + getattr(p, "blend_halfwidth", 0.0)
    if p.c6 == 0.0:
        return r_hi
    return max(r_hi, (100.0 * abs(p.c6) / energy) ** (1.0 / 6.0))


def _norm_amp(m, k):
    return math.sqrt(2.0 * m / (math.pi * k))


def continuum_wave(
    p,
    energy: float,
    J: int = 0,
    mass: float | None = None,
    *,
    r_max: float | None = None,
    ppw: float = 24.0,
):
    """Outward-propagated, energy-normalized s-wave at ``energy`` (> 0).

    The grid must extend at least three asymptotic wavelengths beyond the
    potential range; passing a smaller r_max raises GridError.
    """
    m = RB85_PAIR_REDUCED_MASS if mass is None else float(mass)
    e = float(energy) - p.asymptote
    if e <= 0.0:
        raise DomainError("continuum energy must exceed the threshold")
    if J != 0:
        raise DomainError("only s-wave continuum states are supported")
    k = math.sqrt(2.0 * m * e)
    lam = 2.0 * math.pi / k
    r_v = _potential_range(p, e)

    if _is_free(p):
        # analytic free/hard-core solution: delta = -k * r_core exactly; a
        # sub-1e-6 table origin is the free particle, not a core
        r_core = 0.0 if p.r_min < 1e-6 else p.r_min
        r_end = r_max if r_max is not None else max(r_core, 1e-9) + 4.0 * lam
        n = max(int(math.ceil((r_end - r_core) / (lam / max(ppw, 16.0)))), 64)
        r = np.linspace(r_core, r_end, n)
        delta = -k * r_core
        amp = _norm_amp(m, k) * np.sin(k * r + delta)
        return ContinuumState(
            energy=e, J=J, grid=r, amplitude=amp, phase_shift=delta,
            mass=m, interaction_nodes=0, label=getattr(p, "label", ""),
        )

    required = r_v + 3.0 * lam
    if r_max is None:
        r_end = required + 0.5 * lam
    else:
        if r_max < required:
            raise GridError(
                f"grid extent {r_max:g} < potential range + 3 wavelengths ({required:g})"
            )
        r_end = float(r_max)

    psi, r, h = _raw_wave(p, m, e, J, r_end, ppw)
    delta, c_amp, i1, i2 = _match_free(psi, r, k, r_v)
    amp = psi * (_norm_amp(m, k) / c_amp)
    # nodes inside the interaction region track the absolute phase (Levinson)
    inner = psi[r <= r_v]
    nodes = int(np.count_nonzero(inner[1:-1] * inner[2:] < 0.0))
    return ContinuumState(
        energy=e, J=J, grid=r, amplitude=amp, phase_shift=delta,
        mass=m, interaction_nodes=nodes, label=getattr(p, "label", ""),
    )


def _raw_wave(p, m, e, J, r_end, ppw):
    from .spectrum import _build_grid, _veff_factory

    veff = _veff_factory(p, m, J)
    # reuse the wall logic from the bound solver, then extend to r_end
    from .spectrum import _inner_start

    r_start = _inner_start(veff, p.r_min, e, m)
    probe = np.linspace(r_start, min(r_end, r_start + 200.0), 1024)
    v_probe = veff(probe)
    f_wall = 2.0 * m * (float(np.max(v_probe)) - e)
    k_inner = math.sqrt(2.0 * m * max(e - float(np.min(v_probe)), 1e-300))
    h = min(1.0 / math.sqrt(max(f_wall, 1e-300)), 2.0 * math.pi / k_inner / ppw)
    n = int(math.ceil((r_end - r_start) / h)) + 1
    r = np.linspace(r_start, r_end, n)
    f = 2.0 * m * (veff(r) - e)
    psi = sweep_outward(f, float(r[1] - r[0]), n - 1)
    peak = float(np.max(np.abs(psi)))
    if peak == 0.0:
        raise ConvergenceError("outward integration underflowed")
    return psi / peak, r, float(r[1] - r[0])


def _match_free(psi, r, k, r_v):
    """Fit A sin(kr)+B cos(kr) at two radii a quarter wavelength apart."""
    lam = 2.0 * math.pi / k
    r1_target = max(r_v * 1.05, r_v + 0.05 * lam)
    i1 = int(np.searchsorted(r, r1_target))
    i2 = int(np.searchsorted(r, r[i1] + 0.25 * lam))
    if i2 >= r.size:
        raise GridError("matching radii fall outside the grid")
    s1, c1 = math.sin(k * r[i1]), math.cos(k * r[i1])
    s2, c2 = math.sin(k * r[i2]), math.cos(k * r[i2])
    det = s1 * c2 - s2 * c1
    a = (psi[i1] * c2 - psi[i2] * c1) / det
    b = (s1 * psi[i2] - s2 * psi[i1]) / det
    delta = math.atan2(b, a)
    c_amp = math.hypot(a, b)
    if c_amp == 0.0:
        raise ConvergenceError("vanishing asymptotic amplitude in match")
    return delta, c_amp, i1, i2


def _phase_shift(p, m, e, J=0, ppw=24.0):
    k = math.sqrt(2.0 * m * e)
    lam = 2.0 * math.pi / k
    r_v = _potential_range(p, e)
    r_end = max(r_v * 1.05, r_v + 0.05 * lam) + 0.35 * lam
    psi, r, h = _raw_wave(p, m, e, J, r_end, ppw)
    delta, _, _, _ = _match_free(psi, r, k, r_v)
    return delta, k


def scattering_length(
    p,
    mass: float | None = None,
    *,
    energies: tuple | None = None,
    ppw: float = 30.0,
) -> ScatteringLength:
    """k->0 limit of -tan(delta)/k via a three-point Richardson ladder.

    The default ladder (1,<!5, 0.25 microkelvin) suits heavy molecular
    reduced masses; pass explicit energies for light model systems.
    """
    m = RB85_PAIR_REDUCED_MASS if mass is None else float(mass)
    if not math.isfinite(p.asymptote):
        raise DomainError("scattering length needs a finite asymptote")
    if _is_free(p) and p.r_min < 1e-6:
        return ScatteringLength(0.0, 0.0, (), ())
    if energies is None:
        base = 1.0e-6 * KB_AU_PER_K
        energies = (base, 0.5 * base, 0.25 * base)
    if len(energies) != 3:
        raise DomainError("the extrapolation ladder needs exactly three energies")
    e1, e2, e3 = (float(x) for x in energies)
    if not (e1 > e2 > e3 > 0.0):
        raise DomainError("ladder energies must be positive and descending")
    vals = []
    for e in (e1, e2, e3):
        if _is_free(p):
            k = math.sqrt(2.0 * m * e)
            vals.append(math.tan(k * p.r_min) / k)
            continue
        delta, k = _phase_shift(p, m, e, ppw=ppw)
        vals.append(-math.tan(delta) / k)
    r1 = 2.0 * vals[1] - vals[0]
    r2 = 2.0 * vals[2] - vals[1]
    a = (4.0 * r2 - r1) / 3.0
    residual = abs(r2 - r1) / 3.0
    if not math.isfinite(a) or (abs(a) > 1e3 and residual > 0.5 * abs(a)):
        raise ConvergenceError(
            "scattering-length ladder did not converge (resonance at threshold?)",
            diagnostics={"energies": (e1, e2, e3), "running": tuple(vals)},
        )
    return ScatteringLength(
        value=float(a),
        residual=float(residual),
        ladder_energies=(e1, e2, e3),
        ladder_values=tuple(vals),
    )


def threshold_scan(p, bound, energies, mass: float | None = None, *, ppw: float = 24.0):
    """Continuum-bound overlap versus collision energy, with a Wigner-law fit.

    Returns (points, slope): points is a list of (E, FcValue); slope is the
    log-log slope fitted over the lowest decade of the scan, or None when the
    scan spans less than a decade or fewer than four points.
    """
    from . import franckcondon

    m = RB85_PAIR_REDUCED_MASS if mass is None else float(mass)
    es = sorted(float(e) for e in energies)
    if any(e <= 0.0 for e in es):
        raise DomainError("scan energies must be positive")
    points = []
    for e in es:
        c = continuum_wave(p, e, 0, m, ppw=ppw)
        points.append((e, franckcondon.continuum_bound_fc(c, bound)))
    slope = None
    if len(es) >= 4 and es[-1] / es[0] >= 10.0 - 1e-9:
        lo = es[0]
        sel = [(e, fc.value) for e, fc in points if e <= 10.0 * lo and fc.value != 0.0]
        if len(sel) >= 3:
            x = np.log([e for e, _ in sel])
            y = np.log([abs(v) for _, v in sel])
            slope = float(np.polyfit(x, y, 1)[0])
    return points, slope
