"""Bound levels of single- and two-channel radial Schroedinger problems.

Numerov shooting with Sturm node counting: a single outward sweep at energy E
counts the eigenvalues below E, so each level is located by bisection on an
integer and needs no initial guess.  Energies are then Richardson-extrapolated
in the step size (Numerov is O(h^4)); the convergence contract is that one
more halving changes the extrapolated energy by less than 1e-10 a.u. or 1e-6
relative, whichever is looser.

Grids are uniform.  The start point is pushed far enough up the inner wall
that the Dirichlet seed is suppressed by ~e^-32 before the classically
allowed region, and the extent runs ~14 decay lengths past the outermost
turning point, so box artifacts sit far below the energy tolerance.  Any
object with ``value(r)`` (vectorized), ``r_min`` and ``asymptote`` attributes
can be solved; near-threshold states of dispersion-tailed curves reach grid
extents of 1e4 a.u. and are the reason the sweeps are compiled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from ._numerov import (
    count_nodes,
    coupled_match_det,
    coupled_reconstruct,
    sweep_inward,
    sweep_outward,
)
from .errors import ConvergenceError, DomainError, GridError
from .potentials import CoupledPotential

__all__ = ["BoundState", "bound_levels", "wavefunction_at"]

_WALL_ACTION = 32.0  # e-folds of seed suppression inside the inner wall


def _tail_action(e_hi: float) -> float:
    """Decay e-folds needed past the turning point.

    The box (Dirichlet) shift scales as |E| * exp(-2A); once |E| drops below
    the 1e-10 absolute energy tolerance a short tail suffices, which keeps
    near-threshold grids (binding ~1e-12, decay lengths ~1e4 a.u.) tractable.
    """
    e = max(abs(e_hi), 1e-300)
    return float(min(14.0, max(7.0, 7.0 + 0.5 * math.log(e / 1e-10))))


@dataclass(frozen=True)
class BoundState:
    """A vibrational eigenstate on a radial grid.

    energy is measured relative to the potential asymptote (negative for a
    bound state); ``energy + asymptote`` recovers the absolute value.  For
    two-channel states ``amplitude`` holds the optically active first
    channel and ``amplitude_b`` the second; channel_weights sum to 1.
    """

    v: int
    J: int
    energy: float
    grid: np.ndarray
    amplitude: np.ndarray
    mass: float
    asymptote: float = 0.0
    outer_turning_point: float = 0.0
    channel_weights: tuple = (1.0,)
    amplitude_b: np.ndarray | None = None
    label: str = ""

    @cached_property
    def _spline(self):
        return CubicSpline(self.grid, self.amplitude)

    @property
    def binding_kappa(self) -> float:
        return math.sqrt(2.0 * self.mass * abs(self.energy))

    def __repr__(self):  # the arrays make the default repr unusable
        return (
            f"BoundState(v={self.v}, J={self.J}, energy={self.energy:.9e}, "
            f"npts={self.grid.size}, label={self.label!r})"
        )


def wavefunction_at(s: BoundState, r):
    """Spline-interpolated amplitude; exact at grid nodes."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < s.grid[0] - 1e-12) or np.any(r_arr > s.grid[-1] + 1e-12):
        raise DomainError("r outside the stored wavefunction grid")
    out = s._spline(r_arr)
    return float(out) if r_arr.ndim == 0 else out


def _veff_factory(pot, m, J):
    cent = J * (J + 1) / (2.0 * m)

    def veff(r):
        r_arr = np.asarray(r, dtype=float)
        v = pot.value(r_arr)
        if cent != 0.0:
            v = v + cent / r_arr**2
        return v

    return veff


def _scan_extent(veff, r_min, e_hi, m):
    """Outer grid edge: outermost turning at e_hi plus the decay tail."""
    r = r_min
    step = max(0.05, 0.002 * r_min)
    need = _tail_action(e_hi)
    last_below = None
    action = 0.0
    r_prev, k_prev = r, 0.0
    while r < 1.0e7:
        v = float(veff(r))
        if v <= e_hi:
            last_below = r
            action = 0.0
            k_prev = 0.0
        elif last_below is not None:
            k = math.sqrt(2.0 * m * (v - e_hi))
            action += 0.5 * (k + k_prev) * (r - r_prev)
            k_prev = k
            if action >= need:
                return last_below, r
        r_prev = r
        r += step
        step *= 1.03
    if last_below is None:
        return None, None
    raise GridError("tail decay too slow; cannot place the outer boundary")


def _inner_start(veff, r_min, e_hi, m):
    """Inner grid edge: enough wall action to bury the Dirichlet seed."""
    r = r_min
    step = max(0.01, 5e-4 * r_min)
    while r < 1.0e7 and float(veff(r)) > e_hi:
        r += step
    turn_in = r
    # walk back toward r_min accumulating kappa
    action = 0.0
    r_cur = turn_in
    k_prev = 0.0
    while r_cur - step >= r_min:
        r_nxt = r_cur - step
        v = float(veff(r_nxt))
        k = math.sqrt(max(0.0, 2.0 * m * (v - e_hi)))
        action += 0.5 * (k + k_prev) * step
        k_prev = k
        r_cur = r_nxt
        if action >= _WALL_ACTION:
            return r_cur
    return r_min


@dataclass
class _Grid:
    r: np.ndarray
    h: float
    veff: np.ndarray

    def f_at(self, m, energy):
        return 2.0 * m * (self.veff - energy)


def _build_grid(veff, r_min, e_lo, e_hi, m, ppw):
    turn_out, r_max = _scan_extent(veff, r_min, e_hi, m)
    if turn_out is None:
        return None
    r_start = _inner_start(veff, r_min, e_hi, m)
    # resolution: wall stiffness and shortest local wavelength both limit h
    probe = np.linspace(r_start, r_max, 2048)
    v_probe = veff(probe)
    f_wall = 2.0 * m * (float(np.max(v_probe)) - e_lo)
    k_max = math.sqrt(max(2.0 * m * (e_hi - float(np.min(v_probe))), 1e-300))
    h = min(1.0 / math.sqrt(max(f_wall, 1e-300)), 2.0 * math.pi / k_max / ppw)
    h = min(h, (r_max - r_start) / 400.0)
    n = int(math.ceil((r_max - r_start) / h)) + 1
    r = np.linspace(r_start, r_max, n)
    return _Grid(r=r, h=float(r[1] - r[0]), veff=veff(r))


def _refine_grid(veff, grid0: _Grid, factor: int) -> _Grid:
    # same span, step divided exactly so the Richardson ratio is clean
    n = (grid0.r.size - 1) * factor + 1
    r = np.linspace(grid0.r[0], grid0.r[-1], n)
    return _Grid(r=r, h=float(r[1] - r[0]), veff=veff(r))


def _bisect_on_count(grid, m, j, e_lo, e_hi):
    lo, hi = e_lo, e_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 8.0 * np.spacing(max(abs(lo), abs(hi))):
            break
        if count_nodes(grid.f_at(m, mid), grid.h) <= j:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _compose_wavefunction(grid, m, energy):
    f = grid.f_at(m, energy)
    turning = np.nonzero(f <= 0.0)[0]
    if turning.size == 0:
        raise ConvergenceError("no classically allowed region at the solved energy")
    i_m = int(turning[-1])
    i_m = min(max(i_m, 2), f.size - 3)
    psi_out = sweep_outward(f, grid.h, i_m + 1)
    psi_in = sweep_inward(f, grid.h, i_m)
    k = 0
    while abs(psi_in[k]) == 0.0 or abs(psi_out[i_m + k]) == 0.0:
        k += 1
        if i_m + k >= f.size - 2:
            raise ConvergenceError("degenerate matching point")
    scale = psi_out[i_m + k] / psi_in[k]
    psi = np.empty(f.size)
    psi[: i_m + 1] = psi_out[: i_m + 1]
    psi[i_m:] = psi_in * scale
    norm = simpson(psi**2, x=grid.r)
    psi /= math.sqrt(norm)
    # sign convention: positive lobe at the outer turning point
    if psi[i_m] < 0.0:
        psi = -psi
    nodes = int(np.count_nonzero(psi[1:-1] * psi[2:] < 0.0))
    return psi, nodes, grid.r[i_m]


def _level_energy(veff, grid0, m, j, e_lo, e_hi, max_refinements):
    """Bisection energies on successively halved grids + Richardson."""
    energies = []
    grids = []
    for level in range(max_refinements + 1):
        grid = grid0 if level == 0 else _refine_grid(veff, grid0, 2**level)
        grids.append(grid)
        energies.append(_bisect_on_count(grid, m, j, e_lo, e_hi))
        if len(energies) >= 3:
            r_prev = (16.0 * energies[-2] - energies[-3]) / 15.0
            r_cur = (16.0 * energies[-1] - energies[-2]) / 15.0
            tol = max(1e-10, 1e-6 * abs(r_cur))
            if abs(r_cur - r_prev) < tol:
                return r_cur, grids[-1], energies[-1]
    if max_refinements < 2:
        # caller opted out of the verification ladder
        if len(energies) >= 2:
            return (16.0 * energies[-1] - energies[-2]) / 15.0, grids[-1], energies[-1]
        return energies[-1], grids[-1], energies[-1]
    raise ConvergenceError(
        f"level {j}: Richardson ladder not converged "
        f"(last estimates {energies[-2]:.12e}, {energies[-1]:.12e})",
        diagnostics={"energies": energies},
    )


_MAX_STORED_POINTS = 400_000


def _decimate(r, psi):
    if r.size <= _MAX_STORED_POINTS:
        return r, psi
    stride = int(math.ceil(r.size / _MAX_STORED_POINTS))
    idx = np.arange(0, r.size, stride)
    if idx[-1] != r.size - 1:
        idx = np.append(idx, r.size - 1)
    return r[idx], psi[idx]


def _split_window(e_lo, e_hi, asym):
    """Split a window into per-decade pieces measured from the asymptote.

    Near-threshold levels of dispersion-tailed curves need grids thousands of
    a.u. long, while deep levels do not; solving each decade on its own grid
    keeps the cost proportional to what each level actually requires.
    """
    d_lo, d_hi = asym - e_lo, asym - e_hi  # positive depths, d_lo > d_hi
    if d_hi <= 0.0 or d_lo / d_hi <= 30.0:
        return [(e_lo, e_hi)]
    pieces = []
    top = d_hi
    while d_lo / top > 30.0:
        nxt = top * 10.0
        pieces.append((asym - nxt, asym - top))
        top = nxt
    pieces.append((e_lo, asym - top))
    return pieces[::-1]  # deepest first so levels come out sorted


def _solve_single_window(p, veff, J, e_lo, e_hi, mass, ppw, max_refinements,
                         store_wavefunctions, asym_off, label):
    grid = _build_grid(veff, p.r_min, e_lo, e_hi, mass, ppw)
    if grid is None:
        return []
    n_lo = count_nodes(grid.f_at(mass, e_lo), grid.h)
    n_hi = count_nodes(grid.f_at(mass, e_hi), grid.h)
    states = []
    for j in range(n_lo, n_hi):
        energy, fine_grid, e_fine = _level_energy(
            veff, grid, mass, j, e_lo, e_hi, max_refinements
        )
        if store_wavefunctions:
            psi, nodes, r_turn = _compose_wavefunction(fine_grid, mass, e_fine)
            if nodes != j:
                raise ConvergenceError(
                    f"node theorem violated for level {j}: counted {nodes}"
                )
            r_st, psi_st = _decimate(fine_grid.r, psi)
            states.append(
                BoundState(
                    v=j,
                    J=J,
                    energy=energy - asym_off,
                    grid=r_st,
                    amplitude=psi_st,
                    mass=mass,
                    asymptote=asym_off,
                    outer_turning_point=r_turn,
                    label=label,
                )
            )
        else:
            states.append(
                BoundState(
                    v=j,
                    J=J,
                    energy=energy - asym_off,
                    grid=np.array([p.r_min]),
                    amplitude=np.array([0.0]),
                    mass=mass,
                    asymptote=asym_off,
                    label=label,
                )
            )
    return states


def bound_levels(
    p,
    J: int,
    window: tuple,
    mass: float,
    *,
    ppw: float = 24.0,
    max_refinements: int = 3,
    store_wavefunctions: bool = True,
    label: str = "",
    n_scan: int = 240,
):
    """All bound levels of ``p`` with energies inside ``window`` (absolute).

    window is (E_min, E_max) in absolute energy; both must lie below the
    potential asymptote.  Returns BoundState objects sorted by energy, with
    ``energy`` stored relative to the asymptote.
    """
    if isinstance(p, CoupledPotential):
        return _bound_levels_coupled(
            p, J, window, mass, ppw=ppw, max_refinements=max_refinements,
            label=label or p.label, n_scan=n_scan,
        )
    e_lo, e_hi = float(window[0]), float(window[1])
    asym = p.asymptote
    if e_hi >= asym:
        raise DomainError("energy window must lie below the potential asymptote")
    # confining wells have no dissociation limit; report absolute energies
    asym_off = asym if math.isfinite(asym) else 0.0
    if e_lo >= e_hi:
        raise DomainError("window must be (E_min, E_max) with E_min < E_max")
    veff = _veff_factory(p, mass, J)
    lbl = label or getattr(p, "label", "")
    if math.isfinite(asym):
        pieces = _split_window(e_lo, e_hi, asym)
    else:
        pieces = [(e_lo, e_hi)]
    states = []
    for lo, hi in pieces:
        states.extend(
            _solve_single_window(
                p, veff, J, lo, hi, mass, ppw, max_refinements,
                store_wavefunctions, asym_off, lbl,
            )
        )
    # a level within discretization error of a decade boundary can be seen by
    # both sub-solves; keep the first occurrence
    seen, out = set(), []
    for s in states:
        if s.v not in seen:
            seen.add(s.v)
            out.append(s)
    return out


# ---------------------------------------------------------------------------
# two-channel solver
# ---------------------------------------------------------------------------


def _coupled_veff(cp: CoupledPotential, m, J, r):
    cent = J * (J + 1) / (2.0 * m * r**2)
    va = cp.channel_a.value(r) + cent
    vb = cp.channel_b.value(r) + cent
    w = cp.coupling(r)
    vmat = np.empty((r.size, 2, 2))
    vmat[:, 0, 0] = va
    vmat[:, 1, 1] = vb
    vmat[:, 0, 1] = w
    vmat[:, 1, 0] = w
    lower = 0.5 * (va + vb) - np.hypot(0.5 * (va - vb), w)
    return vmat, lower


def _coupled_lower_veff(cp, m, J):
    def veff_lower(r):
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        _, lower = _coupled_veff(cp, m, J, r_arr)
        return lower if np.asarray(r).ndim else float(lower[0])

    return veff_lower


def _coupled_det(vmat, lower, h, m, energy):
    fmat = 2.0 * m * vmat.copy()
    fmat[:, 0, 0] -= 2.0 * m * energy
    fmat[:, 1, 1] -= 2.0 * m * energy
    allowed = np.nonzero(lower <= energy)[0]
    if allowed.size == 0:
        return None, None
    i_m = int(min(max(allowed[-1], 2), lower.size - 3))
    return coupled_match_det(fmat, h, i_m), i_m


def _bound_levels_coupled(cp, J, window, mass, *, ppw, max_refinements, label, n_scan):
    e_lo, e_hi = float(window[0]), float(window[1])
    if e_hi >= cp.asymptote:
        raise DomainError("energy window must lie below the manifold asymptote")
    if e_lo >= e_hi:
        raise DomainError("window must be (E_min, E_max) with E_min < E_max")

    def dets_on(grid, vmat, lower, energies):
        out = np.empty(len(energies))
        for i, e in enumerate(energies):
            d, _ = _coupled_det(vmat, lower, grid.h, mass, e)
            out[i] = np.nan if d is None else d
        return out

    def refine(grid, vmat, lower, a, b):
        for _ in range(200):
            mid = 0.5 * (a + b)
            if b - a <= 8.0 * np.spacing(max(abs(a), abs(b))):
                break
            dm, _ = _coupled_det(vmat, lower, grid.h, mass, mid)
            da, _ = _coupled_det(vmat, lower, grid.h, mass, a)
            if dm == 0.0:
                return mid
            if (dm > 0) == (da > 0):
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    veff_lower = _coupled_lower_veff(cp, mass, J)
    grid0 = _build_grid(veff_lower, cp.r_min, e_lo, e_hi, mass, ppw)
    if grid0 is None:
        return []

    ladders: list[list[float]] = []
    grids = []
    converged = False
    for level in range(max_refinements + 1):
        grid = grid0 if level == 0 else _refine_grid(veff_lower, grid0, 2**level)
        vmat, lower = _coupled_veff(cp, mass, J, grid.r)
        grids.append((grid, vmat, lower))
        es = np.linspace(e_lo, e_hi, n_scan)
        dd = dets_on(grid, vmat, lower, es)
        d_scale = float(np.nanmedian(np.abs(dd))) + 1e-300
        roots = []
        for i in range(n_scan - 1):
            if np.isnan(dd[i]) or np.isnan(dd[i + 1]):
                continue
            if dd[i] == 0.0:
                roots.append(es[i])
            elif dd[i] * dd[i + 1] < 0.0:
                cand = refine(grid, vmat, lower, es[i], es[i + 1])
                d_at, _ = _coupled_det(vmat, lower, grid.h, mass, cand)
                # a determinant pole also flips sign but stays O(1) at the
                # crossing; a true eigenvalue bisects |D| down to noise
                if d_at is not None and abs(d_at) < 1e-6 * d_scale:
                    roots.append(cand)
        ladders.append(sorted(roots))
        if level >= 2 and len(ladders[-1]) == len(ladders[-2]) == len(ladders[-3]):
            r_prev = [
                (16.0 * b - a) / 15.0 for a, b in zip(ladders[-3], ladders[-2])
            ]
            r_cur = [
                (16.0 * b - a) / 15.0 for a, b in zip(ladders[-2], ladders[-1])
            ]
            if all(
                abs(rc - rp) < max(1e-10, 1e-6 * abs(rc))
                for rc, rp in zip(r_cur, r_prev)
            ):
                converged = True
                break
    if not converged and max_refinements >= 2:
        raise ConvergenceError("two-channel Richardson ladder not converged")

    if len(ladders) >= 2 and len(ladders[-1]) == len(ladders[-2]):
        r_cur = [(16.0 * b - a) / 15.0 for a, b in zip(ladders[-2], ladders[-1])]
    else:
        r_cur = ladders[-1]

    grid, vmat, lower = grids[-1]
    states = []
    for energy, e_fine in zip(r_cur, ladders[-1]):
        fmat = 2.0 * mass * vmat.copy()
        fmat[:, 0, 0] -= 2.0 * mass * e_fine
        fmat[:, 1, 1] -= 2.0 * mass * e_fine
        _, i_m = _coupled_det(vmat, lower, grid.h, mass, e_fine)
        psi2 = coupled_reconstruct(fmat, grid.h, i_m)
        # boundary residual rejects matching-determinant poles
        edge = max(abs(psi2[-1, 0]), abs(psi2[-1, 1]))
        peak = float(np.max(np.abs(psi2)))
        if peak == 0.0 or edge > 1e-5 * peak:
            continue
        norm = simpson(psi2[:, 0] ** 2 + psi2[:, 1] ** 2, x=grid.r)
        psi2 = psi2 / math.sqrt(norm)
        wa = float(simpson(psi2[:, 0] ** 2, x=grid.r))
        wb = float(simpson(psi2[:, 1] ** 2, x=grid.r))
        dom = psi2[:, 0] if wa >= wb else psi2[:, 1]
        interior = dom[1:-1]
        nodes = int(np.count_nonzero(interior[:-1] * interior[1:] < 0.0))
        if psi2[i_m, 0 if wa >= wb else 1] < 0.0:
            psi2 = -psi2
        states.append(
            BoundState(
                v=nodes,
                J=J,
                energy=energy - cp.asymptote,
                grid=grid.r,
                amplitude=psi2[:, 0],
                mass=mass,
                asymptote=cp.asymptote,
                outer_turning_point=grid.r[i_m],
                channel_weights=(wa, wb),
                amplitude_b=psi2[:, 1],
                label=label,
            )
        )
    return states
