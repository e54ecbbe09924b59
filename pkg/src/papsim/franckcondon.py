"""Vibrational overlap integrals with dimension tracking.

Bound-bound factors are dimensionless numbers in [-1, 1]; continuum-bound
factors against energy-normalized scattering states carry hartree^(-1/2).
The electronic transition dipole is *not* folded in here; coupling-strength
assembly happens in units.rabi_frequency, mirroring the separate bookkeeping
of dipole moment and shape factor.

Quadrature is trapezoidal on the merged sample grid with one Richardson
(midpoint-halving) refinement; the integrand is smooth between samples and
the bound state's exponential tail truncates the integral, so the refinement
step doubles as the aliasing check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConvergenceError, DomainError
from .scattering import ContinuumState
from .spectrum import BoundState

__all__ = ["FcKind", "FcValue", "bound_bound_fc", "continuum_bound_fc", "fc_map", "FcTable"]


class FcKind(Enum):
    BOUND_BOUND = "bound_bound"
    CONTINUUM_BOUND = "continuum_bound"


@dataclass(frozen=True)
class FcValue:
    value: float
    kind: FcKind

    def __post_init__(self):
        if self.kind is FcKind.BOUND_BOUND and abs(self.value) > 1.0 + 1e-8:
            raise ConvergenceError(
                f"bound-bound overlap {self.value} outside [-1, 1]"
            )


def _trapz(y, x):
    return float(np.trapezoid(y, x))


def _overlap_on(r, fa, fb):
    return _trapz(fa(r) * fb(r), r)


def _merged_grid(ga, gb, lo, hi):
    sel_a = ga[(ga >= lo) & (ga <= hi)]
    sel_b = gb[(gb >= lo) & (gb <= hi)]
    merged = np.union1d(sel_a, sel_b)
    if merged.size < 8:
        raise DomainError("grids share too few points to integrate an overlap")
    return merged


def _refined(r):
    mid = 0.5 * (r[:-1] + r[1:])
    return np.sort(np.concatenate([r, mid]))


def _romberg_pair(r, fa, fb):
    t1 = _overlap_on(r, fa, fb)
    r2 = _refined(r)
    t2 = _overlap_on(r2, fa, fb)
    return (4.0 * t2 - t1) / 3.0, t1, t2


def bound_bound_fc(a: BoundState, b: BoundState) -> FcValue:
    """Dimensionless overlap of two unit-normalized vibrational states."""
    lo = max(a.grid[0], b.grid[0])
    hi = min(a.grid[-1], b.grid[-1])
    if hi <= lo:
        raise DomainError("bound-state grids do not overlap")
    merged = _merged_grid(a.grid, b.grid, lo, hi)
    val, _, _ = _romberg_pair(merged, a._spline, b._spline)
    return FcValue(value=val, kind=FcKind.BOUND_BOUND)


def _bound_outer_extent(b: BoundState) -> float:
    """Integration cutoff: outer turning point plus five decay lengths."""
    kappa = b.binding_kappa
    if kappa <= 0.0 or not math.isfinite(kappa):
        return float(b.grid[-1])
    return min(float(b.grid[-1]), b.outer_turning_point + 5.0 / kappa)


def continuum_bound_fc(c: ContinuumState, b: BoundState) -> FcValue:
    """Energy-normalized continuum against a bound state; hartree^(-1/2)."""
    lo = max(c.grid[0], b.grid[0])
    hi = min(c.grid[-1], _bound_outer_extent(b))
    if hi <= lo:
        raise DomainError("continuum and bound grids do not overlap")
    merged = _merged_grid(c.grid, b.grid, lo, hi)
    val, t1, t2 = _romberg_pair(merged, c._spline, b._spline)
    scale = max(abs(val), 1e-3 * _trapz(np.abs(c.at(merged) * b._spline(merged)), merged))
    if scale > 0.0 and abs(t2 - t1) > 1e-3 * scale:
        raise ConvergenceError(
            "continuum-bound quadrature unconverged on refinement (grid aliasing)",
            diagnostics={"coarse": t1, "fine": t2},
        )
    return FcValue(value=val, kind=FcKind.CONTINUUM_BOUND)


@dataclass
class FcTable:
    rows: list  # (lower_id, upper_id, kind, value)

    def to_csv_lines(self):
        yield "lower_id,upper_id,kind,value"
        for lower, upper, kind, value in self.rows:
            yield f"{lower},{upper},{kind.value},{value:.12e}"

    def value(self, lower_id, upper_id):
        for lo, up, _, val in self.rows:
            if lo == lower_id and up == upper_id:
                return val
        raise KeyError((lower_id, upper_id))


def fc_map(lower_states, upper_states) -> FcTable:
    """Overlap matrix over the requested state pairs.

    ``lower_states`` may mix BoundState and ContinuumState entries; each
    pairing with every upper BoundState produces one row.  Empty inputs give
    an empty table.
    """
    rows = []
    for lo in lower_states:
        for up in upper_states:
            if isinstance(lo, ContinuumState):
                fc = continuum_bound_fc(lo, up)
                lo_id = f"E={lo.energy:.6e}"
            else:
                fc = bound_bound_fc(lo, up)
                lo_id = f"v{lo.v}"
            rows.append((lo_id, f"v{up.v}", fc.kind, fc.value))
    return FcTable(rows=rows)
