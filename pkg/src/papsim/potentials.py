"""Diatomic potential curves: tabulated short range + -C6/r^6 long range.

A RadialPotential blends a cubic-spline interpolant of the short-range table
into the analytic dispersion tail with a C^1 cubic switch centred on
``r_interp``.  Beyond the blend window the tail is returned exactly (no
spline evaluation), so the asymptotic form is bit-exact.

The built-in ground-surface model is a Lennard-Jones 12-6 curve matched to
the dispersion coefficient; its interpolation radius is auto-calibrated so
the s-wave scattering length hits a requested target.  The scattering length
of such a near-resonant curve is an extremely steep function of r_interp,
which is exactly the knob the calibration exploits.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import CalibrationError, DomainError, PotentialParseError

__all__ = [
    "RadialPotential",
    "CoupledPotential",
    "evaluate",
    "builtin_x_model",
    "builtin_excited_model",
    "load_potential",
    "x_model_at",
    "X_MODEL_C6",
    "X_MODEL_C12",
]

# Ground-surface Lennard-Jones parameters.  C6 is the dispersion coefficient
# used throughout; C12 fixes a ~5e-5 hartree well (about a dozen s-wave
# levels at the Rb2 reduced mass) whose last level sits close enough to
# threshold that the r_interp scan below sweeps the scattering length
# through a pole.
X_MODEL_C6 = 4426.0
X_MODEL_C12 = X_MODEL_C6**2 / (4.0 * 5.0e-5)

# r_interp scan window for the calibration.  The scattering length rises
# monotonically along this branch from ~40 a.u. through the pole near 23.3
# a.u. and back up through -100 a.u., so both near-resonant and background
# targets bracket cleanly; root-finding runs on 1/a, which stays continuous
# through the pole.
X_MODEL_SCAN = (19.0, 26.0)

_X_TABLE_RMIN = 13.0
_X_TABLE_RMAX = 42.0

# Excited-surface synthetic model: Morse well displaced outward from the
# ground well, electronic excitation energy in ``asymptote``.
_EXC_DEPTH = 9.0e-5
_EXC_ALPHA = 0.35
_EXC_RE = 21.0
_EXC_C6 = 6500.0
_EXC_ASYMPTOTE = 0.045
_EXC_RINTERP = 32.0


@dataclass(frozen=True)
class RadialPotential:
    """Single-channel curve: short-range table, dispersion tail, C^1 blend.

    r_table, v_table : strictly increasing radii and values, atomic units
    c6               : dispersion coefficient, V -> asymptote - c6/r^6
    r_interp         : centre of the blend window
    blend_halfwidth  : half-width of the blend window (default 1 a.u.)
    asymptote        : dissociation limit offset
    """

    r_table: np.ndarray
    v_table: np.ndarray
    c6: float
    r_interp: float
    blend_halfwidth: float = 1.0
    asymptote: float = 0.0
    label: str = ""

    def __post_init__(self):
        r = np.asarray(self.r_table, dtype=float)
        v = np.asarray(self.v_table, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 4:
            raise DomainError("potential table needs >= 4 (r, V) samples")
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(v)):
            raise DomainError("potential table contains non-finite entries")
        if np.any(np.diff(r) <= 0.0):
            raise DomainError("potential table radii must be strictly increasing")
        if r[0] <= 0.0:
            raise DomainError("potential table radii must be positive")
        if not math.isfinite(self.c6):
            raise DomainError("c6 must be finite")
        if self.blend_halfwidth <= 0.0:
            raise DomainError("blend_halfwidth must be positive")
        if self.r_interp + self.blend_halfwidth > r[-1] + 1e-12:
            raise DomainError("table must cover the blend window")
        if self.r_interp - self.blend_halfwidth < r[0] - 1e-12:
            raise DomainError("blend window extends below the table")
        object.__setattr__(self, "r_table", r)
        object.__setattr__(self, "v_table", v)

    @cached_property
    def _spline(self):
        return CubicSpline(self.r_table, self.v_table, bc_type="natural")

    @property
    def r_min(self) -> float:
        return float(self.r_table[0])

    def tail(self, r):
        return self.asymptote - self.c6 / np.asarray(r, dtype=float) ** 6

    def value(self, r):
        """Evaluate the blended curve; r may be a scalar or array."""
        r_arr = np.asarray(r, dtype=float)
        scalar = r_arr.ndim == 0
        r_arr = np.atleast_1d(r_arr)
        if np.any(r_arr <= 0.0):
            raise DomainError("potential evaluated at r <= 0")
        if np.any(r_arr < self.r_table[0] - 1e-12):
            raise DomainError(
                f"r below table minimum {self.r_table[0]:g} a.u."
            )
        lo = self.r_interp - self.blend_halfwidth
        hi = self.r_interp + self.blend_halfwidth
        out = np.empty_like(r_arr)
        inner = r_arr <= lo
        outer = r_arr >= hi
        mid = ~(inner | outer)
        if np.any(inner):
            out[inner] = self._spline(r_arr[inner])
        if np.any(outer):
            out[outer] = self.asymptote - self.c6 / r_arr[outer] ** 6
        if np.any(mid):
            x = (r_arr[mid] - lo) / (hi - lo)
            s = 3.0 * x**2 - 2.0 * x**3
            out[mid] = (1.0 - s) * self._spline(r_arr[mid]) + s * (
                self.asymptote - self.c6 / r_arr[mid] ** 6
            )
        return float(out[0]) if scalar else out

    __call__ = value


@dataclass(frozen=True)
class CoupledPotential:
    """Two-channel manifold: diagonal curves plus a spin-orbit coupling table.

    The coupling tends to a constant (the asymptotic splitting share) at
    large r; beyond its table it is held at the last value.
    """

    channel_a: RadialPotential
    channel_b: RadialPotential
    coupling_r: np.ndarray
    coupling_w: np.ndarray
    label: str = ""

    def __post_init__(self):
        r = np.asarray(self.coupling_r, dtype=float)
        w = np.asarray(self.coupling_w, dtype=float)
        if r.shape != w.shape or r.ndim != 1 or r.size < 2:
            raise DomainError("coupling table needs >= 2 (r, W) samples")
        if np.any(np.diff(r) <= 0.0):
            raise DomainError("coupling table radii must be strictly increasing")
        object.__setattr__(self, "coupling_r", r)
        object.__setattr__(self, "coupling_w", w)

    @cached_property
    def _w_spline(self):
        return CubicSpline(self.coupling_r, self.coupling_w, bc_type="natural")

    @property
    def r_min(self) -> float:
        return max(self.channel_a.r_min, self.channel_b.r_min)

    @property
    def asymptote(self) -> float:
        # Lowest adiabatic limit of the 2x2 matrix at infinity.
        w_inf = float(self.coupling_w[-1])
        ea, eb = self.channel_a.asymptote, self.channel_b.asymptote
        mean, half = 0.5 * (ea + eb), 0.5 * (ea - eb)
        return mean - math.hypot(half, w_inf)

    def coupling(self, r):
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.where(
            r_arr >= self.coupling_r[-1],
            self.coupling_w[-1],
            self._w_spline(np.clip(r_arr, self.coupling_r[0], self.coupling_r[-1])),
        )
        return float(out[0]) if np.asarray(r).ndim == 0 else out

    def matrix(self, r):
        """2x2 real-symmetric potential matrix at radius r."""
        va = self.channel_a.value(r)
        vb = self.channel_b.value(r)
        w = self.coupling(r)
        return np.array([[va, w], [w, vb]])


def evaluate(p: RadialPotential, r):
    """Blended potential value; see RadialPotential.value for the contract."""
    return p.value(r)


def _lj_table(c12: float, c6: float, r_lo: float, r_hi: float, dr: float = 0.02):
    r = np.arange(r_lo, r_hi + 0.5 * dr, dr)
    return r, c12 / r**12 - c6 / r**6


def x_model_at(r_interp: float) -> RadialPotential:
    """Ground-surface model at a fixed interpolation radius (no calibration)."""
    r, v = _lj_table(X_MODEL_C12, X_MODEL_C6, _X_TABLE_RMIN, _X_TABLE_RMAX)
    return RadialPotential(
        r_table=r,
        v_table=v,
        c6=X_MODEL_C6,
        r_interp=float(r_interp),
        label="X-model",
    )




@functools.lru_cache(maxsize=32)
def builtin_x_model(
    scattering_length_target: float,
    mass: float | None = None,
    scan: tuple = X_MODEL_SCAN,
) -> RadialPotential:
    """Ground-surface model calibrated to a target s-wave scattering length.

    Scans the interpolation radius over ``scan``, then root-finds on
    1/a(r_interp) - 1/target, which stays continuous through the scattering
    pole.  Deterministic: equal targets return identical curves.
    """
    from scipy.optimize import brentq

    from . import scattering
    from .units import RB85_PAIR_REDUCED_MASS

    target = float(scattering_length_target)
    if not math.isfinite(target) or target == 0.0:
        raise DomainError("scattering-length target must be finite and nonzero")
    m = RB85_PAIR_REDUCED_MASS if mass is None else float(mass)

    def inv_a_offset(r_interp):
        a = scattering.scattering_length(x_model_at(r_interp), m).value
        return 1.0 / a - 1.0 / target

    n_coarse = 15
    grid = np.linspace(scan[0], scan[1], n_coarse)
    vals = [inv_a_offset(ri) for ri in grid]
    bracket = None
    for i in range(n_coarse - 1):
        if vals[i] == 0.0:
            bracket = (grid[i], grid[i])
            break
        if vals[i] * vals[i + 1] < 0.0:
            bracket = (grid[i], grid[i + 1])
            break
    if bracket is None:
        raise CalibrationError(
            f"no r_interp in [{scan[0]}, {scan[1]}] reaches a = {target:g} a.u.",
            diagnostics={"r_interp": list(grid), "inv_a_offset": vals},
        )
    if bracket[0] == bracket[1]:
        r_star = bracket[0]
    else:
        r_star = brentq(inv_a_offset, *bracket, xtol=1e-10, rtol=1e-12)
    pot = x_model_at(r_star)
    a_star = scattering.scattering_length(pot, m).value
    if abs(a_star - target) > 0.05 * abs(target):
        raise CalibrationError(
            f"calibration landed at a = {a_star:g}, target {target:g} (>5% off)"
        )
    return pot


@functools.lru_cache(maxsize=1)
def builtin_excited_model() -> RadialPotential:
    """Synthetic excited-surface curve: displaced Morse well + dispersion tail.

    Single effective channel; the two-channel machinery engages only when a
    four-column file is loaded.
    """
    dr = 0.02
    r = np.arange(10.0, 40.0 + 0.5 * dr, dr)
    morse = _EXC_DEPTH * (1.0 - np.exp(-_EXC_ALPHA * (r - _EXC_RE))) ** 2 - _EXC_DEPTH
    return RadialPotential(
        r_table=r,
        v_table=morse + _EXC_ASYMPTOTE,
        c6=_EXC_C6,
        r_interp=_EXC_RINTERP,
        asymptote=_EXC_ASYMPTOTE,
        label="A-model",
    )


_DIRECTIVE_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(\S+)\s*$")
_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def _parse_number(token: str, lineno: int) -> float:
    # Bit-exact parsing: decimal and scientific notation only.
    if not _NUMBER_RE.match(token):
        raise PotentialParseError(f"malformed number {token!r}", line=lineno)
    return float(token)


def load_potential(path):
    """Parse a potential file into a RadialPotential or CoupledPotential.

    Format: '#' comments; directive lines ``c6 = <val>``, ``r_interp = <val>``,
    ``asymptote = <val>`` (plus ``c6_b``/``asymptote_b`` for the second
    channel); then whitespace-separated columns, 2 (r, V) or 4
    (r, V_A, V_b, W), all in atomic units.
    """
    directives: dict[str, float] = {}
    rows: list[list[float]] = []
    ncols = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            m = _DIRECTIVE_RE.match(line)
            if m and not _NUMBER_RE.match(line.split()[0]):
                directives[m.group(1)] = _parse_number(m.group(2), lineno)
                continue
            tokens = line.split()
            if ncols is None:
                if len(tokens) not in (2, 4):
                    raise PotentialParseError(
                        f"expected 2 or 4 columns, got {len(tokens)}", line=lineno
                    )
                ncols = len(tokens)
            elif len(tokens) != ncols:
                raise PotentialParseError(
                    f"inconsistent column count ({len(tokens)} vs {ncols})",
                    line=lineno,
                )
            vals = [_parse_number(t, lineno) for t in tokens]
            if any(math.isnan(v) for v in vals):
                raise PotentialParseError("NaN entry", line=lineno)
            if rows and vals[0] <= rows[-1][0]:
                raise PotentialParseError(
                    "r column must be strictly increasing", line=lineno
                )
            rows.append(vals)

    if "c6" not in directives:
        raise PotentialParseError("missing 'c6' directive")
    if not rows:
        raise PotentialParseError("no data rows")
    data = np.array(rows, dtype=float)
    r = data[:, 0]
    blend = directives.get("blend_halfwidth", 1.0)
    r_interp = directives.get("r_interp", r[-1] - 2.0 * blend)
    asym = directives.get("asymptote", 0.0)
    if ncols == 2:
        return RadialPotential(
            r_table=r,
            v_table=data[:, 1],
            c6=directives["c6"],
            r_interp=r_interp,
            blend_halfwidth=blend,
            asymptote=asym,
            label=str(path),
        )
    chan_a = RadialPotential(
        r_table=r,
        v_table=data[:, 1],
        c6=directives["c6"],
        r_interp=r_interp,
        blend_halfwidth=blend,
        asymptote=asym,
        label=f"{path}:A",
    )
    chan_b = RadialPotential(
        r_table=r,
        v_table=data[:, 2],
        c6=directives.get("c6_b", directives["c6"]),
        r_interp=r_interp,
        blend_halfwidth=blend,
        asymptote=directives.get("asymptote_b", asym),
        label=f"{path}:b",
    )
    return CoupledPotential(
        channel_a=chan_a,
        channel_b=chan_b,
        coupling_r=r,
        coupling_w=data[:, 3],
        label=str(path),
    )
