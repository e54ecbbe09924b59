"""Conversions between laboratory units and atomic units (hbar = m_e = e = 1).

All CODATA literals live in this module and nowhere else; every other module
works in plain atomic-unit floats and converts at its boundary.  Temperatures
convert to energies (k_B folded in), intensities convert to field amplitudes
using the cycle-averaged convention I = eps0*c*E^2/2, i.e.
eps[a.u.] = sqrt(I / INTENSITY_AU).  The latter choice is isolated here so a
sqrt(2) recalibration of the field convention touches one constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from scipy import constants as _codata

__all__ = [
    "Dimension",
    "Quantity",
    "to_atomic",
    "from_atomic",
    "rabi_frequency",
    "HARTREE_J",
    "TIME_AU_S",
    "BOHR_M",
    "KB_AU_PER_K",
    "INTENSITY_AU_WCM2",
    "HARTREE_INV_CM",
    "RB85_PAIR_REDUCED_MASS",
]

HARTREE_J = _codata.physical_constants["Hartree energy"][0]
TIME_AU_S = _codata.physical_constants["atomic unit of time"][0]
BOHR_M = _codata.physical_constants["Bohr radius"][0]
FIELD_AU_V_M = _codata.physical_constants["atomic unit of electric field"][0]
KB_AU_PER_K = _codata.k / HARTREE_J

# Cycle-averaged intensity carried by a field of 1 a.u. amplitude, in W/cm^2.
INTENSITY_AU_WCM2 = 0.5 * _codata.epsilon_0 * _codata.c * FIELD_AU_V_M**2 / 1.0e4

# hartree -> wavenumber (cm^-1)
HARTREE_INV_CM = _codata.physical_constants["hartree-inverse meter relationship"][0] / 100.0

# Reduced mass of a colliding pair of mass-85 alkali atoms, expressed in
# electron masses with the conventional 1823 m_e per nucleon.  Kept as the
# exact rational so golden numbers stay bit-comparable.
RB85_PAIR_REDUCED_MASS = 1823.0 * 85.0 / 2.0


class Dimension(Enum):
    ENERGY = "energy"
    TIME = "time"
    LENGTH = "length"
    INVERSE_VOLUME = "inverse-volume-density"
    FIELD = "field-amplitude"
    INTENSITY = "intensity"
    TEMPERATURE = "temperature"
    MASS = "mass"
    DIMENSIONLESS = "dimensionless"
    INV_SQRT_ENERGY = "inverse-sqrt-energy"
    SQRT_ENERGY = "sqrt-energy"
    VELOCITY = "velocity"


@dataclass(frozen=True)
class Quantity:
    """A value in atomic units tagged with its dimension.

    Arithmetic between mismatched dimensions raises UnitsError; nothing is
    coerced silently.
    """

    value: float
    dimension: Dimension

    def _require_same(self, other):
        from .errors import UnitsError

        if not isinstance(other, Quantity):
            raise UnitsError(f"expected Quantity, got {type(other).__name__}")
        if other.dimension is not self.dimension:
            raise UnitsError(
                f"dimension mismatch: {self.dimension.value} vs {other.dimension.value}"
            )

    def __add__(self, other):
        self._require_same(other)
        return Quantity(self.value + other.value, self.dimension)

    def __sub__(self, other):
        self._require_same(other)
        return Quantity(self.value - other.value, self.dimension)

    def __neg__(self):
        return Quantity(-self.value, self.dimension)

    def __mul__(self, other):
        from .errors import UnitsError

        if isinstance(other, (int, float)):
            return Quantity(self.value * other, self.dimension)
        if isinstance(other, Quantity) and other.dimension is Dimension.DIMENSIONLESS:
            return Quantity(self.value * other.value, self.dimension)
        raise UnitsError("Quantity multiplication only by scalars or dimensionless")

    __rmul__ = __mul__

    def __lt__(self, other):
        self._require_same(other)
        return self.value < other.value

    def __le__(self, other):
        self._require_same(other)
        return self.value <= other.value


# tag -> (dimension, multiplicative factor lab->a.u.).  Intensity tags are
# special-cased in to_atomic/from_atomic because the map is not linear.
_LINEAR_TAGS = {
    "kelvin": (Dimension.ENERGY, KB_AU_PER_K),
    "K": (Dimension.ENERGY, KB_AU_PER_K),
    "millikelvin": (Dimension.ENERGY, KB_AU_PER_K * 1e-3),
    "mK": (Dimension.ENERGY, KB_AU_PER_K * 1e-3),
    "microkelvin": (Dimension.ENERGY, KB_AU_PER_K * 1e-6),
    "uK": (Dimension.ENERGY, KB_AU_PER_K * 1e-6),
    "hartree": (Dimension.ENERGY, 1.0),
    "second": (Dimension.TIME, 1.0 / TIME_AU_S),
    "s": (Dimension.TIME, 1.0 / TIME_AU_S),
    "millisecond": (Dimension.TIME, 1e-3 / TIME_AU_S),
    "ms": (Dimension.TIME, 1e-3 / TIME_AU_S),
    "microsecond": (Dimension.TIME, 1e-6 / TIME_AU_S),
    "us": (Dimension.TIME, 1e-6 / TIME_AU_S),
    "nanosecond": (Dimension.TIME, 1e-9 / TIME_AU_S),
    "ns": (Dimension.TIME, 1e-9 / TIME_AU_S),
    "picosecond": (Dimension.TIME, 1e-12 / TIME_AU_S),
    "ps": (Dimension.TIME, 1e-12 / TIME_AU_S),
    "meter": (Dimension.LENGTH, 1.0 / BOHR_M),
    "m": (Dimension.LENGTH, 1.0 / BOHR_M),
    "centimeter": (Dimension.LENGTH, 1e-2 / BOHR_M),
    "cm": (Dimension.LENGTH, 1e-2 / BOHR_M),
    "micrometer": (Dimension.LENGTH, 1e-6 / BOHR_M),
    "um": (Dimension.LENGTH, 1e-6 / BOHR_M),
    "nanometer": (Dimension.LENGTH, 1e-9 / BOHR_M),
    "nm": (Dimension.LENGTH, 1e-9 / BOHR_M),
    "cm^-3": (Dimension.INVERSE_VOLUME, BOHR_M**3 * 1e6),
    "cm-3": (Dimension.INVERSE_VOLUME, BOHR_M**3 * 1e6),
    "m^-3": (Dimension.INVERSE_VOLUME, BOHR_M**3),
    "m/s": (Dimension.VELOCITY, TIME_AU_S / BOHR_M),
    "cm/s": (Dimension.VELOCITY, 1e-2 * TIME_AU_S / BOHR_M),
}

_INTENSITY_TAGS = {"W/cm^2", "W/cm2", "W/cm²"}

# "a.u." passes the number through; the dimension must be supplied by context
# (config parsing maps it onto the field being read).
_PASSTHROUGH_TAGS = {"a.u.", "au", "a.u"}


def known_unit_tags():
    return sorted(set(_LINEAR_TAGS) | _INTENSITY_TAGS | _PASSTHROUGH_TAGS)


def to_atomic(value: float, unit: str, dimension: Dimension | None = None) -> Quantity:
    """Convert a lab-unit value to atomic units.

    Intensity tags return the corresponding *field amplitude* (cycle-averaged
    convention).  ``a.u.`` passes through; give ``dimension`` to tag it,
    otherwise it comes back dimensionless.
    """
    from .errors import UnitsError

    if unit in _PASSTHROUGH_TAGS:
        return Quantity(float(value), dimension or Dimension.DIMENSIONLESS)
    if unit in _INTENSITY_TAGS:
        if value < 0.0:
            raise UnitsError("intensity must be non-negative")
        return Quantity(math.sqrt(value / INTENSITY_AU_WCM2), Dimension.FIELD)
    try:
        dim, factor = _LINEAR_TAGS[unit]
    except KeyError:
        raise UnitsError(f"unknown unit tag {unit!r}") from None
    return Quantity(float(value) * factor, dim)


def from_atomic(q: Quantity, unit: str) -> float:
    """Inverse of to_atomic; round-trips are exact to better than 1e-12."""
    from .errors import UnitsError

    if unit in _PASSTHROUGH_TAGS:
        return q.value
    if unit in _INTENSITY_TAGS:
        if q.dimension is not Dimension.FIELD:
            raise UnitsError("intensity tag expects a field-amplitude quantity")
        return q.value**2 * INTENSITY_AU_WCM2
    try:
        dim, factor = _LINEAR_TAGS[unit]
    except KeyError:
        raise UnitsError(f"unknown unit tag {unit!r}") from None
    if q.dimension is not dim:
        raise UnitsError(f"cannot express {q.dimension.value} in {unit!r}")
    return q.value / factor


def intensity_to_field(intensity_w_cm2: float) -> float:
    """Field amplitude in a.u. for a cycle-averaged intensity in W/cm^2."""
    return math.sqrt(intensity_w_cm2 / INTENSITY_AU_WCM2)


def field_to_intensity(field_au: float) -> float:
    return field_au**2 * INTENSITY_AU_WCM2


def rabi_frequency(field: Quantity, dipole_times_fc: Quantity) -> Quantity:
    """Coupling strength field * (dipole x Franck-Condon factor).

    A dimensionless dipole-FC product (bound-bound) yields an energy; an
    inverse-sqrt-energy product (continuum-bound) yields a sqrt-energy.
    """
    from .errors import UnitsError

    if field.dimension is not Dimension.FIELD:
        raise UnitsError("first operand must be a field amplitude")
    if dipole_times_fc.dimension is Dimension.DIMENSIONLESS:
        out_dim = Dimension.ENERGY
    elif dipole_times_fc.dimension is Dimension.INV_SQRT_ENERGY:
        out_dim = Dimension.SQRT_ENERGY
    else:
        raise UnitsError(
            "dipole*FC operand must be dimensionless (bound-bound) or "
            "inverse-sqrt-energy (continuum-bound)"
        )
    return Quantity(field.value * dipole_times_fc.value, out_dim)
