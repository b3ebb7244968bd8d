"""Physical scales and the natural unit system.

All formulas in sedlab are written in Gaussian electrostatic form
(``tau = 2 e^2 / 3 m c^3``).  When working with SI mechanical units the
charge must therefore be supplied as ``q / sqrt(4 pi eps0)`` (units of
``sqrt(J m)``); :data:`ELECTRON_CHARGE_G` is the electron value.

Natural units set ``hbar = m = omega0 = 1``.  Only the combination
``e^2 / c^3`` enters the dynamics, so :func:`natural_scale` fixes ``c = 1`` by
default and derives the charge from the dimensionless damping
``epsilon = tau * omega0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from scipy import constants as _const

from .errors import NonPositiveInput, StrongCouplingOutOfScope

#: Upper bound on ``tau * omega0`` (weak-coupling regime).
MAX_EPSILON = 0.1

ELECTRON_CHARGE_G = _const.e / math.sqrt(4 * math.pi * _const.epsilon_0)
ELECTRON_MASS = _const.m_e
SPEED_OF_LIGHT = _const.c
HBAR = _const.hbar


class UnitSystem(enum.Enum):
    NATURAL = "natural"
    SI = "si"


# (mass, length, time) exponents; charge is Gaussian, M^1/2 L^3/2 T^-1.
DIMENSIONS = {
    "mass": (1, 0, 0),
    "length": (0, 1, 0),
    "time": (0, 0, 1),
    "frequency": (0, 0, -1),
    "velocity": (0, 1, -1),
    "momentum": (1, 1, -1),
    "energy": (1, 2, -2),
    "power": (1, 2, -3),
    "action": (1, 2, -1),
    "charge": (0.5, 1.5, -1),
    "field": (0.5, -0.5, -1),
    "energy_density": (1, -1, -2),
}


@dataclass(frozen=True)
class PhysicalScale:
    """Constants of one simulated system.

    ``tau`` is derived from the charge, mass and ``c`` on every access and is
    never stored.
    """

    hbar: float
    mass: float
    charge: float
    c: float
    omega0: float
    system: UnitSystem = UnitSystem.NATURAL

    def __post_init__(self):
        for name in ("hbar", "mass", "charge", "c", "omega0"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise NonPositiveInput(f"{name} must be positive and finite, got {value!r}")
        if self.epsilon >= MAX_EPSILON:
            raise StrongCouplingOutOfScope(
                f"tau*omega0 = {self.epsilon:.3g} >= {MAX_EPSILON}; weak coupling required"
            )

    @property
    def tau(self) -> float:
        return 2.0 * self.charge**2 / (3.0 * self.mass * self.c**3)

    @property
    def epsilon(self) -> float:
        return self.tau * self.omega0

    @property
    def gamma(self) -> float:
        """Energy decay rate ``tau * omega0**2`` of the order-reduced oscillator."""
        return self.tau * self.omega0**2

    @property
    def length_unit(self) -> float:
        return math.sqrt(self.hbar / (self.mass * self.omega0))

    def unit_of(self, quantity: str) -> float:
        """Size of the natural unit of ``quantity`` expressed in this scale's units."""
        try:
            a, b, t = DIMENSIONS[quantity]
        except KeyError:
            raise KeyError(f"unknown quantity {quantity!r}; known: {sorted(DIMENSIONS)}") from None
        return self.mass**a * self.length_unit**b * (1.0 / self.omega0) ** t

    def to_natural(self, value, quantity: str):
        return value / self.unit_of(quantity)

    def from_natural(self, value, quantity: str):
        return value * self.unit_of(quantity)

    def natural(self) -> "PhysicalScale":
        """The same physical system re-expressed with ``hbar = m = omega0 = 1``."""
        if self.system is UnitSystem.NATURAL and self.hbar == self.mass == self.omega0 == 1.0:
            return self
        return PhysicalScale(
            hbar=1.0,
            mass=1.0,
            charge=self.to_natural(self.charge, "charge"),
            c=self.to_natural(self.c, "velocity"),
            omega0=1.0,
            system=UnitSystem.NATURAL,
        )

    def with_charge(self, charge: float) -> "PhysicalScale":
        return replace(self, charge=charge)

    def as_dict(self) -> dict:
        return {
            "hbar": self.hbar,
            "mass": self.mass,
            "charge": self.charge,
            "c": self.c,
            "omega0": self.omega0,
            "tau": self.tau,
            "epsilon": self.epsilon,
            "system": self.system.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhysicalScale":
        return cls(
            hbar=float(d["hbar"]),
            mass=float(d["mass"]),
            charge=float(d["charge"]),
            c=float(d["c"]),
            omega0=float(d["omega0"]),
            system=UnitSystem(d.get("system", "natural")),
        )


def make_scale(charge, mass, c, omega0, hbar=1.0, system=UnitSystem.NATURAL) -> PhysicalScale:
    """Build a :class:`PhysicalScale`, computing ``tau = 2 e^2 / 3 m c^3``.

    Raises
    ------
    NonPositiveInput
        If any input is zero, negative or non-finite.
    StrongCouplingOutOfScope
        If ``tau * omega0 >= 0.1``.
    """
    return PhysicalScale(
        hbar=float(hbar),
        mass=float(mass),
        charge=float(charge),
        c=float(c),
        omega0=float(omega0),
        system=UnitSystem(system),
    )


def natural_scale(epsilon=1e-3, c=1.0) -> PhysicalScale:
    """Natural-unit scale (``hbar = m = omega0 = 1``) with ``tau = epsilon``."""
    if not epsilon > 0:
        raise NonPositiveInput(f"epsilon must be positive, got {epsilon!r}")
    charge = math.sqrt(1.5 * epsilon * c**3)
    return make_scale(charge=charge, mass=1.0, c=c, omega0=1.0, hbar=1.0)


def electron_scale(omega0) -> PhysicalScale:
    """An electron bound with angular frequency ``omega0`` [rad/s], SI mechanical units."""
    return make_scale(
        charge=ELECTRON_CHARGE_G,
        mass=ELECTRON_MASS,
        c=SPEED_OF_LIGHT,
        omega0=omega0,
        hbar=HBAR,
        system=UnitSystem.SI,
    )


def dissipation_time(scale: PhysicalScale) -> float:
    """Relaxation time ``1 / (tau omega0^2)`` of the undriven, damped oscillator."""
    return 1.0 / scale.gamma
