"""Units, physical parameters and the value types shared by every module.

Conventions: hbar = 1, energies are angular frequencies in rad/ns and times
are in ns. Frequencies quoted as f = omega/2pi in MHz are converted with
:func:`to_angular`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np


class GeomPhaseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GeomPhaseError):
    """Malformed or incomplete configuration document."""


class ValidationError(GeomPhaseError, ValueError):
    """A parameter violates a documented invariant."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class ContractError(GeomPhaseError, ValueError):
    """A caller broke an operation's precondition."""


class NumericError(GeomPhaseError, ArithmeticError):
    """Integration produced non-finite or otherwise unusable numbers."""


def to_angular(f_mhz):
    """Convert a cyclic frequency in MHz to an angular frequency in rad/ns."""
    return 2.0 * math.pi * 1e-3 * f_mhz if np.isscalar(f_mhz) else 2.0 * np.pi * 1e-3 * np.asarray(f_mhz)


def to_mhz(omega):
    """Inverse of :func:`to_angular`."""
    return omega / (2.0 * math.pi * 1e-3)


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of one simulated setup (all rad/ns).

    ``delta`` is the drive-resonator detuning for the qubit ground state,
    ``chi`` the dispersive half-shift, so the excited-state branch sees
    ``delta + 2*chi``.
    """

    delta: float
    chi: float = to_angular(-1.0)
    kappa: float = 0.0

    def __post_init__(self):
        for name in ("delta", "chi", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite", field=name)
        if self.delta == 0.0:
            raise ValidationError("delta must be non-zero (adiabatic response diverges)", field="delta")
        if self.delta + 2.0 * self.chi == 0.0:
            raise ValidationError("delta + 2*chi must be non-zero", field="chi")
        if self.kappa < 0.0:
            raise ValidationError("kappa must be >= 0", field="kappa")

    @property
    def delta_g(self) -> float:
        return self.delta

    @property
    def delta_e(self) -> float:
        return self.delta + 2.0 * self.chi

    def branch_detunings(self) -> tuple[float, float]:
        return self.delta_g, self.delta_e

    def flipped(self) -> "SystemParams":
        """Parameters with (delta, chi) -> (-delta, -chi)."""
        return SystemParams(-self.delta, -self.chi, self.kappa)

    def as_mhz(self) -> dict:
        return {
            "delta_mhz": to_mhz(self.delta),
            "chi_mhz": to_mhz(self.chi),
            "kappa_mhz": to_mhz(self.kappa),
        }


class Shape(str, Enum):
    CIRCLE = "circle"
    SEMICIRCLE = "semicircle"
    SQUARE = "square"
    FIGURE_EIGHT = "figure8"
    STRAIGHT = "straight"

    @classmethod
    def parse(cls, value) -> "Shape":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"figureeight": "figure8", "eight": "figure8", "semi": "semicircle"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(f"unknown shape {value!r}", field="shape") from None


class Orientation(str, Enum):
    CCW = "ccw"
    CW = "cw"

    @classmethod
    def parse(cls, value) -> "Orientation":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(f"unknown orientation {value!r}", field="orientation") from None

    @property
    def sign(self) -> int:
        return 1 if self is Orientation.CCW else -1

    def reversed(self) -> "Orientation":
        return Orientation.CW if self is Orientation.CCW else Orientation.CCW


@dataclass(frozen=True)
class PathSpec:
    """Parametric description of one drive pulse in the IQ plane."""

    shape: Shape
    orientation: Orientation = Orientation.CCW
    eps0: float = to_angular(370.0)
    duration: float = 300.0
    samples: int = 512

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape.parse(self.shape))
        object.__setattr__(self, "orientation", Orientation.parse(self.orientation))
        if not (math.isfinite(self.eps0) and self.eps0 >= 0.0):
            raise ValidationError("eps0 must be finite and >= 0", field="eps0")
        if not (math.isfinite(self.duration) and self.duration > 0.0):
            raise ValidationError("duration must be > 0", field="duration")
        if int(self.samples) != self.samples or self.samples < 16:
            raise ValidationError("samples must be an integer >= 16", field="samples")
        object.__setattr__(self, "samples", int(self.samples))

    def replace(self, **changes) -> "PathSpec":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class Waveform:
    """Sampled complex drive envelope E(t) = eps_I + i eps_Q on a uniform grid.

    ``values[k]`` is E(k*dt) for k = 0..M. If ``envelope`` is given it is the
    exact continuous envelope (a picklable callable of a time array) and is
    used by the integrators between grid points; otherwise E(t) is the
    piecewise-linear interpolant of the samples.
    """

    dt: float
    values: np.ndarray
    envelope: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.ndim != 1 or values.size < 2:
            raise ValidationError("waveform needs at least two samples", field="values")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValidationError("dt must be > 0", field="dt")
        if not np.all(np.isfinite(values)):
            raise ValidationError("waveform samples must be finite", field="values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def steps(self) -> int:
        return self.values.size - 1

    @property
    def duration(self) -> float:
        return self.steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.dt

    @property
    def is_cyclic(self) -> bool:
        return self.values[0] == 0 and self.values[-1] == 0

    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.values)))

    def at(self, t) -> np.ndarray:
        """Evaluate E at arbitrary times in [0, duration]."""
        t = np.asarray(t, dtype=float)
        if self.envelope is not None:
            return np.asarray(self.envelope(t), dtype=complex)
        grid = self.times
        return np.interp(t, grid, self.values.real) + 1j * np.interp(t, grid, self.values.imag)

    def scaled(self, c: float) -> "Waveform":
        env = None if self.envelope is None else ScaledEnvelope(self.envelope, c)
        return Waveform(self.dt, c * self.values, env)


@dataclass(frozen=True)
class ScaledEnvelope:
    inner: Callable
    factor: complex

    def __call__(self, t):
        return self.factor * self.inner(t)
