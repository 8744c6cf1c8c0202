"""External bias f(t), i.e. the linear potential V(x, t) = -x f(t)."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Tuple

import numpy as np

__all__ = ["ForceKind", "ForceSpec"]


class ForceKind(str, enum.Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    SINUSOID = "sinusoid"
    PIECEWISE = "piecewise"


@dataclass(frozen=True)
class ForceSpec:
    """A time-dependent, position-independent force.

    ``constant``: f = f0.  ``sinusoid``: f = amplitude * sin(omega t + phase).
    ``piecewise``: f = values[k] on [breakpoints[k-1], breakpoints[k]), with
    ``len(values) == len(breakpoints) + 1``.
    """

    kind: ForceKind = ForceKind.ZERO
    f0: float = 0.0
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    breakpoints: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ForceKind(self.kind))
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind is ForceKind.PIECEWISE:
            if np.any(np.diff(self.breakpoints) <= 0):
                raise ValueError("breakpoints must be strictly increasing")
            if len(self.values) != len(self.breakpoints) + 1:
                raise ValueError("piecewise force needs len(values) == len(breakpoints) + 1")

    @classmethod
    def zero(cls):
        return cls(ForceKind.ZERO)

    @classmethod
    def constant(cls, f0):
        return cls(ForceKind.CONSTANT, f0=f0)

    @classmethod
    def sinusoid(cls, amplitude, omega, phase=0.0):
        return cls(ForceKind.SINUSOID, amplitude=amplitude, omega=omega, phase=phase)

    @classmethod
    def piecewise(cls, breakpoints, values):
        return cls(ForceKind.PIECEWISE, breakpoints=tuple(breakpoints), values=tuple(values))

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        kind = ForceKind(d.pop("kind", "zero"))
        return cls(kind, **d)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind is ForceKind.ZERO:
            return np.zeros_like(t)
        if self.kind is ForceKind.CONSTANT:
            return np.full_like(t, self.f0)
        if self.kind is ForceKind.SINUSOID:
            return self.amplitude * np.sin(self.omega * t + self.phase)
        idx = np.searchsorted(np.asarray(self.breakpoints), t, side="right")
        return np.asarray(self.values)[idx]

    @property
    def is_zero(self) -> bool:
        return self.kind is ForceKind.ZERO
