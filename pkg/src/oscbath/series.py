"""Time series containers and their CSV interchange formats."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

__all__ = ["MomentSeries", "Trajectory", "write_ensemble_csv"]


@dataclass(frozen=True)
class MomentSeries:
    """A mean position or mean-square displacement sampled on a time grid.

    CSV form: a ``# quantity=<q> scenario=<id> [key=value ...]`` line, a
    ``t,value`` header, then one row per time.
    """

    t: np.ndarray
    values: np.ndarray
    quantity: str
    scenario: str = ""
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape:
            raise ValueError(f"t and values differ in shape: {t.shape} vs {v.shape}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.t)

    def at(self, t: float) -> float:
        """Value at the grid node nearest to ``t``."""
        return float(self.values[int(np.argmin(np.abs(self.t - t)))])

    def header(self) -> str:
        parts = [f"quantity={self.quantity}", f"scenario={self.scenario or 'none'}"]
        parts += [f"{k}={v}" for k, v in self.meta.items()]
        return "# " + " ".join(parts)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w") as fh:
            fh.write(self.header() + "\n")
            fh.write("t,value\n")
            for t, v in zip(self.t.tolist(), self.values.tolist()):
                fh.write(f"{t!r},{v!r}\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "MomentSeries":
        with open(path) as fh:
            header = fh.readline()
            meta = dict(tok.split("=", 1) for tok in header.lstrip("#").split())
            data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
        quantity = meta.pop("quantity")
        scenario = meta.pop("scenario", "")
        return cls(data[:, 0], data[:, 1], quantity, scenario, meta)


@dataclass(frozen=True)
class Trajectory:
    """Particle sub-trajectory (t, x, xdot) of a microscopic simulation."""

    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    energy: Optional[np.ndarray] = None

    def to_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w") as fh:
            fh.write("t,x,xdot\n")
            cols = (np.asarray(a, dtype=float).tolist() for a in (self.t, self.x, self.xdot))
            for row in zip(*cols):
                fh.write("{!r},{!r},{!r}\n".format(*row))
        return path

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2])


def write_ensemble_csv(path, t, mean, stderr, msd) -> Path:
    """Ensemble statistics as ``t,mean,stderr,msd``."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("t,mean,stderr,msd\n")
        for row in zip(t, mean, stderr, msd):
            fh.write("{!r},{!r},{!r},{!r}\n".format(*map(float, row)))
    return path
