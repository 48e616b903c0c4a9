"""Uniform-grid tabulated functions."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values tabulated at ``x0 + k*h``, linearly interpolated between nodes."""

    x0: float
    h: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if not np.iscomplexobj(values):
            values = values.astype(float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("GridFunction needs a 1-d array of at least 2 values")
        if not self.h > 0:
            raise ValueError(f"grid step must be positive, got {self.h}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "h", float(self.h))

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.values.size)

    @property
    def x_max(self) -> float:
        return self.x0 + self.h * (self.values.size - 1)

    def __len__(self):
        return self.values.size

    def __call__(self, t):
        """Evaluate by linear interpolation; zero outside the tabulated range."""
        t = np.asarray(t, dtype=float)
        if np.iscomplexobj(self.values):
            re = np.interp(t, self.x, self.values.real, left=0.0, right=0.0)
            im = np.interp(t, self.x, self.values.imag, left=0.0, right=0.0)
            out = re + 1j * im
        else:
            out = np.interp(t, self.x, self.values, left=0.0, right=0.0)
        return out if out.ndim else out.item()

    def index_of(self, t: float) -> int:
        """Nearest node index to ``t``."""
        return int(round((t - self.x0) / self.h))

    def integral(self) -> float:
        return float(np.trapezoid(self.values, dx=self.h))

    def to_csv(self, header=("x", "value")) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for xi, vi in zip(self.x, self.values):
            w.writerow([repr(float(xi)), repr(float(vi))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"x0": self.x0, "h": self.h, "f": [float(v) for v in self.values]}

    @classmethod
    def from_dict(cls, obj: dict) -> "GridFunction":
        try:
            return cls(float(obj["x0"]), float(obj["h"]), np.asarray(obj["f"], dtype=float))
        except KeyError as exc:
            raise ValueError(f"grid literal missing field {exc}") from None
