"""Measured quantities: Ramsey phases, geometric-phase extraction, fits,
sweep tables."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .core import ContractError, GeomPhaseError, PathSpec, Shape, SystemParams, Waveform
from .dynamics import CoherenceResult, coherence, evolve_joint
from .paths import make_path, straight_reference

CSV_MAGIC = "# geomphase v1"


class FitError(GeomPhaseError, ValueError):
    pass


def measured_phase(w: Waveform, p: SystemParams) -> CoherenceResult:
    """Ramsey measurement of the qubit after the drive cycle.

    x = Re C and y = Im C are the two Bloch projections obtained with the
    second pi/2 pulse in phase and shifted by pi/2.
    """
    return coherence(*evolve_joint(w, p))


def geometric_phase_measured(spec: PathSpec, p: SystemParams) -> float:
    """Geometric phase as (phase of shaped path) - (phase of its straight reference).

    The value is arg(C_shape / C_straight); of its 2 pi images the one
    closest to the continuously tracked phase difference is returned.
    """
    if spec.shape is Shape.STRAIGHT:
        raise ContractError("geometric phase needs an area-enclosing shape, not Straight")
    w = make_path(spec)
    shaped = measured_phase(w, p)
    straight = measured_phase(straight_reference(w), p)
    wrapped = float(np.angle(shaped.C / straight.C)) if shaped.R > 0 and straight.R > 0 else 0.0
    tracked = shaped.phase - straight.phase
    return wrapped + 2 * math.pi * round((tracked - wrapped) / (2 * math.pi))


def unwrap_phase(series) -> np.ndarray:
    """Add multiples of 2 pi so that consecutive phases differ by less than pi."""
    return np.unwrap(np.asarray(series, dtype=float))


@dataclass(frozen=True)
class FitResult:
    names: tuple
    coefficients: np.ndarray
    rms_residual: float
    r_squared: float
    basis: str = ""

    def __getitem__(self, name):
        return float(self.coefficients[self.names.index(name)])

    def as_dict(self) -> dict:
        return {n: float(c) for n, c in zip(self.names, self.coefficients)}


def _normal_equations(design: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least squares via the normal equations, with column equilibration."""
    scale = np.max(np.abs(design), axis=0)
    if np.any(scale == 0):
        raise FitError("design matrix has an all-zero column")
    a = design / scale
    gram = a.T @ a
    if np.linalg.cond(gram) > 1e14:
        raise FitError("fit is rank deficient (points too few or too close)")
    coef = np.linalg.solve(gram, a.T @ y) / scale
    return coef, y - design @ coef


def _quality(y, resid) -> tuple[float, float]:
    rms = float(np.sqrt(np.mean(resid**2)))
    spread = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / spread if spread > 0 else 1.0
    return rms, r2


def fit_inverse_T(points, order: int = 2) -> FitResult:
    """Fit gamma(T) = g_inf + a/T (+ b/T^2); ``result["gamma_inf"]`` is the T -> inf limit."""
    if order not in (1, 2):
        raise FitError("order must be 1 or 2")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < order + 2:
        raise FitError(f"need at least {order + 2} (T, gamma) points")
    T, y = pts[:, 0], pts[:, 1]
    if np.unique(T).size != T.size or np.any(T <= 0):
        raise FitError("durations must be positive and distinct")
    design = np.column_stack([np.ones_like(T)] + [T ** -k for k in range(1, order + 1)])
    coef, resid = _normal_equations(design, y)
    names = ("gamma_inf", "inv_T", "inv_T2")[: order + 1]
    return FitResult(names, coef, *_quality(y, resid), basis="1, 1/T" + (", 1/T^2" if order == 2 else ""))


def fit_gaussian_R(points) -> FitResult:
    """Fit R = R0 exp(-c eps0^2) by linear regression of log R on eps0^2."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise FitError("need at least 3 (eps0, R) points")
    eps, r = pts[:, 0], pts[:, 1]
    if np.any(r <= 0) or np.any(r > 1):
        raise FitError("R values must lie in (0, 1]")
    y = np.log(r)
    design = np.column_stack([np.ones_like(eps), -(eps**2)])
    coef, resid = _normal_equations(design, y)
    rms, r2 = _quality(y, resid)
    return FitResult(("R0", "c"), np.array([math.exp(coef[0]), coef[1]]), rms, r2, basis="log R = log R0 - c eps0^2")


def fit_line(x, y) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.unique(x).size < 2:
        raise FitError("need at least 2 distinct x values")
    coef, resid = _normal_equations(np.column_stack([np.ones_like(x), x]), y)
    return FitResult(("intercept", "slope"), coef, *_quality(y, resid), basis="1, x")


@dataclass(frozen=True)
class Extrema:
    times: np.ndarray
    sparse: bool = False

    def spacings(self) -> np.ndarray:
        return np.diff(self.times)

    def __len__(self):
        return self.times.size


def find_R_extrema(points, period: float | None = None) -> Extrema:
    """Local maxima of R(T) by three-point comparison.

    A plateau of equal values counts once, at its leftmost point. If
    ``period`` is given and the grid has fewer than 8 points per period,
    ``sparse`` is set.
    """
    pts = np.asarray(points, dtype=float)
    T, r = pts[:, 0], pts[:, 1]
    # collapse plateaus to their leftmost index
    starts = np.concatenate([[0], np.nonzero(np.diff(r) != 0)[0] + 1])
    vals = r[starts]
    found = [starts[i] for i in range(1, len(vals) - 1) if vals[i] > vals[i - 1] and vals[i] > vals[i + 1]]
    sparse = False
    if period is not None and T.size > 1:
        sparse = bool(np.max(np.diff(T)) > abs(period) / 8)
    return Extrema(T[np.array(found, dtype=int)], sparse)


@dataclass
class SweepTable:
    """One figure panel's worth of results.

    ``variable`` names the independent column; ``columns`` maps output names
    to arrays of the same length; ``units`` maps any column name to a unit
    string used in the CSV header.
    """

    variable: str
    values: np.ndarray
    columns: dict = field(default_factory=dict)
    units: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        for name, col in list(self.columns.items()):
            self.add(name, col, self.units.get(name))

    def add(self, name, column, unit=None):
        column = np.asarray(column, dtype=float)
        if column.shape != self.values.shape:
            raise ContractError(f"column {name!r} has {column.size} rows, expected {self.values.size}")
        self.columns[name] = column
        if unit:
            self.units[name] = unit

    def __len__(self):
        return self.values.size

    def __getitem__(self, name):
        return self.values if name == self.variable else self.columns[name]

    def validate(self, monotone: bool = True) -> None:
        if monotone and self.values.size > 1 and not (
            np.all(np.diff(self.values) > 0) or np.all(np.diff(self.values) < 0)
        ):
            raise ContractError(f"independent variable {self.variable!r} is not monotone")
        for name, col in self.columns.items():
            if not np.all(np.isfinite(col)):
                raise ContractError(f"column {name!r} has missing or non-finite cells")

    def header(self) -> list[str]:
        def label(name):
            unit = self.units.get(name)
            return f"{name} [{unit}]" if unit else name

        return [label(self.variable)] + [label(n) for n in self.columns]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_MAGIC + "\n")
        buf.write("# config: " + json.dumps(self.metadata, sort_keys=True, default=_jsonable) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        cols = [self.values] + list(self.columns.values())
        for row in zip(*cols):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "format": CSV_MAGIC.lstrip("# "),
            "metadata": self.metadata,
            "variable": self.variable,
            "units": self.units,
            "columns": {self.variable: self.values.tolist(), **{k: v.tolist() for k, v in self.columns.items()}},
        }
        return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SweepTable":
        lines = text.splitlines()
        if not lines or lines[0] != CSV_MAGIC:
            raise ContractError("not a geomphase v1 CSV file")
        metadata = {}
        body = []
        for line in lines[1:]:
            if line.startswith("# config: "):
                metadata = json.loads(line[len("# config: "):])
            elif not line.startswith("#"):
                body.append(line)
        rows = list(csv.reader(body))
        names, units = [], {}
        for cell in rows[0]:
            name, _, unit = cell.partition(" [")
            names.append(name)
            if unit:
                units[name] = unit.rstrip("]")
        data = np.array(rows[1:], dtype=float).reshape(-1, len(names))
        columns = {n: data[:, i + 1] for i, n in enumerate(names[1:])}
        return cls(names[0], data[:, 0], columns, units, metadata)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def code_version() -> str:
    return __version__
