"""Drive-path waveforms, their straight references, signed areas and spectra.

All cyclic shapes start and end at E = 0, reach a maximum amplitude eps0
and are traversed at constant speed in the IQ plane, so the time spent on a
piece of the path is proportional to its arc length.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .core import ContractError, Orientation, PathSpec, Shape, Waveform

_TAU = 2.0 * np.pi


def _segments(shape: Shape, sign: int) -> list[tuple]:
    """Unit-amplitude geometry. Lines are ("line", p0, p1); arcs are
    ("arc", center, radius, start_angle, signed_sweep)."""
    if shape is Shape.CIRCLE:
        return [("arc", 0.5, 0.5, np.pi, sign * _TAU)]
    if shape is Shape.SEMICIRCLE:
        # ccw: lower arc out to 1, straight back along the real axis
        return [("arc", 0.5, 0.5, np.pi, sign * np.pi), ("line", 1.0 + 0j, 0j)]
    if shape is Shape.SQUARE:
        corners = [0j, 0.5 - 0.5j * sign, 1.0 + 0j, 0.5 + 0.5j * sign, 0j]
        return [("line", a, b) for a, b in zip(corners[:-1], corners[1:])]
    if shape is Shape.FIGURE_EIGHT:
        # half of the left lobe, the whole right lobe the other way round,
        # then the remaining half of the left lobe
        return [
            ("arc", 0.25, 0.25, np.pi, sign * np.pi),
            ("arc", 0.75, 0.25, np.pi, -sign * _TAU),
            ("arc", 0.25, 0.25, np.pi + sign * np.pi, sign * np.pi),
        ]
    raise ValueError(f"{shape} is not a piecewise shape")


def _segment_length(seg) -> float:
    if seg[0] == "line":
        return abs(seg[2] - seg[1])
    return seg[2] * abs(seg[4])


def _segment_point(seg, u: np.ndarray) -> np.ndarray:
    if seg[0] == "line":
        return seg[1] + (seg[2] - seg[1]) * u
    _, center, radius, start, sweep = seg
    return center + radius * np.exp(1j * (start + sweep * u))


@dataclass(frozen=True)
class PathEnvelope:
    """Exact continuous envelope E(t) for a :class:`PathSpec`."""

    spec: PathSpec

    @cached_property
    def _geometry(self):
        segs = _segments(self.spec.shape, self.spec.orientation.sign)
        lengths = np.array([_segment_length(s) for s in segs])
        bounds = np.concatenate([[0.0], np.cumsum(lengths)]) / lengths.sum()
        return segs, bounds

    def __call__(self, t) -> np.ndarray:
        spec = self.spec
        s = np.clip(np.asarray(t, dtype=float) / spec.duration, 0.0, 1.0)
        if spec.shape is Shape.STRAIGHT:
            out = spec.eps0 * np.sin(np.pi * s) + 0j
        else:
            segs, bounds = self._geometry
            idx = np.clip(np.searchsorted(bounds, s, side="right") - 1, 0, len(segs) - 1)
            out = np.empty(s.shape, dtype=complex)
            for i, seg in enumerate(segs):
                mask = idx == i
                if np.any(mask):
                    u = (s[mask] - bounds[i]) / (bounds[i + 1] - bounds[i])
                    out[mask] = spec.eps0 * _segment_point(seg, u)
        # cyclic pulses start and end exactly at zero
        out[(s <= 0.0) | (s >= 1.0)] = 0.0
        return out


@dataclass(frozen=True)
class ModulusEnvelope:
    inner: object

    def __call__(self, t):
        return np.abs(self.inner(t)) + 0j


def make_path(spec: PathSpec) -> Waveform:
    """Sample the drive envelope described by ``spec``.

    Circle (ccw) is E(t) = (eps0/2)(1 - exp(2 pi i t/T)); cw is its complex
    conjugate. Straight is eps0 sin(pi t/T) on the real axis. Semicircle,
    square (a diamond with diagonal eps0) and figure-eight are built from
    arcs and lines through 0 and eps0 and traversed at constant speed.
    """
    env = PathEnvelope(spec)
    dt = spec.duration / spec.samples
    times = np.arange(spec.samples + 1) * dt
    times[-1] = spec.duration
    return Waveform(dt, env(times), env)


def straight_reference(w: Waveform) -> Waveform:
    """Same amplitude profile as ``w`` with the drive phase held at zero."""
    env = w.envelope
    if env is not None and not isinstance(env, ModulusEnvelope):
        env = ModulusEnvelope(env)
    return Waveform(w.dt, np.abs(w.values), env)


class ClosedContour:
    """Closed polyline in the complex plane (last vertex equals the first)."""

    def __init__(self, vertices):
        vertices = np.asarray(vertices, dtype=complex).ravel()
        if vertices.size < 2 or vertices[0] != vertices[-1]:
            raise ContractError("contour is not closed: first and last vertex differ")
        self.vertices = vertices

    @classmethod
    def from_points(cls, points) -> "ClosedContour":
        points = np.asarray(points, dtype=complex).ravel()
        if points.size and points[0] != points[-1]:
            points = np.append(points, points[0])
        return cls(points)

    @classmethod
    def from_waveform(cls, w: Waveform) -> "ClosedContour":
        return cls.from_points(w.values)

    def __len__(self):
        return self.vertices.size


def signed_area(c) -> float:
    """Orientation-signed enclosed area, counterclockwise positive.

    Shoelace formula A = 1/2 sum Im(conj(z_k) z_{k+1}). Contours with fewer
    than three distinct vertices enclose nothing and return 0.
    """
    if not isinstance(c, ClosedContour):
        c = ClosedContour(c)
    z = c.vertices
    if np.unique(z).size < 3:
        return 0.0
    return 0.5 * float(np.sum(np.imag(np.conj(z[:-1]) * z[1:])))


def drive_spectrum(w: Waveform, lab: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Discrete Fourier series of E(t) over one pulse period [0, T).

    Returns ``(offsets, amplitudes)`` sorted by offset, where amplitude c_j
    multiplies exp(+i offset_j t) in the envelope. With the drive written as
    E(t) exp(-i omega t) in the lab, an envelope component exp(+i W t) sits at
    lab frequency omega - W; ``lab=True`` returns those lab-frame offsets
    (-W) instead, so a clockwise circle shows weight at +2 pi/T.
    """
    samples = np.asarray(w.values[:-1])
    m = samples.size
    amps = np.fft.fftshift(np.fft.fft(samples) / m)
    offsets = np.fft.fftshift(np.fft.fftfreq(m, d=w.dt)) * _TAU
    if lab:
        offsets, amps = -offsets[::-1], amps[::-1]
    return offsets, amps


def dominant_components(w: Waveform, count: int = 2, lab: bool = False) -> list[tuple[float, complex]]:
    """The ``count`` largest spectral components, strongest first."""
    offsets, amps = drive_spectrum(w, lab=lab)
    order = np.argsort(-np.abs(amps), kind="stable")[:count]
    return [(float(offsets[i]), complex(amps[i])) for i in order]


def write_waveform_csv(w: Waveform, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_ns", "eps_I", "eps_Q"])
        for t, e in zip(w.times, w.values):
            writer.writerow([repr(float(t)), repr(float(e.real)), repr(float(e.imag))])


def read_waveform_csv(path) -> Waveform:
    """Load a waveform written by :func:`write_waveform_csv`.

    The result has no analytic envelope, so integrators interpolate linearly
    between samples.
    """
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    steps = np.diff(t)
    if steps.size == 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ContractError("waveform CSV must be uniformly sampled")
    return Waveform(float(t[-1] / (t.size - 1)), data[:, 1] + 1j * data[:, 2])


def circle_spec(orientation=Orientation.CCW, **kw) -> PathSpec:
    return PathSpec(Shape.CIRCLE, orientation, **kw)
