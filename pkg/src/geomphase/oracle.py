"""Brute-force cross-check in a truncated number-state basis.

The driven oscillator is integrated as a plain Schrodinger equation for a
vector of Fock amplitudes, with no use of the coherent-state structure, and
the result is compared with the coherent-state solver.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import GeomPhaseError, SystemParams, ValidationError, Waveform
from .dynamics import coherence, evolve_branch, substeps_for

NORM_TOLERANCE = 1e-6
TAIL_TOLERANCE = 1e-8
# RK4 step bound for the full Fock generator, h * ||H|| <= this
FOCK_PHASE_STEP = 0.2


class OracleError(GeomPhaseError):
    """The oracle run cannot be trusted (truncation, step size, config)."""


class TruncationError(OracleError):
    pass


def truncation_size(n_max: float) -> int:
    """Smallest basis size N with N >= n + 8 sqrt(n) + 10."""
    n_max = max(0.0, float(n_max))
    return int(math.ceil(n_max + 8.0 * math.sqrt(n_max) + 10.0))


@dataclass(frozen=True, eq=False)
class FockState:
    amplitudes: np.ndarray

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def tail_population(self) -> float:
        """Population of the top three levels (truncation certificate)."""
        return float(np.sum(np.abs(self.amplitudes[-3:]) ** 2))

    def mean_number(self) -> float:
        return float(np.sum(np.arange(self.dim) * np.abs(self.amplitudes) ** 2))

    def overlap(self, other: "FockState") -> complex:
        """<self|other>."""
        if other.dim != self.dim:
            raise ValidationError("states live in different truncations", field="dim")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def coherent_vector(alpha: complex, N: int) -> FockState:
    """Coherent state |alpha> in an N-level truncation."""
    n_photons = abs(alpha) ** 2
    if N < n_photons + 8.0 * math.sqrt(n_photons) + 10.0:
        raise TruncationError(f"N={N} too small for |alpha|^2={n_photons:.3g}; need {truncation_size(n_photons)}")
    c = np.empty(N, dtype=complex)
    c[0] = math.exp(-0.5 * n_photons)
    for n in range(N - 1):
        c[n + 1] = c[n] * alpha / math.sqrt(n + 1)
    return FockState(c)


def _apply_h(psi, delta_s, e, number, sqrt_up):
    # H psi with H = delta_s n + (E a^dag + E^* a)/2
    out = delta_s * number * psi
    out[1:] += 0.5 * e * sqrt_up * psi[:-1]
    out[:-1] += 0.5 * np.conj(e) * sqrt_up * psi[1:]
    return out


def default_truncation(w: Waveform, delta_s: float) -> int:
    # a-priori bound: twice the adiabatic amplitude covers ringing overshoot
    bound = w.max_amplitude() / abs(delta_s)
    return truncation_size(bound**2)


def evolve_fock(w: Waveform, delta_s: float, N: int | None = None, *,
                phase_step: float = FOCK_PHASE_STEP) -> FockState:
    """RK4 integration of i dpsi/dt = H psi from the vacuum.

    The step obeys the coherent solver's rule and additionally
    h * (|delta_s| (N-1) + max|E| sqrt(N-1)) <= ``phase_step``, a bound on
    h times the norm of the truncated Hamiltonian.
    """
    if delta_s == 0:
        raise ValidationError("detuning must be non-zero", field="delta_s")
    if N is None:
        N = default_truncation(w, delta_s)
    n_top = N - 1
    h_norm = abs(delta_s) * n_top + w.max_amplitude() * math.sqrt(n_top)
    sub = max(substeps_for(w, delta_s), math.ceil(w.dt * h_norm / phase_step))
    steps = w.steps * sub
    h = w.duration / steps
    t = np.arange(steps + 1) * h
    e_grid = w.at(t)
    e_mid = w.at(t[:-1] + 0.5 * h)

    number = np.arange(N, dtype=float)
    sqrt_up = np.sqrt(np.arange(1, N, dtype=float))
    psi = np.zeros(N, dtype=complex)
    psi[0] = 1.0
    tail = 0.0
    for j in range(steps):
        e0, em, e1 = e_grid[j], e_mid[j], e_grid[j + 1]
        k1 = -1j * _apply_h(psi, delta_s, e0, number, sqrt_up)
        k2 = -1j * _apply_h(psi + 0.5 * h * k1, delta_s, em, number, sqrt_up)
        k3 = -1j * _apply_h(psi + 0.5 * h * k2, delta_s, em, number, sqrt_up)
        k4 = -1j * _apply_h(psi + h * k3, delta_s, e1, number, sqrt_up)
        psi = psi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        tail = max(tail, float(np.sum(np.abs(psi[-3:]) ** 2)))

    state = FockState(psi)
    if not np.all(np.isfinite(psi)):
        raise OracleError("Fock integration produced non-finite amplitudes")
    if tail > TAIL_TOLERANCE:
        raise TruncationError(f"top-level population reached {tail:.2e} (limit {TAIL_TOLERANCE:g}) at N={N}")
    if abs(state.norm - 1.0) > NORM_TOLERANCE:
        raise OracleError(f"norm drift {abs(state.norm - 1.0):.2e} exceeds {NORM_TOLERANCE:g}; step too large")
    return state


def evolve_fock_auto(w: Waveform, delta_s: float, N: int | None = None, max_dim: int = 1024) -> FockState:
    """:func:`evolve_fock`, doubling the truncation until the certificate holds."""
    N = N or default_truncation(w, delta_s)
    while True:
        try:
            return evolve_fock(w, delta_s, N)
        except TruncationError:
            if 2 * N > max_dim:
                raise
            N *= 2


@dataclass(frozen=True)
class OracleReport:
    fidelity_g: float
    fidelity_e: float
    phase_residual_rad: float
    r_residual: float
    norm_drift: float
    n_truncation: int
    dt_ns: float

    def to_json(self, **extra) -> str:
        return json.dumps({**asdict(self), **extra}, indent=2, sort_keys=True)

    def passes(self, fidelity=0.999, phase=1e-3, r=1e-4, norm=NORM_TOLERANCE) -> bool:
        return (min(self.fidelity_g, self.fidelity_e) >= fidelity and self.phase_residual_rad <= phase
                and self.r_residual <= r and self.norm_drift <= norm)


def _wrap(x: float) -> float:
    return (x + math.pi) % (2 * math.pi) - math.pi


def oracle_compare(w: Waveform, p: SystemParams, N: int | None = None) -> OracleReport:
    """Run both qubit branches through both solvers and report the residuals.

    With ``N`` omitted the truncation is grown until the certificate holds.
    Fidelities compare each Fock state with exp(i theta)|alpha(T)> from the
    coherent solver; the phase and R residuals compare <psi_g|psi_e> with the
    coherent-state coherence.
    """
    if p.kappa != 0:
        raise OracleError("the Fock oracle is unitary; kappa must be 0")
    if N is None:
        N = max(default_truncation(w, p.delta_g), default_truncation(w, p.delta_e))
        fock = [evolve_fock_auto(w, d, N) for d in p.branch_detunings()]
        N = max(s.dim for s in fock)
        # both branches must share one basis for the overlap
        fock = [s if s.dim == N else evolve_fock(w, d, N) for s, d in zip(fock, p.branch_detunings())]
    else:
        fock = [evolve_fock(w, d, N) for d in p.branch_detunings()]
    fidelities, branches = [], []
    for delta_s, psi in zip(p.branch_detunings(), fock):
        traj = evolve_branch(w, delta_s)
        ansatz = coherent_vector(traj.final_alpha, N).amplitudes * np.exp(1j * traj.final_theta)
        fidelities.append(abs(np.vdot(ansatz, psi.amplitudes)))
        branches.append(traj)
    coh = coherence(*branches)
    c_fock = fock[0].overlap(fock[1])
    return OracleReport(
        fidelity_g=float(fidelities[0]),
        fidelity_e=float(fidelities[1]),
        phase_residual_rad=abs(_wrap(np.angle(c_fock) - coh.gamma)),
        r_residual=abs(abs(c_fock) - coh.R),
        norm_drift=max(abs(s.norm - 1.0) for s in fock),
        n_truncation=N,
        dt_ns=w.dt,
    )
