"""Finite-time evolution around a parameter loop.

Each step propagates exactly under the Hamiltonian frozen at the step
midpoint, ``psi <- V exp(-i w dt / hbar) V^dag psi`` with ``H = V w V^dag``,
so the scheme is unitary to rounding and second order in ``dt``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bdg import ParamPoint
from .errors import BasisDiscontinuity, NonHermitianGenerator, OverlapVanishes
from .holonomy import wrap
from .lattice import build_lattice, near_zero_eigenpairs, zero_mode_numeric

HERMITIAN_TOL = 1e-10
OVERLAP_FLOOR = 1e-6
CONTINUITY_FLOOR = 0.5


@dataclass(frozen=True)
class Schedule:
    """``n_steps`` equal steps of a loop traversed in total time ``T``.

    ``curve`` maps the fraction ``s`` in [0, 1] to a parameter point and
    must satisfy ``curve(0) == curve(1)`` for a closed loop.
    """

    T: float
    n_steps: int
    curve: Callable[[float], ParamPoint]

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError("total time T must be positive")
        if self.n_steps < 10:
            raise ValueError("n_steps must be at least 10")

    @classmethod
    def alpha_loop(cls, theta: float, T: float, n_steps: int, alpha0: float = 0.0) -> "Schedule":
        return cls(T, n_steps, lambda s: ParamPoint(theta, alpha0 + 2 * math.pi * s))

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    def point(self, t: float) -> ParamPoint:
        return self.curve(t / self.T)

    def refined(self, factor: int = 2) -> "Schedule":
        return Schedule(self.T, self.n_steps * factor, self.curve)


@dataclass(frozen=True, eq=False)
class EvolutionReport:
    phi_total: float
    phi_u: float
    phi_v: float
    overlap_mag: float
    unitarity_drift: float
    dynamical: float
    final: np.ndarray
    n_steps: int

    def as_dict(self) -> dict:
        return {
            "phi_total": self.phi_total,
            "phi_u": self.phi_u,
            "phi_v": self.phi_v,
            "overlap_mag": self.overlap_mag,
            "unitarity_drift": self.unitarity_drift,
            "dynamical": self.dynamical,
            "n_steps": self.n_steps,
        }


@dataclass(frozen=True, eq=False)
class OverlapProduct:
    factors: np.ndarray
    omega_log: complex
    value: complex

    @property
    def phase(self) -> float:
        return cmath.phase(self.value) if self.value != 0 else math.nan


def _as_matrix(H) -> np.ndarray:
    return np.asarray(getattr(H, "matrix", H))


def _checked_eigh(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scale = max(1.0, float(np.abs(H).max()))
    if np.abs(H - H.conj().T).max() > HERMITIAN_TOL * scale:
        raise NonHermitianGenerator("Hamiltonian is not Hermitian at a step midpoint")
    return np.linalg.eigh(H)


def _split(vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Electron and hole-sector components of a site-major 4-component vector."""
    v = vec.reshape(-1, 4)
    return v[:, :2].ravel(), (v[:, 2:] * np.array([1.0, -1.0])).ravel()


def _phase_of(a: np.ndarray, b: np.ndarray) -> float:
    z = np.vdot(a, b)
    return cmath.phase(z) if abs(z) > 0 else math.nan


def relative_phases(psi0: np.ndarray, psi: np.ndarray) -> tuple[float, float, float, float]:
    """``(phi_total, phi_u, phi_v, |<psi0|psi>|)`` of ``psi`` relative to ``psi0``."""
    overlap = np.vdot(psi0, psi)
    u0, v0 = _split(psi0)
    u1, v1 = _split(psi)
    total = cmath.phase(overlap) if abs(overlap) > 0 else math.nan
    return total, _phase_of(u0, u1), _phase_of(v0, v1), abs(overlap)


def evolve(
    H_of_t: Callable[[float], object],
    psi0,
    sched: Schedule,
    hbar: float = 1.0,
    observer: Callable[[float, np.ndarray], None] | None = None,
) -> EvolutionReport:
    """Propagate ``psi0`` through ``sched`` and compare the result with ``psi0``.

    ``H_of_t`` returns a Hermitian matrix (or an object with ``.matrix``)
    whose basis is site-major ``(u_up, u_dn, v_up, v_dn)``.  ``psi0`` may be
    a plain vector or a spinor field with ``.values``.  Raises
    ``OverlapVanishes`` when ``|<psi0|psi(T)>|`` is below 1e-6.
    ``observer(t, psi)`` is called after every step.
    """
    psi0 = np.asarray(getattr(psi0, "values", psi0), dtype=complex).ravel()
    psi0 = psi0 / np.linalg.norm(psi0)
    psi = psi0.copy()
    dt = sched.dt
    drift = 0.0
    dyn = 0.0
    for t in sched.times()[:-1]:
        w, V = _checked_eigh(_as_matrix(H_of_t(t + dt / 2)))
        c = V.conj().T @ psi
        dyn -= float(np.sum(w * np.abs(c) ** 2)) * dt / hbar
        psi = V @ (np.exp(-1j * w * dt / hbar) * c)
        drift = max(drift, abs(np.linalg.norm(psi) - 1.0))
        if observer is not None:
            observer(t + dt, psi)
    total, phi_u, phi_v, mag = relative_phases(psi0, psi)
    if mag < OVERLAP_FLOOR:
        raise OverlapVanishes(f"final state is orthogonal to the initial one (|<psi0|psi(T)>| = {mag:.2e})")
    return EvolutionReport(
        phi_total=total,
        phi_u=phi_u,
        phi_v=phi_v,
        overlap_mag=mag,
        unitarity_drift=drift,
        dynamical=dyn,
        final=psi,
        n_steps=sched.n_steps,
    )


def overlap_product(
    bases: Sequence[np.ndarray],
    energies: Sequence[np.ndarray],
    dt: float,
    psi0: np.ndarray | None = None,
    hbar: float = 1.0,
) -> OverlapProduct:
    """Evolution amplitude restricted to a tracked set of instantaneous levels.

    ``bases[k]`` holds the tracked eigenvectors at time ``t_k`` as columns
    (column 0 is the level of interest) and ``energies[k]`` their energies.
    Each step contributes ``exp(-i E_k dt) <m_k|n_{k-1}>``; the amplitude
    is closed against ``psi0`` (default: column 0 of ``bases[0]``), which
    makes it independent of the phase convention of the intermediate
    eigenvectors.  ``factors`` are the diagonal overlaps of the level of
    interest and ``omega_log`` the sum of their logarithms divided by
    ``i``; a factor below 0.5 in modulus means the tracked basis jumped.
    """
    n = len(bases)
    if n != len(energies):
        raise ValueError("bases and energies must have equal length")
    if n == 0:
        return OverlapProduct(np.ones(0, dtype=complex), 0j, 1.0 + 0j)
    B0 = np.asarray(bases[0])
    ref = B0[:, 0] if psi0 is None else np.asarray(getattr(psi0, "values", psi0), dtype=complex).ravel()
    ref = ref / np.linalg.norm(ref)
    if n == 1:
        return OverlapProduct(np.ones(0, dtype=complex), 0j, 1.0 + 0j)
    c = B0.conj().T @ ref
    factors = np.empty(n - 1, dtype=complex)
    for k in range(1, n):
        Bk = np.asarray(bases[k])
        O = Bk.conj().T @ np.asarray(bases[k - 1])
        factors[k - 1] = O[0, 0]
        if abs(O[0, 0]) < CONTINUITY_FLOOR:
            raise BasisDiscontinuity(f"tracked level jumps between steps {k - 1} and {k}")
        c = np.exp(-1j * np.asarray(energies[k]) * dt / hbar) * (O @ c)
    value = complex(np.vdot(ref, np.asarray(bases[-1]) @ c))
    omega = complex(np.sum(np.log(factors)) / 1j)
    return OverlapProduct(factors, omega, value)


def phase_error(phi: float, target: float) -> float:
    """Distance between two phases on the circle."""
    return abs(wrap(phi - target))


@dataclass
class ConvergenceStudy:
    """Phase errors of ``evolve`` for a series of loop durations."""

    durations: list[float] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    reports: list[EvolutionReport] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))


def lattice_tracker(params, spec, sched: Schedule, n_extra: int = 0, method: str = "banded"):
    """Tracked bases along ``sched`` for a lattice chain.

    Column 0 is the interface Majorana mode; ``n_extra`` further columns
    are the instantaneous eigenvectors closest to zero outside the
    near-zero doublet.  Returns ``(bases, energies)`` for ``overlap_product``.
    """
    bases, energies = [], []
    for t in sched.times():
        H = build_lattice(params, sched.point(t), spec)
        rep = zero_mode_numeric(H, method=method)
        gamma = rep.spinor.values.ravel()
        gamma = gamma / np.linalg.norm(gamma)
        cols, ens = [gamma], [float(np.real(np.vdot(gamma, H.matrix @ gamma)))]
        if n_extra:
            w, v = near_zero_eigenpairs(H, n_extra // 2 + 2, method)
            order = [i for i in np.argsort(np.abs(w)) if abs(w[i]) > 10 * max(rep.energy, 1e-12)]
            for i in order[:n_extra]:
                cols.append(v[:, i])
                ens.append(float(w[i]))
        bases.append(np.stack(cols, axis=1))
        energies.append(np.array(ens))
    return bases, energies
