"""Nambu-space types and the 4x4 BdG kernel of the FI/TI/SC edge.

Basis
-----
Amplitudes are stored and the Hamiltonian is written in the basis
``(u_up, u_dn, v_up, v_dn)``, i.e. ``(c_up, c_dn, c_up^dag, c_dn^dag)``.
In this basis

    H(k) = [[ h(k),          Delta i sigma_y ],
            [ -Delta i sigma_y,  -h(-k)^*    ]]

    h(k) = hbar v_f k sigma_z - mu + m . sigma

and particle-hole conjugation is ``C = tau_x K``, which maps stored
amplitudes ``(u, v) -> (v^*, u^*)``.  A Majorana zero mode is a C-fixed
point, ``v = u^*`` component by component.

The four-vector ``(u_up, u_dn, v_dn, -v_up)`` is the same state written
in the ``(psi_up, psi_dn, psi_dn^dag, -psi_up^dag)`` Nambu convention; in
that frame the lower-right block reads ``-v_f sigma.p + mu + m.sigma`` and
the pairing block is ``Delta`` times the identity.  ``to_nambu_frame``
applies the change of basis.

Transport is one-dimensional along x and the edge electrons are helical
with spin locked along z, so ``sigma.p -> sigma_z k``.  The magnetization
polar angle ``theta`` is measured from that locking axis; the in-plane
part ``m |sin theta|`` opens the gap and ``m cos theta`` only shifts k.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# stored basis -> (psi_up, psi_dn, psi_dn^dag, -psi_up^dag) frame
NAMBU_FRAME = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=complex
)


class Region(str, enum.Enum):
    FI = "fi"
    SC = "sc"


class Sector(str, enum.Enum):
    ELECTRON = "electron"
    HOLE = "hole"
    FULL = "full"


@dataclass(frozen=True)
class ModelParams:
    """Static junction constants, energies in units of the pair amplitude."""

    mu_FI: float = 0.0
    mu_SC: float = 0.0
    m: float = 1.0
    delta: float = 1.0
    v_f: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mu_FI", "mu_SC", "m", "delta", "v_f", "hbar"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.m <= 0:
            raise ValueError("magnetization m must be positive")
        if self.delta <= 0:
            raise ValueError("pair amplitude delta must be positive")
        if self.v_f <= 0 or self.hbar <= 0:
            raise ValueError("v_f and hbar must be positive")


@dataclass(frozen=True)
class ParamPoint:
    """Magnetization direction: polar ``theta`` in [0, pi], azimuth ``alpha``."""

    theta: float
    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.alpha)):
            raise ValueError("theta and alpha must be finite")
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError(f"theta={self.theta} outside [0, pi]")

    def shifted(self, dtheta: float = 0.0, dalpha: float = 0.0) -> "ParamPoint":
        return ParamPoint(self.theta + dtheta, self.alpha + dalpha)


@dataclass(frozen=True, eq=False)
class Field:
    """Multi-component complex amplitudes sampled on a 1D grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if values.ndim == 1:
            values = values[:, None]
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid needs at least two points")
        if values.shape[0] != grid.size:
            raise ValueError("values length must match grid length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(values))):
            raise ValueError("non-finite samples")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def trusted(cls, grid: np.ndarray, values: np.ndarray):
        """Build without validation; for hot loops that already guarantee the invariants."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "values", values)
        return obj

    @property
    def n_components(self) -> int:
        return self.values.shape[1]

    def with_values(self, values) -> "Field":
        return type(self)(self.grid, values)

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __add__(self, other):
        _check_grids(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        _check_grids(self, other)
        return self.with_values(self.values - other.values)


@dataclass(frozen=True, eq=False)
class NambuSpinor(Field):
    """Four-component field ordered ``(u_up, u_dn, v_up, v_dn)``."""

    def __post_init__(self):
        super().__post_init__()
        if self.values.shape[1] != 4:
            raise ValueError("a Nambu spinor has exactly four components")

    @property
    def u(self) -> np.ndarray:
        return self.values[:, :2]

    @property
    def v(self) -> np.ndarray:
        return self.values[:, 2:]

    def restrict(self, mask) -> "NambuSpinor":
        mask = np.asarray(mask, dtype=bool)
        return NambuSpinor(self.grid[mask], self.values[mask])


def _check_grids(a: Field, b: Field):
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise GridMismatch("fields live on different grids")


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    dx = np.diff(grid)
    w = np.zeros_like(grid)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def inner_product(a: Field, b: Field) -> complex:
    """<a|b> by trapezoidal quadrature, summed over components."""
    _check_grids(a, b)
    if a.n_components != b.n_components:
        raise GridMismatch("component counts differ")
    density = np.einsum("ij,ij->i", a.values.conj(), b.values)
    return complex(trapezoid_weights(a.grid) @ density)


def norm(a: Field) -> float:
    return math.sqrt(max(inner_product(a, a).real, 0.0))


def normalized(a: Field) -> Field:
    return a * (1.0 / norm(a))


def project(psi: NambuSpinor, sector: Sector | str) -> Field:
    """Electron ``(u_up, u_dn)``, hole ``(v_up, -v_dn)``, or the full spinor."""
    sector = Sector(sector)
    if sector is Sector.FULL:
        return psi
    if sector is Sector.ELECTRON:
        return Field(psi.grid, psi.values[:, :2])
    return Field(psi.grid, psi.values[:, 2:] * np.array([1.0, -1.0]))


def particle_hole(psi: NambuSpinor) -> NambuSpinor:
    """Antiunitary conjugation ``(u, v) -> (v^*, u^*)``."""
    vals = psi.values
    return NambuSpinor(psi.grid, np.concatenate([vals[:, 2:], vals[:, :2]], axis=1).conj())


def majorana_residual(psi: NambuSpinor) -> float:
    """``||v_up - u_up^*|| + ||v_dn - u_dn^*||``; zero for a Majorana state."""
    w = trapezoid_weights(psi.grid)
    total = 0.0
    for s in range(2):
        diff = psi.values[:, 2 + s] - psi.values[:, s].conj()
        total += math.sqrt(float(w @ np.abs(diff) ** 2))
    return total


def to_nambu_frame(vectors: np.ndarray) -> np.ndarray:
    """Rewrite stored 4-vectors (last axis) as ``(u_up, u_dn, v_dn, -v_up)``."""
    return np.asarray(vectors) @ NAMBU_FRAME.T


def magnetization(params: ModelParams, point: ParamPoint) -> np.ndarray:
    st = math.sin(point.theta)
    return params.m * np.array(
        [st * math.cos(point.alpha), st * math.sin(point.alpha), math.cos(point.theta)]
    )


def _region_fields(params: ModelParams, point: ParamPoint | None, region: Region):
    region = Region(region)
    if region is Region.FI:
        return params.mu_FI, magnetization(params, point), 0.0
    return params.mu_SC, np.zeros(3), params.delta


def kernel_parts(
    params: ModelParams, point: ParamPoint | None, region: Region | str
) -> tuple[np.ndarray, np.ndarray]:
    """Split ``H(k) = H0 + k * H1`` for a homogeneous region.

    ``H1`` is the velocity matrix ``hbar v_f diag(sigma_z, sigma_z)``; it
    is region independent.  The lattice discretization reuses both parts.
    """
    mu, mvec, delta = _region_fields(params, point, region)
    zeeman = mvec[0] * SIGMA_X + mvec[1] * SIGMA_Y + mvec[2] * SIGMA_Z
    pairing = delta * 1j * SIGMA_Y
    h0 = -mu * SIGMA_0 + zeeman
    H0 = np.empty((4, 4), dtype=complex)
    H0[:2, :2] = h0
    H0[:2, 2:] = pairing
    H0[2:, :2] = pairing.conj().T
    H0[2:, 2:] = -h0.conj()
    # -h(-k)^* contributes +hbar v_f k sigma_z^* = +hbar v_f k sigma_z
    H1 = np.diag([1.0, -1.0, 1.0, -1.0]).astype(complex) * (params.hbar * params.v_f)
    return H0, H1


def bdg_kernel(
    params: ModelParams, point: ParamPoint | None, region: Region | str, k: complex
) -> np.ndarray:
    """4x4 BdG matrix at (possibly complex) wavevector ``k``.

    In the FI region the pair amplitude is zero and the magnetization
    follows ``point``; in the SC region ``m = 0``, ``Delta = delta`` and
    ``mu = mu_SC``.  Hermitian for real ``k``.
    """
    k = complex(k)
    if not (math.isfinite(k.real) and math.isfinite(k.imag)):
        raise ValueError("wavevector must be finite")
    H0, H1 = kernel_parts(params, point, region)
    return H0 + k * H1
