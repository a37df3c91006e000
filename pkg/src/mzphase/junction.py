"""Zero-energy bound state of the FI/TI/SC junction.

The interface sits at x = 0 with the ferromagnet on x < 0 and the
superconductor on x > 0.  In each homogeneous half-line the zero-energy
solutions are exponentials ``chi exp(lambda x)``; substituting
``k = -i lambda`` turns ``H(k) chi = 0`` into the 4x4 eigenproblem
``H1^{-1} H0 chi = i lambda chi`` (the kernel is linear in k, so this is
the companion linearization).  Only modes decaying away from the
interface are kept.

A Majorana solution on each side is ``a chi + C(a chi)`` with a single
complex coefficient; continuity at x = 0 is then a real-linear 8x4
system in ``(Re a_e, Im a_e, Re m_e, Im m_e)`` whose null vector is found
by SVD.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .bdg import (
    ModelParams,
    NambuSpinor,
    ParamPoint,
    Region,
    kernel_parts,
    trapezoid_weights,
)
from .errors import (
    DegenerateInPlane,
    DegenerateZeroMode,
    EvanescentConditionViolated,
    NoDecayingMode,
    NoZeroMode,
)

# |sin theta| below this is treated as an out-of-plane magnetization
IN_PLANE_EPS = 1e-12


@dataclass(frozen=True)
class DerivedParams:
    m_par: float
    phi: float
    k_F: float
    K_SC: float
    k_mSC: float
    k_m: float
    k_mSC_printed: float

    @property
    def exp_i_phi(self) -> complex:
        return cmath.exp(1j * self.phi)

    def as_dict(self) -> dict:
        return {
            "m_par": self.m_par,
            "phi": self.phi,
            "k_F": self.k_F,
            "K_SC": self.K_SC,
            "k_mSC": self.k_mSC,
            "k_m": self.k_m,
            "k_mSC_printed": self.k_mSC_printed,
        }


@dataclass(frozen=True, eq=False)
class EvanescentMode:
    lam: complex
    chi: np.ndarray

    def at(self, x: np.ndarray) -> np.ndarray:
        return np.outer(np.exp(self.lam * np.asarray(x)), self.chi)


@dataclass(frozen=True, eq=False)
class BoundState:
    point: ParamPoint
    coeffs: tuple[complex, complex]
    spinor: NambuSpinor
    fi_mode: EvanescentMode
    sc_mode: EvanescentMode
    match_residual: float
    singular_values: np.ndarray
    energy: float = 0.0


def derived_params(params: ModelParams, theta: float) -> DerivedParams:
    """Closed-form decay constants and the internal phase of the FI spinor."""
    hv = params.hbar * params.v_f
    m_par = check_evanescent(params, theta)
    mu = params.mu_FI
    root = math.sqrt(m_par * m_par - mu * mu)
    phi = math.atan2(root, mu)
    sc_modes = evanescent_modes(params, None, Region.SC)
    k_mSC = max(abs(mode.lam.imag) for mode in sc_modes)
    printed = (m_par / params.mu_SC) / hv if params.mu_SC != 0 else math.inf
    return DerivedParams(
        m_par=m_par,
        phi=phi,
        k_F=root / hv,
        K_SC=params.delta / hv,
        k_mSC=k_mSC,
        k_m=params.m * math.cos(theta) / hv,
        k_mSC_printed=printed,
    )


def _zero_energy_spectrum(params, point, region):
    H0, H1 = kernel_parts(params, point, region)
    mu, vecs = np.linalg.eig(np.linalg.solve(H1, H0))
    lams = -1j * mu
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    return lams, vecs, H0, H1


def evanescent_modes(
    params: ModelParams, point: ParamPoint | None, region: Region | str
) -> list[EvanescentMode]:
    """Zero-energy modes decaying away from x = 0 on the given side.

    FI (x < 0) keeps ``Re lambda > 0``; SC (x > 0) keeps ``Re lambda < 0``.
    """
    region = Region(region)
    lams, vecs, H0, _ = _zero_energy_spectrum(params, point, region)
    scale = max(1.0, float(np.abs(lams).max()))
    sign = 1.0 if region is Region.FI else -1.0
    keep = [i for i in range(4) if sign * lams[i].real > 1e-9 * scale]
    if not keep:
        raise NoDecayingMode(f"no zero-energy mode decays into the {region.value.upper()} region")
    return [EvanescentMode(complex(lams[i]), vecs[:, i].copy()) for i in keep]


def _conj_mode(chi: np.ndarray) -> np.ndarray:
    return np.concatenate([chi[2:], chi[:2]]).conj()


def _dominant_mode(modes: list[EvanescentMode], weight: np.ndarray) -> EvanescentMode:
    """Mode maximizing a diagonal component weight.

    Degenerate exponents make the eigenvectors an arbitrary basis of the
    eigenspace, so each cluster is rotated to its most weighted direction.
    """
    best, best_w = None, -1.0
    used = set()
    for i, mode in enumerate(modes):
        if i in used:
            continue
        cluster = [j for j in range(len(modes)) if abs(modes[j].lam - mode.lam) < 1e-12 * max(1.0, abs(mode.lam))]
        used.update(cluster)
        B = np.stack([modes[j].chi for j in cluster], axis=1)
        B, _ = np.linalg.qr(B)
        G = B.conj().T @ (weight[:, None] * B)
        w, U = np.linalg.eigh(G)
        chi = B @ U[:, -1]
        if w[-1] > best_w:
            lam = np.mean([modes[j].lam for j in cluster])
            best, best_w = EvanescentMode(complex(lam), chi / np.linalg.norm(chi)), w[-1]
    return best


def _fix_mode_phase(mode: EvanescentMode) -> EvanescentMode:
    k = int(np.argmax(np.abs(mode.chi)))
    return EvanescentMode(mode.lam, mode.chi * np.exp(-1j * np.angle(mode.chi[k])))


def _region_u(mode: EvanescentMode, coeff: complex, growth, rot: complex = 1.0) -> np.ndarray:
    # electron half of a chi e^{lam x} + C(a chi e^{lam x}), times rot; the hole half is conj(u)
    e, e_conj = growth
    return np.multiply.outer(e, rot * coeff * mode.chi[:2]) + np.multiply.outer(
        e_conj, rot * (coeff * mode.chi[2:]).conj()
    )


def _mode_growth(lam: complex, x: np.ndarray, cache: dict | None, side: str):
    """``exp(lam x)`` and its conjugate, memoized per exponent (loops at fixed theta reuse it)."""
    if cache is None:
        e = np.exp(lam * x)
        return e, e.conj()
    key = (side, lam)
    out = cache.get(key)
    if out is None:
        if len(cache) > 16:
            cache.clear()
        e = np.exp(lam * x)
        out = cache[key] = (e, e.conj())
    return out


def default_grid(
    params: ModelParams,
    theta_values=(math.pi / 2,),
    n_points: int = 4001,
    decay_lengths: float = 12.0,
) -> np.ndarray:
    """Two-sided grid containing x = 0, wide enough for every theta given.

    Each side spans ``decay_lengths`` of the slowest decay on that side.
    """
    k_F = min(derived_params(params, t).k_F for t in theta_values)
    K_SC = params.delta / (params.hbar * params.v_f)
    left, right = decay_lengths / k_F, decay_lengths / K_SC
    n_left = max(2, int(round((n_points - 1) * left / (left + right))) + 1)
    n_right = max(2, n_points - n_left + 1)
    return np.concatenate(
        [np.linspace(-left, 0.0, n_left), np.linspace(0.0, right, n_right)[1:]]
    )


def check_evanescent(params: ModelParams, theta: float) -> float:
    """Return ``m_par`` or raise if the FI side cannot host a bound state."""
    s = abs(math.sin(theta))
    if s < IN_PLANE_EPS:
        raise DegenerateInPlane("in-plane magnetization vanishes (theta = 0 or pi)")
    m_par = params.m * s
    if m_par <= abs(params.mu_FI):
        raise EvanescentConditionViolated(
            f"in-plane magnetization {m_par:.6g} does not exceed |mu_FI| = {abs(params.mu_FI):.6g}"
        )
    return m_par


def sc_matching_mode(params: ModelParams) -> EvanescentMode:
    """SC-side mode used for the m_e coefficient; independent of the magnetization."""
    modes = evanescent_modes(params, None, Region.SC)
    return _fix_mode_phase(_dominant_mode(modes, np.array([1.0, 0.0, 0.0, 0.0])))


def match_interface(
    params: ModelParams,
    point: ParamPoint,
    grid: np.ndarray | None = None,
    sc_mode: EvanescentMode | None = None,
    weights: np.ndarray | None = None,
    exp_cache: dict | None = None,
    sector_phase: bool = False,
) -> BoundState:
    """Matched, normalized Majorana zero mode for one magnetization direction."""
    check_evanescent(params, point.theta)
    fi_modes = evanescent_modes(params, point, Region.FI)
    fi = _fix_mode_phase(_dominant_mode(fi_modes, np.array([1.0, 1.0, 0.0, 0.0])))
    sc = sc_mode if sc_mode is not None else sc_matching_mode(params)

    cols = []
    for mode, sgn in ((fi, 1.0), (sc, -1.0)):
        chi, cchi = mode.chi, _conj_mode(mode.chi)
        cols.append(sgn * (chi + cchi))
        cols.append(sgn * (1j * chi - 1j * cchi))
    Mc = np.stack(cols, axis=1)
    M = np.vstack([Mc.real, Mc.imag])
    _, s, Vt = np.linalg.svd(M)
    if s[-1] > 1e-8 * s[0]:
        raise NoZeroMode(f"interface matching has no null vector (s_min/s_max = {s[-1] / s[0]:.3g})")
    if s[-2] <= 10.0 * s[-1]:
        raise DegenerateZeroMode("matching null space is not one-dimensional")
    null = Vt[-1]
    a_e = complex(null[0], null[1])
    m_e = complex(null[2], null[3])
    if a_e.real < 0 or (a_e.real == 0 and a_e.imag < 0):
        a_e, m_e = -a_e, -m_e

    one = (np.ones(1), np.ones(1))
    left0 = _region_u(fi, a_e, one)[0]
    right0 = _region_u(sc, m_e, one)[0]
    match_residual = float(np.linalg.norm(left0 - right0) / np.linalg.norm(left0))

    if grid is None:
        grid = default_grid(params, (point.theta,))
    grid = np.asarray(grid, dtype=float)
    if weights is None:
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least two points")
        weights = trapezoid_weights(grid)
    values = np.empty((grid.size, 4), dtype=complex)
    n_neg = int(np.count_nonzero(grid <= 0))  # grid is sorted
    # sector_phase folds sector_gauge at x = 0 into the build
    rot = left0[0].conjugate() / abs(left0[0]) if sector_phase and left0[0] != 0 else 1.0
    values[:n_neg, :2] = _region_u(fi, a_e, _mode_growth(fi.lam, grid[:n_neg], exp_cache, "fi"), rot)
    values[n_neg:, :2] = _region_u(sc, m_e, _mode_growth(sc.lam, grid[n_neg:], exp_cache, "sc"), rot)
    np.conjugate(values[:, :2], out=values[:, 2:])
    # v = u^*, so the norm is twice the electron weight
    scale = 1.0 / math.sqrt(2.0 * float(weights @ (np.abs(values[:, :2]) ** 2).sum(axis=1)))
    values *= scale
    return BoundState(
        point=point,
        coeffs=(a_e * scale, m_e * scale),
        spinor=NambuSpinor.trusted(grid, values),
        fi_mode=fi,
        sc_mode=sc,
        match_residual=match_residual,
        singular_values=s,
    )


def sector_gauge(psi: NambuSpinor, site: int, inplace: bool = False) -> NambuSpinor:
    """Rotate ``u -> u e^{-i beta}``, ``v -> v e^{+i beta}`` so that
    ``u_up`` at ``site`` is real positive.

    Unlike a global phase this keeps ``v = u^*`` intact, so a Majorana
    state stays Majorana.  ``inplace`` overwrites ``psi.values``.
    """
    z = psi.values[site, 0]
    if z == 0:
        return psi
    r = z.conjugate() / abs(z)
    if inplace:
        psi.values[:, :2] *= r
        psi.values[:, 2:] *= r.conjugate()
        return psi
    phase = np.array([r, r, r.conjugate(), r.conjugate()])
    return NambuSpinor.trusted(psi.grid, psi.values * phase)


class BoundStateSampler:
    """ParamPoint -> matched zero-mode spinor on a fixed grid.

    The phase convention makes ``u_up(0)`` real positive with the
    Majorana constraint preserved (see ``sector_gauge``).
    """

    def __init__(self, params: ModelParams, grid: np.ndarray):
        self.params = params
        self.grid = np.asarray(grid, dtype=float)
        if self.grid.ndim != 1 or self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least two points")
        self.interface_site = int(np.argmin(np.abs(self.grid)))
        self._sc_mode = sc_matching_mode(params)
        self._weights = trapezoid_weights(self.grid)
        self._growth: dict = {}

    def bound_state(self, point: ParamPoint) -> BoundState:
        return match_interface(self.params, point, self.grid, self._sc_mode, self._weights, self._growth)

    def __call__(self, point: ParamPoint) -> NambuSpinor:
        if self.grid[self.interface_site] == 0.0:
            return match_interface(
                self.params, point, self.grid, self._sc_mode, self._weights, self._growth, sector_phase=True
            ).spinor
        # the freshly built array is private, so gauge it in place
        return sector_gauge(self.bound_state(point).spinor, self.interface_site, inplace=True)


def sampler(params: ModelParams, grid: np.ndarray | None = None) -> BoundStateSampler:
    if grid is None:
        grid = default_grid(params)
    return BoundStateSampler(params, grid)


def fi_phase_lock_error(state: BoundState, phi: float) -> float:
    """Largest deviation of ``arg(u_dn/u_up) - (alpha + phi)`` (mod 2 pi) on x < 0."""
    vals = state.spinor.values[state.spinor.grid < 0]
    ratio = vals[:, 1] / vals[:, 0]
    dev = np.angle(ratio * np.exp(-1j * (state.point.alpha + phi)))
    return float(np.abs(dev).max())


def zero_energy_residual(params: ModelParams, state: BoundState) -> float:
    """``||H psi|| / ||psi||`` for the continuum operator, evaluated mode by mode.

    Every piece is an exact exponential, so ``H`` acts algebraically as
    ``H0 + (-i lambda) H1``.
    """
    worst = 0.0
    for region, mode, coeff in ((Region.FI, state.fi_mode, state.coeffs[0]), (Region.SC, state.sc_mode, state.coeffs[1])):
        H0, H1 = kernel_parts(params, state.point, region)
        for lam, chi in ((mode.lam, mode.chi), (np.conj(mode.lam), _conj_mode(mode.chi))):
            r = (H0 - 1j * lam * H1) @ chi
            worst = max(worst, float(np.linalg.norm(r)))
    return worst
