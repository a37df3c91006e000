"""Berry connections, loop phases and plaquette curvature per Nambu sector.

Sign convention: ``gamma = +Im int <chi|grad chi> / <chi|chi> dR``, the
exponent that multiplies the electron (hole) amplitude during adiabatic
transport.  This is the opposite sign of the more common ``i oint <n|dn>``;
mod 2 pi the FI-loop values pi and -pi coincide either way.

Discrete phases are sums of ``arg <chi_k|chi_{k+1}>`` over consecutive
path points.  Each term is taken on the principal branch and must stay
below pi/2 in magnitude; the sum is accumulated without folding, so
windings and the distinction between pi and -pi survive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bdg import Field, NambuSpinor, ParamPoint, Sector, trapezoid_weights
from .errors import StepTooCoarse, ZeroOverlap

Sampler = Callable[[ParamPoint], NambuSpinor]

ALL_SECTORS = (Sector.ELECTRON, Sector.HOLE, Sector.FULL)
STEP_LIMIT = math.pi / 2
ZERO_OVERLAP = 1e-12

_SLICES = {
    Sector.ELECTRON: slice(0, 2),
    # (v_up, -v_dn): the constant sign drops out of every overlap
    Sector.HOLE: slice(2, 4),
    Sector.FULL: slice(0, 4),
}


def wrap(angle: float) -> float:
    """Fold into (-pi, pi]."""
    a = math.remainder(angle, 2 * math.pi)
    return math.pi if a == -math.pi else a


@dataclass(frozen=True)
class ParamPath:
    points: tuple[ParamPoint, ...]
    closed: bool = False

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("a path needs at least two points")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise ValueError("consecutive path points must differ")

    def links(self) -> list[tuple[int, int]]:
        n = len(self.points)
        pairs = [(k, k + 1) for k in range(n - 1)]
        if self.closed:
            pairs.append((n - 1, 0))
        return pairs

    @classmethod
    def alpha_loop(cls, theta: float, n_steps: int, alpha0: float = 0.0) -> "ParamPath":
        """Closed loop alpha: alpha0 -> alpha0 + 2 pi at fixed theta."""
        step = 2 * math.pi / n_steps
        return cls(tuple(ParamPoint(theta, alpha0 + k * step) for k in range(n_steps)), closed=True)

    @classmethod
    def segment(cls, start: ParamPoint, end: ParamPoint, n_steps: int) -> "ParamPath":
        """Open straight segment with ``n_steps`` links."""
        ts = np.linspace(0.0, 1.0, n_steps + 1)
        return cls(
            tuple(
                ParamPoint(start.theta + t * (end.theta - start.theta), start.alpha + t * (end.alpha - start.alpha))
                for t in ts
            )
        )

    @classmethod
    def from_curve(cls, curve: Callable[[float], tuple[float, float]], n_steps: int) -> "ParamPath":
        """Closed loop sampled from a 2 pi periodic ``t -> (theta, alpha)``."""
        ts = 2 * math.pi * np.arange(n_steps) / n_steps
        return cls(tuple(ParamPoint(*map(float, curve(t))) for t in ts), closed=True)

    @classmethod
    def rectangle(cls, theta0: float, theta1: float, alpha0: float, alpha1: float, n_side: int) -> "ParamPath":
        """Counterclockwise boundary of a (theta, alpha) rectangle."""
        th = np.linspace(theta0, theta1, n_side + 1)
        al = np.linspace(alpha0, alpha1, n_side + 1)
        pts = [(t, alpha0) for t in th[:-1]]
        pts += [(theta1, a) for a in al[:-1]]
        pts += [(t, alpha1) for t in th[::-1][:-1]]
        pts += [(theta0, a) for a in al[::-1][:-1]]
        return cls(tuple(ParamPoint(t, a) for t, a in pts), closed=True)


@dataclass(frozen=True, eq=False)
class PhaseResult:
    gamma_u: float
    gamma_v: float
    gamma_total: float
    dynamical: float = 0.0
    step_diagnostics: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cumulative: dict = field(default_factory=dict)

    def phase(self, sector: Sector | str) -> float:
        sector = Sector(sector)
        return {Sector.ELECTRON: self.gamma_u, Sector.HOLE: self.gamma_v, Sector.FULL: self.gamma_total}[sector]

    def wrapped(self, sector: Sector | str) -> float:
        return wrap(self.phase(sector))

    @property
    def overlap_min(self) -> float:
        return float(self.step_diagnostics.min()) if self.step_diagnostics.size else 1.0


@dataclass(frozen=True)
class ConnectionSample:
    A_u: complex
    A_v: complex
    A_total: complex

    def get(self, sector: Sector | str) -> complex:
        sector = Sector(sector)
        return {Sector.ELECTRON: self.A_u, Sector.HOLE: self.A_v, Sector.FULL: self.A_total}[sector]


def _overlap(w: np.ndarray, a: np.ndarray, b: np.ndarray) -> complex:
    return complex(w @ np.einsum("ij,ij->i", a.conj(), b))


def _sector_values(psi: Field, sector: Sector) -> np.ndarray:
    return psi.values[:, _SLICES[sector]]


def sample_path(sampler: Sampler, path: ParamPath) -> list[NambuSpinor]:
    return [sampler(p) for p in path.points]


def link_overlaps(states: Sequence[Field], links, sector: Sector) -> np.ndarray:
    """Normalized complex overlaps ``<chi_i|chi_j> / (|chi_i| |chi_j|)``."""
    w = trapezoid_weights(states[0].grid)
    vals = [_sector_values(s, sector) for s in states]
    norms = [math.sqrt(max(_overlap(w, v, v).real, 0.0)) for v in vals]
    out = np.empty(len(links), dtype=complex)
    for n, (i, j) in enumerate(links):
        denom = norms[i] * norms[j]
        z = _overlap(w, vals[i], vals[j])
        if denom == 0.0 or abs(z) < ZERO_OVERLAP * max(denom, 1e-300):
            raise ZeroOverlap(f"{sector.value} overlap vanishes on link {i}->{j}")
        out[n] = z / denom
    return out


def accumulate(overlaps: np.ndarray, sector: Sector = Sector.FULL) -> np.ndarray:
    """Running sum of per-link phases with the pi/2 step guard."""
    steps = np.angle(overlaps)
    bad = np.flatnonzero(np.abs(steps) >= STEP_LIMIT)
    if bad.size:
        k = int(bad[0])
        raise StepTooCoarse(
            f"{sector.value} phase step {steps[k]:.3f} rad on link {k} exceeds pi/2; refine the path"
        )
    return np.cumsum(steps)


def phases_from_states(
    states: Sequence[Field], path: ParamPath, sectors: Iterable[Sector] = ALL_SECTORS
) -> PhaseResult:
    sectors = tuple(Sector(s) for s in sectors)
    links = path.links()
    gammas = {s: math.nan for s in ALL_SECTORS}
    cumulative = {}
    mags = []
    for sector in sectors:
        ov = link_overlaps(states, links, sector)
        cum = accumulate(ov, sector)
        cumulative[sector] = cum
        gammas[sector] = float(cum[-1])
        mags.append(np.abs(ov))
    diag = np.min(np.stack(mags), axis=0) if mags else np.zeros(0)
    return PhaseResult(
        gamma_u=gammas[Sector.ELECTRON],
        gamma_v=gammas[Sector.HOLE],
        gamma_total=gammas[Sector.FULL],
        dynamical=0.0,
        step_diagnostics=diag,
        cumulative=cumulative,
    )


def path_phase(sampler: Sampler, path: ParamPath, sectors: Iterable[Sector] = ALL_SECTORS) -> PhaseResult:
    """Discrete geometric phases along ``path`` for the requested sectors.

    Unrequested sectors are reported as NaN.  For closed paths the final
    link returns to the first point, so the result is the discrete Wilson
    loop and does not depend on the sampler's phase convention (mod 2 pi).
    """
    return phases_from_states(sample_path(sampler, path), path, sectors)


def total_spinor_phase(sampler: Sampler, path: ParamPath) -> float:
    return path_phase(sampler, path, (Sector.FULL,)).gamma_total


def connection(
    sampler: Sampler,
    point: ParamPoint,
    direction: tuple[float, float] = (0.0, 1.0),
    h: float = 1e-4,
) -> ConnectionSample:
    """Central-difference connection ``<chi|d chi>/<chi|chi>`` along ``direction``.

    ``direction`` is ``(d theta, d alpha)`` and is normalized here.  The
    imaginary part is the geometric-phase density in radians per radian.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    dt, da = direction
    length = math.hypot(dt, da)
    dt, da = dt / length, da / length
    psi0 = sampler(point)
    plus = sampler(point.shifted(h * dt, h * da))
    minus = sampler(point.shifted(-h * dt, -h * da))
    w = trapezoid_weights(psi0.grid)
    out = []
    for sector in ALL_SECTORS:
        a, p, m = (_sector_values(s, sector) for s in (psi0, plus, minus))
        nrm = _overlap(w, a, a).real
        if nrm == 0.0:
            out.append(complex("nan"))
            continue
        out.append((_overlap(w, a, p) - _overlap(w, a, m)) / (2 * h * nrm))
    return ConnectionSample(*out)


def line_integral_phase(sampler: Sampler, path: ParamPath, sector: Sector | str = Sector.ELECTRON) -> float:
    """Midpoint-rule quadrature of ``Im A`` along the path.

    The connection at each link midpoint is a central difference across
    that link, so the estimate carries an O(step^2) error, unlike the
    overlap sum of ``path_phase``.
    """
    sector = Sector(sector)
    total = 0.0
    for i, j in path.links():
        a, b = path.points[i], path.points[j]
        # alpha is periodic: a closing link continues past 2 pi instead of jumping back
        dth, dal = b.theta - a.theta, math.remainder(b.alpha - a.alpha, 2 * math.pi)
        length = math.hypot(dth, dal)
        mid = ParamPoint(a.theta + dth / 2, a.alpha + dal / 2)
        A = connection(sampler, mid, (dth, dal), length / 2).get(sector)
        total += A.imag * length
    return total


def gauge_transform(sampler: Sampler, Theta: Callable[[ParamPoint], float]) -> Sampler:
    """``R -> exp(i Theta(R)) psi(R)``; Im(connection) shifts by grad Theta."""

    def transformed(point: ParamPoint) -> NambuSpinor:
        psi = sampler(point)
        return NambuSpinor.trusted(psi.grid, psi.values * np.exp(1j * Theta(point)))

    return transformed


def _plaquette(sampler: Sampler, corners: Sequence[ParamPoint], sectors) -> dict:
    states = [sampler(p) for p in corners]
    path = ParamPath(tuple(corners), closed=True)
    res = phases_from_states(states, path, sectors)
    return {s: res.phase(s) for s in sectors}


def curvature(
    sampler: Sampler,
    point: ParamPoint,
    delta: float = 1e-3,
    sectors: Iterable[Sector] = ALL_SECTORS,
) -> dict:
    """Plaquette curvature in the (theta, alpha) plane, centred on ``point``.

    ``B = arg(<1|2><2|3><3|4><4|1>) / delta^2`` with corners visited
    counterclockwise (theta first), i.e. ``B = d_theta A_alpha - d_alpha A_theta``.
    """
    sectors = tuple(Sector(s) for s in sectors)
    t0, a0 = point.theta - delta / 2, point.alpha - delta / 2
    corners = [
        ParamPoint(t0, a0),
        ParamPoint(t0 + delta, a0),
        ParamPoint(t0 + delta, a0 + delta),
        ParamPoint(t0, a0 + delta),
    ]
    loop = _plaquette(sampler, corners, sectors)
    return {s: loop[s] / delta**2 for s in sectors}


@dataclass(frozen=True)
class StokesReport:
    loop_phase: float
    surface_integral: float
    discrepancy: float


def stokes_check(
    sampler: Sampler,
    theta_range: tuple[float, float],
    alpha_range: tuple[float, float],
    n_side: int = 10,
    sector: Sector | str = Sector.ELECTRON,
) -> StokesReport:
    """Compare the boundary phase of a rectangle with the summed plaquette flux."""
    sector = Sector(sector)
    (t0, t1), (a0, a1) = theta_range, alpha_range
    if t1 == t0 or a1 == a0:
        return StokesReport(0.0, 0.0, 0.0)
    loop = path_phase(sampler, ParamPath.rectangle(t0, t1, a0, a1, n_side), (sector,)).phase(sector)
    th = np.linspace(t0, t1, n_side + 1)
    al = np.linspace(a0, a1, n_side + 1)
    grid = [[sampler(ParamPoint(t, a)) for a in al] for t in th]
    flux = 0.0
    for i in range(n_side):
        for j in range(n_side):
            states = [grid[i][j], grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]]
            ring = ParamPath(
                (ParamPoint(th[i], al[j]), ParamPoint(th[i + 1], al[j]), ParamPoint(th[i + 1], al[j + 1]), ParamPoint(th[i], al[j + 1])),
                closed=True,
            )
            flux += phases_from_states(states, ring, (sector,)).phase(sector)
    return StokesReport(loop, flux, abs(loop - flux))


# calibration fixtures -------------------------------------------------------

_FIXTURE_GRID = np.array([0.0, 1.0])


def two_level_sampler(state: str = "lower") -> Sampler:
    """Spin-1/2 following a field along (theta, alpha); not a Majorana state.

    ``lower`` is anti-aligned with the field, with loop phase
    ``-pi (1 - cos theta)`` and curvature ``-sin(theta)/2``; ``upper`` is
    aligned, ``+pi (1 - cos theta)`` and ``+sin(theta)/2``.  Both gauges
    are smooth at the north pole.  The spinor occupies the electron slots.
    """
    if state not in ("lower", "upper"):
        raise ValueError("state must be 'lower' or 'upper'")

    def sample(point: ParamPoint) -> NambuSpinor:
        c, s = math.cos(point.theta / 2), math.sin(point.theta / 2)
        e = complex(math.cos(point.alpha), math.sin(point.alpha))
        if state == "upper":
            spin = (c, e * s)
        else:
            spin = (-s / e, c)
        row = np.array([spin[0], spin[1], 0.0, 0.0], dtype=complex)
        return NambuSpinor.trusted(_FIXTURE_GRID, np.vstack([row, row]))

    return sample


def constant_sampler(psi: NambuSpinor) -> Sampler:
    return lambda point: psi


def restrict_sampler(sampler: Sampler, region: str) -> Sampler:
    """Keep only the FI (x <= 0) or SC (x >= 0) part of every spinor."""
    region = region.lower()
    if region not in ("fi", "sc"):
        raise ValueError("region must be 'fi' or 'sc'")

    def restricted(point: ParamPoint) -> NambuSpinor:
        psi = sampler(point)
        # grids are increasing, so each side is a contiguous slice
        if region == "fi":
            cut = slice(0, int(np.searchsorted(psi.grid, 0.0, side="right")))
        else:
            cut = slice(int(np.searchsorted(psi.grid, 0.0, side="left")), None)
        return NambuSpinor.trusted(psi.grid[cut], psi.values[cut])

    return restricted
