"""Acceptance checks shared by ``mzphase validate`` and the test suite.

Each check returns a :class:`CheckResult`; expensive intermediate results
(the analytic loop, the evolution runs) are cached on the :class:`Suite`
so that later checks can reuse them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bdg import ModelParams, ParamPoint, Sector, majorana_residual
from .errors import DomainError, EvanescentConditionViolated
from .holonomy import (
    ParamPath,
    curvature,
    gauge_transform,
    line_integral_phase,
    path_phase,
    restrict_sampler,
    stokes_check,
    two_level_sampler,
    wrap,
)
from .junction import check_evanescent, derived_params, fi_phase_lock_error, match_interface, sampler
from .lattice import LatticeSpec, build_lattice, count_localized_zero_modes, lattice_sampler
from .nonadiabatic import Schedule, evolve, phase_error


@dataclass(frozen=True)
class CheckResult:
    key: str
    title: str
    passed: bool
    detail: str
    elapsed: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  [{self.key}] {self.title}: {self.detail} ({self.elapsed:.2f} s)"


# sizes used by the slow checks
EVOLVE_SPEC = LatticeSpec(n_sites=64, spacing=0.5, wilson_r=1.0)
EVOLVE_DT = 0.5
EVOLVE_TIMES = (50.0, 200.0, 800.0)
ORACLE_SPEC = LatticeSpec(n_sites=400, spacing=0.1, wilson_r=1.0)


def random_loop(rng: np.random.Generator, n_steps: int) -> ParamPath:
    """Smooth closed loop in (theta, alpha): either winding in alpha or a contractible ellipse."""
    t0 = rng.uniform(0.8, math.pi - 0.8)
    amp = rng.uniform(0.05, 0.4)
    harmonic = int(rng.integers(1, 4))
    phase = rng.uniform(0, 2 * math.pi)
    if rng.random() < 0.5:
        a0 = rng.uniform(0, 2 * math.pi)
        curve = lambda s: (t0 + amp * math.sin(2 * math.pi * harmonic * s + phase), a0 + 2 * math.pi * s)
    else:
        a0, ra = rng.uniform(0, 2 * math.pi), rng.uniform(0.2, 1.5)
        curve = lambda s: (t0 + amp * math.cos(2 * math.pi * s), a0 + ra * math.sin(2 * math.pi * s))
    return ParamPath.from_curve(curve, n_steps)


def random_gauge(rng: np.random.Generator) -> Callable[[ParamPoint], float]:
    """Smooth single-valued phase function on the (theta, alpha) sphere patch."""
    a, b, c = rng.normal(size=3)
    k = int(rng.integers(1, 3))
    p = rng.uniform(0, 2 * math.pi)
    return lambda R: a * math.cos(R.theta) + b * math.sin(k * R.alpha + p) + c * math.sin(R.theta) * math.cos(R.alpha)


@dataclass
class Suite:
    params: ModelParams = field(default_factory=ModelParams)
    seed: int = 20240601
    _cache: dict = field(default_factory=dict)

    # shared ingredients --------------------------------------------------

    def analytic_sampler(self):
        if "sampler" not in self._cache:
            self._cache["sampler"] = sampler(self.params)
        return self._cache["sampler"]

    def fi_loop(self):
        if "fi_loop" not in self._cache:
            t = time.perf_counter()
            s = restrict_sampler(sampler(self.params), "fi")
            res = path_phase(s, ParamPath.alpha_loop(math.pi / 2, 2000))
            self._cache["fi_loop"] = (res, time.perf_counter() - t)
        return self._cache["fi_loop"]

    def evolutions(self):
        if "evolve" not in self._cache:
            s = lattice_sampler(self.params, EVOLVE_SPEC)
            psi0 = s(ParamPoint(math.pi / 2, 0.0))
            out = {}
            t = time.perf_counter()
            for T in EVOLVE_TIMES:
                sched = Schedule.alpha_loop(math.pi / 2, T, int(round(T / EVOLVE_DT)))
                out[T] = evolve(lambda tt, sc=sched: build_lattice(self.params, sc.point(tt), EVOLVE_SPEC), psi0, sched)
            self._cache["evolve"] = (out, psi0, time.perf_counter() - t)
        return self._cache["evolve"]

    def _antisym(self, res) -> None:
        self._cache.setdefault("antisym", []).append(abs(res.gamma_u + res.gamma_v))

    # criteria ------------------------------------------------------------

    def c1(self) -> CheckResult:
        res, dt = self.fi_loop()
        self._antisym(res)
        ok = abs(res.gamma_u - math.pi) < 1e-3 and abs(res.gamma_v + math.pi) < 1e-3 and dt < 5.0
        return CheckResult("1", "FI loop phases", ok, f"gamma_u={res.gamma_u:.10f} gamma_v={res.gamma_v:.10f} runtime={dt:.2f}s", dt)

    def c2(self) -> CheckResult:
        s = restrict_sampler(self.analytic_sampler(), "sc")
        res = path_phase(s, ParamPath.alpha_loop(math.pi / 2, 2000))
        self._antisym(res)
        ok = abs(res.gamma_u) < 1e-6 and abs(res.gamma_v) < 1e-6
        return CheckResult("2", "SC-side loop phases vanish", ok, f"gamma_u={res.gamma_u:.10f} gamma_v={res.gamma_v:.10f}")

    def c3(self) -> CheckResult:
        rng = np.random.default_rng(self.seed)
        s = self.analytic_sampler()
        worst = 0.0
        for _ in range(20):
            res = path_phase(s, random_loop(rng, 200))
            self._antisym(res)
            worst = max(worst, abs(res.gamma_total))
        return CheckResult("3", "full-spinor phase on 20 random loops", worst < 1e-6, f"max |gamma_total|={worst:.3e}")

    def c4(self) -> CheckResult:
        # the electron/hole pair of every loop run so far, plus one off-equator loop
        res = path_phase(self.analytic_sampler(), ParamPath.alpha_loop(1.1, 400, 0.3))
        self._antisym(res)
        vals = self._cache["antisym"]
        worst = max(vals)
        return CheckResult("4", "electron/hole antisymmetry", worst < 1e-10, f"max |gamma_u+gamma_v|={worst:.3e} over {len(vals)} paths")

    def c5(self) -> CheckResult:
        t = time.perf_counter()
        s = lattice_sampler(self.params, ORACLE_SPEC)
        res = path_phase(s, ParamPath.alpha_loop(math.pi / 2, 500))
        dt = time.perf_counter() - t
        self._antisym(res)
        e0 = s.last_report.energy
        ok = abs(res.gamma_u - math.pi) < 1e-2 and abs(res.gamma_v + math.pi) < 1e-2 and e0 < 1e-4 * self.params.delta and dt < 120
        return CheckResult("5", "lattice oracle loop", ok, f"gamma_u={res.gamma_u:.8f} gamma_v={res.gamma_v:.8f} |E0|={e0:.2e} runtime={dt:.1f}s", dt)

    def c6(self) -> CheckResult:
        rng = np.random.default_rng(self.seed + 1)
        s = self.analytic_sampler()
        path = ParamPath.alpha_loop(1.2, 400, 0.2)
        base = path_phase(s, path)
        gauges = [lambda R: R.alpha] + [random_gauge(rng) for _ in range(9)]
        worst = 0.0
        for g in gauges:
            res = path_phase(gauge_transform(s, g), path)
            for sec in (Sector.ELECTRON, Sector.HOLE, Sector.FULL):
                worst = max(worst, abs(wrap(res.phase(sec) - base.phase(sec))))
        return CheckResult("6", "gauge invariance", worst < 1e-8, f"max drift={worst:.3e} over {len(gauges)} gauges")

    def c7(self) -> CheckResult:
        s = two_level_sampler()
        worst = 0.0
        for th in (math.pi / 6, math.pi / 3, math.pi / 2):
            B = curvature(s, ParamPoint(th, 0.4), delta=1e-3, sectors=(Sector.ELECTRON,))[Sector.ELECTRON]
            worst = max(worst, abs(B + math.sin(th) / 2))
        st = stokes_check(s, (1.0, 1.1), (0.5, 0.6), n_side=10)
        ok = worst < 1e-4 and st.discrepancy < 1e-4
        return CheckResult("7", "curvature calibration", ok, f"max |B + sin/2|={worst:.2e} stokes={st.discrepancy:.2e}")

    def c8(self) -> CheckResult:
        s = self.analytic_sampler()
        worst = 0.0
        for th in np.linspace(0.6, math.pi - 0.6, 5):
            for al in np.linspace(0.0, 2 * math.pi, 5, endpoint=False):
                worst = max(worst, abs(curvature(s, ParamPoint(th, al), sectors=(Sector.ELECTRON,))[Sector.ELECTRON]))
        res, _ = self.fi_loop()
        ok = worst < 1e-5 and abs(res.gamma_u - math.pi) < 1e-3
        return CheckResult("8", "flat connection with pi loop", ok, f"max |B|={worst:.2e} gamma_u={res.gamma_u:.8f}")

    def c9(self) -> CheckResult:
        out, _, dt = self.evolutions()
        errs = [phase_error(out[T].phi_u, math.pi) for T in EVOLVE_TIMES]
        drift = max(r.unitarity_drift for r in out.values())
        ok = all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] < 0.05 and drift < 1e-10 and dt < 300
        detail = " ".join(f"T={T:g}:{e:.4f}" for T, e in zip(EVOLVE_TIMES, errs))
        return CheckResult("9", "nonadiabatic convergence", ok, f"{detail} drift={drift:.1e} runtime={dt:.1f}s", dt)

    def c10(self) -> CheckResult:
        worst_maj = worst_lock = 0.0
        count = 0
        for mu in (-0.3, 0.0, 0.4):
            p = ModelParams(mu_FI=mu, mu_SC=self.params.mu_SC, m=self.params.m, delta=self.params.delta)
            for th in (math.pi / 3, math.pi / 2, 2 * math.pi / 3):
                phi = derived_params(p, th).phi
                for al in (0.0, 1.0, 4.0):
                    st = match_interface(p, ParamPoint(th, al))
                    worst_maj = max(worst_maj, majorana_residual(st.spinor))
                    worst_lock = max(worst_lock, fi_phase_lock_error(st, phi))
                    count += 1
        ok = count >= 27 and worst_maj < 1e-8 and worst_lock < 1e-8
        return CheckResult("10", "bound-state structure", ok, f"{count} points, majorana={worst_maj:.1e} phase-lock={worst_lock:.1e}")

    def c11(self) -> CheckResult:
        s = restrict_sampler(self.analytic_sampler(), "fi")
        e = [abs(line_integral_phase(s, ParamPath.alpha_loop(math.pi / 2, n)) - math.pi) for n in (16, 32)]
        loop_ratio = e[0] / e[1]
        # time step: Richardson reference from the two finer runs at T = 50
        out, psi0, _ = self.evolutions()
        T = EVOLVE_TIMES[0]
        n0 = out[T].n_steps
        H = lambda tt: build_lattice(self.params, ParamPoint(math.pi / 2, 2 * math.pi * tt / T), EVOLVE_SPEC)
        phis = [out[T].phi_u] + [evolve(H, psi0, Schedule.alpha_loop(math.pi / 2, T, n0 * f)).phi_u for f in (2, 4)]
        ref = phis[2] + (phis[2] - phis[1]) / 3
        time_ratio = abs(phis[0] - ref) / abs(phis[1] - ref)
        ok = 3 <= loop_ratio <= 5 and 3 <= time_ratio <= 5
        return CheckResult("11", "step-size convergence", ok, f"loop ratio={loop_ratio:.3f} time-step ratio={time_ratio:.3f}")

    # controls reported by the CLI --------------------------------------------

    def control_doubler(self) -> CheckResult:
        """Without the Wilson term the doubler hybridizes the interface Majorana."""
        spec = LatticeSpec(n_sites=200, spacing=0.1, wilson_r=0.0)
        n = count_localized_zero_modes(build_lattice(self.params, ParamPoint(math.pi / 2, 0.0), spec))
        return CheckResult("c1", "doubler control (wilson_r=0 loses the zero mode)", n == 0, f"{n} interface zero modes")

    def control_precondition(self) -> CheckResult:
        p = ModelParams(mu_FI=1.5 * self.params.m, m=self.params.m, delta=self.params.delta)
        try:
            check_evanescent(p, math.pi / 2)
        except EvanescentConditionViolated as exc:
            return CheckResult("c2", "precondition control (m_par < |mu_FI|)", True, f"raised {type(exc).__name__}")
        except DomainError as exc:  # pragma: no cover
            return CheckResult("c2", "precondition control (m_par < |mu_FI|)", False, f"unexpected {type(exc).__name__}")
        return CheckResult("c2", "precondition control (m_par < |mu_FI|)", False, "no error raised")

    def run(self, key: str) -> CheckResult:
        fn = getattr(self, f"c{key}") if key.isdigit() else getattr(self, f"control_{key}")
        t = time.perf_counter()
        try:
            res = fn()
        except Exception as exc:  # report, do not abort the table
            return CheckResult(key, fn.__name__, False, f"error {type(exc).__name__}: {exc}", time.perf_counter() - t)
        if res.elapsed == 0.0:
            res = CheckResult(res.key, res.title, res.passed, res.detail, time.perf_counter() - t)
        return res


CRITERIA = tuple(str(i) for i in range(1, 12))
CONTROLS = ("doubler", "precondition")


def run_all(params: ModelParams | None = None, include_controls: bool = True) -> list[CheckResult]:
    suite = Suite(params or ModelParams())
    keys = CRITERIA + (CONTROLS if include_controls else ())
    return [suite.run(k) for k in keys]
