import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mzphase.bdg import ModelParams, NambuSpinor, ParamPoint, Sector
from mzphase.errors import StepTooCoarse, ZeroOverlap
from mzphase.holonomy import (
    ParamPath,
    accumulate,
    connection,
    constant_sampler,
    curvature,
    gauge_transform,
    line_integral_phase,
    path_phase,
    restrict_sampler,
    stokes_check,
    two_level_sampler,
    wrap,
)
from mzphase.junction import sampler

E = (Sector.ELECTRON,)


@pytest.fixture(scope="module")
def fi_sampler():
    return sampler(ModelParams())


def test_param_path_links():
    loop = ParamPath.alpha_loop(1.0, 4)
    assert len(loop.points) == 4
    assert loop.links()[-1] == (3, 0)
    seg = ParamPath.segment(ParamPoint(1, 0), ParamPoint(1, 1), 4)
    assert len(seg.points) == 5 and len(seg.links()) == 4
    rect = ParamPath.rectangle(1.0, 1.2, 0.0, 0.3, 3)
    assert rect.closed and len(rect.points) == 12


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 3, math.pi / 2, 2.5])
def test_two_level_loop_solid_angle(theta):
    lo = path_phase(two_level_sampler("lower"), ParamPath.alpha_loop(theta, 400), E)
    up = path_phase(two_level_sampler("upper"), ParamPath.alpha_loop(theta, 400), E)
    target = math.pi * (1 - math.cos(theta))
    assert wrap(lo.gamma_u + target) == pytest.approx(0.0, abs=1e-4)
    assert wrap(up.gamma_u - target) == pytest.approx(0.0, abs=1e-4)


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 3, math.pi / 2])
def test_two_level_curvature(theta):
    B = curvature(two_level_sampler(), ParamPoint(theta, 1.0), delta=1e-3, sectors=E)[Sector.ELECTRON]
    assert B == pytest.approx(-math.sin(theta) / 2, abs=1e-4)
    Bup = curvature(two_level_sampler("upper"), ParamPoint(theta, 1.0), delta=1e-3, sectors=E)[Sector.ELECTRON]
    assert Bup == pytest.approx(math.sin(theta) / 2, abs=1e-4)


def test_stokes_on_small_square():
    rep = stokes_check(two_level_sampler(), (0.9, 1.0), (0.2, 0.3), n_side=10)
    assert rep.discrepancy < 1e-10
    assert rep.loop_phase == pytest.approx(-(math.cos(0.9) - math.cos(1.0)) * 0.1 / 2, rel=1e-3)
    assert stokes_check(two_level_sampler(), (1.0, 1.0), (0.0, 0.3)).discrepancy == 0.0


def test_fi_loop_phases(fi_sampler):
    res = path_phase(restrict_sampler(fi_sampler, "fi"), ParamPath.alpha_loop(math.pi / 2, 200))
    assert res.gamma_u == pytest.approx(math.pi, abs=1e-9)
    assert res.gamma_v == pytest.approx(-math.pi, abs=1e-9)
    assert abs(res.gamma_total) < 1e-12
    assert res.overlap_min > 0.99


def test_sc_side_carries_the_same_winding(fi_sampler):
    # the SC-side electron part winds with alpha like the FI part (see notes in README)
    res = path_phase(restrict_sampler(fi_sampler, "sc"), ParamPath.alpha_loop(math.pi / 2, 200))
    assert res.gamma_u == pytest.approx(math.pi, abs=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.4, math.pi - 0.4), st.floats(0.0, 6.0))
def test_electron_connection_is_pure_alpha(theta, alpha):
    s = sampler(ModelParams())
    A = connection(s, ParamPoint(theta, alpha), direction=(0.0, 1.0), h=1e-4)
    assert A.A_u.imag == pytest.approx(0.5, abs=1e-6)
    assert A.A_v.imag == pytest.approx(-0.5, abs=1e-6)
    # theta moves the FI wavevector shift m cos(theta): nonzero but antisymmetric
    At = connection(s, ParamPoint(theta, alpha), direction=(1.0, 0.0), h=1e-4)
    assert At.A_u.imag == pytest.approx(-At.A_v.imag, abs=1e-12)
    assert abs(At.A_total.imag) < 1e-12


def test_flat_curvature(fi_sampler):
    for th in (0.7, 1.5, 2.3):
        B = curvature(fi_sampler, ParamPoint(th, 0.3))
        assert all(abs(v) < 1e-5 for v in B.values())


def test_gauge_invariance_of_closed_loop(fi_sampler):
    path = ParamPath.alpha_loop(1.3, 300, 0.1)
    base = path_phase(fi_sampler, path)
    for Theta in (lambda R: R.alpha, lambda R: 2 * math.cos(R.theta) + math.sin(3 * R.alpha)):
        res = path_phase(gauge_transform(fi_sampler, Theta), path)
        for sec in (Sector.ELECTRON, Sector.HOLE, Sector.FULL):
            assert abs(wrap(res.phase(sec) - base.phase(sec))) < 1e-8


def test_line_integral_second_order(fi_sampler):
    s = restrict_sampler(fi_sampler, "fi")
    errs = [abs(line_integral_phase(s, ParamPath.alpha_loop(math.pi / 2, n)) - math.pi) for n in (16, 32, 64)]
    assert 3.0 < errs[0] / errs[1] < 5.0
    assert 3.0 < errs[1] / errs[2] < 5.0


def test_step_guard():
    with pytest.raises(StepTooCoarse):
        path_phase(two_level_sampler("upper"), ParamPath.alpha_loop(2.9, 3), E)
    with pytest.raises(StepTooCoarse):
        accumulate(np.exp(1j * np.array([0.1, 1.7])))


def test_zero_overlap():
    x = np.array([0.0, 1.0])
    a = NambuSpinor(x, np.array([[1, 0, 0, 0]] * 2))
    b = NambuSpinor(x, np.array([[0, 1, 0, 0]] * 2))
    samp = lambda R: a if R.alpha < 0.5 else b
    with pytest.raises(ZeroOverlap):
        path_phase(samp, ParamPath.segment(ParamPoint(1, 0), ParamPoint(1, 1), 1), E)


def test_constant_sampler_has_no_phase():
    x = np.array([0.0, 1.0])
    psi = NambuSpinor(x, np.array([[1, 1j, 1, -1j]] * 2))
    res = path_phase(constant_sampler(psi), ParamPath.alpha_loop(1.0, 10))
    assert res.gamma_u == res.gamma_v == res.gamma_total == 0.0


def test_unrequested_sectors_are_nan():
    res = path_phase(two_level_sampler(), ParamPath.alpha_loop(1.0, 20), E)
    assert math.isnan(res.gamma_v) and math.isnan(res.gamma_total)
