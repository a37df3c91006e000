import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mzphase.bdg import ModelParams, ParamPoint, Region, bdg_kernel, majorana_residual, norm
from mzphase.errors import DegenerateInPlane, EvanescentConditionViolated
from mzphase.junction import (
    default_grid,
    derived_params,
    evanescent_modes,
    fi_phase_lock_error,
    match_interface,
    sampler,
    sector_gauge,
    zero_energy_residual,
)
from mzphase.lattice import LatticeSpec, build_lattice, zero_mode_numeric


def test_derived_params_reference_values():
    d = derived_params(ModelParams(), math.pi / 2)
    assert d.m_par == pytest.approx(1.0)
    assert d.phi == pytest.approx(math.pi / 2)
    assert d.k_F == pytest.approx(1.0)
    assert d.K_SC == pytest.approx(1.0)
    d = derived_params(ModelParams(mu_FI=0.6), math.pi / 2)
    assert d.k_F == pytest.approx(0.8)
    assert d.phi == pytest.approx(math.atan2(0.8, 0.6))
    # m cos(theta) only shifts the wavevector
    assert derived_params(ModelParams(m=2.0), math.pi / 3).k_m == pytest.approx(1.0)


def test_derived_params_sc_wavevector_from_dispersion():
    p = ModelParams(mu_SC=0.7, delta=0.5)
    d = derived_params(p, math.pi / 2)
    # SC zero-energy modes: k = +-mu_SC/(hbar v_f) + i Delta/(hbar v_f)
    assert d.k_mSC == pytest.approx(0.7)
    assert d.k_mSC_printed == pytest.approx(1 / 0.7)
    assert math.isinf(derived_params(ModelParams(), 1.0).k_mSC_printed)


@pytest.mark.parametrize("theta", [0.0, math.pi])
def test_out_of_plane_rejected(theta):
    with pytest.raises(DegenerateInPlane, match="in-plane magnetization vanishes"):
        derived_params(ModelParams(), theta)


def test_evanescent_condition():
    with pytest.raises(EvanescentConditionViolated):
        match_interface(ModelParams(mu_FI=1.0), ParamPoint(math.pi / 2, 0.0))
    with pytest.raises(EvanescentConditionViolated):
        derived_params(ModelParams(mu_FI=0.5), 0.4)  # m sin(0.4) < 0.5


def test_modes_solve_kernel_and_decay():
    p = ModelParams(mu_FI=0.3, mu_SC=0.2)
    pt = ParamPoint(1.1, 0.7)
    for region, sign in ((Region.FI, 1), (Region.SC, -1)):
        modes = evanescent_modes(p, pt if region is Region.FI else None, region)
        assert len(modes) == 2
        for mode in modes:
            assert sign * mode.lam.real > 0
            H = bdg_kernel(p, pt if region is Region.FI else None, region, -1j * mode.lam)
            assert np.linalg.norm(H @ mode.chi) < 1e-12
    fi = evanescent_modes(p, pt, Region.FI)
    kF = derived_params(p, 1.1).k_F
    assert sorted(m.lam.real for m in fi) == pytest.approx([kF, kF])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.35, math.pi - 0.35), st.floats(-4.0, 4.0), st.floats(-0.3, 0.3), st.floats(-0.5, 0.5))
def test_bound_state_properties(theta, alpha, mu_fi, mu_sc):
    p = ModelParams(mu_FI=mu_fi, mu_SC=mu_sc)
    state = match_interface(p, ParamPoint(theta, alpha), default_grid(p, (theta,), n_points=801))
    assert state.match_residual < 1e-10
    assert zero_energy_residual(p, state) < 1e-10
    assert majorana_residual(state.spinor) < 1e-10
    assert fi_phase_lock_error(state, derived_params(p, theta).phi) < 1e-8
    assert norm(state.spinor) == pytest.approx(1.0)


def test_sector_gauge_keeps_majorana_and_fixes_phase():
    s = sampler(ModelParams())
    psi = s(ParamPoint(1.0, 2.5))
    site = s.interface_site
    assert majorana_residual(psi) < 1e-12
    z = psi.values[site, 0]
    assert abs(z.imag) < 1e-14 and z.real > 0
    again = sector_gauge(psi, site)
    assert np.allclose(again.values, psi.values)


def test_analytic_state_matches_lattice_oracle():
    p = ModelParams(mu_FI=0.2)
    pt = ParamPoint(1.2, 0.9)
    spec = LatticeSpec(n_sites=800, spacing=0.05)
    rep = zero_mode_numeric(build_lattice(p, pt, spec))
    x = spec.positions
    an = match_interface(p, pt, default_grid(p, (1.2,), n_points=8001)).spinor
    vals = np.stack(
        [np.interp(x, an.grid, an.values[:, c].real) + 1j * np.interp(x, an.grid, an.values[:, c].imag) for c in range(4)],
        axis=1,
    )
    lat = rep.spinor.values
    ov = abs(np.vdot(lat, vals)) / (np.linalg.norm(lat) * np.linalg.norm(vals))
    assert ov > 0.99
