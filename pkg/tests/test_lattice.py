import math

import numpy as np
import pytest

from mzphase.bdg import SIGMA_X, ModelParams, ParamPoint, Sector, majorana_residual
from mzphase.errors import NoLocalizedZeroMode
from mzphase.holonomy import ParamPath, path_phase
from mzphase.lattice import (
    LatticeSpec,
    build_lattice,
    count_localized_zero_modes,
    lattice_sampler,
    near_zero_eigenpairs,
    zero_mode_numeric,
)

P = ModelParams()
SMALL = LatticeSpec(n_sites=120, spacing=0.2)


def test_spec_validation():
    with pytest.raises(ValueError):
        LatticeSpec(n_sites=32)
    with pytest.raises(ValueError):
        LatticeSpec(spacing=0.0)
    with pytest.raises(ValueError):
        LatticeSpec(n_sites=100, interface_site=100)
    spec = LatticeSpec(n_sites=100, spacing=0.5)
    assert spec.interface_site == 50
    assert spec.positions[49] == pytest.approx(-0.25) and spec.positions[50] == pytest.approx(0.25)


def test_hamiltonian_hermitian_banded_and_particle_hole():
    H = build_lattice(P, ParamPoint(1.0, 0.3), SMALL)
    M = H.matrix
    assert np.allclose(M, M.conj().T)
    i, j = np.nonzero(np.abs(M) > 0)
    assert np.abs(i - j).max() <= 7
    C = np.kron(np.eye(SMALL.n_sites), np.kron(SIGMA_X, np.eye(2)))
    assert np.allclose(C @ M.conj() @ C, -M)


def test_solvers_agree():
    H = build_lattice(P, ParamPoint(1.3, 2.0), SMALL)
    wd, _ = near_zero_eigenpairs(H, 4, "dense")
    wb, vb = near_zero_eigenpairs(H, 4, "banded")
    assert np.allclose(np.sort(wd), np.sort(wb), atol=1e-10)
    assert np.allclose(H.matrix @ vb, vb * wb, atol=1e-8)
    rd = zero_mode_numeric(H, method="dense")
    ri = zero_mode_numeric(H, method="inverse")
    ov = abs(np.vdot(rd.spinor.values, ri.spinor.values)) / (
        np.linalg.norm(rd.spinor.values) * np.linalg.norm(ri.spinor.values)
    )
    assert ov == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        near_zero_eigenpairs(H, 2, "qr")


def test_zero_mode_report():
    rep = zero_mode_numeric(build_lattice(P, ParamPoint(math.pi / 2, 0.0), SMALL))
    assert rep.energy < 1e-4
    assert rep.localization > 0.99
    assert rep.gap_ratio > 1e3
    assert majorana_residual(rep.spinor) < 1e-12


def test_uniform_superconductor_has_no_zero_mode():
    spec = LatticeSpec(n_sites=120, spacing=0.2, interface_site=1)
    with pytest.raises(NoLocalizedZeroMode):
        zero_mode_numeric(build_lattice(P, ParamPoint(math.pi / 2, 0.0), spec))


def test_doubler_control():
    pt = ParamPoint(math.pi / 2, 0.0)
    good = build_lattice(P, pt, LatticeSpec(n_sites=200, spacing=0.1, wilson_r=1.0))
    bad = build_lattice(P, pt, LatticeSpec(n_sites=200, spacing=0.1, wilson_r=0.0))
    assert count_localized_zero_modes(good) == 1
    assert count_localized_zero_modes(bad) == 0
    with pytest.raises(NoLocalizedZeroMode):
        zero_mode_numeric(bad)


def test_lattice_loop_phases():
    s = lattice_sampler(P, SMALL)
    res = path_phase(s, ParamPath.alpha_loop(math.pi / 2, 64))
    assert res.gamma_u == pytest.approx(math.pi, abs=1e-6)
    assert res.gamma_v == pytest.approx(-math.pi, abs=1e-6)
    assert abs(res.gamma_total) < 1e-10


def test_global_gauge_full_loop_is_pi():
    # with an ordinary overall phase the full-spinor Wilson loop is pi;
    # the Majorana-preserving convention moves it into the two sectors
    s = lattice_sampler(P, SMALL, gauge="global")
    res = path_phase(s, ParamPath.alpha_loop(math.pi / 2, 64))
    assert abs(abs(res.gamma_total) - math.pi) < 1e-6
    assert res.wrapped(Sector.ELECTRON) == pytest.approx(math.pi, abs=1e-6)
