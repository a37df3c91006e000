import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mzphase.bdg import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    Field,
    ModelParams,
    NambuSpinor,
    ParamPoint,
    Region,
    bdg_kernel,
    inner_product,
    kernel_parts,
    majorana_residual,
    norm,
    normalized,
    particle_hole,
    project,
    to_nambu_frame,
)
from mzphase.errors import GridMismatch

TAU_X = np.kron(SIGMA_X, np.eye(2))

angles = st.floats(0.0, math.pi)
azimuths = st.floats(-10.0, 10.0)
wavevectors = st.floats(-50.0, 50.0)
chem = st.floats(-2.0, 2.0)


@settings(max_examples=60, deadline=None)
@given(angles, azimuths, wavevectors, chem, st.sampled_from(list(Region)))
def test_kernel_hermitian_and_particle_hole(theta, alpha, k, mu, region):
    p = ModelParams(mu_FI=mu, mu_SC=-mu, m=1.3, delta=0.7)
    H = bdg_kernel(p, ParamPoint(theta, alpha), region, k)
    assert np.allclose(H, H.conj().T, atol=1e-14)
    # C = tau_x K maps H(k) to -H(-k)
    Hm = bdg_kernel(p, ParamPoint(theta, alpha), region, -k)
    assert np.allclose(TAU_X @ H.conj() @ TAU_X, -Hm, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(wavevectors, st.floats(0.1, 3.0))
def test_sc_spectrum_is_gapped_dirac(k, delta):
    p = ModelParams(delta=delta)
    w = np.linalg.eigvalsh(bdg_kernel(p, None, Region.SC, k))
    e = math.sqrt(k * k + delta * delta)
    assert np.allclose(np.sort(w), [-e, -e, e, e], atol=1e-10)


def test_fi_spectrum_in_plane_gap():
    # mu = 0, in-plane field: |E| = sqrt(k^2 + m^2)
    p = ModelParams(m=0.8)
    w = np.linalg.eigvalsh(bdg_kernel(p, ParamPoint(math.pi / 2, 0.4), Region.FI, 0.0))
    assert np.allclose(np.abs(w), 0.8)


def test_nambu_frame_blocks():
    p = ModelParams(mu_FI=0.3, mu_SC=0.3, m=0.9, delta=0.6)
    k = 0.7
    pt = ParamPoint(1.0, 0.5)
    F = to_nambu_frame(np.eye(4)).T
    H = F @ bdg_kernel(p, pt, Region.FI, k) @ F.conj().T
    mvec = 0.9 * np.array([math.sin(1.0) * math.cos(0.5), math.sin(1.0) * math.sin(0.5), math.cos(1.0)])
    mdot = mvec[0] * SIGMA_X + mvec[1] * SIGMA_Y + mvec[2] * SIGMA_Z
    assert np.allclose(H[2:, 2:], -k * SIGMA_Z + 0.3 * np.eye(2) + mdot)
    Hs = F @ bdg_kernel(p, None, Region.SC, k) @ F.conj().T
    assert np.allclose(Hs[:2, 2:], 0.6 * np.eye(2))


def test_kernel_parts_split():
    p = ModelParams(v_f=2.0, hbar=0.5)
    H0, H1 = kernel_parts(p, ParamPoint(0.3, 0.2), Region.FI)
    assert np.allclose(bdg_kernel(p, ParamPoint(0.3, 0.2), "fi", 1.7), H0 + 1.7 * H1)
    assert np.allclose(np.diag(H1), [1, -1, 1, -1])


def test_kernel_rejects_nonfinite_k():
    with pytest.raises(ValueError):
        bdg_kernel(ModelParams(), ParamPoint(1, 0), Region.FI, math.inf)


@pytest.mark.parametrize(
    "kwargs", [dict(m=0.0), dict(delta=-1.0), dict(v_f=0.0), dict(mu_FI=math.nan)]
)
def test_model_params_validation(kwargs):
    with pytest.raises(ValueError):
        ModelParams(**kwargs)


def test_param_point_validation():
    with pytest.raises(ValueError):
        ParamPoint(-0.1, 0.0)
    with pytest.raises(ValueError):
        ParamPoint(1.0, math.inf)
    assert ParamPoint(1.0, 2.0).shifted(0.5, -1.0) == ParamPoint(1.5, 1.0)


def test_field_validation():
    with pytest.raises(ValueError):
        Field(np.array([0.0, 0.0, 1.0]), np.zeros(3))
    with pytest.raises(ValueError):
        Field(np.array([0.0]), np.zeros(1))
    with pytest.raises(ValueError):
        NambuSpinor(np.array([0.0, 1.0]), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        Field(np.array([0.0, 1.0]), np.array([1.0, math.nan]))


def test_grid_mismatch():
    a = Field(np.array([0.0, 1.0]), np.ones(2))
    b = Field(np.array([0.0, 2.0]), np.ones(2))
    with pytest.raises(GridMismatch):
        inner_product(a, b)
    with pytest.raises(GridMismatch):
        a + b


def test_trapezoid_inner_product_exact_for_linear():
    x = np.linspace(0.0, 2.0, 5)
    f = Field(x, x.astype(complex))
    g = Field(x, np.ones_like(x))
    assert inner_product(g, f) == pytest.approx(2.0)
    assert norm(normalized(f)) == pytest.approx(1.0)


def _majorana_spinor(seed=0):
    rng = np.random.default_rng(seed)
    x = np.linspace(-1, 1, 21)
    u = rng.normal(size=(21, 2)) + 1j * rng.normal(size=(21, 2))
    return NambuSpinor(x, np.concatenate([u, u.conj()], axis=1))


def test_particle_hole_involution_and_majorana():
    psi = _majorana_spinor()
    assert majorana_residual(psi) < 1e-14
    assert np.allclose(particle_hole(psi).values, psi.values)
    phi = psi * 1j
    assert majorana_residual(phi) > 0.1
    assert np.allclose(particle_hole(particle_hole(phi)).values, phi.values)


def test_project_sectors():
    psi = _majorana_spinor(1)
    e = project(psi, "electron")
    h = project(psi, "hole")
    assert np.allclose(e.values, psi.values[:, :2])
    assert np.allclose(h.values[:, 0], psi.values[:, 2])
    assert np.allclose(h.values[:, 1], -psi.values[:, 3])
    assert project(psi, "full") is psi
