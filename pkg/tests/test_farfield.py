import json

import numpy as np
import pytest
from scipy import special as sp

from farfield_lab.errors import DomainError
from farfield_lab.farfield import (
    DirectionSet,
    FarFieldSamples,
    NoSignal,
    apply_F,
    far_field_constant,
    far_field_from_solution,
    far_field_matrix,
    far_field_via_factorization,
    factorization_residual,
    herglotz_adjoint,
    herglotz_apply,
    holomorphic_extension,
    holomorphic_extension_grid,
    source_far_field,
    uniform_directions,
    w_identity_residual,
)
from farfield_lab.forward import solve_scattering
from farfield_lab.geometry import angle_to_direction, stereo_inverse
from farfield_lab.medium import GridField, disc_medium, plane_wave
from farfield_lab.oracle import mie_build, mie_far_field

THETA = angle_to_direction(0.9)


def born_far_field(k, R, eps, x_hat, theta, n_r=40, n_phi=128):
    """``c_2 k^2 eps int_{|y|<R} e^{i k (theta - x_hat) . y} dy`` by polar Gauss x trapezoid quadrature."""
    t, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * R * (t + 1.0)
    wr = 0.5 * R * w * r
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    y = np.stack([np.outer(r, np.cos(phi)), np.outer(r, np.sin(phi))], axis=-1)
    out = []
    for x in np.atleast_2d(x_hat):
        e = np.exp(1j * k * (y @ (theta - x)))
        out.append(np.sum(wr[:, None] * e) * 2 * np.pi / n_phi)
    c2 = np.exp(0.25j * np.pi) / np.sqrt(8 * np.pi * k)
    return c2 * k**2 * eps * np.array(out)


def born_far_field_cells(m, k, x_hat, theta):
    """Born far field of the piecewise-constant medium, each square cell integrated exactly."""
    q = (m.values - 1.0).ravel()
    pts = m.grid.points()
    hx, hy = m.grid.spacing
    out = []
    for x in np.atleast_2d(x_hat):
        kap = k * (theta - x)
        cell = hx * hy * np.sinc(kap[0] * hx / (2 * np.pi)) * np.sinc(kap[1] * hy / (2 * np.pi))
        out.append(cell * np.sum(q * np.exp(1j * pts @ kap)))
    return far_field_constant(2, k) * k**2 * np.array(out)


@pytest.fixture(scope="module")
def disc_samples(disc96, k):
    d = uniform_directions(32)
    return far_field_matrix(disc96, k, d, d)


def test_far_field_constant_examples():
    assert far_field_constant(3, 1.7) == pytest.approx(0.0795774715, abs=1e-10)
    c = far_field_constant(2, 1.0)
    assert abs(c) == pytest.approx(1 / np.sqrt(8 * np.pi), rel=1e-14)
    assert abs(c) == pytest.approx(0.19947, abs=1e-5)
    assert np.angle(c) == pytest.approx(np.pi / 4, abs=1e-14)
    assert abs(far_field_constant(2, 0.3)) * np.sqrt(0.3) == pytest.approx(abs(far_field_constant(2, 7.0)) * np.sqrt(7.0))
    with pytest.raises(ValueError):
        far_field_constant(4, 1.0)


def test_uniform_directions():
    d = uniform_directions(10)
    assert np.allclose(d.weights, 2 * np.pi / 10)
    assert d.weights.sum() == pytest.approx(2 * np.pi)
    assert np.allclose(-d.directions, np.roll(d.directions, 5, axis=0), atol=1e-15)
    assert np.allclose(d.angles, 2 * np.pi * np.arange(10) / 10)


def test_direction_set_validation():
    with pytest.raises(ValueError):
        DirectionSet(np.zeros((3, 2)), np.ones(2))
    with pytest.raises(ValueError):
        DirectionSet(np.zeros((2, 2)), np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        uniform_directions(0)


def test_free_space_far_fields_vanish(small_free, k):
    d = uniform_directions(8)
    assert far_field_from_solution(small_free, k, solve_scattering(small_free, k, THETA), THETA) == 0
    assert not np.any(far_field_matrix(small_free, k, d, d).U)
    assert far_field_via_factorization(small_free, k, THETA, THETA) == 0


def test_disc_far_field_matches_mie(disc_samples, k):
    X = disc_samples.X.directions
    ref = mie_far_field(mie_build(1.0, 1.5, k), X[:, None, :], X[None, :, :])
    err = np.linalg.norm(disc_samples.U - ref) / np.linalg.norm(ref)
    assert err < 5e-3


@pytest.mark.parametrize("eps", [1e-3, 1e-2])
def test_born_regime_matches_born_integral(k, disc96, eps):
    m = disc_medium((0.0, 0.0), 1.0, 1.0 + eps, disc96.grid)
    X = uniform_directions(16).directions
    u = far_field_from_solution(m, k, solve_scattering(m, k, THETA), X)
    ref = born_far_field_cells(m, k, X, THETA)
    assert np.linalg.norm(u - ref) / np.linalg.norm(ref) <= 2 * eps


def test_cell_born_integral_approaches_disc_born_integral(k, disc96):
    m = disc_medium((0.0, 0.0), 1.0, 1.0 + 1e-3, disc96.grid)
    X = uniform_directions(16).directions
    cells = born_far_field_cells(m, k, X, THETA)
    disc = born_far_field(k, 1.0, 1e-3, X, THETA)
    area_error = (np.count_nonzero(m.values != 1.0) * m.grid.cell_area - np.pi) / np.pi
    assert np.linalg.norm(cells - disc) / np.linalg.norm(disc) < 2 * abs(area_error)


def test_born_quadrature_against_closed_form(k):
    X = uniform_directions(12).directions
    q = born_far_field(k, 0.8, 1.0, X, THETA)
    s = k * np.linalg.norm(THETA - X, axis=1) * 0.8
    disc = np.where(s > 0, 2 * np.pi * 0.8**2 * sp.j1(s) / np.where(s > 0, s, 1), np.pi * 0.8**2)
    assert np.allclose(q, far_field_constant(2, k) * k**2 * disc, rtol=1e-12, atol=0)


def test_reciprocity_of_far_field_matrix(media96, k):
    d = uniform_directions(32)
    for m in media96.values():
        U = far_field_matrix(m, k, d, d).U
        antipodal = np.roll(np.roll(U, 16, axis=0), 16, axis=1).T
        assert np.abs(U - antipodal).max() < 1e-8 * np.abs(U).max()


def test_disc_quarter_turn_and_reflection_equivariance(disc_samples):
    U = disc_samples.U
    turned = np.roll(np.roll(U, 8, axis=0), 8, axis=1)
    assert np.abs(U - turned).max() < 1e-8 * np.abs(U).max()
    flip = (-np.arange(32)) % 32
    assert np.abs(U - U[np.ix_(flip, flip)]).max() < 1e-8 * np.abs(U).max()


def test_disc_rotation_invariance_at_discretization_level(disc_samples):
    U = disc_samples.U
    one_step = np.roll(np.roll(U, 1, axis=0), 1, axis=1)
    assert np.abs(U - one_step).max() < 5e-3 * np.abs(U).max()


def test_herglotz_examples(k, small_grid):
    d = uniform_directions(64)
    A1 = herglotz_apply(np.ones(64), d, k, small_grid).flat
    pts = small_grid.points()
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert np.all(k * r <= 10)
    assert np.abs(A1 - 2 * np.pi * sp.j0(k * r)).max() < 1e-10
    tiny = type(small_grid)((0.0, 0.0), (0.3, 0.3), (3, 3))
    origin = herglotz_apply(np.ones(64), d, k, tiny).flat
    assert origin[4] == pytest.approx(2 * np.pi, abs=1e-13)
    psi = np.zeros(64)
    psi[5] = 1.0
    single = herglotz_apply(psi, d, k, small_grid).flat
    assert np.allclose(single, d.weights[5] * np.exp(1j * k * pts @ d.directions[5]), atol=1e-15)
    with pytest.raises(ValueError):
        herglotz_apply(np.ones(3), d, k, small_grid)


def test_herglotz_adjoint_examples(k, disc96):
    grid = disc96.grid
    zero = GridField(grid, np.zeros(grid.shape))
    assert herglotz_adjoint(zero, THETA, k) == 0
    indicator = GridField(grid, (disc96.values != 1.0).astype(complex))
    val = herglotz_adjoint(indicator, THETA, k)
    ref = 2 * np.pi * sp.j1(k) / k
    assert abs(val - ref) / abs(ref) < 5e-3


def test_adjoint_identity(k, small_grid, rng):
    d = uniform_directions(16)
    psi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    phi = GridField(small_grid, rng.standard_normal(small_grid.shape) + 1j * rng.standard_normal(small_grid.shape))
    lhs = np.sum(d.weights * psi * np.conj(herglotz_adjoint(phi, d, k)))
    rhs = np.sum(herglotz_apply(psi, d, k, small_grid).flat * np.conj(phi.flat)) * small_grid.cell_area
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_apply_F_examples(disc_samples, rng):
    d = disc_samples.Theta
    zero = FarFieldSamples(disc_samples.X, d, np.zeros_like(disc_samples.U), 2.0)
    assert not np.any(apply_F(zero, rng.standard_normal(32)))
    e = np.zeros(32)
    e[3] = 1.0
    assert np.array_equal(apply_F(disc_samples, e), disc_samples.U[:, 3] * d.weights[3])
    g1, g2 = rng.standard_normal(32), rng.standard_normal(32) * 1j
    lin = apply_F(disc_samples, 2.0 * g1 - 3.0 * g2) - (2.0 * apply_F(disc_samples, g1) - 3.0 * apply_F(disc_samples, g2))
    assert np.abs(lin).max() < 1e-13 * np.abs(disc_samples.U).max()
    with pytest.raises(ValueError):
        apply_F(disc_samples, np.ones(31))


def test_F_equals_W_A_columnwise(disc96, disc_samples, k):
    for j in (0, 7, 19):
        f = plane_wave(k, disc_samples.Theta.directions[j], disc96.grid.points())
        col = source_far_field(disc96, k, f, disc_samples.X)
        assert np.abs(col - disc_samples.U[:, j]).max() <= 1e-10 * np.abs(disc_samples.U[:, j]).max()


def test_source_far_field_examples(small_bump, k):
    X = uniform_directions(16)
    assert not np.any(source_far_field(small_bump, k, np.zeros(small_bump.grid.size), X))
    f = plane_wave(k, THETA, small_bump.grid.points())
    direct = far_field_from_solution(small_bump, k, solve_scattering(small_bump, k, THETA), X)
    assert np.abs(source_far_field(small_bump, k, f, X) - direct).max() <= 1e-10 * np.abs(direct).max()


def test_w_identity_random_sources(small_bump, k, rng):
    X = uniform_directions(32)
    for _ in range(3):
        f = rng.standard_normal(small_bump.grid.size) + 1j * rng.standard_normal(small_bump.grid.size)
        assert w_identity_residual(small_bump, k, f, X) < 1e-10
    assert isinstance(w_identity_residual(small_bump, k, np.zeros(small_bump.grid.size), X), NoSignal)


def test_factorization_residual(small_disc, small_free, k, rng):
    d = uniform_directions(32)
    g = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    r = factorization_residual(small_disc, k, d, d, g)
    assert r < 1e-8
    assert factorization_residual(small_disc, k, d, d, (3.0 - 2.0j) * g) == pytest.approx(r, abs=1e-12)
    ns = factorization_residual(small_free, k, d, d, g)
    assert isinstance(ns, NoSignal) and not ns
    assert "vanish" in ns.reason


def test_point_formula_matches_direct_solve(small_bump, k, rng):
    for _ in range(5):
        x, th = angle_to_direction(rng.uniform(0, 2 * np.pi, 2))
        a = far_field_via_factorization(small_bump, k, x, th)
        b = far_field_from_solution(small_bump, k, solve_scattering(small_bump, k, th), x)
        assert abs(a - b) <= 1e-10 * abs(b)
        c = far_field_via_factorization(small_bump, k, -th, -x)
        assert abs(a - c) <= 1e-8 * abs(a)


def test_smoothing_surrogate(disc_samples):
    alpha = disc_samples.Theta.angles
    scale = np.abs(disc_samples.U).max()
    ms = [m for m in (2, 4, 8, 12, 16)]
    norms = np.array([np.linalg.norm(apply_F(disc_samples, np.exp(1j * m * alpha))) for m in ms])
    signal = norms > 1e-12 * scale
    ms, norms = np.array(ms)[signal], norms[signal]
    slopes = np.diff(np.log(norms)) / np.diff(np.log(ms))
    assert len(slopes) >= 3
    assert np.all(np.diff(slopes) < 0)
    assert slopes[-1] < -15


def test_holomorphic_extension_real_restriction(small_bump, k):
    for z, w, cx, ct in [(0.3, -0.6, "plus", "minus"), (-1.2, 0.1, "minus", "plus")]:
        x = stereo_inverse(z, cx)
        th = stereo_inverse(w, ct)
        direct = far_field_from_solution(small_bump, k, solve_scattering(small_bump, k, th), x)
        ext = holomorphic_extension(small_bump, k, z, w, cx, ct)
        assert abs(ext - direct) <= 1e-10 * abs(direct)


def test_holomorphic_extension_cauchy_riemann(small_bump, k):
    h = 1e-3
    z0, w0 = 0.4 + 0.1j, -0.3 + 0.1j
    z = [z0 + h, z0 - h, z0 + 1j * h, z0 - 1j * h]
    H = holomorphic_extension_grid(small_bump, k, z, [w0], "plus", "minus")[:, 0]
    dx = (H[0] - H[1]) / (2 * h)
    dy = (H[2] - H[3]) / (2 * h)
    assert abs(dy - 1j * dx) / abs(dx) < 1e-5
    Hw = holomorphic_extension_grid(small_bump, k, [z0], [w0 + h, w0 - h, w0 + 1j * h, w0 - 1j * h], "plus", "minus")[0]
    dx = (Hw[0] - Hw[1]) / (2 * h)
    dy = (Hw[2] - Hw[3]) / (2 * h)
    assert abs(dy - 1j * dx) / abs(dx) < 1e-5


def test_holomorphic_extension_mean_value(small_bump, k):
    z0, w0 = 0.2 + 0.05j, 0.5
    ring = z0 + 0.05 * np.exp(2j * np.pi * np.arange(64) / 64)
    H = holomorphic_extension_grid(small_bump, k, np.r_[z0, ring], [w0], "minus", "plus")[:, 0]
    assert abs(H[1:].mean() - H[0]) <= 1e-7 * abs(H[0])


def test_holomorphic_extension_outside_V(small_bump, k):
    with pytest.raises(DomainError):
        holomorphic_extension(small_bump, k, 0.1 + 0.6j, 0.0, "plus", "plus")
    with pytest.raises(DomainError):
        holomorphic_extension(small_bump, k, 0.0, 2.6, "plus", "plus")


def test_far_field_samples_serialization(disc_samples, tmp_path):
    disc_samples.write(tmp_path / "ff.csv", tmp_path / "ff.json")
    lines = (tmp_path / "ff.csv").read_text().splitlines()
    assert lines[0] == "alpha_obs,beta_inc,re,im"
    assert len(lines) == 1 + 32 * 32
    a, b, re, im = map(float, lines[1 + 32 * 2 + 5].split(","))
    assert complex(re, im) == disc_samples.U[2, 5]
    header = json.loads((tmp_path / "ff.json").read_text())
    assert header == {"k": 2.0, "N_obs": 32, "N_inc": 32, "medium_hash": disc_samples.medium_hash}
