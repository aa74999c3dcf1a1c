import numpy as np
import pytest

from farfield_lab.analyticity import fourier_coefficients
from farfield_lab.errors import NonconvergenceError
from farfield_lab.geometry import angle_to_direction
from farfield_lab.oracle import MAX_ORDER, mie_build, mie_far_field, mie_near_field


@pytest.fixture(scope="module")
def mie():
    return mie_build(1.0, 1.5, 2.0)


def test_free_space_has_no_scattering():
    s = mie_build(1.0, 1.0, 2.0)
    assert not np.any(s.b)
    assert mie_far_field(s, [0.0, 1.0], [1.0, 0.0]) == 0
    pts = np.array([[0.3, -0.2], [1.7, 0.4], [-2.0, -3.0]])
    th = angle_to_direction(0.6)
    assert np.allclose(mie_near_field(s, pts, th), np.exp(2j * pts @ th), rtol=0, atol=1e-14)


def test_truncation_certificate(mie):
    assert np.all(mie.matching_residual < 1e-12)
    assert abs(mie.b[-1]) < 1e-14 and abs(mie.b[-2]) < 1e-14
    assert mie.order < MAX_ORDER


def test_small_wavenumber_monopole_dominates():
    r = [abs(s.b[1]) / abs(s.b[0]) for s in (mie_build(1.0, 1.5, 0.1), mie_build(1.0, 1.5, 0.05))]
    assert r[1] < r[0] < 1e-2
    assert r[0] / r[1] == pytest.approx(4.0, rel=0.05)


def test_input_validation():
    with pytest.raises(ValueError):
        mie_build(0.0, 1.5, 2.0)
    with pytest.raises(ValueError):
        mie_build(1.0, 1.5 - 0.1j, 2.0)
    with pytest.raises(NonconvergenceError):
        mie_build(1.0, 1.5, 200.0)


def test_far_field_depends_on_relative_angle_only(mie, rng):
    a, b, rot = rng.uniform(0, 2 * np.pi, (3, 20))
    u = mie_far_field(mie, angle_to_direction(a), angle_to_direction(b))
    v = mie_far_field(mie, angle_to_direction(a + rot), angle_to_direction(b + rot))
    assert np.abs(u - v).max() < 1e-14 * np.abs(u).max()


def test_near_field_continuous_across_boundary(mie):
    phi = np.linspace(0, 2 * np.pi, 100, endpoint=False)
    p = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    th = angle_to_direction(0.3)
    jump = mie_near_field(mie, p * (1 - 1e-13), th) - mie_near_field(mie, p * (1 + 1e-13), th)
    assert np.abs(jump).max() < 1e-10


def test_near_field_approaches_far_field(mie):
    th = angle_to_direction(0.0)
    x = angle_to_direction(1.1)
    r = 4000.0
    us = mie_near_field(mie, r * x, th) - np.exp(2j * r * (x @ th))
    assert us * np.sqrt(r) * np.exp(-2j * r) == pytest.approx(mie_far_field(mie, x, th), rel=1e-3)


def test_lossy_index_is_accepted():
    s = mie_build(0.8, 1.3 + 0.2j, 2.0)
    assert np.all(np.isfinite(s.b)) and np.all(s.matching_residual < 1e-12)


def test_oracle_torus_coefficients_live_on_the_difference_diagonal(mie):
    alpha = 2 * np.pi * np.arange(64) / 64
    d = angle_to_direction(alpha)
    V = mie_far_field(mie, d[:, None, :], d[None, :, :])
    c, om, on = fourier_coefficients(V)
    a = np.abs(c) / np.abs(c).max()
    diagonal = om[:, None] + on[None, :] == 0
    assert a[~diagonal].max() < 1e-14
    orders = np.arange(12)
    env = np.array([a[om == m, on == -m][0] for m in orders])
    slope = np.polyfit(orders[2:], np.log(env[2:]), 1)[0]
    assert slope < -1.0
    assert np.all(np.diff(env[2:]) < 0)


def test_coefficient_csv(mie, tmp_path):
    mie.to_csv(tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "m,re_b,im_b"
    assert len(lines) == mie.order + 2
    m, re, im = lines[3].split(",")
    assert complex(float(re), float(im)) == mie.b[2]
