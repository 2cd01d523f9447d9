import numpy as np
import pytest

from blowup_cross import compactify as cz


def test_power_orbit_unit_norm():
    t = np.linspace(-3, 0.999, 200)
    pt = cz.circle_power(t, 1.0 / (1.0 - t), 1.0)
    assert np.max(np.abs(pt.residual)) <= 1e-12


def test_power_limits():
    near = cz.circle_power(1.0 - 1e-9, 1e9, 1.0)
    assert (float(near.X), float(near.Y)) == pytest.approx((-1.0, 0.0), abs=1e-8)
    assert float(near.Y) > 0
    far = cz.circle_power(1e8, 1.0 / (1.0 - 1e8), 1.0)
    assert float(far.X) == pytest.approx(1.0, abs=1e-7)
    assert float(far.Y) < 0


def test_pole():
    with pytest.raises(cz.PoleError):
        cz.circle_power(0.0, -1.0, 1.0)


def test_non_integer_exponent_needs_time_before_t_star():
    with pytest.raises(ValueError):
        cz.circle_power(2.0, 1.0, 1.0, a=0.5)


def test_exponential_values():
    pt = cz.circle_exponential(0.0, 1.0, 0.0)
    assert (float(pt.X), float(pt.Y)) == pytest.approx((0.0, 1.0))
    pt = cz.circle_exponential(5.0, np.exp(5.0), 0.0, sign=1.0)
    assert float(pt.X) == pytest.approx(np.tanh(-5.0))
    assert float(pt.Y) == pytest.approx(1.0 / np.cosh(5.0))


def test_off_orbit_normalize():
    raw = cz.circle_exponential(0.3, 7.0, 0.0)
    assert abs(float(raw.residual)) > 1e-3
    fixed = cz.circle_exponential(0.3, 7.0, 0.0, normalize=True)
    assert abs(float(fixed.residual)) <= 1e-15
    assert float(fixed.angle) == pytest.approx(float(raw.angle))


def test_asymptotic_limit_matches_power():
    t_star = 0.5
    t = t_star - np.linspace(1e-6, 1e-3, 50)
    x = 2.0 / np.expm1(2.0 * (t_star - t))
    a = cz.circle_asymptotic(t, x, t_star)
    b = cz.circle_power(t, x, t_star)
    assert np.max(np.abs(a.X - b.X)) <= 1e-6
    assert np.max(np.abs(a.Y - b.Y)) <= 1e-6


def test_asymptotic_at_t_star():
    pt = cz.circle_asymptotic(0.5 - 1e-12, 1e12, 0.5)
    assert (float(pt.X), float(pt.Y)) == pytest.approx((-1.0, 0.0), abs=1e-9)


def test_from_inverse_agrees_with_power():
    t = np.array([0.2, 0.7, 1.4])
    x = 1.0 / (1.0 - t)
    a = cz.circle_power(t, x, 1.0)
    b = cz.circle_from_inverse(t, 1.0 / x, 1.0)
    assert np.allclose(a.X, b.X) and np.allclose(a.Y, b.Y)
    z = cz.circle_from_inverse(1.0, 0.0, 1.0)
    assert (float(z.X), float(z.Y)) == (-1.0, 0.0)


def test_riemann_fixed_points():
    s = cz.riemann_sphere(0.0, 0.0)
    assert (float(s.X), float(s.Y), float(s.Z)) == (0.0, 0.0, -1.0)
    s = cz.riemann_sphere(1.0, 0.0)
    assert (float(s.X), float(s.Y), float(s.Z)) == pytest.approx((1.0, 0.0, 0.0))
    s = cz.riemann_sphere(1e8, 0.0)
    assert float(s.Z) == pytest.approx(1.0, abs=1e-12)
    assert abs(float(s.X)) < 1e-7


def test_riemann_huge_inputs_do_not_overflow():
    s = cz.riemann_sphere(1e200, -1e200)
    assert np.isfinite(float(s.X))
    assert float(s.Z) == pytest.approx(1.0)


def test_riemann_real_axis_on_great_circle():
    s = cz.riemann_sphere(np.linspace(-50, 50, 101), 0.0)
    assert np.all(s.Y == 0.0)


def test_pde_sphere_examples():
    s = cz.pde_sphere(1.0 / 0.5, 0.5, 1.0, 1.0, 1.0)
    assert (float(s.X), float(s.Y), float(s.Z)) == pytest.approx((0.0, 0.0, 1.0))
    s = cz.pde_sphere(0.0, 0.5, 1.0, 1.0, 0.0)
    assert float(s.Z) == 0.0


def test_pde_sphere_self_similar_field():
    xi, tt = np.meshgrid(np.linspace(-4, 4, 41), np.linspace(0.0, 0.99, 30))
    f = 1.0 / np.cosh(xi)
    s = cz.pde_sphere(f / (1.0 - tt), tt, 1.0, 1.0, f)
    assert np.max(np.abs(s.residual)) <= 1e-10


def test_pde_sphere_validation():
    with pytest.raises(ValueError):
        cz.pde_sphere(1.0, 0.0, 1.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        cz.pde_sphere(1.0, 0.0, 1.0, 1.0, -0.2)
