import math

import numpy as np
import pytest

from blowup_cross import mn_scaling as mn


def test_predictions():
    b = mn.predict_exponents(mn.ScalingSignature(2, 2))
    assert (b.amplitude_exponent, b.width_exponent) == (-1.0, 0.5)
    assert mn.predict_exponents(mn.ScalingSignature(2, 3)).amplitude_exponent == -0.5
    with pytest.raises(ValueError):
        mn.ScalingSignature(2, 1)
    with pytest.raises(ValueError):
        mn.ScalingSignature(0, 2)


def test_fit_exact_power_law():
    t = np.linspace(0.9, 0.99, 40)
    fit = mn.fit_blowup_scaling(t, 1.0 / (1.0 - t))
    assert fit.accepted
    assert fit.t_star_hat == pytest.approx(1.0, abs=1e-3)
    assert fit.exponent_hat == pytest.approx(-1.0, abs=0.01)


def test_fit_square_root_law():
    t = np.linspace(0.0, 0.45, 60)
    fit = mn.fit_blowup_scaling(t, (0.5 - t) ** -0.5)
    assert fit.exponent_hat == pytest.approx(-0.5, abs=1e-3)


def test_fit_rejects_exponential_and_non_monotone():
    t = np.linspace(0, 3, 50)
    assert not mn.fit_blowup_scaling(t, np.exp(t)).accepted
    amp = 1.0 / (1.01 - t / 3)
    amp[-2] = amp[-1] * 1.5
    assert mn.fit_blowup_scaling(t, amp).residual == math.inf


def test_fit_input_validation():
    with pytest.raises(ValueError):
        mn.fit_blowup_scaling([0, 1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        mn.fit_blowup_scaling([0, 1, 2, 3], [1, -2, 3, 4])


def test_half_max_width():
    x = np.linspace(-1, 1, 2001)
    assert mn.half_max_width(x, 1.0 - x ** 2) == pytest.approx(2 * math.sqrt(0.5), abs=1e-6)
    assert math.isnan(mn.half_max_width(x, np.ones_like(x)))


def test_parabola_fixture():
    x = np.linspace(-1, 1, 201)
    assert mn.parabola_fixture(1.0, x).crossings == (0.0,)
    c = mn.parabola_fixture(1.4, x).crossings
    assert c == pytest.approx((-0.2, 0.2))
    s = mn.parabola_fixture(0.0, x)
    assert s.crossings == () and s.v.min() == pytest.approx(0.1)
    assert not s.poles.any()


def test_parabola_pole_flagged():
    s = mn.parabola_fixture(1.0, np.array([-0.5, 0.0, 0.5]))
    assert s.poles.tolist() == [False, True, False]
    assert math.isnan(s.w[1])


def test_local_parabola():
    lp = mn.local_parabola_expansion(2, 0.5, 0.1, 2.0, 0.0, t_star=1.0)
    x = np.linspace(-1, 1, 11)
    # with b = 1/2 this is x**2 + 0.1 (1 - t), i.e. the fixture
    for t in (0.0, 0.5, 1.4):
        assert np.allclose(lp.v(x, t), mn.parabola_fixture(t, x).v)
    assert lp.v(0.0, 1.0) == 0.0


def test_local_parabola_scaling_fit():
    lp = mn.local_parabola_expansion(2, 0.5, 0.1, 2.0, 0.0, t_star=1.0)
    t = np.linspace(0.5, 0.99, 40)
    fit = mn.fit_blowup_scaling(t, np.abs(lp.w(0.0, t)))
    assert fit.exponent_hat == pytest.approx(-1.0, abs=0.05)
