import math

import numpy as np
import pytest

from blowup_cross.ode_engine import (
    IntegratorConfig,
    OdeProblem,
    any_of,
    integrate_until,
    magnitude_reached,
    rhs_eval,
    time_reached,
    value_below,
)


def test_power_two_hits_level_at_exact_time():
    seg = integrate_until(OdeProblem.power(2, 1.0), IntegratorConfig(), magnitude_reached(100.0))
    assert seg.termination == "predicate_hit"
    # x = 1/(1 - t) reaches 100 at t = 0.99
    assert seg.last_t == pytest.approx(0.99, abs=1e-9)
    assert abs(seg.event_residual) <= 1e-12


def test_linear_growth_matches_exponential():
    seg = integrate_until(OdeProblem.linear(1.0), IntegratorConfig(), time_reached(1.0))
    assert seg.last_t == pytest.approx(1.0, abs=1e-12)
    assert seg.last_state[0] == pytest.approx(math.e, rel=1e-9)


def test_decay_sign():
    seg = integrate_until(OdeProblem.linear(2.0, sign=-1), IntegratorConfig(), time_reached(3.0))
    assert seg.last_state[0] == pytest.approx(2.0 * math.exp(-3.0), rel=1e-9)


def test_blowup_without_switch_underflows():
    seg = integrate_until(OdeProblem.power(2, 1.0), IntegratorConfig(), time_reached(2.0))
    assert seg.termination == "step_underflow"
    assert seg.last_t < 1.0


def test_max_steps_reported():
    cfg = IntegratorConfig(max_step=1e-3, max_steps=10)
    seg = integrate_until(OdeProblem.linear(1.0), cfg, time_reached(1.0))
    assert seg.termination == "max_steps"
    assert len(seg.t) == 11


def test_good_constant_reaches_zero_at_closed_form_time():
    prob = OdeProblem.good_constant(-1.0, 0.01, t0=0.99)
    seg = integrate_until(prob, IntegratorConfig(), value_below(0.0))
    assert seg.last_t == pytest.approx(1.0, abs=1e-12)


def test_good_affine_matches_closed_form():
    prob = OdeProblem.good_affine(-2.0, -1.0, 0.01)
    seg = integrate_until(prob, IntegratorConfig(), time_reached(0.5))
    exact = (0.01 + 0.5) * math.exp(-1.0) - 0.5
    assert seg.last_state[0] == pytest.approx(exact, abs=1e-11)


def test_initial_event_already_satisfied():
    seg = integrate_until(OdeProblem.power(2, 200.0), IntegratorConfig(), magnitude_reached(100.0))
    assert seg.termination == "predicate_hit"
    assert len(seg.t) == 1


def test_any_of_stops_at_first():
    stop = any_of(time_reached(0.5), magnitude_reached(100.0))
    seg = integrate_until(OdeProblem.power(2, 1.0), IntegratorConfig(), stop)
    assert seg.last_t == pytest.approx(0.5, abs=1e-12)


def test_complex_rhs_is_z_squared_and_cubed():
    z = complex(0.3, -1.2)
    q = rhs_eval(OdeProblem.complex_quadratic(z.real, z.imag), 0.0, [z.real, z.imag])
    c = rhs_eval(OdeProblem.complex_cubic(z.real, z.imag), 0.0, [z.real, z.imag])
    assert complex(*q) == pytest.approx(z ** 2)
    assert complex(*c) == pytest.approx(z ** 3)


def test_non_integer_power_keeps_sign():
    prob = OdeProblem.power(2.5, -4.0)
    assert rhs_eval(prob, 0.0, [-4.0])[0] == pytest.approx(-32.0)
    assert prob.scalar_rate(np.array([-4.0, 4.0])) == pytest.approx([-32.0, 32.0])


@pytest.mark.parametrize("kwargs", [
    {"rel_tol": 0.0}, {"abs_tol": -1.0}, {"initial_step": 0.0}, {"max_step": 0.0}, {"max_steps": 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        IntegratorConfig(**kwargs)


def test_problem_validation():
    with pytest.raises(ValueError):
        OdeProblem("nope", [1.0])
    with pytest.raises(ValueError):
        OdeProblem("complex_quadratic", [1.0])
    with pytest.raises(ValueError):
        OdeProblem.power(2, 1.0, sign=2.0)
    with pytest.raises(ValueError):
        rhs_eval(OdeProblem.power(2, 1.0), 0.0, [1.0, 2.0])


def test_initial_state_is_frozen():
    prob = OdeProblem.power(2, 1.0)
    with pytest.raises(ValueError):
        prob.initial_state[0] = 3.0
