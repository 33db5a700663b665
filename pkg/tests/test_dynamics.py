"""Vehicle force balance, linearizing torque law, and linear models."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platoonkit import (
    EnvSample,
    VehicleParams,
    VehicleState,
    acceleration_from_torque,
    equilibrium_torque,
    feedback_linearize,
    linear_model,
    nonlinear_derivative,
)

P = VehicleParams()


def test_default_params_are_reference_values():
    assert P.mass == 1613.0
    assert P.tire_radius == 0.34
    assert P.powertrain_tau == 0.15
    assert P.drag_coefficient == 0.62
    assert P.air_density == 1.225
    assert P.rolling_resistance == 0.01
    assert P.gravity == 9.8


def test_acceleration_from_torque_hand_value():
    # at 20 m/s, zero torque, flat road: a = -(drag + roll)/m
    drag = 0.5 * 1.225 * 0.62 * 400.0
    roll = 1613.0 * 9.8 * 0.01
    expected = -(drag + roll) / 1613.0
    a = acceleration_from_torque(20.0, 0.0, EnvSample(), P)
    assert a == pytest.approx(expected, rel=1e-12)


def test_coasting_deceleration_with_grade():
    # frozen oracle: zero torque at 15 m/s on a 10 degree upslope
    a = acceleration_from_torque(15.0, 0.0, EnvSample(slope=math.radians(10.0)), P)
    assert a == pytest.approx(-1.8512, abs=2e-4)


def test_equilibrium_torque_balances():
    for v in (5.0, 15.0, 30.0):
        env = EnvSample(slope=0.05, wind=3.0)
        t_eq = equilibrium_torque(v, env, P)
        assert acceleration_from_torque(v, t_eq, env, P) == pytest.approx(0.0, abs=1e-12)


def test_wind_enters_through_relative_speed():
    a_wind = acceleration_from_torque(15.0, 100.0, EnvSample(wind=20.0), P)
    a_fast = acceleration_from_torque(35.0, 100.0, EnvSample(), P)
    assert a_wind == pytest.approx(a_fast, rel=1e-12)


def test_linearization_closes_the_lag_channel():
    # with matched parameters and exact env rates, combining the torque law
    # with the plant derivative must give  tau adot = u - a  exactly
    state = VehicleState(position=3.0, velocity=17.0, engine_torque=250.0)
    env = EnvSample(slope=0.1, slope_rate=0.02, wind=5.0, wind_rate=-0.3)
    a = acceleration_from_torque(state.velocity, state.engine_torque, env, P)
    state = VehicleState(position=3.0, velocity=17.0, acceleration=a,
                         engine_torque=250.0)
    for u in (-2.0, 0.0, 1.5):
        cmd = feedback_linearize(u, state, env, P)
        deriv = nonlinear_derivative(state, cmd, env, P)
        assert deriv.acceleration == pytest.approx((u - a) / P.powertrain_tau, rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(
    v=st.floats(min_value=0.5, max_value=40.0),
    torque=st.floats(min_value=-500.0, max_value=2000.0),
    slope=st.floats(min_value=-0.3, max_value=0.3),
    wind=st.floats(min_value=-10.0, max_value=25.0),
    u=st.floats(min_value=-3.0, max_value=3.0),
)
def test_linearization_closes_channel_property(v, torque, slope, wind, u):
    env = EnvSample(slope=slope, wind=wind)
    if abs(v + wind) < 1e-3:
        return  # sign kink of the rolling term
    a = acceleration_from_torque(v, torque, env, P)
    state = VehicleState(velocity=v, acceleration=a, engine_torque=torque)
    cmd = feedback_linearize(u, state, env, P)
    deriv = nonlinear_derivative(state, cmd, env, P)
    assert deriv.acceleration == pytest.approx((u - a) / P.powertrain_tau,
                                               rel=1e-8, abs=1e-8)


def test_mismatched_params_leave_residual():
    hat = P.perturbed(drag_scale=1.10, rolling_scale=1.20, tau_scale=0.90)
    assert hat.drag_coefficient == pytest.approx(0.682)
    state = VehicleState(velocity=15.0, acceleration=0.0,
                         engine_torque=equilibrium_torque(15.0, EnvSample(), P))
    cmd = feedback_linearize(0.0, state, EnvSample(), hat)
    deriv = nonlinear_derivative(state, cmd, EnvSample(), P)
    assert deriv.acceleration != pytest.approx(0.0, abs=1e-4)


def test_linear_model_shapes_and_structure():
    m3 = linear_model(3, P)
    m4 = linear_model(4, P)
    assert m3.A.shape == (3, 3) and m3.B.shape == (3, 1)
    assert m4.A.shape == (4, 4) and m4.B.shape == (4, 1)
    tau = P.powertrain_tau
    assert m4.A[-1, -1] == pytest.approx(-1.0 / tau)
    assert m4.B[-1, 0] == pytest.approx(1.0 / tau)
    # integrator chain above the lag row
    assert np.allclose(m4.A[:-1, 1:], np.eye(3))
    with pytest.raises(ValueError):
        linear_model(5, P)


def test_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        VehicleParams(mass=-1.0)
    with pytest.raises(ValueError):
        VehicleParams(driveline_efficiency=1.5)
    with pytest.raises(ValueError):
        EnvSample(slope=2.0)
    with pytest.raises(ValueError):
        VehicleState(position=math.nan)
