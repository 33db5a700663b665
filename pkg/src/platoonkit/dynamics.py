"""Longitudinal vehicle model: nonlinear plant, powertrain lag, and the
feedback-linearizing torque law.

The plant integrates (p, v, T); acceleration is algebraic in (v, T) and the
environment,

    m a = (eta/r) T - 0.5 rho c_d vbar|vbar| - m g sin(theta)
          - m g mu cos(theta) sgn(vbar),

with vbar = v + v_wind and a first-order torque lag tau Tdot = T_cmd - T.
The linearizing torque law cancels the drag/grade/rolling terms so the
acceleration channel obeys tau adot = u - a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of one vehicle (mid-size passenger car defaults)."""

    mass: float = 1613.0            # kg
    driveline_efficiency: float = 1.0
    tire_radius: float = 0.34       # m
    air_density: float = 1.225      # kg/m^3
    drag_coefficient: float = 0.62
    gravity: float = 9.8            # m/s^2
    rolling_resistance: float = 0.01
    powertrain_tau: float = 0.15    # s
    length: float = 0.0             # m

    def __post_init__(self):
        positive = (
            self.mass,
            self.driveline_efficiency,
            self.tire_radius,
            self.air_density,
            self.drag_coefficient,
            self.gravity,
            self.powertrain_tau,
        )
        if any(x <= 0 for x in positive):
            raise ValueError("vehicle parameters must be strictly positive")
        if not 0 < self.driveline_efficiency <= 1:
            raise ValueError("driveline efficiency must be in (0, 1]")
        if self.length < 0 or self.rolling_resistance < 0:
            raise ValueError("length and rolling resistance must be >= 0")

    def perturbed(self, *, drag_scale=1.0, rolling_scale=1.0, tau_scale=1.0) -> "VehicleParams":
        """Copy with multiplicative mismatch on the uncertain parameters.

        Used to emulate an imperfect torque linearization: the controller
        sees these values while the plant keeps the true ones.
        """
        return replace(
            self,
            drag_coefficient=self.drag_coefficient * drag_scale,
            rolling_resistance=self.rolling_resistance * rolling_scale,
            powertrain_tau=self.powertrain_tau * tau_scale,
        )


@dataclass(frozen=True)
class VehicleState:
    """Kinematic state of one vehicle.

    ``engine_torque`` is the plant-side actuator state; ``error_integral``
    is the controller-side accumulated spacing-error sum.
    """

    position: float = 0.0
    velocity: float = 0.0
    acceleration: float = 0.0
    engine_torque: float = 0.0
    error_integral: float = 0.0

    def __post_init__(self):
        vals = (self.position, self.velocity, self.acceleration,
                self.engine_torque, self.error_integral)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("vehicle state must be finite")


@dataclass(frozen=True)
class EnvSample:
    """Environment acting on one vehicle at one instant.

    Rates are zero for step disturbances (steps are applied between
    integration steps, never as impulses).  ``input_bias`` is an additive
    disturbance on the desired-acceleration channel.
    """

    slope: float = 0.0        # rad
    slope_rate: float = 0.0   # rad/s
    wind: float = 0.0         # m/s, positive increases drag-relative speed
    wind_rate: float = 0.0    # m/s^2
    input_bias: float = 0.0   # m/s^2

    def __post_init__(self):
        if abs(self.slope) >= math.pi / 2:
            raise ValueError("slope magnitude must be below pi/2")


def _sgn(x: float) -> float:
    """Sign with a static-friction dead zone at zero relative speed."""
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def acceleration_from_torque(velocity, torque, env: EnvSample, params: VehicleParams):
    """Algebraic acceleration implied by the longitudinal force balance."""
    vbar = velocity + env.wind
    drive = params.driveline_efficiency / params.tire_radius * torque
    drag = 0.5 * params.air_density * params.drag_coefficient * vbar * abs(vbar)
    grade = params.mass * params.gravity * math.sin(env.slope)
    roll = params.mass * params.gravity * params.rolling_resistance * math.cos(env.slope) * _sgn(vbar)
    return (drive - drag - grade - roll) / params.mass


def nonlinear_derivative(
    state: VehicleState,
    commanded_torque: float,
    env: EnvSample,
    params: VehicleParams,
) -> VehicleState:
    """Time derivative of the plant state (p, v, T).

    The returned VehicleState carries (pdot, vdot, adot-slot, Tdot); the
    acceleration slot holds the rate implied by the lag chain, but the plant
    itself integrates only (p, v, T) and re-derives a algebraically.
    """
    if not math.isfinite(commanded_torque):
        raise ValueError("commanded torque must be finite")
    a = acceleration_from_torque(state.velocity, state.engine_torque, env, params)
    tdot = (commanded_torque - state.engine_torque) / params.powertrain_tau
    vbar = state.velocity + env.wind
    # rate of the algebraic acceleration, holding the env rates explicit
    vbar_dot = a + env.wind_rate
    m, g = params.mass, params.gravity
    adot = (
        params.driveline_efficiency / params.tire_radius * tdot
        - params.air_density * params.drag_coefficient * abs(vbar) * vbar_dot
        - m * g * math.cos(env.slope) * env.slope_rate
        + m * g * params.rolling_resistance * math.sin(env.slope) * env.slope_rate * _sgn(vbar)
    ) / m
    return VehicleState(
        position=state.velocity,
        velocity=a,
        acceleration=adot,
        engine_torque=tdot,
        error_integral=0.0,
    )


def feedback_linearize(
    u_desired: float,
    state: VehicleState,
    env: EnvSample,
    params_hat: VehicleParams,
) -> float:
    """Desired torque that cancels the nonlinear force terms.

    Evaluated with the controller's parameter estimates ``params_hat``; when
    these match the plant and the environment rates are exact, the closed
    acceleration channel reduces to tau adot = u - a.

    The drag-rate bracket uses the exact-cancellation form
    2|vbar| = |vbar| + vbar^2/|vbar|.
    """
    p = params_hat
    tau = p.powertrain_tau
    vbar = state.velocity + env.wind
    vbar_dot = state.acceleration + env.wind_rate
    m, g = p.mass, p.gravity
    s = _sgn(vbar)
    drag = 0.5 * p.air_density * p.drag_coefficient * (
        vbar * abs(vbar) + 2.0 * tau * vbar_dot * abs(vbar)
    )
    roll = -m * g * p.rolling_resistance * (
        math.sin(env.slope) * env.slope_rate * tau - math.cos(env.slope)
    ) * s
    grade = m * g * (math.cos(env.slope) * env.slope_rate * tau + math.sin(env.slope))
    torque = p.tire_radius / p.driveline_efficiency * (drag + roll + grade + m * u_desired)
    if not math.isfinite(torque):
        raise ValueError("linearizing torque is not finite")
    return torque


def equilibrium_torque(velocity, env: EnvSample, params: VehicleParams) -> float:
    """Torque balancing drag, grade, and rolling resistance at constant speed."""
    vbar = velocity + env.wind
    m, g = params.mass, params.gravity
    force = (
        0.5 * params.air_density * params.drag_coefficient * vbar * abs(vbar)
        + m * g * math.sin(env.slope)
        + m * g * params.rolling_resistance * math.cos(env.slope) * _sgn(vbar)
    )
    return params.tire_radius / params.driveline_efficiency * force


@dataclass(frozen=True)
class LinearModel:
    """Integrator-chain state-space model of the linearized vehicle."""

    order: int
    A: np.ndarray
    B: np.ndarray


def linear_model(order: int, params: VehicleParams) -> LinearModel:
    """Build the linear vehicle model.

    order 3: states (p, v, a).  order 4: (s, p, v, a) with the added
    spacing-error integral state.  The bottom-right entry is -1/tau and the
    input enters through 1/tau.
    """
    if order not in (3, 4):
        raise ValueError("order must be 3 or 4")
    tau = params.powertrain_tau
    a = np.zeros((order, order))
    for i in range(order - 1):
        a[i, i + 1] = 1.0
    a[-1, -1] = -1.0 / tau
    b = np.zeros((order, 1))
    b[-1, 0] = 1.0 / tau
    a.setflags(write=False)
    b.setflags(write=False)
    return LinearModel(order=order, A=a, B=b)
