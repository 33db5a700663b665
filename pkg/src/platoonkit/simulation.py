"""Closed-loop platoon simulation: disturbance schedule, RK4 runs, metrics.

The default scenario is a ten-vehicle platoon (leader plus nine followers)
cruising at 15 m/s with 10 m gaps, hit in sequence by a leader acceleration
pulse, a road-slope step triggered by each vehicle's own position, and a
head-wind step applied platoon-wide at a fixed time.  The controller's
linearizing torque uses its own parameter estimates and assumes a
disturbance-free environment, so slope/wind/mismatch act as genuine
unmeasured disturbances.

Spacing errors follow the front-gap convention

    e_i = p_{i-1} - p_i - (d + l),

zero at perfect formation and negative when vehicle i runs too close;
e_i = -d means physical contact when l = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .control import GainVector, SpacingPolicy, certify_gains
from .dynamics import EnvSample, VehicleParams, equilibrium_torque
from .errors import ConfigError, SimulationBlowUpError, TheoremNotApplicableError
from .topology import Topology, coupling_spectrum

PLANT_MODES = ("nonlinear", "linear-third-order", "linear-fourth-order-siso")


@dataclass(frozen=True)
class DisturbanceSchedule:
    """Piecewise-constant disturbance profile.

    leader_accel_pulse: (magnitude m/s^2, t_start, t_end) applied to the
    leader's desired acceleration.
    slope_step: (angle rad, trigger_position m, per_vehicle) — the grade
    switches on when a vehicle's own position (or the leader's, when
    per_vehicle is False) crosses the trigger.
    wind_step: (speed m/s, t_start) head wind applied to every vehicle.
    input_bias_steps: tuple of (vehicle 1..N, magnitude m/s^2, t_start)
    additive steps on individual desired-acceleration channels.
    """

    leader_accel_pulse: tuple = (1.0, 30.0, 35.0)
    slope_step: tuple = (math.radians(10.0), 1680.0, True)
    wind_step: tuple = (20.0, 150.0)
    input_bias_steps: tuple = ()

    def __post_init__(self):
        mag, t0, t1 = self.leader_accel_pulse
        if not t1 > t0:
            raise ConfigError("leader pulse must have t_end > t_start")
        angle, trigger, _ = self.slope_step
        if not (math.isfinite(trigger) and abs(angle) < math.pi / 2):
            raise ConfigError("slope trigger must be finite and |angle| < pi/2")
        for entry in self.input_bias_steps:
            if len(entry) != 3:
                raise ConfigError("input bias steps are (vehicle, magnitude, t_start)")

    @classmethod
    def quiet(cls) -> "DisturbanceSchedule":
        """No disturbances at all (every magnitude zero)."""
        return cls(
            leader_accel_pulse=(0.0, 0.0, 1.0),
            slope_step=(0.0, 0.0, True),
            wind_step=(0.0, 0.0),
            input_bias_steps=(),
        )


@dataclass(frozen=True)
class SimConfig:
    """Everything one closed-loop run depends on.

    ``controller_params`` are the estimates the linearizing torque law uses;
    set them equal to ``plant_params`` for a perfect linearization.
    ``initial`` is (per-follower gap offsets in meters, common speed);
    followers start at p_i(0) = -i * slot + offset_i with zero acceleration.
    ``allow_uncertified`` skips the gain certificate precheck.
    """

    topology: Topology
    gains: GainVector
    plant_params: VehicleParams = VehicleParams()
    controller_params: VehicleParams = VehicleParams()
    policy: SpacingPolicy = SpacingPolicy()
    schedule: DisturbanceSchedule = DisturbanceSchedule()
    initial: tuple = ((), 15.0)
    dt: float = 0.01
    t_final: float = 250.0
    plant_mode: str = "nonlinear"
    record_stride: int = 1
    allow_uncertified: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.t_final <= self.dt:
            raise ConfigError("t_final must exceed dt")
        if self.plant_mode not in PLANT_MODES:
            raise ConfigError(f"plant_mode must be one of {PLANT_MODES}")
        if self.record_stride < 1:
            raise ConfigError("record_stride must be >= 1")
        offsets, speed = self.initial
        if len(offsets) not in (0, self.topology.n_followers):
            raise ConfigError(
                f"need 0 or {self.topology.n_followers} gap offsets, got {len(offsets)}"
            )
        if not math.isfinite(speed):
            raise ConfigError("initial speed must be finite")
        if self.plant_mode == "linear-fourth-order-siso" and self.topology.n_followers != 1:
            raise ConfigError("linear-fourth-order-siso plant mode needs exactly one follower")


@dataclass(frozen=True)
class Trajectory:
    """Uniform-grid per-vehicle time series; column 0 is the leader.

    ``spacing_errors`` has one column per follower: e_i = p_{i-1} - p_i - slot.
    ``torques`` column 0 is zero (the leader model has no torque state).
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    accelerations: np.ndarray
    inputs: np.ndarray
    torques: np.ndarray
    spacing_errors: np.ndarray
    slot: float

    @property
    def n_followers(self) -> int:
        return self.spacing_errors.shape[1]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class Metrics:
    """Per-epoch, per-follower spacing-error summary.

    Arrays are (n_epochs, N); ``settling_time`` is measured from the epoch
    start and equals the epoch length when the error never settles into the
    band.  ``collision`` flags physical overlap: min spacing error <= -gap
    (vehicle length zero).
    """

    epochs: tuple
    steady_state_error: np.ndarray
    settling_time: np.ndarray
    max_abs_error: np.ndarray
    min_spacing_error: float
    collision: bool
    gap: float


def _pack_params(p: VehicleParams) -> np.ndarray:
    return np.array([
        p.mass, p.driveline_efficiency, p.tire_radius, p.air_density,
        p.drag_coefficient, p.gravity, p.rolling_resistance, p.powertrain_tau,
    ])


def run(config: SimConfig) -> Trajectory:
    """Integrate the closed loop and return the recorded trajectory.

    Unless ``allow_uncertified`` is set, the gains must pass certify_gains on
    the configured topology first.  Raises SimulationBlowUpError when any
    state leaves +-1e9 (with the failure time attached).
    """
    topo = config.topology
    n = topo.n_followers
    spec = coupling_spectrum(topo)
    if not config.allow_uncertified:
        try:
            cert = certify_gains(config.gains, spec, config.plant_params.powertrain_tau)
        except TheoremNotApplicableError as exc:
            raise ConfigError(
                f"gains cannot be certified on this topology ({exc}); "
                "set allow_uncertified to run anyway"
            ) from exc
        if not cert.holds:
            raise ConfigError(
                "gains fail the stability certificate; set allow_uncertified to run anyway"
            )

    slot = config.policy.slot
    offsets, speed = config.initial
    offsets = np.asarray(offsets, dtype=float) if len(offsets) else np.zeros(n)

    mode = 0 if config.plant_mode == "nonlinear" else 1
    y0 = np.zeros(3 + 4 * n)
    y0[1] = speed
    y0[3 : 3 + n] = -slot * np.arange(1, n + 1) + offsets
    y0[3 + n : 3 + 2 * n] = speed
    if mode == 0:
        t_eq = equilibrium_torque(speed, EnvSample(), config.plant_params)
        y0[3 + 2 * n : 3 + 3 * n] = t_eq
    # mode 1 reuses the torque slots as acceleration states, initialized at 0

    pin = topo.pinning.astype(float)
    nvec = topo.degree + pin
    # constant part of the summed position error: slot * (sum_j a_ij (i-j) + pin_i * i)
    idx = np.arange(1, n + 1)
    const_p = slot * ((topo.adjacency * (idx[:, None] - idx[None, :])).sum(axis=1) + pin * idx)

    sched = config.schedule
    pulse_mag, pulse_t0, pulse_t1 = sched.leader_accel_pulse
    slope_angle, slope_trigger, slope_per_vehicle = sched.slope_step
    wind_speed, wind_t0 = sched.wind_step
    psi_mag = np.zeros(n)
    psi_t0 = np.full(n, np.inf)
    for veh, mag, t0 in sched.input_bias_steps:
        veh = int(veh)
        if not 1 <= veh <= n:
            raise ConfigError(f"input bias vehicle {veh} out of range 1..{n}")
        psi_mag[veh - 1] = float(mag)
        psi_t0[veh - 1] = float(t0)

    n_steps = int(round(config.t_final / config.dt))
    g = config.gains
    out = _kernel.run_kernel(
        y0, n, mode, config.dt, n_steps, config.record_stride,
        np.ascontiguousarray(topo.adjacency), pin, nvec, const_p,
        g.kappa_s, g.kappa_p, g.kappa_v, g.kappa_a,
        _pack_params(config.plant_params), _pack_params(config.controller_params),
        float(pulse_mag), float(pulse_t0), float(pulse_t1),
        float(slope_angle), float(slope_trigger), 1 if slope_per_vehicle else 0,
        float(wind_speed), float(wind_t0),
        psi_mag, psi_t0,
    )
    times, pos, vel, acc, inp, tq, status, t_fail = out
    if status == _kernel.STATUS_BLOWUP:
        raise SimulationBlowUpError(
            f"state magnitude exceeded {_kernel.BLOWUP_LIMIT:g} at t = {t_fail:.3f} s",
            t=t_fail,
        )
    errors = pos[:, :-1] - pos[:, 1:] - slot
    return Trajectory(
        times=times, positions=pos, velocities=vel, accelerations=acc,
        inputs=inp, torques=tq, spacing_errors=errors, slot=slot,
    )


def schedule_epochs(sched: DisturbanceSchedule, t_final: float,
                    slope_onset: float | None = None) -> tuple:
    """Split [0, t_final] into disturbance epochs.

    Boundaries sit at the leader-pulse start, the slope onset time (pass the
    first trigger-crossing time explicitly, or None when the trigger is never
    reached — the slope triggers on position, not time), and the wind start;
    only boundaries inside the horizon are kept.
    """
    cuts = [0.0]
    mag, t0, _ = sched.leader_accel_pulse
    if mag != 0.0:
        cuts.append(t0)
    angle, trigger, _ = sched.slope_step
    if angle != 0.0 and math.isfinite(trigger) and slope_onset is not None:
        cuts.append(slope_onset)
    wind, wt0 = sched.wind_step
    if wind != 0.0 and math.isfinite(wt0):
        cuts.append(wt0)
    for _, _, bt0 in sched.input_bias_steps:
        cuts.append(bt0)
    cuts = sorted({c for c in cuts if 0.0 <= c < t_final})
    bounds = cuts + [t_final]
    return tuple((bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1))


def compute_metrics(
    traj: Trajectory,
    settle_window: float = 20.0,
    settle_band: float = 0.02,
    epochs: tuple | None = None,
) -> Metrics:
    """Summarize spacing errors per follower over each disturbance epoch.

    steady_state_error is the mean over the final ``settle_window`` seconds
    of the epoch; settling_time is the last instant (relative to the epoch
    start) at which |e| sits outside ``settle_band``.
    """
    if traj.times.size < 2:
        raise ValueError("trajectory too short")
    t = traj.times
    if epochs is None:
        epochs = ((float(t[0]), float(t[-1])),)
    e = traj.spacing_errors
    n_ep = len(epochs)
    n = e.shape[1]
    ess = np.empty((n_ep, n))
    settle = np.empty((n_ep, n))
    emax = np.empty((n_ep, n))
    for k, (t0, t1) in enumerate(epochs):
        if t1 - t0 <= 0:
            raise ValueError(f"empty epoch ({t0}, {t1})")
        if settle_window > t1 - t0:
            raise ValueError(
                f"settle window {settle_window} s exceeds epoch length {t1 - t0} s"
            )
        in_ep = (t >= t0) & (t <= t1)
        in_win = (t >= t1 - settle_window) & (t <= t1)
        te = t[in_ep]
        ee = e[in_ep]
        ess[k] = e[in_win].mean(axis=0)
        emax[k] = np.abs(ee).max(axis=0)
        for i in range(n):
            outside = np.nonzero(np.abs(ee[:, i]) > settle_band)[0]
            settle[k, i] = te[outside[-1]] - t0 if outside.size else 0.0
    min_e = float(e.min())
    return Metrics(
        epochs=tuple(epochs),
        steady_state_error=ess,
        settling_time=settle,
        max_abs_error=emax,
        min_spacing_error=min_e,
        collision=bool(min_e <= -traj.slot),
        gap=traj.slot,
    )


def siso_disturbance_run(
    gains: GainVector,
    tau: float,
    kappa_psi: float,
    t_final: float = 200.0,
    dt: float = 0.01,
) -> float:
    """Long-run tracking error of one vehicle against a static reference.

    Integrates the single-loop plant 1/(s^2 (tau s + 1)) under the PID-A
    controller with an input-additive disturbance step of ``kappa_psi`` at
    t = 0, and returns the tracking error (reference minus position) averaged
    over the final tenth of the horizon.  Raises SimulationBlowUpError when
    the loop diverges.  Scalar RK4; state (integral, p, v, a).
    """
    if tau <= 0 or dt <= 0 or t_final <= dt:
        raise ValueError("tau, dt must be positive and t_final > dt")
    ks, kp, kv, ka = gains.kappa_s, gains.kappa_p, gains.kappa_v, gains.kappa_a

    def deriv(s, p, v, a):
        u = -(ks * s + kp * p + kv * v + ka * a) + kappa_psi
        return p, v, a, (u - a) / tau

    s = p = v = a = 0.0
    n_steps = int(round(t_final / dt))
    window = max(1, n_steps // 10)
    acc = 0.0
    peak = 0.0
    h = 0.5 * dt
    for step in range(n_steps):
        d1s, d1p, d1v, d1a = deriv(s, p, v, a)
        d2s, d2p, d2v, d2a = deriv(s + h * d1s, p + h * d1p, v + h * d1v, a + h * d1a)
        d3s, d3p, d3v, d3a = deriv(s + h * d2s, p + h * d2p, v + h * d2v, a + h * d2a)
        d4s, d4p, d4v, d4a = deriv(s + dt * d3s, p + dt * d3p, v + dt * d3v, a + dt * d3a)
        s += dt / 6.0 * (d1s + 2.0 * d2s + 2.0 * d3s + d4s)
        p += dt / 6.0 * (d1p + 2.0 * d2p + 2.0 * d3p + d4p)
        v += dt / 6.0 * (d1v + 2.0 * d2v + 2.0 * d3v + d4v)
        a += dt / 6.0 * (d1a + 2.0 * d2a + 2.0 * d3a + d4a)
        bound = max(abs(s), abs(p), abs(v), abs(a))
        if not math.isfinite(bound) or bound > 1e9:
            raise SimulationBlowUpError(
                f"SISO loop diverged at t = {(step + 1) * dt:.3f} s", t=(step + 1) * dt
            )
        if step >= n_steps - window:
            acc += -p
            peak = max(peak, abs(p))
    if peak > 1e3:
        raise SimulationBlowUpError("SISO loop error still above 1e3 m at t_final")
    return acc / window


def trajectory_csv(traj: Trajectory, path) -> None:
    """Write `t,veh,p,v,a,u,e_spacing` rows, 17 significant digits.

    Vehicle 0 is the leader; its e_spacing column is 0 by convention.
    """
    with open(path, "w") as fh:
        fh.write("t,veh,p,v,a,u,e_spacing\n")
        n_veh = traj.positions.shape[1]
        for k, t in enumerate(traj.times):
            for veh in range(n_veh):
                e = traj.spacing_errors[k, veh - 1] if veh > 0 else 0.0
                fh.write(
                    f"{t:.17g},{veh},{traj.positions[k, veh]:.17g},"
                    f"{traj.velocities[k, veh]:.17g},{traj.accelerations[k, veh]:.17g},"
                    f"{traj.inputs[k, veh]:.17g},{e:.17g}\n"
                )


def metrics_csv(metrics: Metrics, path) -> None:
    """One row per (epoch, follower)."""
    with open(path, "w") as fh:
        fh.write(
            "epoch,t_start,t_end,veh,steady_state_error,settling_time,"
            "max_abs_error,min_spacing_error,collision\n"
        )
        for k, (t0, t1) in enumerate(metrics.epochs):
            for i in range(metrics.steady_state_error.shape[1]):
                fh.write(
                    f"{k},{t0:.17g},{t1:.17g},{i + 1},"
                    f"{metrics.steady_state_error[k, i]:.17g},"
                    f"{metrics.settling_time[k, i]:.17g},"
                    f"{metrics.max_abs_error[k, i]:.17g},"
                    f"{metrics.min_spacing_error:.17g},"
                    f"{int(metrics.collision)}\n"
                )
