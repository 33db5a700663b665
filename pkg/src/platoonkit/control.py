"""Distributed PID-A spacing control: the control law, Routh-array stability
tests, closed-form gain certification, and the steady-state error law.

Each follower applies

    u_i = -sum_{j in I_i} [ k_s * integral(spacing err) + k_p (p_i - p_j + d_ij)
                            + k_v (v_i - v_j) + k_a (a_i - a_j) ]

over its neighbor set I_i (connected followers plus the leader when pinned).
Per coupling eigenvalue lam the closed loop contributes the quartic block
polynomial

    s^4 + (1 + lam k_a)/tau s^3 + lam k_v/tau s^2 + lam k_p/tau s + lam k_s/tau

(a cubic when k_s = 0, where the integral state is dropped).  The certificate
checks the Routh array of every eigenvalue block; the closed-form inequalities
in terms of the extremal eigenvalues are evaluated and reported alongside, and
flagged when they disagree with the exact per-eigenvalue test (they are
conservative for wide symmetric spectra).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import VehicleState
from .errors import RouthMarginalError, TheoremNotApplicableError
from .topology import CouplingSpectrum, Topology


@dataclass(frozen=True)
class GainVector:
    """The four controller gains (integral, position, velocity, acceleration)."""

    kappa_s: float
    kappa_p: float
    kappa_v: float
    kappa_a: float

    def __post_init__(self):
        if not all(math.isfinite(k) for k in self.as_array()):
            raise ValueError("gains must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.kappa_s, self.kappa_p, self.kappa_v, self.kappa_a])


@dataclass(frozen=True)
class SpacingPolicy:
    """Constant-distance spacing: desired gap plus vehicle length.

    The desired front-to-rear offset between followers i and j is
    (i - j) * (gap + length); the leader counts as index 0.
    """

    gap: float = 10.0
    vehicle_length: float = 0.0

    def __post_init__(self):
        if self.gap <= 0:
            raise ValueError("gap must be positive")
        if self.vehicle_length < 0:
            raise ValueError("vehicle length must be >= 0")

    @property
    def slot(self) -> float:
        return self.gap + self.vehicle_length

    def desired_offset(self, i: int, j: int) -> float:
        """d_ij: positive when j is ahead of i (j < i)."""
        return (i - j) * self.slot


@dataclass(frozen=True)
class StabilityCertificate:
    """Verdict of the stability conditions for one (topology, gains, tau).

    ``holds`` is driven by the exact per-eigenvalue Routh test (every margin
    in ``binding_constraints`` positive).  ``closed_form_holds`` reports the
    extremal-eigenvalue inequalities; when it is False while ``holds`` is
    True the closed form is conservative for this spectrum.
    """

    family: str
    holds: bool
    binding_constraints: tuple
    eigen_range: tuple
    closed_form_holds: bool = True
    closed_form_constraints: tuple = ()
    marginal: bool = False

    def margin(self, name: str) -> float:
        for n, m in self.binding_constraints + self.closed_form_constraints:
            if n == name:
                return m
        raise KeyError(name)

    def report(self) -> str:
        lines = [
            f"family: {self.family}",
            f"eigen_range: [{self.eigen_range[0]:.6g}, {self.eigen_range[1]:.6g}]",
            f"verdict: {'STABLE' if self.holds else ('MARGINAL' if self.marginal else 'UNSTABLE')}",
        ]
        for name, m in self.binding_constraints:
            lines.append(f"constraint {name}: margin {m:.6g}")
        lines.append(f"closed_form_holds: {self.closed_form_holds}")
        for name, m in self.closed_form_constraints:
            lines.append(f"closed_form {name}: margin {m:.6g}")
        if self.holds and not self.closed_form_holds:
            lines.append("note: extremal-eigenvalue closed form is conservative here")
        return "\n".join(lines)


def control_input(
    i: int,
    states: list,
    topo: Topology,
    gains: GainVector,
    policy: SpacingPolicy,
) -> float:
    """Desired acceleration for follower i (1-based; states[0] is the leader).

    The integral term uses the follower's own accumulated error_integral;
    the caller is responsible for integrating the summed spacing error.
    """
    n = topo.n_followers
    if not 1 <= i <= n:
        raise ValueError(f"follower index {i} out of range 1..{n}")
    if len(states) != n + 1:
        raise ValueError(f"need {n + 1} states (leader plus followers), got {len(states)}")
    me: VehicleState = states[i]
    neighbors = [j + 1 for j in np.nonzero(topo.adjacency[i - 1])[0]]
    if topo.pinning[i - 1]:
        neighbors.append(0)
    total = gains.kappa_s * me.error_integral
    for j in neighbors:
        other: VehicleState = states[j]
        total += gains.kappa_p * (me.position - other.position + policy.desired_offset(i, j))
        total += gains.kappa_v * (me.velocity - other.velocity)
        total += gains.kappa_a * (me.acceleration - other.acceleration)
    return -total


def block_char_poly(lambda_i: float, gains: GainVector, tau: float) -> list:
    """Coefficients of the eigenvalue-block characteristic polynomial.

    Returns the monic quartic [1, c3, c2, c1, c0]; use the reduced cubic
    (drop the trailing zero) when kappa_s = 0.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    lam = float(lambda_i)
    return [
        1.0,
        (1.0 + lam * gains.kappa_a) / tau,
        lam * gains.kappa_v / tau,
        lam * gains.kappa_p / tau,
        lam * gains.kappa_s / tau,
    ]


def routh_first_column(coeffs) -> list:
    """First column of the Routh array for a monic cubic or quartic.

    Raises RouthMarginalError on a zero pivot (marginal/indeterminate case,
    deliberately distinct from an all-checked unstable verdict).
    """
    c = [float(x) for x in coeffs]
    if len(c) not in (4, 5):
        raise ValueError("expected cubic or quartic coefficients")
    if c[0] != 1.0:
        raise ValueError("polynomial must be monic")
    if len(c) == 4:
        _, c2, c1, c0 = c
        if c2 == 0.0:
            raise RouthMarginalError("zero pivot in s^2 row")
        alpha = (c2 * c1 - c0) / c2
        return [1.0, c2, alpha, c0]
    _, c3, c2, c1, c0 = c
    if c3 == 0.0:
        raise RouthMarginalError("zero pivot in s^3 row")
    alpha = (c3 * c2 - c1) / c3
    if alpha == 0.0:
        raise RouthMarginalError("zero pivot in s^2 row")
    beta = c1 - c0 * c3 / alpha
    return [1.0, c3, alpha, beta, c0]


def routh_verdict(coeffs) -> str:
    """'stable', 'unstable', or 'marginal' from the Routh first column."""
    try:
        col = routh_first_column(coeffs)
    except RouthMarginalError:
        return "marginal"
    if any(v == 0.0 for v in col):
        return "marginal"
    return "stable" if all(v > 0.0 for v in col) else "unstable"


def _routh_margin(coeffs) -> float:
    """Smallest first-column entry beyond the leading 1; 0 on a zero pivot."""
    try:
        col = routh_first_column(coeffs)
    except RouthMarginalError:
        return 0.0
    return min(col[1:])


def _closed_form_constraints(gains: GainVector, lmin, lmax, tau):
    """Extremal-eigenvalue inequalities, as (name, margin) pairs."""
    ks, kp, kv, ka = gains.kappa_s, gains.kappa_p, gains.kappa_v, gains.kappa_a
    cons = [("kappa_a > -1/max_eig", ka + 1.0 / lmax)]
    if ks != 0.0:
        cons.append(("kappa_s > 0", ks))
        cons.append(("kappa_p > 0", kp))
        cons.append(("kappa_p < kappa_v (1 + max_eig kappa_a)/tau",
                     kv * (1.0 + lmax * ka) / tau - kp))
        denom = lmin * (1.0 + lmin * ka) * kp
        if denom != 0.0:
            bound = (ks * (1.0 + lmax * ka) ** 2 + tau * lmax * kp**2) / denom
            cons.append(("kappa_v above closed-form bound", kv - bound))
        else:
            cons.append(("kappa_v above closed-form bound", -math.inf))
    else:
        cons.append(("kappa_p > 0", kp))
        denom = 1.0 + lmin * ka
        if denom != 0.0:
            cons.append(("kappa_v > tau kappa_p/(1 + min_eig kappa_a)",
                         kv - tau * kp / denom))
        else:
            cons.append(("kappa_v > tau kappa_p/(1 + min_eig kappa_a)", -math.inf))
    return cons


def certify_gains(gains: GainVector, spec: CouplingSpectrum, tau: float) -> StabilityCertificate:
    """Certify asymptotic stability of the formation error dynamics.

    Applies to the look-ahead (lower-triangular coupling) and bidirectional
    (symmetric coupling) families; anything else raises
    TheoremNotApplicableError.  The verdict is the Routh test of every
    eigenvalue block (integral-free cubic blocks when kappa_s = 0).
    """
    if spec.is_triangular:
        family = "rPFL"
    elif spec.is_symmetric:
        family = "rBDL"
    else:
        raise TheoremNotApplicableError(
            "coupling matrix is neither lower triangular nor symmetric; "
            "the closed-form stability theorems do not apply"
        )
    if tau <= 0:
        raise ValueError("tau must be positive")

    lams = spec.real_eigenvalues
    lmin, lmax = spec.min_eig, spec.max_eig
    marginal = False
    routh_margin = math.inf
    for lam in lams:
        coeffs = block_char_poly(lam, gains, tau)
        if gains.kappa_s == 0.0:
            coeffs = coeffs[:-1]
        m = _routh_margin(coeffs)
        if m == 0.0:
            marginal = True
        routh_margin = min(routh_margin, m)

    binding = (("per-eigenvalue Routh first column", routh_margin),)
    closed = _closed_form_constraints(gains, lmin, lmax, tau)
    closed_holds = all(m > 0 for _, m in closed)
    return StabilityCertificate(
        family=family,
        holds=routh_margin > 0.0,
        binding_constraints=binding,
        eigen_range=(lmin, lmax),
        closed_form_holds=closed_holds,
        closed_form_constraints=tuple(closed),
        marginal=marginal,
    )


def synthesize_kv(
    kappa_s: float,
    kappa_p: float,
    kappa_a: float,
    spec: CouplingSpectrum,
    tau: float,
    margin: float = 1.0,
) -> float:
    """Velocity gain sitting ``margin`` times above the stabilizing bound.

    Uses the larger of the closed-form extremal bound and the exact
    per-eigenvalue bound, so any margin > 1 yields a certified gain.
    """
    lmin, lmax = spec.min_eig, spec.max_eig
    if kappa_s < 0:
        raise ValueError("kappa_s must be >= 0")
    if kappa_p <= 0:
        raise ValueError("kappa_p must be positive")
    if kappa_a <= -1.0 / lmax:
        raise ValueError("kappa_a must exceed -1/max_eig")
    if margin < 1.0:
        raise ValueError("margin must be >= 1")

    if kappa_s == 0.0:
        bound = tau * kappa_p / (1.0 + lmin * kappa_a)
        per_lam = max(tau * kappa_p / (1.0 + lam * kappa_a) for lam in spec.real_eigenvalues)
    else:
        bound = (kappa_s * (1.0 + lmax * kappa_a) ** 2 + tau * lmax * kappa_p**2) / (
            lmin * (1.0 + lmin * kappa_a) * kappa_p
        )
        per_lam = max(
            (kappa_s * (1.0 + lam * kappa_a) ** 2 + tau * lam * kappa_p**2)
            / (lam * (1.0 + lam * kappa_a) * kappa_p)
            for lam in spec.real_eigenvalues
        )
    return margin * max(bound, per_lam)


def steady_state_error(kappa_psi: float, gains: GainVector) -> float:
    """Long-run tracking spacing error under a constant input disturbance.

    Zero whenever the integral gain is active; -kappa_psi/kappa_p otherwise.
    """
    if kappa_psi == 0.0:
        return 0.0
    if gains.kappa_s != 0.0:
        return 0.0
    if gains.kappa_p == 0.0:
        raise ValueError("steady-state error undefined for kappa_s = 0 and kappa_p = 0")
    return -kappa_psi / gains.kappa_p


# Controller gains used throughout the reference scenario, one row per named
# topology: (theorem gains with integral action, corollary gains without).
TABLE_GAINS = {
    "PF":   (GainVector(0.150, 1.0, 3.450, 1.000), GainVector(0.0, 1.0, 2.150, 1.000)),
    "PFL":  (GainVector(0.075, 1.0, 3.225, 1.500), GainVector(0.0, 1.0, 2.075, 1.500)),
    "TPF":  (GainVector(0.075, 1.0, 3.225, 1.500), GainVector(0.0, 1.0, 2.075, 1.500)),
    "TPFL": (GainVector(0.050, 1.0, 3.150, 1.667), GainVector(0.0, 1.0, 2.050, 1.667)),
    "rPF":  (GainVector(0.030, 1.0, 3.090, 1.800), GainVector(0.0, 1.0, 2.030, 1.800)),
    "rPFL": (GainVector(0.025, 1.0, 3.075, 1.833), GainVector(0.0, 1.0, 2.025, 1.833)),
    "BD":   (GainVector(0.010, 1.0, 5.086, 1.743), GainVector(0.0, 1.0, 2.286, 1.743)),
    "BDL":  (GainVector(0.010, 1.0, 1.052, 1.795), GainVector(0.0, 1.0, 2.107, 1.795)),
    "rBD":  (GainVector(0.010, 1.0, 1.423, 1.890), GainVector(0.0, 1.0, 2.175, 1.890)),
    "rBDL": (GainVector(0.010, 1.0, 1.103, 1.900), GainVector(0.0, 1.0, 2.103, 1.900)),
}

# Communication range per topology in the reference scenario (N = 9).
TABLE_RANGES = {"rPF": 5, "rPFL": 5, "rBD": 4, "rBDL": 4}
