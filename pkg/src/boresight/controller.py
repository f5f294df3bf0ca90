"""Reduced-attitude tracking controller with a barrier-enforced safe tube.

The body-frame tracking variable is the reference direction seen from the
body, sigma = R^T x_r; perfect tracking means sigma equals the body-fixed
boresight axis b.  The alignment error sigma_e = 1 - sigma . b is confined
to a tube sigma_e < rho = 1 - cos(margin): as long as the tube holds, the
true boresight stays within the guidance safety margin of the reference and
therefore outside every raw keep-out cone.

The control law is a backstepping design: a virtual rate command pulls
sigma toward b, and the torque law drives the rate error onto it while a
barrier term (singular at the tube edge) enforces the tube and a
disturbance estimate cancels the unknown torque.  Both loops share one
saturated prescribed-time gain, which yields convergence by the configured
saturation time.

Two inertia-free comparison controllers (a potential-field law and a plain
PD law) are included for benchmark runs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import TubeBreach
from .guidance import GuidanceConfig, potential_grad
from .manifold import cross, cross_matrix, unit_vector
from .ppta import PptaSchedule, ppta_gain, ppta_gain_rate


@dataclass(eq=False)
class ControlGains:
    """Gains and geometry of the tracking controller.

    att_gain:   virtual-law gain pulling sigma toward the boresight axis.
    rate_gain:  torque-law gain on the backstepping rate error.
    tube_level: alignment-error bound rho, at most 1 - cos(margin).
    boresight_body: body-fixed boresight axis b (unit).
    schedule:   prescribed-time gain schedule shared by both loops.
    """

    att_gain: float
    rate_gain: float
    tube_level: float
    boresight_body: np.ndarray
    schedule: PptaSchedule

    def __post_init__(self):
        self.boresight_body = unit_vector(self.boresight_body)
        if self.att_gain <= 0.0 or self.rate_gain <= 0.0:
            raise ValueError("controller gains must be positive")
        if not (0.0 < self.tube_level < 1.0):
            raise ValueError(f"tube level must lie in (0, 1), got {self.tube_level}")


@dataclass(frozen=True)
class TrackingErrors:
    """Tracking error set at one instant.

    reduced_att:  sigma = R^T x_r, the reference direction in the body frame.
    align_err:    sigma_e = 1 - sigma . b, in [0, 2].
    rate_err:     omega_e = omega - R^T omega_ref (body frame).
    tube_frac:    xi = sigma_e / rho; a run is invalid once xi reaches 1.
    backstep_err: z = omega_e - virtual rate command.
    """

    reduced_att: np.ndarray
    align_err: float
    rate_err: np.ndarray
    tube_frac: float
    backstep_err: np.ndarray


def virtual_control(sigma, t: float, gains: ControlGains) -> np.ndarray:
    """Virtual rate command -att_gain * mu(t) * sigma x b."""
    return -gains.att_gain * ppta_gain(t, gains.schedule) * cross(
        sigma, gains.boresight_body
    )


def virtual_control_rate(sigma, sigma_dot, t: float, gains: ControlGains) -> np.ndarray:
    """Time derivative of the virtual command given sigma and its rate."""
    b = gains.boresight_body
    return -gains.att_gain * (
        ppta_gain_rate(t, gains.schedule) * cross(sigma, b)
        + ppta_gain(t, gains.schedule) * cross(sigma_dot, b)
    )


def tracking_errors(rot, omega, x_ref, omega_ref, gains: ControlGains, t: float) -> TrackingErrors:
    """Assemble the tracking error set; raises TubeBreach once xi >= 1.

    omega_ref is the inertial-frame reference angular velocity (the guidance
    command); omega the body rate.
    """
    sigma = rot.T @ x_ref
    align_err = 1.0 - float(sigma @ gains.boresight_body)
    xi = align_err / gains.tube_level
    if xi >= 1.0:
        raise TubeBreach(xi, t=t)
    rate_err = omega - rot.T @ omega_ref
    z = rate_err - virtual_control(sigma, t, gains)
    return TrackingErrors(
        reduced_att=sigma,
        align_err=align_err,
        rate_err=rate_err,
        tube_frac=xi,
        backstep_err=z,
    )


def feedforward_terms(omega_err, rot, omega_ref, omega_ref_dot, inertia):
    """Model terms (C, G, H) of the rate-error dynamics J we' = -C we - G + u + d.

    With r = R^T omega_ref (reference rate in the body frame):
        C = -[J (we + r)]x + [r]x J + J [r]x
        G = [r]x J r + J R^T omega_ref_dot
    and H = -C we - G is what the observer and torque law consume.
    """
    r = rot.T @ omega_ref
    skew_r = cross_matrix(r)
    c_mat = -cross_matrix(inertia @ (omega_err + r)) + skew_r @ inertia + inertia @ skew_r
    g_vec = cross(r, inertia @ r) + inertia @ (rot.T @ omega_ref_dot)
    h_vec = -(c_mat @ omega_err) - g_vec
    return c_mat, g_vec, h_vec


def _feedforward_comp(omega_err, rot, omega_ref, omega_ref_dot, inertia) -> np.ndarray:
    """H = -C we - G expanded in cross products (hot-path form of feedforward_terms)."""
    r = rot.T @ omega_ref
    j_sum = inertia @ (omega_err + r)
    # -C we = [J(we+r)]x we - [r]x J we - J [r]x we
    j_we = inertia @ omega_err
    minus_c_we = cross(j_sum, omega_err) - cross(r, j_we) - inertia @ cross(r, omega_err)
    g_vec = cross(r, inertia @ r) + inertia @ (rot.T @ omega_ref_dot)
    return minus_c_we - g_vec


def control_law(
    errors: TrackingErrors,
    coriolis_comp,
    omega_c_dot,
    d_hat,
    inertia,
    gains: ControlGains,
    t: float,
) -> np.ndarray:
    """Tracking torque with prescribed-time gain and tube barrier.

    u = -rate_gain mu(t) z + J wc' - H - d_hat - (sigma x b) / (rho (1 - xi))

    The barrier denominator vanishes at the tube edge; the caller must have
    established xi < 1 (tracking_errors raises otherwise).
    """
    if errors.tube_frac >= 1.0:
        raise TubeBreach(errors.tube_frac, t=t)
    barrier = cross(errors.reduced_att, gains.boresight_body) / (
        gains.tube_level * (1.0 - errors.tube_frac)
    )
    return (
        -gains.rate_gain * ppta_gain(t, gains.schedule) * errors.backstep_err
        + inertia @ omega_c_dot
        - coriolis_comp
        - d_hat
        - barrier
    )


def apf_controller(rot, omega, x, cfg: GuidanceConfig, kp: float, kd: float) -> np.ndarray:
    """Potential-field comparison law u = -kp R^T [x]x grad U(x) - kd omega.

    Evaluates the guidance potential gradient at the true boresight x, so it
    inherits zone avoidance but converges only asymptotically.
    """
    return -kp * (rot.T @ cross(x, potential_grad(x, cfg))) - kd * omega


def pd_controller(rot, omega, x, x_goal, kp: float, kd: float) -> np.ndarray:
    """Plain PD comparison law u = kp R^T [x]x x_goal - kd omega (zone-blind)."""
    return kp * (rot.T @ cross(x, x_goal)) - kd * omega


def tube_level_for_margin(margin: float) -> float:
    """Alignment-error bound 1 - cos(margin) that keeps the boresight inside
    the guidance safety margin of the reference."""
    return 1.0 - math.cos(margin)
