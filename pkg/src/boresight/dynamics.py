"""Rigid-body plant, disturbance models, and the closed-loop integrator.

The full closed-loop state is integrated monolithically with classical RK4:
attitude matrix (integrated additively, then projected back onto SO(3)
each step), body rate, reference boresight direction, and the observer
internal state.  The guidance command, tracking controller, and observer
are evaluated inside every RK4 stage, i.e. the control loop is treated as
continuous.

The true plant may carry a time-varying diagonal inertia offset; guidance,
controller, and observer always run on the nominal inertia, so whatever the
offset does to the dynamics lands in the lumped disturbance the observer
reconstructs.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .controller import (
    _feedforward_comp,
    control_law,
    apf_controller,
    pd_controller,
    tracking_errors,
    virtual_control_rate,
)
from .errors import BoundaryViolation, NonFiniteState, SimulationFatal
from .guidance import _law_and_rate, zone_clearances
from .manifold import cross, cross_matrix, minimal_rotation, reorthonormalize, unit_vector
from .ppta import ppta_gain, ppta_gain_rate


@dataclass(eq=False)
class PlantParams:
    """True-plant description: nominal inertia, uncertainty switch, torque clamp.

    inertia:         symmetric positive-definite matrix (kg m^2), the value
                     every algorithm is given.
    delta_j_enabled: when true the plant runs on inertia + diagonal
                     time-varying offset while the algorithms keep the
                     nominal value.
    torque_limit:    optional per-axis clamp (N m) applied to the commanded
                     torque; None leaves the command unclamped.
    """

    inertia: np.ndarray
    delta_j_enabled: bool = False
    torque_limit: Optional[float] = None

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        if self.inertia.shape != (3, 3):
            raise ValueError("inertia must be a 3x3 matrix")
        if np.max(np.abs(self.inertia - self.inertia.T)) > 1e-12:
            raise ValueError("inertia must be symmetric")
        if np.min(np.linalg.eigvalsh(self.inertia)) <= 0.0:
            raise ValueError("inertia must be positive definite")


@dataclass
class SimState:
    """Full coupled state at one instant."""

    t: float
    rot: np.ndarray
    omega: np.ndarray
    x_ref: np.ndarray
    p: np.ndarray


@dataclass
class StateRates:
    """Time derivative of SimState (rotation rate is the full matrix rate)."""

    rot: np.ndarray
    omega: np.ndarray
    x_ref: np.ndarray
    p: np.ndarray


def disturbance_torque(t: float):
    """Slow multi-sine disturbance torque (N m) and its analytic derivative.

    Component amplitudes bound |d| by 1e-3 * (8, 6, 12.5) and |d'| by
    1e-3 * (0.84, 0.36, 1.24).
    """
    d = 1e-3 * np.array(
        [
            3.0 * math.cos(0.2 * t) + 4.0 * math.sin(0.06 * t) - 1.0,
            -1.5 * math.sin(0.04 * t) + 3.0 * math.cos(0.1 * t) + 1.5,
            3.0 * math.sin(0.2 * t) - 8.0 * math.sin(0.08 * t) + 1.5,
        ]
    )
    d_dot = 1e-3 * np.array(
        [
            -0.6 * math.sin(0.2 * t) + 0.24 * math.cos(0.06 * t),
            -0.06 * math.cos(0.04 * t) - 0.3 * math.sin(0.1 * t),
            0.6 * math.cos(0.2 * t) - 0.64 * math.cos(0.08 * t),
        ]
    )
    return d, d_dot


def _inertia_offset_diag(t: float) -> np.ndarray:
    return np.array(
        [
            -3.0 * math.tanh(0.1 * t) - 1.0,
            2.0 * math.sin(0.05 * t) + 3.0,
            math.cos(0.1 * t) + 3.0,
        ]
    )


def inertia_uncertainty(t: float) -> np.ndarray:
    """Diagonal inertia offset (kg m^2) injected into the true plant."""
    return np.diag(_inertia_offset_diag(t))


class _Diag:
    """Per-instant diagnostics captured when evaluating the closed loop."""

    __slots__ = (
        "omega_ref",
        "omega_ref_dot",
        "sigma_e",
        "xi",
        "omega_err",
        "backstep_err",
        "coriolis_comp",
        "d_hat",
        "u",
        "d",
    )


def _rate(t, rot, omega, x_ref, p, sc, diag_out=None):
    """Closed-loop state rates; optionally fills a _Diag record.

    sc duck-types a validated scenario: guidance, control, observer, plant,
    controller_kind, disturbance_enabled, and comparison gains.
    """
    cfg = sc.guidance
    kind = sc.controller_kind
    j_nom = sc.plant.inertia

    mu_g = ppta_gain(t, cfg.schedule)
    mu_g_dot = ppta_gain_rate(t, cfg.schedule)
    try:
        omega_ref, omega_ref_dot = _law_and_rate(x_ref, mu_g, mu_g_dot, cfg)
    except BoundaryViolation as exc:
        raise BoundaryViolation(exc.zone_index, t=t) from None
    x_ref_dot = cross(omega_ref, x_ref)

    d = disturbance_torque(t)[0] if sc.disturbance_enabled else np.zeros(3)
    p_dot = np.zeros(3)
    d_hat = np.zeros(3)
    coriolis_comp = np.zeros(3)

    if kind == "ibgc":
        gains = sc.control
        errors = tracking_errors(rot, omega, x_ref, omega_ref, gains, t)
        sigma = errors.reduced_att
        coriolis_comp = _feedforward_comp(errors.rate_err, rot, omega_ref, omega_ref_dot, j_nom)
        d_hat = sc.observer.estimate(p, errors.rate_err, t, j_nom)
        sigma_dot = -cross(omega, sigma) + rot.T @ x_ref_dot
        omega_c_dot = virtual_control_rate(sigma, sigma_dot, t, gains)
        u = control_law(errors, coriolis_comp, omega_c_dot, d_hat, j_nom, gains, t)
        if sc.plant.torque_limit is not None:
            u = np.clip(u, -sc.plant.torque_limit, sc.plant.torque_limit)
        p_dot = sc.observer.state_rate(p, errors.rate_err, coriolis_comp, u, t, j_nom)
    elif kind == "apf":
        x = rot @ sc.control.boresight_body
        try:
            u = apf_controller(rot, omega, x, cfg, sc.apf_kp, sc.apf_kd)
        except BoundaryViolation as exc:
            raise BoundaryViolation(exc.zone_index, t=t) from None
        if sc.plant.torque_limit is not None:
            u = np.clip(u, -sc.plant.torque_limit, sc.plant.torque_limit)
    elif kind == "pd":
        x = rot @ sc.control.boresight_body
        u = pd_controller(rot, omega, x, cfg.goal, sc.pd_kp, sc.pd_kd)
        if sc.plant.torque_limit is not None:
            u = np.clip(u, -sc.plant.torque_limit, sc.plant.torque_limit)
    elif kind == "none":
        u = np.zeros(3)
    else:
        raise ValueError(f"unknown controller kind {kind!r}")

    if sc.plant.delta_j_enabled:
        j_true = j_nom + np.diag(_inertia_offset_diag(t))
        omega_dot = np.linalg.solve(j_true, cross(j_true @ omega, omega) + u + d)
    else:
        omega_dot = sc._j_nom_inv @ (cross(j_nom @ omega, omega) + u + d)
    rot_dot = rot @ cross_matrix(omega)

    if diag_out is not None:
        diag_out.omega_ref = omega_ref
        diag_out.omega_ref_dot = omega_ref_dot
        diag_out.coriolis_comp = coriolis_comp
        diag_out.d_hat = d_hat
        diag_out.u = u
        diag_out.d = d
        if kind == "ibgc":
            diag_out.sigma_e = errors.align_err
            diag_out.xi = errors.tube_frac
            diag_out.omega_err = errors.rate_err
            diag_out.backstep_err = errors.backstep_err
        else:
            sigma = rot.T @ x_ref
            sigma_e = 1.0 - float(sigma @ sc.control.boresight_body)
            diag_out.sigma_e = sigma_e
            diag_out.xi = sigma_e / sc.control.tube_level
            diag_out.omega_err = omega - rot.T @ omega_ref
            diag_out.backstep_err = np.zeros(3)
    return rot_dot, omega_dot, x_ref_dot, p_dot


def closed_loop_rate(state: SimState, scenario) -> StateRates:
    """Assemble guidance, controller, observer, and plant rates at one state."""
    _prepare(scenario)
    rot_dot, omega_dot, x_dot, p_dot = _rate(
        state.t, state.rot, state.omega, state.x_ref, state.p, scenario
    )
    return StateRates(rot=rot_dot, omega=omega_dot, x_ref=x_dot, p=p_dot)


def _prepare(scenario):
    # Cached nominal-inertia inverse for the unperturbed plant path.
    if not hasattr(scenario, "_j_nom_inv") or scenario._j_nom_inv is None:
        scenario._j_nom_inv = np.linalg.inv(scenario.plant.inertia)


@dataclass
class Trajectory:
    """Sampled closed-loop history plus run status.

    Arrays are indexed by sample; samples fall every output_decimation
    integration steps, and the first and final states are always present.
    status is "completed" for a clean run, otherwise the failure kind, with
    failure_time holding the abort time.
    """

    t: np.ndarray
    rot: np.ndarray
    omega: np.ndarray
    x: np.ndarray
    x_ref: np.ndarray
    p: np.ndarray
    omega_ref: np.ndarray
    sigma_e: np.ndarray
    xi: np.ndarray
    omega_err: np.ndarray
    backstep_err: np.ndarray
    u: np.ndarray
    d: np.ndarray
    d_hat: np.ndarray
    coriolis_comp: np.ndarray
    clearances: np.ndarray
    status: str = "completed"
    failure_time: Optional[float] = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def initial_state(scenario) -> SimState:
    """Initial coupled state per the scenario.

    The reference starts on the true boresight; unless the scenario pins
    them explicitly, the attitude is the minimal rotation taking the body
    axis onto the initial boresight and the body rate matches the initial
    guidance command, so all tracking errors start at zero.
    """
    x0 = unit_vector(scenario.initial_x)
    if scenario.initial_rot is not None:
        rot = reorthonormalize(np.asarray(scenario.initial_rot, dtype=float))
    else:
        rot = minimal_rotation(scenario.control.boresight_body, x0)
    mu0 = ppta_gain(0.0, scenario.guidance.schedule)
    omega_ref0 = _law_and_rate(x0, mu0, 0.0, scenario.guidance)[0]
    if scenario.initial_omega is not None:
        omega = np.asarray(scenario.initial_omega, dtype=float)
    else:
        omega = rot.T @ omega_ref0
    return SimState(t=0.0, rot=rot, omega=omega, x_ref=x0.copy(), p=np.zeros(3))


def simulate(scenario, raise_on_fatal: bool = True) -> Trajectory:
    """Run the closed loop over [0, t_end] with fixed-step RK4.

    Per step: integrate the monolithic state, project the attitude back
    onto SO(3), renormalize the reference direction, and check finiteness.
    Tube and boundary checks fire inside the stage evaluations.  On a fatal
    error the exception is raised (default) or, with raise_on_fatal=False,
    recorded in the returned partial trajectory.
    """
    _prepare(scenario)
    dt = scenario.dt
    t_end = scenario.t_end
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if t_end < 0.0:
        raise ValueError("t_end must be nonnegative")
    state = initial_state(scenario)
    decim = max(1, int(scenario.output_decimation))
    n_steps = int(math.ceil(t_end / dt - 1e-9)) if t_end > 0.0 else 0

    rows = []

    def record(t, rot, omega, x_ref, p):
        diag = _Diag()
        _rate(t, rot, omega, x_ref, p, scenario, diag_out=diag)
        x = rot @ scenario.control.boresight_body
        rows.append(
            (
                t,
                rot.copy(),
                omega.copy(),
                x,
                x_ref.copy(),
                p.copy(),
                diag.omega_ref,
                diag.sigma_e,
                diag.xi,
                diag.omega_err,
                diag.backstep_err,
                diag.u,
                diag.d,
                diag.d_hat,
                diag.coriolis_comp,
                zone_clearances(x, scenario.guidance),
            )
        )

    status = "completed"
    failure_time = None
    rot, omega, x_ref, p = state.rot, state.omega, state.x_ref, state.p
    t = 0.0
    try:
        record(0.0, rot, omega, x_ref, p)
        for k in range(n_steps):
            h = min(dt, t_end - t)
            half = 0.5 * h
            a1 = _rate(t, rot, omega, x_ref, p, scenario)
            a2 = _rate(
                t + half,
                rot + half * a1[0],
                omega + half * a1[1],
                x_ref + half * a1[2],
                p + half * a1[3],
                scenario,
            )
            a3 = _rate(
                t + half,
                rot + half * a2[0],
                omega + half * a2[1],
                x_ref + half * a2[2],
                p + half * a2[3],
                scenario,
            )
            a4 = _rate(
                t + h,
                rot + h * a3[0],
                omega + h * a3[1],
                x_ref + h * a3[2],
                p + h * a3[3],
                scenario,
            )
            w = h / 6.0
            rot = rot + w * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0])
            omega = omega + w * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1])
            x_ref = x_ref + w * (a1[2] + 2.0 * a2[2] + 2.0 * a3[2] + a4[2])
            p = p + w * (a1[3] + 2.0 * a2[3] + 2.0 * a3[3] + a4[3])
            t = (k + 1) * dt if k + 1 < n_steps else t_end
            rot = reorthonormalize(rot)
            x_ref = x_ref / math.sqrt(float(x_ref @ x_ref))
            if not (
                np.all(np.isfinite(omega))
                and np.all(np.isfinite(x_ref))
                and np.all(np.isfinite(p))
            ):
                raise NonFiniteState("closed-loop state became non-finite", t=t)
            if (k + 1) % decim == 0 or k + 1 == n_steps:
                record(t, rot, omega, x_ref, p)
    except SimulationFatal as exc:
        if raise_on_fatal:
            raise
        status = _status_of(exc)
        failure_time = exc.t if exc.t is not None else t

    if not rows:  # fatal on the very first evaluation
        nz = len(scenario.guidance.zones)
        empty3 = np.zeros((0, 3))
        return Trajectory(
            t=np.zeros(0),
            rot=np.zeros((0, 3, 3)),
            omega=empty3,
            x=empty3,
            x_ref=empty3,
            p=empty3,
            omega_ref=empty3,
            sigma_e=np.zeros(0),
            xi=np.zeros(0),
            omega_err=empty3,
            backstep_err=empty3,
            u=empty3,
            d=empty3,
            d_hat=empty3,
            coriolis_comp=empty3,
            clearances=np.zeros((0, nz)),
            status=status,
            failure_time=failure_time,
        )

    cols = list(zip(*rows))
    return Trajectory(
        t=np.array(cols[0]),
        rot=np.array(cols[1]),
        omega=np.array(cols[2]),
        x=np.array(cols[3]),
        x_ref=np.array(cols[4]),
        p=np.array(cols[5]),
        omega_ref=np.array(cols[6]),
        sigma_e=np.array(cols[7]),
        xi=np.array(cols[8]),
        omega_err=np.array(cols[9]),
        backstep_err=np.array(cols[10]),
        u=np.array(cols[11]),
        d=np.array(cols[12]),
        d_hat=np.array(cols[13]),
        coriolis_comp=np.array(cols[14]),
        clearances=np.array(cols[15]),
        status=status,
        failure_time=failure_time,
    )


def _status_of(exc: SimulationFatal) -> str:
    from .errors import TubeBreach

    if isinstance(exc, TubeBreach):
        return "tube_breach"
    if isinstance(exc, BoundaryViolation):
        return "boundary_violation"
    return "non_finite"


def propagate_free_body(rot0, omega0, inertia, dt: float, t_end: float, method: str = "project"):
    """Torque-free rigid-body propagation, for integrator validation.

    method "project" integrates the attitude additively inside RK4 and
    projects onto SO(3) each step (same treatment as the closed-loop
    integrator); "exp" advances the attitude with the exponential map of the
    Simpson-averaged body rate instead.  Returns (times, rotations, rates).
    """
    if method not in ("project", "exp"):
        raise ValueError(f"unknown method {method!r}")
    inertia = np.asarray(inertia, dtype=float)
    j_inv = np.linalg.inv(inertia)

    def omega_rate(w):
        return j_inv @ cross(inertia @ w, w)

    n_steps = int(math.ceil(t_end / dt - 1e-9)) if t_end > 0.0 else 0
    rot = np.asarray(rot0, dtype=float).copy()
    omega = np.asarray(omega0, dtype=float).copy()
    ts = [0.0]
    rots = [rot.copy()]
    omegas = [omega.copy()]
    t = 0.0
    for k in range(n_steps):
        h = min(dt, t_end - t)
        k1w = omega_rate(omega)
        k2w = omega_rate(omega + 0.5 * h * k1w)
        k3w = omega_rate(omega + 0.5 * h * k2w)
        k4w = omega_rate(omega + h * k3w)
        if method == "project":
            k1r = rot @ cross_matrix(omega)
            k2r = (rot + 0.5 * h * k1r) @ cross_matrix(omega + 0.5 * h * k1w)
            k3r = (rot + 0.5 * h * k2r) @ cross_matrix(omega + 0.5 * h * k2w)
            k4r = (rot + h * k3r) @ cross_matrix(omega + h * k3w)
            rot = rot + (h / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
            rot = reorthonormalize(rot)
        else:
            from .manifold import exp_so3

            omega_mid = omega + 0.5 * h * k1w
            omega_end = omega + h * k3w
            rot = rot @ exp_so3((h / 6.0) * (omega + 4.0 * omega_mid + omega_end))
        omega = omega + (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        t = (k + 1) * dt if k + 1 < n_steps else t_end
        ts.append(t)
        rots.append(rot.copy())
        omegas.append(omega.copy())
    return np.array(ts), np.array(rots), np.array(omegas)
