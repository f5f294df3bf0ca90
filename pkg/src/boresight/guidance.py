"""Keep-out-cone model, potential field, and reference guidance laws on the sphere.

The reference boresight direction is steered by the tangential gradient flow
of a potential: an attractive term toward the goal plus one repulsive term
per forbidden cone.  Each cone is padded twice, by a hard safety margin
(the flow must never cross it) and by a wider influence band inside which
the repulsion is active.  A virtual cone around the antipode of the goal
keeps the flow away from the spurious equilibrium there.

The prescribed-time law scales the baseline flow by a saturated
time-varying gain, which reparameterizes time along the same geometric path
and drags the slow tail of the convergence inside the configured horizon.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import BoundaryViolation, NoSolution, NonFiniteState
from .manifold import cross, geodesic_distance, unit_vector
from .ppta import PptaSchedule, ppta_gain, ppta_gain_rate


@dataclass(eq=False)
class ForbiddenZone:
    """One keep-out cone: unit axis, half-angle in (0, pi/2), virtual flag.

    The virtual zone (index 0 of a configuration) is the artificial cone
    around the antipode of the goal; it has no physical meaning and is
    excluded from critical-point analysis.
    """

    axis: np.ndarray
    half_angle: float
    is_virtual: bool = False

    def __post_init__(self):
        self.axis = unit_vector(self.axis)
        if not (0.0 < self.half_angle < 0.5 * math.pi):
            raise ValueError(f"half angle must lie in (0, pi/2), got {self.half_angle}")


@dataclass(eq=False)
class GuidanceConfig:
    """Zones, goal, margins, and gains of the guidance potential.

    zones:        forbidden cones, index 0 being the virtual antipode cone.
    goal:         target boresight direction (unit).
    margin:       hard safety pad (rad) added to every cone half-angle.
    influence:    width (rad) of the repulsion band around each padded cone.
    clearance:    minimum pairwise separation constant (rad) the zone set is
                  validated against.
    attract_gain / repulse_gain: potential weights.
    schedule:     prescribed-time gain schedule of the guidance law.

    Must satisfy 0 < margin < influence <= clearance.  Cosine thresholds per
    zone are cached: cos_barrier = cos(theta + margin) is the level the flow
    must stay strictly below, cos_influence = cos(theta + influence) is where
    the repulsion switches on.
    """

    zones: List[ForbiddenZone]
    goal: np.ndarray
    margin: float
    influence: float
    clearance: float
    attract_gain: float
    repulse_gain: float
    schedule: PptaSchedule
    axes: np.ndarray = field(init=False, repr=False)
    half_angles: np.ndarray = field(init=False, repr=False)
    cos_barrier: np.ndarray = field(init=False, repr=False)
    cos_influence: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.goal = unit_vector(self.goal)
        if not self.zones:
            raise ValueError("at least the virtual zone is required")
        self.axes = np.array([z.axis for z in self.zones])
        self.half_angles = np.array([z.half_angle for z in self.zones])
        self.cos_barrier = np.cos(self.half_angles + self.margin)
        self.cos_influence = np.cos(self.half_angles + self.influence)

    @property
    def real_zone_indices(self):
        return [i for i, z in enumerate(self.zones) if not z.is_virtual]


@dataclass(frozen=True)
class ReferenceSample:
    """One integration sample of the reference trajectory."""

    t: float
    x: np.ndarray
    omega: np.ndarray
    omega_dot: np.ndarray


@dataclass
class ValidationReport:
    """Outcome of configuration validation; lists every violated clause."""

    failures: List[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    def raise_if_failed(self):
        from .errors import ValidationError

        if self.failures:
            raise ValidationError(self.failures)


def validate_config(cfg: GuidanceConfig) -> ValidationReport:
    """Check zone separation, margin ordering, and goal placement.

    Clauses:
      (a) every pair of cones is separated by more than the sum of
          half-angles plus twice the clearance constant;
      (b) 0 < margin < influence <= clearance;
      (c) the goal lies outside every influence region;
      (d) zone 0 is the virtual cone on the goal antipode.
    """
    failures = []
    n = len(cfg.zones)
    for i in range(n):
        for j in range(i + 1, n):
            d = geodesic_distance(cfg.zones[i].axis, cfg.zones[j].axis)
            need = cfg.zones[i].half_angle + cfg.zones[j].half_angle + 2.0 * cfg.clearance
            if d <= need:
                failures.append(
                    f"(a) zones {i} and {j} too close: separation {d:.6f} rad "
                    f"<= required {need:.6f} rad"
                )
    if not (0.0 < cfg.margin < cfg.influence <= cfg.clearance):
        failures.append(
            f"(b) margin chain violated: need 0 < margin < influence <= clearance, "
            f"got {cfg.margin:.6f} < {cfg.influence:.6f} <= {cfg.clearance:.6f}"
        )
    for i, z in enumerate(cfg.zones):
        if geodesic_distance(cfg.goal, z.axis) <= z.half_angle + cfg.influence:
            failures.append(f"(c) goal lies inside the influence region of zone {i}")
    if not cfg.zones[0].is_virtual:
        failures.append("(d) zone 0 must be flagged virtual")
    if np.linalg.norm(cfg.zones[0].axis + cfg.goal) > 1e-9:
        failures.append("(d) virtual zone axis must equal the goal antipode")
    for i, z in enumerate(cfg.zones[1:], start=1):
        if z.is_virtual:
            failures.append(f"(d) zone {i} must not be flagged virtual")
    return ValidationReport(failures)


# ---------------------------------------------------------------------------
# Repulsive potential of a single cone, as a function of z = x . axis


def repulsion(z: float, cos_barrier: float, cos_influence: float) -> float:
    """Repulsive potential (z - ci)^2 log((cb - ci)/(cb - z)) on [ci, cb), zero below ci.

    cb = cos(theta + margin) is the barrier cosine, ci = cos(theta +
    influence) the activation cosine.  Diverges as z approaches cb; raises
    BoundaryViolation at or past it (the state entered the padded cone).
    """
    if z >= cos_barrier:
        raise BoundaryViolation(zone_index=None)
    if z <= cos_influence:
        return 0.0
    w = z - cos_influence
    return w * w * math.log((cos_barrier - cos_influence) / (cos_barrier - z))


def repulsion_grad(z: float, cos_barrier: float, cos_influence: float) -> float:
    """d/dz of `repulsion`; nonnegative everywhere below the barrier."""
    if z >= cos_barrier:
        raise BoundaryViolation(zone_index=None)
    if z <= cos_influence:
        return 0.0
    w = z - cos_influence
    gap = cos_barrier - z
    return 2.0 * w * math.log((cos_barrier - cos_influence) / gap) + w * w / gap


def repulsion_hess(z: float, cos_barrier: float, cos_influence: float) -> float:
    """Second derivative of `repulsion`; continuous (zero) at the activation edge."""
    if z >= cos_barrier:
        raise BoundaryViolation(zone_index=None)
    if z <= cos_influence:
        return 0.0
    w = z - cos_influence
    gap = cos_barrier - z
    return (
        2.0 * math.log((cos_barrier - cos_influence) / gap)
        + 4.0 * w / gap
        + (w / gap) ** 2
    )


def _active_zones(x, cfg: GuidanceConfig):
    """Cosines x . f_i and the indices whose repulsion is active.

    Raises BoundaryViolation (with the zone index) when x is at or inside a
    margin-padded cone.
    """
    z = cfg.axes @ x
    inside = z >= cfg.cos_barrier
    if inside.any():
        raise BoundaryViolation(zone_index=int(np.argmax(inside)))
    active = np.nonzero(z > cfg.cos_influence)[0]
    return z, active


def potential(x, cfg: GuidanceConfig) -> float:
    """Potential level at x: attraction to the goal plus active repulsions."""
    z, active = _active_zones(x, cfg)
    u = cfg.attract_gain * (1.0 - float(x @ cfg.goal))
    for i in active:
        u += cfg.repulse_gain * repulsion(z[i], cfg.cos_barrier[i], cfg.cos_influence[i])
    return u


def potential_grad(x, cfg: GuidanceConfig) -> np.ndarray:
    """Embedding-space gradient of the potential at x.

    Equals -attract_gain * goal outside every influence region, and picks up
    grad-repulsion times the zone axis inside one.  Never the zero vector
    when the goal is clear of all influence regions.
    """
    z, active = _active_zones(x, cfg)
    g = -cfg.attract_gain * cfg.goal
    for i in active:
        g = g + cfg.repulse_gain * repulsion_grad(
            z[i], cfg.cos_barrier[i], cfg.cos_influence[i]
        ) * cfg.axes[i]
    return g


def baseline_law(x, cfg: GuidanceConfig) -> np.ndarray:
    """Angular-velocity command of the gradient flow, grad U x x.

    The induced motion x' = command x x is the projection of the negative
    gradient onto the tangent plane at x, so the sphere constraint is
    preserved exactly and the potential never increases along the flow.
    """
    return cross(potential_grad(x, cfg), x)


def pt_guidance_law(x, t: float, cfg: GuidanceConfig) -> np.ndarray:
    """Baseline command scaled by the saturated prescribed-time gain."""
    return ppta_gain(t, cfg.schedule) * baseline_law(x, cfg)


def _law_and_rate(x, mu: float, mu_dot: float, cfg: GuidanceConfig):
    """Scaled command mu*h and its exact time derivative along the flow.

    d/dt (mu h) = mu' h + mu J_h x', with x' = mu (h x x) and the Jacobian
    action J_h v = g x v - repulse_gain * sum_i hess_i (f_i . v) (x x f_i);
    the hessian of each repulsion exists everywhere below the barrier.
    """
    z, active = _active_zones(x, cfg)
    g = -cfg.attract_gain * cfg.goal
    hess = []
    for i in active:
        g = g + cfg.repulse_gain * repulsion_grad(
            z[i], cfg.cos_barrier[i], cfg.cos_influence[i]
        ) * cfg.axes[i]
        hess.append(repulsion_hess(z[i], cfg.cos_barrier[i], cfg.cos_influence[i]))
    h = cross(g, x)
    v = mu * cross(h, x)  # x' along the scaled flow
    jh_v = cross(g, v)
    for i, hz in zip(active, hess):
        f = cfg.axes[i]
        jh_v = jh_v - (cfg.repulse_gain * hz * float(f @ v)) * cross(x, f)
    return mu * h, mu_dot * h + mu * jh_v


def pt_guidance_law_rate(x, t: float, cfg: GuidanceConfig) -> np.ndarray:
    """Time derivative of the prescribed-time command along its own flow."""
    mu = ppta_gain(t, cfg.schedule)
    mu_dot = ppta_gain_rate(t, cfg.schedule)
    return _law_and_rate(x, mu, mu_dot, cfg)[1]


def zone_clearances(x, cfg: GuidanceConfig) -> np.ndarray:
    """Angular clearance to each cone edge, d(x, f_i) - theta_i, per zone."""
    d = np.arccos(np.clip(cfg.axes @ x, -1.0, 1.0))
    return d - cfg.half_angles


# ---------------------------------------------------------------------------
# Critical points of the potential flow


def find_critical_point(zone_index: int, cfg: GuidanceConfig) -> np.ndarray:
    """Stationary point of the flow behind one real cone.

    The balance point lies on the great circle through the goal and the cone
    axis, on the far side of the axis, with offset u from the axis inside
    the open band (theta + margin, theta + influence).  There the attraction
    magnitude attract_gain * sin d(c, goal) equals the repulsion magnitude
    repulse_gain * grad-repulsion(cos u) * sin u; the left side is bounded
    while the right side sweeps from 0 to infinity across the band, so a
    bisection on the offset finds the unique root.

    Raises NoSolution when the goal and the axis are collinear (the great
    circle is not unique) or when no admissible balance exists.
    """
    zone = cfg.zones[zone_index]
    if zone.is_virtual:
        raise ValueError("the virtual zone has no critical point")
    f = zone.axis
    c0 = float(cfg.goal @ f)
    if 1.0 - abs(c0) < 1e-9:
        raise NoSolution(f"goal and zone {zone_index} axis are collinear")
    # In-plane unit vector orthogonal to the goal, pointing toward the axis.
    e = unit_vector(f - c0 * cfg.goal)
    psi = math.acos(max(-1.0, min(1.0, c0)))
    cb = float(cfg.cos_barrier[zone_index])
    ci = float(cfg.cos_influence[zone_index])

    def balance(u: float) -> float:
        # Positive where attraction dominates; the root is the equilibrium.
        return cfg.attract_gain * math.sin(psi + u) - cfg.repulse_gain * repulsion_grad(
            math.cos(u), cb, ci
        ) * math.sin(u)

    lo = zone.half_angle + cfg.margin + 1e-12
    hi = zone.half_angle + cfg.influence
    f_lo, f_hi = balance(lo), balance(hi)
    if f_lo >= 0.0 or f_hi <= 0.0:
        raise NoSolution(
            f"no attraction/repulsion balance behind zone {zone_index} "
            f"(degenerate geometry)"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:  # interval below float resolution
            break
        if balance(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    u = 0.5 * (lo + hi)
    a = psi + u
    return unit_vector(math.cos(a) * cfg.goal + math.sin(a) * e)


def critical_point_residual(c, zone_index: int, cfg: GuidanceConfig) -> float:
    """Norm of the stationarity defect at c for one zone's balance equation."""
    f = cfg.zones[zone_index].axis
    g = repulsion_grad(
        float(c @ f), cfg.cos_barrier[zone_index], cfg.cos_influence[zone_index]
    )
    return float(
        np.linalg.norm(
            cfg.attract_gain * cross(c, cfg.goal) - cfg.repulse_gain * g * cross(c, f)
        )
    )


# ---------------------------------------------------------------------------
# Reference propagation


def propagate_reference(
    x0,
    cfg: GuidanceConfig,
    dt: float,
    t_end: float,
    law: str = "ppt",
    record_every: int = 1,
) -> List[ReferenceSample]:
    """Integrate the reference flow with fixed-step RK4, renormalizing each step.

    law: "ppt" runs the prescribed-time command, "baseline" the unscaled
    flow.  Samples (state, command, command rate) are recorded every
    `record_every` steps; the first and last states are always included.
    Raises BoundaryViolation if any stage state enters a padded cone and
    NonFiniteState if the state stops being finite.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if law not in ("ppt", "baseline"):
        raise ValueError(f"unknown guidance law {law!r}")
    sched = cfg.schedule

    def gains(t):
        if law == "baseline":
            return 1.0, 0.0
        return ppta_gain(t, sched), ppta_gain_rate(t, sched)

    def flow(t, x):
        mu = gains(t)[0]
        h = baseline_law(x, cfg)
        return mu * cross(h, x)

    x = unit_vector(x0)
    samples: List[ReferenceSample] = []

    def record(t, x):
        mu, mu_dot = gains(t)
        try:
            omega, omega_dot = _law_and_rate(x, mu, mu_dot, cfg)
        except BoundaryViolation as exc:
            raise BoundaryViolation(exc.zone_index, t=t) from None
        samples.append(ReferenceSample(t=t, x=x.copy(), omega=omega, omega_dot=omega_dot))

    record(0.0, x)
    n_steps = int(math.ceil(t_end / dt - 1e-9))
    t = 0.0
    for k in range(n_steps):
        h_step = min(dt, t_end - t)
        try:
            k1 = flow(t, x)
            k2 = flow(t + 0.5 * h_step, x + 0.5 * h_step * k1)
            k3 = flow(t + 0.5 * h_step, x + 0.5 * h_step * k2)
            k4 = flow(t + h_step, x + h_step * k3)
        except BoundaryViolation as exc:
            raise BoundaryViolation(exc.zone_index, t=t) from None
        x = x + (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState("reference state became non-finite", t=t)
        x = x / math.sqrt(float(x @ x))
        t = (k + 1) * dt if k + 1 < n_steps else t_end
        if (k + 1) % record_every == 0 or k + 1 == n_steps:
            record(t, x)
    return samples
