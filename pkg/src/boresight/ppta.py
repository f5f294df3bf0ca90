"""Saturated prescribed-time gain functions and their convergence bounds.

The core object is a time-varying gain mu(t) that ramps like T/(T - t) up to
a saturation time T* < T, then blends through a quarter sine wave onto the
constant (1 + 2/pi) T/(T - T*) for all t >= T.  The blend keeps mu C1
continuous, which the downstream observer and controller need because mu's
derivative enters their feedforward terms.

`residual_set_bounds` evaluates the guaranteed residual levels for a scalar
comparison system V' <= -alpha mu(t) V + beta driven by such a gain: V is
below v1 at the saturation time and below max(v1, v2) ever after.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, HypothesisViolated


@dataclass(frozen=True)
class PptaSchedule:
    """Horizon and saturation time of one saturated prescribed-time gain.

    horizon:    time T (s) at which the unsaturated gain would diverge.
    saturation: time T* (s) at which the gain stops ramping, 0 < T* < T.
    """

    horizon: float
    saturation: float

    def __post_init__(self):
        if not (0.0 < self.saturation < self.horizon):
            raise ValueError(
                f"need 0 < saturation < horizon, got T*={self.saturation}, T={self.horizon}"
            )

    @property
    def peak_gain(self) -> float:
        """Gain value reached at the saturation time, T / (T - T*)."""
        return self.horizon / (self.horizon - self.saturation)

    @property
    def final_gain(self) -> float:
        """Constant gain held for all t >= T, (1 + 2/pi) T / (T - T*)."""
        return (1.0 + 2.0 / math.pi) * self.peak_gain


def time_scale_transform(s, horizon: float):
    """Map stretched time s in [0, inf) to real time t = T (1 - exp(-s/T)).

    Strictly increasing with unit slope at zero; approaches the horizon T as
    s grows.  Accepts scalars or arrays.
    """
    if horizon <= 0.0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0):
        raise DomainError("stretched time must be nonnegative")
    out = horizon * (-np.expm1(-s_arr / horizon))
    return float(out) if np.isscalar(s) else out


def pta_gain(t: float, horizon: float) -> float:
    """Unsaturated gain T / (T - t); diverges as t approaches the horizon."""
    if t >= horizon:
        raise DomainError(f"pta_gain undefined for t >= horizon ({t} >= {horizon})")
    return horizon / (horizon - t)


def ppta_gain(t, sched: PptaSchedule):
    """Saturated C1 gain: ramp until T*, quarter-sine blend on [T*, T], then constant.

    mu(0) = 1, mu is nondecreasing, and mu(t) = (1 + 2/pi) T/(T - T*) for
    t >= T.  Accepts scalars or arrays of times.
    """
    T, Ts = sched.horizon, sched.saturation
    if not isinstance(t, np.ndarray):
        if t <= Ts:
            return T / (T - t)
        if t < T:
            blend = 1.0 + (2.0 / math.pi) * math.sin(0.5 * math.pi * (t - Ts) / (T - Ts))
            return sched.peak_gain * blend
        return sched.final_gain
    ramp = T / (T - np.minimum(t, Ts))
    blend = sched.peak_gain * (
        1.0 + (2.0 / math.pi) * np.sin(0.5 * math.pi * (np.clip(t, Ts, T) - Ts) / (T - Ts))
    )
    return np.where(t <= Ts, ramp, np.where(t < T, blend, sched.final_gain))


def ppta_gain_rate(t, sched: PptaSchedule):
    """Analytic time derivative of `ppta_gain`.

    T/(T - t)^2 on [0, T*], a matching cosine arch on [T*, T), and zero from
    T on.  Both one-sided values at T* equal T/(T - T*)^2 and both vanish at
    T, which is what makes the gain C1.
    """
    T, Ts = sched.horizon, sched.saturation
    if not isinstance(t, np.ndarray):
        if t < 0.0:
            raise DomainError("time must be nonnegative")
        if t <= Ts:
            return T / (T - t) ** 2
        if t < T:
            return sched.peak_gain * math.cos(0.5 * math.pi * (t - Ts) / (T - Ts)) / (T - Ts)
        return 0.0
    ramp = T / (T - np.minimum(t, Ts)) ** 2
    arch = sched.peak_gain * np.cos(0.5 * math.pi * (np.clip(t, Ts, T) - Ts) / (T - Ts)) / (T - Ts)
    return np.where(t <= Ts, ramp, np.where(t < T, arch, 0.0))


@dataclass(frozen=True)
class LemmaBounds:
    """Residual levels guaranteed for V' <= -alpha mu(t) V + beta.

    v1 bounds V at the saturation time; v2 is the forced equilibrium level
    beta (T - T*) / (alpha T); trajectories stay below v_max = max(v1, v2)
    for all later times.  v1 splits into a decay part (initial condition)
    and a forcing part v1_forcing, kept separate for diagnostics.
    """

    v1: float
    v2: float
    v_max: float
    v1_forcing: float
    alpha: float
    beta: float
    v0: float


def residual_set_bounds(alpha: float, beta: float, sched: PptaSchedule, v0: float) -> LemmaBounds:
    """Residual-set levels for the comparison system V' <= -alpha mu(t) V + beta.

    Requires alpha > 1/T (strictly), beta >= 0, v0 >= 0.  Raises
    HypothesisViolated when alpha is at or below the 1/T boundary.
    """
    T, Ts = sched.horizon, sched.saturation
    if alpha <= 1.0 / T:
        raise HypothesisViolated(f"need alpha > 1/T = {1.0 / T:.6g}, got alpha = {alpha}")
    if beta < 0.0 or v0 < 0.0:
        raise ValueError("beta and v0 must be nonnegative")
    q = (T - Ts) / T  # in (0, 1)
    q_pow = q ** (alpha * T)
    v1_forcing = beta * T / (alpha * T - 1.0) * (q - q_pow)
    v1 = q_pow * v0 + v1_forcing
    v2 = beta * (T - Ts) / (alpha * T)
    return LemmaBounds(
        v1=v1,
        v2=v2,
        v_max=max(v1, v2),
        v1_forcing=v1_forcing,
        alpha=alpha,
        beta=beta,
        v0=v0,
    )
