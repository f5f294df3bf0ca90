"""Prescribed-time disturbance observer.

Reconstructs the torque disturbance acting on the rate-error dynamics
J we' = H + u + d from an internal state p:

    p' = -c mu(t) p - c mu(t) (c mu(t) J we + H + u) - c mu'(t) J we
    d_hat = p + c mu(t) J we

which makes the estimation error obey d_tilde' = d' - c mu(t) d_tilde, a
first-order lag whose gain ramps along the saturated prescribed-time
schedule.  When the inertia is uncertain the observer runs on the nominal
inertia and reconstructs the lumped disturbance (external torque plus all
inertia-mismatch terms).
"""

from dataclasses import dataclass

import numpy as np

from .ppta import PptaSchedule, ppta_gain, ppta_gain_rate


@dataclass(frozen=True)
class DisturbanceObserver:
    """Observer gain (1/s) and its prescribed-time schedule."""

    gain: float
    schedule: PptaSchedule

    def __post_init__(self):
        if self.gain <= 0.0:
            raise ValueError("observer gain must be positive")

    def state_rate(self, p, omega_err, coriolis_comp, u, t: float, inertia) -> np.ndarray:
        """Rate of the internal state p.

        coriolis_comp is the lumped model term H = -C we - G of the
        rate-error dynamics; u the applied control torque.
        """
        cmu = self.gain * ppta_gain(t, self.schedule)
        cmu_dot = self.gain * ppta_gain_rate(t, self.schedule)
        j_we = inertia @ omega_err
        return -cmu * p - cmu * (cmu * j_we + coriolis_comp + u) - cmu_dot * j_we

    def estimate(self, p, omega_err, t: float, inertia) -> np.ndarray:
        """Disturbance estimate d_hat = p + c mu(t) J we."""
        return p + self.gain * ppta_gain(t, self.schedule) * (inertia @ omega_err)
