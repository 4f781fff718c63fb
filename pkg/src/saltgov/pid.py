"""Low-level control layer: three positional PID loops.

Pairings follow the plant control strategy: the power loop tracks the
admitted power setpoint through external reactivity, while the core outlet
and inlet temperature loops regulate through the primary and secondary pump
heads. All three run with the derivative term nullified; anti-windup is a
plain clamp on the integral accumulator.
"""

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float = 0.0
    bias: float = 0.0
    out_min: float = -np.inf
    out_max: float = np.inf
    integral_clamp: float = np.inf   # |integral contribution| bound

    def __post_init__(self):
        if not np.isfinite(self.out_min) and not np.isfinite(self.out_max):
            # saturation limits may be one-sided but not absent on both ends
            # for the plant controllers; generic use tolerates it
            pass
        if self.integral_clamp <= 0:
            raise ValueError("integral clamp must be positive")

    def to_dict(self):
        return {"kp": self.kp, "ki": self.ki, "kd": self.kd, "bias": self.bias,
                "out_min": self.out_min, "out_max": self.out_max,
                "integral_clamp": self.integral_clamp}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    last_output: float = 0.0


def pid_step(gains, state, setpoint, measurement, dt):
    """One positional PID evaluation; returns (action, new_state)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    error = setpoint - measurement
    integral = state.integral + gains.ki * error * dt
    integral = min(max(integral, -gains.integral_clamp), gains.integral_clamp)
    derivative = (error - state.prev_error) / dt
    action = gains.bias + gains.kp * error + integral + gains.kd * derivative
    action = min(max(action, gains.out_min), gains.out_max)
    return action, PidState(integral=integral, prev_error=error, last_output=action)


class UnstableGridError(RuntimeError):
    """Every candidate in the tuning grid destabilized the loop."""


def tune_grid_search(evaluate, kp_grid, ki_grid):
    """Pick (kp, ki) minimizing a closed-loop cost.

    evaluate(kp, ki) must return the scalar cost of one closed-loop run
    (integral absolute error plus any overshoot penalty), or inf/nan for an
    unstable candidate. Ties break toward smaller |kp|, then smaller |ki|,
    so repeated grid entries cannot make the result order-dependent.

    Returns (kp, ki, report) with report = list of (kp, ki, cost).
    """
    report = []
    best = None
    for kp in kp_grid:
        for ki in ki_grid:
            cost = evaluate(kp, ki)
            report.append((kp, ki, cost))
            if not np.isfinite(cost):
                continue
            key = (cost, abs(kp), abs(ki))
            if best is None or key < best[0]:
                best = (key, kp, ki)
    if best is None:
        raise UnstableGridError("all PID candidates were unstable")
    return best[1], best[2], report


def closed_loop_cost(errors, actions, dt, overshoot_sign=0.0, overshoot_weight=100.0):
    """Integral-absolute-error cost with a one-sided overshoot penalty.

    overshoot_sign > 0 penalizes positive error excursions, < 0 negative
    ones, 0 disables the penalty. Non-finite trajectories cost inf.
    """
    errors = np.asarray(errors)
    if not np.all(np.isfinite(errors)):
        return np.inf
    cost = float(np.sum(np.abs(errors)) * dt)
    if overshoot_sign > 0:
        cost += overshoot_weight * float(np.max(np.maximum(errors, 0.0)))
    elif overshoot_sign < 0:
        cost += overshoot_weight * float(np.max(np.maximum(-errors, 0.0)))
    return cost
