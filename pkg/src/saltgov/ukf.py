"""Unscented Kalman Filter over the 6-group kinetics with a drifting-reactivity model.

The filter sees a single measurement, the normalized power n, and infers the
six precursor concentrations plus the reactivity. Reactivity is modeled as a
first-order power series rho(t) = alpha + omega * t, carried in the state as
the pair (alpha, omega) so the augmented state is

    x = [n, C_1 .. C_6, alpha, omega]          (9 components)

Over one sampling interval the reactivity is held at its step-start value
(zero-order hold), which makes the kinetics block exactly integrable by a
matrix exponential; alpha then advances by omega * dt. The transition is
nonlinear in the state (alpha multiplies n inside the exponential), hence
the unscented treatment with Van der Merwe scaled sigma points.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from .kinetics import KineticsParams, equilibrium_precursors, pke_matrix

STATE_DIM = 9


class SigmaPointError(RuntimeError):
    """Covariance lost positive definiteness beyond what jitter can repair."""


@dataclass(frozen=True)
class SigmaParams:
    alpha: float = 0.001
    beta: float = 2.0
    kappa: float = 0.0


@dataclass
class ObserverState:
    mean: np.ndarray                 # (9,)
    covariance: np.ndarray           # (9, 9) symmetric PD
    process_noise: np.ndarray        # (9, 9)
    measurement_noise: float         # scalar variance on n
    sigma: SigmaParams = field(default_factory=SigmaParams)
    t: float = 0.0

    @property
    def power(self):
        return float(self.mean[0])

    @property
    def precursors(self):
        return self.mean[1:7].copy()

    @property
    def reactivity(self):
        return float(self.mean[7])

    @property
    def reactivity_slope(self):
        return float(self.mean[8])


def pke_transition(x, dt, kinetics):
    """Advance the augmented state by dt with rho held at its start value.

    The kinetics block [n, C] is propagated by expm(M(rho) * dt), exact for
    the held rho; the reactivity pair follows its own linear dynamics
    alpha' = alpha + omega * dt, omega' = omega.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    rho = x[7]
    phi = expm(pke_matrix(kinetics, rho) * dt)
    if not np.all(np.isfinite(phi)):
        raise FloatingPointError("matrix exponential produced non-finite entries")
    out = np.empty(STATE_DIM)
    out[:7] = phi @ x[:7]
    out[7] = x[7] + x[8] * dt
    out[8] = x[8]
    return out


def sigma_points(mean, covariance, params):
    """Van der Merwe scaled sigma points.

    Returns (points, mean_weights, cov_weights) with points of shape
    (2L+1, L). The weighted mean of the points reproduces the input mean
    exactly and the weighted outer products reproduce the covariance.
    """
    mean = np.asarray(mean, dtype=float)
    covariance = np.asarray(covariance, dtype=float)
    L = len(mean)
    # spread = L + lambda computed directly; forming lambda first and adding L
    # back would lose ~10 digits for alpha this small
    spread = params.alpha ** 2 * (L + params.kappa)

    try:
        root = np.linalg.cholesky(spread * covariance)
    except np.linalg.LinAlgError:
        try:
            root = np.linalg.cholesky(spread * (covariance + 1e-12 * np.eye(L)))
        except np.linalg.LinAlgError as exc:
            raise SigmaPointError("covariance not positive definite") from exc

    points = np.empty((2 * L + 1, L))
    points[0] = mean
    points[1:L + 1] = mean + root.T
    points[L + 1:] = mean - root.T

    wi = 1.0 / (2.0 * spread)
    wm = np.full(2 * L + 1, wi)
    wc = wm.copy()
    wm[0] = 1.0 - 2 * L * wi            # = lambda/spread, kept sum-consistent
    wc[0] = wm[0] + (1.0 - params.alpha ** 2 + params.beta)
    return points, wm, wc


def default_process_noise(dt=0.2):
    """Small diagonal drift, opened up on the reactivity pair.

    The kinetics block is propagated exactly, so its process noise only
    reflects the held-rho approximation; the (alpha, omega) channels carry
    the real model slack that lets the filter follow feedback-driven
    reactivity drift.
    """
    q = np.zeros((STATE_DIM, STATE_DIM))
    q[0, 0] = 1e-10
    for i in range(1, 7):
        q[i, i] = 1e-12
    q[7, 7] = (1e-4) ** 2 * dt
    q[8, 8] = (1e-7) ** 2 * dt
    return q


# variance floor at the rated detector noise; a deployed filter keeps its R
# at the sensor rating rather than retuning when the plant happens to be quiet
R_FLOOR = (1.0e-3) ** 2


def initial_observer(kinetics, n0, dt=0.2, measurement_sigma=0.0):
    """Warm start at the analytic equilibrium for a known power level."""
    mean = np.zeros(STATE_DIM)
    mean[0] = n0
    mean[1:7] = equilibrium_precursors(kinetics, n0)
    cov = np.eye(STATE_DIM) * 1e-6
    return ObserverState(
        mean=mean,
        covariance=cov,
        process_noise=default_process_noise(dt),
        measurement_noise=max(measurement_sigma ** 2, R_FLOOR),
    )


def _weighted_mean(points, wm):
    """Sigma-point mean in deviation-from-center form.

    With alpha = 1e-3 the weights are O(1e6) of mixed sign; summing
    w_i * x_i directly loses ~10 digits to cancellation. Using
    x_0 + w * sum(x_i - x_0) is algebraically identical (the weights sum to
    one by construction) and keeps the large factors multiplying only the
    small spreads.
    """
    return points[0] + wm[1] * np.sum(points[1:] - points[0], axis=0)


def ukf_step(observer, measured_n, dt, kinetics):
    """One predict/update cycle against the scalar power measurement."""
    if not np.isfinite(measured_n):
        raise ValueError("measured power must be finite")

    # predict
    pts, wm, wc = sigma_points(observer.mean, observer.covariance, observer.sigma)
    prop = np.empty_like(pts)
    for i, p in enumerate(pts):
        prop[i] = pke_transition(p, dt, kinetics)
    x_pred = _weighted_mean(prop, wm)
    dx = prop - x_pred
    p_pred = (dx.T * wc) @ dx + observer.process_noise
    p_pred = 0.5 * (p_pred + p_pred.T)

    # update with z = n
    pts2, wm2, wc2 = sigma_points(x_pred, p_pred, observer.sigma)
    z_sigma = pts2[:, 0]
    z_pred = float(_weighted_mean(z_sigma[:, None], wm2)[0])
    dz = z_sigma - z_pred
    s = float((wc2 * dz) @ dz) + observer.measurement_noise
    p_xz = (pts2 - x_pred).T @ (wc2 * dz)
    innovation = measured_n - z_pred
    if not np.isfinite(innovation) or not np.isfinite(s) or s <= 0:
        raise FloatingPointError("non-finite innovation in UKF update")
    gain = p_xz / s
    mean = x_pred + gain * innovation
    cov = p_pred - np.outer(gain, gain) * s
    cov = 0.5 * (cov + cov.T)

    mean[0] = max(mean[0], 0.0)
    return replace(observer, mean=mean, covariance=cov, t=observer.t + dt)
