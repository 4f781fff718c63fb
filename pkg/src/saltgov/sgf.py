"""Savitzky-Golay smoothing for the measurement channels.

Weights come from the local least-squares polynomial fit expressed as a
convolution. Two evaluation modes exist:

* ``causal`` evaluates the fit at the newest sample of a trailing window,
  which is what the control loop needs (no added lag for polynomial trends
  up to the configured order, at the price of a higher noise gain).
* ``centered`` evaluates at the window midpoint, the classic zero-phase
  offline form with the familiar variance reduction of 1 / sum(w^2).

During warm-up (fewer samples than one window) the fit uses every sample
seen so far with the polynomial order reduced to keep the design matrix
well-posed, so the filter is defined from the very first sample.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SgfConfig:
    window: int = 299
    order: int = 3
    derivative: int = 0          # smoothing only; derivatives are disabled
    mode: str = "causal"         # "causal" or "centered"

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("window must be a positive odd sample count")
        if not 0 <= self.order < self.window:
            raise ValueError("order must satisfy 0 <= order < window")
        if self.derivative != 0:
            raise ValueError("derivatives are disabled")
        if self.mode not in ("causal", "centered"):
            raise ValueError("mode must be 'causal' or 'centered'")

    def to_dict(self):
        return {"window": self.window, "order": self.order,
                "derivative": self.derivative, "mode": self.mode}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _weights(window, order, eval_index):
    """LS polynomial-fit convolution weights evaluated at sample eval_index.

    Positions are scaled to [-1, 1] before building the Vandermonde system;
    the weights are invariant to that affine rescaling and it keeps the
    normal equations well conditioned even for 299-point cubic fits.
    """
    if order >= window:
        raise ValueError("order too high for window (degenerate design matrix)")
    j = np.arange(window, dtype=float) - eval_index
    t = j / max(window - 1, 1)
    V = np.vander(t, order + 1, increasing=True)
    gram = V.T @ V
    try:
        first_col = np.linalg.solve(gram, np.eye(order + 1)[:, 0])
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate design matrix") from exc
    return V @ first_col


def sgf_weights(config):
    """Weight vector for a full window under the configured evaluation mode."""
    eval_index = config.window - 1 if config.mode == "causal" else (config.window - 1) // 2
    return _weights(config.window, config.order, eval_index)


def variance_reduction(config):
    """White-noise variance reduction factor, var_in / var_out = 1 / sum(w^2)."""
    w = sgf_weights(config)
    return 1.0 / float(w @ w)


class StreamingSgf:
    """Per-channel streaming filter: push one sample, read one estimate."""

    def __init__(self, config):
        self.config = config
        self._buf = np.zeros(config.window)
        self._count = 0
        self._full_weights = sgf_weights(config)
        self._warm_cache = {}

    def _warmup_weights(self, m):
        w = self._warm_cache.get(m)
        if w is None:
            order = min(self.config.order, m - 1)
            if self.config.mode == "causal":
                eval_index = m - 1
            else:
                eval_index = (m - 1) // 2
            w = _weights(m, order, eval_index)
            self._warm_cache[m] = w
        return w

    def push(self, value):
        """Append a sample and return the current smoothed estimate."""
        window = self.config.window
        if self._count < window:
            self._buf[self._count] = value
            self._count += 1
            if self._count < window:
                w = self._warmup_weights(self._count)
                return float(w @ self._buf[:self._count])
        else:
            self._buf[:-1] = self._buf[1:]
            self._buf[-1] = value
        return float(self._full_weights @ self._buf)

    @property
    def warmed_up(self):
        return self._count >= self.config.window


def apply(signal, config):
    """Filter a whole signal in streaming order; returns the smoothed array."""
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1 or len(signal) < 1:
        raise ValueError("signal must be a non-empty 1-D array")
    filt = StreamingSgf(config)
    return np.array([filt.push(v) for v in signal])
