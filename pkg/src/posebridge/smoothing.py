"""Streaming double-exponential smoother with a deadband.

Per frame, with level s and trend b:

    s_t = alpha*y_t + (1-alpha)*(s_{t-1} + b_{t-1})
    b_t = gamma*(s_t - s_{t-1}) + (1-gamma)*b_{t-1}

and when the proposed level step ||s_t - s_{t-1}|| falls below the deadband
eta, the level freezes at s_{t-1} (output unchanged) while the trend keeps
decaying by (1-gamma), so a long freeze cannot wind it up.

The first frame initializes s = y, b = 0 and is returned unchanged.  One
smoother serves one stream; it must not be shared across streams.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericFailure

DEFAULT_ALPHA = 0.75
DEFAULT_GAMMA = 0.3
DEFAULT_ETA = 0.15


class Smoother:
    def __init__(self, dim, alpha=DEFAULT_ALPHA, gamma=DEFAULT_GAMMA, eta=DEFAULT_ETA):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if not eta >= 0.0:
            raise ValueError("eta must be >= 0 (use math.inf to freeze everything)")
        self._dim = int(dim)
        self._alpha = float(alpha)
        self._gamma = float(gamma)
        self._eta = float(eta)
        self._level = None
        self._trend = None

    @property
    def alpha(self):
        return self._alpha

    @property
    def gamma(self):
        return self._gamma

    @property
    def eta(self):
        return self._eta

    @property
    def initialized(self):
        return self._level is not None

    def step(self, value):
        """Consume one frame and return the smoothed frame."""
        y = np.asarray(value, dtype=np.float64)
        if y.shape != (self._dim,):
            raise ValueError(f"frame has shape {y.shape}, smoother expects ({self._dim},)")
        if not np.all(np.isfinite(y)):
            raise NumericFailure("non-finite frame fed to smoother; state unchanged")
        if self._level is None:
            self._level = y.copy()
            self._trend = np.zeros(self._dim)
            return self._level.copy()
        proposed = self._alpha * y + (1.0 - self._alpha) * (self._level + self._trend)
        delta = proposed - self._level
        if float(np.linalg.norm(delta)) < self._eta:
            # deadband: hold the level, decay the trend
            self._trend *= 1.0 - self._gamma
            return self._level.copy()
        self._trend = self._gamma * delta + (1.0 - self._gamma) * self._trend
        self._level = proposed
        return self._level.copy()

    def reset(self):
        self._level = None
        self._trend = None
