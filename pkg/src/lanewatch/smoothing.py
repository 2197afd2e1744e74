"""Autoregressive smoothing of reconstruction-error series.

The default configuration is a trailing moving average over the last k
observations including the current one: intercept 0 and uniform weights
1/k.  During warm-up, while fewer than k values exist, the output is the
intercept plus the uniform average of the values seen so far, so no
undefined values are emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .reconstruct import ErrorSeries

__all__ = ["ArFilterConfig", "ArStream", "ar_filter"]

DEFAULT_AR_ORDER = 10


@dataclass
class ArFilterConfig:
    """Filter order, per-lag coefficients, and intercept.

    coefficients[0] weighs the current value, coefficients[i] the value i
    frames back.  coefficients=None fills in the uniform default 1/k.
    """

    order_k: int = DEFAULT_AR_ORDER
    coefficients: tuple[float, ...] | None = None
    intercept: float = 0.0

    def __post_init__(self):
        if self.order_k < 1:
            raise ValueError(f"filter order must be at least 1, got {self.order_k}")
        if self.coefficients is None:
            self.coefficients = (1.0 / self.order_k,) * self.order_k
        else:
            self.coefficients = tuple(float(c) for c in self.coefficients)
        if len(self.coefficients) != self.order_k:
            raise ValueError(
                f"expected {self.order_k} coefficients, got {len(self.coefficients)}"
            )
        self.intercept = float(self.intercept)


@dataclass
class ArStream:
    """Streaming form of ar_filter: push one raw value, get one smoothed.

    Keeps a ring buffer of the last order_k raw values; a single instance
    is meant to be owned and advanced by one caller.
    """

    cfg: ArFilterConfig = field(default_factory=ArFilterConfig)

    def __post_init__(self):
        self._buffer = np.zeros(self.cfg.order_k)
        self._kernel = np.asarray(self.cfg.coefficients)
        self._count = 0

    def push(self, value: float) -> float:
        if not value >= 0.0:
            raise ValueError(f"error values are non-negative, got {value}")
        k = self.cfg.order_k
        self._buffer[self._count % k] = value
        self._count += 1
        if self._count < k:
            # Warm-up: uniform average of what exists so far.
            return self.cfg.intercept + float(self._buffer[: self._count].mean())
        # Gather the window newest-first to line up with the coefficients.
        newest = (self._count - 1) % k
        idx = (newest - np.arange(k)) % k
        return self.cfg.intercept + float(np.dot(self._kernel, self._buffer[idx]))


def ar_filter(raw: ErrorSeries, cfg: ArFilterConfig | None = None) -> ErrorSeries:
    """Smooth an error series; output has the same length and start index.

    output[t] = intercept + sum_i coefficients[i] * raw[t - i] over the
    order_k most recent values; positions with fewer than order_k values
    available use the warm-up average instead.
    """
    cfg = cfg or ArFilterConfig()
    values = raw.values
    n = values.size
    if n == 0:
        raise ValueError("cannot smooth an empty series")
    k = cfg.order_k
    out = np.empty(n)
    warm = min(k - 1, n)
    if warm:
        out[:warm] = np.cumsum(values[:warm]) / np.arange(1, warm + 1)
    if n >= k:
        # np.convolve flips its kernel, which lines coefficient i up with
        # the value i frames back, exactly the lag convention here.
        out[k - 1 :] = np.convolve(values, np.asarray(cfg.coefficients), mode="valid")
    out += cfg.intercept
    return ErrorSeries(values=out, start_index=raw.start_index)
