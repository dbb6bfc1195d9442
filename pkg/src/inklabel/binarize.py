"""Foreground/background separation.

Three ways of turning a gray page into a boolean foreground mask: a fixed
global threshold, a local adaptive threshold (mean or Gaussian-weighted
window), and Otsu's automatic threshold.  Polarity is fixed to
dark-ink-on-light-paper: a pixel is foreground when it is dark enough.
Callers that need inverse video apply an invert flag at the session level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import BadWindow, ConfigError

METHODS = ("global", "adaptive_mean", "adaptive_gaussian", "otsu")


@dataclass(frozen=True)
class ThresholdParams:
    """Parameters for one binarization call.

    ``t`` applies to the global method only; ``window`` (odd, >= 3) and the
    signed offset ``c`` apply to the adaptive methods.
    """

    method: str = "otsu"
    t: int = 128
    window: int = 31
    c: float = 10.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown threshold method {self.method!r}, expected one of {METHODS}")

    def to_json(self) -> dict:
        out: dict = {"method": self.method}
        if self.method == "global":
            out["t"] = int(self.t)
        elif self.method in ("adaptive_mean", "adaptive_gaussian"):
            out["window"] = int(self.window)
            out["c"] = self.c
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ThresholdParams":
        if not isinstance(data, dict) or "method" not in data:
            raise ConfigError("threshold config must be an object with a 'method' key")
        allowed = {"method", "t", "window", "c"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown threshold keys: {sorted(unknown)}")
        kwargs = {k: data[k] for k in allowed if k in data}
        return cls(**kwargs)


def histogram(img: np.ndarray) -> np.ndarray:
    """256-bin intensity histogram; counts sum to w*h."""
    return np.bincount(np.asarray(img, dtype=np.uint8).ravel(), minlength=256).astype(np.int64)


def threshold_global(img: np.ndarray, t: int) -> np.ndarray:
    """Foreground iff intensity <= t."""
    if not 0 <= t <= 255:
        raise ValueError(f"threshold {t} out of range 0..255")
    return np.asarray(img, dtype=np.uint8) <= t


def otsu_threshold(img: np.ndarray) -> int:
    """Smallest t in 0..255 maximizing the between-class variance.

    Class 0 holds the pixels with intensity <= t.  The score
    w0*w1*(mu0-mu1)^2 is compared in exact integer arithmetic, written as
    (s0*n1 - s1*n0)^2 / (n0*n1) up to the constant factor 1/N^2, so the
    argmax never depends on float rounding.
    """
    counts = [int(c) for c in histogram(img)]
    n = sum(counts)
    total = sum(v * c for v, c in enumerate(counts))
    best_t, best_num, best_den = 0, 0, 1
    n0 = s0 = 0
    for t in range(256):
        n0 += counts[t]
        s0 += t * counts[t]
        n1 = n - n0
        if n0 == 0 or n1 == 0:
            continue
        s1 = total - s0
        num = (s0 * n1 - s1 * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def threshold_otsu(img: np.ndarray) -> tuple[int, np.ndarray]:
    t = otsu_threshold(img)
    return t, threshold_global(img, t)


def _window_sums(img: np.ndarray, window: int) -> np.ndarray:
    """Exact integer sum of each window x window neighborhood (replicate borders)."""
    r = window // 2
    padded = np.pad(img, r, mode="edge").astype(np.int64)
    sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
    np.cumsum(padded, axis=0, out=sat[1:, 1:])
    np.cumsum(sat[1:, 1:], axis=1, out=sat[1:, 1:])
    h, w = img.shape
    return sat[window:, window:] - sat[:h, window:] - sat[window:, :w] + sat[:h, :w]


def threshold_adaptive(img: np.ndarray, window: int, c: float, mode: str = "mean") -> np.ndarray:
    """Foreground iff intensity < local window statistic - c (strict).

    ``mode='mean'`` uses the plain window mean, computed with an integer
    summed-area table so the comparison is exact.  ``mode='gaussian'`` uses a
    Gaussian-weighted mean with sigma = 0.3*((window-1)/2 - 1) + 0.8.
    Borders are replicate padded.
    """
    if window % 2 == 0 or window < 3:
        raise BadWindow(f"window must be odd and >= 3, got {window}")
    if mode not in ("mean", "gaussian"):
        raise ValueError(f"unknown adaptive mode {mode!r}")
    img = np.asarray(img, dtype=np.uint8)

    if mode == "mean":
        area = window * window
        sums = _window_sums(img, window)
        lhs = img.astype(np.int64) * area
        if float(c).is_integer():
            return lhs < sums - int(c) * area
        return lhs < sums - c * area

    sigma = 0.3 * ((window - 1) / 2 - 1) + 0.8
    offs = np.arange(window, dtype=np.float64) - window // 2
    kernel = np.exp(-(offs**2) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    local = ndimage.correlate1d(img.astype(np.float64), kernel, axis=0, mode="nearest")
    local = ndimage.correlate1d(local, kernel, axis=1, mode="nearest")
    return img < local - c


def binarize(img: np.ndarray, params: ThresholdParams, invert: bool = False) -> tuple[int | None, np.ndarray]:
    """Dispatch on ``params.method``; returns (threshold used or None, mask)."""
    if params.method == "global":
        t, mask = int(params.t), threshold_global(img, int(params.t))
    elif params.method == "otsu":
        t, mask = threshold_otsu(img)
    else:
        mode = "mean" if params.method == "adaptive_mean" else "gaussian"
        t, mask = None, threshold_adaptive(img, int(params.window), params.c, mode)
    if invert:
        mask = ~mask
    return t, mask
