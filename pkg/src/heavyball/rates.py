"""Least-squares linear-rate fits on log-scale error sequences."""

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class RateFit:
    """Fitted per-step contraction ``values[t] ~ C (1 - nu)**t``.

    `flagged` is set when the fit is not trustworthy as a plain contraction:
    the rate falls outside (0, 1), or the window was not monotone and the fit
    ran over the local maxima (the envelope) instead.
    """

    nu: float
    slope: float
    start: int
    stop: int
    n_points: int
    envelope: bool = False
    flagged: bool = False


def _local_maxima(v):
    idx = [0]
    for i in range(1, len(v) - 1):
        if v[i] >= v[i - 1] and v[i] >= v[i + 1]:
            idx.append(i)
    idx.append(len(v) - 1)
    return np.array(sorted(set(idx)))


def fit_log_linear(values, start=0, stop=None, floor=0.0, min_points=3, envelope="auto"):
    """Ordinary least squares of ``log(values)`` against the index.

    The window runs from `start` up to `stop` (exclusive), cut short just
    before the first value ``<= floor``. With ``envelope="auto"`` a window
    containing any increase is fitted over its local maxima only. Returns None
    when fewer than `min_points` points are available.
    """
    v = np.asarray(values, dtype=float)
    stop = len(v) if stop is None else min(stop, len(v))
    if start >= stop:
        return None
    below = np.flatnonzero(v[start:stop] <= floor)
    if below.size:
        stop = start + int(below[0])
    window = v[start:stop]
    if window.size < min_points:
        return None

    t = np.arange(start, stop, dtype=float)
    use_env = False
    if envelope == "auto":
        use_env = bool(np.any(np.diff(window) > 0))
    elif envelope:
        use_env = True
    if use_env:
        keep = _local_maxima(window)
        if keep.size < 3:
            keep = np.arange(window.size)
        t, window = t[keep], window[keep]

    slope = float(np.polyfit(t, np.log(window), 1)[0])
    nu = 1.0 - math.exp(slope)
    flagged = use_env or not (1e-8 < nu < 1.0)
    return RateFit(nu=nu, slope=slope, start=start, stop=stop, n_points=int(window.size),
                   envelope=use_env, flagged=flagged)
