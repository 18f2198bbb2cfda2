"""Two small demonstrations of the same momentum dynamics.

Top eigenvector: Heavy Ball on ``-1/2 w^T A w`` gives the unnormalized
recursion ``w[t+1] = (I + eta A) w[t] + beta (w[t] - w[t-1])``.

Saddle escape: Heavy Ball from the origin on the 2-d objective

    f(w) = 1/2 w^T H w + xbar . w + sum_j w_j**10,   H = diag(1, -0.1)

whose origin is a strict saddle with escape direction ``e_2``.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import momentum
from .momentum import Trace, hb_step_form1, init_state
from .numkit import as_symmetric, jacobi_eigh

log = logging.getLogger(__name__)

SADDLE_H = np.diag([1.0, -0.1])
SADDLE_STD = np.sqrt([0.1, 0.001])
RESCALE_NORM = 1e100


@dataclass(frozen=True)
class SaddleInstance:
    xs: np.ndarray
    x_bar: np.ndarray
    H: np.ndarray = SADDLE_H


def sample_saddle(rng, n):
    """`n` draws from N(0, diag(0.1, 0.001)) and their mean."""
    if n < 1:
        raise ValueError("n must be positive")
    xs = rng.standard_normal((n, 2)) * SADDLE_STD
    return SaddleInstance(xs=xs, x_bar=xs.mean(axis=0))


def saddle_objective(inst, w):
    w = np.asarray(w, dtype=float)
    return float(0.5 * w @ inst.H @ w + inst.x_bar @ w + np.sum(w**10))


def saddle_gradient(inst, w):
    w = np.asarray(w, dtype=float)
    return inst.H @ w + inst.x_bar + 10.0 * np.abs(w) ** 8 * w


class SaddleProblem:
    def __init__(self, inst):
        self.inst = inst

    def objective(self, w):
        return saddle_objective(self.inst, w)

    def gradient(self, w):
        return saddle_gradient(self.inst, w)

    def record(self, w):
        return {"f": saddle_objective(self.inst, w), "w1": float(w[0]), "w2": float(w[1])}


def saddle_escape_run(inst, config, T, stop=None):
    """Heavy Ball from ``w0 = 0``; rows hold t, f, w1, w2, norm_m."""
    return momentum.run(SaddleProblem(inst), np.zeros(2), config, T, stop=stop)


def escape_time(trace, drop=0.01):
    """First t with ``f(w_t) <= f(w_0) - drop``, or None."""
    f = trace.column("f")
    hit = np.flatnonzero(f <= f[0] - drop)
    return int(trace.rows[hit[0]]["t"]) if hit.size else None


def top_eigvec(A):
    vals, vecs = jacobi_eigh(A)
    return vecs[:, -1], vals


def sign_dist(w, u):
    """Distance between the directions of `w` and the unit vector `u`, up to sign."""
    w_hat = w / np.linalg.norm(w)
    return float(min(np.linalg.norm(w_hat - u), np.linalg.norm(w_hat + u)))


def eig_hb_run(A, config, w0=None, T=1000, tol=None, rng=None, keep_iterates=False):
    """Heavy Ball on ``-1/2 w^T A w`` for a PSD matrix `A`.

    Records ``t, dist`` where dist is the sign-invariant distance between
    ``w_t/|w_t|`` and the top eigenvector. When ``|w_t|`` passes 1e100 the
    pair (w_t, w_{t-1}) is divided by ``|w_t|``; the recursion is linear and
    homogeneous, so directions are unaffected. The run stops early once dist
    falls to `tol`.

    Without `w0`, a Gaussian start is drawn from `rng`, and redrawn when it
    is orthogonal to the top eigenvector. A given orthogonal `w0` raises
    ValueError.
    """
    A = as_symmetric(A)
    u1, vals = top_eigvec(A)
    if vals[0] < -1e-12 * max(1.0, abs(vals[-1])):
        raise ValueError("matrix is not positive semi-definite")

    def orthogonal(w):
        return abs(w @ u1) <= 1e-12 * np.linalg.norm(w)

    if w0 is None:
        if rng is None:
            raise ValueError("need w0 or rng")
        w0 = rng.standard_normal(A.shape[0])
        while orthogonal(w0):
            log.info("start orthogonal to the top eigenvector; redrawing")
            w0 = rng.standard_normal(A.shape[0])
    w0 = np.asarray(w0, dtype=float)
    if orthogonal(w0):
        raise ValueError("w0 is orthogonal to the top eigenvector")

    trace = Trace(meta={"eta": config.eta, "beta": config.beta, "label": config.label(),
                        "w0": w0.copy(), "rescales": 0})
    state = init_state(w0, config, form=1)
    trace.append({"t": 0, "dist": sign_dist(state.w, u1)}, state.w if keep_iterates else None)
    for _ in range(T):
        if tol is not None and trace.rows[-1]["dist"] <= tol:
            break
        state = hb_step_form1(state, -(A @ state.w), config)
        norm = np.linalg.norm(state.w)
        if norm > RESCALE_NORM:
            state = replace(state, w=state.w / norm, w_prev=state.w_prev / norm)
            trace.meta["rescales"] += 1
        trace.append({"t": state.t, "dist": sign_dist(state.w, u1)},
                     state.w if keep_iterates else None)
    return trace


def iterations_to(trace, tol):
    """First t with ``dist <= tol``, or None."""
    d = trace.column("dist")
    hit = np.flatnonzero(d <= tol)
    return int(trace.rows[hit[0]]["t"]) if hit.size else None
