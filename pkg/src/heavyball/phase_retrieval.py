"""Real phase retrieval with the quartic least-squares loss.

    f(w) = 1/(4n) * sum_i ((x_i . w)**2 - y_i)**2,   y_i = (x_i . w_star)**2

The signal is only identifiable up to sign, so distances are taken to the
nearer of ``+w_star`` and ``-w_star``. Along with the empirical objective the
module provides the population gradient, the split of an iterate into its
signal and perpendicular parts, the per-step perturbations of the empirical
dynamics around the population recursion, and measured entry times into the
neighbourhood of the signal.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .numkit import gauss_vec
from .rates import RateFit, fit_log_linear

log = logging.getLogger(__name__)

DEFAULT_ZETA = 0.1


@dataclass(frozen=True)
class PhaseInstance:
    X: np.ndarray
    y: np.ndarray
    w_star: np.ndarray

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


def sample_instance(rng, d, n):
    """Gaussian design, planted signal ``e_1`` and exact quadratic labels."""
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    X = rng.standard_normal((n, d))
    w_star = np.zeros(d)
    w_star[0] = 1.0
    r = X @ w_star
    y = r * r
    return PhaseInstance(X=X, y=y, w_star=w_star)


def objective(inst, w):
    r = inst.X @ w
    return float(np.sum((r * r - inst.y) ** 2) / (4 * inst.n))


def gradient(inst, w):
    # Written as a product of r so that gradient(-w) == -gradient(w) exactly.
    r = inst.X @ w
    return (((r * r - inst.y) * r) @ inst.X) / inst.n


def population_gradient(w, w_star):
    """Expected gradient over Gaussian designs, for a unit-norm `w_star`."""
    w = np.asarray(w, dtype=float)
    return (3.0 * (w @ w) - 1.0) * w - 2.0 * (w_star @ w) * w_star


@dataclass(frozen=True)
class Decomposition:
    w_par: float
    w_perp: np.ndarray

    @property
    def norm_perp(self):
        return float(np.linalg.norm(self.w_perp))


def _perp_coords(W, w_star):
    # Householder reflection sending w_star to e_1; the perpendicular part is
    # everything but the first reflected coordinate.
    e1 = np.zeros_like(w_star)
    e1[0] = 1.0
    v = w_star - e1
    vv = v @ v
    if vv == 0.0:
        return W[..., 1:]
    R = W - np.multiply.outer(W @ v, v) * (2.0 / vv)
    return R[..., 1:]


def decompose(w, w_star):
    w = np.asarray(w, dtype=float)
    return Decomposition(w_par=float(w @ w_star), w_perp=_perp_coords(w, w_star))


def dist(w, w_star):
    return float(min(np.linalg.norm(w - w_star), np.linalg.norm(w + w_star)))


class PhaseProblem:
    """Adapter for :func:`heavyball.momentum.run`.

    With ``population=True`` the step uses the population gradient instead of
    the sample gradient; the recorded objective is always the sample one.
    """

    def __init__(self, inst, population=False):
        self.inst = inst
        self.population = population

    def objective(self, w):
        return objective(self.inst, w)

    def gradient(self, w):
        if self.population:
            return population_gradient(w, self.inst.w_star)
        return gradient(self.inst, w)

    def record(self, w):
        dec = decompose(w, self.inst.w_star)
        return {
            "f": objective(self.inst, w),
            "norm_w": float(np.linalg.norm(w)),
            "w_par": dec.w_par,
            "norm_w_perp": dec.norm_perp,
            "dist": dist(w, self.inst.w_star),
        }


def sample_initial_point(rng, d, variance=None, max_tries=100):
    """Draw ``w0 ~ N(0, variance * I)``, by default ``variance = 1/(10000 d)``.

    A draw whose signal coordinate is below ``1e-8 / sqrt(d log d)`` in
    magnitude is rejected and redrawn.
    """
    if variance is None:
        variance = 1.0 / (10000 * d)
    floor = 1e-8 / math.sqrt(d * math.log(d)) if d > 1 else 1e-8
    for attempt in range(max_tries):
        w0 = gauss_vec(rng, d, math.sqrt(variance))
        if abs(w0[0]) >= floor:
            return w0
        log.info("initial point rejected (|w0_par| = %.3e); redrawing", abs(w0[0]))
    raise RuntimeError("could not draw an initial point with a usable signal component")


@dataclass
class PerturbationTrace:
    """Perturbations of the sample dynamics around the population recursion.

    ``xi[t]`` belongs to the signal coordinate and ``rho[t, j]`` to the j-th
    perpendicular coordinate for the step t -> t+1. Entries whose coordinate
    was too small to divide by are NaN and marked in `skipped`.
    """

    xi: np.ndarray
    rho: np.ndarray
    skipped: np.ndarray
    c_n_hat: float
    horizon: int


def extract_perturbations(iterates, eta, beta, w_star, T_zeta=None, switch_t=None,
                          eps=1e-12, rel_guard=1e-2):
    """Solve the perturbed recursion for the per-step perturbation terms.

    Parameters
    ----------
    iterates : array, shape (T+1, d)
        Iterates w_0, ..., w_T of a run started with w_{-1} = w_0.
    eta : float
    beta : float or array of shape (T,)
        Momentum used at each step.
    w_star : array, shape (d,)
    T_zeta : int, optional
        `c_n_hat` is the largest magnitude over steps t <= T_zeta (all steps
        when omitted).
    switch_t : int, optional
        Step at which a beta schedule reset the momentum. The step out of that
        iterate used no momentum and is handled accordingly.
    eps, rel_guard : float
        A coordinate is not divided by when its magnitude is below
        ``max(eps, rel_guard * |w_t|)``. Near a zero crossing the ratio
        measures the crossing, not the sampling error.
    """
    W = np.asarray(iterates, dtype=float)
    steps = W.shape[0] - 1
    if steps < 1:
        raise ValueError("need at least two iterates")
    beta = np.broadcast_to(np.asarray(beta, dtype=float), (steps,))

    par = W @ w_star
    perp = _perp_coords(W, w_star)
    sq = np.sum(W * W, axis=1)

    prev_par = np.concatenate([par[:1], par[:-2]])
    prev_perp = np.concatenate([perp[:1], perp[:-2]])
    if switch_t is not None and 0 < switch_t < steps:
        prev_par[switch_t] = par[switch_t]
        prev_perp[switch_t] = perp[switch_t]

    cur_par, nxt_par = par[:-1], par[1:]
    cur_perp, nxt_perp = perp[:-1], perp[1:]
    s = sq[:-1]

    par_resid = nxt_par - (1 + 3 * eta * (1 - s)) * cur_par - beta * (cur_par - prev_par)
    perp_resid = (nxt_perp - (1 + eta * (1 - 3 * s))[:, None] * cur_perp
                  - beta[:, None] * (cur_perp - prev_perp))

    with np.errstate(divide="ignore", invalid="ignore"):
        xi = par_resid / (eta * cur_par)
        rho = perp_resid / (eta * cur_perp)
    guard = np.maximum(eps, rel_guard * np.sqrt(s))
    skip_par = np.abs(cur_par) < guard
    skip_perp = np.abs(cur_perp) < guard[:, None]
    xi[skip_par] = np.nan
    rho[skip_perp] = np.nan
    skipped = np.column_stack([skip_par, skip_perp])

    horizon = steps - 1 if T_zeta is None else min(int(T_zeta), steps - 1)
    window = np.column_stack([xi, rho])[: horizon + 1]
    finite = np.abs(window[np.isfinite(window)])
    c_n_hat = float(finite.max()) if finite.size else math.nan
    return PerturbationTrace(xi=xi, rho=rho, skipped=skipped, c_n_hat=c_n_hat, horizon=horizon)


@dataclass
class StageReport:
    """Measured stage boundaries of one run; None marks a boundary never reached."""

    T0: int | None
    Tb: int | None
    Ta: int | None
    T_zeta: int | None
    zeta: float
    c_n_hat: float
    c_m_hat: float
    theory_T_zeta: float | None


def _first(mask, start=0):
    idx = np.flatnonzero(mask[start:])
    return int(idx[0]) + start if idx.size else None


def stage_report(trace, zeta=DEFAULT_ZETA, c_n_hat=0.0, d=None):
    """Crossing times of a phase-retrieval trace.

    T0 is the first t with ``|w_par| > sqrt((2 + c_n_hat)/3)``; Tb the first
    t >= T0 with ``|w_perp| <= zeta/2``; Ta the first t >= Tb with
    ``||w_par| - 1| <= zeta/2``; T_zeta the first t meeting both of the last
    two conditions at once.
    """
    t = trace.column("t").astype(int)
    par = np.abs(trace.column("w_par"))
    perp = trace.column("norm_w_perp")
    near_one = np.abs(par - 1.0) <= zeta / 2
    small_perp = perp <= zeta / 2

    i0 = _first(par > math.sqrt((2.0 + c_n_hat) / 3.0))
    ib = _first(small_perp, i0) if i0 is not None else None
    ia = _first(near_one, ib) if ib is not None else None
    iz = _first(near_one & small_perp)

    norm_m = trace.column("norm_m")
    c_m_hat = float(norm_m[: (iz + 1) if iz is not None else None].max())

    theory = None
    eta, beta = trace.meta.get("eta"), trace.meta.get("beta")
    if d is None and trace.meta.get("w0") is not None:
        d = len(trace.meta["w0"])
    if eta is not None and beta is not None and d is not None:
        theory = entry_time_reference(eta, beta, d)

    def at(i):
        return int(t[i]) if i is not None else None

    return StageReport(T0=at(i0), Tb=at(ib), Ta=at(ia), T_zeta=at(iz), zeta=zeta,
                       c_n_hat=c_n_hat, c_m_hat=c_m_hat, theory_T_zeta=theory)


def entry_time_reference(eta, beta, d):
    """``log(d) / (eta (1 + c beta))`` with ``c = 1/(1 + eta/2)``.

    The entry-time bound this mirrors holds only up to an unknown constant,
    so the value is a reference curve for comparing momentum settings.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    c_eta = 1.0 / (1.0 + eta / 2.0)
    return math.log(d) / (eta * (1.0 + c_eta * beta))


def empirical_linear_rate(trace, T_zeta, floor=1e-12, min_window=20) -> RateFit | None:
    """Fit ``dist_t ~ C (1 - nu)**t`` for t >= T_zeta.

    `trace` is a :class:`~heavyball.momentum.Trace` with a ``dist`` column or
    a plain sequence of distances indexed from 0. The window ends just before
    the distance first drops below `floor`. Returns None if fewer than
    `min_window` points follow T_zeta.
    """
    values = trace.column("dist") if hasattr(trace, "column") else np.asarray(trace, dtype=float)
    if T_zeta is None:
        return None
    return fit_log_linear(values, start=int(T_zeta), floor=floor, min_points=min_window + 1)


def sign_persistent(trace, zeta=DEFAULT_ZETA):
    """True when ``sign(w_par)`` never changes before dist first drops below `zeta`."""
    par = trace.column("w_par")
    d = trace.column("dist")
    hit = np.flatnonzero(d < zeta)
    end = int(hit[0]) if hit.size else len(par)
    signs = np.sign(par[:end])
    signs = signs[signs != 0]
    return bool(signs.size == 0 or np.all(signs == signs[0]))


def par_nondecreasing(trace, zeta=DEFAULT_ZETA, tol=0.0):
    """True when ``|w_par|`` never decreases by more than `tol` before it is within `zeta` of 1."""
    par = np.abs(trace.column("w_par"))
    hit = np.flatnonzero(np.abs(par - 1.0) <= zeta)
    end = int(hit[0]) + 1 if hit.size else len(par)
    return bool(np.all(np.diff(par[:end]) >= -tol))


def perp_eventually_decreasing(trace, until=None, tol=0.0):
    """True when ``|w_perp|`` never increases between its peak and index `until`."""
    perp = trace.column("norm_w_perp")
    end = len(perp) if until is None else min(int(until) + 1, len(perp))
    seg = perp[:end]
    if seg.size < 2:
        return True
    peak = int(np.argmax(seg))
    return bool(np.all(np.diff(seg[peak:]) <= tol))
