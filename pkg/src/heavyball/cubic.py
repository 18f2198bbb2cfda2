"""Cubic-regularized quadratic subproblem.

    f(w) = 1/2 w^T A w + b^T w + rho/3 |w|^3

`A` is symmetric and possibly indefinite. Writing ``gamma = -lambda_min(A)``,
a minimizer satisfies ``rho |w*| >= gamma`` and ``(A + rho |w*| I) w* + b = 0``,
and is unique when the first inequality is strict.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .numkit import as_symmetric, gauss_vec, jacobi_eigh, sym_frac_power
from .rates import RateFit, fit_log_linear

DEFAULT_R = 1e-3
B1_FLOOR = 1e-14


@dataclass(frozen=True)
class CubicInstance:
    A: np.ndarray
    b: np.ndarray
    rho: float
    w_star: np.ndarray | None = None
    eigvals: np.ndarray = field(init=False, repr=False)
    eigvecs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        A = as_symmetric(self.A)
        vals, vecs = jacobi_eigh(A)
        # Fix the sign of each eigenvector: largest-magnitude entry positive.
        pivots = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
        vecs = vecs * np.where(pivots < 0, -1.0, 1.0)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        object.__setattr__(self, "eigvals", vals)
        object.__setattr__(self, "eigvecs", vecs)

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def gamma(self):
        return -float(self.eigvals[0])

    @property
    def gamma_plus(self):
        return max(self.gamma, 0.0)

    @property
    def norm_A(self):
        return float(max(abs(self.eigvals[0]), abs(self.eigvals[-1])))

    @property
    def v1(self):
        return self.eigvecs[:, 0]

    @property
    def b1(self):
        return float(self.b @ self.v1)

    @property
    def norm_w_star(self):
        return float(np.linalg.norm(self.w_star))

    @property
    def A_star(self):
        return self.A + self.rho * self.norm_w_star * np.eye(self.d)

    @property
    def f_star(self):
        return cubic_objective(self, self.w_star)


def generate_instance(rng, d=4, rho=1.0, norm_wstar=1.0, normA=1.0, gamma=0.2, gap=5e-3):
    """Random instance with a planted unique minimizer.

    ``A = diag(-gamma, -gamma + gap, a_3, ..., a_d)`` with the trailing entries
    uniform on ``[-gamma + gap, normA]``. A direction ``(A + rho*norm_wstar*I)^(-xi) theta``
    with Gaussian ``theta`` and ``log2(xi)`` uniform on [-1, 1] is rescaled to
    length `norm_wstar`, and ``b`` is chosen so that this point is stationary.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if not (gamma > 0 and gap > 0):
        raise ValueError("gamma and gap must be positive")
    if rho * norm_wstar <= gamma:
        raise ValueError("rho * norm_wstar must exceed gamma for a unique minimizer")
    diag = np.empty(d)
    diag[0] = -gamma
    diag[1] = -gamma + gap
    diag[2:] = rng.uniform(-gamma + gap, normA, size=d - 2)
    A = np.diag(diag)

    shift = A + rho * norm_wstar * np.eye(d)
    xi = 2.0 ** rng.uniform(-1.0, 1.0)
    theta = gauss_vec(rng, d)
    w_tilde = sym_frac_power(shift, -xi) @ theta
    w_star = norm_wstar / np.linalg.norm(w_tilde) * w_tilde
    b = -(A + rho * np.linalg.norm(w_star) * np.eye(d)) @ w_star
    return CubicInstance(A=A, b=b, rho=rho, w_star=w_star)


def cubic_objective(inst, w):
    w = np.asarray(w, dtype=float)
    nw = np.linalg.norm(w)
    return float(0.5 * w @ inst.A @ w + inst.b @ w + inst.rho / 3.0 * nw**3)


def cubic_gradient(inst, w):
    w = np.asarray(w, dtype=float)
    return inst.A @ w + inst.b + inst.rho * np.linalg.norm(w) * w


def cubic_gradient_shifted(inst, w):
    """The same gradient written around the minimizer:
    ``A_*(w - w*) - rho (|w*| - |w|) w``."""
    w = np.asarray(w, dtype=float)
    return inst.A_star @ (w - inst.w_star) - inst.rho * (inst.norm_w_star - np.linalg.norm(w)) * w


@dataclass(frozen=True)
class OptimalityCertificate:
    norm_margin: float
    gradient_residual: float
    norm_ok: bool
    gradient_ok: bool
    unique: bool

    @property
    def ok(self):
        return self.norm_ok and self.gradient_ok


def check_optimality(inst, w, tol=1e-10):
    """Check the minimizer characterization at `w`.

    ``norm_margin`` is ``rho |w| - gamma`` and ``gradient_residual`` is
    ``|(A + rho |w| I) w + b|``.
    """
    w = np.asarray(w, dtype=float)
    nw = float(np.linalg.norm(w))
    margin = inst.rho * nw - inst.gamma
    resid = float(np.linalg.norm(inst.A @ w + inst.rho * nw * w + inst.b))
    return OptimalityCertificate(norm_margin=margin, gradient_residual=resid,
                                 norm_ok=margin >= 0, gradient_ok=resid <= tol,
                                 unique=margin > 0)


def in_benign_region(inst, w):
    """``rho |w| > gamma - (rho |w*| - gamma)``."""
    if inst.w_star is None:
        raise ValueError("instance has no known minimizer")
    lhs = inst.rho * np.linalg.norm(w)
    return bool(lhs > inst.gamma - (inst.rho * inst.norm_w_star - inst.gamma))


def one_point_convexity_margin(inst, w):
    """``<w - w*, grad f(w)> / |w - w*|**2``, or None at ``w == w*``."""
    diff = np.asarray(w, dtype=float) - inst.w_star
    sq = float(diff @ diff)
    if sq == 0.0:
        return None
    return float(diff @ cubic_gradient(inst, w)) / sq


def initial_point(inst, r=DEFAULT_R):
    """``-r b / |b|``; its projection on ``v1`` has the opposite sign to ``b1``."""
    nb = np.linalg.norm(inst.b)
    if nb == 0.0:
        raise ValueError("b = 0 gives no initial direction")
    return -r * inst.b / nb


def solve_minimizer(inst, max_iter=200):
    """Global minimizer from the characterization, by bisection on ``lam = rho |w|``.

    In the eigenbasis ``w(lam) = -(A + lam I)^(-1) b`` and the residual
    ``|w(lam)| - lam / rho`` is strictly decreasing for ``lam > max(gamma, 0)``.
    Raises ValueError in the hard case, where ``b`` has no component along
    the bottom eigenvector and no root lies above ``gamma``.
    """
    vals, V = inst.eigvals, inst.eigvecs
    b_hat = V.T @ inst.b

    def resid(lam):
        return float(np.linalg.norm(b_hat / (vals + lam))) - lam / inst.rho

    lo = max(inst.gamma, 0.0)
    if inst.gamma >= 0 and abs(b_hat[0]) < B1_FLOOR:
        raise ValueError("hard case: b is orthogonal to the bottom eigenvector")
    if inst.gamma < 0 and resid(0.0) <= 0:
        hi = 0.0
    else:
        hi = lo + 1.0
        while resid(hi) > 0:
            hi = lo + 2.0 * (hi - lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if resid(mid) > 0:
            lo = mid
        else:
            hi = mid
    lam = hi
    return -(V @ (b_hat / (vals + lam)))


def perturb_b(inst, rng, scale=1e-6):
    """Copy of `inst` with ``b`` nudged by a small Gaussian vector.

    Useful when ``b`` is (nearly) orthogonal to the bottom eigenvector and the
    entry-time bound is undefined. The minimizer of the new instance is
    recomputed with :func:`solve_minimizer`.
    """
    moved = CubicInstance(A=inst.A, b=inst.b + gauss_vec(rng, inst.d, scale), rho=inst.rho)
    return CubicInstance(A=moved.A, b=moved.b, rho=moved.rho, w_star=solve_minimizer(moved))


class CubicProblem:
    """Adapter for :func:`heavyball.momentum.run`."""

    def __init__(self, inst):
        self.inst = inst
        self.f_star = inst.f_star if inst.w_star is not None else 0.0

    def objective(self, w):
        return cubic_objective(self.inst, w)

    def gradient(self, w):
        return cubic_gradient(self.inst, w)

    def record(self, w):
        nw = float(np.linalg.norm(w))
        return {
            "f_gap": cubic_objective(self.inst, w) - self.f_star,
            "norm_w": nw,
            "rho_norm_w": self.inst.rho * nw,
        }


@dataclass
class DeltaReport:
    delta: float
    T_delta_measured: int | None
    T_delta_bound: float | None
    b1: float
    preconditions_met: bool


def entry_time_bound(inst, eta, beta, delta):
    """Upper bound on the number of steps before ``rho |w_{t+1}| >= gamma - delta``.

    None when ``|b1|`` is too small for the bound to be defined.
    """
    if abs(inst.b1) < B1_FLOOR:
        return None
    ed = eta * delta
    boost = 1.0 + beta / (1.0 + ed)
    return 2.0 / (ed * boost) * math.log1p(inst.gamma_plus**2 * boost / (4.0 * inst.rho * abs(inst.b1)))


def measure_T_delta(trace, inst, delta, eta=None, beta=None):
    """First t with ``rho |w_{t+1}| >= gamma - delta``, next to its bound.

    `eta`, `beta` and the initial point default to the values stored in the
    trace metadata. The preconditions are ``w0 . v1 * b1 <= 0`` and
    ``eta <= 1 / (|A|_2 + rho |w*|)``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    eta = trace.meta["eta"] if eta is None else eta
    beta = trace.meta["beta"] if beta is None else beta
    rho_norm = trace.column("rho_norm_w")

    if inst.gamma <= 0:
        measured = 0
    else:
        hits = np.flatnonzero(rho_norm[1:] >= inst.gamma - delta)
        measured = int(hits[0]) if hits.size else None

    w0 = trace.meta.get("w0")
    pre = True
    if w0 is not None:
        pre = float(w0 @ inst.v1) * inst.b1 <= 0
    if inst.w_star is not None:
        pre = pre and eta <= 1.0 / (inst.norm_A + inst.rho * inst.norm_w_star)
    # The bound assumes a constant beta.
    pre = pre and "switch_t" not in trace.meta

    return DeltaReport(delta=delta, T_delta_measured=measured,
                       T_delta_bound=entry_time_bound(inst, eta, beta, delta),
                       b1=inst.b1, preconditions_met=bool(pre))


def empirical_rate_cubic(trace, inst=None, floor=1e-12) -> RateFit | None:
    """Linear rate of ``f(w_t) - f(w*)`` over the tail half of its useful range.

    The useful range ends just before the gap first drops below
    ``floor * max(1, |f*|)``. A tail that is not monotone is fitted over its
    local maxima and the result is flagged.
    """
    gap = trace.column("f_gap")
    scale = 1.0
    if inst is not None and inst.w_star is not None:
        scale = max(1.0, abs(inst.f_star))
    below = np.flatnonzero(gap <= floor * scale)
    end = int(below[0]) if below.size else len(gap)
    return fit_log_linear(gap, start=end // 2, stop=end, floor=floor * scale, min_points=3)


def norm_nondecreasing(trace, inst, within=1e-3, tol=1e-9):
    """True when ``|w_t|`` never drops by more than `tol` before it is within
    `within` of ``|w*|``."""
    nw = trace.column("norm_w")
    hit = np.flatnonzero(np.abs(nw - inst.norm_w_star) <= within)
    end = int(hit[0]) + 1 if hit.size else len(nw)
    return bool(np.all(np.diff(nw[:end]) >= -tol))
