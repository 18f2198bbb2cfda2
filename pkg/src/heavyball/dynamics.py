"""Scalar momentum recursions and checks of their effective growth/decay rates.

Three recursions are simulated with equality:

* growth:           a[t+1] = (1 + theta) a[t] + beta (a[t] - a[t-1])
* decay:            b[t+1] = (1 - theta) b[t] + beta (b[t] - b[t-1])
* growth_plus_one:  a[t+1] = (1 + theta) a[t] + 1 + beta (a[t] - a[t-1])

The verifiers check the per-step rate each one implies. Momentum enlarges the
plain factor ``1 +- theta`` to ``1 +- (1 + beta/(1 +- theta)) theta``.
"""

import math
from dataclasses import dataclass

import numpy as np

OVERFLOW = 1e300
SLACK = 1e-12

MODES = ("growth", "decay", "growth_plus_one")


@dataclass(frozen=True)
class RecursionSpec:
    theta: float
    beta: float
    mode: str = "growth"
    a0: float = 1.0
    a_minus1: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.mode == "growth":
            pos = self.a0 >= self.a_minus1 > 0
            neg = self.a0 <= self.a_minus1 < 0
            if not (pos or neg):
                raise ValueError("growth needs a0 >= a_-1 > 0 or a0 <= a_-1 < 0")
        elif self.mode == "decay":
            _check_decay(self.theta, self.beta)
            pos = 0 <= self.a0 <= self.a_minus1
            neg = 0 >= self.a0 >= self.a_minus1
            if not (pos or neg):
                raise ValueError("decay needs 0 <= a0 <= a_-1 or 0 >= a0 >= a_-1")


def _check_decay(theta, beta):
    if not theta < 1 or (1.0 + beta / (1.0 - theta)) * theta >= 1.0:
        raise ValueError(
            f"decay needs theta < 1 and (1 + beta/(1 - theta)) theta < 1; "
            f"got theta={theta:g}, beta={beta:g}"
        )


def simulate(spec, T):
    """Return ``[a_-1, a_0, a_1, ..., a_T]`` (length T + 2)."""
    a = np.empty(T + 2)
    a[0], a[1] = spec.a_minus1, spec.a0
    lin = 1.0 - spec.theta if spec.mode == "decay" else 1.0 + spec.theta
    const = 1.0 if spec.mode == "growth_plus_one" else 0.0
    for k in range(1, T + 1):
        a[k + 1] = lin * a[k] + const + spec.beta * (a[k] - a[k - 1])
        if abs(a[k + 1]) > OVERFLOW:
            raise OverflowError(f"sequence exceeded {OVERFLOW:g} at t={k}")
    return a


@dataclass
class ViolationReport:
    """Outcome of checking a per-step inequality along a sequence.

    Indices are recursion indices t, where the checked inequality relates
    a[t+1] to a[t]. `max_excess` is the largest amount by which an inequality
    failed, relative to the scale of its two sides (<= 0 when all hold).
    """

    first_violation: int | None
    n_checked: int
    max_excess: float

    @property
    def ok(self):
        return self.first_violation is None


def _compare(lhs, rhs, start, direction):
    # direction=+1 checks lhs >= rhs, -1 checks lhs <= rhs.
    excess = direction * (rhs - lhs)
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0, excess / scale, 0.0)
    bad = np.flatnonzero(rel > SLACK)
    first = int(bad[0]) + start if bad.size else None
    return ViolationReport(first_violation=first, n_checked=int(lhs.size),
                           max_excess=float(rel.max()) if rel.size else 0.0)


def verify_growth(seq, theta, beta):
    """Check ``a[t+1] >= (1 + (1 + beta/(1+theta)) theta) a[t]`` for t >= 1.

    `seq` is ``[a_-1, a_0, ..., a_T]``. A non-positive sequence (``a_0 < 0``)
    is checked with the inequality reversed.
    """
    seq = np.asarray(seq, dtype=float)
    rate = 1.0 + (1.0 + beta / (1.0 + theta)) * theta
    # a_t sits at seq[t + 1]; t runs from 1 while a_{t+1} exists.
    cur, nxt = seq[2:-1], seq[3:]
    direction = -1 if seq[1] < 0 else 1
    return _compare(nxt, rate * cur, 1, direction)


def verify_decay(seq, theta, beta):
    """Check ``b[t+1] <= (1 - (1 + beta/(1-theta)) theta) b[t]`` for t >= 1.

    The rate only follows while the sequence keeps its sign, so checking stops
    at the first b[t] of the wrong sign. A non-positive sequence is checked
    with the inequality reversed.
    """
    _check_decay(theta, beta)
    seq = np.asarray(seq, dtype=float)
    rate = 1.0 - (1.0 + beta / (1.0 - theta)) * theta
    # With b[0] == 0 the branch is set by b[-1].
    sign = -1.0 if (seq[1] < 0 or (seq[1] == 0 and seq[0] < 0)) else 1.0
    wrong = np.flatnonzero(sign * seq[1:] < 0)
    end = len(seq) if not wrong.size else int(wrong[0]) + 1
    cur, nxt = seq[2:end - 1], seq[3:end]
    direction = 1 if sign < 0 else -1
    return _compare(nxt, rate * cur, 1, direction)


def verify_growth_plus_one(seq, eta_delta, beta):
    """Check ``a[t+1] >= (1 + eta_delta + eta_delta beta/(1 + eta_delta)) a[t] + 1`` for t >= 0."""
    seq = np.asarray(seq, dtype=float)
    rate = 1.0 + eta_delta + eta_delta * beta / (1.0 + eta_delta)
    cur, nxt = seq[1:-1], seq[2:]
    return _compare(nxt, rate * cur + 1.0, 0, 1)


def growth_plus_one_lower_bound(t, eta_delta, beta):
    """Closed-form lower bound ``((1 + r)**t - 1) / r`` with
    ``r = eta_delta (1 + beta/(1 + eta_delta))``."""
    r = eta_delta * (1.0 + beta / (1.0 + eta_delta))
    t = np.asarray(t, dtype=float)
    return np.expm1(t * math.log1p(r)) / r


def verify_closed_form(seq, eta_delta, beta):
    """Check a_t >= the closed-form lower bound at every t >= 0."""
    seq = np.asarray(seq, dtype=float)
    a = seq[1:]
    bound = growth_plus_one_lower_bound(np.arange(a.size), eta_delta, beta)
    return _compare(a, bound, 0, 1)


@dataclass
class SweepResult:
    mode: str
    trials: int
    violations: int
    worst_excess: float
    first_failure: tuple | None = None

    @property
    def ok(self):
        return self.violations == 0


def sweep(mode, rng, trials=10_000, max_T=200):
    """Random property sweep of one recursion.

    theta (or eta*delta) is drawn log-uniform on (1e-4, 1], beta uniform on
    [0, 1] and T uniform on [1, max_T]. Decay trials redraw (theta, beta)
    until the decay precondition holds. For growth_plus_one the closed-form
    lower bound is checked as well.
    """
    violations = 0
    worst = -math.inf
    first = None
    for k in range(trials):
        theta = 10.0 ** rng.uniform(-4.0, 0.0)
        beta = rng.uniform(0.0, 1.0)
        T = 1 + int(rng.uniform(0.0, max_T))
        mirror = rng.uniform() < 0.5
        if mode == "growth":
            a_m1 = rng.uniform(0.0, 1.0)
            a0 = a_m1 * (1.0 + rng.uniform(0.0, 1.0))
            if mirror:
                a_m1, a0 = -a_m1, -a0
            seq = simulate(RecursionSpec(theta, beta, mode, a0, a_m1), T)
            reports = [verify_growth(seq, theta, beta)]
        elif mode == "decay":
            while (1.0 + beta / (1.0 - theta)) * theta >= 1.0 or theta >= 1.0:
                theta = 10.0 ** rng.uniform(-4.0, 0.0)
                beta = rng.uniform(0.0, 1.0)
            a_m1 = rng.uniform(0.0, 1.0)
            a0 = a_m1 * rng.uniform(0.0, 1.0)
            if mirror:
                a_m1, a0 = -a_m1, -a0
            seq = simulate(RecursionSpec(theta, beta, mode, a0, a_m1), T)
            reports = [verify_decay(seq, theta, beta)]
        elif mode == "growth_plus_one":
            seq = simulate(RecursionSpec(theta, beta, mode, 0.0, 0.0), T)
            reports = [verify_growth_plus_one(seq, theta, beta),
                       verify_closed_form(seq, theta, beta)]
        else:
            raise ValueError(f"unknown mode {mode!r}")
        for rep in reports:
            worst = max(worst, rep.max_excess)
            if not rep.ok:
                violations += 1
                if first is None:
                    first = (k, theta, beta, T, rep.first_violation)
    return SweepResult(mode=mode, trials=trials, violations=violations,
                       worst_excess=worst, first_failure=first)
