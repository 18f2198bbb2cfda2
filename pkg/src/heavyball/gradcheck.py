"""Central finite-difference checks of the analytic gradients."""

from dataclasses import dataclass

import numpy as np

from . import cubic, experiments, phase_retrieval
from .numkit import Rng

PROBLEMS = ("phase", "cubic", "saddle")
COARSE_H = 1e-4


def central_diff(f, w, h=1e-6):
    """Gradient of scalar `f` at `w` by central differences with step `h`."""
    if not h > 0:
        raise ValueError("h must be positive")
    w = np.asarray(w, dtype=float)
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (f(w + e) - f(w - e)) / (2.0 * h)
    return g


def relative_error(g, g_ref):
    scale = max(np.linalg.norm(g), np.linalg.norm(g_ref), np.finfo(float).tiny)
    return float(np.linalg.norm(g - g_ref) / scale)


@dataclass
class GradCheckReport:
    problem: str
    count: int
    h: float
    max_rel_error: float

    @property
    def informational(self):
        """A coarse step measures truncation error, so no pass/fail is implied."""
        return self.h > COARSE_H

    def passed(self, tol=1e-5):
        return self.informational or self.max_rel_error <= tol


def _setup(problem, rng):
    # Returns (objective, gradient, point sampler) on one random instance.
    if problem == "phase":
        inst = phase_retrieval.sample_instance(rng.spawn("instance"), 10, 200)
        return (lambda w: phase_retrieval.objective(inst, w),
                lambda w: phase_retrieval.gradient(inst, w),
                lambda r: r.standard_normal(10) / np.sqrt(10))
    if problem == "cubic":
        inst = cubic.generate_instance(rng.spawn("instance"))
        return (lambda w: cubic.cubic_objective(inst, w),
                lambda w: cubic.cubic_gradient(inst, w),
                lambda r: r.standard_normal(inst.d))
    if problem == "saddle":
        inst = experiments.sample_saddle(rng.spawn("instance"), 10)

        def point(r):
            # Away from the coordinate axes.
            while True:
                w = 0.5 * r.standard_normal(2)
                if np.min(np.abs(w)) > 1e-3:
                    return w

        return (lambda w: experiments.saddle_objective(inst, w),
                lambda w: experiments.saddle_gradient(inst, w),
                point)
    raise ValueError(f"unknown problem {problem!r}; choose from {PROBLEMS}")


def grad_check(problem, seed=0, count=100, h=1e-6):
    """Largest relative error between analytic and finite-difference gradients
    over `count` random points."""
    rng = Rng(seed).spawn("gradcheck").spawn(problem)
    f, grad, point = _setup(problem, rng)
    prng = rng.spawn("points")
    worst = 0.0
    for _ in range(count):
        w = point(prng)
        worst = max(worst, relative_error(grad(w), central_diff(f, w, h)))
    return GradCheckReport(problem=problem, count=count, h=h, max_rel_error=worst)
