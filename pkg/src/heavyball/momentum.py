"""Heavy Ball iteration in its two equivalent forms.

Form 1 keeps the previous iterate::

    w[t+1] = w[t] - eta * grad f(w[t]) + beta * (w[t] - w[t-1]),   w[-1] = w[0]

Form 2 keeps an exponentially weighted gradient sum::

    m[t] = beta * m[t-1] + grad f(w[t]),   w[t+1] = w[t] - eta * m[t],   m[-1] = 0

Both produce the same iterates. A :class:`Switch` schedule starts at
``beta_hi`` and drops to ``beta_lo`` once the objective has fallen by a given
fraction relative to ``f(w[1])``, resetting the momentum at that moment.
"""

import csv
import logging
from dataclasses import dataclass, replace

import numpy as np

log = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e6


class NonFiniteGradient(FloatingPointError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"non-finite gradient at iteration {t}")


class Divergence(RuntimeError):
    """Iterate norm exceeded the guard. Carries the partial trace."""

    def __init__(self, t, norm, trace=None):
        self.t = t
        self.norm = norm
        self.trace = trace
        super().__init__(f"iterate norm {norm:.3e} exceeded {DIVERGENCE_NORM:g} at iteration {t}")


@dataclass(frozen=True)
class Switch:
    """Start with ``beta_hi``; move to ``beta_lo`` once (f1 - ft) / f1 >= threshold."""

    beta_lo: float
    threshold: float = 0.5
    beta_hi: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.beta_lo < 1.0:
            raise ValueError("beta_lo must lie in [0, 1)")
        if not 0.0 <= self.beta_hi <= 1.0:
            raise ValueError("beta_hi must lie in [0, 1]")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")

    def label(self):
        return f"{self.beta_hi:g}->{self.beta_lo:g}"


@dataclass(frozen=True)
class HBConfig:
    eta: float
    beta: float = 0.0
    schedule: Switch | None = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")

    @property
    def initial_beta(self):
        return self.schedule.beta_hi if self.schedule is not None else self.beta

    def label(self):
        return self.schedule.label() if self.schedule is not None else f"{self.beta:g}"


@dataclass(frozen=True)
class OptState:
    """Iterate plus the form-specific memory.

    Form 1 sets `w_prev`, form 2 sets `m` (the momentum m[t-1] that produced
    the current iterate). `beta` is the value in force for the next step.
    """

    w: np.ndarray
    w_prev: np.ndarray | None = None
    m: np.ndarray | None = None
    t: int = 0
    beta: float = 0.0
    switched: bool = False

    @property
    def form(self):
        return 1 if self.m is None else 2


def init_state(w0, config, form=1):
    w0 = np.array(w0, dtype=float)
    if form == 1:
        return OptState(w=w0, w_prev=w0.copy(), beta=config.initial_beta)
    if form == 2:
        return OptState(w=w0, m=np.zeros_like(w0), beta=config.initial_beta)
    raise ValueError(f"unknown form {form!r}")


def _check_grad(state, grad):
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.w.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match iterate {state.w.shape}")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient(state.t)
    return grad


def hb_step_form1(state, grad, config):
    grad = _check_grad(state, grad)
    w_next = state.w - config.eta * grad + state.beta * (state.w - state.w_prev)
    return replace(state, w=w_next, w_prev=state.w, t=state.t + 1)


def hb_step_form2(state, grad, config):
    grad = _check_grad(state, grad)
    m = state.beta * state.m + grad
    return replace(state, w=state.w - config.eta * m, m=m, t=state.t + 1)


def hb_step(state, grad, config):
    if state.form == 1:
        return hb_step_form1(state, grad, config)
    return hb_step_form2(state, grad, config)


def schedule_update(state, config, f_1, f_t):
    """Apply the beta switch if its criterion holds at the current iterate.

    `f_1` is the objective after the first step and `f_t` the objective at the
    current iterate. The switch fires at most once and zeroes the momentum.
    """
    sched = config.schedule
    if sched is None or state.switched or f_1 == 0:
        return state
    if (f_1 - f_t) / f_1 < sched.threshold:
        return state
    log.debug("beta switch %g -> %g at t=%d", state.beta, sched.beta_lo, state.t)
    if state.form == 1:
        return replace(state, beta=sched.beta_lo, switched=True, w_prev=state.w.copy())
    return replace(state, beta=sched.beta_lo, switched=True, m=np.zeros_like(state.m))


def momentum_norm(state, eta):
    """Norm of the momentum m[t-1] that produced the current iterate."""
    if state.form == 2:
        return float(np.linalg.norm(state.m))
    return float(np.linalg.norm(state.w_prev - state.w)) / eta


class Trace:
    """Per-iteration records of a run.

    Each record is a dict with the same keys in the same order, starting with
    ``t``. `meta` holds run settings (eta, beta label, initial point, ...),
    and `iterates` the raw iterates when the run was asked to keep them.
    """

    def __init__(self, meta=None):
        self.rows = []
        self.meta = dict(meta or {})
        self.iterates = None
        self.flags = []

    def append(self, row, w=None):
        if self.rows and row["t"] <= self.rows[-1]["t"]:
            raise ValueError("trace indices must increase")
        self.rows.append(row)
        if w is not None:
            if self.iterates is None:
                self.iterates = []
            self.iterates.append(np.array(w, dtype=float))

    def __len__(self):
        return len(self.rows)

    @property
    def columns(self):
        return list(self.rows[0]) if self.rows else []

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)

    def iterate_array(self):
        if self.iterates is None:
            raise ValueError("trace was recorded without iterates")
        return np.array(self.iterates)

    def write_csv(self, fh):
        """Write the records as CSV; floats use 17 significant digits."""
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow(_fmt(v) for v in row.values())


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def run(problem, w0, config, T, stop=None, form=1, keep_iterates=False):
    """Run Heavy Ball for at most `T` steps and return the :class:`Trace`.

    `problem` must provide ``gradient(w)``, ``objective(w)`` and
    ``record(w)``; the last returns the problem-specific scalars for one row.
    Each row is ``{"t": t, **problem.record(w), "norm_m": ...}``. `stop`, if
    given, is called with the trace after every record and ends the run when
    it returns true.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    state = init_state(w0, config, form)
    trace = Trace(meta={
        "eta": config.eta,
        "beta": config.initial_beta,
        "label": config.label(),
        "form": form,
        "w0": state.w.copy(),
    })

    def record(st):
        row = {"t": st.t}
        row.update(problem.record(st.w))
        row["norm_m"] = momentum_norm(st, config.eta)
        trace.append(row, st.w if keep_iterates else None)

    record(state)
    betas = []
    f_1 = None
    for _ in range(T):
        if stop is not None and stop(trace):
            break
        betas.append(state.beta)
        state = hb_step(state, problem.gradient(state.w), config)
        norm = float(np.linalg.norm(state.w))
        if not norm <= DIVERGENCE_NORM:
            trace.meta["betas"] = np.array(betas)
            trace.flags.append("diverged")
            raise Divergence(state.t, norm, trace)
        if config.schedule is not None and not state.switched:
            f_t = problem.objective(state.w)
            if f_1 is None:
                f_1 = f_t
            state = schedule_update(state, config, f_1, f_t)
            if state.switched:
                trace.meta["switch_t"] = state.t
        record(state)
    trace.meta["betas"] = np.array(betas)
    return trace
