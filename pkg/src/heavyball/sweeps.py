"""Momentum sweeps behind the four experiments.

Each driver takes a master seed and a list of momentum settings, builds one
shared problem instance and initial point, and runs Heavy Ball once per
setting. Random streams are derived from the seed per experiment and purpose
(``Rng(seed).spawn(experiment).spawn(purpose)``), so the instance does not
depend on which settings are in the sweep.

A momentum setting is written as a string: ``"0.5"`` for a constant beta and
``"1->0.9"`` for the switch schedule.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import cubic, experiments, phase_retrieval
from .momentum import Divergence, HBConfig, Switch, run
from .numkit import Rng

log = logging.getLogger(__name__)

PHASE_BETAS = ("0", "0.3", "0.5", "0.7", "0.9", "1->0.9")
CUBIC_BETAS = ("0", "0.3", "0.5", "0.7", "0.9")
SADDLE_BETAS = ("0", "0.5", "0.9")
EIG_BETAS = ("0", "0.5", "0.9")
EIG_ETAS = (1e-2, 5e-3, 1e-3, 5e-4)


def parse_beta(token):
    """``"0.3"`` -> 0.3; ``"1->0.9"`` -> Switch(beta_lo=0.9, beta_hi=1)."""
    token = token.strip()
    if "->" in token:
        hi, lo = token.split("->")
        return Switch(beta_lo=float(lo), beta_hi=float(hi))
    return float(token)


def make_config(eta, token):
    beta = parse_beta(token)
    if isinstance(beta, Switch):
        return HBConfig(eta=eta, beta=beta.beta_lo, schedule=beta)
    return HBConfig(eta=eta, beta=beta)


def file_label(label):
    """Filesystem-safe form of a beta label (``1->0.9`` becomes ``1to0.9``)."""
    return label.replace("->", "to")


def strictly_decreasing(values):
    if any(v is None for v in values):
        return False
    return all(a > b for a, b in zip(values, values[1:]))


def nonincreasing(values):
    if any(v is None for v in values):
        return False
    return all(a >= b for a, b in zip(values, values[1:]))


def constant_entries(runs):
    """Runs with a constant beta, sorted by beta."""
    const = [r for r in runs if r.config.schedule is None]
    return sorted(const, key=lambda r: r.config.beta)


def _run(problem, w0, config, T, stop=None, keep_iterates=False):
    try:
        return run(problem, w0, config, T, stop=stop, keep_iterates=keep_iterates), False
    except Divergence as exc:
        log.warning("run %s diverged at t=%d", config.label(), exc.t)
        return exc.trace, True


# Phase retrieval

@dataclass
class PhaseRun:
    label: str
    config: HBConfig
    trace: object
    diverged: bool
    stages: phase_retrieval.StageReport
    stages_cn0: phase_retrieval.StageReport
    c_n_hat: float
    rate: object
    sign_persistent: bool
    par_nondecreasing: bool
    perp_eventually_decreasing: bool


@dataclass
class PhaseSweep:
    inst: phase_retrieval.PhaseInstance
    w0: np.ndarray
    runs: list = field(default_factory=list)

    def T_zeta(self, constant_only=True):
        runs = constant_entries(self.runs) if constant_only else self.runs
        return [r.stages.T_zeta for r in runs]

    @property
    def ordered(self):
        return strictly_decreasing(self.T_zeta())


def phase_sweep(seed, betas=PHASE_BETAS, eta=5e-4, d=10, n=200, T=12000, zeta=0.1,
                stop_at_entry=False):
    """Momentum sweep on one phase retrieval instance. With `stop_at_entry` each run ends at its T_zeta."""
    root = Rng(seed).spawn("phase")
    inst = phase_retrieval.sample_instance(root.spawn("instance"), d, n)
    w0 = phase_retrieval.sample_initial_point(root.spawn("w0"), d)
    problem = phase_retrieval.PhaseProblem(inst)
    out = PhaseSweep(inst=inst, w0=w0)

    def entered(trace):
        row = trace.rows[-1]
        return (abs(abs(row["w_par"]) - 1.0) <= zeta / 2) and row["norm_w_perp"] <= zeta / 2

    for token in betas:
        config = make_config(eta, token)
        trace, diverged = _run(problem, w0, config, T, stop=entered if stop_at_entry else None,
                               keep_iterates=True)
        cn0 = phase_retrieval.stage_report(trace, zeta=zeta, c_n_hat=0.0, d=d)
        pert = None
        if len(trace) > 1:
            pert = phase_retrieval.extract_perturbations(
                trace.iterate_array(), eta, trace.meta["betas"], inst.w_star,
                T_zeta=cn0.T_zeta, switch_t=trace.meta.get("switch_t"))
        c_n_hat = pert.c_n_hat if pert is not None else float("nan")
        stages = phase_retrieval.stage_report(trace, zeta=zeta, c_n_hat=c_n_hat, d=d)
        stages.theory_T_zeta = phase_retrieval.entry_time_reference(eta, config.beta, d)
        cn0.theory_T_zeta = stages.theory_T_zeta
        rate = phase_retrieval.empirical_linear_rate(trace, cn0.T_zeta)
        out.runs.append(PhaseRun(
            label=config.label(), config=config, trace=trace, diverged=diverged,
            stages=stages, stages_cn0=cn0, c_n_hat=c_n_hat, rate=rate,
            sign_persistent=phase_retrieval.sign_persistent(trace, zeta),
            par_nondecreasing=phase_retrieval.par_nondecreasing(trace, zeta),
            perp_eventually_decreasing=phase_retrieval.perp_eventually_decreasing(
                trace, until=cn0.T_zeta),
        ))
    return out


# Cubic subproblem

@dataclass
class CubicRun:
    label: str
    config: HBConfig
    trace: object
    diverged: bool
    delta_report: cubic.DeltaReport
    rate: object
    norm_nondecreasing: bool

    @property
    def bound_ok(self):
        rep = self.delta_report
        if not rep.preconditions_met or rep.T_delta_bound is None:
            return True
        return rep.T_delta_measured is not None and rep.T_delta_measured <= np.ceil(rep.T_delta_bound)


@dataclass
class CubicSweep:
    inst: cubic.CubicInstance
    w0: np.ndarray
    runs: list = field(default_factory=list)

    def by_label(self, label):
        return next(r for r in self.runs if r.label == label)

    @property
    def entry_ordered(self):
        """T_delta non-increasing over the constant betas, strictly lower at the largest."""
        T = [r.delta_report.T_delta_measured for r in constant_entries(self.runs)]
        return nonincreasing(T) and len(T) > 1 and T[-1] < T[0]

    @property
    def bounds_ok(self):
        return all(r.bound_ok for r in self.runs)


def cubic_sweep(seed, betas=CUBIC_BETAS, eta=0.01, T=4000, delta=0.1, d=4, rho=1.0,
                norm_wstar=1.0, normA=1.0, gamma=0.2, gap=5e-3, r=cubic.DEFAULT_R,
                perturb=False):
    """Momentum sweep on one generated cubic instance."""
    root = Rng(seed).spawn("cubic")
    inst = cubic.generate_instance(root.spawn("instance"), d=d, rho=rho, norm_wstar=norm_wstar,
                                   normA=normA, gamma=gamma, gap=gap)
    if perturb:
        inst = cubic.perturb_b(inst, root.spawn("perturb"))
    w0 = cubic.initial_point(inst, r)
    problem = cubic.CubicProblem(inst)
    out = CubicSweep(inst=inst, w0=w0)
    for token in betas:
        config = make_config(eta, token)
        trace, diverged = _run(problem, w0, config, T)
        out.runs.append(CubicRun(
            label=config.label(), config=config, trace=trace, diverged=diverged,
            delta_report=cubic.measure_T_delta(trace, inst, delta),
            rate=cubic.empirical_rate_cubic(trace, inst),
            norm_nondecreasing=cubic.norm_nondecreasing(trace, inst),
        ))
    return out


# Saddle escape

@dataclass
class SaddleRun:
    label: str
    config: HBConfig
    trace: object
    diverged: bool
    escape_t: int | None
    sign_persistent: bool


@dataclass
class SaddleSweep:
    inst: experiments.SaddleInstance
    runs: list = field(default_factory=list)

    @property
    def escape_times(self):
        return [r.escape_t for r in constant_entries(self.runs)]

    @property
    def ordered(self):
        return strictly_decreasing(self.escape_times)


def _escape_sign_ok(trace, inst, escape_t):
    # The escape coordinate keeps the sign of -xbar[1] from the first step on.
    if escape_t is None:
        return False
    w2 = trace.column("w2")[1:escape_t + 1]
    return bool(np.all(np.sign(w2) == -np.sign(inst.x_bar[1])))


def saddle_sweep(seed, betas=SADDLE_BETAS, eta=0.01, n=10, T=2000, drop=0.01):
    """Saddle escape sweep from the origin."""
    inst = experiments.sample_saddle(Rng(seed).spawn("saddle").spawn("instance"), n)
    problem = experiments.SaddleProblem(inst)
    out = SaddleSweep(inst=inst)
    for token in betas:
        config = make_config(eta, token)
        trace, diverged = _run(problem, np.zeros(2), config, T)
        t_esc = experiments.escape_time(trace, drop)
        out.runs.append(SaddleRun(label=config.label(), config=config, trace=trace,
                                  diverged=diverged, escape_t=t_esc,
                                  sign_persistent=_escape_sign_ok(trace, inst, t_esc)))
    return out


# Top eigenvector

@dataclass
class EigRun:
    eta: float
    label: str
    config: HBConfig
    trace: object
    iterations: int | None


@dataclass
class EigSweep:
    A: np.ndarray
    w0: np.ndarray
    etas: tuple
    runs: list = field(default_factory=list)

    def iterations(self, eta):
        return [r.iterations for r in constant_entries([r for r in self.runs if r.eta == eta])]

    def ordered_at(self, eta):
        return strictly_decreasing(self.iterations(eta))

    def ratios(self):
        """Iterations at the largest beta over iterations at the smallest, per eta
        in decreasing order of eta."""
        out = []
        for eta in sorted(self.etas, reverse=True):
            its = self.iterations(eta)
            out.append(its[-1] / its[0] if None not in its and its[0] else None)
        return out

    @property
    def ratio_shrinks(self):
        return strictly_decreasing(self.ratios())


def eig_sweep(seed, etas=EIG_ETAS, betas=EIG_BETAS, d=10, tol=1e-3, T=200000):
    """Eigenvector sweep on ``A = B B^T`` with Gaussian ``B``."""
    root = Rng(seed).spawn("eig")
    B = root.spawn("matrix").standard_normal((d, d))
    A = B @ B.T
    u1, _ = experiments.top_eigvec(A)
    wrng = root.spawn("w0")
    w0 = wrng.standard_normal(d)
    while abs(w0 @ u1) <= 1e-12 * np.linalg.norm(w0):
        log.info("start orthogonal to the top eigenvector; redrawing")
        w0 = wrng.standard_normal(d)
    out = EigSweep(A=A, w0=w0, etas=tuple(etas))
    for eta in etas:
        for token in betas:
            config = make_config(eta, token)
            if config.schedule is not None:
                raise ValueError("the eigenvector recursion takes constant betas only")
            trace = experiments.eig_hb_run(A, config, w0=w0, T=T, tol=tol)
            out.runs.append(EigRun(eta=eta, label=config.label(), config=config, trace=trace,
                                   iterations=experiments.iterations_to(trace, tol)))
    return out
