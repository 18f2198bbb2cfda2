"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest -s tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from heavyball import cli, cubic, dynamics, gradcheck, phase_retrieval, sweeps
from heavyball.momentum import HBConfig, run
from heavyball.numkit import Rng

PHASE_BETAS = ("0", "0.3", "0.5", "0.7", "0.9")
CUBIC_BETAS = ("0", "0.3", "0.5", "0.7")


@pytest.mark.slow
def test_c1_phase_retrieval_ordering(criterion):
    start = time.perf_counter()
    sw = sweeps.phase_sweep(0, betas=PHASE_BETAS)
    elapsed = time.perf_counter() - start
    T = sw.T_zeta()
    shapes = all(r.par_nondecreasing and r.perp_eventually_decreasing for r in sw.runs)
    ordered = []
    for seed in range(10):
        ordered.append(sweeps.phase_sweep(seed, betas=PHASE_BETAS, T=40000, stop_at_entry=True).ordered)
    ok = sw.ordered and shapes and elapsed < 30 and sum(ordered) >= 9
    criterion(1, "phase retrieval T_zeta strictly decreasing in beta", ok,
              f"seed 0 T_zeta={T}, shapes={shapes}, {elapsed:.1f}s, "
              f"ordered on {sum(ordered)}/10 seeds")


@pytest.mark.slow
def test_c2_cubic_entry_and_rate(criterion):
    start = time.perf_counter()
    a = b = c = 0
    for seed in range(20):
        sw = sweeps.cubic_sweep(seed, betas=CUBIC_BETAS)
        a += sw.entry_ordered
        b += sw.bounds_ok
        r0, r7 = sw.by_label("0").rate, sw.by_label("0.7").rate
        c += r0 is not None and r7 is not None and r7.nu > r0.nu
    elapsed = time.perf_counter() - start
    ok = a >= 18 and c >= 18 and b == 20 and elapsed < 60
    criterion(2, "cubic T_delta ordering, bound and rate", ok,
              f"(a) {a}/20, (b) {b}/20, (c) {c}/20, {elapsed:.1f}s")


def _form_gap(problem, w0, config, T=1000):
    a = run(problem, w0, config, T, form=1, keep_iterates=True).iterate_array()
    b = run(problem, w0, config, T, form=2, keep_iterates=True).iterate_array()
    return float(np.max(np.abs(a - b)))


def test_c3_form_equivalence(criterion):
    worst = 0.0
    for seed in range(10):
        rng = Rng(seed).spawn("acceptance").spawn("forms")
        inst = phase_retrieval.sample_instance(rng.spawn("phase"), 10, 200)
        w0 = phase_retrieval.sample_initial_point(rng.spawn("w0"), 10)
        for beta in (0.5, 0.9):
            worst = max(worst, _form_gap(phase_retrieval.PhaseProblem(inst), w0,
                                         HBConfig(eta=5e-4, beta=beta)))
        cinst = cubic.generate_instance(rng.spawn("cubic"))
        for beta in (0.5, 0.9):
            worst = max(worst, _form_gap(cubic.CubicProblem(cinst), cubic.initial_point(cinst),
                                         HBConfig(eta=0.01, beta=beta)))
    criterion(3, "form 1 and form 2 iterates agree over 1000 steps", worst <= 1e-10,
              f"max |diff|={worst:.2e}")


def test_c4_gradient_oracles(criterion):
    reports = [gradcheck.grad_check(p, seed=0, count=100, h=1e-6) for p in gradcheck.PROBLEMS]
    ok = all(r.passed(1e-5) for r in reports)
    criterion(4, "finite differences match analytic gradients", ok,
              ", ".join(f"{r.problem}={r.max_rel_error:.1e}" for r in reports))


def population_test_points(w_star, norms=(0.2, 0.5, 0.8, 1.2, 1.5)):
    """Points at 45 degrees between w* and a fixed perpendicular direction.

    This keeps them off the set where the population gradient vanishes
    (``w = +-w*`` and ``w . w* = 0, |w|^2 = 1/3``), where a relative error is
    ill-conditioned.
    """
    u = np.ones_like(w_star)
    u -= (u @ w_star) * w_star
    u /= np.linalg.norm(u)
    return [s * (w_star + u) / np.sqrt(2.0) for s in norms]


def test_c5_population_gradient(criterion):
    start = time.perf_counter()
    inst = phase_retrieval.sample_instance(Rng(0).spawn("acceptance").spawn("population"), 5, 10**6)
    errors = []
    for w in population_test_points(inst.w_star):
        g_pop = phase_retrieval.population_gradient(w, inst.w_star)
        g_emp = phase_retrieval.gradient(inst, w)
        errors.append(np.linalg.norm(g_emp - g_pop) / np.linalg.norm(g_pop))
    elapsed = time.perf_counter() - start
    ok = max(errors) <= 1e-2 and elapsed < 30
    criterion(5, "Monte Carlo gradient matches the population gradient", ok,
              f"max rel error={max(errors):.1e}, {elapsed:.1f}s")


@pytest.mark.parametrize("mode", dynamics.MODES)
def test_c6_dynamics_lemmas(criterion, mode):
    res = dynamics.sweep(mode, Rng(0).spawn("lemmas").spawn(mode), trials=10_000, max_T=200)
    criterion(6, f"{mode} recursion rate holds on every trial", res.ok,
              f"{res.violations} violations in {res.trials} trials, worst excess={res.worst_excess:.1e}")


def test_c7_saddle_escape(criterion):
    sw = sweeps.saddle_sweep(0, betas=("0", "0.5", "0.9"), T=6000)
    criterion(7, "saddle escape time strictly decreasing in beta", sw.ordered,
              f"escape times={sw.escape_times}")


def test_c8_eigenvector(criterion):
    sw = sweeps.eig_sweep(0)
    ordered = all(sw.ordered_at(eta) for eta in sw.etas)
    ratios = ", ".join(f"{r:.3f}" for r in sw.ratios())
    criterion(8, "eigenvector iterations decrease with beta, ratio shrinks with eta",
              ordered and sw.ratio_shrinks, f"ratios={ratios}")


@pytest.mark.slow
def test_c9_determinism(criterion, tmp_path):
    runs = {
        "phase": ["phase", "--beta", ",".join(PHASE_BETAS)],
        "cubic": ["cubic", "--beta", ",".join(CUBIC_BETAS)],
        "saddle": ["saddle"],
        "eig": ["eig"],
    }
    mismatched = []
    n_files = 0
    for name, args in runs.items():
        for sub in ("a", "b"):
            cli.main(args + ["--out", str(tmp_path / sub / name)])
        for f in sorted((tmp_path / "a" / name).glob("*.csv")):
            n_files += 1
            if f.read_bytes() != (tmp_path / "b" / name / f.name).read_bytes():
                mismatched.append(f.name)
    criterion(9, "repeated CLI runs give byte-identical CSV", not mismatched and n_files > 0,
              f"{n_files} files compared, {len(mismatched)} differ")


if __name__ == "__main__":
    raise SystemExit(pytest.main(["-s", "-q", __file__]))
