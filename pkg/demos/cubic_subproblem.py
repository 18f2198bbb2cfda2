"""Cubic-regularized subproblem: entry time into the benign region and its bound."""

from heavyball import cubic, sweeps
from heavyball.numkit import Rng

if __name__ == "__main__":
    sw = sweeps.cubic_sweep(0)
    inst = sw.inst
    print("gamma =", inst.gamma, " b1 =", inst.b1, " |w*| =", inst.norm_w_star)
    print("certificate at w*:", cubic.check_optimality(inst, inst.w_star))
    print(f"{'beta':>5} {'T_delta':>8} {'bound':>9} {'rate':>9}")
    for r in sw.runs:
        rep = r.delta_report
        print(f"{r.label:>5} {rep.T_delta_measured!s:>8} {rep.T_delta_bound:9.1f} {r.rate.nu:9.2e}")
    print("non-increasing in beta:", sw.entry_ordered, " all within bound:", sw.bounds_ok)

    # A tiny perturbation of b, with the minimizer solved again.
    moved = cubic.perturb_b(inst, Rng(0).spawn("perturb"))
    print("perturbed f* - f*:", cubic.cubic_objective(moved, moved.w_star)
          - cubic.cubic_objective(inst, inst.w_star))
