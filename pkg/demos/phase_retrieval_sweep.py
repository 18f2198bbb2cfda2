"""Phase retrieval: momentum shortens the time to reach the zeta-neighbourhood of w*."""

from heavyball import phase_retrieval, sweeps

if __name__ == "__main__":
    sw = sweeps.phase_sweep(0)
    print(f"{'beta':>7} {'T_zeta':>7} {'reference':>10} {'rate':>9}")
    for r in sw.runs:
        ref = r.stages.theory_T_zeta
        nu = r.rate.nu if r.rate is not None else float("nan")
        print(f"{r.label:>7} {r.stages.T_zeta!s:>7} {ref:10.0f} {nu:9.2e}")
    print("strictly decreasing over constant betas:", sw.ordered)

    # The two coordinates that drive the analysis.
    r = sw.runs[-2]
    par = abs(r.trace.column("w_par"))
    perp = r.trace.column("norm_w_perp")
    for t in (0, 200, 400, 600, r.stages.T_zeta):
        print(f"beta={r.label} t={t:5d}  |w_par|={par[t]:.4f}  |w_perp|={perp[t]:.4f}")

    # Perturbation terms measured along the run, against the population dynamics.
    print("largest measured perturbation c_n:", r.c_n_hat)
    print("stage report (measured c_n):", r.stages)
    print("stage report (c_n = 0):", r.stages_cn0)
    print("population gradient at w*:", phase_retrieval.population_gradient(sw.inst.w_star, sw.inst.w_star))
