"""Scalar momentum recursions grow (or decay) faster than the plain factor 1 +- theta."""

from heavyball import dynamics
from heavyball.numkit import Rng

if __name__ == "__main__":
    theta, beta = 0.05, 0.9
    seq = dynamics.simulate(dynamics.RecursionSpec(theta, beta, "growth"), 50)
    print("growth after 50 steps:", seq[-1], " without momentum:", (1 + theta) ** 50)
    print("per-step bound holds:", dynamics.verify_growth(seq, theta, beta).ok)

    seq = dynamics.simulate(dynamics.RecursionSpec(0.3, 0.9, "decay"), 20)
    print("decay check:", dynamics.verify_decay(seq, 0.3, 0.9))

    for mode in dynamics.MODES:
        res = dynamics.sweep(mode, Rng(0).spawn("lemmas").spawn(mode), trials=2000)
        print(f"{mode:>16}: {res.violations} violations in {res.trials} trials")
