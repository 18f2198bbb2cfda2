"""Heavy Ball in its two equivalent forms, and the 1 -> 0.9 switch schedule."""

import numpy as np

from heavyball import phase_retrieval
from heavyball.momentum import HBConfig, Switch, run
from heavyball.numkit import Rng

if __name__ == "__main__":
    rng = Rng(0)
    inst = phase_retrieval.sample_instance(rng.spawn("instance"), 10, 200)
    w0 = phase_retrieval.sample_initial_point(rng.spawn("w0"), 10)
    problem = phase_retrieval.PhaseProblem(inst)

    # Form 1 keeps the previous iterate, form 2 keeps a momentum buffer.
    cfg = HBConfig(eta=5e-4, beta=0.9)
    a = run(problem, w0, cfg, 1000, form=1, keep_iterates=True).iterate_array()
    b = run(problem, w0, cfg, 1000, form=2, keep_iterates=True).iterate_array()
    print("max |form1 - form2| over 1000 steps:", np.max(np.abs(a - b)))

    # beta = 1 until the objective has halved, then 0.9 with the momentum reset.
    sched = HBConfig(eta=5e-4, beta=0.9, schedule=Switch(beta_lo=0.9))
    trace = run(problem, w0, sched, 3000)
    print("switched at t =", trace.meta.get("switch_t"))
    print("final dist:", trace.rows[-1]["dist"])
