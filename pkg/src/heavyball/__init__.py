"""Heavy Ball momentum on non-convex problems with benign landscapes.

Modules
-------
numkit           Jacobi eigensolver, symmetric matrix powers, seeded Philox streams.
momentum         Heavy Ball in both forms, the beta switch schedule, run traces.
phase_retrieval  Quartic phase-retrieval loss, population dynamics, stage times.
cubic            Cubic-regularized subproblem, instance generator, entry times.
dynamics         Scalar momentum recursions and their rate inequalities.
experiments      Top-eigenvector recursion and a 2-d saddle-escape objective.
sweeps           Momentum sweeps for the four experiments.
gradcheck        Finite-difference gradient checks.
cli              Command-line runner writing CSV traces and summaries.
"""

from .momentum import HBConfig, Switch, Trace, run

__version__ = "0.1.0"

__all__ = ["HBConfig", "Switch", "Trace", "run", "__version__"]
