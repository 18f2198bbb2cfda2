"""Seeded streams, the Jacobi eigensolver and finite-difference gradient checks."""

import numpy as np

from heavyball import gradcheck
from heavyball.numkit import Rng, jacobi_eigh, sym_frac_power

if __name__ == "__main__":
    # Named sub-streams are independent of draw order elsewhere.
    root = Rng(42)
    print("first words of spawn('a'):", root.spawn("a").raw(2))
    print("same again:              ", Rng(42).spawn("a").raw(2))

    B = Rng(1).standard_normal((4, 4))
    A = B @ B.T
    vals, vecs = jacobi_eigh(A)
    print("eigenvalues:", vals)
    print("residual |A V - V diag|:", np.linalg.norm(A @ vecs - vecs * vals))
    R = sym_frac_power(A, 0.5)
    print("|sqrt(A)^2 - A|:", np.linalg.norm(R @ R - A))

    for problem in gradcheck.PROBLEMS:
        print(gradcheck.grad_check(problem, count=20))
