"""Poissonization in one picture.

Draw one long i.i.d. sequence. The true counts use its first n entries; the
surrogate uses the first N ~ Poisson(n/2). Whenever N <= n the surrogate
counts sit below the true counts coordinatewise, and the surrogate coordinates
are independent Poisson(n p_j / 2). The event N <= n fails with probability at
most e^{-n/6}.

    python3 demos/poissonization.py
"""

import math

import numpy as np

from chi2tail import RngSeed, power_law
from chi2tail import montecarlo as mc

P = power_law(10, 1.0)
for n in (12, 30, 60, 120):
    rep = mc.poissonization_check(P, n, 100_000, RngSeed(3, n))
    print(f"n={n:>4}  P(N<=n) ~ {rep.event.point:.5f}  floor 1-e^(-n/6) = {1 - math.exp(-n / 6):.5f}"
          f"  coupling breaks: {rep.coupling_violations}")

n = 60
rep = mc.poissonization_check(P, n, 100_000, RngSeed(3, 0))
print("\nsurrogate means vs n p_j / 2 at n = 60:")
for j, (m, target) in enumerate(zip(rep.tilde_counts.mean(axis=0), n * np.asarray(P.probs) / 2)):
    print(f"  class {j}: {m:.4f}  {target:.4f}")
