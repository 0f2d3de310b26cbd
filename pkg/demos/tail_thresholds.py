"""Where does the loss actually land, compared with the high-probability thresholds?

For n = 1000 and d = 10 we draw 100k samples, fit add-one and the
confidence-tuned rule, and read off the empirical (1 - delta) quantile of the
chi-square loss. Alongside we print the threshold families from the bounds
module. The upper bounds carry very large constants, so they clear the
simulated quantiles by several orders of magnitude; the asymptotic benchmark
(d + log(1/delta)) / n is the one to compare shapes against.

    python3 demos/tail_thresholds.py
"""

import math

import numpy as np

from chi2tail import LAPLACE, ConfidenceDependent, Family, RngSeed, power_law
from chi2tail import montecarlo as mc
from chi2tail.bounds import threshold_value

n, d = 1000, 10
P = power_law(d, 1.5)
reps = 100_000

header = f"{'log(1/delta)':>12}{'rule':>22}{'quantile':>11}{'benchmark':>11}{'upper':>11}"
print(header)
for k, L in enumerate([2, 4, 6, 8]):
    delta = math.exp(-L)
    bench = threshold_value(Family.ASYMPTOTIC_BENCHMARK, n, d, delta)
    for j, (rule, fam) in enumerate([(LAPLACE, Family.THM1_UPPER_LAPLACE),
                                     (ConfidenceDependent(delta), Family.THM3_UPPER_CONF_DEP)]):
        losses = mc.simulate_losses(P, rule, n, reps, RngSeed(11, 2 * k + j))
        q = float(np.quantile(losses, 1 - delta, method="higher"))
        upper = threshold_value(fam, n, d, delta)
        print(f"{L:>12}{str(rule).split('(')[0]:>22}{q:>11.4f}{bench:>11.4f}{upper:>11.1f}")

print("\nOnce delta < e^-6 only a handful of the 1e5 samples lie beyond the quantile,")
print("so the deepest rows are noisy; the CLI reports Clopper-Pearson intervals for that.")
