"""How fast does the add-one estimator converge in chi-square?

We compare three things for a few distributions on d = 20 classes:

  * the exact expected loss, from a closed form in the binomial moments,
  * a Monte Carlo average over 20k samples,
  * the crude bound (d - 1) / (n + 1).

The exact curve sits below the bound everywhere; on the uniform distribution
it nearly touches it, which is where the add-one rule is least helpful.

    python3 demos/expected_risk.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from chi2tail import LAPLACE, RngSeed, exact_laplace_chi2_expectation, power_law, two_point, uniform
from chi2tail import montecarlo as mc
from chi2tail.svgplot import Plot

d = 20
ns = [5, 10, 20, 50, 100, 200, 500, 1000]
dists = {"uniform": uniform(d), "power-law(1.5)": power_law(d, 1.5),
         "two-point(0.05)": two_point(d, 0.05)}

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-out")
out.mkdir(parents=True, exist_ok=True)
plot = Plot(f"Expected chi-square loss of add-one, d={d}", "n", "E loss", logx=True, logy=True)

print(f"{'distribution':<16}{'n':>6}{'exact':>12}{'monte carlo':>14}{'(d-1)/(n+1)':>14}")
for stream, (name, P) in enumerate(dists.items()):
    exact, sim = [], []
    for k, n in enumerate(ns):
        e = exact_laplace_chi2_expectation(P, n)
        losses = mc.simulate_losses(P, LAPLACE, n, 20_000, RngSeed(7, stream * 100 + k))
        exact.append(e)
        sim.append(float(np.mean(losses)))
        print(f"{name:<16}{n:>6}{e:>12.5f}{sim[-1]:>14.5f}{(d - 1) / (n + 1):>14.5f}")
    plot.add(f"{name} exact", ns, exact)
    plot.add(f"{name} simulated", ns, sim, markers=True)
plot.add("(d-1)/(n+1)", ns, [(d - 1) / (n + 1) for n in ns], dashed=True)
plot.save(out / "expected_risk.svg")
print(f"wrote {out / 'expected_risk.svg'}")
