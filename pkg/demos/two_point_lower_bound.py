"""Why any estimator that ignores delta pays log^2(1/delta) / n.

The construction: put mass 1 - rho on class 0 and rho on class j, with
rho chosen so that all n draws land on class 0 with probability exactly delta.
On that event the estimator sees the same counts whatever j is, so it must
commit to one value q. Some class j gets q_j of order 1/n, and that
coordinate alone costs (rho - q_j)^2 / q_j.

Below: the witness class, the event probability and the loss for add-one,
next to the threshold 0.04 log^2(1/delta) / n it should beat.

    python3 demos/two_point_lower_bound.py
"""

import math

from chi2tail import LAPLACE, ConfidenceDependent
from chi2tail.adversarial import lemma2_certificate

n, d = 1000, 10
print(f"{'log(1/delta)':>12}{'rule':>20}{'event prob':>12}{'loss':>10}{'threshold':>11}{'ok':>5}")
for L in [2.5, 4, 8, 16, 64, 256]:
    delta = math.exp(-L)
    for rule in (LAPLACE, ConfidenceDependent(delta)):
        c = lemma2_certificate(rule, n, d, delta, strict=False)
        print(f"{L:>12}{str(rule).split('(')[0]:>20}{c.event_prob:>12.3e}{c.loss_on_event:>10.4f}"
              f"{c.threshold:>11.4f}{'yes' if c.holds else 'no':>5}")

print("\nAdd-one clears the threshold on every row. The confidence-tuned rule falls")
print("below it once log(1/delta) is large: knowing delta is what lets it escape.")
