"""
The threshold example, step by step
===================================

Source is uniform on [0, 1], target is uniform on [0, 2], both labeled by
the threshold at 1/2.  The hypothesis class is thresholds on [0, 1/2].
We compute the KL discrepancy over the whole class, then over the
Rashomon set of source risk at most 1/4, and assemble the localized bound.
"""

import math

from fddlab.bounds import fastrate_constants, max_feasible_c1, target_bound_localized
from fddlab.datasets import risk, threshold_domains
from fddlab.discrepancy import cumulant_profile, fdd, localized_fdd, rashomon, sup_source_disagreement
from fddlab.hypotheses import HypothesisClass, Threshold
from fddlab.phi_kernel import make_phi

pair = threshold_domains()
mu, nu = pair.source, pair.target
H = HypothesisClass.threshold_grid()  # 101 thresholds on [0, 1/2]
h = Threshold(0.5)
kl = make_phi("kl")

# full-class discrepancy: the witness is the threshold at 0
full = fdd(h, H, nu, mu, kl)
print(f"fdd over H          {full.value:.6f} at t = {full.t_star:.4f} (-log 3 = {-math.log(3):.4f})")
print(f"sqrt(fdd)           {math.sqrt(full.value):.4f}")

# restrict to hypotheses with small source risk
rs = rashomon(H, mu, 0.25)
loc = localized_fdd(h, rs, nu, mu, kl)
R, _ = sup_source_disagreement(h, rs, mu)
print(f"Rashomon set        {len(rs)} members")
print(f"localized fdd       {loc.value:.6f} at t = {loc.t_star:.4f} (log 3/7 = {math.log(3 / 7):.4f})")
print(f"sup disagreement    {R:.4f}")

# the worked constants come from the fast-rate solver with m = 1
fr = fastrate_constants(1.0, 0.1)
prof = cumulant_profile(h, rs, mu, kl)
rep = target_bound_localized(risk(h, mu), loc.value, R, fr.C1, 0.1, lambda_star_r=0.0, cumulant=prof)
print(f"localized bound     {rep.total:.6f} with C1 = {fr.C1:.4f}")
for w in rep.warnings:
    print("  warning:", w)

# the largest C1 that actually meets the cumulant condition
C1 = max_feasible_c1(prof, 0.1)
ok = target_bound_localized(risk(h, mu), loc.value, R, C1, 0.1, lambda_star_r=0.0, cumulant=prof)
print(f"feasible C1         {C1:.4f} gives bound {ok.total:.4f}; target risk of h is {risk(h, nu):.1f}")
