"""
Bounds on a small discrete problem
==================================

Eight atoms, a source law and a target law, and nine labelings as the
hypothesis class (two of them are the true labelers).  For every h we print
the target risk next to each population bound.
"""

import numpy as np

from fddlab.bounds import (
    cross_domain_error,
    lambda_star,
    target_bound_absolute,
    target_bound_general,
    target_bound_slow,
)
from fddlab.datasets import DiscreteDomain, risk
from fddlab.discrepancy import absolute_fdd, cumulant_profile, fdd
from fddlab.hypotheses import FiniteIndex, HypothesisClass
from fddlab.phi_kernel import DiscreteDistribution, make_phi

rng = np.random.default_rng(1)
k = 8
f_mu = rng.integers(0, 2, k)
f_nu = f_mu.copy()
f_nu[:2] = 1 - f_nu[:2]  # the labelers disagree on two atoms
H = HypothesisClass.finite(np.vstack([f_mu, f_nu, rng.integers(0, 2, (7, k))]))
mu = DiscreteDomain(DiscreteDistribution.on_range(rng.dirichlet(np.ones(k))), FiniteIndex(f_mu))
nu = DiscreteDomain(DiscreteDistribution.on_range(rng.dirichlet(np.ones(k))), FiniteIndex(f_nu))
kl = make_phi("kl")

lam, _ = lambda_star(H, mu, nu)
cde = cross_domain_error(H[0], H[1], mu, nu)
print(f"lambda* = {lam:.3f}   cross-domain error = {cde:.3f}\n")
print(" h   R_nu     abs   general    slow  lam-free")
for i, h in enumerate(H):
    src = risk(h, mu)
    ab = absolute_fdd(h, H, mu, nu, kl).value
    D = fdd(h, H, nu, mu, kl, "nonneg").value
    prof = cumulant_profile(h, H, mu, kl)
    row = [
        target_bound_absolute(src, ab, lambda_star=lam).total,
        target_bound_general(src, D, prof, lambda_star=lam).total,
        target_bound_slow(src, D, kl, lambda_star=lam).total,
        target_bound_general(src, D, prof, cross_domain_error=cde).total,
    ]
    print(f"{i:2d}  {risk(h, nu):.3f}  " + "  ".join(f"{v:6.3f}" for v in row))
