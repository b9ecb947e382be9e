"""Hypothesis-class f-divergence discrepancies for domain adaptation."""

from .bounds import (
    BoundReport,
    fastrate_constants,
    generalization_bound,
    lambda_star,
    rademacher_empirical,
    target_bound_absolute,
    target_bound_general,
    target_bound_localized,
    target_bound_slow,
)
from .datasets import DomainPair, gaussian_shift, threshold_domains, two_moons
from .discrepancy import (
    DiscrepancyEstimate,
    absolute_fdd,
    cumulant_profile,
    fdd,
    localized_fdd,
    rashomon,
    sup_source_disagreement,
)
from .hypotheses import HypothesisClass, LossFunction, Threshold
from .phi_kernel import DiscreteDistribution, PhiSpec, exact_f_divergence, make_phi
from .variational import WitnessValues, estimate, lt_objective, scaled_objective, shifted_objective

__version__ = "0.1.0"
