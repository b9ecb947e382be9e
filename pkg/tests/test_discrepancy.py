import math

import numpy as np
import pytest

from fddlab.datasets import DiscreteDomain, threshold_domains
from fddlab.discrepancy import (
    ThresholdFamily,
    absolute_fdd,
    adversarial_fdd,
    cumulant_profile,
    fdd,
    grid_scan,
    localized_fdd,
    rashomon,
    sup_source_disagreement,
)
from fddlab.hypotheses import FiniteIndex, HypothesisClass, LossFunction, Threshold
from fddlab.phi_kernel import DiscreteDistribution, exact_f_divergence, make_phi

KL = make_phi("kl")


@pytest.fixture(scope="module")
def example():
    pair = threshold_domains()
    H = HypothesisClass.threshold_grid()
    return pair.source, pair.target, H, Threshold(0.5)


def test_threshold_fdd(example):
    mu, nu, H, h = example
    est = fdd(h, H, nu, mu, KL)
    assert est.value == pytest.approx(0.130812, abs=1e-6)
    assert est.witness_index == 0
    assert est.t_star == pytest.approx(-math.log(3), abs=1e-4)
    # closed form at c = 0: sup_t t/4 - log(1/2 + e^t/2)
    assert est.value == pytest.approx(-0.25 * math.log(3) - math.log(0.5 + 0.5 / 3), abs=1e-9)


def test_threshold_fdd_matches_grid_oracle(example):
    mu, nu, H, h = example

    def best_at(c):
        qn, qm = nu.interval_mass(0.5, c), mu.interval_mass(0.5, c)
        return grid_scan(lambda t: t * qn - math.log(1 - qm + qm * math.exp(t)), -5, 5, 2001)[0]

    oracle = max(best_at(c) for c in np.linspace(0, 0.5, 101))
    assert fdd(h, H, nu, mu, KL).value == pytest.approx(oracle, abs=1e-5)


def test_identical_domains_give_zero(example):
    mu, _, H, h = example
    assert fdd(h, H, mu, mu, KL).value == pytest.approx(0.0, abs=1e-12)
    # the absolute form is only zero at h' = h; elsewhere the log-moment gap shows up
    ab = absolute_fdd(h, H, mu, mu, KL)
    assert ab.value > 0
    assert absolute_fdd(h, [h], mu, mu, KL).value == pytest.approx(0.0, abs=1e-15)


def test_rashomon(example):
    mu, _, H, _ = example
    r = rashomon(H, mu, 0.25)
    assert r.member_indices == list(range(50, 101))
    assert len(rashomon(H, mu, 1.0)) == len(H)
    empty = rashomon(HypothesisClass.threshold_grid(0.0, 0.2, 5), mu, 0.1)
    assert empty.empty and empty.min_risk == pytest.approx(0.3)
    with pytest.raises(ValueError):
        sup_source_disagreement(Threshold(0.5), empty, mu)


def test_localized(example):
    mu, nu, H, h = example
    r = rashomon(H, mu, 0.25)
    loc = localized_fdd(h, r, nu, mu, KL, r1=0.0)
    assert loc.value == pytest.approx(0.048238, abs=1e-6)
    assert loc.t_star == pytest.approx(math.log(3 / 7), abs=1e-4)
    nonneg = localized_fdd(h, r, nu, mu, KL, "nonneg")
    assert nonneg.value == 0.0 and nonneg.t_star == 0.0
    assert sup_source_disagreement(h, r, mu) == (pytest.approx(0.25), 50)
    assert sup_source_disagreement(h, rashomon(H, mu, 0.5), mu)[0] == pytest.approx(0.5)
    zero = rashomon(H, mu, 0.0)
    assert localized_fdd(h, zero, nu, mu, KL).value == 0.0
    with pytest.raises(ValueError):
        localized_fdd(Threshold(0.3), r, nu, mu, KL, r1=0.1)


def test_localized_monotone_in_r_and_dominated(example):
    mu, nu, H, h = example
    full = fdd(h, H, nu, mu, KL).value
    vals = [localized_fdd(h, rashomon(H, mu, r), nu, mu, KL).value for r in (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    assert all(v <= full + 1e-12 for v in vals)


def test_change_of_measure(example):
    mu, nu, H, h = example
    D = fdd(h, H, nu, mu, KL).value
    prof = cumulant_profile(h, H, mu, KL)
    for j, h2 in enumerate(H):
        en = nu.law(h, h2)
        em = mu.law(h, h2)
        dE = float(en[1] @ en[0] - em[1] @ em[0])
        for t in np.linspace(-5, 5, 21):
            assert t * dE - prof.per_hypothesis(j, t) <= D + 1e-9


def test_cumulant_profile_properties(example):
    mu, _, H, h = example
    prof = cumulant_profile(h, H, mu, KL)
    assert prof.envelope(0.0) == pytest.approx(0.0, abs=1e-15)
    ts = np.linspace(-5, 5, 41)
    K = np.array([prof.envelope(t) for t in ts])
    assert np.all(K >= -1e-12)
    assert np.all(K[1:-1] <= 0.5 * (K[:-2] + K[2:]) + 1e-12)
    # Bernoulli closed form at c = 0.25 (q = 1/4)
    q = 0.25
    t = 1.3
    assert prof.per_hypothesis(50, t) == pytest.approx(math.log(1 - q + q * math.exp(t)) - t * q)
    with pytest.raises(ValueError):
        cumulant_profile(h, H, mu, make_phi("jeffreys:1,1"))


def test_fdd_below_exact_divergence_three_atoms():
    nu_d = DiscreteDistribution.on_range([0.5, 0.3, 0.2])
    mu_d = DiscreteDistribution.on_range([0.2, 0.3, 0.5])
    table = [[a, b, c] for a in (0, 1) for b in (0, 1) for c in (0, 1)]
    H = HypothesisClass.finite(table)
    h = H[0]
    for kind in ("kl", "chi2"):
        phi = make_phi(kind)
        est = fdd(h, H, DiscreteDomain(nu_d), DiscreteDomain(mu_d), phi)
        assert est.value <= exact_f_divergence(nu_d, mu_d, phi) + 1e-9
        assert est.value > 0


def test_scaling_loss_rescales_t(example):
    mu, nu, _, h = example
    H = HypothesisClass.threshold_grid(0, 0.5, 11, LossFunction("zero_one"))
    base = fdd(h, H, nu, mu, KL)

    from fddlab.discrepancy import loss_witness
    from fddlab.variational import scaled_objective

    g = loss_witness(h, H[base.witness_index], nu, mu)
    g2 = type(g)(2 * g.on_P, 2 * g.on_Q, g.weights_P, g.weights_Q)
    r = scaled_objective(g2, KL)
    assert r.value == pytest.approx(base.value, abs=1e-9)
    assert r.t_star == pytest.approx(base.t_star / 2, abs=1e-5)


def test_ties_lowest_index():
    mu = DiscreteDomain(DiscreteDistribution.on_range([0.5, 0.5]))
    nu = DiscreteDomain(DiscreteDistribution.on_range([0.25, 0.75]))
    H = HypothesisClass.finite([[0, 0], [0, 1], [0, 1], [1, 0]])
    est = fdd(H[0], H, nu, mu, KL)
    assert est.witness_index == 1


def test_absolute_fdd_threshold_grid(example):
    mu, nu, H, h = example
    est = absolute_fdd(h, H, mu, nu, KL)

    def at(c):
        qm, qn = mu.interval_mass(0.5, c), nu.interval_mass(0.5, c)
        return abs(qm - math.log(1 - qn + qn * math.e))

    assert est.value == pytest.approx(max(at(c) for c in np.linspace(0, 0.5, 101)), abs=1e-12)


def test_adversarial_matches_enumeration(example):
    mu, nu, _, h = example
    H9 = HypothesisClass.threshold_grid(0, 0.5, 9)
    enum = fdd(h, H9, nu, mu, KL)
    for init in (0.1, 0.3, 0.45):
        adv = adversarial_fdd(h, ThresholdFamily(0.0, 0.5), nu, mu, KL, init=init, outer_steps=60, lr=0.05)
        assert adv.value == pytest.approx(enum.value, abs=1e-3)
        assert adv.witness_h_prime.c == pytest.approx(0.0, abs=1e-6)


def test_enumeration_requires_enumerable():
    P = HypothesisClass.from_config({"class": "mlp", "in_dim": 1, "hidden": 2})
    pair = threshold_domains()
    with pytest.raises(TypeError):
        fdd(Threshold(0.5), P, pair.target, pair.source, KL)


def test_finite_index_hypothesis():
    h = FiniteIndex([0, 1, 1], index=2)
    assert h.predict([0, 1, 2]).tolist() == [0, 1, 1]
