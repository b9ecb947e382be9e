import math

import numpy as np
import pytest

from fddlab.phi_kernel import (
    AbsoluteContinuityError,
    DiscreteDistribution,
    DomainError,
    exact_f_divergence,
    make_phi,
)


@pytest.mark.parametrize("kind", ["kl", "reverse_kl", "chi2"])
def test_generator_vanishes_at_one(kind):
    assert float(make_phi(kind).phi(1.0)) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("kind,ys", [("kl", [-3.0, 0.0, 2.0]), ("chi2", [-3.0, 0.0, 2.0]), ("reverse_kl", [-4.0, -1.0, -0.2])])
def test_fenchel_young(kind, ys):
    # phi(x) + phi*(y) >= x y on a grid of x
    phi = make_phi(kind)
    xs = np.linspace(0.01, 5, 200)
    for y in ys:
        gap = phi.phi(xs) + phi.phi_star(y) - xs * y
        assert gap.min() >= -1e-12


def test_conjugate_closed_forms():
    assert make_phi("kl").phi_star(0.7) == pytest.approx(math.exp(0.7) - 1)
    assert make_phi("chi2").phi_star(2.0) == pytest.approx(3.0)
    assert make_phi("reverse_kl").phi_star(-2.0) == pytest.approx(-1 - math.log(2))


def test_reverse_kl_domain_error_names_argument():
    with pytest.raises(DomainError, match="argument"):
        make_phi("reverse_kl").phi_star(np.array([-1.0, 0.5]))


def test_curvature():
    assert make_phi("kl").curvature_at_one == 1.0
    assert make_phi("chi2").curvature_at_one == 2.0


def test_jeffreys_parsing_and_validation():
    j = make_phi("jeffreys:0.25,0.75")
    assert j.composite and j.gammas == (0.25, 0.75)
    assert j.name == "jeffreys:0.25,0.75"
    with pytest.raises(ValueError):
        make_phi("jeffreys", 0.0, 0.0)
    with pytest.raises(ValueError):
        make_phi("jeffreys:1")
    with pytest.raises(ValueError):
        make_phi("hellinger")


def test_exact_divergences_bernoulli():
    P, Q = DiscreteDistribution.bernoulli(0.5), DiscreteDistribution.bernoulli(0.25)
    kl = 0.5 * math.log(0.5 / 0.75) + 0.5 * math.log(0.5 / 0.25)
    assert exact_f_divergence(P, Q, make_phi("kl")) == pytest.approx(kl)
    rkl = 0.75 * math.log(0.75 / 0.5) + 0.25 * math.log(0.25 / 0.5)
    assert exact_f_divergence(P, Q, make_phi("reverse_kl")) == pytest.approx(rkl)
    chi2 = 0.75 * (0.5 / 0.75 - 1) ** 2 + 0.25 * (0.5 / 0.25 - 1) ** 2
    assert exact_f_divergence(P, Q, make_phi("chi2")) == pytest.approx(chi2)
    assert exact_f_divergence(P, Q, make_phi("jeffreys:0.5,0.5")) == pytest.approx(0.5 * kl + 0.5 * rkl)


def test_absolute_continuity():
    P = DiscreteDistribution((0, 1), (0.5, 0.5))
    Q = DiscreteDistribution((0, 1), (1.0, 0.0))
    with pytest.raises(AbsoluteContinuityError):
        exact_f_divergence(P, Q, make_phi("kl"))
    # the other direction is fine
    assert exact_f_divergence(Q, P, make_phi("kl")) == pytest.approx(math.log(2))


def test_mismatched_supports_are_aligned():
    P = DiscreteDistribution(("a", "b"), (0.5, 0.5))
    Q = DiscreteDistribution(("b", "a", "c"), (0.25, 0.25, 0.5))
    assert exact_f_divergence(P, Q, make_phi("kl")) == pytest.approx(math.log(2))


def test_distribution_validation():
    with pytest.raises(ValueError):
        DiscreteDistribution((0, 1), (0.6, 0.6))
    with pytest.raises(ValueError):
        DiscreteDistribution((0, 0), (0.5, 0.5))
    with pytest.raises(ValueError):
        DiscreteDistribution((0, 1), (1.2, -0.2))


def test_lipschitz():
    assert make_phi("kl").lipschitz_on(1.0) == pytest.approx(math.e)
    assert make_phi("chi2").lipschitz_on(1.0) == pytest.approx(1.5)
