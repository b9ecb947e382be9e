import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from fddlab.phi_kernel import DiscreteDistribution, DomainError, exact_f_divergence, make_phi
from fddlab.search import UnboundedObjective
from fddlab.variational import (
    WitnessValues,
    estimate,
    infimal_term,
    log_mean_exp,
    lt_objective,
    optimal_t_chi2,
    optimal_t_kl_approx,
    scaled_objective,
    shifted_gradients,
    shifted_objective,
)

probs = st.lists(st.floats(0.05, 1.0), min_size=2, max_size=6)


def _norm(v):
    v = np.asarray(v, dtype=float)
    return v / v.sum()


@settings(max_examples=60, deadline=None)
@given(probs, st.data())
def test_shifted_dominates_lt_and_bounded_by_divergence(p, data):
    k = len(p)
    q = data.draw(st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k))
    g = data.draw(st.lists(st.floats(-2.0, 2.0), min_size=k, max_size=k))
    P, Q = _norm(p), _norm(q)
    w = WitnessValues(g, g, P, Q)
    for kind in ("kl", "chi2"):
        phi = make_phi(kind)
        exact = exact_f_divergence(DiscreteDistribution.on_range(P), DiscreteDistribution.on_range(Q), phi)
        lt = lt_objective(w, phi)
        sh = shifted_objective(w, phi).value
        assert sh >= lt - 1e-12
        assert sh <= exact + 1e-9


def test_dv_form():
    rng = np.random.default_rng(3)
    g = rng.normal(size=7)
    P, Q = _norm(rng.random(7)), _norm(rng.random(7))
    w = WitnessValues(g, g, P, Q)
    direct = P @ g - math.log(Q @ np.exp(g))
    assert shifted_objective(w, make_phi("kl")).value == pytest.approx(direct, abs=1e-12)


def test_optimal_witness_attains_divergence():
    P, Q = np.array([0.2, 0.5, 0.3]), np.array([0.4, 0.4, 0.2])
    g = np.log(P / Q)  # DV optimum
    w = WitnessValues(g, g, P, Q)
    exact = exact_f_divergence(DiscreteDistribution.on_range(P), DiscreteDistribution.on_range(Q), make_phi("kl"))
    assert shifted_objective(w, make_phi("kl")).value == pytest.approx(exact, abs=1e-12)
    g2 = 2 * (P / Q - 1)  # chi-square optimum
    w2 = WitnessValues(g2, g2, P, Q)
    exact2 = exact_f_divergence(DiscreteDistribution.on_range(P), DiscreteDistribution.on_range(Q), make_phi("chi2"))
    assert lt_objective(w2, make_phi("chi2")) == pytest.approx(exact2, abs=1e-12)


def test_chi2_shifted_closed_form_and_alpha():
    rng = np.random.default_rng(0)
    g = rng.normal(size=5)
    P, Q = _norm(rng.random(5)), _norm(rng.random(5))
    w = WitnessValues(g, g, P, Q)
    r = shifted_objective(w, make_phi("chi2"))
    var = Q @ (g - Q @ g) ** 2
    assert r.value == pytest.approx(P @ g - Q @ g - var / 4, abs=1e-12)
    assert r.alpha_star == pytest.approx(-(Q @ g))


@pytest.mark.parametrize("kind", ["kl", "chi2"])
def test_numeric_infimum_matches_closed_form(kind):
    phi = make_phi(kind)
    rng = np.random.default_rng(1)
    g = rng.normal(size=6)
    Q = _norm(rng.random(6))
    assert infimal_term(g, Q, phi, closed_form=False)[0] == pytest.approx(infimal_term(g, Q, phi)[0], abs=1e-8)


def test_reverse_kl_both_routes_attain_divergence():
    # closed form is the log-moment form with the roles of P and Q swapped,
    # the numeric route is the conjugate form; their optimal witnesses differ
    P, Q = np.array([0.2, 0.5, 0.3]), np.array([0.4, 0.4, 0.2])
    phi = make_phi("reverse_kl")
    exact = exact_f_divergence(DiscreteDistribution.on_range(P), DiscreteDistribution.on_range(Q), phi)
    g_dv = np.log(Q / P)
    assert shifted_objective(WitnessValues(g_dv, g_dv, P, Q), phi).value == pytest.approx(exact, abs=1e-12)
    g_lt = -Q / P  # phi'(dP/dQ)
    num = shifted_objective(WitnessValues(g_lt, g_lt, P, Q), phi, closed_form=False).value
    assert num == pytest.approx(exact, abs=1e-7)
    rng = np.random.default_rng(5)
    for _ in range(20):
        g = rng.normal(size=3) - 2.0
        w = WitnessValues(g, g, P, Q)
        assert shifted_objective(w, phi).value <= exact + 1e-9
        assert shifted_objective(w, phi, closed_form=False).value <= exact + 1e-7


def test_scaled_chi2_closed_form():
    g = np.array([0.0, 1.0])
    w = WitnessValues(g, g, [0.5, 0.5], [0.75, 0.25])
    r = scaled_objective(w, make_phi("chi2"))
    dE, var = 0.25, 0.1875
    assert r.value == pytest.approx(dE**2 / var, abs=1e-10)
    assert r.t_star == pytest.approx(optimal_t_chi2(0.5, 0.25, var), abs=1e-6)


def test_scaled_t_ranges():
    g = np.array([0.0, 1.0])
    w = WitnessValues(g, g, [0.75, 0.25], [0.5, 0.5])  # target mean below source mean
    phi = make_phi("kl")
    full = scaled_objective(w, phi, "all")
    assert full.t_star < 0 and full.value > 0
    nn = scaled_objective(w, phi, "nonneg")
    assert nn.value == 0.0 and nn.t_star == 0.0
    fixed = scaled_objective(w, phi, "fixed:1")
    assert fixed.t_star == 1.0
    assert fixed.value == pytest.approx(shifted_objective(w, phi).value)


def test_scaled_detects_unbounded():
    # target puts mass where the source has none -> t grows without bound
    g = np.array([0.0, 1.0])
    w = WitnessValues(g, g, [0.5, 0.5], [1.0, 0.0])
    with pytest.raises(UnboundedObjective):
        scaled_objective(w, make_phi("kl"))


def test_jeffreys_composite_sums_components():
    rng = np.random.default_rng(4)
    g = rng.normal(size=4)
    P, Q = _norm(rng.random(4)), _norm(rng.random(4))
    w = WitnessValues(g, g, P, Q)
    j = shifted_objective(w, make_phi("jeffreys:0.3,0.7"))
    fwd = shifted_objective(w, make_phi("kl")).value
    rev = shifted_objective(w.negated(), make_phi("reverse_kl")).value
    assert j.value == pytest.approx(0.3 * fwd + 0.7 * rev)
    assert len(j.components) == 2


def test_lt_domain_violation():
    w = WitnessValues([0.5], [0.5])
    with pytest.raises(DomainError):
        lt_objective(w, make_phi("reverse_kl"))


@pytest.mark.parametrize("kind", ["kl", "chi2", "reverse_kl", "jeffreys:0.5,0.5"])
def test_shifted_gradients_finite_difference(kind):
    phi = make_phi(kind)
    rng = np.random.default_rng(7)
    gp, gq = rng.normal(size=5) * 0.5, rng.normal(size=4) * 0.5
    if kind == "reverse_kl":
        gp, gq = gp - 2, gq - 2
    wp, wq = _norm(rng.random(5)), _norm(rng.random(4))
    v, dp, dq = shifted_gradients(WitnessValues(gp, gq, wp, wq), phi)
    eps = 1e-6
    for i in range(5):
        e = np.zeros(5)
        e[i] = eps
        fd = (shifted_objective(WitnessValues(gp + e, gq, wp, wq), phi).value
              - shifted_objective(WitnessValues(gp - e, gq, wp, wq), phi).value) / (2 * eps)
        assert dp[i] == pytest.approx(fd, rel=1e-5, abs=1e-8)
    for i in range(4):
        e = np.zeros(4)
        e[i] = eps
        fd = (shifted_objective(WitnessValues(gp, gq + e, wp, wq), phi).value
              - shifted_objective(WitnessValues(gp, gq - e, wp, wq), phi).value) / (2 * eps)
        assert dq[i] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_optimal_t_kl_approx_is_newton_step():
    lt, ls = np.array([0.2, 0.9, 0.4]), np.array([0.1, 0.3, 0.5, 0.2])
    t = optimal_t_kl_approx(lt, ls)

    def F(s):
        return s * lt.mean() - (logsumexp(s * ls) - math.log(len(ls)))

    h = 1e-4
    d1 = (F(1 + h) - F(1 - h)) / (2 * h)
    d2 = (F(1 + h) - 2 * F(1) + F(1 - h)) / h**2
    assert t == pytest.approx(1 - d1 / d2, rel=1e-4)


def test_optimal_t_degenerate():
    with pytest.raises(ValueError):
        optimal_t_kl_approx([0.3, 0.3], [0.5, 0.5])
    with pytest.raises(ValueError):
        optimal_t_chi2(0.5, 0.2, 0.0)


def test_log_mean_exp_matches_scipy():
    rng = np.random.default_rng(2)
    v = rng.normal(size=20) * 30
    w = _norm(rng.random(20))
    assert log_mean_exp(v, w) == pytest.approx(logsumexp(v, b=w), abs=1e-12)
    w[3] = 0.0
    v[3] = 1e6  # masked atom must not dominate
    assert log_mean_exp(v, w / w.sum()) < 1e3


def test_witness_validation_and_roundtrip():
    with pytest.raises(ValueError):
        WitnessValues([1.0, 2.0], [1.0], [0.3, 0.3])
    w = WitnessValues([1.0, 2.0], [0.0], [0.25, 0.75])
    assert WitnessValues.from_dict(w.to_dict()).to_dict() == w.to_dict()


def test_estimate_dispatch():
    w = WitnessValues([0.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.75, 0.25])
    assert estimate(w, "kl", "lt").method == "lt"
    assert estimate(w, "kl", "shifted").value >= estimate(w, "kl", "lt").value
    with pytest.raises(ValueError):
        estimate(w, "kl", "bogus")
