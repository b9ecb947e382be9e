"""Hypothesis-class discrepancies between a source ``mu`` and a target ``nu``.

* ``absolute_fdd``   ``sup_h' |E_mu[l(h,h')] - I_nu(l o h')|``
* ``fdd``            ``sup_{h',t} t E_nu[l(h,h')] - I_mu(t l o h')``
* ``localized_fdd``  the same with ``h'`` restricted to a Rashomon set

``I_mu(f) = inf_a E_mu[phi*(f + a)] - a`` is the shifted inner term.  The
enumeration backend scans an explicit list of ``h'``; the adversarial backend
runs projected gradient ascent on a parametric ``h'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .datasets import risk
from .hypotheses import ZERO_ONE, HypothesisClass, LossFunction, MLP, Threshold, pair_loss_vjp
from .phi_kernel import PhiSpec
from .search import UnboundedObjective, golden_section
from .variational import (
    T_BRACKET,
    WitnessValues,
    infimal_term,
    scaled_objective,
    shifted_gradients,
    shifted_objective,
)

RASHOMON_TOL = 1e-12


@dataclass
class DiscrepancyEstimate:
    value: float
    witness_index: int | None
    witness_h_prime: object
    t_star: float | None
    alpha_star: float | None
    family: str
    backend: str = "enumerate"
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        w = self.witness_h_prime
        return {
            "value": self.value,
            "family": self.family,
            "backend": self.backend,
            "witness_index": self.witness_index,
            "witness_h_prime": w.describe() if hasattr(w, "describe") else None,
            "t_star": self.t_star,
            "alpha_star": self.alpha_star,
            **self.details,
        }


@dataclass
class RashomonSet:
    level_r: float
    member_indices: list
    H: HypothesisClass
    risks: np.ndarray
    min_risk: float

    @property
    def empty(self) -> bool:
        return not self.member_indices

    @property
    def members(self) -> list:
        return [self.H[i] for i in self.member_indices]

    def __len__(self) -> int:
        return len(self.member_indices)

    def as_class(self) -> HypothesisClass:
        return self.H.subset(self.member_indices)

    def to_dict(self) -> dict:
        return {"level_r": self.level_r, "member_indices": self.member_indices,
                "size": len(self), "min_risk": self.min_risk}


def loss_witness(h, h2, nu, mu, loss: LossFunction = ZERO_ONE) -> WitnessValues:
    """The witness ``l(h, h')`` with ``P = nu`` and ``Q = mu``."""
    vp, wp = nu.law(h, h2, loss)
    vq, wq = mu.law(h, h2, loss)
    return WitnessValues(vp, vq, wp, wq)


def _indexed(H) -> list:
    if isinstance(H, RashomonSet):
        if H.empty:
            raise ValueError(f"empty Rashomon set at r={H.level_r} (min risk {H.min_risk})")
        return list(zip(H.member_indices, H.members))
    if isinstance(H, HypothesisClass):
        if not H.enumerable:
            raise TypeError("parametric classes need the adversarial backend")
        return list(enumerate(H))
    return list(enumerate(H))


def _loss_of(H, loss):
    if loss is not None:
        return loss
    if isinstance(H, RashomonSet):
        return H.H.loss
    return getattr(H, "loss", ZERO_ONE)


def absolute_fdd(h, H, mu, nu, phi: PhiSpec, loss: LossFunction | None = None) -> DiscrepancyEstimate:
    """Absolute discrepancy from ``mu`` to ``nu`` (no scaling)."""
    loss = _loss_of(H, loss)
    best = None
    for i, h2 in _indexed(H):
        g = loss_witness(h, h2, mu, nu, loss)  # P = mu, Q = nu
        r = shifted_objective(g, phi)
        v = abs(r.value)
        if best is None or v > best[0]:
            best = (v, i, h2, r)
    v, i, h2, r = best
    return DiscrepancyEstimate(v, i, h2, None, r.alpha_star, "absolute",
                               details={"signed_value": r.value})


def fdd(h, H, nu, mu, phi: PhiSpec, t_range="all", loss: LossFunction | None = None) -> DiscrepancyEstimate:
    """f-DD by exhaustive scan; ties go to the lowest index."""
    loss = _loss_of(H, loss)
    best = None
    for i, h2 in _indexed(H):
        g = loss_witness(h, h2, nu, mu, loss)
        try:
            r = scaled_objective(g, phi, t_range)
        except UnboundedObjective as exc:
            raise UnboundedObjective(f"scale t unbounded for h' index {i}", exc.bracket) from None
        if best is None or r.value > best[0]:
            best = (r.value, i, h2, r)
    v, i, h2, r = best
    details = {"t_range": t_range if isinstance(t_range, str) else list(t_range)}
    if r.components:
        details["components"] = [dict(c) for c in r.components]
    return DiscrepancyEstimate(v, i, h2, r.t_star, r.alpha_star, "fdd", details=details)


def rashomon(H: HypothesisClass, mu, r: float, loss: LossFunction | None = None) -> RashomonSet:
    """``{h in H : R_mu(h) <= r}``; an empty result carries the minimal risk."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    loss = loss or H.loss
    risks = np.array([risk(h, mu, loss) for h in H])
    idx = [int(i) for i in np.flatnonzero(risks <= r + RASHOMON_TOL)]
    return RashomonSet(float(r), idx, H, risks, float(risks.min()))


def localized_fdd(
    h,
    rset: RashomonSet,
    nu,
    mu,
    phi: PhiSpec,
    t_range="all",
    r1: float | None = None,
    loss: LossFunction | None = None,
) -> DiscrepancyEstimate:
    """f-DD over the Rashomon set.

    ``t_range`` defaults to all reals; pass ``"nonneg"`` for the
    nonnegative-scale convention.  With ``r1`` the source risk of ``h`` is
    checked first.
    """
    loss = _loss_of(rset, loss)
    if r1 is not None:
        rh = risk(h, mu, loss)
        if rh > r1 + RASHOMON_TOL:
            raise ValueError(f"h has source risk {rh} > r1 = {r1}")
    est = fdd(h, rset, nu, mu, phi, t_range, loss)
    est.family = "localized"
    est.details["level_r"] = rset.level_r
    return est


def sup_source_disagreement(h, rset: RashomonSet, mu, loss: LossFunction | None = None) -> tuple[float, int]:
    """``sup_{h' in H_r} E_mu[l(h, h')]`` and the maximizing index."""
    loss = _loss_of(rset, loss)
    best = None
    for i, h2 in _indexed(rset):
        vals, w = mu.law(h, h2, loss)
        v = float(w @ vals)
        if best is None or v > best[0]:
            best = (v, i)
    return best


@dataclass
class CumulantProfile:
    """``K_{h',mu}(t) = I_mu(t l) - t E_mu[l]`` per member and its upper envelope."""

    laws: list  # (index, values, weights)
    phi: PhiSpec

    def per_hypothesis(self, j: int, t: float) -> float:
        _, vals, w = self.laws[j]
        inf, _ = infimal_term(t * vals, w, self.phi)
        return inf - t * float(w @ vals)

    def envelope(self, t: float) -> float:
        return max(self.per_hypothesis(j, t) for j in range(len(self.laws)))

    def means(self) -> np.ndarray:
        return np.array([float(w @ v) for _, v, w in self.laws])

    def variances(self) -> np.ndarray:
        out = []
        for _, v, w in self.laws:
            m = float(w @ v)
            out.append(float(w @ (v - m) ** 2))
        return np.array(out)

    @property
    def indices(self) -> list:
        return [i for i, _, _ in self.laws]


def cumulant_profile(h, H, mu, phi: PhiSpec, loss: LossFunction | None = None) -> CumulantProfile:
    if phi.composite:
        raise ValueError("cumulant profiles are defined for single kernels")
    loss = _loss_of(H, loss)
    laws = []
    for i, h2 in _indexed(H):
        vals, w = mu.law(h, h2, loss)
        laws.append((i, np.asarray(vals, dtype=float), np.asarray(w, dtype=float)))
    return CumulantProfile(laws, phi)


# ---------------------------------------------------------------------------
# adversarial backend
# ---------------------------------------------------------------------------


def _best_t(g: WitnessValues, phi: PhiSpec, t_range) -> float:
    r = scaled_objective(g, phi, t_range)
    return float(r.t_star)


@dataclass
class ThresholdFamily:
    """Continuous thresholds ``h_c``, ``c in [lo, hi]``, on analytic interval domains."""

    lo: float
    hi: float

    def witness(self, h: Threshold, c: float, nu, mu, loss) -> WitnessValues:
        return loss_witness(h, Threshold(c), nu, mu, loss)

    def grad(self, h: Threshold, c: float, t: float, nu, mu, loss, phi: PhiSpec) -> float:
        """d/dc of ``t E_nu[l] - I_mu(t l)`` at fixed ``t``."""
        v = float(loss(np.array([0.0]), np.array([1.0]))[0])
        qn = nu.interval_mass(h.c, c)
        qm = mu.interval_mass(h.c, c)
        sgn = 1.0 if c > h.c else -1.0
        dqn = sgn * nu.density if nu.lo < c < nu.hi else 0.0
        dqm = sgn * mu.density if mu.lo < c < mu.hi else 0.0

        def inner(q):
            q = min(max(q, 0.0), 1.0)
            return infimal_term(np.array([0.0, t * v]), np.array([1.0 - q, q]), phi)[0]

        eps = 1e-7
        dI = (inner(qm + eps) - inner(qm - eps)) / (2 * eps)
        return t * v * dqn - dI * dqm

    def project(self, c: float) -> float:
        return min(max(c, self.lo), self.hi)


def adversarial_fdd(
    h,
    family,
    nu,
    mu,
    phi: PhiSpec,
    t_range="all",
    loss: LossFunction = ZERO_ONE,
    init=None,
    outer_steps: int = 400,
    inner_steps: int = 5,
    lr: float = 0.01,
    seed: int = 0,
) -> DiscrepancyEstimate:
    """Alternating ascent: ``inner_steps`` gradient steps on ``h'`` then a refresh of ``t``.

    ``family`` is a :class:`ThresholdFamily` (analytic domains) or an
    :class:`~fddlab.hypotheses.MLP` template used on sampled domains.
    """
    if isinstance(family, ThresholdFamily):
        rng = np.random.default_rng(seed)
        c = family.project(init if init is not None else rng.uniform(family.lo, family.hi))
        # start from the best scale for the initial witness; t = 1 can point the ascent the wrong way
        t = _best_t(family.witness(h, c, nu, mu, loss), phi, t_range)
        for _ in range(outer_steps):
            for _ in range(inner_steps):
                c = family.project(c + lr * family.grad(h, c, t, nu, mu, loss, phi))
            t = _best_t(family.witness(h, c, nu, mu, loss), phi, t_range)
        r = scaled_objective(family.witness(h, c, nu, mu, loss), phi, t_range)
        return DiscrepancyEstimate(r.value, None, Threshold(c), r.t_star, r.alpha_star, "fdd", "adversarial")
    if isinstance(family, MLP):
        return _adversarial_mlp(h, family, nu, mu, phi, t_range, loss, outer_steps, inner_steps, lr)
    raise TypeError(f"unsupported adversarial family {type(family).__name__}")


def _adversarial_mlp(h, h2: MLP, nu, mu, phi, t_range, loss, outer_steps, inner_steps, lr):
    h2 = MLP(h2.W1.copy(), h2.b1.copy(), h2.W2.copy(), h2.b2.copy())
    Xn, Xm = nu.X, mu.X

    def witness():
        return WitnessValues(loss.pointwise(h, h2, Xn), loss.pointwise(h, h2, Xm))

    t = _best_t(witness(), phi, t_range)
    for _ in range(outer_steps):
        for _ in range(inner_steps):
            _, dP, dQ = shifted_gradients(witness().scaled(t), phi)
            _, _, gn = pair_loss_vjp(h, h2, Xn, loss, t * dP)
            _, _, gm = pair_loss_vjp(h, h2, Xm, loss, t * dQ)
            for k in ("W1", "b1", "W2", "b2"):
                setattr(h2, k, getattr(h2, k) + lr * (gn[k] + gm[k]))
        t = _best_t(witness(), phi, t_range)
    r = scaled_objective(witness(), phi, t_range)
    return DiscrepancyEstimate(r.value, None, h2, r.t_star, r.alpha_star, "fdd", "adversarial")


def grid_scan(f: Callable[[float], float], lo: float, hi: float, n: int = 101) -> tuple[float, float]:
    """Max of ``f`` on an equispaced grid; a brute-force oracle helper."""
    xs = np.linspace(lo, hi, n)
    vals = np.array([f(x) for x in xs])
    i = int(np.argmax(vals))
    return float(vals[i]), float(xs[i])
