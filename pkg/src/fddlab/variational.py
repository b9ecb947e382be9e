"""Variational lower bounds on f-divergences evaluated at a fixed witness.

Three objectives are provided for a witness ``g`` evaluated under ``P`` and
``Q``:

* ``lt_objective``      ``E_P[g] - E_Q[phi*(g)]``
* ``shifted_objective`` ``E_P[g] - inf_a {E_Q[phi*(g + a)] - a}``
* ``scaled_objective``  ``sup_t`` of the shifted objective at ``t * g``

For ``kl`` the shifted objective is the Donsker-Varadhan form
``E_P[g] - log E_Q[exp g]``; for ``chi2`` it is
``E_P[g] - E_Q[g] - Var_Q(g) / 4``.

``reverse_kl`` is handled in log-parameterization: its shifted and scaled
objectives read the witness ``g`` as ``log(-w)`` of the raw conjugate argument
``w < 0``, which turns the shifted form into ``E_Q[g] - log E_P[exp g]``.
``lt_objective`` always takes the raw witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .phi_kernel import PhiSpec, make_phi
from .search import SearchError, expanding_golden

T_BRACKET = (-50.0, 50.0)
ALPHA_BRACKET = (-10.0, 10.0)


def _as_weights(w, n: int, what: str) -> np.ndarray:
    if w is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"{what}: expected {n} weights, got shape {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"{what}: weights must be a probability vector")
    return w


@dataclass(frozen=True)
class WitnessValues:
    """A witness evaluated on the atoms (or samples) of ``P`` and ``Q``."""

    on_P: np.ndarray
    on_Q: np.ndarray
    weights_P: np.ndarray
    weights_Q: np.ndarray

    def __init__(self, on_P, on_Q, weights_P=None, weights_Q=None):
        on_P = np.atleast_1d(np.asarray(on_P, dtype=float))
        on_Q = np.atleast_1d(np.asarray(on_Q, dtype=float))
        if on_P.size == 0 or on_Q.size == 0:
            raise ValueError("witness needs at least one value under each measure")
        object.__setattr__(self, "on_P", on_P)
        object.__setattr__(self, "on_Q", on_Q)
        object.__setattr__(self, "weights_P", _as_weights(weights_P, on_P.size, "weights_P"))
        object.__setattr__(self, "weights_Q", _as_weights(weights_Q, on_Q.size, "weights_Q"))

    def scaled(self, t: float) -> "WitnessValues":
        return WitnessValues(t * self.on_P, t * self.on_Q, self.weights_P, self.weights_Q)

    def negated(self) -> "WitnessValues":
        return self.scaled(-1.0)

    def swapped(self) -> "WitnessValues":
        return WitnessValues(self.on_Q, self.on_P, self.weights_Q, self.weights_P)

    @property
    def mean_P(self) -> float:
        return float(self.weights_P @ self.on_P)

    @property
    def mean_Q(self) -> float:
        return float(self.weights_Q @ self.on_Q)

    @property
    def var_Q(self) -> float:
        d = self.on_Q - self.mean_Q
        return float(self.weights_Q @ (d * d))

    @classmethod
    def from_dict(cls, d: dict) -> "WitnessValues":
        return cls(d["on_P"], d["on_Q"], d.get("weights_P"), d.get("weights_Q"))

    def to_dict(self) -> dict:
        return {
            "on_P": self.on_P.tolist(),
            "on_Q": self.on_Q.tolist(),
            "weights_P": self.weights_P.tolist(),
            "weights_Q": self.weights_Q.tolist(),
        }


@dataclass(frozen=True)
class VariationalResult:
    value: float
    alpha_star: float | None
    t_star: float | None
    method: str
    components: tuple = field(default=())

    def to_dict(self) -> dict:
        d = {
            "value": self.value,
            "alpha_star": self.alpha_star,
            "t_star": self.t_star,
            "method": self.method,
        }
        if self.components:
            d["components"] = [dict(c) for c in self.components]
        return d


def log_mean_exp(values, weights) -> float:
    """``log sum_i w_i exp(v_i)``, stabilized by the largest supported value.

    Hot path of every scale search; scipy's ``logsumexp`` carries enough
    per-call overhead to dominate the threshold-class scans.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    live = weights > 0
    m = float(values[live].max())
    if not math.isfinite(m):
        return m
    return m + math.log(float(weights[live] @ np.exp(values[live] - m)))


def lt_objective(g: WitnessValues, phi: PhiSpec) -> float:
    """``E_P[g] - E_Q[phi*(g)]``; the raw witness must lie in phi*'s domain on Q."""
    if phi.composite:
        (g1, kl), (g2, _) = phi.components
        fwd = lt_objective(g, kl) if g1 else 0.0
        rev = lt_objective(g.swapped().negated(), kl) if g2 else 0.0
        return g1 * fwd + g2 * rev
    phi.check_domain(g.on_Q, where="witness on Q")
    return g.mean_P - float(g.weights_Q @ phi.phi_star(g.on_Q))


def infimal_term(values, weights, phi: PhiSpec, *, closed_form: bool = True) -> tuple[float, float]:
    """``inf_a {E[phi*(v + a)] - a}`` and its minimizer.

    Closed forms are used for ``kl`` and ``chi2``; otherwise the convex map in
    ``a`` is minimized by golden section, with the bracket clamped to the
    conjugate domain.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if closed_form and phi.kind == "kl":
        lme = log_mean_exp(values, weights)
        return lme, -lme
    if closed_form and phi.kind == "chi2":
        m = float(weights @ values)
        d = values - m
        return float(weights @ (d * d)) / 4.0 + m, -m
    if phi.composite:
        raise ValueError("the infimal term of a composite kernel is not defined; use its components")

    lo_dom, hi_dom = phi.conjugate_domain
    upper = None if math.isinf(hi_dom) else hi_dom - float(values.max()) - 1e-12
    lower = None if math.isinf(lo_dom) else lo_dom - float(values.min()) + 1e-12

    def obj(a):
        return float(weights @ phi._phi_star(values + a)) - a

    lo, hi = ALPHA_BRACKET
    if upper is not None and upper <= lo:
        lo = upper - (hi - lo)
    res = expanding_golden(obj, lo, hi, lower_limit=lower, upper_limit=upper)
    return res.value, res.x


def shifted_objective(g: WitnessValues, phi: PhiSpec, *, closed_form: bool = True) -> VariationalResult:
    """``E_P[g] - inf_a {E_Q[phi*(g + a)] - a}`` with the minimizing shift."""
    if phi.composite:
        (g1, kl), (g2, rkl) = phi.components
        fwd = shifted_objective(g, kl) if g1 else None
        rev = shifted_objective(g.negated(), rkl) if g2 else None
        value = (g1 * fwd.value if fwd else 0.0) + (g2 * rev.value if rev else 0.0)
        comps = tuple(
            (("kind", k), ("weight", w), ("value", r.value), ("alpha_star", r.alpha_star))
            for k, w, r in (("kl", g1, fwd), ("reverse_kl", g2, rev))
            if r is not None
        )
        return VariationalResult(value, fwd.alpha_star if fwd else None, None, "shifted", comps)
    if phi.kind == "reverse_kl" and closed_form:
        lme = log_mean_exp(g.on_P, g.weights_P)
        return VariationalResult(g.mean_Q - lme, -lme, None, "shifted")
    inf, alpha = infimal_term(g.on_Q, g.weights_Q, phi, closed_form=closed_form)
    return VariationalResult(g.mean_P - inf, alpha, None, "shifted")


def _parse_t_range(t_range) -> tuple[str, float | None]:
    if isinstance(t_range, tuple):
        kind, t = t_range
        return kind, float(t)
    if isinstance(t_range, str):
        s = t_range.strip().lower()
        if s in ("all", "all_reals"):
            return "all", None
        if s == "nonneg":
            return "nonneg", None
        if s.startswith("fixed:"):
            return "fixed", float(s.split(":", 1)[1])
    raise ValueError(f"bad t_range {t_range!r}; use 'all', 'nonneg' or 'fixed:<t>'")


def scaled_objective(
    g: WitnessValues, phi: PhiSpec, t_range="all", *, closed_form: bool = True
) -> VariationalResult:
    """``sup_t`` of the shifted objective at ``t * g`` over the requested range.

    The map ``t -> value`` is concave, so golden section over an expanding
    bracket finds the maximizer.  If the maximizer keeps escaping the bracket
    the objective is unbounded and :class:`~fddlab.search.UnboundedObjective`
    propagates.
    """
    kind, t_fixed = _parse_t_range(t_range)
    if phi.composite:
        (g1, kl), (g2, rkl) = phi.components
        parts = []
        if g1:
            parts.append(("kl", g1, scaled_objective(g, kl, t_range, closed_form=closed_form)))
        if g2:
            parts.append(("reverse_kl", g2, scaled_objective(g.negated(), rkl, t_range)))
        value = sum(w * r.value for _, w, r in parts)
        comps = tuple(
            (("kind", k), ("weight", w), ("value", r.value), ("t_star", r.t_star), ("alpha_star", r.alpha_star))
            for k, w, r in parts
        )
        first = parts[0][2]
        return VariationalResult(value, first.alpha_star, first.t_star, "scaled", comps)

    def at(t):
        return shifted_objective(g.scaled(t), phi, closed_form=closed_form)

    def value_at(t):
        # same as at(t).value without rebuilding the witness
        if phi.kind == "reverse_kl" and closed_form:
            return t * g.mean_Q - log_mean_exp(t * g.on_P, g.weights_P)
        return t * g.mean_P - infimal_term(t * g.on_Q, g.weights_Q, phi, closed_form=closed_form)[0]

    if kind == "fixed":
        r = at(t_fixed)
        return VariationalResult(r.value, r.alpha_star, t_fixed, "scaled")
    lower = 0.0 if kind == "nonneg" else None
    res = expanding_golden(value_at, *T_BRACKET, maximize=True, lower_limit=lower)
    r = at(res.x)
    if kind == "nonneg" and r.value < 0.0:
        # t = 0 is always feasible with value exactly 0
        r, res_x = at(0.0), 0.0
    else:
        res_x = res.x
    return VariationalResult(r.value, r.alpha_star, res_x, "scaled")


def shifted_gradients(g: WitnessValues, phi: PhiSpec) -> tuple[float, np.ndarray, np.ndarray]:
    """Value of the shifted objective and its gradient w.r.t. ``on_P`` and ``on_Q``.

    By the envelope theorem the optimal shift can be held fixed.
    """
    if phi.composite:
        (g1, kl), (g2, rkl) = phi.components
        v, dp, dq = 0.0, np.zeros_like(g.on_P), np.zeros_like(g.on_Q)
        if g1:
            a, b, c = shifted_gradients(g, kl)
            v, dp, dq = v + g1 * a, dp + g1 * b, dq + g1 * c
        if g2:
            a, b, c = shifted_gradients(g.negated(), rkl)
            v, dp, dq = v + g2 * a, dp - g2 * b, dq - g2 * c
        return v, dp, dq
    if phi.kind == "reverse_kl":
        lme = log_mean_exp(g.on_P, g.weights_P)
        soft = g.weights_P * np.exp(g.on_P - lme)
        return g.mean_Q - lme, -soft, g.weights_Q.copy()
    inf, alpha = infimal_term(g.on_Q, g.weights_Q, phi)
    dq = -g.weights_Q * phi._phi_star_prime(g.on_Q + alpha)
    return g.mean_P - inf, g.weights_P.copy(), dq


def optimal_t_kl_approx(
    loss_on_target: Sequence[float],
    loss_on_source: Sequence[float],
    weights_target=None,
    weights_source=None,
) -> float:
    """Quadratic approximation ``1 + dt`` of the optimal KL scale.

    ``dt = (E_target[l] - E_gibbs[l]) / Var_gibbs(l)`` where the Gibbs law
    reweights the source by ``exp(l)``.
    """
    lt = np.asarray(loss_on_target, dtype=float)
    ls = np.asarray(loss_on_source, dtype=float)
    wt = _as_weights(weights_target, lt.size, "weights_target")
    ws = _as_weights(weights_source, ls.size, "weights_source")
    if not np.all(np.isfinite(ls)):
        raise ValueError("source losses must be finite")
    logw = np.log(np.where(ws > 0, ws, 1.0)) + ls
    logw[ws <= 0] = -np.inf
    gibbs = np.exp(logw - logsumexp(logw))
    m = float(gibbs @ ls)
    var = float(gibbs @ (ls - m) ** 2)
    if var <= 1e-12:
        raise ValueError(f"degenerate variance {var!r} under the Gibbs-reweighted source")
    return 1.0 + (float(wt @ lt) - m) / var


def optimal_t_chi2(mean_target: float, mean_source: float, var_source: float) -> float:
    """Maximizing scale of the chi-square shifted objective."""
    if not var_source > 0:
        raise ValueError(f"zero variance: var_source={var_source!r}")
    return 2.0 * (mean_target - mean_source) / var_source


def estimate(g: WitnessValues, phi: PhiSpec | str, method: str = "shifted", t_range="all") -> VariationalResult:
    """Dispatch on ``method`` in {lt, shifted, scaled}."""
    if isinstance(phi, str):
        phi = make_phi(phi)
    if method == "lt":
        return VariationalResult(lt_objective(g, phi), 0.0, None, "lt")
    if method == "shifted":
        return shifted_objective(g, phi)
    if method == "scaled":
        return scaled_objective(g, phi, t_range)
    raise ValueError(f"unknown method {method!r}")


__all__ = [
    "WitnessValues",
    "VariationalResult",
    "SearchError",
    "lt_objective",
    "infimal_term",
    "shifted_objective",
    "scaled_objective",
    "shifted_gradients",
    "optimal_t_kl_approx",
    "optimal_t_chi2",
    "estimate",
    "log_mean_exp",
]
