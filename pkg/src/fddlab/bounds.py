"""Target-error and generalization bounds assembled into itemized reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from .datasets import risk
from .discrepancy import CumulantProfile, RashomonSet, _indexed
from .hypotheses import ZERO_ONE, LossFunction
from .phi_kernel import PhiSpec
from .search import golden_section
from .variational import T_BRACKET

T_MIN = 1e-8
FASTRATE_BRACKET = (1e-8, 50.0)
CONSTANT_FLAGS = ("exact", "proof_constants", "unit_constants")
SCALAR_KEYS = ("source_risk", "discrepancy_term", "lambda_star", "lambda_star_r", "cross_domain_error")
LIST_KEYS = ("complexity_terms", "confidence_terms", "localization_terms")


@dataclass
class BoundReport:
    """Itemized bound; ``total`` is the sum of every listed component.

    List components are ``(name, value, coefficient_flag)`` triples, where the
    flag says whether the coefficient came from a proof or is a unit
    placeholder for a term stated only up to a constant.
    """

    bound_name: str
    components: dict
    inputs: dict = field(default_factory=dict)
    constants_flag: str = "exact"
    warnings: list = field(default_factory=list)
    total: float = field(init=False)

    def __post_init__(self):
        if self.constants_flag not in CONSTANT_FLAGS:
            raise ValueError(f"unknown constants flag {self.constants_flag!r}")
        delta = self.inputs.get("delta")
        if delta is not None and not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        for k in LIST_KEYS:
            self.components.setdefault(k, [])
            for name, v, _ in self.components[k]:
                if k == "confidence_terms" and v < 0:
                    raise ValueError(f"negative confidence term {name}")
        self.total = math.fsum(self._summands())

    def _summands(self):
        for k in SCALAR_KEYS:
            v = self.components.get(k)
            if v is not None:
                yield float(v)
        for k in LIST_KEYS:
            for _, v, _ in self.components[k]:
                yield float(v)

    @property
    def feasible(self) -> bool:
        return not self.warnings

    def rows(self) -> list[tuple[str, float, str]]:
        out = []
        for k in SCALAR_KEYS:
            v = self.components.get(k)
            if v is not None:
                out.append((k, float(v), self.constants_flag))
        for k in LIST_KEYS:
            for name, v, flag in self.components[k]:
                out.append((f"{k}:{name}", float(v), flag))
        out.append(("total", self.total, self.constants_flag))
        return out

    def to_dict(self) -> dict:
        comps = {k: v for k, v in self.components.items() if k in SCALAR_KEYS}
        for k in LIST_KEYS:
            comps[k] = [{"name": n, "value": v, "coefficient": f} for n, v, f in self.components[k]]
        return {
            "bound_name": self.bound_name,
            "components": comps,
            "total": self.total,
            "inputs": self.inputs,
            "constants_flag": self.constants_flag,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["component", "value", "coefficient"])
        w.writerows(self.rows())
        return buf.getvalue()


# ---------------------------------------------------------------------------
# oracle quantities
# ---------------------------------------------------------------------------


def lambda_star(H, mu, nu, loss: LossFunction | None = None) -> tuple[float, int]:
    """``min_h R_mu(h) + R_nu(h)`` over a class or Rashomon set (oracle labels)."""
    members = _indexed(H)
    if not members:
        raise ValueError("empty class")
    loss = loss or (H.H.loss if isinstance(H, RashomonSet) else getattr(H, "loss", ZERO_ONE))
    best = None
    for i, h in members:
        v = risk(h, mu, loss) + risk(h, nu, loss)
        if best is None or v < best[0]:
            best = (v, i)
    return best


def cross_domain_error(f_mu, f_nu, mu, nu, loss: LossFunction = ZERO_ONE) -> float:
    """``min{R_nu(f_mu), R_mu(f_nu)}``."""
    vn, wn = nu.law(f_mu, f_nu, loss)
    vm, wm = mu.law(f_nu, f_mu, loss)
    return min(float(wn @ vn), float(wm @ vm))


def _joint_term(lambda_star, cross_domain):
    if (lambda_star is None) == (cross_domain is None):
        raise ValueError("give exactly one of lambda_star or cross_domain_error")
    if lambda_star is not None:
        return {"lambda_star": float(lambda_star)}
    return {"cross_domain_error": float(cross_domain)}


# ---------------------------------------------------------------------------
# population target-error bounds
# ---------------------------------------------------------------------------


def target_bound_absolute(source_risk, discrepancy, lambda_star=None, cross_domain_error=None) -> BoundReport:
    comps = {"source_risk": float(source_risk), "discrepancy_term": float(discrepancy)}
    comps.update(_joint_term(lambda_star, cross_domain_error))
    return BoundReport("target_absolute", comps)


def _envelope_fn(cumulant) -> Callable[[float], float]:
    return cumulant.envelope if isinstance(cumulant, CumulantProfile) else cumulant


def general_discrepancy_term(fdd_value: float, cumulant, t_max: float = T_BRACKET[1]) -> tuple[float, float]:
    """``inf_{t > 0} (D + K(t)) / t`` and its minimizer.

    ``K`` is convex with ``K(0) = 0`` so the ratio is unimodal in ``t`` and
    also in ``log t``; a coarse log grid locates the basin and golden
    section refines it.
    """
    K = _envelope_fn(cumulant)
    D = float(fdd_value)

    def ratio_log(s):
        t = math.exp(s)
        return (D + K(t)) / t

    lo, hi = math.log(T_MIN), math.log(t_max)
    grid = np.linspace(lo, hi, 41)
    vals = [ratio_log(s) for s in grid]
    j = int(np.argmin(vals))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    res = golden_section(ratio_log, a, b, tol=1e-10)
    if vals[j] < res.value:
        return float(vals[j]), math.exp(grid[j])
    return float(res.value), math.exp(res.x)


def target_bound_general(
    source_risk, fdd_value, cumulant, lambda_star=None, cross_domain_error=None, t_max: float = T_BRACKET[1]
) -> BoundReport:
    term, t = general_discrepancy_term(fdd_value, cumulant, t_max)
    comps = {"source_risk": float(source_risk), "discrepancy_term": term}
    comps.update(_joint_term(lambda_star, cross_domain_error))
    rep = BoundReport("target_general", comps, inputs={"t_opt": t})
    if t <= T_MIN * 1.0001:
        rep.inputs["t_limit"] = "0+"
    return rep


def target_bound_slow(source_risk, fdd_value, phi: PhiSpec, lambda_star=None, cross_domain_error=None) -> BoundReport:
    if phi.curvature_at_one is None:
        raise ValueError(f"{phi.name} has no curvature at one; the square-root bound needs it")
    term = math.sqrt(2.0 * max(float(fdd_value), 0.0) / phi.curvature_at_one)
    comps = {"source_risk": float(source_risk), "discrepancy_term": term}
    comps.update(_joint_term(lambda_star, cross_domain_error))
    return BoundReport("target_slow", comps, inputs={"curvature_at_one": phi.curvature_at_one})


def localized_condition_slack(cumulant: CumulantProfile, C1: float, C2: float) -> float:
    """``max_h' K_{h',mu}(C1) - C1 C2 E_mu[l]``; nonpositive means feasible."""
    means = cumulant.means()
    return max(cumulant.per_hypothesis(j, C1) - C1 * C2 * means[j] for j in range(len(means)))


def max_feasible_c1(cumulant: CumulantProfile, C2: float, hi: float = 50.0) -> float:
    """Largest ``C1`` meeting the localized cumulant condition over the profile's members.

    The slack is convex in ``C1`` and zero at zero, so the feasible set is an
    interval starting at zero.
    """
    if localized_condition_slack(cumulant, hi, C2) <= 0:
        return hi
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if localized_condition_slack(cumulant, mid, C2) <= 1e-15:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    return lo


def target_bound_localized(
    source_risk,
    localized_value,
    R_sup,
    C1: float,
    C2: float,
    lambda_star_r=None,
    cross_domain_error=None,
    cumulant: CumulantProfile | None = None,
    r: float | None = None,
    r1: float | None = None,
) -> BoundReport:
    if not C1 > 0 or not C2 > 0:
        raise ValueError("C1 and C2 must be positive")
    comps = {
        "source_risk": float(source_risk),
        "discrepancy_term": float(localized_value) / C1,
        "localization_terms": [("C2*R_sup", C2 * float(R_sup), "exact")],
    }
    if lambda_star_r is not None and cross_domain_error is None:
        comps["lambda_star_r"] = float(lambda_star_r)
    else:
        comps.update(_joint_term(None, cross_domain_error))
    warnings = []
    inputs = {"C1": C1, "C2": C2, "r": r, "r1": r1}
    if cumulant is not None:
        slack = localized_condition_slack(cumulant, C1, C2)
        inputs["condition_slack"] = slack
        if slack > 1e-12:
            warnings.append(f"cumulant condition violated at C1={C1}, C2={C2} (slack {slack:.3g})")
    return BoundReport("target_localized", comps, inputs=inputs, warnings=warnings)


@dataclass(frozen=True)
class FastRateConstants:
    m_cap: float
    C2: float
    C1: float | None
    coefficient: float | None
    feasible: bool
    degenerate: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _fastrate_gap(C1: float, m_cap: float, C2: float) -> float:
    return (math.expm1(C1) - C1) * (1.0 - m_cap + C2 * C2 * m_cap) - C1 * C2


def fastrate_constants(m_cap: float, C2: float) -> FastRateConstants:
    """Largest ``C1`` with ``(e^C1 - C1 - 1)(1 - m + C2^2 m) <= C1 C2``.

    The gap is negative just right of zero and convex afterwards, so there
    is exactly one positive root; it is found by bisection.
    """
    if not 0.0 <= m_cap <= 1.0:
        raise ValueError("m_cap must lie in [0, 1]")
    if not 0.0 < C2 < 1.0:
        raise ValueError("C2 must lie in (0, 1)")
    lo, hi = FASTRATE_BRACKET
    g_lo, g_hi = _fastrate_gap(lo, m_cap, C2), _fastrate_gap(hi, m_cap, C2)
    if g_lo >= 0:
        # the root sits below the bracket: C1 -> 0+
        return FastRateConstants(m_cap, C2, lo, 1.0 / lo, True, True)
    if g_hi < 0:
        return FastRateConstants(m_cap, C2, None, None, False, False)
    c1 = bisect(_fastrate_gap, lo, hi, args=(m_cap, C2), xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
    coef = 1.0 / c1
    return FastRateConstants(m_cap, C2, c1, coef, True, coef > 1e6)


def chi2_localized_condition(C1: float, C2: float, var_source, mean_source) -> tuple[bool, float]:
    """Worst-case check of ``C1 Var/4 <= C2 E`` over members; returns (ok, max slack)."""
    var = np.atleast_1d(np.asarray(var_source, dtype=float))
    mean = np.atleast_1d(np.asarray(mean_source, dtype=float))
    slack = C1 * var / 4.0 - C2 * mean
    worst = float(slack.max())
    return worst <= 1e-15, worst


# ---------------------------------------------------------------------------
# Rademacher complexity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RademacherEstimate:
    value: float
    n_draws: int
    seed: int
    std_error: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def rademacher_empirical(values, n_draws: int = 1000, seed: int = 0) -> RademacherEstimate:
    """Monte Carlo ``E_eps sup_f (1/n) sum_i eps_i f(z_i)``.

    ``values`` has one row per function and one column per sample point.
    """
    F = np.atleast_2d(np.asarray(values, dtype=float))
    if F.size == 0:
        raise ValueError("empty class or sample")
    if n_draws < 100:
        raise ValueError("use at least 100 sign draws")
    n = F.shape[1]
    rng = np.random.default_rng(seed)
    eps = rng.choice(np.array([-1.0, 1.0]), size=(n_draws, n))
    sups = (eps @ F.T).max(axis=1) / n
    return RademacherEstimate(float(sups.mean()), n_draws, seed, float(sups.std(ddof=1) / math.sqrt(n_draws)))


# ---------------------------------------------------------------------------
# generalization bounds
# ---------------------------------------------------------------------------

GENERALIZATION_KINDS = ("thm33_kl", "thm56_localized_kl", "thmD6_slow", "thmD9_chi2")


def _need(inputs: dict, *keys):
    missing = [k for k in keys if inputs.get(k) is None]
    if missing:
        raise ValueError(f"missing component(s): {', '.join(missing)}")
    return [inputs[k] for k in keys]


def generalization_bound(kind: str, inputs: dict, asymptotic: bool = False) -> BoundReport:
    """Assemble an empirical bound.

    ``asymptotic=True`` zeroes complexity and confidence terms, giving the
    matching population-style expression.
    """
    if kind not in GENERALIZATION_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}; choose from {GENERALIZATION_KINDS}")
    z = 0.0 if asymptotic else 1.0
    delta, n, m = _need(inputs, "delta", "n", "m")
    rec = {k: inputs.get(k) for k in ("delta", "n", "m", "r", "r1", "C1", "C2", "beta")}

    if kind == "thm33_kl":
        src, disc, rs, rt, lam = _need(inputs, "source_risk", "discrepancy", "rad_S", "rad_T", "lambda_star")
        beta = float(inputs.get("beta") or 1.0)
        rec["beta"] = beta
        comps = {
            "source_risk": src,
            "discrepancy_term": disc,
            "lambda_star": lam,
            "complexity_terms": [
                ("4*rad_S", z * 4.0 * rs, "proof_constants"),
                ("(2e/beta)*rad_T", z * 2.0 * math.e / beta * rt, "proof_constants"),
            ],
            "confidence_terms": [
                ("sqrt(log(2/delta)/(2n))", z * math.sqrt(math.log(2.0 / delta) / (2.0 * n)), "proof_constants"),
                ("sqrt(log(2/delta)/(2m))", z * math.sqrt(math.log(2.0 / delta) / (2.0 * m)), "proof_constants"),
            ],
        }
        return BoundReport(kind, comps, rec, "proof_constants")

    L = math.log(1.0 / delta)
    if kind == "thmD6_slow":
        src, disc, rs, rt, lam = _need(inputs, "source_risk", "discrepancy", "rad_S", "rad_T", "lambda_star")
        comps = {
            "source_risk": src,
            "discrepancy_term": math.sqrt(max(disc, 0.0)),
            "lambda_star": lam,
            "complexity_terms": [
                ("sqrt(rad_T+rad_S)", z * math.sqrt(rt + rs), "unit_constants"),
                ("rad_S", z * rs, "unit_constants"),
            ],
            "confidence_terms": [
                ("sqrt(sqrt(L/n)+sqrt(L/m))", z * math.sqrt(math.sqrt(L / n) + math.sqrt(L / m)), "unit_constants"),
                ("sqrt(L/n)", z * math.sqrt(L / n), "unit_constants"),
            ],
        }
        return BoundReport(kind, comps, rec, "unit_constants")

    # localized kinds
    src, disc, r_sup, C1, C2, rs, rt, lam_r, r, r1 = _need(
        inputs, "source_risk", "discrepancy", "R_sup", "C1", "C2", "rad_S", "rad_T", "lambda_star_r", "r", "r1"
    )
    warnings = []
    if kind == "thm56_localized_kl":
        fr = _fastrate_gap(C1, min(r1 + r, 1.0), C2)
        if fr > 1e-12:
            warnings.append(f"fast-rate condition violated (gap {fr:.3g})")
    else:
        var, mean = inputs.get("var_source"), inputs.get("mean_source")
        if var is None or mean is None:
            raise ValueError("missing component(s): var_source, mean_source")
        ok, worst = chi2_localized_condition(C1, C2, var, mean)
        if not ok:
            warnings.append(f"chi2 localized condition violated (slack {worst:.3g})")
    comps = {
        "source_risk": src,
        "discrepancy_term": disc / C1,
        "lambda_star_r": lam_r,
        "localization_terms": [("C2*R_sup", C2 * r_sup, "exact")],
        "complexity_terms": [
            ("rad_T(H_r)", z * rt, "unit_constants"),
            ("rad_S(H_max(r,r1))", z * rs, "unit_constants"),
        ],
        "confidence_terms": [
            ("L/n", z * L / n, "unit_constants"),
            ("L/m", z * L / m, "unit_constants"),
            ("sqrt((r1+r)L/n)", z * math.sqrt((r1 + r) * L / n), "unit_constants"),
            ("sqrt(r L/m)", z * math.sqrt(r * L / m), "unit_constants"),
        ],
    }
    return BoundReport(kind, comps, rec, "unit_constants", warnings)
