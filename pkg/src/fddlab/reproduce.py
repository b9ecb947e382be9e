"""Worked threshold example and fast-rate constants as a checked table.

Source ``U[0,1]``, target ``U[0,2]``, both labeled by ``h_{1/2}``, and the
threshold class ``{h_c : c in [0, 1/2]}`` on a 101-point grid.  Every row
carries a reference value and a tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds import fastrate_constants, lambda_star, target_bound_localized
from .datasets import risk, threshold_domains
from .discrepancy import cumulant_profile, fdd, localized_fdd, rashomon, sup_source_disagreement
from .hypotheses import HypothesisClass, Threshold
from .phi_kernel import make_phi

THRESHOLD_GRID = 101
LOCAL_R = 0.25
# constants of the m = 1, C2 = 0.1 fast-rate row
LOCAL_C2 = 0.1


@dataclass(frozen=True)
class Row:
    name: str
    value: float
    expected: float
    tol: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return math.isfinite(self.value) and abs(self.value - self.expected) <= self.tol

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "expected": self.expected,
                "tol": self.tol, "pass": self.passed, "note": self.note}


@dataclass
class Report:
    rows: list
    extras: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows], "pass": self.passed, **self.extras}

    def table(self) -> str:
        w = max(len(r.name) for r in self.rows)
        lines = [f"{'quantity':<{w}}  {'value':>10}  {'expected':>9}  {'tol':>7}  status"]
        for r in self.rows:
            lines.append(
                f"{r.name:<{w}}  {r.value:>10.6f}  {r.expected:>9.4f}  {r.tol:>7.0e}  {'PASS' if r.passed else 'FAIL'}"
            )
        return "\n".join(lines)


def threshold_example() -> Report:
    pair = threshold_domains()
    mu, nu = pair.source, pair.target
    H = HypothesisClass.threshold_grid(0.0, 0.5, THRESHOLD_GRID)
    h = Threshold(0.5)
    kl = make_phi("kl")

    full = fdd(h, H, nu, mu, kl)
    rset = rashomon(H, mu, LOCAL_R)
    loc = localized_fdd(h, rset, nu, mu, kl, r1=0.0)
    R_sup, _ = sup_source_disagreement(h, rset, mu)
    lam, _ = lambda_star(H, mu, nu)
    lam_r, _ = lambda_star(rset, mu, nu)

    fr0 = fastrate_constants(0.0, 0.999)
    fr1 = fastrate_constants(1.0, LOCAL_C2)
    bound = target_bound_localized(
        risk(h, mu), loc.value, R_sup, fr1.C1, LOCAL_C2, lambda_star_r=lam_r,
        cumulant=cumulant_profile(h, rset, mu, kl), r=LOCAL_R, r1=0.0,
    )

    r0 = rashomon(H, mu, 0.0)
    loc0 = localized_fdd(h, r0, nu, mu, kl)
    R0, _ = sup_source_disagreement(h, r0, mu)

    rows = [
        Row("fdd_kl", full.value, 0.131, 1e-3, f"t*={full.t_star:.4f}"),
        Row("localized_fdd_kl(r=1/4)", loc.value, 0.048, 1e-3, f"t*={loc.t_star:.4f}"),
        Row("R^r_mu(r=1/4)", R_sup, 0.25, 1e-12),
        Row("localized_bound", bound.total, 0.038, 1e-3,
            "; ".join(bound.warnings) or "cumulant condition holds"),
        Row("sqrt(fdd_kl)", math.sqrt(full.value), 0.36, 5e-3),
        Row("lambda_star", lam, 0.0, 0.0),
        Row("lambda_star_r", lam_r, 0.0, 0.0),
        Row("localized_fdd_kl(r=0)", loc0.value, 0.0, 1e-12),
        Row("R^r_mu(r=0)", R0, 0.0, 0.0),
        Row("fastrate C1(m=0,C2=0.999)", fr0.C1, 1.256, 1e-3),
        Row("fastrate 1/C1(m=0,C2=0.999)", fr0.coefficient, 0.796, 1e-3),
        Row("fastrate C1(m=1,C2=0.1)", fr1.C1, 3.74, 1e-2),
        Row("fastrate 1/C1(m=1,C2=0.1)", fr1.coefficient, 0.267, 1e-3),
    ]
    extras = {
        "bound": bound.to_dict(),
        "rashomon": rset.to_dict(),
        "fdd": full.to_dict(),
        "localized": loc.to_dict(),
    }
    return Report(rows, extras)
