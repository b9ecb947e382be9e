"""Bracketed one-dimensional searches used by the variational objectives.

scipy's ``golden`` expands its bracket without limit and cannot respect a hard
domain edge, so the bounded variant lives here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class SearchError(RuntimeError):
    """A 1-D search failed to converge."""


class UnboundedObjective(SearchError):
    """The optimum kept sitting on an expandable bracket edge."""

    def __init__(self, msg: str, bracket: tuple[float, float]):
        super().__init__(f"{msg}; last bracket {bracket}")
        self.bracket = bracket


@dataclass(frozen=True)
class SearchResult:
    x: float
    value: float
    iterations: int
    bracket: tuple[float, float]
    at_limit: bool


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    maximize: bool = False,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> SearchResult:
    """Golden-section search for the extremum of a unimodal ``f`` on ``[lo, hi]``."""
    sign = -1.0 if maximize else 1.0

    def g(x):
        return sign * f(x)

    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = g(c), g(d)
    it = 0
    while b - a > tol:
        if it >= max_iter:
            raise SearchError(f"golden section did not reach tol={tol} in {max_iter} iterations")
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = g(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = g(d)
    x, fx = (c, fc) if fc <= fd else (d, fd)
    # the interior probes never touch the ends; compare against them explicitly
    for edge in (float(lo), float(hi)):
        fe = g(edge)
        if fe < fx:
            x, fx = edge, fe
    return SearchResult(x=x, value=sign * fx, iterations=it, bracket=(float(lo), float(hi)), at_limit=False)


def expanding_golden(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    maximize: bool = False,
    lower_limit: float | None = None,
    upper_limit: float | None = None,
    expansions: int = 8,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> SearchResult:
    """Golden-section search whose bracket doubles while the optimum sits on an edge.

    ``lower_limit``/``upper_limit`` are hard edges of the feasible region: the
    bracket is clamped to them and an optimum found there is reported with
    ``at_limit=True`` instead of triggering expansion.
    """
    if lower_limit is not None:
        lo = max(lo, lower_limit)
    if upper_limit is not None:
        hi = min(hi, upper_limit)
    if not lo < hi:
        raise SearchError(f"empty bracket [{lo}, {hi}]")
    edge_tol = 10.0 * tol
    for _ in range(expansions + 1):
        res = golden_section(f, lo, hi, maximize=maximize, tol=tol, max_iter=max_iter)
        width = hi - lo
        hit_lo = res.x - lo <= edge_tol
        hit_hi = hi - res.x <= edge_tol
        lo_fixed = lower_limit is not None and lo <= lower_limit
        hi_fixed = upper_limit is not None and hi >= upper_limit
        if hit_lo and lo_fixed or hit_hi and hi_fixed:
            return SearchResult(res.x, res.value, res.iterations, (lo, hi), at_limit=True)
        if not (hit_lo or hit_hi):
            return SearchResult(res.x, res.value, res.iterations, (lo, hi), at_limit=False)
        # a plateau reaching the edge is not evidence of a better point outside
        mid = f(0.5 * (lo + hi))
        if abs(mid - res.value) <= 1e-14 * (1.0 + abs(res.value)):
            return SearchResult(res.x, res.value, res.iterations, (lo, hi), at_limit=False)
        if hit_lo:
            lo = lo - width if lower_limit is None else max(lo - width, lower_limit)
        if hit_hi:
            hi = hi + width if upper_limit is None else min(hi + width, upper_limit)
    raise UnboundedObjective("optimum stayed on the bracket edge after expansion", (lo, hi))
