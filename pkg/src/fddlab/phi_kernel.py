"""Convex generators of f-divergences and exact divergences between discrete laws.

Each kernel bundles the generator ``phi``, its convex conjugate ``phi_star``
(with an explicit domain), the shifted conjugate ``psi_star(y) = phi_star(y) - y``
and the curvature ``phi''(1)``.  The weighted Jeffreys kernel is kept as a
composite of a forward and a reverse KL kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

KINDS = ("kl", "reverse_kl", "chi2", "jeffreys")


class DomainError(ValueError):
    """An argument fell outside the domain of a conjugate function."""


class AbsoluteContinuityError(ValueError):
    """P puts mass on an atom where Q has none."""


def _kl_phi(x):
    x = np.asarray(x, dtype=float)
    # x log x -> 0 at x = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        xlogx = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
    return xlogx - x + 1.0


def _kl_phi_star(y):
    return np.expm1(np.asarray(y, dtype=float))


def _kl_phi_star_prime(y):
    return np.exp(np.asarray(y, dtype=float))


def _rkl_phi(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return -np.log(x)


def _rkl_phi_star(y):
    return -1.0 - np.log(-np.asarray(y, dtype=float))


def _rkl_phi_star_prime(y):
    return -1.0 / np.asarray(y, dtype=float)


def _chi2_phi(x):
    x = np.asarray(x, dtype=float)
    return (x - 1.0) ** 2


def _chi2_phi_star(y):
    y = np.asarray(y, dtype=float)
    return 0.25 * y * y + y


def _chi2_phi_star_prime(y):
    return 0.5 * np.asarray(y, dtype=float) + 1.0


@dataclass(frozen=True)
class PhiSpec:
    """A divergence kernel.

    ``conjugate_domain`` is an open interval ``(lo, hi)``; evaluating
    ``phi_star`` outside it raises :class:`DomainError`.  For the composite
    Jeffreys kernel, ``components`` holds ``(weight, PhiSpec)`` pairs and the
    scalar callables refer to the forward KL part only.
    """

    kind: str
    _phi: Callable = field(repr=False)
    _phi_star: Callable = field(repr=False)
    _phi_star_prime: Callable = field(repr=False)
    conjugate_domain: tuple[float, float]
    curvature_at_one: float | None
    gammas: tuple[float, float] | None = None
    components: tuple = ()

    @property
    def composite(self) -> bool:
        return bool(self.components)

    @property
    def name(self) -> str:
        if self.kind == "jeffreys":
            return f"jeffreys:{self.gammas[0]:g},{self.gammas[1]:g}"
        return self.kind

    def phi(self, x):
        return self._phi(x)

    def in_domain(self, y) -> np.ndarray:
        lo, hi = self.conjugate_domain
        y = np.asarray(y, dtype=float)
        return (y > lo) & (y < hi)

    def check_domain(self, y, where: str = "argument") -> None:
        y = np.asarray(y, dtype=float)
        ok = self.in_domain(y)
        if not np.all(ok):
            idx = int(np.flatnonzero(~np.atleast_1d(ok))[0])
            bad = float(np.atleast_1d(y)[idx])
            raise DomainError(
                f"{self.kind}: phi_star undefined at {where}[{idx}] = {bad!r}; "
                f"domain is {self.conjugate_domain}"
            )

    def phi_star(self, y):
        self.check_domain(y)
        return self._phi_star(y)

    def phi_star_prime(self, y):
        self.check_domain(y)
        return self._phi_star_prime(y)

    def psi_star(self, y):
        return self.phi_star(y) - np.asarray(y, dtype=float)

    def lipschitz_on(self, b: float) -> float:
        """Lipschitz constant of ``phi_star`` on ``[0, b]``."""
        if b < 0:
            raise ValueError("b must be nonnegative")
        if self.kind == "kl":
            return math.exp(b)
        if self.kind == "chi2":
            return b / 2.0 + 1.0
        raise DomainError(f"{self.name}: no Lipschitz constant on [0, {b}]")


_BASE = {
    "kl": dict(
        _phi=_kl_phi,
        _phi_star=_kl_phi_star,
        _phi_star_prime=_kl_phi_star_prime,
        conjugate_domain=(-math.inf, math.inf),
        curvature_at_one=1.0,
    ),
    "reverse_kl": dict(
        _phi=_rkl_phi,
        _phi_star=_rkl_phi_star,
        _phi_star_prime=_rkl_phi_star_prime,
        conjugate_domain=(-math.inf, 0.0),
        curvature_at_one=1.0,
    ),
    "chi2": dict(
        _phi=_chi2_phi,
        _phi_star=_chi2_phi_star,
        _phi_star_prime=_chi2_phi_star_prime,
        conjugate_domain=(-math.inf, math.inf),
        curvature_at_one=2.0,
    ),
}


def make_phi(kind: str, gamma1: float | None = None, gamma2: float | None = None) -> PhiSpec:
    """Build a kernel by name.

    ``kind`` also accepts the string form ``"jeffreys:g1,g2"`` used on the
    command line.
    """
    kind = kind.strip().lower()
    if kind.startswith("jeffreys:"):
        try:
            g1, g2 = (float(v) for v in kind.split(":", 1)[1].split(","))
        except ValueError:
            raise ValueError(f"malformed jeffreys kernel {kind!r}; expected jeffreys:g1,g2") from None
        return make_phi("jeffreys", g1, g2)
    if kind in _BASE:
        return PhiSpec(kind=kind, **_BASE[kind])
    if kind == "jeffreys":
        g1 = 0.5 if gamma1 is None else float(gamma1)
        g2 = 0.5 if gamma2 is None else float(gamma2)
        if g1 < 0 or g2 < 0:
            raise ValueError(f"jeffreys weights must be nonnegative, got ({g1}, {g2})")
        if g1 + g2 <= 0:
            raise ValueError("jeffreys weights must not both be zero")
        return PhiSpec(
            kind="jeffreys",
            curvature_at_one=None,
            gammas=(g1, g2),
            components=((g1, make_phi("kl")), (g2, make_phi("reverse_kl"))),
            **{k: v for k, v in _BASE["kl"].items() if k != "curvature_at_one"},
        )
    raise ValueError(f"unknown kernel {kind!r}; choose from {KINDS}")


@dataclass(frozen=True)
class DiscreteDistribution:
    support: tuple
    probs: np.ndarray

    def __init__(self, support: Sequence, probs: Sequence[float]):
        probs = np.asarray(probs, dtype=float)
        support = tuple(support)
        if probs.ndim != 1 or len(support) != probs.size:
            raise ValueError("support and probs must be 1-D and of equal length")
        if len(set(support)) != len(support):
            raise ValueError("support atoms must be distinct")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def on_range(cls, probs: Sequence[float]) -> "DiscreteDistribution":
        probs = np.asarray(probs, dtype=float)
        return cls(range(probs.size), probs)

    @classmethod
    def bernoulli(cls, p: float) -> "DiscreteDistribution":
        return cls((0, 1), (1.0 - p, p))

    def __len__(self) -> int:
        return len(self.support)


def _aligned(P: DiscreteDistribution, Q: DiscreteDistribution):
    if P.support == Q.support:
        return P.probs, Q.probs, P.support
    atoms = list(Q.support) + [a for a in P.support if a not in set(Q.support)]
    pidx = {a: i for i, a in enumerate(P.support)}
    qidx = {a: i for i, a in enumerate(Q.support)}
    p = np.array([P.probs[pidx[a]] if a in pidx else 0.0 for a in atoms])
    q = np.array([Q.probs[qidx[a]] if a in qidx else 0.0 for a in atoms])
    return p, q, tuple(atoms)


def exact_f_divergence(P: DiscreteDistribution, Q: DiscreteDistribution, phi: PhiSpec) -> float:
    """``sum_i q_i phi(p_i / q_i)``; for Jeffreys ``g1 KL(P||Q) + g2 KL(Q||P)``."""
    if phi.composite:
        (g1, _), (g2, _) = phi.components
        kl = make_phi("kl")
        total = 0.0
        if g1:
            total += g1 * exact_f_divergence(P, Q, kl)
        if g2:
            total += g2 * exact_f_divergence(Q, P, kl)
        return total
    if phi.kind == "reverse_kl":
        # E_Q[-log(dP/dQ)] = KL(Q || P)
        return exact_f_divergence(Q, P, make_phi("kl"))
    p, q, atoms = _aligned(P, Q)
    bad = (q <= 0) & (p > 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise AbsoluteContinuityError(f"P is not << Q: atom {atoms[i]!r} has p={p[i]!r}, q=0")
    keep = q > 0
    ratio = p[keep] / q[keep]
    return float(np.sum(q[keep] * phi.phi(ratio)))
