"""Synthetic domain pairs with analytic or sampled feature laws.

A domain knows how to produce the law of a loss ``l(h, h')`` under its
feature distribution as a ``(values, weights)`` pair.  Uniform intervals give
exact Bernoulli laws for threshold pairs, discrete domains enumerate atoms and
sampled domains put mass ``1/n`` on every point.

Target labels are guarded by a capability flag: a blinded domain raises
:class:`LabelAccessError` on any label read.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.datasets import make_moons

from .hypotheses import ZERO_ONE, LossFunction, Threshold
from .phi_kernel import DiscreteDistribution

MOONS_CENTER = np.array([0.5, 0.25])


class LabelAccessError(PermissionError):
    """A label read was attempted on a blinded domain."""


class _Domain:
    blinded = False

    def _guard(self):
        if self.blinded:
            raise LabelAccessError(f"labels of this {type(self).__name__} are hidden")

    def blind(self):
        out = self._copy()
        out.blinded = True
        return out

    def unblind(self):
        out = self._copy()
        out.blinded = False
        return out

    def _copy(self):
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        return out

    def risk_law(self, h, loss: LossFunction = ZERO_ONE):
        """Law of ``loss(h(x), f(x))`` where ``f`` is this domain's labeler."""
        return self.law(h, self.labeler, loss)


class UniformDomain(_Domain):
    """Uniform law on ``[lo, hi]`` with a labeling function."""

    def __init__(self, lo: float, hi: float, labeler=None):
        if not hi > lo:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo, self.hi = float(lo), float(hi)
        self._labeler = labeler

    @property
    def density(self) -> float:
        return 1.0 / (self.hi - self.lo)

    @property
    def labeler(self):
        self._guard()
        if self._labeler is None:
            raise LabelAccessError("domain has no labeling function")
        return self._labeler

    @property
    def labeled(self) -> bool:
        return self._labeler is not None

    def interval_mass(self, a: float, b: float) -> float:
        a, b = max(min(a, b), self.lo), min(max(a, b), self.hi)
        return max(b - a, 0.0) * self.density

    def law(self, h, h2, loss: LossFunction = ZERO_ONE):
        if isinstance(h, Threshold) and isinstance(h2, Threshold):
            # two thresholds disagree exactly on [min c, max c)
            q = self.interval_mass(h.c, h2.c)
            disagree = float(loss(np.array([0.0]), np.array([1.0]))[0])
            return np.array([0.0, disagree]), np.array([1.0 - q, q])
        raise NotImplementedError(
            "analytic laws on intervals are available for threshold pairs only; sample the domain instead"
        )

    def sample(self, n: int, rng=None) -> np.ndarray:
        return np.random.default_rng(rng).uniform(self.lo, self.hi, size=n)

    def describe(self) -> dict:
        d = {"law": "uniform", "interval": [self.lo, self.hi]}
        if self._labeler is not None and not self.blinded:
            d["labeler"] = self._labeler.describe()
        return d


class DiscreteDomain(_Domain):
    """A finite input space ``0..k-1`` with probabilities and a labeling."""

    def __init__(self, dist: DiscreteDistribution, labeler=None):
        self.dist = dist
        self._labeler = labeler

    @property
    def atoms(self) -> np.ndarray:
        return np.asarray(self.dist.support)

    @property
    def labeler(self):
        self._guard()
        if self._labeler is None:
            raise LabelAccessError("domain has no labeling function")
        return self._labeler

    @property
    def labeled(self) -> bool:
        return self._labeler is not None

    def law(self, h, h2, loss: LossFunction = ZERO_ONE):
        return loss.pointwise(h, h2, self.atoms), self.dist.probs

    def describe(self) -> dict:
        return {"law": "discrete", "probs": self.dist.probs.tolist()}


class SampleDomain(_Domain):
    """An empirical sample ``X`` with optional labels ``y``."""

    def __init__(self, X, y=None):
        self.X = np.asarray(X, dtype=float)
        self._y = None if y is None else np.asarray(y, dtype=int)
        if self._y is not None and len(self._y) != len(self.X):
            raise ValueError("X and y lengths differ")

    def __len__(self) -> int:
        return len(self.X)

    @property
    def y(self) -> np.ndarray:
        self._guard()
        if self._y is None:
            raise LabelAccessError("sample is unlabeled")
        return self._y

    @property
    def labeled(self) -> bool:
        return self._y is not None

    @property
    def weights(self) -> np.ndarray:
        return np.full(len(self.X), 1.0 / len(self.X))

    def law(self, h, h2, loss: LossFunction = ZERO_ONE):
        return loss.pointwise(h, h2, self.X), self.weights

    def risk_law(self, h, loss: LossFunction = ZERO_ONE):
        y = self.y
        if loss.on_labels:
            vals = loss(h.predict(self.X), y)
        elif loss.kind == "bounded_sigmoid_disagreement":
            # labels act as degenerate probabilities
            from scipy.special import expit

            vals = np.abs(expit(h.score(self.X)) - y)
        else:
            raise ValueError("risks are defined for bounded losses only")
        return vals, self.weights

    def describe(self) -> dict:
        return {"law": "sample", "n": len(self.X), "dim": int(self.X.shape[1]) if self.X.ndim > 1 else 1}


def risk(h, domain, loss: LossFunction = ZERO_ONE) -> float:
    """``E[loss(h(x), y)]`` under a labeled domain."""
    vals, w = domain.risk_law(h, loss)
    return float(np.dot(w, vals))


def disagreement(h, h2, domain, loss: LossFunction = ZERO_ONE):
    """``E[loss(h, h')]`` and the per-point values (``None`` for analytic intervals)."""
    vals, w = domain.law(h, h2, loss)
    per_point = None if isinstance(domain, UniformDomain) else vals
    return float(np.dot(w, vals)), per_point


@dataclass
class DomainPair:
    source: object
    target: object
    mode: str = "analytic"
    label_capability: str = "oracle"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("analytic", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.label_capability not in ("oracle", "blinded"):
            raise ValueError(f"unknown label capability {self.label_capability!r}")
        if self.label_capability == "blinded" and not self.target.blinded:
            self.target = self.target.blind()

    @property
    def blinded(self) -> bool:
        return self.label_capability == "blinded"

    def blind(self) -> "DomainPair":
        return replace(self, target=self.target.blind(), label_capability="blinded")

    def without_target_labels(self) -> "DomainPair":
        """Drop target labels entirely (sampled pairs only)."""
        if not isinstance(self.target, SampleDomain):
            raise TypeError("only sampled targets carry a label vector")
        return replace(self, target=SampleDomain(self.target.X), label_capability="blinded")

    def describe(self) -> dict:
        return {
            "mode": self.mode,
            "label_capability": self.label_capability,
            "source": self.source.describe(),
            "target": self.target.describe(),
            "meta": self.meta,
        }


def threshold_domains() -> DomainPair:
    """Source ``U[0,1]`` and target ``U[0,2]``, both labeled by ``h_{1/2}``."""
    truth = Threshold(0.5)
    return DomainPair(UniformDomain(0.0, 1.0, truth), UniformDomain(0.0, 2.0, truth), mode="analytic")


def gaussian_shift(dim: int = 1, mean_shift=1.0, n: int = 512, m: int = 512, seed: int = 0) -> DomainPair:
    """Standard normal source, mean-shifted target, labels ``sum(x) >= 0``.

    A scalar shift moves the first coordinate only.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    delta = np.zeros(dim)
    shift = np.atleast_1d(np.asarray(mean_shift, dtype=float))
    if shift.size == 1:
        delta[0] = shift[0]
    elif shift.size == dim:
        delta = shift
    else:
        raise ValueError(f"mean_shift must be scalar or length {dim}")
    rng = np.random.default_rng(seed)
    Xs = rng.standard_normal((n, dim))
    Xt = rng.standard_normal((m, dim)) + delta
    w = np.ones(dim) / math.sqrt(dim)

    def label(X):
        return (X @ w >= 0).astype(int)

    return DomainPair(
        SampleDomain(Xs, label(Xs)),
        SampleDomain(Xt, label(Xt)),
        mode="sampled",
        meta={"task": "gaussian-shift", "dim": dim, "shift": delta.tolist(), "seed": seed,
              "feature_kl": 0.5 * float(delta @ delta)},
    )


def rotate(X, degrees: float, center=MOONS_CENTER) -> np.ndarray:
    th = math.radians(degrees)
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    return (np.asarray(X) - center) @ R.T + center


def two_moons(
    rotation_deg: float = 30.0,
    n: int = 512,
    m: int = 512,
    noise: float = 0.1,
    seed: int = 0,
    imbalance: float | None = None,
) -> DomainPair:
    """Interleaved half circles; the target is an independent draw rotated about the centroid.

    ``imbalance`` (exploratory only) keeps that fraction of the target's class 1.
    """
    if not 0.0 <= rotation_deg < 180.0:
        raise ValueError("rotation must lie in [0, 180)")
    rng = np.random.default_rng(seed)
    s_seed, t_seed = (int(v) for v in rng.integers(0, 2**31 - 1, size=2))
    Xs, ys = make_moons(n_samples=n, noise=noise, random_state=s_seed)
    Xt, yt = make_moons(n_samples=m, noise=noise, random_state=t_seed)
    Xt = rotate(Xt, rotation_deg)
    if imbalance is not None:
        keep = (yt == 0) | (rng.random(m) < imbalance)
        Xt, yt = Xt[keep], yt[keep]
    return DomainPair(
        SampleDomain(Xs, ys),
        SampleDomain(Xt, yt),
        mode="sampled",
        meta={"task": "two-moons", "rotation": rotation_deg, "noise": noise, "seed": seed},
    )


def write_csv(pair: DomainPair, path) -> None:
    """Rows ``x0.., y, domain``; hidden target labels are left blank."""
    if pair.mode != "sampled":
        raise ValueError("analytic pairs export a JSON descriptor; use write_descriptor")
    dim = pair.source.X.reshape(len(pair.source), -1).shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(dim)] + ["y", "domain"])
        for name, dom in (("source", pair.source), ("target", pair.target)):
            X = dom.X.reshape(len(dom), -1)
            y = dom.y if dom.labeled and not dom.blinded else [""] * len(dom)
            for row, lab in zip(X, y):
                w.writerow([repr(float(v)) for v in row] + [lab, name])


def write_descriptor(pair: DomainPair, path) -> None:
    with open(path, "w") as fh:
        json.dump(pair.describe(), fh, indent=2)
