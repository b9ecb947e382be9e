"""Hypotheses, disagreement losses and hypothesis classes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import expit

LEAKY_SLOPE = 0.01
MAX_HIDDEN = 64
LOSS_KINDS = ("zero_one", "bounded_sigmoid_disagreement", "surrogate_unbounded")


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LossFunction:
    """Symmetric disagreement loss with ``loss(y, y) == 0``.

    ``zero_one`` compares hard labels.  The two score-based losses compare
    real-valued logits ``s, s'``:

    * ``bounded_sigmoid_disagreement``: ``|sigmoid(s) - sigmoid(s')|`` in [0, 1]
    * ``surrogate_unbounded``: ``(sigmoid(s) - sigmoid(s')) * (s - s')``, the
      symmetrized Bernoulli KL between the two predictions; smooth and
      unbounded above.
    """

    kind: str = "zero_one"

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.kind!r}; choose from {LOSS_KINDS}")

    @property
    def on_labels(self) -> bool:
        return self.kind == "zero_one"

    @property
    def range(self) -> tuple[float, float] | None:
        return None if self.kind == "surrogate_unbounded" else (0.0, 1.0)

    @property
    def bounded(self) -> bool:
        return self.range is not None

    def __call__(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.kind == "zero_one":
            return (a != b).astype(float)
        if self.kind == "bounded_sigmoid_disagreement":
            return np.abs(expit(a) - expit(b))
        return (expit(a) - expit(b)) * (a - b)

    def grad(self, a, b) -> tuple[np.ndarray, np.ndarray]:
        """Partial derivatives w.r.t. both score arguments."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.kind == "zero_one":
            z = np.zeros(np.broadcast(a, b).shape)
            return z, z.copy()
        pa, pb = expit(a), expit(b)
        da, db = pa * (1 - pa), pb * (1 - pb)
        if self.kind == "bounded_sigmoid_disagreement":
            s = np.sign(pa - pb)
            return s * da, -s * db
        diff = a - b
        gap = pa - pb
        return da * diff + gap, -db * diff - gap

    def pointwise(self, h, h2, x) -> np.ndarray:
        if self.on_labels:
            return self(h.predict(x), h2.predict(x))
        return self(h.score(x), h2.score(x))


ZERO_ONE = LossFunction("zero_one")


# ---------------------------------------------------------------------------
# hypotheses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Threshold:
    """``h_c(x) = 0`` if ``x < c`` else ``1``."""

    c: float

    def predict(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) >= self.c).astype(int)

    def score(self, x) -> np.ndarray:
        return self.predict(x).astype(float)

    def describe(self) -> dict:
        return {"form": "threshold", "c": self.c}


@dataclass(frozen=True)
class FiniteIndex:
    """A labeling of the atoms ``0..k-1`` of a finite input space."""

    labels: tuple
    index: int = 0

    def __init__(self, labels: Sequence[int], index: int = 0):
        object.__setattr__(self, "labels", tuple(int(v) for v in labels))
        object.__setattr__(self, "index", int(index))

    def predict(self, x) -> np.ndarray:
        return np.asarray(self.labels)[np.asarray(x, dtype=int)]

    def score(self, x) -> np.ndarray:
        return self.predict(x).astype(float)

    def describe(self) -> dict:
        return {"form": "finite_index", "index": self.index, "labels": list(self.labels)}


@dataclass(frozen=True)
class Linear:
    w: np.ndarray
    b: float

    def score(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x @ np.asarray(self.w, dtype=float) + self.b

    def predict(self, x) -> np.ndarray:
        return (self.score(x) >= 0).astype(int)

    def describe(self) -> dict:
        return {"form": "linear", "w": np.asarray(self.w).tolist(), "b": float(self.b)}


def leaky_relu(z):
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def leaky_relu_grad(z):
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


@dataclass
class MLP:
    """One hidden layer with leaky-rectifier activation.

    The binary score is the single output logit, or ``logit_1 - logit_0``
    when there are two outputs.
    """

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        self.W1 = np.asarray(self.W1, dtype=float)
        self.b1 = np.asarray(self.b1, dtype=float)
        self.W2 = np.asarray(self.W2, dtype=float)
        self.b2 = np.asarray(self.b2, dtype=float)
        if self.hidden_width > MAX_HIDDEN:
            raise ValueError(f"hidden width {self.hidden_width} exceeds {MAX_HIDDEN}")
        if self.W2.shape[0] not in (1, 2):
            raise ValueError("binary MLP needs 1 or 2 outputs")

    @property
    def hidden_width(self) -> int:
        return self.W1.shape[0]

    @classmethod
    def init(cls, in_dim: int, hidden: int, out: int = 1, rng=None) -> "MLP":
        rng = np.random.default_rng(rng)
        return cls(
            rng.normal(0, np.sqrt(2.0 / in_dim), (hidden, in_dim)),
            np.zeros(hidden),
            rng.normal(0, np.sqrt(1.0 / hidden), (out, hidden)),
            np.zeros(out),
        )

    def represent(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        pre = x @ self.W1.T + self.b1
        return pre, leaky_relu(pre)

    def head(self, z) -> np.ndarray:
        logits = z @ self.W2.T + self.b2
        return logits[:, 0] if logits.shape[1] == 1 else logits[:, 1] - logits[:, 0]

    def score(self, x) -> np.ndarray:
        return self.head(self.represent(x)[1])

    def predict(self, x) -> np.ndarray:
        return (self.score(x) >= 0).astype(int)

    @property
    def head_sign(self) -> np.ndarray:
        return np.array([1.0]) if self.W2.shape[0] == 1 else np.array([-1.0, 1.0])

    def describe(self) -> dict:
        return {"form": "mlp", "in_dim": self.W1.shape[1], "hidden": self.hidden_width, "out": self.W2.shape[0]}


def pair_loss_vjp(h: MLP, h2: MLP, x, loss: LossFunction, coef) -> tuple[float, dict, dict]:
    """``sum_i coef_i * loss(h, h2)(x_i)`` and its gradients w.r.t. both networks.

    Returns ``(value, grads_h, grads_h2)`` with keys ``W1, b1, W2, b2``.
    The two networks may share representation parameters; gradients are
    reported per network and the caller adds them up.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    coef = np.asarray(coef, dtype=float)
    pre1, z1 = h.represent(x)
    pre2, z2 = h2.represent(x)
    s1, s2 = h.head(z1), h2.head(z2)
    value = float(coef @ loss(s1, s2))
    ga, gb = loss.grad(s1, s2)
    return value, _backprop(h, x, pre1, z1, coef * ga), _backprop(h2, x, pre2, z2, coef * gb)


def _backprop(net: MLP, x, pre, z, dscore) -> dict:
    dlogits = dscore[:, None] * net.head_sign[None, :]
    dW2 = dlogits.T @ z
    db2 = dlogits.sum(axis=0)
    dz = dlogits @ net.W2
    dpre = dz * leaky_relu_grad(pre)
    return {"W1": dpre.T @ x, "b1": dpre.sum(axis=0), "W2": dW2, "b2": db2}


# ---------------------------------------------------------------------------
# classes
# ---------------------------------------------------------------------------


@dataclass
class HypothesisClass:
    """An enumerable list of hypotheses, or a parametric family descriptor."""

    members: list | None = None
    loss: LossFunction = field(default_factory=LossFunction)
    family: dict | None = None

    def __post_init__(self):
        if self.members is None and self.family is None:
            raise ValueError("need members or a parametric family")
        if self.members is not None and len(self.members) == 0:
            raise ValueError("enumerable class must be non-empty")

    @property
    def enumerable(self) -> bool:
        return self.members is not None

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator:
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def subset(self, indices) -> "HypothesisClass":
        return HypothesisClass([self.members[i] for i in indices], self.loss)

    @classmethod
    def threshold_grid(cls, lo: float = 0.0, hi: float = 0.5, grid: int = 101, loss=None) -> "HypothesisClass":
        return cls([Threshold(float(c)) for c in np.linspace(lo, hi, grid)], loss or LossFunction())

    @classmethod
    def finite(cls, label_table, loss=None) -> "HypothesisClass":
        return cls([FiniteIndex(row, i) for i, row in enumerate(np.asarray(label_table))], loss or LossFunction())

    @classmethod
    def from_config(cls, cfg: dict) -> "HypothesisClass":
        kind = cfg.get("class")
        loss = LossFunction(cfg.get("loss", "zero_one"))
        if kind == "threshold":
            lo, hi = cfg.get("interval", [0.0, 0.5])
            return cls.threshold_grid(lo, hi, int(cfg.get("grid", 101)), loss)
        if kind == "mlp":
            family = {
                "form": "mlp",
                "in_dim": int(cfg.get("in_dim", 2)),
                "hidden": int(cfg.get("hidden", 16)),
                "out": int(cfg.get("out", 1)),
            }
            if family["hidden"] > MAX_HIDDEN:
                raise ValueError(f"hidden width {family['hidden']} exceeds {MAX_HIDDEN}")
            return cls(None, LossFunction(cfg.get("loss", "bounded_sigmoid_disagreement")), family)
        raise ValueError(f"unknown hypothesis class {kind!r}")

    def sample(self, rng) -> MLP:
        f = self.family
        return MLP.init(f["in_dim"], f["hidden"], f["out"], rng)


@dataclass
class InducedLossClass:
    """The functions ``x -> loss(h(x), h'(x))`` over ordered pairs ``(h, h')``."""

    pairs: list
    loss: LossFunction

    def __len__(self) -> int:
        return len(self.pairs)

    def evaluate(self, x) -> np.ndarray:
        """Matrix of shape ``(len(pairs), len(x))``."""
        return np.stack([self.loss.pointwise(h, h2, x) for h, h2 in self.pairs])


def induced_loss_class(H: HypothesisClass, budget: int | None = None, seed: int = 0) -> InducedLossClass:
    if H.enumerable:
        pairs = [(h, h2) for h in H for h2 in H]
    else:
        if budget is None:
            raise ValueError("parametric classes need a sample budget")
        rng = np.random.default_rng(seed)
        pairs = [(H.sample(rng), H.sample(rng)) for _ in range(budget)]
    return InducedLossClass(pairs, H.loss)
