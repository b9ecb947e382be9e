"""Adversarial min-max domain adaptation on toy parametric models.

The model is a shared one-hidden-layer representation with a main head ``h``
and an auxiliary head ``h'``.  Each outer step runs ``inner_steps`` ascent
steps on ``h'`` for the discrepancy

    d(h, h') = t E_nu[l(h, h')] - I_mu(t l(h, h'))

and one descent step on (representation, ``h``) for ``R_mu(h) + eta * d``.
The ``abs_*`` variants use ``|E_nu[l] - E_mu[phi*(l)]|`` instead.  Training
is full batch and deterministic given the seed.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .datasets import DomainPair
from .hypotheses import MLP, LossFunction, pair_loss_vjp
from .phi_kernel import make_phi
from .variational import (
    T_BRACKET,
    WitnessValues,
    lt_objective,
    optimal_t_chi2,
    optimal_t_kl_approx,
    scaled_objective,
    shifted_gradients,
    shifted_objective,
)

log = logging.getLogger(__name__)

EXPLOSION = 1e6
DISCREPANCIES = ("kl", "chi2", "jeffreys", "abs_kl", "abs_chi2", "optkl", "optchi2", "none")
HEAD_KEYS = ("W2", "b2")
REP_KEYS = ("W1", "b1")


@dataclass
class TrainConfig:
    discrepancy: str = "kl"
    eta: float = 1.0
    t_mode: str = "fixed_one"
    inner_steps: int = 5
    outer_steps: int = 600
    lr_outer: float = 0.01
    lr_inner: float = 0.03
    seed: int = 0
    surrogate: str = "surrogate_unbounded"
    hidden: int = 16
    log_every: int = 1
    aux_init: str = "near_main"

    def __post_init__(self):
        kind = self.discrepancy.split(":", 1)[0]
        if kind not in DISCREPANCIES:
            raise ValueError(f"unknown discrepancy {self.discrepancy!r}")
        if kind == "jeffreys":
            make_phi(self.discrepancy)  # validates the weights
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.inner_steps < 1:
            raise ValueError("inner_steps must be >= 1")
        if self.t_mode not in ("fixed_one", "optimized"):
            raise ValueError(f"unknown t_mode {self.t_mode!r}")
        LossFunction(self.surrogate)

    @property
    def kind(self) -> str:
        return self.discrepancy.split(":", 1)[0]

    @property
    def phi(self):
        k = self.kind
        if k == "jeffreys":
            return make_phi(self.discrepancy)
        if k in ("abs_kl", "optkl"):
            return make_phi("kl")
        if k in ("abs_chi2", "optchi2"):
            return make_phi("chi2")
        if k == "none":
            return None
        return make_phi(k)

    @property
    def absolute(self) -> bool:
        return self.kind.startswith("abs_")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainState:
    params: dict
    step: int = 0
    trajectory: list = field(default_factory=list)  # (step, d)
    risk_trajectory: list = field(default_factory=list)  # (step, source risk)
    target_acc: list = field(default_factory=list)  # (step, acc); oracle pairs only
    t_trajectory: list = field(default_factory=list)
    degenerate_t: int = 0
    exploded: bool = False
    metrics: dict = field(default_factory=dict)

    def heads(self) -> tuple[MLP, MLP]:
        p = self.params
        return MLP(p["W1"], p["b1"], p["W2"], p["b2"]), MLP(p["W1"], p["b1"], p["V2"], p["c2"])

    def write_csv(self, path) -> None:
        acc = dict(self.target_acc)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "discrepancy", "source_risk", "target_acc"])
            for (s, d), (_, r) in zip(self.trajectory, self.risk_trajectory):
                w.writerow([s, repr(d), repr(r), repr(acc[s]) if s in acc else ""])


def init_params(in_dim: int, hidden: int, rng, aux_init: str = "independent", aux_scale: float = 0.1) -> dict:
    """Shared representation, main head and auxiliary head.

    ``aux_init="near_main"`` starts ``h'`` at the main head plus a small
    perturbation (``aux_scale`` times a fresh draw), so ``d`` starts near zero;
    exactly ``h' = h`` would sit at a stationary point of the surrogate.
    """
    net = MLP.init(in_dim, hidden, 1, rng)
    aux = MLP.init(in_dim, hidden, 1, rng)
    if aux_init == "near_main":
        V2, c2 = net.W2 + aux_scale * aux.W2, net.b2 + aux_scale * aux.b2
    elif aux_init == "independent":
        V2, c2 = aux.W2, aux.b2
    else:
        raise ValueError(f"unknown aux_init {aux_init!r}")
    return {"W1": net.W1, "b1": net.b1, "W2": net.W2, "b2": net.b2, "V2": V2, "c2": c2}


def _nets(p: dict) -> tuple[MLP, MLP]:
    return MLP(p["W1"], p["b1"], p["W2"], p["b2"]), MLP(p["W1"], p["b1"], p["V2"], p["c2"])


# ---------------------------------------------------------------------------
# objectives and gradients
# ---------------------------------------------------------------------------


def source_risk(p: dict, X, y) -> tuple[float, dict]:
    """Mean logistic loss of the main head and its gradient."""
    net, _ = _nets(p)
    pre, z = net.represent(X)
    s = net.head(z)
    sgn = 2.0 * np.asarray(y) - 1.0
    margin = sgn * s
    val = float(np.mean(np.logaddexp(0.0, -margin)))
    ds = -sgn * np.exp(-np.logaddexp(0.0, margin)) / len(s)
    from .hypotheses import _backprop

    return val, _backprop(net, np.atleast_2d(X), pre, z, ds)


def _disc_value_and_coefs(lp, lq, cfg: TrainConfig, t: float):
    """Discrepancy value and its derivative w.r.t. the per-point losses."""
    phi = cfg.phi
    if cfg.absolute:
        g = WitnessValues(lp, lq)
        v = lt_objective(g, phi)
        dp = g.weights_P.copy()
        dq = -g.weights_Q * phi._phi_star_prime(lq)
        sgn = 1.0 if v >= 0 else -1.0
        return abs(v), sgn * dp, sgn * dq
    g = WitnessValues(t * lp, t * lq)
    v, dp, dq = shifted_gradients(g, phi)
    return v, t * dp, t * dq


def discrepancy_and_grads(p: dict, Xs, Xt, cfg: TrainConfig, t: float) -> tuple[float, dict, dict]:
    """``d`` and its gradients w.r.t. the main network and the auxiliary network."""
    loss = LossFunction(cfg.surrogate)
    net, aux = _nets(p)
    lt_ = loss.pointwise(net, aux, Xt)
    ls_ = loss.pointwise(net, aux, Xs)
    v, cp, cq = _disc_value_and_coefs(lt_, ls_, cfg, t)
    _, gh_t, ga_t = pair_loss_vjp(net, aux, Xt, loss, cp)
    _, gh_s, ga_s = pair_loss_vjp(net, aux, Xs, loss, cq)
    gh = {k: gh_t[k] + gh_s[k] for k in gh_t}
    ga = {k: ga_t[k] + ga_s[k] for k in ga_t}
    return v, gh, ga


def inner_objective(p, Xs, Xt, cfg, t) -> tuple[float, dict]:
    """Auxiliary player's objective ``d`` and its gradient on ``(V2, c2)``."""
    v, _, ga = discrepancy_and_grads(p, Xs, Xt, cfg, t)
    return v, {"V2": ga["W2"], "c2": ga["b2"]}


def outer_objective(p, Xs, ys, Xt, cfg, t) -> tuple[float, dict]:
    """Main player's objective ``R_mu(h) + eta d`` on ``(W1, b1, W2, b2)``."""
    r, gr = source_risk(p, Xs, ys)
    if cfg.eta == 0 or cfg.kind == "none":
        return r, gr
    v, gh, ga = discrepancy_and_grads(p, Xs, Xt, cfg, t)
    g = {k: gr[k] + cfg.eta * gh[k] for k in ("W2", "b2")}
    for k in REP_KEYS:
        # the representation is shared by both heads
        g[k] = gr[k] + cfg.eta * (gh[k] + ga[k])
    return r + cfg.eta * v, g


def choose_t(p, Xs, Xt, cfg: TrainConfig, state: TrainState | None = None) -> float:
    """Scale for the current step; degenerate batches fall back to ``t = 1``."""
    kind = cfg.kind
    if kind not in ("optkl", "optchi2") and cfg.t_mode == "fixed_one":
        return 1.0
    loss = LossFunction(cfg.surrogate)
    net, aux = _nets(p)
    lt_ = loss.pointwise(net, aux, Xt)
    ls_ = loss.pointwise(net, aux, Xs)
    try:
        if kind == "optkl":
            t = optimal_t_kl_approx(lt_, ls_)
        elif kind == "optchi2":
            t = optimal_t_chi2(float(lt_.mean()), float(ls_.mean()), float(ls_.var()))
        else:
            t = scaled_objective(WitnessValues(lt_, ls_), cfg.phi).t_star
    except (ValueError, ArithmeticError):
        if state is not None:
            state.degenerate_t += 1
        return 1.0
    if not math.isfinite(t):
        if state is not None:
            state.degenerate_t += 1
        return 1.0
    return float(np.clip(t, *T_BRACKET))


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------


class Adam:
    """Plain Adam over a dict of arrays; only the listed keys are touched."""

    def __init__(self, keys, lr: float, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.keys, self.lr, self.b1, self.b2, self.eps = tuple(keys), lr, b1, b2, eps
        self.m, self.v, self.k = {}, {}, 0

    def step(self, params: dict, grads: dict, ascend: bool = False) -> None:
        self.k += 1
        sign = 1.0 if ascend else -1.0
        for key in self.keys:
            g = grads[key]
            m = self.m.get(key, np.zeros_like(g))
            v = self.v.get(key, np.zeros_like(g))
            m = self.b1 * m + (1 - self.b1) * g
            v = self.b2 * v + (1 - self.b2) * g * g
            self.m[key], self.v[key] = m, v
            mh = m / (1 - self.b1**self.k)
            vh = v / (1 - self.b2**self.k)
            params[key] = params[key] + sign * self.lr * mh / (np.sqrt(vh) + self.eps)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------


def accuracy(p: dict, X, y) -> float:
    net, _ = _nets(p)
    return float(np.mean(net.predict(X) == np.asarray(y)))


def train(config: TrainConfig, pair: DomainPair) -> TrainState:
    """Run the min-max schedule; target labels are read only for oracle metrics."""
    cfg = config
    Xs, ys = pair.source.X, pair.source.y
    Xt = pair.target.X
    oracle = pair.label_capability == "oracle" and pair.target.labeled
    rng = np.random.default_rng(cfg.seed)
    p = init_params(Xs.shape[1], cfg.hidden, rng, cfg.aux_init)
    state = TrainState(params=p)
    outer = Adam(("W1", "b1", "W2", "b2"), cfg.lr_outer)
    inner = Adam(("V2", "c2"), cfg.lr_inner)
    adversarial = cfg.eta > 0 and cfg.kind != "none"
    # the scale depends on h', so it follows every update of h' (held fixed for gradients)
    refresh_t = adversarial and (cfg.kind in ("optkl", "optchi2") or cfg.t_mode == "optimized")

    for step in range(cfg.outer_steps):
        t = choose_t(p, Xs, Xt, cfg, state) if adversarial and not refresh_t else 1.0
        d = 0.0
        if adversarial:
            for _ in range(cfg.inner_steps):
                if refresh_t:
                    t = choose_t(p, Xs, Xt, cfg, state)
                d, g = inner_objective(p, Xs, Xt, cfg, t)
                if not math.isfinite(d) or abs(d) > EXPLOSION:
                    break
                inner.step(p, g, ascend=True)
            d, _ = inner_objective(p, Xs, Xt, cfg, t)
            if not math.isfinite(d) or abs(d) > EXPLOSION:
                state.exploded = True
                state.trajectory.append((step, float(d) if math.isfinite(d) else float("inf")))
                state.risk_trajectory.append((step, source_risk(p, Xs, ys)[0]))
                log.info("discrepancy exploded at step %d (d=%s)", step, d)
                break
        if refresh_t:
            t = choose_t(p, Xs, Xt, cfg, state)
        _, g = outer_objective(p, Xs, ys, Xt, cfg, t)
        outer.step(p, g)
        state.step = step + 1
        if step % cfg.log_every == 0 or step == cfg.outer_steps - 1:
            state.trajectory.append((step, float(d)))
            state.risk_trajectory.append((step, source_risk(p, Xs, ys)[0]))
            state.t_trajectory.append((step, t))
            if oracle:
                state.target_acc.append((step, accuracy(p, Xt, pair.target.y)))

    state.metrics = {
        "source_acc": accuracy(p, Xs, ys),
        "exploded": state.exploded,
        "degenerate_t": state.degenerate_t,
        "max_abs_discrepancy": max((abs(d) for _, d in state.trajectory), default=0.0),
    }
    if oracle:
        state.metrics["target_acc"] = accuracy(p, Xt, pair.target.y)
    return state


# ---------------------------------------------------------------------------
# variational equivalence check
# ---------------------------------------------------------------------------


def objective_equivalence_check(witnesses, P_weights, Q_weights, phi, tol: float = 1e-3) -> dict:
    """Compare ``max d~`` (LT form) with ``max d`` (shifted form) over a witness family.

    ``witnesses`` holds one row per candidate ``h'``: its loss values on the
    common atoms of the two empirical measures.  Rows outside the conjugate
    domain are skipped for the LT form.  The exact divergence between the
    weight vectors is reported alongside.
    """
    from .phi_kernel import DiscreteDistribution, exact_f_divergence

    W = np.atleast_2d(np.asarray(witnesses, dtype=float))
    Pw, Qw = np.asarray(P_weights, float), np.asarray(Q_weights, float)
    lt_vals, sh_vals = [], []
    for row in W:
        g = WitnessValues(row, row, Pw, Qw)
        sh_vals.append(shifted_objective(g, phi).value)
        ok = phi.composite or bool(np.all(phi.in_domain(row)))
        lt_vals.append(lt_objective(g, phi) if ok else -math.inf)
    lt_vals, sh_vals = np.array(lt_vals), np.array(sh_vals)
    exact = exact_f_divergence(DiscreteDistribution.on_range(Pw), DiscreteDistribution.on_range(Qw), phi)
    best_lt, best_sh = float(lt_vals.max()), float(sh_vals.max())
    i_lt = int(np.argmax(lt_vals))
    return {
        "max_lt": best_lt,
        "max_shifted": best_sh,
        "gap": abs(best_lt - best_sh),
        "exact": exact,
        "within_tol": abs(best_lt - best_sh) <= tol,
        "bounded_by_exact": max(best_lt, best_sh) <= exact + tol,
        "shifted_at_lt_argmax": float(sh_vals[i_lt]),
    }
