"""Command-line front end.

Every JSON output has the shape ``{"schema": "fdd-lab/1", "command": ...,
"config": {...}, "result": {...}}``.  The echoed config is fully resolved, so
``--config out.json`` replays a run exactly.  Flags given on the command line
override values from the config file.  ``--seed`` defaults to 0.

Exit statuses: 0 ok, 2 usage error, 3 numerical failure, 4 reproduction
mismatch.  ``FDD_LOG`` in {quiet, info, debug} sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import bounds as B
from .datasets import risk, threshold_domains, two_moons, gaussian_shift, write_csv, write_descriptor
from .discrepancy import absolute_fdd, cumulant_profile, fdd, localized_fdd, rashomon, sup_source_disagreement
from .hypotheses import HypothesisClass, LossFunction, Threshold
from .phi_kernel import DiscreteDistribution, DomainError, exact_f_divergence, make_phi
from .search import SearchError
from .variational import WitnessValues, estimate

SCHEMA = "fdd-lab/1"
EXIT_USAGE, EXIT_NUMERIC, EXIT_MISMATCH = 2, 3, 4
LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("fddlab")


class UsageError(Exception):
    pass


# resolved defaults per command; flags default to None so the config file can fill them
DEFAULTS = {
    "phi": {"kind": "kl", "p": None, "q": None, "at": None},
    "estimate": {"phi": "kl", "method": "shifted", "input": None, "t_range": "all"},
    "fdd": {"action": "compute", "phi": "kl", "class": "threshold", "h": 0.5, "t_range": "all",
            "rashomon": None, "grid": 101, "interval": [0.0, 0.5], "absolute": False},
    "bounds": {"action": "fastrate", "kind": None, "m": 0.0, "c2": 0.999, "c1": None, "phi": "kl",
               "h": 0.5, "rashomon": 0.25, "r1": 0.0, "grid": 101, "inputs": None, "asymptotic": False},
    "train": {"task": "two-moons", "rotation": 30.0, "n": 512, "m": 512, "discrepancy": "kl", "eta": 1.0,
              "t_mode": "fixed_one", "inner_steps": 5, "outer_steps": 600, "lr_outer": 0.01, "lr_inner": 0.03,
              "surrogate": "surrogate_unbounded", "hidden": 16, "log": None},
    "dataset": {"task": "two-moons", "rotation": 30.0, "n": 512, "m": 512, "noise": 0.1, "dim": 1,
                "shift": 1.0, "blind": False},
    "reproduce": {"target": "threshold-example"},
}


def _floats(text):
    return [float(v) for v in str(text).split(",")] if text is not None else None


def _t_range(text: str):
    if text in ("all", "nonneg"):
        return text
    if text.startswith("fixed:"):
        return ("fixed", float(text.split(":", 1)[1]))
    raise UsageError(f"bad --t-range {text!r}; use all, nonneg or fixed:<t>")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdd", description="f-divergence discrepancy toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--csv", action="store_true", default=None, help="CSV instead of JSON where available")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("phi", parents=[common], help="kernel facts and exact divergences")
    s.add_argument("--kind")
    s.add_argument("--p", help="comma-separated probabilities of P")
    s.add_argument("--q", help="comma-separated probabilities of Q")
    s.add_argument("--at", help="comma-separated points at which to evaluate phi_star")

    s = sub.add_parser("estimate", parents=[common], help="variational objective on weighted witness values")
    s.add_argument("--phi")
    s.add_argument("--method", choices=["lt", "shifted", "scaled"])
    s.add_argument("--input", help="JSON with on_P, on_Q and optional weights_P, weights_Q")
    s.add_argument("--t-range", dest="t_range")

    s = sub.add_parser("fdd", parents=[common], help="discrepancy over an enumerable class")
    s.add_argument("action", nargs="?", choices=["compute"])
    s.add_argument("--phi")
    s.add_argument("--class", dest="class", choices=["threshold"])
    s.add_argument("--h", type=float)
    s.add_argument("--t-range", dest="t_range")
    s.add_argument("--rashomon", type=float)
    s.add_argument("--grid", type=int)
    s.add_argument("--absolute", action="store_true", default=None)

    s = sub.add_parser("bounds", parents=[common], help="itemized bounds")
    s.add_argument("action", nargs="?", choices=["target", "generalization", "fastrate"])
    s.add_argument("--kind")
    s.add_argument("--m", type=float, help="fast-rate cap m in [0, 1]")
    s.add_argument("--c2", type=float)
    s.add_argument("--c1", type=float, help="localized bound C1 (default: from the fast-rate solver)")
    s.add_argument("--phi")
    s.add_argument("--h", type=float)
    s.add_argument("--rashomon", type=float)
    s.add_argument("--r1", type=float)
    s.add_argument("--grid", type=int)
    s.add_argument("--inputs", help="JSON object (or file) with generalization-bound inputs")
    s.add_argument("--asymptotic", action="store_true", default=None)

    s = sub.add_parser("train", parents=[common], help="adversarial training on a toy task")
    s.add_argument("--task", choices=["two-moons", "gaussian-shift"])
    s.add_argument("--rotation", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--discrepancy")
    s.add_argument("--eta", type=float)
    s.add_argument("--t-mode", dest="t_mode", choices=["fixed_one", "optimized"])
    s.add_argument("--inner-steps", dest="inner_steps", type=int)
    s.add_argument("--outer-steps", dest="outer_steps", type=int)
    s.add_argument("--lr-outer", dest="lr_outer", type=float)
    s.add_argument("--lr-inner", dest="lr_inner", type=float)
    s.add_argument("--surrogate")
    s.add_argument("--hidden", type=int)
    s.add_argument("--log", help="trajectory CSV path")

    s = sub.add_parser("dataset", parents=[common], help="dump a domain pair")
    s.add_argument("--task", choices=["two-moons", "gaussian-shift", "threshold"])
    s.add_argument("--rotation", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--noise", type=float)
    s.add_argument("--dim", type=int)
    s.add_argument("--shift", type=float)
    s.add_argument("--blind", action="store_true", default=None, help="leave target labels blank")

    s = sub.add_parser("reproduce", parents=[common], help="checked reproduction tables")
    s.add_argument("target", nargs="?", choices=["threshold-example"])
    return p


def resolve(ns: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cmd = ns.command
    cfg = dict(DEFAULTS[cmd], seed=0, csv=False)
    if ns.config:
        try:
            with open(ns.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config!r}: {exc}") from None
        if "config" in data and data.get("schema") == SCHEMA:
            data = data["config"]
        unknown = set(data) - set(cfg) - {"command"}
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        if data.get("command", cmd) != cmd:
            raise UsageError(f"config is for {data['command']!r}, not {cmd!r}")
        cfg.update({k: v for k, v in data.items() if k != "command"})
    for k in cfg:
        v = getattr(ns, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _envelope(cmd: str, cfg: dict, result) -> dict:
    return {"schema": SCHEMA, "command": cmd, "config": {"command": cmd, **cfg}, "result": result}


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _clean(obj):
    """JSON-safe copy: numpy scalars to floats, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_phi(cfg):
    phi = make_phi(cfg["kind"])
    out = {"kind": phi.name, "conjugate_domain": list(phi.conjugate_domain),
           "curvature_at_one": phi.curvature_at_one}
    if cfg["at"] is not None:
        if phi.composite:
            raise UsageError("phi_star of a composite kernel is not defined pointwise")
        pts = _floats(cfg["at"])
        out["phi_star"] = [float(v) for v in phi.phi_star(np.array(pts))]
    if (cfg["p"] is None) != (cfg["q"] is None):
        raise UsageError("--p and --q go together")
    if cfg["p"] is not None:
        P = DiscreteDistribution.on_range(_floats(cfg["p"]))
        Q = DiscreteDistribution.on_range(_floats(cfg["q"]))
        out["divergence"] = exact_f_divergence(P, Q, phi)
    return out


def _load_json_arg(text):
    if text is None:
        raise UsageError("missing --input")
    if isinstance(text, dict):
        return text
    if os.path.exists(text):
        with open(text) as fh:
            return json.load(fh)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--input is neither a file nor JSON: {exc}") from None


def cmd_estimate(cfg):
    data = _load_json_arg(cfg["input"])
    try:
        g = WitnessValues.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"bad witness JSON: {exc}") from None
    return estimate(g, make_phi(cfg["phi"]), cfg["method"], _t_range(cfg["t_range"])).to_dict()


def _threshold_setup(cfg):
    pair = threshold_domains()
    lo, hi = cfg.get("interval", [0.0, 0.5])
    H = HypothesisClass.threshold_grid(lo, hi, int(cfg["grid"]))
    return pair.source, pair.target, H, Threshold(float(cfg["h"]))


def cmd_fdd(cfg):
    mu, nu, H, h = _threshold_setup(cfg)
    phi = make_phi(cfg["phi"])
    if cfg["absolute"]:
        return absolute_fdd(h, H, mu, nu, phi).to_dict()
    tr = _t_range(cfg["t_range"])
    if cfg["rashomon"] is None:
        return fdd(h, H, nu, mu, phi, tr).to_dict()
    rset = rashomon(H, mu, float(cfg["rashomon"]))
    if rset.empty:
        return {"value": None, "rashomon": rset.to_dict(), "note": "empty Rashomon set"}
    est = localized_fdd(h, rset, nu, mu, phi, tr)
    out = est.to_dict()
    out["rashomon"] = rset.to_dict()
    out["R_sup"] = sup_source_disagreement(h, rset, mu)[0]
    return out


def cmd_bounds(cfg):
    action = cfg["action"]
    if action == "fastrate":
        return B.fastrate_constants(float(cfg["m"]), float(cfg["c2"])).to_dict()
    if action == "generalization":
        if cfg["kind"] not in B.GENERALIZATION_KINDS:
            raise UsageError(f"--kind must be one of {B.GENERALIZATION_KINDS}")
        return B.generalization_bound(cfg["kind"], _load_json_arg(cfg["inputs"]), bool(cfg["asymptotic"]))
    # target bounds on the analytic threshold instance
    mu, nu, H, h = _threshold_setup(cfg)
    phi = make_phi(cfg["phi"])
    src = risk(h, mu)
    lam, _ = B.lambda_star(H, mu, nu)
    kind = cfg["kind"]
    if kind == "abs":
        return B.target_bound_absolute(src, absolute_fdd(h, H, mu, nu, phi).value, lambda_star=lam)
    if kind == "general":
        d = fdd(h, H, nu, mu, phi, "nonneg").value
        return B.target_bound_general(src, d, cumulant_profile(h, H, mu, phi), lambda_star=lam)
    if kind == "slow":
        return B.target_bound_slow(src, fdd(h, H, nu, mu, phi).value, phi, lambda_star=lam)
    if kind == "localized":
        r, r1 = float(cfg["rashomon"]), float(cfg["r1"])
        rset = rashomon(H, mu, r)
        prof = cumulant_profile(h, rset, mu, phi)
        C2 = float(cfg["c2"])
        C1 = cfg["c1"]
        if C1 is None:
            C1 = B.fastrate_constants(min(r + r1, 1.0), C2).C1
        loc = localized_fdd(h, rset, nu, mu, phi, r1=r1).value
        lam_r, _ = B.lambda_star(rset, mu, nu)
        R_sup, _ = sup_source_disagreement(h, rset, mu)
        return B.target_bound_localized(src, loc, R_sup, float(C1), C2, lambda_star_r=lam_r,
                                        cumulant=prof, r=r, r1=r1)
    raise UsageError("bounds target needs --kind abs|general|slow|localized")


def _pair(cfg):
    task = cfg["task"]
    if task == "two-moons":
        return two_moons(float(cfg["rotation"]), int(cfg["n"]), int(cfg["m"]),
                         float(cfg.get("noise", 0.1)), seed=int(cfg["seed"]))
    if task == "gaussian-shift":
        return gaussian_shift(int(cfg.get("dim", 1)), float(cfg.get("shift", 1.0)),
                              int(cfg["n"]), int(cfg["m"]), seed=int(cfg["seed"]))
    if task == "threshold":
        return threshold_domains()
    raise UsageError(f"unknown task {task!r}")


def cmd_train(cfg):
    from .trainer import TrainConfig, train

    tc = TrainConfig(
        discrepancy=cfg["discrepancy"], eta=float(cfg["eta"]), t_mode=cfg["t_mode"],
        inner_steps=int(cfg["inner_steps"]), outer_steps=int(cfg["outer_steps"]),
        lr_outer=float(cfg["lr_outer"]), lr_inner=float(cfg["lr_inner"]), seed=int(cfg["seed"]),
        surrogate=cfg["surrogate"], hidden=int(cfg["hidden"]),
    )
    state = train(tc, _pair(cfg))
    if cfg["log"]:
        state.write_csv(cfg["log"])
    return {"metrics": state.metrics, "steps": state.step,
            "final_discrepancy": state.trajectory[-1][1] if state.trajectory else None}


def cmd_dataset(cfg):
    pair = _pair(cfg)
    if cfg["blind"]:
        pair = pair.blind()
    if cfg["csv"] and pair.mode == "sampled":
        if not cfg.get("_out"):
            raise UsageError("dataset --csv needs --out")
        write_csv(pair, cfg["_out"])
        return None
    return pair.describe()


def cmd_reproduce(cfg):
    from .reproduce import threshold_example

    return threshold_example()


COMMANDS = {"phi": cmd_phi, "estimate": cmd_estimate, "fdd": cmd_fdd, "bounds": cmd_bounds,
            "train": cmd_train, "dataset": cmd_dataset, "reproduce": cmd_reproduce}


def _setup_logging():
    level = os.environ.get("FDD_LOG", "quiet").lower()
    if level not in LOG_LEVELS:
        level = "quiet"
    logging.basicConfig(level=LOG_LEVELS[level], stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cmd = ns.command
    try:
        cfg = resolve(ns)
        run_cfg = dict(cfg, _out=ns.out) if cmd == "dataset" else cfg
        result = COMMANDS[cmd](run_cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fdd {cmd}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, SearchError, ArithmeticError) as exc:
        print(f"fdd {cmd}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError) as exc:
        parser.print_usage(sys.stderr)
        print(f"fdd {cmd}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if cmd == "reproduce":
        report = result
        if cfg["csv"]:
            lines = ["name,value,expected,tol,pass"]
            lines += [f"{r.name},{r.value!r},{r.expected!r},{r.tol!r},{r.passed}" for r in report.rows]
            _emit("\n".join(lines), ns.out)
        else:
            print(report.table(), file=sys.stderr)
            _emit(json.dumps(_clean(_envelope(cmd, cfg, report.to_dict())), indent=2), ns.out)
        return 0 if report.passed else EXIT_MISMATCH
    if result is None:
        return 0
    if isinstance(result, B.BoundReport):
        if cfg["csv"]:
            _emit(result.to_csv(), ns.out)
            return 0
        result = result.to_dict()
    _emit(json.dumps(_clean(_envelope(cmd, cfg, result)), indent=2), ns.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
