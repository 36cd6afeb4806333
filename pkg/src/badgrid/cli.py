"""badgrid command line.

Every command reads a problem document (JSON with m, n, optional r, s, A, b
and precision_horizon), runs one library operation and writes a JSON, CSV or
plot-data artifact with the resolved configuration embedded. Exit codes:
0 success, 2 precondition error, 3 budget exceeded, 4 precision horizon.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

from . import __version__
from .best_approx import dirichlet_check, doubling_index, sequence_for, soa_verdict
from .bl_sequence import build_phi, verify_phi
from .dimension import bad_A_boxcount, bad_b_boxcount, inclusion_check
from .diophantine import badness_scan, dani_consistency, zeta
from .errors import BudgetError, PrecisionError, PreconditionError
from .grid import orbit_scan
from .io import FORMATS, atomic_write, read_json, to_csv_text, to_json_text, to_plot_text
from .transference import transfer_solution
from .weights import TargetVector, parse_problem

EXIT_OK, EXIT_PRECONDITION, EXIT_BUDGET, EXIT_PRECISION = 0, 2, 3, 4
COMMANDS = ("badness", "orbit", "best-approx", "soa", "bl-seq", "transfer", "boxcount", "zeta")
GLOBAL_KEYS = ("input", "output", "format", "seed", "budget", "jobs")


@dataclass
class Artifact:
    """What a command produced, in the three output shapes."""

    result: dict
    csv_columns: list
    csv_rows: list
    plot_columns: list
    plot_rows: list


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise PreconditionError(f"cannot parse number list {text!r}") from exc


def _require(cfg: dict, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise PreconditionError("missing parameter(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _problem(cfg: dict, need_A: bool = True):
    _require(cfg, "input")
    try:
        doc = read_json(cfg["input"])
    except OSError as exc:
        raise PreconditionError(f"cannot read input {cfg['input']!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"input {cfg['input']!r} is not valid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise PreconditionError("input document must be a JSON object")
    W, A, b = parse_problem(doc)
    if need_A and A is None:
        raise PreconditionError("input document has no matrix A")
    return W, A, b


def _positive(cfg: dict, key: str) -> float:
    v = float(cfg[key])
    if not v > 0 or not math.isfinite(v):
        raise PreconditionError(f"--{key.replace('_', '-')} must be a positive number")
    return v


def cmd_badness(cfg: dict) -> Artifact:
    _require(cfg, "epsilon", "qmax")
    W, A, b = _problem(cfg)
    res = badness_scan(A, b, W, _positive(cfg, "epsilon"), _positive(cfg, "qmax"), float(cfg.get("qmin") or 0), cfg["budget"])
    out = res.to_json()
    return Artifact(out, ["min_value", "witness", "verdict", "Q_max", "q_min", "epsilon"], [out],
                    ["min_value", "epsilon"], [(res.min_value, res.eps)])


def cmd_orbit(cfg: dict) -> Artifact:
    _require(cfg, "epsilon", "tmax")
    W, A, b = _problem(cfg)
    eps, T = _positive(cfg, "epsilon"), int(cfg["tmax"])
    samples = orbit_scan(A, b, W, eps, T, cfg["budget"])
    rows = [{"t": s.t, "min_value": s.min_value, "in_L_epsilon": s.in_L, "height": s.height} for s in samples]
    out = {"epsilon": eps, "T_max": T, "samples": rows}
    if cfg.get("dani"):
        out["dani"] = dani_consistency(A, b, W, eps, T, budget=cfg["budget"]).to_json()
    flag = lambda f: 0.5 if isinstance(f, str) else bool(f)
    return Artifact(out, ["t", "min_value", "in_L_epsilon", "height"], rows,
                    ["t", "height", "in_L_epsilon"], [(s.t, s.height, flag(s.in_L)) for s in samples])


def cmd_best_approx(cfg: dict) -> Artifact:
    _require(cfg, "ymax")
    W, A, _ = _problem(cfg)
    seq = sequence_for(A, W, _positive(cfg, "ymax"), cfg.get("orientation") or "tA",
                       method=cfg.get("method") or "lattice", budget=cfg["budget"])
    out = seq.to_json()
    if len(seq) >= 2:
        ok, worst = dirichlet_check(seq)
        dr = doubling_index(seq)
        out["dirichlet"] = {"ok": ok, "worst_product": worst}
        out["doubling"] = {"V": dr.V, "c": dr.c, "gamma": dr.gamma}
    rows = seq.to_rows()
    return Artifact(out, ["k", "y", "Y", "M", "MY_next"], rows,
                    ["k", "log_Y", "log_M"], [(r["k"], math.log(r["Y"]), math.log(r["M"]) if r["M"] > 0 else None) for r in rows])


def cmd_soa(cfg: dict) -> Artifact:
    _require(cfg, "ymax", "eps_grid")
    W, A, _ = _problem(cfg)
    grid = _floats(cfg["eps_grid"])
    rep = soa_verdict(A, W, _positive(cfg, "ymax"), grid, float(cfg.get("threshold") or 0.5), cfg["budget"])
    out = rep.to_json()
    rows, prow = [], []
    for orient, r in rep.orientations.items():
        for eps, traj in (r.get("trajectories") or {}).items():
            for p in traj:
                rows.append({"orientation": orient, "epsilon": eps, "k": p["k"], "statistic": p["stat"]})
                prow.append((orient, eps, p["k"], p["stat"]))
    return Artifact(out, ["orientation", "epsilon", "k", "statistic"], rows,
                    ["orientation", "epsilon", "k", "statistic"], prow)


def cmd_bl_seq(cfg: dict) -> Artifact:
    _require(cfg, "ymax", "R", "S")
    W, A, _ = _problem(cfg)
    seq = sequence_for(A, W, _positive(cfg, "ymax"), "tA", budget=cfg["budget"])
    phi = build_phi(seq, float(cfg["R"]), float(cfg["S"]))
    rep = verify_phi(seq, phi)
    out = rep.to_json() | {"R": phi.R, "S": phi.S, "V": phi.V, "warnings": list(phi.warnings)}
    if cfg.get("alpha") is not None:
        inc = inclusion_check(A, W, seq, phi, float(cfg["alpha"]), int(cfg.get("samples") or 200),
                              float(cfg.get("qmax") or 1e4), seed=int(cfg["seed"]), budget=cfg["budget"],
                              sampler="nested" if W.m == 1 else "uniform")
        out["inclusion"] = inc.to_json()
    rows = [{"i": i + 1, "phi": j, "Y": seq.records[j - 1].Y.value, "M": seq.records[j - 1].M.value}
            for i, j in enumerate(phi.indices)]
    return Artifact(out, ["i", "phi", "Y", "M"], rows, ["i", "phi"], [(r["i"], r["phi"]) for r in rows])


def cmd_transfer(cfg: dict) -> Artifact:
    _require(cfg, "epsilon", "T")
    W, A, _ = _problem(cfg)
    res = transfer_solution(A, W, _positive(cfg, "epsilon"), _positive(cfg, "T"), cfg["budget"])
    out = res.to_json()
    rows = []
    for name, bd in res.bounds.items():
        rows.append({"bound": name, "log_lhs": bd["log_lhs"], "log_rhs": bd["log_rhs"], "ok": bd["ok"]})
    return Artifact(out, ["bound", "log_lhs", "log_rhs", "ok"], rows,
                    ["bound", "log_lhs", "log_rhs"], [(r["bound"], r["log_lhs"], r["log_rhs"]) for r in rows])


def cmd_boxcount(cfg: dict) -> Artifact:
    _require(cfg, "epsilon", "deltas", "qmax")
    which = cfg.get("set") or "A"
    deltas = _floats(cfg["deltas"])
    eps, Q = _positive(cfg, "epsilon"), _positive(cfg, "qmax")
    kw = dict(budget=cfg["budget"], jobs=int(cfg.get("jobs") or 1), corners=bool(cfg.get("corners")),
              offset=float(cfg.get("offset") if cfg.get("offset") is not None else 0.5))
    if which == "A":
        W, A, _ = _problem(cfg)
        rep = bad_A_boxcount(A, W, eps, deltas, Q, **kw)
    elif which == "b":
        W, _, b = _problem(cfg, need_A=False)
        rep = bad_b_boxcount(b if b is not None else TargetVector.zeros(W.m), W, eps, deltas, Q, **kw)
    else:
        raise PreconditionError(f"--set must be A or b, got {which!r}")
    rows = [{"delta": d, "count": c, "local_slope": s} for d, c, s in rep.rows()]
    plot = [(-math.log(d), math.log(c) if c > 0 else None) for d, c in zip(rep.deltas, rep.counts)]
    return Artifact(rep.to_json(), ["delta", "count", "local_slope"], rows, ["log_inv_delta", "log_count"], plot)


def cmd_zeta(cfg: dict) -> Artifact:
    _require(cfg, "T")
    if cfg.get("b"):
        b = TargetVector(tuple(x.strip() for x in str(cfg["b"]).split(",")))
    else:
        _, _, b = _problem(cfg, need_A=False)
        if b is None:
            raise PreconditionError("zeta needs a target b (in the input document or via --b)")
    N = zeta(b, _positive(cfg, "T"), int(cfg.get("cap") or 10**7))
    out = {"b": [str(x) for x in b.coords], "T": float(cfg["T"]), "zeta": N}
    return Artifact(out, ["T", "zeta"], [out], ["T", "zeta"], [(out["T"], N)])


HANDLERS = {
    "badness": cmd_badness,
    "orbit": cmd_orbit,
    "best-approx": cmd_best_approx,
    "soa": cmd_soa,
    "bl-seq": cmd_bl_seq,
    "transfer": cmd_transfer,
    "boxcount": cmd_boxcount,
    "zeta": cmd_zeta,
}


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*args, **kw)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("-i", "--input", help="problem JSON (m, n, r, s, A, b, precision_horizon)")
    common.add_argument("-o", "--output", help="output path (default: standard output)")
    common.add_argument("--format", choices=FORMATS, help="json (default), csv or plotdata")
    common.add_argument("--config", help="JSON file of parameters; command-line flags override it")
    common.add_argument("--seed", type=int, help="seed for sampling steps (default 0)")
    common.add_argument("--budget", type=int, help="enumeration cap (default: $BADGRID_BUDGET or 2000000)")
    common.add_argument("--jobs", type=int, help="worker cap for sweeps; results do not depend on it")

    # no prefix matching: "--b" must never silently become "--budget"
    p = argparse.ArgumentParser(
        prog="badgrid", description="Weighted Diophantine approximation experiments.", allow_abbrev=False
    )
    p.add_argument("--version", action="version", version=f"badgrid {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("badness", parents=[common], help="min ||q|| <Aq - b> over a q-box")
    s.add_argument("--epsilon", type=float)
    s.add_argument("--qmax", type=float)
    s.add_argument("--qmin", type=float, help="only scan ||q||_s >= qmin")

    s = sub.add_parser("orbit", parents=[common], help="integer-time samples of the diagonal orbit")
    s.add_argument("--epsilon", type=float)
    s.add_argument("--tmax", type=int)
    s.add_argument("--dani", action="store_true", default=None, help="also cross-check against a direct scan")

    s = sub.add_parser("best-approx", parents=[common], help="best approximation sequence")
    s.add_argument("--ymax", type=float)
    s.add_argument("--orientation", choices=("tA", "A"))
    s.add_argument("--method", choices=("lattice", "shell"))

    s = sub.add_parser("soa", parents=[common], help="singular-on-average detector")
    s.add_argument("--ymax", type=float)
    s.add_argument("--eps-grid", dest="eps_grid", help="comma-separated epsilons")
    s.add_argument("--threshold", type=float)

    s = sub.add_parser("bl-seq", parents=[common], help="modified Bugeaud-Laurent index sequence")
    s.add_argument("--ymax", type=float)
    s.add_argument("--R", dest="R", type=float)
    s.add_argument("--S", dest="S", type=float)
    s.add_argument("--alpha", type=float, help="also run the inclusion check at this alpha")
    s.add_argument("--samples", type=int)
    s.add_argument("--qmax", type=float)

    s = sub.add_parser("transfer", parents=[common], help="transfer a solution for A to one for tA")
    s.add_argument("--epsilon", type=float)
    s.add_argument("--T", dest="T", type=float)

    s = sub.add_parser("boxcount", parents=[common], help="box-counting sweep for Bad_A or Bad^b")
    s.add_argument("--set", choices=("A", "b"))
    s.add_argument("--epsilon", type=float)
    s.add_argument("--deltas", help="comma-separated decreasing resolutions")
    s.add_argument("--qmax", type=float)
    s.add_argument("--corners", action="store_true", default=None)
    s.add_argument("--offset", type=float, help="test point inside each box, as a fraction of the side")

    s = sub.add_parser("zeta", parents=[common], help="least N with a q <= N and ||q b|| <= T^2/N")
    s.add_argument("--T", dest="T", type=float)
    s.add_argument("--b", help="comma-separated target (overrides the input document)")
    s.add_argument("--cap", type=int)
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = {"format": "json", "seed": 0, "jobs": 1, "budget": None}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                filecfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise PreconditionError(f"cannot load config {args.config!r}: {exc}") from exc
        if not isinstance(filecfg, dict):
            raise PreconditionError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in filecfg.items()})
    for k, v in vars(args).items():
        if v is not None and k != "config":
            cfg[k] = v
    if cfg["budget"] is None:
        env = os.environ.get("BADGRID_BUDGET")
        cfg["budget"] = int(env) if env else 2_000_000
    for key in ("budget", "jobs"):
        if int(cfg[key]) < 1:
            raise PreconditionError(f"--{key} must be >= 1")
        cfg[key] = int(cfg[key])
    cfg["seed"] = int(cfg["seed"])
    if cfg["format"] not in FORMATS:
        raise PreconditionError(f"unknown format {cfg['format']!r}")
    return cfg


def render(art: Artifact, cfg: dict) -> str:
    shown = {k: v for k, v in sorted(cfg.items()) if k != "output"}
    fmt = cfg["format"]
    if fmt == "json":
        return to_json_text({"config": shown, "result": art.result})
    header = ["badgrid " + json.dumps(shown, sort_keys=True, default=str)]
    if fmt == "csv":
        return to_csv_text(art.csv_rows, art.csv_columns, header)
    return to_plot_text(art.plot_columns, art.plot_rows, header)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        art = HANDLERS[cfg["command"]](cfg)
        text = render(art, cfg)
        if cfg.get("output"):
            atomic_write(cfg["output"], text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except BudgetError as exc:
        print(f"badgrid: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PrecisionError as exc:
        print(f"badgrid: precision horizon: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except PreconditionError as exc:
        print(f"badgrid: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


def main(argv=None) -> None:
    sys.exit(run(argv))
