"""Command-line front end: ``indrep cover | induce | verify``.

Exit codes: 0 when every check passes (inconclusive checks are flagged but
do not fail the run), 1 when any check fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import cohomology as coh
from .covers import CoveringError, covering_from_config, covering_to_config
from .functors import (
    Cover,
    induce,
    injectivity_experiment,
    local_monodromy_check,
    monodromy_residual,
    restrict,
    verify_lemma1,
    verify_lemma2,
    wreath_pattern_ok,
)
from .groups import DomainError
from .reps import (
    LeafConstraint,
    closed_surface_rep,
    random_rep,
    read_rep,
    rep_to_json,
    solve_relator,
)

CHECKS = ("lemma1", "lemma2", "injectivity", "local-monodromy", "e17", "phi-poisson", "scaling")
PUNCTURED_ONLY = {"local-monodromy", "e17", "phi-poisson"}
CLOSED_ONLY = {"scaling"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    cover: Cover
    rank: int = 1
    seed: int = 0
    tolerance: float = 1e-8
    trials: int = 10
    injectivity_pairs: int = 50
    leaf: str | None = None
    output: str | None = None
    rep: str | None = None
    raw: dict = field(default_factory=dict, repr=False)


def load_config(path, seed=None, tol=None, trials=None, out=None, rep=None):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("format", 1) != 1:
        raise ConfigError(f"unsupported config format {raw.get('format')}")
    try:
        cover = Cover(covering_from_config(raw))
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    leaf = raw.get("leaf")
    if leaf is not None:
        if not isinstance(leaf, dict) or leaf.get("mode") != "trivial":
            raise ConfigError('only the leaf constraint {"mode": "trivial"} is supported')
        leaf = "trivial"
    cfg = RunConfig(
        cover=cover,
        rank=int(raw.get("rank", 1)),
        seed=int(raw.get("seed", 0) if seed is None else seed),
        tolerance=float(raw.get("tolerance", 1e-8) if tol is None else tol),
        trials=int(raw.get("trials", 10) if trials is None else trials),
        injectivity_pairs=int(raw.get("injectivity_pairs", 50)),
        leaf=leaf,
        output=raw.get("output") if out is None else out,
        rep=raw.get("rep") if rep is None else rep,
        raw=raw,
    )
    if cfg.rank < 1 or cfg.trials < 1 or cfg.tolerance <= 0:
        raise ConfigError("rank and trials must be positive, tolerance > 0")
    return cfg


# -- sampling -------------------------------------------------------------


def base_rep(cfg):
    base = cfg.cover.base
    if base.closed:
        return closed_surface_rep(base, cfg.rank, cfg.seed)
    return random_rep(base, cfg.rank, cfg.seed)


def cover_rep(cfg):
    """Representation of Delta on the Schreier alphabet, plus its validation residual."""
    cover = cfg.cover
    names, relators = cover.cs.names, cover.delta_relators()
    if cfg.rep:
        h = read_rep(cfg.rep, names, relators)
    elif cover.base.closed:
        h = restrict(cover, base_rep(cfg))
    else:
        h = random_rep(names, cfg.rank, cfg.seed + 1)
        if cfg.leaf == "trivial":
            h, _ = solve_relator(h, relator=relators, leaf=LeafConstraint.trivial(cover.y_loops()))
    resid = h.relator_residual()
    if cfg.leaf == "trivial":
        resid = max(resid, monodromy_residual(cover, h))
    return h, float(resid)


# -- verify ---------------------------------------------------------------


def _run_check(name, cfg, rho, h):
    cover, seed, tol, trials = cfg.cover, cfg.seed, cfg.tolerance, cfg.trials
    if name == "lemma1":
        return verify_lemma1(cover, rho, seed)
    if name == "lemma2":
        return verify_lemma2(cover, h, seed)
    if name == "injectivity":
        return injectivity_experiment(cover, cfg.injectivity_pairs, seed, cfg.rank)
    if name == "local-monodromy":
        return local_monodromy_check(cover, h, seed, tol)
    if name == "e17":
        return coh.verify_e17(cover, h, trials, tol, seed)
    if name == "phi-poisson":
        return coh.verify_phi_poisson(cover, rho, trials, tol, seed)
    if name == "scaling":
        return coh.verify_scaling(cover, rho, trials, tol, seed)
    raise ConfigError(f"unknown check {name}")


def _record(name, seed, rec, elapsed):
    return {
        "check": name,
        "status": rec.get("status", "fail"),
        "residual": rec.get("residual"),
        "seed": seed,
        "timing_ms": round(1000 * elapsed, 3),
        "details": rec.get("details", {}),
    }


def _plan(which, cfg):
    closed = cfg.cover.base.closed
    if which == "all":
        return [c for c in CHECKS if (c not in PUNCTURED_ONLY or not closed) and (c not in CLOSED_ONLY or closed)]
    if which in PUNCTURED_ONLY and closed:
        raise ConfigError(f"{which} needs a punctured base surface")
    if which in CLOSED_ONLY and (not closed or cfg.cover.top.punctures):
        raise ConfigError(f"NotUnramifiedClosed: {which} needs a closed base and an unramified cover")
    return [which]


def cmd_verify(cfg, which):
    """Run the requested checks; returns the list of report records."""
    plan = _plan(which, cfg)
    rho = base_rep(cfg)
    h, h_resid = cover_rep(cfg)
    uses_h = {"lemma2", "local-monodromy", "e17"}
    records = []
    for name in plan:
        t0 = time.perf_counter()
        if name in uses_h and h_resid > cfg.tolerance:
            rec = {"status": "fail", "residual": h_resid,
                   "details": {"error": "NotARep",
                               "message": f"rep residual {h_resid:.3e} exceeds tolerance {cfg.tolerance:.1e}"}}
        else:
            try:
                rec = _run_check(name, cfg, rho, h)
            except coh.NotARep as exc:
                rec = {"status": "fail", "residual": None, "details": {"error": "NotARep", "message": str(exc)}}
            except coh.AdjointSolveSingular as exc:
                rec = {"status": "inconclusive", "residual": None,
                       "details": {"error": "AdjointSolveSingular", "message": str(exc)}}
        records.append(_record(name, cfg.seed, rec, time.perf_counter() - t0))
    return records


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_report(records, path=None):
    lines = [json.dumps(_jsonable(r), sort_keys=True) for r in records]
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- cover / induce -------------------------------------------------------


def cmd_cover(cfg):
    cover = cfg.cover
    base = cover.base
    print(base.describe())
    print(f"degree {cover.degree}")
    print(cover.cs.describe(base))
    print(cover.top.describe(base))
    payload = {
        "format": 1,
        "covering": covering_to_config(cover.cov),
        "transversal": [base.format(g) for g in cover.cs.transversal],
        "schreier_generators": {n: base.format(s) for n, s in zip(cover.cs.names, cover.cs.schreier_gens)},
        "cover_genus": cover.top.genus,
        "punctures": [
            {"over": f"c{p.base_puncture + 1}", "cycle": [s + 1 for s in p.cycle],
             "ramification": p.ramification, "loop": base.format(p.loop)}
            for p in cover.top.punctures
        ],
    }
    print(json.dumps(payload, indent=1))
    return payload


def cmd_induce(cfg, rep_path, out_path):
    cover = cfg.cover
    h = read_rep(rep_path, cover.cs.names, cover.delta_relators())
    ind = induce(cover, h)
    if not wreath_pattern_ok(ind):
        raise DomainError("induced matrices violate the wreath zero pattern")
    with open(out_path, "w") as fh:
        json.dump(rep_to_json(ind.rep), fh, indent=1)
    return ind


# -- entry point ----------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="indrep", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("cover", help="print coset structure and cover topology")
    pc.add_argument("--config", required=True)

    pi = sub.add_parser("induce", help="write the induced representation")
    pi.add_argument("--config", required=True)
    pi.add_argument("--rep", required=True, help="matrix file on the Schreier alphabet")
    pi.add_argument("--out", required=True)

    pv = sub.add_parser("verify", help="run verifiers and write a JSON Lines report")
    pv.add_argument("which", choices=CHECKS + ("all",))
    pv.add_argument("--config", required=True)
    pv.add_argument("--seed", type=int)
    pv.add_argument("--tol", type=float)
    pv.add_argument("--trials", type=int)
    pv.add_argument("--out")
    pv.add_argument("--rep", help="matrix file on the Schreier alphabet (overrides sampling)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            cfg = load_config(args.config, args.seed, args.tol, args.trials, args.out, args.rep)
        else:
            cfg = load_config(args.config)
        if args.command == "cover":
            cmd_cover(cfg)
            return 0
        if args.command == "induce":
            cmd_induce(cfg, args.rep, args.out)
            return 0
        records = cmd_verify(cfg, args.which)
    except (ConfigError, CoveringError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_report(records, cfg.output)
    for r in records:
        res = "-" if r["residual"] is None else f"{r['residual']:.2e}"
        print(f"{r['check']:16s} {r['status']:13s} residual {res}", file=sys.stderr)
    failed = any(r["status"] == "fail" for r in records)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
