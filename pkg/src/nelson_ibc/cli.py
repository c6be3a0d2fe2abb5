"""Command line entry point.

    nelson-ibc run --config run.yaml --campaign all --out out/
    nelson-ibc describe --config run.yaml

Exit codes: 0 all checks passed, 1 a check failed, 2 configuration error,
3 basis dimension above the cap.
"""

import argparse
import datetime as dt
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .campaigns import run_campaigns
from .config import from_dict, load_config
from .errors import (DegenerateNumerics, InvalidConfig, NoConvergence, ResourceLimit,
                     SeriesDivergent, SingularSolve)
from .fock import sector_sizes

logger = logging.getLogger("nelson_ibc")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3
REPORT_NAME = "report.json"


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def _now():
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _load(args):
    cfg = load_config(args.config) if args.config else from_dict({})
    over = {"campaign": args.campaign, "seed": args.seed, "max_dim": args.max_dim}
    if getattr(args, "out", None):
        out = dict(cfg["output"])
        out["dir"] = args.out
        over["output"] = out
    return cfg.with_overrides(**over)


CAVEATS = {
    "mu0": "maximum of the diagonal of S over the truncated basis, not a "
           "supremum over all momenta",
    "positivity": "entrywise sign tests on discrete matrices; they certify the "
                  "discrete operators only",
    "constants": "all bound constants and thresholds are empirical for this instance",
}


def cmd_run(args):
    cfg = _load(args)
    out_dir = cfg["output"]["dir"]
    os.makedirs(out_dir, exist_ok=True)
    started = _now()
    checks, resolved, basis = run_campaigns(cfg, out_dir)
    passed = all(c["passed"] for c in checks)
    report = {
        "version": __version__,
        "config": cfg.raw,
        "basis": {"dim": basis.dim, "sector_sizes": basis.sizes,
                  "grid": basis.grid.summary()},
        "resolved": resolved,
        "checks": checks,
        "passed": passed,
        "caveats": CAVEATS,
        "timestamps": {"started": started, "finished": _now()},
    }
    path = os.path.join(out_dir, REPORT_NAME)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  [{c['campaign']}] {c['name']}")
    print(f"report written to {path}")
    return EXIT_OK if passed else EXIT_FAIL


def describe_text(cfg):
    grid = cfg.grid()
    sizes = sector_sizes(len(grid), cfg["n_max"])
    lines = [
        f"model: m={cfg['model']['m']} g={cfg['model']['g']} P={cfg['model']['P']}",
        "grid: " + ", ".join(f"{k}={v}" for k, v in grid.summary().items()),
        f"n_max: {cfg['n_max']}",
    ]
    for n, s in enumerate(sizes):
        lines.append(f"  sector {n}: {s}")
    total = sum(sizes)
    cap = cfg["max_dim"]
    lines.append(f"dimension: {total} (cap {cap}{', EXCEEDED' if total > cap else ''})")
    lam = cfg["lambda"]
    lines.append("lambda: " + ("auto (doubled until ||(S-mu)R0|| <= 0.9)"
                               if lam == "auto" else str(lam)))
    lines.append("mu: " + ("auto (mu0 + 1)" if cfg["mu"] == "auto" else str(cfg["mu"])))
    lines.append(f"campaign: {cfg['campaign']}")
    return "\n".join(lines)


def cmd_describe(args):
    print(describe_text(_load(args)))
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog="nelson-ibc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, func, help_ in (("run", cmd_run, "run verification campaigns"),
                              ("describe", cmd_describe, "print resolved parameters")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", metavar="PATH", help="YAML config file")
        s.add_argument("--campaign", metavar="NAME", help="override the campaign")
        s.add_argument("--seed", type=int, metavar="N", help="probe-vector seed")
        s.add_argument("--max-dim", type=int, metavar="N", dest="max_dim",
                       help="basis dimension cap")
        if name == "run":
            s.add_argument("--out", metavar="DIR", help="output directory")
        s.set_defaults(func=func)
    return p


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InvalidConfig as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimit as exc:
        print(f"resource limit: basis dimension {exc.dimension} exceeds cap {exc.cap}",
              file=sys.stderr)
        return EXIT_RESOURCE
    except (SeriesDivergent, NoConvergence, SingularSolve, DegenerateNumerics) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
