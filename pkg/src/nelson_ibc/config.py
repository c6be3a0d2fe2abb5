"""YAML run configuration with schema validation.

Example::

    model: {m: 0.0, g: -1.0, P: [0, 0, 0]}
    grid: {r_min: 0.5, r_max: 4.0, n_radial: 3, n_angular: 6, scheme: product-gauss}
    n_max: 2
    lambda: auto        # or a positive number
    mu: auto            # or a number above mu0
    campaign: all
    seed: 0
    max_dim: 50000
    output: {dir: out}

Optional sections ``tail``, ``renorm`` and ``bounds`` override the defaults
in :data:`DEFAULTS`.
"""

import copy
from dataclasses import dataclass

import yaml

from .errors import InvalidConfig
from .grid import SCHEMES, TailQuadrature, build_grid
from .model import ModelParams

CAMPAIGNS = ("build-check", "positivity", "renorm-study", "bounds", "all")

DEFAULTS = {
    "model": {"m": 0.0, "g": -1.0, "P": [0.0, 0.0, 0.0]},
    "grid": {"r_min": 0.5, "r_max": 4.0, "n_radial": 3, "n_angular": 6,
             "scheme": "product-gauss"},
    "tail": {"r_tail_max": 200.0, "n_tail": 400, "tolerance": 1e-9},
    "n_max": 2,
    "lambda": "auto",
    "mu": "auto",
    "campaign": "all",
    "seed": 0,
    "max_dim": 50_000,
    "output": {"dir": "out"},
    "renorm": {
        "cutoffs": [1.0, 2.0, 4.0],
        # the study grid needs a distinct radial shell below each cutoff
        "grid": {"n_radial": 4},
        "lambda_build": 1.0,
        "lambda_eval": "auto",
        "closed_form_cutoffs": [1.0, 10.0, 100.0],
    },
    "bounds": {"lambdas": [10.0, 100.0, 1000.0], "s": 0.2, "eps": 0.1,
               "td_lambda": 1.0, "probes": 20},
}


def _merge(base, override, path=""):
    """Recursive merge that rejects unknown keys.

    ``renorm.grid`` may name any subset of the top-level grid keys.
    """
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        allowed = DEFAULTS["grid"] if where.startswith("renorm.grid.") else base
        if key not in allowed:
            raise InvalidConfig(f"unknown config key {where!r}")
        if isinstance(base.get(key), dict):
            if not isinstance(val, dict):
                raise InvalidConfig(f"{where!r} must be a mapping")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


def _number(x, where, positive=False, integer=False):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InvalidConfig(f"{where} must be a number, got {x!r}")
    if integer and int(x) != x:
        raise InvalidConfig(f"{where} must be an integer, got {x!r}")
    if positive and not x > 0:
        raise InvalidConfig(f"{where} must be positive, got {x!r}")
    return int(x) if integer else float(x)


def _auto_or_number(x, where, positive=False):
    if x == "auto":
        return "auto"
    return _number(x, where, positive)


@dataclass(frozen=True)
class RunConfig:
    raw: dict

    @property
    def params(self):
        m = self.raw["model"]
        try:
            return ModelParams(m=m["m"], g=m["g"], P=tuple(m["P"]))
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(f"model: {exc}") from exc

    @property
    def tail(self):
        t = self.raw["tail"]
        return TailQuadrature(t["r_tail_max"], t["n_tail"], t["tolerance"])

    def grid(self, overrides=None):
        g = dict(self.raw["grid"])
        g.update(overrides or {})
        return build_grid(g["r_min"], g["r_max"], g["n_radial"], g["n_angular"],
                          g["scheme"])

    def __getitem__(self, key):
        return self.raw[key]

    def with_overrides(self, **kw):
        raw = copy.deepcopy(self.raw)
        for k, v in kw.items():
            if v is not None:
                raw[k] = v
        return validate(raw)


def validate(raw):
    """Check types and ranges; returns a :class:`RunConfig`."""
    r = raw
    for key in ("m", "g"):
        _number(r["model"][key], f"model.{key}")
    P = r["model"]["P"]
    if not isinstance(P, (list, tuple)) or len(P) != 3:
        raise InvalidConfig("model.P must be a list of 3 numbers")
    for i, x in enumerate(P):
        _number(x, f"model.P[{i}]")
    g = r["grid"]
    _number(g["r_min"], "grid.r_min", positive=True)
    _number(g["r_max"], "grid.r_max", positive=True)
    _number(g["n_radial"], "grid.n_radial", positive=True, integer=True)
    _number(g["n_angular"], "grid.n_angular", positive=True, integer=True)
    if g["scheme"] not in SCHEMES:
        raise InvalidConfig(f"grid.scheme must be one of {SCHEMES}")
    t = r["tail"]
    _number(t["r_tail_max"], "tail.r_tail_max", positive=True)
    _number(t["n_tail"], "tail.n_tail", positive=True, integer=True)
    _number(t["tolerance"], "tail.tolerance", positive=True)
    n_max = _number(r["n_max"], "n_max", integer=True)
    if n_max < 0:
        raise InvalidConfig("n_max must be >= 0")
    _auto_or_number(r["lambda"], "lambda", positive=True)
    _auto_or_number(r["mu"], "mu")
    if r["campaign"] not in CAMPAIGNS:
        raise InvalidConfig(f"campaign must be one of {CAMPAIGNS}")
    _number(r["seed"], "seed", integer=True)
    _number(r["max_dim"], "max_dim", positive=True, integer=True)
    if not isinstance(r["output"]["dir"], str):
        raise InvalidConfig("output.dir must be a string")
    rn = r["renorm"]
    cut = rn["cutoffs"]
    if not isinstance(cut, list) or len(cut) < 2:
        raise InvalidConfig("renorm.cutoffs must list at least two values")
    for i, c in enumerate(cut + list(rn["closed_form_cutoffs"])):
        _number(c, f"renorm cutoff {i}", positive=True)
    _number(rn["lambda_build"], "renorm.lambda_build", positive=True)
    _auto_or_number(rn["lambda_eval"], "renorm.lambda_eval", positive=True)
    b = r["bounds"]
    if not isinstance(b["lambdas"], list) or len(b["lambdas"]) < 3:
        raise InvalidConfig("bounds.lambdas needs at least 3 values")
    for i, x in enumerate(b["lambdas"]):
        _number(x, f"bounds.lambdas[{i}]", positive=True)
    _number(b["s"], "bounds.s")
    _number(b["eps"], "bounds.eps", positive=True)
    _number(b["td_lambda"], "bounds.td_lambda", positive=True)
    _number(b["probes"], "bounds.probes", positive=True, integer=True)
    cfg = RunConfig(r)
    # model and tail invariants live in their constructors
    cfg.params
    cfg.tail
    return cfg


def from_dict(data):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidConfig("config must be a mapping at the top level")
    return validate(_merge(DEFAULTS, data))


def load_config(path):
    """Read and validate a YAML file; every failure maps to :class:`InvalidConfig`."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise InvalidConfig(f"malformed YAML in {path}: {exc}") from exc
    return from_dict(data)
