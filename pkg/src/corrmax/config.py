"""Experiment configuration: INI-style sections read with configparser.

    [experiment]
    kind = extremal-index
    example = ex-3-10
    seed = 20240601

    [budget]
    trials = 100000000

    [custom]              ; only for example = custom
    slopes = 2, 3
    zeta = sqrt2/2, sqrt2/2
    offsets = 0, 1
    weights = 1, 256
    alpha = 1/4
    mode = finite         ; or periodic, with period = q
    radii = 0.01, 0.01    ; optional
    q_n = 1               ; optional run length

Numbers accept exact syntax ("2/3", "sqrt2/16", "3*sqrt5/7").
"""
import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import example_ids, get_example
from .dynamics import LacunarySeed, RationalSeed, SqrtSeed, TorusMap
from .exact import parse_number
from .observable import MaximalSetSpec, SpecError

KINDS = ("piling-law", "extremal-index", "empirical-piling", "tail", "functional-limit",
         "dependence-bounds")
EXAMPLES = tuple(example_ids()) + ("custom",)

# budgets per kind; any key can be overridden from the file or the command line
DEFAULT_BUDGETS = {
    "piling-law": {"samples": 100000},
    "extremal-index": {"n": 10000, "trials": 100000000, "tau": 1.0},
    "empirical-piling": {"n": 1000000, "clusters": 100000, "window": 4, "tau": 1.0},
    "tail": {"n": (1000, 10000), "samples": 10000000},
    "functional-limit": {"n": 100000, "paths": 2000, "eps": 0.001, "series": 10000,
                         "grid": 101},
    "dependence-bounds": {"kmax": 12, "rho": 1.0 / 3.0},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    example: str
    seed: int = 0
    out: str = "results"
    budget: dict = field(default_factory=dict)
    custom: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.example not in EXAMPLES:
            raise ConfigError(f"unknown example id {self.example!r}; choose from {', '.join(EXAMPLES)}")
        if self.example == "custom" and not self.custom and self.kind != "dependence-bounds":
            raise ConfigError("example = custom needs a [custom] section")
        merged = dict(DEFAULT_BUDGETS[self.kind])
        for k, v in self.budget.items():
            merged[k] = _budget_value(v)
        self.budget = merged


def _budget_value(v):
    if not isinstance(v, str):
        return v
    parts = [p.strip() for p in v.split(",") if p.strip()]
    vals = tuple(_scalar(p) for p in parts)
    return vals[0] if len(vals) == 1 else vals


def _scalar(text):
    x = float(parse_number(text.replace("e", "*10**").replace("E", "*10**")))
    return int(x) if x.is_integer() and "." not in text and "/" not in text else x


_SQRT = re.compile(r"^(?:(\d+)\s*\*?\s*)?sqrt\(?(\d+)\)?(?:\s*/\s*(\d+))?$")
_RATIONAL = re.compile(r"^(\d+)(?:\s*/\s*(\d+))?$")
_LACUNARY = re.compile(r"^lacunary(?:\((\d+),\s*(\d+)\))?$")


def parse_seed(text):
    """A zeta coordinate: "p/q", "sqrtA/den", "num*sqrtA/den" or "lacunary(3,3)"."""
    s = text.strip().lower().replace(" ", "")
    m = _RATIONAL.match(s)
    if m:
        return RationalSeed(int(m.group(1)), int(m.group(2) or 1))
    m = _SQRT.match(s)
    if m:
        return SqrtSeed(int(m.group(2)), int(m.group(1) or 1), int(m.group(3) or 1))
    m = _LACUNARY.match(s)
    if m:
        return LacunarySeed(int(m.group(1) or 3), int(m.group(2) or 3))
    raise ConfigError(f"unsupported zeta literal {text!r}")


def _list(text):
    return [p.strip() for p in str(text).split(",") if p.strip()]


def build_custom_spec(block):
    """MaximalSetSpec from a [custom] block; validation errors propagate."""
    try:
        tmap = TorusMap(tuple(int(s) for s in _list(block["slopes"])))
        zeta = tuple(parse_seed(z) for z in _list(block["zeta"]))
        offsets = tuple(int(m) for m in _list(block["offsets"]))
        weights = tuple(parse_number(c) for c in _list(block["weights"]))
    except KeyError as exc:
        raise ConfigError(f"[custom] is missing the key {exc.args[0]!r}") from None
    alphas = _list(block.get("alpha", ""))
    if not alphas:
        raise ConfigError("[custom] is missing the key 'alpha'")
    alpha = alphas[0] if len(alphas) == 1 else tuple(alphas)
    radii = tuple(_list(block["radii"])) if "radii" in block else None
    dens = tuple(_list(block["densities"])) if "densities" in block else None
    period = int(block["period"]) if "period" in block else None
    signed = str(block.get("signed", "false")).lower() in ("1", "true", "yes")
    return MaximalSetSpec(tmap, zeta, offsets, weights, alpha, dens, radii,
                          block.get("mode", "finite"), period, None, signed, "custom")


def resolve_example(config):
    """(spec, q_n, catalog entry or None) for the configured example."""
    if config.example == "custom":
        spec = build_custom_spec(config.custom)
        q_n = int(config.custom.get("q_n", max(spec.offsets) - min(spec.offsets) or 1))
        return spec, q_n, None
    entry = get_example(config.example)
    n = config.budget.get("n", 10 ** 4)
    n = max(n) if isinstance(n, tuple) else n
    return entry.spec, entry.run_length(n), entry


def load_config(path, seed=None, out=None, budget_overrides=()):
    """Read an INI file and apply command-line overrides ("key=value" strings)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if "experiment" not in parser:
        raise ConfigError("config needs an [experiment] section")
    exp = parser["experiment"]
    budget = dict(parser["budget"]) if "budget" in parser else {}
    for item in budget_overrides:
        if "=" not in item:
            raise ConfigError(f"budget override must look like key=value, got {item!r}")
        k, v = item.split("=", 1)
        budget[k.strip()] = v.strip()
    custom = dict(parser["custom"]) if "custom" in parser else {}
    return ExperimentConfig(
        kind=exp.get("kind", "").strip(),
        example=exp.get("example", "").strip(),
        seed=int(seed if seed is not None else exp.get("seed", "0")),
        out=str(out if out is not None else exp.get("out", str(Path("results") / Path(path).stem))),
        budget=budget, custom=custom)


__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "EXAMPLES", "DEFAULT_BUDGETS",
           "load_config", "build_custom_spec", "parse_seed", "resolve_example", "SpecError"]
