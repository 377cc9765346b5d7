"""JSON run configurations: schema validation, measure decoding and content hashes.

A configuration looks like::

    {"version": 1, "q": 2, "m": [3, 2],
     "omega": {"type": "sft", "matrix": [[0, 1, ...], ...]},
     "measure": {"type": "optimal"},
     "options": {"tol": 1e-12, "terms": 40}}

Probabilities may be JSON numbers or strings such as ``"1/3"``; strings are
read as exact fractions.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .system import Carpet, ExplicitTree, Full, Sft, StaircasePrefix, SystemSpec

SCHEMA_VERSION = 1

TOP_KEYS = {"version", "name", "description", "q", "m", "omega", "measure", "options"}
OPTION_KEYS = {"tol", "terms", "depth", "seed", "samples", "n", "order", "resolution",
               "n_min", "n_max", "budget"}
OMEGA_KEYS = {
    "full": {"type"},
    "carpet": {"type", "allowed"},
    "sft": {"type", "matrix", "initial"},
    "explicit": {"type", "words", "depth", "rule"},
}
MEASURE_KEYS = {
    "uniform": {"type"},
    "optimal": {"type"},
    "bernoulli": {"type", "weights"},
    "markov": {"type", "initial", "transition"},
    "cylinder": {"type", "shape", "masses"},
    "point": {"type", "word"},
}


@dataclass
class RunConfig:
    spec: SystemSpec
    raw: dict
    name: str = ""
    measure: Optional[dict] = None
    options: dict = field(default_factory=dict)

    @property
    def content_hash(self) -> str:
        return content_hash(self.raw)

    @property
    def system_hash(self) -> str:
        """Hash of the system part only; keys the fixed-point cache."""
        return content_hash({k: self.raw[k] for k in ("version", "q", "m", "omega")})

    def option(self, key, default=None):
        return self.options.get(key, default)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def content_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("ascii")).hexdigest()


def _unknown(keys, allowed, where):
    extra = set(keys) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) {sorted(extra)} in {where}")


def _int(v, where):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where} must be an integer, got {v!r}")
    return v


def _tuple(v, where):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where} must be a non-empty list of digits, got {v!r}")
    return tuple(_int(x, where) for x in v)


def prob(v, where="probability"):
    """Decode a probability: numbers stay floats, strings become fractions."""
    if isinstance(v, bool):
        raise ConfigError(f"{where} must be a number, got {v!r}")
    if isinstance(v, (int, float)):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: cannot read {v!r} as a fraction") from exc
    raise ConfigError(f"{where} must be a number or a fraction string, got {v!r}")


def parse_omega(data: dict):
    if not isinstance(data, dict) or "type" not in data:
        raise ConfigError("omega must be an object with a 'type'")
    kind = data["type"]
    if kind not in OMEGA_KEYS:
        raise ConfigError(f"unknown omega type {kind!r}")
    _unknown(data, OMEGA_KEYS[kind], f"omega ({kind})")
    if kind == "full":
        return Full()
    if kind == "carpet":
        allowed = data.get("allowed")
        if not isinstance(allowed, list):
            raise ConfigError("carpet needs a list 'allowed'")
        return Carpet(frozenset(_tuple(a, "carpet tuple") for a in allowed))
    if kind == "sft":
        matrix = data.get("matrix")
        if not isinstance(matrix, list) or not all(isinstance(r, list) for r in matrix):
            raise ConfigError("sft needs a list-of-lists 'matrix'")
        initial = data.get("initial")
        init = None if initial is None else frozenset(_tuple(a, "initial tuple") for a in initial)
        return Sft(tuple(tuple(_int(v, "matrix entry") for v in r) for r in matrix), init)
    words = data.get("words")
    if not isinstance(words, list):
        raise ConfigError("explicit tree needs a list 'words'")
    depth = _int(data.get("depth"), "explicit depth")
    rule = data.get("rule", "truncate")
    return ExplicitTree(frozenset(tuple(_tuple(a, "word letter") for a in w) for w in words), depth, rule)


def validate_measure(data: dict, d: int) -> dict:
    if not isinstance(data, dict) or "type" not in data:
        raise ConfigError("measure must be an object with a 'type'")
    kind = data["type"]
    if kind not in MEASURE_KEYS:
        raise ConfigError(f"unknown measure type {kind!r}")
    _unknown(data, MEASURE_KEYS[kind], f"measure ({kind})")
    return data


def load_config(source) -> RunConfig:
    """Read a configuration from a path, a JSON string or an already parsed dict."""
    if isinstance(source, dict):
        raw = source
    else:
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    _unknown(raw, TOP_KEYS, "configuration")
    if "version" not in raw:
        raise ConfigError("configuration needs a 'version' field")
    if raw["version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported configuration version {raw['version']!r}")
    for key in ("q", "m", "omega"):
        if key not in raw:
            raise ConfigError(f"configuration needs '{key}'")
    q = _int(raw["q"], "q")
    if not isinstance(raw["m"], list):
        raise ConfigError("m must be a list of integers")
    m = tuple(_int(b, "m entry") for b in raw["m"])
    spec = SystemSpec(q, m, parse_omega(raw["omega"]))
    measure = raw.get("measure")
    if measure is not None:
        validate_measure(measure, spec.d)
    options = raw.get("options", {})
    if not isinstance(options, dict):
        raise ConfigError("options must be an object")
    _unknown(options, OPTION_KEYS, "options")
    return RunConfig(spec, raw, raw.get("name", ""), measure, dict(options))


def build_measure(spec: SystemSpec, data: Optional[dict], schedule=None, tvec=None):
    """Instantiate a measure description (default: the optimal measure)."""
    from . import measures as M

    data = data or {"type": "optimal"}
    kind = validate_measure(data, spec.d)["type"]
    if kind == "optimal":
        return M.optimal_measure(spec, schedule, tvec)
    if kind == "uniform":
        return M.uniform_bernoulli(spec)
    if kind == "bernoulli":
        weights = {_tuple(a, "weight tuple"): prob(p) for a, p in _pairs(data.get("weights"), 2)}
        return M.Bernoulli(spec, weights)
    if kind == "markov":
        initial = {_tuple(a, "initial tuple"): prob(p) for a, p in _pairs(data.get("initial"), 2)}
        trans = {}
        for a, b, p in _pairs(data.get("transition"), 3):
            trans.setdefault(_tuple(a, "transition tuple"), {})[_tuple(b, "transition tuple")] = prob(p)
        return M.Markov(spec, initial, trans)
    if kind == "cylinder":
        shape = tuple(_int(x, "cylinder shape") for x in data.get("shape", []))
        masses = {}
        for words, p in _pairs(data.get("masses"), 2):
            masses[_word(words, spec.d)] = prob(p)
        return M.Cylinder(spec, shape, masses)
    return M.PointMass(spec, _word(data.get("word"), spec.d))


def _pairs(items, n):
    if not isinstance(items, list) or any(not isinstance(x, list) or len(x) != n for x in items):
        raise ConfigError(f"expected a list of {n}-element lists, got {items!r}")
    return items


def _word(words, d) -> StaircasePrefix:
    if not isinstance(words, list) or len(words) != d:
        raise ConfigError(f"a word is a list of {d} digit lists, got {words!r}")
    return StaircasePrefix(tuple(tuple(_int(x, "digit") for x in w) for w in words))


def word_to_json(u: StaircasePrefix) -> list:
    return [list(w) for w in u.words]


def measure_to_json(spec: SystemSpec, mu, shape) -> dict:
    """Cylinder description of ``mu`` on the prefixes of ``shape``."""
    masses = mu.masses(shape)
    rows = []
    for u in sorted(masses, key=lambda v: v.words):
        p = masses[u]
        rows.append([word_to_json(u), str(p) if isinstance(p, Fraction) else float(p)])
    return {"type": "cylinder", "shape": list(shape), "masses": rows}


FIXTURE_DIR = Path(__file__).parent / "fixtures"


def fixture_names() -> list:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.json"))


def load_fixture(name: str) -> RunConfig:
    """One of the configurations shipped with the package."""
    path = FIXTURE_DIR / f"{name}.json"
    if not path.exists():
        raise ConfigError(f"no fixture named {name!r}; available: {fixture_names()}")
    return load_config(path)
