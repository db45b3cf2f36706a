"""JSON experiment configs and family definitions, with line/field diagnostics."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .catalog import CATALOG, get_family
from .errors import ConfigError
from .symbol import SymbolFamily, laurent_polynomial_family

__all__ = ["SUITES", "GridAxis", "NumericPolicy", "ExperimentConfig", "load_config", "parse_config",
           "parse_grid", "family_from_dict", "resolve_family"]

SUITES = ("tau", "szego", "malgrange-identities", "contour-ratio", "transition", "divisor-sweep", "cocycle")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class GridAxis:
    min: float
    max: float
    steps: int

    def values(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.min])
        return np.linspace(self.min, self.max, self.steps)


@dataclass(frozen=True)
class NumericPolicy:
    n_points: int = 256
    tol: float = 1e-8
    n_max: int = 4096
    m: int = 64
    m_max: int = 256


@dataclass(frozen=True)
class ExperimentConfig:
    family: str | dict
    suite: str
    grid: tuple[GridAxis, ...]
    policy: NumericPolicy = NumericPolicy()
    out: str | None = None
    format: str = "csv"
    threads: int = 1
    options: dict = field(default_factory=dict)

    def points(self, param_dim: int = 1) -> list[np.ndarray]:
        axes = [a.values() for a in self.grid] or [np.zeros(1)] * param_dim
        mesh = np.meshgrid(*axes, indexing="ij")
        return [np.array([m.flat[k] for m in mesh]) for k in range(mesh[0].size)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = [asdict(a) for a in self.grid]
        return d


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _fail(msg, key, text):
    raise ConfigError(msg, field=key, line=_line_of(text, key.split(".")[-1].split("[")[0]))


def parse_grid(text: str) -> tuple[GridAxis, ...]:
    """``"0.1:0.5:5"``, comma separated per parameter; a bare number is a single point."""
    axes = []
    for part in text.split(","):
        bits = part.strip().split(":")
        try:
            if len(bits) == 1:
                v = float(bits[0])
                axes.append(GridAxis(v, v, 1))
            elif len(bits) == 3:
                axes.append(GridAxis(float(bits[0]), float(bits[1]), int(bits[2])))
            else:
                raise ValueError
        except ValueError:
            raise ConfigError(f"bad grid axis {part!r}; use min:max:steps", field="grid") from None
    for a in axes:
        if a.steps < 1:
            raise ConfigError("grid axis needs at least one step", field="grid")
    return tuple(axes)


def family_from_dict(d: dict, text: str | None = None) -> SymbolFamily:
    """Laurent-polynomial family: ``{"dim", "annulus", "param_dim", "entries"}``.

    ``entries[r][c]`` is a list of ``[zpow, [t exponents], re, im]`` terms.
    """
    for key in ("dim", "annulus", "entries"):
        if key not in d:
            _fail(f"family definition lacks {key!r}", f"family.{key}", text)
    dim = d["dim"]
    if not isinstance(dim, int) or dim < 1:
        _fail("dim must be a positive integer", "family.dim", text)
    ann = d["annulus"]
    if not (isinstance(ann, list) and len(ann) == 2 and 0 < ann[0] < 1 < ann[1]):
        _fail("annulus must be [lo, hi] with 0 < lo < 1 < hi", "family.annulus", text)
    p = d.get("param_dim", 1)
    ent = d["entries"]
    if not (isinstance(ent, list) and len(ent) == dim and all(isinstance(r, list) and len(r) == dim for r in ent)):
        _fail(f"entries must be a {dim}x{dim} nested list", "family.entries", text)
    table = []
    for r in range(dim):
        row = []
        for c in range(dim):
            terms = []
            for term in ent[r][c]:
                if not (isinstance(term, list) and len(term) == 4 and len(term[1]) == p):
                    _fail(f"entries[{r}][{c}] term {term!r} must be [zpow, [{p} t exponents], re, im]",
                          "family.entries", text)
                terms.append((term[0], term[1], complex(term[2], term[3])))
            row.append(terms)
        table.append(row)
    return laurent_polynomial_family(dim, ann, table, param_dim=p, name=d.get("name", "custom"),
                                     description=d.get("description", "user-defined Laurent family"))


def resolve_family(source: str | dict, base: Path | None = None) -> SymbolFamily:
    if isinstance(source, dict):
        return family_from_dict(source)
    if source in CATALOG:
        return get_family(source)
    path = Path(source) if base is None else base / source
    if path.suffix == ".json" and path.exists():
        text = path.read_text()
        try:
            return family_from_dict(json.loads(text), text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, field="family", line=exc.lineno) from None
    raise ConfigError(f"unknown family {source!r}; known: {', '.join(CATALOG)}", field="family")


def parse_config(data: dict, text: str | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object", line=1)
    known = {"family", "suite", "grid", "policy", "out", "format", "threads", "options"}
    for key in data:
        if key not in known:
            _fail(f"unknown field {key!r}", key, text)
    if "family" not in data:
        raise ConfigError("config lacks 'family'", field="family")
    fam = data["family"]
    if isinstance(fam, str) and fam not in CATALOG and not fam.endswith(".json"):
        _fail(f"unknown catalog family {fam!r}", "family", text)
    if isinstance(fam, dict):
        family_from_dict(fam, text)
    suite = data.get("suite", "tau")
    if suite not in SUITES:
        _fail(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}", "suite", text)
    grid_raw = data.get("grid")
    if grid_raw is None:
        grid = ()  # one point at t = 0, sized by the family
    elif isinstance(grid_raw, str):
        grid = parse_grid(grid_raw)
    else:
        if not isinstance(grid_raw, list) or not grid_raw:
            _fail("grid must be a nonempty list of {min, max, steps}", "grid", text)
        axes = []
        for k, ax in enumerate(grid_raw):
            try:
                axes.append(GridAxis(float(ax["min"]), float(ax.get("max", ax["min"])), int(ax.get("steps", 1))))
            except (KeyError, TypeError, ValueError):
                _fail(f"grid[{k}] needs numeric min/max/steps", "grid", text)
            if axes[-1].steps < 1 or axes[-1].max < axes[-1].min:
                _fail(f"grid[{k}] needs steps >= 1 and max >= min", "grid", text)
        grid = tuple(axes)
    pol = data.get("policy", {})
    base = NumericPolicy()
    vals = {}
    for key, default in asdict(base).items():
        v = pol.get(key, default)
        if not isinstance(v, (int, float)) or v <= 0:
            _fail(f"policy.{key} must be positive", f"policy.{key}", text)
        vals[key] = type(default)(v)
    for key in pol:
        if key not in vals:
            _fail(f"unknown policy field {key!r}", f"policy.{key}", text)
    n = vals["n_points"]
    if n & (n - 1):
        _fail("policy.n_points must be a power of two", "policy.n_points", text)
    fmt = data.get("format", "csv")
    if fmt not in FORMATS:
        _fail(f"format must be one of {FORMATS}", "format", text)
    threads = data.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        _fail("threads must be a positive integer", "threads", text)
    options = data.get("options", {})
    if not isinstance(options, dict):
        _fail("options must be an object", "options", text)
    return ExperimentConfig(fam, suite, grid, NumericPolicy(**vals), data.get("out"), fmt, threads, options)


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno) from None
    return parse_config(data, text)
