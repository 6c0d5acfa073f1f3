"""Run configuration: a line-based ``key = value`` format with ``#`` comments
and dotted section prefixes.

    domain.rects  = 0,1,0,1; 1.5,2.1,0,0.6
    domain.h      = 0.0078125
    a             = 0.2
    solver.steps  = 40
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .domain import build_box_domain


class ConfigError(ValueError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class DomainConfig:
    rects: tuple = ()
    h: float = 0.0
    anchor: str = "node"


@dataclass(frozen=True)
class SolverConfig:
    c_pen: Optional[float] = None
    steps: int = 40
    bracket: Optional[tuple] = None
    bracket_factors: tuple = (0.85, 1.15)
    sweep_limit: int = 100
    tol: float = 1e-10
    exact_volume: bool = False


@dataclass(frozen=True)
class DiagnosticsConfig:
    enabled: bool = True
    bracket_windows: tuple = (0.005, 0.01, 0.02)
    el_fields: int = 12
    boundary_samples: int = 32
    dichotomy_radii: tuple = (4.0, 8.0)
    dim2_radii: tuple = (16.0, 8.0, 4.0)
    density_radii: tuple = (4.0, 8.0, 16.0)
    coercivity_trials: int = 100


@dataclass(frozen=True)
class RunConfig:
    domain: DomainConfig
    a: float
    solver: SolverConfig = field(default_factory=SolverConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    seed: int = 0
    output_dir: str = "out"

    def echo(self) -> list[str]:
        """Every effective setting as ``key = value`` lines, in schema order."""
        out = []
        for key, (section, name, _) in SCHEMA.items():
            obj = self if section is None else getattr(self, section)
            out.append(f"{key} = {format_value(getattr(obj, name))}")
        return out


# key -> (section attribute or None, field name, kind)
SCHEMA = {
    "domain.rects": ("domain", "rects", "rects"),
    "domain.h": ("domain", "h", "float"),
    "domain.anchor": ("domain", "anchor", "anchor"),
    "a": (None, "a", "float"),
    "solver.c_pen": ("solver", "c_pen", "float?"),
    "solver.steps": ("solver", "steps", "int"),
    "solver.bracket": ("solver", "bracket", "floats?"),
    "solver.bracket_factors": ("solver", "bracket_factors", "floats"),
    "solver.sweep_limit": ("solver", "sweep_limit", "int"),
    "solver.tol": ("solver", "tol", "float"),
    "solver.exact_volume": ("solver", "exact_volume", "bool"),
    "diagnostics.enabled": ("diagnostics", "enabled", "bool"),
    "diagnostics.bracket_windows": ("diagnostics", "bracket_windows", "floats"),
    "diagnostics.el_fields": ("diagnostics", "el_fields", "int"),
    "diagnostics.boundary_samples": ("diagnostics", "boundary_samples", "int"),
    "diagnostics.dichotomy_radii": ("diagnostics", "dichotomy_radii", "floats"),
    "diagnostics.dim2_radii": ("diagnostics", "dim2_radii", "floats"),
    "diagnostics.density_radii": ("diagnostics", "density_radii", "floats"),
    "diagnostics.coercivity_trials": ("diagnostics", "coercivity_trials", "int"),
    "seed": (None, "seed", "seed"),
    "output.dir": (None, "output_dir", "str"),
}
REQUIRED = ("domain.rects", "domain.h", "a")


def format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple) and v and isinstance(v[0], tuple):
        return "; ".join(",".join(repr(float(c)) for c in r) for r in v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(c)) for c in v)
    return str(v)


def _convert(kind: str, raw: str, key: str, line: int):
    def bad(expected):
        return ConfigError(f"type mismatch for {key!r}: expected {expected}, got {raw!r}", line)

    optional = kind.endswith("?")
    if optional and raw.lower() == "none":
        return None
    kind = kind.rstrip("?")
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            if not raw.lstrip("+-").isdigit():
                raise ValueError
            return int(raw)
        if kind == "seed":
            v = int(raw, 0)
            if not 0 <= v < 2**64:
                raise ConfigError(f"seed must be a 64-bit unsigned value, got {raw!r}", line)
            return v
        if kind == "floats":
            return tuple(float(p) for p in raw.split(","))
        if kind == "rects":
            rects = []
            for part in raw.split(";"):
                nums = tuple(float(p) for p in part.split(","))
                if len(nums) != 4:
                    raise ValueError
                rects.append(nums)
            return tuple(rects)
    except ConfigError:
        raise
    except ValueError:
        expected = {
            "float": "a number",
            "int": "an integer",
            "seed": "an integer",
            "floats": "a comma-separated list of numbers",
            "rects": "rectangles 'x0,x1,y0,y1; ...'",
        }[kind]
        raise bad(expected) from None
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise bad("true or false")
    if kind == "anchor":
        if raw not in ("node", "cell"):
            raise bad("'node' or 'cell'")
        return raw
    return raw


def parse_config(text: str) -> RunConfig:
    values: dict[str, tuple] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw_line.strip()!r}", lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {values[key][1]})", lineno)
        values[key] = (_convert(SCHEMA[key][2], raw, key, lineno), lineno)
    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")

    sections = {"domain": {}, "solver": {}, "diagnostics": {}}
    top = {}
    for key, (val, _) in values.items():
        section, name, _ = SCHEMA[key]
        (top if section is None else sections[section])[name] = val
    cfg = RunConfig(
        domain=DomainConfig(**sections["domain"]),
        solver=SolverConfig(**sections["solver"]),
        diagnostics=DiagnosticsConfig(**sections["diagnostics"]),
        **top,
    )
    _validate(cfg, values)
    return cfg


def _validate(cfg: RunConfig, values: dict):
    def line_of(key):
        return values.get(key, (None, 0))[1]

    if not cfg.domain.h > 0:
        raise ConfigError("domain.h must be positive", line_of("domain.h"))
    try:
        dom = build_box_domain(cfg.domain.rects, cfg.domain.h, cfg.domain.anchor)
    except ValueError as exc:
        raise ConfigError(str(exc), line_of("domain.rects")) from None
    if not 0.0 < cfg.a < dom.volume:
        raise ConfigError(
            f"a out of range (0, |D|): a={cfg.a!r}, |D|={dom.volume!r}", line_of("a")
        )
    positive = {
        "solver.tol": cfg.solver.tol,
        "solver.steps": cfg.solver.steps,
        "solver.sweep_limit": cfg.solver.sweep_limit,
    }
    if cfg.solver.c_pen is not None:
        positive["solver.c_pen"] = cfg.solver.c_pen
    positive["diagnostics.bracket_windows"] = min(cfg.diagnostics.bracket_windows)
    positive["diagnostics.dim2_radii"] = min(cfg.diagnostics.dim2_radii)
    positive["diagnostics.density_radii"] = min(cfg.diagnostics.density_radii)
    positive["diagnostics.dichotomy_radii"] = min(cfg.diagnostics.dichotomy_radii)
    for key, v in positive.items():
        if not v > 0:
            raise ConfigError(f"{key} must be positive", line_of(key))
    b = cfg.solver.bracket
    if b is not None and (len(b) != 2 or not 0 < b[0] < b[1]):
        raise ConfigError("solver.bracket must be 'lo, hi' with 0 < lo < hi", line_of("solver.bracket"))
    f = cfg.solver.bracket_factors
    if len(f) != 2 or not 0 < f[0] < f[1]:
        raise ConfigError(
            "solver.bracket_factors must be 'lo, hi' with 0 < lo < hi",
            line_of("solver.bracket_factors"),
        )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
