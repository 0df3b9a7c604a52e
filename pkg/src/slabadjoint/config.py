"""Flat dotted key = value run configuration.

Example::

    params.sigma_a = 0.0197
    detectors = 10, 40, 49.5, -10, -40, -49.5
    grid.n_nodes = 4001
    case.3.sigma_a_rel = 0.15
    tolerance.quad_vs_closed = 1e-2

Lines starting with ``#`` are comments. Unknown keys are errors.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

from .bvp import DEFAULT_NODES
from .checks import DEFAULT_TOLERANCES
from .errors import ConfigError
from .model import ModelParameters
from .uncertainty import PAPER_CASES, UncertaintyCase

FORMATS = ("tsv", "json", "both")
_PARAM_KEYS = ("sigma_a", "diff_coeff", "source_q", "sigma_d", "half_thickness_a")
_CASE_KEYS = ("sigma_a_rel", "diff_coeff_rel", "source_q_rel", "sigma_d_rel")

DEFAULT_CONFIG_TEXT = """\
# Water-pool slab with an indium-like detector
params.sigma_a = 0.0197
params.diff_coeff = 0.16
params.source_q = 1e7
params.sigma_d = 7.438
params.half_thickness_a = 50
detectors = 10, 40, 49.5, -10, -40, -49.5
grid.n_nodes = 4001

case.1.sigma_a_rel = 0
case.1.diff_coeff_rel = 0
case.1.source_q_rel = 0.15
case.1.sigma_d_rel = 0
case.2.sigma_a_rel = 0
case.2.diff_coeff_rel = 0
case.2.source_q_rel = 0
case.2.sigma_d_rel = 0.15
case.3.sigma_a_rel = 0.15
case.3.diff_coeff_rel = 0
case.3.source_q_rel = 0
case.3.sigma_d_rel = 0
case.4.sigma_a_rel = 0
case.4.diff_coeff_rel = 0.15
case.4.source_q_rel = 0
case.4.sigma_d_rel = 0
case.5.sigma_a_rel = 0.10
case.5.diff_coeff_rel = 0.10
case.5.source_q_rel = 0.10
case.5.sigma_d_rel = 0.10

mc.samples = 1000000
mc.seed = 0
verify.duality_samples = 100
output.dir = results
output.format = both
"""


@dataclass
class RunConfig:
    params: dict = field(default_factory=lambda: {
        "sigma_a": 0.0197, "diff_coeff": 0.16, "source_q": 1e7, "sigma_d": 7.438, "half_thickness_a": 50.0})
    detectors: list = field(default_factory=lambda: [10.0, 40.0, 49.5, -10.0, -40.0, -49.5])
    cases: list = field(default_factory=lambda: list(PAPER_CASES))
    n_nodes: int = DEFAULT_NODES
    grid_levels: list | None = None
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out_dir: str = "results"
    out_format: str = "both"
    mc_samples: int = 1_000_000
    seed: int = 0
    duality_samples: int = 100

    def parameters_at(self, b: float) -> ModelParameters:
        return ModelParameters(detector_b=b, **self.params)

    def validate(self) -> "RunConfig":
        if not self.detectors:
            raise ConfigError("at least one detector position is required")
        try:
            for b in self.detectors:
                self.parameters_at(b)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.n_nodes < 3 or self.n_nodes % 2 == 0:
            raise ConfigError(f"grid.n_nodes must be odd and >= 3, got {self.n_nodes}")
        if self.grid_levels is not None:
            if len(self.grid_levels) < 2 or any(n < 3 or n % 2 == 0 for n in self.grid_levels):
                raise ConfigError("verify.grid_levels needs at least two odd sizes >= 3")
        if self.out_format not in FORMATS:
            raise ConfigError(f"output.format must be one of {FORMATS}")
        if self.mc_samples < 0 or self.duality_samples < 0:
            raise ConfigError("sample counts must be non-negative")
        if not self.cases:
            raise ConfigError("at least one uncertainty case is required")
        return self


def _float(key: str, text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: value must be finite")
    return v


def _int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _floats(key: str, text: str) -> list:
    return [_float(key, t.strip()) for t in text.split(",") if t.strip()]


def parse_pairs(text: str) -> list:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        pairs.append((key, value))
    return pairs


def apply_pairs(cfg: RunConfig, pairs) -> RunConfig:
    """Apply key/value pairs in order; later keys win."""
    case_values: dict = {}
    for key, value in pairs:
        parts = key.split(".")
        if parts[0] == "params" and len(parts) == 2 and parts[1] in _PARAM_KEYS:
            cfg.params[parts[1]] = _float(key, value)
        elif key == "detectors":
            cfg.detectors = _floats(key, value)
        elif key == "grid.n_nodes":
            cfg.n_nodes = _int(key, value)
        elif key == "verify.grid_levels":
            cfg.grid_levels = [_int(key, t.strip()) for t in value.split(",") if t.strip()]
        elif key == "verify.duality_samples":
            cfg.duality_samples = _int(key, value)
        elif parts[0] == "case" and len(parts) == 3 and parts[2] in _CASE_KEYS:
            case_values.setdefault(parts[1], {})[parts[2]] = _float(key, value)
        elif parts[0] == "tolerance" and len(parts) == 2 and parts[1] in DEFAULT_TOLERANCES:
            cfg.tolerances[parts[1]] = _float(key, value)
        elif key == "output.dir":
            cfg.out_dir = value
        elif key == "output.format":
            cfg.out_format = value.lower()
        elif key == "mc.samples":
            cfg.mc_samples = _int(key, value)
        elif key == "mc.seed":
            cfg.seed = _int(key, value)
        else:
            raise ConfigError(f"unknown key {key!r}")
    if case_values:
        # merge into existing cases so single-key overrides keep the rest
        merged = {c.name: dict(zip(_CASE_KEYS, c.rel_sd)) for c in cfg.cases}
        for name, vals in case_values.items():
            merged.setdefault(name, {}).update(vals)
        cases = []
        for name in sorted(merged, key=lambda s: (not s.isdigit(), int(s) if s.isdigit() else 0, s)):
            vals = merged[name]
            try:
                cases.append(UncertaintyCase(name, tuple(vals.get(k, 0.0) for k in _CASE_KEYS)))
            except ValueError as exc:
                raise ConfigError(f"case {name}: {exc}") from exc
        cfg.cases = cases
    return cfg


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse config text. Without ``base``, a file lacking case keys gets the five standard cases."""
    if base is not None:
        return apply_pairs(copy.deepcopy(base), parse_pairs(text)).validate()
    cfg = apply_pairs(RunConfig(cases=[]), parse_pairs(text))
    if not cfg.cases:
        cfg.cases = list(PAPER_CASES)
    return cfg.validate()


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return parse_config(DEFAULT_CONFIG_TEXT)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def default_config() -> RunConfig:
    return parse_config(DEFAULT_CONFIG_TEXT)
