"""Scenario configuration: named presets, plain-text config files, and
flag overrides, resolved into one validated description of a sweep or an
estimation run.

Config files are UTF-8 text, one ``key = value`` per line, ``#`` starts a
comment.  Precedence, lowest to highest: built-in defaults, preset values,
file values (in file order; later lines win), explicit overrides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .core import GaussianPointer
from .errors import ParseError, ValidationError
from .fisher import optimal_modulation

import numpy as np

DEFAULT_PHI = (0.05, 0.2, 0.5, 1.0)
DEFAULT_G_STEPS = 400
DEFAULT_SEED = 20260824
DEFAULT_N_TOTAL = 100_000

PRESETS = {
    # Transverse beam deflection: symmetric pointer, grid in the conjugate
    # momentum k over +-2.5/sigma.
    "beam-deflection": {
        "case": "balanced",
        "q0": 0.0,
        "sigma": 200.0,
        "unit": "um",
        "g_min": -0.0125,
        "g_max": 0.0125,
    },
    # Optical time delay: carrier-offset pointer, grid in the delay tau.
    "time-delay": {
        "case": "unbalanced",
        "q0": 2400.0,
        "sigma": 200.0,
        "unit": "THz",
        "g_min": 0.0,
        "g_max": 2.5e-4,
    },
}


@dataclass(frozen=True)
class Scenario:
    """Validated description of one sweep / estimation configuration."""

    case: str
    q0: float
    sigma: float
    unit: str
    phi: tuple
    g_min: float
    g_max: float
    g_steps: int
    g_mod: object  # float, or the string "auto"
    seed: int
    n_total: int

    def __post_init__(self):
        if self.case not in ("balanced", "unbalanced"):
            raise ValidationError(f"case must be balanced or unbalanced, got {self.case!r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValidationError("sigma must be finite and positive")
        if not math.isfinite(self.q0):
            raise ValidationError("q0 must be finite")
        if self.case == "balanced" and self.q0 != 0.0:
            raise ValidationError("balanced case requires q0 = 0")
        if self.case == "unbalanced" and self.q0 == 0.0:
            raise ValidationError("unbalanced case requires a nonzero q0")
        object.__setattr__(self, "phi", tuple(float(p) for p in self.phi))
        if not self.phi:
            raise ValidationError("phi must list at least one angle")
        if not all(math.isfinite(p) for p in self.phi):
            raise ValidationError("phi values must be finite")
        if not (math.isfinite(self.g_min) and math.isfinite(self.g_max)):
            raise ValidationError("g range must be finite")
        if not self.g_min < self.g_max:
            raise ValidationError("g range must satisfy g_min < g_max")
        if self.g_steps < 2:
            raise ValidationError("g_steps must be at least 2")
        if isinstance(self.g_mod, str):
            if self.g_mod != "auto":
                raise ValidationError(f"g_mod must be a number or 'auto', got {self.g_mod!r}")
        else:
            object.__setattr__(self, "g_mod", float(self.g_mod))
            if not math.isfinite(self.g_mod):
                raise ValidationError("g_mod must be finite")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")
        if self.n_total < 1:
            raise ValidationError("n_total must be at least 1")
        if not self.unit:
            raise ValidationError("unit label must be non-empty")

    def pointer(self):
        return GaussianPointer(q0=self.q0, sigma=self.sigma)

    def g_grid(self):
        return np.linspace(self.g_min, self.g_max, self.g_steps)


def resolve_g_mod(scenario, phi):
    """Concrete modulation for one sweep angle.

    ``auto`` places the informative operating point at the center of the g
    grid (so it depends on phi in the unbalanced case); a numeric g_mod is
    used as given.
    """
    if not isinstance(scenario.g_mod, str):
        return float(scenario.g_mod)
    center = 0.5 * (scenario.g_min + scenario.g_max)
    return optimal_modulation(center, scenario.pointer(), phi, scenario.case)


_FLOAT_KEYS = ("q0", "sigma", "g_min", "g_max")
_INT_KEYS = ("g_steps", "seed", "n_total")


def _parse_value(key, text, line_no):
    try:
        if key in _FLOAT_KEYS:
            return float(text)
        if key in _INT_KEYS:
            return int(text)
        if key == "phi":
            values = tuple(float(part) for part in text.split(",") if part.strip())
            if not values:
                raise ValueError("empty list")
            return values
        if key == "g_mod":
            return "auto" if text == "auto" else float(text)
    except ValueError as exc:
        raise ParseError(f"bad value for {key}: {text!r} ({exc})", line=line_no) from None
    return text  # case, unit: plain strings


def _read_config(path):
    """Parse a config file into an ordered list of (key, value, line_no)."""
    known = {f.name for f in fields(Scenario)} | {"preset"}
    entries = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {line!r}", line=line_no)
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in known:
                raise ParseError(f"unknown key {key!r}", line=line_no)
            entries.append((key, value, line_no))
    return entries


def parse_scenario(path=None, preset=None, overrides=None):
    """Build a Scenario from (optionally) a config file, a preset name, and
    explicit overrides, in increasing precedence.

    A ``preset = name`` line inside the file behaves like the ``preset``
    argument unless the argument is also given (the argument wins).
    """
    settings = {
        "case": "balanced",
        "q0": 0.0,
        "sigma": 1.0,
        "unit": "a.u.",
        "phi": DEFAULT_PHI,
        "g_min": -2.5,
        "g_max": 2.5,
        "g_steps": DEFAULT_G_STEPS,
        "g_mod": 0.0,
        "seed": DEFAULT_SEED,
        "n_total": DEFAULT_N_TOTAL,
    }
    entries = _read_config(path) if path is not None else []
    preset_name = preset
    if preset_name is None:
        for key, value, _ in entries:
            if key == "preset":
                preset_name = value
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ValidationError(
                f"unknown preset {preset_name!r}; available: {', '.join(sorted(PRESETS))}"
            )
        settings.update(PRESETS[preset_name])
    for key, value, line_no in entries:
        if key == "preset":
            continue
        settings[key] = _parse_value(key, value, line_no)
    if overrides:
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in settings:
                raise ValidationError(f"unknown scenario field {key!r}")
            settings[key] = value
    return Scenario(**settings)
