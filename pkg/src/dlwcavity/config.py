"""Scenario files: ``[section]`` headers followed by ``key = value`` lines.

Parsing is strict. Duplicate sections or keys, unknown sections, unknown
keys and missing required keys are all errors that point at the offending
line.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from .cavity import CavityParams, derive_cavity
from .errors import CavityError, ConfigError

KINDS = ("box", "double_well", "ssh", "paraboloid", "custom_heightmap")

_FLOAT = float
_INT = int


def _floats(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


# key -> (converter, default); a default of ... marks a required key
SCHEMA = {
    "scenario": {"kind": (str, ...), "seed": (_INT, 42), "output": (str, None)},
    "cavity": {
        "q": (_INT, 10),
        "lambda_cut": (_FLOAT, 580.0),
        "n_medium": (_FLOAT, 1.44),
        "delta_n": (_FLOAT, 0.11),
        "temperature": (_FLOAT, 300.0),
    },
    "fabrication": {"voxel_radius": (_FLOAT, 0.0), "dipin_step": (_FLOAT, 0.0)},
    "solver": {"k": (_INT, None), "tol": (_FLOAT, 1e-8), "dx": (_FLOAT, 0.05), "margin": (_FLOAT, 2.0), "method": (str, "lanczos")},
    "thermo": {"weights": (str, "bose"), "total_n": (_FLOAT, 469.0)},
    "spectra": {"dispersion": (_FLOAT, 1.0), "na": (_FLOAT, 0.5), "defocus": (_FLOAT, 0.0)},
}

GEOMETRY = {
    "box": {"side": (_FLOAT, 10.0), "h_s": (_FLOAT, 475.0)},
    "double_well": {"d": (_floats, (0.8,)), "r": (_FLOAT, 0.6), "h_s": (_FLOAT, 600.0)},
    "ssh": {"n_cells": (_INT, 10), "d_i": (_FLOAT, 1.25), "d_o": (_FLOAT, 1.9), "r": (_FLOAT, 0.6), "h_s": (_FLOAT, 600.0)},
    "paraboloid": {"curvature": (_FLOAT, 20.0), "h_max": (_FLOAT, 690.0)},
    "custom_heightmap": {"path": (str, ...)},
}

# mode counts large enough to hold every bound mode of the default geometries
DEFAULT_K = {"box": 100, "double_well": 4, "ssh": 24, "paraboloid": 60, "custom_heightmap": 40}


@dataclass(frozen=True)
class Scenario:
    kind: str
    cavity: CavityParams
    geometry: dict
    fabrication: dict
    solver: dict
    thermo: dict
    spectra: dict
    seed: int = 42
    output: str | None = None
    source: str = field(default="", repr=False)
    path: str | None = None


def _locate(text, section, key):
    """(line, column) of ``key`` inside ``[section]``, 1-based; (None, None) if absent."""
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and "=" in line and line.split("=", 1)[0].strip() == key:
            return lineno, line.index("=") + 2
    return None, None


def _where(text, section, key):
    line, col = _locate(text, section, key)
    return f" (line {line}, column {col})" if line else ""


def _read(text, path):
    cp = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#", ";"), default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text, source=path or "<string>")
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"parse error: duplicate key {exc.option!r} in [{exc.section}] (line {exc.lineno}, column 1)") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"parse error: duplicate section [{exc.section}] (line {exc.lineno}, column 1)") from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"parse error: key outside any [section] (line {exc.lineno}, column 1)") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"parse error: cannot parse {line.strip()!r} (line {lineno}, column 1)") from None
    return cp


def _convert(cp, text, section, schema):
    out = {}
    present = cp[section] if cp.has_section(section) else {}
    for key in present:
        if key not in schema:
            raise ConfigError(f"unknown key {section}.{key}{_where(text, section, key)}")
    for key, (conv, default) in schema.items():
        if key in present:
            raw = present[key]
            try:
                out[key] = conv(raw)
            except ValueError:
                raise ConfigError(f"bad value {raw!r} for {section}.{key}{_where(text, section, key)}") from None
        elif default is ...:
            raise ConfigError(f"missing required key {section}.{key}")
        else:
            out[key] = default
    return out


def parse_config_text(text, path=None) -> Scenario:
    cp = _read(text, path)
    known = set(SCHEMA) | {"geometry"}
    for section in cp.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")
    if not cp.has_section("scenario") or "kind" not in cp["scenario"]:
        raise ConfigError("missing required key scenario.kind")

    scen = _convert(cp, text, "scenario", SCHEMA["scenario"])
    kind = scen["kind"]
    if kind not in KINDS:
        raise ConfigError(f"scenario.kind must be one of {', '.join(KINDS)}, got {kind!r}{_where(text, 'scenario', 'kind')}")
    blocks = {name: _convert(cp, text, name, SCHEMA[name]) for name in SCHEMA if name != "scenario"}
    geometry = _convert(cp, text, "geometry", GEOMETRY[kind])

    try:
        cavity = derive_cavity(**blocks["cavity"])
    except CavityError as exc:
        raise ConfigError(f"cavity: {exc}") from None

    solver = blocks["solver"]
    if solver["k"] is None:
        solver["k"] = DEFAULT_K[kind]
    _check_semantics(kind, geometry, blocks, text)

    if kind == "custom_heightmap":
        base = os.path.dirname(os.path.abspath(path)) if path else os.getcwd()
        hpath = geometry["path"] if os.path.isabs(geometry["path"]) else os.path.join(base, geometry["path"])
        if not os.path.isfile(hpath):
            raise ConfigError(f"geometry.path: file not found: {hpath}")
        geometry["path"] = hpath

    return Scenario(
        kind=kind,
        cavity=cavity,
        geometry=geometry,
        fabrication=blocks["fabrication"],
        solver=solver,
        thermo=blocks["thermo"],
        spectra=blocks["spectra"],
        seed=scen["seed"],
        output=scen["output"],
        source=text,
        path=path,
    )


def _check_semantics(kind, geometry, blocks, text):
    def need(cond, section, key, msg):
        if not cond:
            raise ConfigError(f"{section}.{key}: {msg}{_where(text, section, key)}")

    s, t, sp, fab = blocks["solver"], blocks["thermo"], blocks["spectra"], blocks["fabrication"]
    need(s["k"] >= 1, "solver", "k", "must be >= 1")
    need(1e-10 <= s["tol"] <= 1e-4, "solver", "tol", "must lie in [1e-10, 1e-4]")
    need(s["dx"] > 0, "solver", "dx", "must be positive")
    need(s["margin"] >= 0, "solver", "margin", "must be non-negative")
    need(s["method"] in ("lanczos", "dense"), "solver", "method", "must be lanczos or dense")
    need(t["weights"] in ("bose", "boltzmann"), "thermo", "weights", "must be bose or boltzmann")
    need(t["total_n"] > 0, "thermo", "total_n", "must be positive")
    need(sp["dispersion"] > 0, "spectra", "dispersion", "must be positive")
    need(0 < sp["na"] <= 1, "spectra", "na", "must lie in (0, 1]")
    need(sp["defocus"] >= 0, "spectra", "defocus", "must be non-negative")
    need(fab["voxel_radius"] >= 0, "fabrication", "voxel_radius", "must be non-negative")
    need(fab["dipin_step"] >= 0, "fabrication", "dipin_step", "must be non-negative (0 disables)")
    for key, value in geometry.items():
        if key == "path":
            continue
        vals = value if isinstance(value, tuple) else (value,)
        need(len(vals) > 0 and all(v > 0 for v in vals), "geometry", key, "must be positive")
    if kind == "double_well":
        d = geometry["d"]
        need(all(b > a for a, b in zip(d, d[1:])), "geometry", "d", "distances must be ascending")
        need(min(d) >= 0.1, "geometry", "d", "distances must be at least 0.1 µm")
    if kind == "ssh":
        need(geometry["n_cells"] >= 2, "geometry", "n_cells", "must be >= 2")


def parse_config(path) -> Scenario:
    with open(path) as f:
        text = f.read()
    return parse_config_text(text, path)


def override(scenario: Scenario, dotted_key, value) -> Scenario:
    """Re-parse with ``section.key = value`` replaced, keeping strict validation."""
    section, _, key = dotted_key.partition(".")
    if not key:
        raise ConfigError(f"parameter must look like section.key, got {dotted_key!r}")
    cp = _read(scenario.source, scenario.path)
    if not cp.has_section(section):
        cp.add_section(section)
    cp[section][key] = str(value)
    lines = []
    for sec in cp.sections():
        lines.append(f"[{sec}]")
        lines.extend(f"{k} = {v}" for k, v in cp[sec].items())
    return parse_config_text("\n".join(lines) + "\n", scenario.path)
